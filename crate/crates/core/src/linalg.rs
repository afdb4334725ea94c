//! Small dense linear algebra: row reduction, rank and affine solution sets.
//!
//! Matrices in this crate are at most a few dozen rows wide, so everything is
//! done with Gauss-Jordan elimination with partial pivoting on a row-major
//! buffer.

use std::fmt;

/// Relative pivot tolerance used when the caller does not supply one.
pub const DEFAULT_RELATIVE_TOL: f64 = 1e-9;

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from row slices. Panics if the rows are ragged.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    /// `self * x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `selfᵀ * y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (i, yi) in y.iter().enumerate() {
            if *yi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a * yi;
            }
        }
        out
    }

    /// `xᵀ * self * y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(self.mul_vec(y)).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Reduced row echelon form together with the pivot column of each non-zero row.
#[derive(Debug, Clone)]
pub struct Rref {
    pub reduced: Matrix,
    pub pivots: Vec<usize>,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

/// Gauss-Jordan elimination. Only the first `elim_cols` columns are used as
/// pivot candidates, which lets callers reduce an augmented `[A | b]`.
pub fn rref_limited(m: &Matrix, elim_cols: usize, abs_tol: f64) -> Rref {
    let mut a = m.clone();
    let (rows, cols) = (a.rows, a.cols);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..elim_cols.min(cols) {
        if r == rows {
            break;
        }
        let (best, best_abs) = (r..rows)
            .map(|i| (i, a.get(i, c).abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best_abs <= abs_tol {
            for i in r..rows {
                a.set(i, c, 0.0);
            }
            continue;
        }
        if best != r {
            for j in 0..cols {
                a.data.swap(best * cols + j, r * cols + j);
            }
        }
        let p = a.get(r, c);
        for j in 0..cols {
            let v = a.get(r, j) / p;
            a.set(r, j, v);
        }
        for i in 0..rows {
            if i == r {
                continue;
            }
            let factor = a.get(i, c);
            if factor == 0.0 {
                continue;
            }
            for j in 0..cols {
                let v = a.get(i, j) - factor * a.get(r, j);
                a.set(i, j, v);
            }
            a.set(i, c, 0.0);
        }
        pivots.push(c);
        r += 1;
    }
    Rref { reduced: a, pivots }
}

pub fn rref(m: &Matrix, abs_tol: f64) -> Rref {
    rref_limited(m, m.cols, abs_tol)
}

/// Numerical rank with an absolute pivot tolerance.
pub fn rank_with_tol(m: &Matrix, abs_tol: f64) -> usize {
    rref(m, abs_tol).rank()
}

/// Absolute tolerance `rel * max|entry|`, never below `f64::MIN_POSITIVE`.
pub fn relative_tol(m: &Matrix, rel: f64) -> f64 {
    (rel * m.max_abs()).max(f64::MIN_POSITIVE)
}

/// The solution set `{ offset + directions · t }` of a consistent system.
///
/// Pivot variables are affine in the free variables; free variable `free[k]`
/// equals `t[k]`.
#[derive(Debug, Clone)]
pub struct AffineSet {
    pub offset: Vec<f64>,
    pub free: Vec<usize>,
    /// `n × free.len()`: column `k` is the direction attached to `t[k]`.
    pub directions: Matrix,
}

impl AffineSet {
    pub fn dimension(&self) -> usize {
        self.free.len()
    }

    pub fn is_unique(&self) -> bool {
        self.free.is_empty()
    }

    pub fn point(&self, t: &[f64]) -> Vec<f64> {
        assert_eq!(t.len(), self.free.len());
        let mut x = self.offset.clone();
        for (i, xi) in x.iter_mut().enumerate() {
            for (k, tk) in t.iter().enumerate() {
                *xi += self.directions.get(i, k) * tk;
            }
        }
        x
    }
}

/// Solves `a x = b`. Returns `None` when the system is inconsistent.
pub fn solve_affine(a: &Matrix, b: &[f64], rel_tol: f64) -> Option<AffineSet> {
    assert_eq!(a.rows, b.len());
    let n = a.cols;
    let aug = Matrix::from_fn(a.rows, n + 1, |i, j| if j < n { a.get(i, j) } else { b[i] });
    let tol = relative_tol(&aug, rel_tol);
    let Rref { reduced, pivots } = rref_limited(&aug, n, tol);

    let rank = pivots.len();
    for i in rank..reduced.rows {
        if reduced.get(i, n).abs() > tol * (n as f64 + 1.0) {
            return None;
        }
    }

    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let mut offset = vec![0.0; n];
    let mut directions = Matrix::zeros(n, free.len());
    for (r, &pc) in pivots.iter().enumerate() {
        offset[pc] = reduced.get(r, n);
        for (k, &fc) in free.iter().enumerate() {
            directions.set(pc, k, -reduced.get(r, fc));
        }
    }
    for (k, &fc) in free.iter().enumerate() {
        directions.set(fc, k, 1.0);
    }
    Some(AffineSet {
        offset,
        free,
        directions,
    })
}

/// Solves a square system; `None` if it is singular at tolerance `rel_tol`.
pub fn solve_square(a: &Matrix, b: &[f64], rel_tol: f64) -> Option<Vec<f64>> {
    assert_eq!(a.rows, a.cols);
    match solve_affine(a, b, rel_tol) {
        Some(s) if s.is_unique() => Some(s.offset),
        _ => None,
    }
}

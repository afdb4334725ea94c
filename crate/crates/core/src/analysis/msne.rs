//! Full-support equilibrium solvers based on the indifference principle.

use crate::error::{Error, Result};
use crate::game_model::{k_subsets, MixedStrategy, PayoffMatrix, Player};
use crate::linalg::{rank_with_tol, relative_tol, solve_affine, AffineSet, Matrix, DEFAULT_RELATIVE_TOL};
use crate::weighting::{check_alpha, inverse_unchecked};

const NONNEG_TOL: f64 = 1e-12;

/// Rows `(row_i - row_0)` for `i ≥ 1` followed by a row of ones: the system
/// "all pure payoffs equal, probabilities sum to one".
fn indifference_system(payoff_rows: &Matrix) -> (Matrix, Vec<f64>) {
    let (r, c) = (payoff_rows.rows(), payoff_rows.cols());
    let a = Matrix::from_fn(r, c, |i, j| {
        if i + 1 < r {
            payoff_rows.get(i + 1, j) - payoff_rows.get(0, j)
        } else {
            1.0
        }
    });
    let mut b = vec![0.0; r];
    b[r - 1] = 1.0;
    (a, b)
}

fn check_nonnegative(p: &[f64], who: &str) -> Result<MixedStrategy> {
    if let Some((i, v)) = p.iter().enumerate().find(|(_, &v)| v < -NONNEG_TOL) {
        return Err(Error::ReducedSupport(format!(
            "{who} strategy {i} would need probability {v}"
        )));
    }
    MixedStrategy::from_approx(p.to_vec(), 1e-9)
}

/// The attacker strategy that makes every defender pure strategy equally good.
///
/// Fails with [`Error::RankDeficient`] when the indifference system does not
/// pin down a unique solution, and with [`Error::ReducedSupport`] when the
/// solution has negative entries or the system is inconsistent.
pub fn attacker_msne_eut(m_a: &PayoffMatrix) -> Result<MixedStrategy> {
    let (a, b) = indifference_system(m_a.defender_utilities());
    let Some(sol) = solve_affine(&a, &b, DEFAULT_RELATIVE_TOL) else {
        return Err(Error::ReducedSupport(
            "no attacker strategy makes all defender strategies indifferent".into(),
        ));
    };
    if !sol.is_unique() {
        return Err(Error::RankDeficient {
            rank: rank_with_tol(&a, relative_tol(&a, DEFAULT_RELATIVE_TOL)),
            needed: m_a.num_attacker(),
        });
    }
    check_nonnegative(&sol.offset, "attacker")
}

/// Every defender equilibrium strategy against a full-support attacker,
/// parameterized by the free variables of the attacker's indifference system.
#[derive(Debug, Clone)]
pub struct DefenderFamily {
    /// Centroid of the feasible vertices.
    pub base_point: MixedStrategy,
    /// Defender strategies whose probabilities act as free parameters.
    pub free_indices: Vec<usize>,
    /// Probabilities with every free parameter at zero.
    pub offsets: Vec<f64>,
    /// `num_defender × free_indices.len()`; column `k` is the change per unit
    /// of free parameter `k`.
    pub coefficients: Matrix,
    /// Range of each free parameter over the feasible polytope.
    pub feasible_box: Vec<(f64, f64)>,
    /// Extreme points of the family.
    pub vertices: Vec<MixedStrategy>,
}

impl DefenderFamily {
    pub fn dimension(&self) -> usize {
        self.free_indices.len()
    }

    /// Strategy at parameters `t`; fails if it leaves the simplex.
    pub fn point(&self, t: &[f64]) -> Result<MixedStrategy> {
        if t.len() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                actual: t.len(),
            });
        }
        let p: Vec<f64> = (0..self.offsets.len())
            .map(|i| self.offsets[i] + (0..t.len()).map(|k| self.coefficients.get(i, k) * t[k]).sum::<f64>())
            .collect();
        MixedStrategy::new(p)
    }
}

/// Affine set of defender strategies keeping the attacker indifferent.
///
/// Defender strategies that are strictly worse than the best against
/// `p_a_star` are pinned to zero, so every feasible point is an equilibrium
/// strategy.
pub fn defender_msne_family_eut(m_a: &PayoffMatrix, p_a_star: &MixedStrategy) -> Result<DefenderFamily> {
    let (n_d, n_a) = (m_a.num_defender(), m_a.num_attacker());
    if p_a_star.len() != n_a {
        return Err(Error::DimensionMismatch {
            expected: n_a,
            actual: p_a_star.len(),
        });
    }
    let payoffs = m_a.pure_payoffs(Player::Defender, p_a_star.probs());
    let best = payoffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = m_a.defender_utilities().max_abs().max(1.0);
    let inactive: Vec<usize> = (0..n_d).filter(|&i| payoffs[i] < best - 1e-9 * scale).collect();

    let (indiff, rhs) = indifference_system(&m_a.attacker_utilities());
    let mut rows: Vec<Vec<f64>> = indiff.to_rows();
    let mut b = rhs;
    for &i in &inactive {
        let mut r = vec![0.0; n_d];
        r[i] = 1.0;
        rows.push(r);
        b.push(0.0);
    }
    let a = Matrix::from_rows(&rows);
    let Some(set) = solve_affine(&a, &b, DEFAULT_RELATIVE_TOL) else {
        return Err(Error::EmptyFamily(
            "no defender strategy makes the attacker indifferent".into(),
        ));
    };
    let vertices = feasible_vertices(&set);
    if vertices.is_empty() {
        return Err(Error::EmptyFamily(
            "indifference solutions all leave the probability simplex".into(),
        ));
    }
    let f = set.dimension();
    let mut feasible_box = vec![(f64::INFINITY, f64::NEG_INFINITY); f];
    for v in &vertices {
        for (k, &fi) in set.free.iter().enumerate() {
            feasible_box[k].0 = feasible_box[k].0.min(v[fi]);
            feasible_box[k].1 = feasible_box[k].1.max(v[fi]);
        }
    }
    let mut centroid = vec![0.0; n_d];
    for v in &vertices {
        for (c, x) in centroid.iter_mut().zip(v.probs()) {
            *c += x / vertices.len() as f64;
        }
    }
    Ok(DefenderFamily {
        base_point: MixedStrategy::from_approx(centroid, 1e-9)?,
        free_indices: set.free.clone(),
        offsets: set.offset.clone(),
        coefficients: set.directions.clone(),
        feasible_box,
        vertices,
    })
}

/// Vertices of `{ offset + D t ≥ 0 }`, found by making `dim` coordinates
/// vanish at a time.
fn feasible_vertices(set: &AffineSet) -> Vec<MixedStrategy> {
    let n = set.offset.len();
    let f = set.dimension();
    let tol = 1e-9;
    let mut out: Vec<MixedStrategy> = Vec::new();
    for active in k_subsets(n, f) {
        let a = Matrix::from_fn(f, f, |r, k| set.directions.get(active[r], k));
        let b: Vec<f64> = active.iter().map(|&i| -set.offset[i]).collect();
        let t = if f == 0 {
            Vec::new()
        } else {
            match crate::linalg::solve_square(&a, &b, DEFAULT_RELATIVE_TOL) {
                Some(t) => t,
                None => continue,
            }
        };
        let p = set.point(&t);
        if p.iter().any(|&x| x < -tol) {
            continue;
        }
        let Ok(ms) = MixedStrategy::from_approx(p, 1e-7) else {
            continue;
        };
        if !out.iter().any(|v| v.max_abs_diff(ms.probs()) < 1e-9) {
            out.push(ms);
        }
    }
    out
}

/// `Σ_i w⁻¹(λ p_i) - 1`.
fn normalization_gap(p_star: &[f64], lambda: f64, alpha: f64) -> f64 {
    p_star.iter().map(|&p| inverse_unchecked(lambda * p, alpha)).sum::<f64>() - 1.0
}

fn eut_direction(m_a: &PayoffMatrix) -> Result<(MixedStrategy, f64)> {
    let p = attacker_msne_eut(m_a)?;
    let max = p.probs().iter().cloned().fold(0.0, f64::max);
    Ok((p, 1.0 / max))
}

/// The attacker strategy that makes a prospect-theoretic defender with
/// rationality `alpha_d` indifferent among all its pure strategies.
///
/// The defender's indifference constraints are linear in the weighted vector
/// `q = w(p_a)`, so `q` is a multiple `λ` of the expected-utility solution.
/// `λ` is fixed by requiring `Σ w⁻¹(q_i) = 1`, found by bisection.
pub fn pt_attacker_msne(m_a: &PayoffMatrix, alpha_d: f64) -> Result<MixedStrategy> {
    check_alpha(alpha_d)?;
    let (p_star, hi) = eut_direction(m_a)?;
    let p = p_star.probs();
    let (mut lo, mut hi) = (0.0, hi);
    let (g_lo, g_hi) = (normalization_gap(p, lo, alpha_d), normalization_gap(p, hi, alpha_d));
    if !(g_lo < 0.0 && g_hi >= 0.0) {
        return Err(Error::NoRootInBracket {
            lo,
            hi,
            f_lo: g_lo,
            f_hi: g_hi,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if normalization_gap(p, mid, alpha_d) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let q: Vec<f64> = p.iter().map(|&pi| inverse_unchecked(lambda * pi, alpha_d)).collect();
    if q.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return Err(Error::ReducedSupport("weighted solution leaves [0, 1]".into()));
    }
    MixedStrategy::from_approx(q, 1e-9)
}

/// Number of sign changes of the normalization function on a uniform grid of
/// `samples` points over the admissible range of `λ`.
pub fn pt_normalization_roots(m_a: &PayoffMatrix, alpha_d: f64, samples: usize) -> Result<usize> {
    check_alpha(alpha_d)?;
    let (p_star, hi) = eut_direction(m_a)?;
    let mut count = 0;
    let mut prev = normalization_gap(p_star.probs(), 0.0, alpha_d);
    for s in 1..=samples {
        let lambda = hi * s as f64 / samples as f64;
        let g = normalization_gap(p_star.probs(), lambda, alpha_d);
        if (prev < 0.0) != (g < 0.0) {
            count += 1;
        }
        prev = g;
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::indifference_residual;
    use crate::game_model::{BehaviorModel, GameSpec};

    fn paper(f: f64) -> PayoffMatrix {
        GameSpec::paper_case(f).unwrap().payoff_matrix()
    }

    #[test]
    fn attacker_solution_at_reference_fine() {
        let p = attacker_msne_eut(&paper(8.0)).unwrap();
        let exact = [10.0 / 31.0, 9.0 / 31.0, 15.0 / 62.0, 9.0 / 62.0];
        assert!(p.max_abs_diff(&exact) < 1e-12, "{p:?}");
        // Reference rounding, D entry stated as 0.16.
        let reference = [0.32, 0.29, 0.24, 0.16];
        assert!(p.max_abs_diff(&reference[..3]) < 3e-3);
    }

    #[test]
    fn attacker_solution_near_threshold() {
        let p = attacker_msne_eut(&paper(3.0491)).unwrap();
        let expected = [0.378, 0.3031, 0.2171, 0.1017];
        assert!(p.max_abs_diff(&expected) < 1e-3, "{p:?}");
    }

    #[test]
    fn symmetric_two_by_two() {
        let spec = GameSpec::with_labels(&[1.0, 1.0], 1.0, 1).unwrap();
        let p = attacker_msne_eut(&spec.payoff_matrix()).unwrap();
        assert_eq!(p.probs(), &[0.5, 0.5]);
        let fam = defender_msne_family_eut(&spec.payoff_matrix(), &p).unwrap();
        assert_eq!(fam.dimension(), 0);
        assert_eq!(fam.base_point.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn rank_deficient_and_reduced_support() {
        let m = PayoffMatrix::from_rows(&[[1.0, 1.0, 1.0], [1.0, 1.0, 1.0]]).unwrap();
        assert!(matches!(attacker_msne_eut(&m), Err(Error::RankDeficient { .. })));
        // Row 0 dominates: no attacker mix equalizes the rows.
        let m = PayoffMatrix::from_rows(&[[3.0, 3.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(attacker_msne_eut(&m), Err(Error::ReducedSupport(_))));
        // Equalizing mix exists but needs a negative weight.
        let m = PayoffMatrix::from_rows(&[[2.0, 1.0], [0.0, 0.5]]).unwrap();
        assert!(matches!(attacker_msne_eut(&m), Err(Error::ReducedSupport(_))));
    }

    #[test]
    fn defender_family_offsets() {
        let m = paper(8.0);
        let p_a = attacker_msne_eut(&m).unwrap();
        let fam = defender_msne_family_eut(&m, &p_a).unwrap();
        assert_eq!(fam.free_indices, vec![4, 5]);
        let expected = [-7.0 / 31.0, -4.0 / 31.0, 22.0 / 31.0, 20.0 / 31.0];
        for (i, e) in expected.iter().enumerate() {
            assert!((fam.offsets[i] - e).abs() < 1e-12, "{i}: {}", fam.offsets[i]);
        }
        // AB = -0.2259 + CD, AD = 0.7097 - BD - CD
        assert!((fam.coefficients.get(0, 1) - 1.0).abs() < 1e-12);
        assert!((fam.coefficients.get(2, 0) + 1.0).abs() < 1e-12);
        assert!((fam.coefficients.get(2, 1) + 1.0).abs() < 1e-12);

        // BD = 0.129, CD = 0.2259 to four places; the exact values keep AB and AC at zero.
        let p_d = fam.point(&[4.0 / 31.0, 7.0 / 31.0]).unwrap();
        assert!(fam.point(&[0.129, 0.2259]).is_err());
        assert!(p_d.probs().iter().all(|&x| x >= 0.0));
        let (_, ra) = indifference_residual(&m, &p_d, &p_a, &BehaviorModel::Eut).unwrap();
        assert!(ra.value() < 1e-6);

        for v in &fam.vertices {
            let (rd, ra) = indifference_residual(&m, v, &p_a, &BehaviorModel::Eut).unwrap();
            assert!(rd.value() < 1e-9 && ra.value() < 1e-9);
        }
        let (rd, ra) = indifference_residual(&m, &fam.base_point, &p_a, &BehaviorModel::Eut).unwrap();
        assert!(rd.value() < 1e-9 && ra.value() < 1e-9);
        for &(lo, hi) in &fam.feasible_box {
            assert!(lo <= hi && lo >= -1e-12 && hi <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn empty_family_is_reported() {
        let m = paper(8.0);
        // Makes the defender indifferent only among rows that cannot equalize
        // the attacker columns.
        let err = defender_msne_family_eut(&m, &MixedStrategy::point_mass(4, 3));
        assert!(matches!(err, Err(Error::EmptyFamily(_))), "{err:?}");
    }

    #[test]
    fn pt_alpha_one_matches_eut() {
        let m = paper(8.0);
        let pt = pt_attacker_msne(&m, 1.0).unwrap();
        let eut = attacker_msne_eut(&m).unwrap();
        assert!(pt.max_abs_diff(eut.probs()) < 1e-9);
    }

    #[test]
    fn pt_solutions_are_indifferent_and_unique() {
        let m = paper(8.0);
        let expected = [
            (0.5, [0.4066, 0.3293, 0.2169, 0.0472]),
            (0.3, [0.4838, 0.3510, 0.1626, 0.0026]),
            (0.8, [0.3453, 0.3017, 0.2372, 0.1158]),
        ];
        for (alpha, e) in expected {
            let p = pt_attacker_msne(&m, alpha).unwrap();
            assert!(p.max_abs_diff(&e) < 1e-3, "alpha {alpha}: {p:?}");
            let model = BehaviorModel::pt(alpha, 1.0).unwrap();
            let (rd, _) = indifference_residual(&m, &MixedStrategy::uniform(6), &p, &model).unwrap();
            assert!(rd.value() < 1e-8, "alpha {alpha}: {rd:?}");
            assert_eq!(pt_normalization_roots(&m, alpha, 10_000).unwrap(), 1);
        }
        assert!(pt_attacker_msne(&m, 0.0).is_err());
    }
}

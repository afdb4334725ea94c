//! Support enumeration for zero-sum matrix games.
//!
//! Every extreme optimal strategy of a zero-sum game is the solution of a
//! square indifference system on equal-size supports. Each player's candidate
//! vertices are enumerated separately, kept if they guarantee their value
//! against every pure reply, and the optimal ones are paired up.

use serde::Serialize;

use crate::game_model::{k_subsets, MixedStrategy, PayoffMatrix};
use crate::linalg::{solve_square, Matrix};

/// Largest number of pure strategies per player the oracle accepts.
pub const MAX_ORACLE_DIM: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleEquilibrium {
    pub p_d: MixedStrategy,
    pub p_a: MixedStrategy,
    /// Defender's expected utility.
    pub value: f64,
}

struct Vertex {
    probs: Vec<f64>,
    value: f64,
}

/// Candidate vertices for the player choosing columns of `g` to keep the row
/// player's payoff low. Returns `(strategy over columns, guaranteed cap)`.
fn minimizer_vertices(g: &Matrix, tol: f64) -> Vec<Vertex> {
    let (m, n) = (g.rows(), g.cols());
    let mut out = Vec::new();
    for k in 1..=m.min(n) {
        for rows in k_subsets(m, k) {
            for cols in k_subsets(n, k) {
                // unknowns: x over `cols`, then v
                let a = Matrix::from_fn(k + 1, k + 1, |r, c| match (r < k, c < k) {
                    (true, true) => g.get(rows[r], cols[c]),
                    (true, false) => -1.0,
                    (false, true) => 1.0,
                    (false, false) => 0.0,
                });
                let mut b = vec![0.0; k + 1];
                b[k] = 1.0;
                let Some(sol) = solve_square(&a, &b, 1e-12) else {
                    continue;
                };
                if sol[..k].iter().any(|&x| x < -tol) {
                    continue;
                }
                let v = sol[k];
                let mut x = vec![0.0; n];
                for (c, &j) in cols.iter().enumerate() {
                    x[j] = sol[c].max(0.0);
                }
                let s: f64 = x.iter().sum();
                x.iter_mut().for_each(|p| *p /= s);
                let payoffs = g.mul_vec(&x);
                if payoffs.iter().all(|&u| u <= v + tol) {
                    out.push(Vertex { probs: x, value: v });
                }
            }
        }
    }
    out
}

fn optimal(mut vs: Vec<Vertex>, tol: f64) -> (f64, Vec<Vec<f64>>) {
    let best = vs.iter().map(|v| v.value).fold(f64::INFINITY, f64::min);
    vs.retain(|v| v.value <= best + tol);
    let mut uniq: Vec<Vec<f64>> = Vec::new();
    for v in vs {
        if !uniq.iter().any(|u| crate::game_model::max_abs_diff(u, &v.probs) < tol) {
            uniq.push(v.probs);
        }
    }
    uniq.sort_by(|a, b| a.partial_cmp(b).expect("finite probabilities"));
    (best, uniq)
}

/// All equilibria built from extreme optimal strategies of both players.
///
/// Each returned pair is checked directly: no pure deviation of either
/// player improves on the value. Panics if either player has more than
/// [`MAX_ORACLE_DIM`] pure strategies.
pub fn support_enumeration_solve(m_a: &PayoffMatrix) -> Vec<OracleEquilibrium> {
    let m = m_a.defender_utilities();
    assert!(
        m.rows() <= MAX_ORACLE_DIM && m.cols() <= MAX_ORACLE_DIM,
        "support enumeration is limited to {MAX_ORACLE_DIM} strategies per player"
    );
    let tol = 1e-9 * m.max_abs().max(1.0);

    // Attacker minimizes the defender's payoff over the columns of M.
    let (v_att, attacker) = optimal(minimizer_vertices(m, tol), tol);
    // Defender maximizes; as a minimizer it faces -Mᵀ.
    let (neg_v_def, defender) = optimal(minimizer_vertices(&m.transpose().scaled(-1.0), tol), tol);
    let v_def = -neg_v_def;
    debug_assert!((v_att - v_def).abs() <= 10.0 * tol, "minimax gap {v_att} vs {v_def}");

    let mut out = Vec::new();
    for p_d in &defender {
        for p_a in &attacker {
            let value = m.bilinear(p_d, p_a);
            let rows = m.mul_vec(p_a);
            let cols = m.tr_mul_vec(p_d);
            let no_defender_gain = rows.iter().all(|&u| u <= value + tol);
            let no_attacker_gain = cols.iter().all(|&u| u >= value - tol);
            if no_defender_gain && no_attacker_gain {
                out.push(OracleEquilibrium {
                    p_d: MixedStrategy::from_approx(p_d.clone(), 1e-9).expect("normalized vertex"),
                    p_a: MixedStrategy::from_approx(p_a.clone(), 1e-9).expect("normalized vertex"),
                    value,
                });
            }
        }
    }
    assert!(!out.is_empty(), "a finite zero-sum game always has an equilibrium");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game_model::GameSpec;

    #[test]
    fn matching_pennies() {
        let m = PayoffMatrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let eqs = support_enumeration_solve(&m);
        assert_eq!(eqs.len(), 1);
        assert_eq!(eqs[0].p_d.probs(), &[0.5, 0.5]);
        assert_eq!(eqs[0].p_a.probs(), &[0.5, 0.5]);
        assert!(eqs[0].value.abs() < 1e-15);
    }

    #[test]
    fn pure_saddle_point() {
        let m = PayoffMatrix::from_rows(&[[3.0, 5.0], [1.0, 4.0]]).unwrap();
        let eqs = support_enumeration_solve(&m);
        assert_eq!(eqs.len(), 1);
        assert_eq!(eqs[0].p_d.probs(), &[1.0, 0.0]);
        assert_eq!(eqs[0].p_a.probs(), &[1.0, 0.0]);
        assert_eq!(eqs[0].value, 3.0);
    }

    #[test]
    fn reference_game_has_unique_attacker_strategy() {
        let exact = [10.0 / 31.0, 9.0 / 31.0, 15.0 / 62.0, 9.0 / 62.0];
        for f in [2.0, 8.0, 20.0] {
            let m = GameSpec::paper_case(f).unwrap().payoff_matrix();
            let eqs = support_enumeration_solve(&m);
            assert!(eqs.len() > 1, "defender side should have several vertices");
            let first = eqs[0].p_a.clone();
            for e in &eqs {
                assert!(e.p_a.max_abs_diff(first.probs()) < 1e-6);
                assert!((e.value - eqs[0].value).abs() < 1e-9);
            }
            if f == 8.0 {
                assert!(first.max_abs_diff(&exact) < 1e-9);
                assert!((eqs[0].value - 68.0 / 31.0).abs() < 1e-9);
            }
        }
    }
}

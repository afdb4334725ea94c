//! Exact equilibrium machinery.
//!
//! Indifference-principle solvers for both behavior models, a support
//! enumeration oracle, numerical rank, the defender's equilibrium family,
//! game values and zero-value fine thresholds.

mod msne;
mod oracle;
mod threshold;

pub use msne::{
    attacker_msne_eut, defender_msne_family_eut, pt_attacker_msne, pt_normalization_roots, DefenderFamily,
};
pub use oracle::{support_enumeration_solve, OracleEquilibrium};
pub use threshold::{
    closed_form_fine, detection_decomposition, eut_equilibrium, fine_ratio, fine_threshold, min_winning_fine,
    FineThresholdResult, ThresholdOptions, DEFAULT_FINE_BRACKET,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::game_model::{BehaviorModel, MixedStrategy, PayoffMatrix, Player};
use crate::linalg::{rank_with_tol, relative_tol, Matrix, DEFAULT_RELATIVE_TOL};

/// Probabilities above this count as part of a strategy's support.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;

/// Default tolerance on indifference residuals.
pub const RESIDUAL_TOL: f64 = 1e-6;

/// Numerical rank; `tol` is an absolute pivot tolerance, defaulting to
/// `1e-9 · max |entry|`.
pub fn matrix_rank(m: &Matrix, tol: Option<f64>) -> usize {
    let tol = tol.unwrap_or_else(|| relative_tol(m, DEFAULT_RELATIVE_TOL));
    rank_with_tol(m, tol)
}

/// Deviation from the indifference principle for one player.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    /// Largest `|payoff - mean|` over supported pure strategies.
    pub spread: f64,
    /// Largest amount by which an unsupported pure strategy beats the
    /// supported mean, or zero.
    pub violation: f64,
}

impl Residual {
    pub fn value(&self) -> f64 {
        self.spread.max(self.violation)
    }
}

fn residual_of(payoffs: &[f64], own: &[f64]) -> Residual {
    let support: Vec<usize> = (0..own.len()).filter(|&i| own[i] > SUPPORT_THRESHOLD).collect();
    let mean = support.iter().map(|&i| payoffs[i]).sum::<f64>() / support.len() as f64;
    let spread = support.iter().fold(0.0_f64, |m, &i| m.max((payoffs[i] - mean).abs()));
    let violation = (0..own.len())
        .filter(|&i| own[i] <= SUPPORT_THRESHOLD)
        .fold(0.0_f64, |m, i| m.max(payoffs[i] - mean));
    Residual { spread, violation }
}

/// Indifference residuals `(defender, attacker)`. Payoffs use each player's
/// perceived image of the opponent's strategy.
pub fn indifference_residual(
    m_a: &PayoffMatrix,
    p_d: &MixedStrategy,
    p_a: &MixedStrategy,
    model: &BehaviorModel,
) -> Result<(Residual, Residual)> {
    check_pair(m_a, p_d, p_a)?;
    let pay_d = m_a.pure_payoffs(Player::Defender, &model.perceive(Player::Defender, p_a.probs()));
    let pay_a = m_a.pure_payoffs(Player::Attacker, &model.perceive(Player::Attacker, p_d.probs()));
    Ok((residual_of(&pay_d, p_d.probs()), residual_of(&pay_a, p_a.probs())))
}

/// Values of a strategy pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GameValue {
    /// Defender's expected utility with objective probabilities.
    pub objective: f64,
    /// Defender's utility as it perceives the attacker's strategy.
    pub perceived_d: f64,
    /// Attacker's utility as it perceives the defender's strategy.
    pub perceived_a: f64,
}

pub fn game_value(m_a: &PayoffMatrix, p_d: &MixedStrategy, p_a: &MixedStrategy, model: &BehaviorModel) -> Result<GameValue> {
    check_pair(m_a, p_d, p_a)?;
    let objective = m_a.defender_utilities().bilinear(p_d.probs(), p_a.probs());
    let seen_by_d = model.perceive(Player::Defender, p_a.probs());
    let seen_by_a = model.perceive(Player::Attacker, p_d.probs());
    let perceived_d = m_a.defender_utilities().bilinear(p_d.probs(), &seen_by_d);
    let perceived_a = -m_a.defender_utilities().bilinear(&seen_by_a, p_a.probs());
    Ok(GameValue {
        objective,
        perceived_d,
        perceived_a,
    })
}

fn check_pair(m_a: &PayoffMatrix, p_d: &MixedStrategy, p_a: &MixedStrategy) -> Result<()> {
    if p_d.len() != m_a.num_defender() {
        return Err(Error::DimensionMismatch {
            expected: m_a.num_defender(),
            actual: p_d.len(),
        });
    }
    if p_a.len() != m_a.num_attacker() {
        return Err(Error::DimensionMismatch {
            expected: m_a.num_attacker(),
            actual: p_a.len(),
        });
    }
    Ok(())
}

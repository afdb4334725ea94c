//! Probability weighting for the prospect-theoretic players.
//!
//! Each player distorts the probabilities it attaches to the opponent's
//! strategies with the Prelec function `w(p) = exp(-(-ln p)^α)`. The
//! function fixes `1/e`, overweights probabilities below it and underweights
//! the ones above. `α = 1` is the identity.
//!
//! `w(0)` is taken to be `0`, the limit from the right. Weighted vectors are
//! not renormalized.

use crate::error::{Error, Result};

/// A monotone map from objective to subjective probabilities on `[0, 1]`.
pub trait ProbabilityWeighting {
    fn weight(&self, p: f64) -> f64;

    fn inverse(&self, q: f64) -> f64;

    fn weight_vector(&self, probs: &[f64]) -> Vec<f64> {
        probs.iter().map(|&p| self.weight(p)).collect()
    }

    fn weight_into(&self, probs: &[f64], out: &mut [f64]) {
        for (o, &p) in out.iter_mut().zip(probs) {
            *o = self.weight(p);
        }
    }
}

/// Prelec weighting with rationality parameter `alpha` in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prelec {
    alpha: f64,
}

impl Prelec {
    pub fn new(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Prelec { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_identity(&self) -> bool {
        self.alpha == 1.0
    }
}

impl ProbabilityWeighting for Prelec {
    #[inline]
    fn weight(&self, p: f64) -> f64 {
        weight_unchecked(p, self.alpha)
    }

    #[inline]
    fn inverse(&self, q: f64) -> f64 {
        inverse_unchecked(q, self.alpha)
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange(p))
    }
}

// -ln(p), accurate near p = 1 where `p - 1` is exact.
#[inline]
fn neg_ln(p: f64) -> f64 {
    if p > 0.5 {
        -(p - 1.0).ln_1p()
    } else {
        -p.ln()
    }
}

#[inline]
pub(crate) fn weight_unchecked(p: f64, alpha: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else if p >= 1.0 {
        1.0
    } else if alpha == 1.0 {
        p
    } else {
        (-neg_ln(p).powf(alpha)).exp()
    }
}

#[inline]
pub(crate) fn inverse_unchecked(q: f64, alpha: f64) -> f64 {
    if q <= 0.0 {
        0.0
    } else if q >= 1.0 {
        1.0
    } else if alpha == 1.0 {
        q
    } else {
        (-neg_ln(q).powf(1.0 / alpha)).exp()
    }
}

/// `exp(-(-ln p)^alpha)`, with `w(0) = 0` and `w(1) = 1`.
pub fn prelec_weight(p: f64, alpha: f64) -> Result<f64> {
    check_probability(p)?;
    check_alpha(alpha)?;
    Ok(weight_unchecked(p, alpha))
}

/// Inverse of [`prelec_weight`]: `exp(-(-ln q)^(1/alpha))`.
pub fn prelec_inverse(q: f64, alpha: f64) -> Result<f64> {
    check_probability(q)?;
    check_alpha(alpha)?;
    Ok(inverse_unchecked(q, alpha))
}

/// Elementwise Prelec weights of a probability vector.
///
/// The output generally does not sum to one.
pub fn weight_vector(probs: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    crate::game_model::check_simplex(probs, crate::game_model::SIMPLEX_TOL)?;
    Ok(probs.iter().map(|&p| weight_unchecked(p, alpha)).collect())
}

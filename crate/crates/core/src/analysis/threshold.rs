//! Fines at which the equilibrium value of the game is zero.
//!
//! The equilibrium itself depends on the fine, so the crossing is found by
//! bisection on the fine, solving an equilibrium at every probe. The value is
//! non-decreasing in the fine, which makes bisection sound.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fictitious_play::{self, FpConfig};
use crate::game_model::{BehaviorModel, GameSpec, MixedStrategy, PayoffMatrix};
use crate::linalg::Matrix;

use super::{attacker_msne_eut, defender_msne_family_eut, game_value, support_enumeration_solve, GameValue, OracleEquilibrium};

pub const DEFAULT_FINE_BRACKET: (f64, f64) = (0.1, 50.0);

#[derive(Debug, Clone)]
pub struct ThresholdOptions {
    pub bracket: (f64, f64),
    /// Stop once the bracket is narrower than this. `None` picks `1e-10`
    /// for expected utility and `1e-3` for prospect theory, where each probe
    /// is a noisy learning run.
    pub fine_tol: Option<f64>,
    /// Prospect-theoretic bisection stops early once a probe's value is this
    /// close to zero.
    pub value_tol: f64,
    pub max_probes: usize,
    /// Learning configuration for prospect-theoretic probes. `None` uses
    /// [`FpConfig::for_spec`].
    pub fp: Option<FpConfig>,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            bracket: DEFAULT_FINE_BRACKET,
            fine_tol: None,
            value_tol: 1e-4,
            max_probes: 200,
            fp: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FineThresholdResult {
    pub f_value: f64,
    pub p_a_at_threshold: MixedStrategy,
    pub p_d_at_threshold: MixedStrategy,
    pub model: BehaviorModel,
    pub bracket: (f64, f64),
    pub value_at_threshold: GameValue,
    /// Fine that zeroes the first defender strategy's payoff against
    /// `p_a_at_threshold`.
    pub closed_form: f64,
    /// Fine that zeroes the value of the threshold strategy pair, from the
    /// detection/damage decomposition.
    pub ratio_form: f64,
    pub probes: usize,
}

/// An expected-utility equilibrium: the full-support solution when it
/// exists, otherwise the first support-enumeration equilibrium.
pub fn eut_equilibrium(m_a: &PayoffMatrix) -> OracleEquilibrium {
    if let Ok(p_a) = attacker_msne_eut(m_a) {
        if let Ok(fam) = defender_msne_family_eut(m_a, &p_a) {
            let value = m_a.defender_utilities().bilinear(fam.base_point.probs(), p_a.probs());
            return OracleEquilibrium {
                p_d: fam.base_point,
                p_a,
                value,
            };
        }
    }
    support_enumeration_solve(m_a).swap_remove(0)
}

fn probe(spec: &GameSpec, model: &BehaviorModel, fp: Option<&FpConfig>) -> Result<(MixedStrategy, MixedStrategy, GameValue)> {
    let m_a = spec.payoff_matrix();
    if model.is_eut() {
        let eq = eut_equilibrium(&m_a);
        let v = game_value(&m_a, &eq.p_d, &eq.p_a, model)?;
        Ok((eq.p_d, eq.p_a, v))
    } else {
        let cfg = match fp {
            Some(c) => FpConfig {
                model: *model,
                ..c.clone()
            },
            None => FpConfig::for_spec(spec, *model),
        };
        let r = fictitious_play::run(spec, &cfg)?;
        Ok((r.p_d_star, r.p_a_star, r.value))
    }
}

/// `Σ_{j∉s} V_j p_j / Σ_{j∈s} p_j` for the first defender subset `s`: the
/// uniform fine at which that subset breaks even against `p_a`.
pub fn closed_form_fine(spec: &GameSpec, p_a: &MixedStrategy) -> f64 {
    let first = &spec.strategy_space().defender[0];
    let (mut missed, mut caught) = (0.0, 0.0);
    for (j, t) in spec.trojans().iter().enumerate() {
        if first.contains(j) {
            caught += p_a[j];
        } else {
            missed += t.damage * p_a[j];
        }
    }
    missed / caught
}

/// `(damage, detection)` matrices, attacker strategies by defender
/// strategies: `damage[j][i] = V_j` when subset `i` misses trojan `j`,
/// `detection[j][i] = 1` when it catches it. With a uniform fine `F`,
/// `M_a = (F·detection - damage)ᵀ`.
pub fn detection_decomposition(spec: &GameSpec) -> (Matrix, Matrix) {
    let space = spec.strategy_space();
    let (t, c) = (space.num_attacker(), space.num_defender());
    let damage = Matrix::from_fn(t, c, |j, i| {
        if space.defender[i].contains(j) {
            0.0
        } else {
            spec.trojans()[j].damage
        }
    });
    let detection = Matrix::from_fn(t, c, |j, i| if space.defender[i].contains(j) { 1.0 } else { 0.0 });
    (damage, detection)
}

/// Uniform fine at which the objective value of `(p_d, p_a)` is zero.
pub fn fine_ratio(spec: &GameSpec, p_d: &MixedStrategy, p_a: &MixedStrategy) -> f64 {
    let (damage, detection) = detection_decomposition(spec);
    damage.bilinear(p_a.probs(), p_d.probs()) / detection.bilinear(p_a.probs(), p_d.probs())
}

/// Bisection on the uniform fine for a zero objective equilibrium value.
pub fn fine_threshold(template: &GameSpec, model: &BehaviorModel, opts: &ThresholdOptions) -> Result<FineThresholdResult> {
    model.validate()?;
    let (mut lo, mut hi) = opts.bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidConfig(format!("bad fine bracket [{lo}, {hi}]")));
    }
    let fine_tol = opts.fine_tol.unwrap_or(if model.is_eut() { 1e-10 } else { 1e-3 });
    let fp = opts.fp.as_ref();
    let value_at = |f: f64| -> Result<(MixedStrategy, MixedStrategy, GameValue)> {
        probe(&template.with_uniform_fine(f)?, model, fp)
    };

    let mut probes = 2;
    let v_lo = value_at(lo)?.2.objective;
    let v_hi = value_at(hi)?.2.objective;
    if !(v_lo < 0.0 && v_hi > 0.0) {
        return Err(Error::NoRootInBracket {
            lo,
            hi,
            f_lo: v_lo,
            f_hi: v_hi,
        });
    }
    let mut hit = None;
    while hi - lo > fine_tol && probes < opts.max_probes {
        let mid = 0.5 * (lo + hi);
        let eq = value_at(mid)?;
        probes += 1;
        let v = eq.2.objective;
        if !model.is_eut() && v.abs() < opts.value_tol {
            hit = Some((mid, eq));
            break;
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (f_value, (p_d, p_a, value)) = match hit {
        Some(h) => h,
        None => {
            let mid = 0.5 * (lo + hi);
            probes += 1;
            (mid, value_at(mid)?)
        }
    };
    let spec = template.with_uniform_fine(f_value)?;
    Ok(FineThresholdResult {
        f_value,
        closed_form: closed_form_fine(&spec, &p_a),
        ratio_form: fine_ratio(&spec, &p_d, &p_a),
        p_a_at_threshold: p_a,
        p_d_at_threshold: p_d,
        model: *model,
        bracket: opts.bracket,
        value_at_threshold: value,
        probes,
    })
}

/// The smallest uniform fine above which the defender wins. Below it the
/// attacker's equilibrium utility is positive.
pub fn min_winning_fine(template: &GameSpec, model: &BehaviorModel, opts: &ThresholdOptions) -> Result<f64> {
    fine_threshold(template, model, opts).map(|r| r.f_value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper() -> GameSpec {
        GameSpec::paper_case(8.0).unwrap()
    }

    #[test]
    fn decomposition_rebuilds_payoffs() {
        let spec = paper();
        let (damage, detection) = detection_decomposition(&spec);
        assert_eq!(damage.row(0), &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(damage.row(3), &[12.0, 12.0, 0.0, 12.0, 0.0, 0.0]);
        assert_eq!(detection.row(1), &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        let m = spec.payoff_matrix();
        for i in 0..6 {
            for j in 0..4 {
                assert_eq!(m.get(i, j), 8.0 * detection.get(j, i) - damage.get(j, i));
            }
        }
    }

    #[test]
    fn closed_form_on_reference_vector() {
        let p = MixedStrategy::new(vec![0.3818, 0.3022, 0.2133, 0.1027]).unwrap();
        let f = closed_form_fine(&paper(), &p);
        assert!((f - 3.049).abs() < 5e-3, "{f}");
    }

    #[test]
    fn eut_threshold() {
        let r = fine_threshold(&paper(), &BehaviorModel::Eut, &ThresholdOptions::default()).unwrap();
        assert!((r.f_value - 3.07825).abs() < 1e-4, "{}", r.f_value);
        assert!(r.value_at_threshold.objective.abs() < 1e-4);
        assert!((r.closed_form - r.f_value).abs() < 1e-6);
        assert!((r.ratio_form - r.f_value).abs() < 1e-6);
        let expected = [0.3774, 0.3031, 0.2174, 0.1021];
        assert!(r.p_a_at_threshold.max_abs_diff(&expected) < 1e-3);
    }

    #[test]
    fn min_winning_fine_separates_signs() {
        let f = min_winning_fine(&paper(), &BehaviorModel::Eut, &ThresholdOptions::default()).unwrap();
        let below = eut_equilibrium(&paper().with_uniform_fine(2.0).unwrap().payoff_matrix());
        let above = eut_equilibrium(&paper().with_uniform_fine(5.0).unwrap().payoff_matrix());
        assert!(below.value < 0.0 && above.value > 0.0 && f > 2.0 && f < 5.0);
    }

    #[test]
    fn bracket_without_crossing() {
        let opts = ThresholdOptions {
            bracket: (5.0, 10.0),
            ..Default::default()
        };
        let err = fine_threshold(&paper(), &BehaviorModel::Eut, &opts).unwrap_err();
        assert!(matches!(err, Error::NoRootInBracket { lo, hi, .. } if lo == 5.0 && hi == 10.0));
    }

    #[test]
    fn single_trojan_game_is_rejected() {
        assert!(GameSpec::with_labels(&[1.0], 1.0, 1).is_err());
    }
}

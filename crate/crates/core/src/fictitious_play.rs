//! Fictitious-play learning.
//!
//! Each round both players best-respond to their current belief about the
//! opponent, then both observe the opponent's move and update their
//! empirical frequencies. Under prospect theory the belief passes through the
//! player's Prelec weighting before the best response.
//!
//! The initial belief counts as one observation: counts start at `σ⁰` and
//! the belief after `k` rounds is `counts / (1 + k)`.
//!
//! Convergence compares the beliefs against a checkpoint taken
//! `checkpoint_gap` rounds earlier. A consecutive-round comparison would be
//! meaningless because one round moves a belief by at most `1/(k+1)`.

use crate::analysis::{game_value, indifference_residual, GameValue, Residual};
use crate::error::{Error, Result};
use crate::game_model::{
    check_simplex, max_abs_diff, BehaviorModel, GameSpec, MixedStrategy, PayoffMatrix, Player,
    SIMPLEX_TOL,
};
use crate::weighting::weight_unchecked;

/// Defender's initial belief over attacker strategies `A, B, C, D` in the
/// four-trojan case study.
pub const PAPER_DEFENDER_PRIOR: [f64; 4] = [0.2083, 0.1667, 0.3333, 0.2917];

/// Attacker's initial belief over `AB, AC, AD, BC, BD, CD`.
pub const PAPER_ATTACKER_PRIOR: [f64; 6] = [0.2051, 0.2564, 0.2564, 0.0513, 0.0513, 0.1795];

pub const DEFAULT_CONVERGENCE_M: f64 = 1000.0;
pub const DEFAULT_CHECKPOINT_GAP: u64 = 1000;
pub const DEFAULT_MAX_ITERATIONS: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct FpConfig {
    /// Defender's initial belief over attacker strategies.
    pub defender_prior: Vec<f64>,
    /// Attacker's initial belief over defender strategies.
    pub attacker_prior: Vec<f64>,
    pub model: BehaviorModel,
    /// `M`; the run stops once beliefs move less than `1/M` over a checkpoint gap.
    pub convergence_m: f64,
    pub checkpoint_gap: u64,
    pub max_iterations: u64,
    pub record_trace: bool,
}

impl FpConfig {
    /// Defaults for `spec`: the case-study priors for four trojans tested two
    /// at a time, uniform priors otherwise.
    pub fn for_spec(spec: &GameSpec, model: BehaviorModel) -> Self {
        let (d, a) = default_priors(spec.num_trojans(), spec.strategy_space().num_defender(), spec.test_budget());
        FpConfig::with_priors(d, a, model)
    }

    /// Uniform priors for an arbitrary matrix game.
    pub fn uniform(m_a: &PayoffMatrix, model: BehaviorModel) -> Self {
        FpConfig::with_priors(
            MixedStrategy::uniform(m_a.num_attacker()).into_vec(),
            MixedStrategy::uniform(m_a.num_defender()).into_vec(),
            model,
        )
    }

    pub fn with_priors(defender_prior: Vec<f64>, attacker_prior: Vec<f64>, model: BehaviorModel) -> Self {
        FpConfig {
            defender_prior,
            attacker_prior,
            model,
            convergence_m: DEFAULT_CONVERGENCE_M,
            checkpoint_gap: DEFAULT_CHECKPOINT_GAP,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            record_trace: false,
        }
    }

    /// Sets `M = 1 / tol`.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.convergence_m = 1.0 / tol;
        self
    }

    pub fn tolerance(&self) -> f64 {
        1.0 / self.convergence_m
    }

    pub fn validate(&self, m_a: &PayoffMatrix) -> Result<()> {
        self.model.validate()?;
        if self.defender_prior.len() != m_a.num_attacker() {
            return Err(Error::DimensionMismatch {
                expected: m_a.num_attacker(),
                actual: self.defender_prior.len(),
            });
        }
        if self.attacker_prior.len() != m_a.num_defender() {
            return Err(Error::DimensionMismatch {
                expected: m_a.num_defender(),
                actual: self.attacker_prior.len(),
            });
        }
        check_simplex(&self.defender_prior, SIMPLEX_TOL)
            .map_err(|e| Error::InvalidConfig(format!("defender prior: {e}")))?;
        check_simplex(&self.attacker_prior, SIMPLEX_TOL)
            .map_err(|e| Error::InvalidConfig(format!("attacker prior: {e}")))?;
        if !(self.convergence_m.is_finite() && self.convergence_m >= 10.0) {
            return Err(Error::InvalidConfig(format!("M must be at least 10, got {}", self.convergence_m)));
        }
        if self.checkpoint_gap == 0 {
            return Err(Error::InvalidConfig("checkpoint gap must be at least 1".into()));
        }
        if self.max_iterations < self.checkpoint_gap {
            return Err(Error::InvalidConfig(format!(
                "max_iterations ({}) must be at least the checkpoint gap ({})",
                self.max_iterations, self.checkpoint_gap
            )));
        }
        Ok(())
    }
}

/// `(defender prior over attacker strategies, attacker prior over defender strategies)`.
pub fn default_priors(num_attacker: usize, num_defender: usize, test_budget: usize) -> (Vec<f64>, Vec<f64>) {
    if num_attacker == 4 && num_defender == 6 && test_budget == 2 {
        (PAPER_DEFENDER_PRIOR.to_vec(), PAPER_ATTACKER_PRIOR.to_vec())
    } else {
        (
            MixedStrategy::uniform(num_attacker).into_vec(),
            MixedStrategy::uniform(num_defender).into_vec(),
        )
    }
}

/// Index of the largest entry, lowest index on ties.
fn argmax_lowest(xs: &[f64]) -> usize {
    crate::game_model::argmax_first(xs)
}

/// Best pure response of `player` to `belief` over the opponent's strategies.
pub fn best_response(m_a: &PayoffMatrix, player: Player, belief: &[f64], model: &BehaviorModel) -> Result<usize> {
    let n_opp = m_a.num_strategies(player.opponent());
    if belief.len() != n_opp {
        return Err(Error::DimensionMismatch {
            expected: n_opp,
            actual: belief.len(),
        });
    }
    let perceived = model.perceive(player, belief);
    Ok(argmax_lowest(&m_a.pure_payoffs(player, &perceived)))
}

/// Observation counts and beliefs of both players.
#[derive(Debug, Clone, PartialEq)]
pub struct FpState {
    /// Rounds played.
    pub k: u64,
    /// Defender's counts over attacker strategies.
    pub defender_counts: Vec<f64>,
    /// Attacker's counts over defender strategies.
    pub attacker_counts: Vec<f64>,
    pub defender_belief: Vec<f64>,
    pub attacker_belief: Vec<f64>,
    /// `(defender move, attacker move)` of the last round.
    pub last_actions: Option<(usize, usize)>,
    pub checkpoint: Option<(Vec<f64>, Vec<f64>)>,
}

impl FpState {
    pub fn new(defender_prior: &[f64], attacker_prior: &[f64]) -> Self {
        FpState {
            k: 0,
            defender_counts: defender_prior.to_vec(),
            attacker_counts: attacker_prior.to_vec(),
            defender_belief: defender_prior.to_vec(),
            attacker_belief: attacker_prior.to_vec(),
            last_actions: None,
            checkpoint: None,
        }
    }

    /// Total mass behind each belief: the prior plus `k` observations.
    pub fn total(&self) -> f64 {
        1.0 + self.k as f64
    }

    /// Records one round in which the defender played `defender_move` and the
    /// attacker `attacker_move`.
    pub fn observe(&mut self, defender_move: usize, attacker_move: usize) {
        self.defender_counts[attacker_move] += 1.0;
        self.attacker_counts[defender_move] += 1.0;
        self.k += 1;
        let total = self.total();
        normalize_into(&self.defender_counts, total, &mut self.defender_belief);
        normalize_into(&self.attacker_counts, total, &mut self.attacker_belief);
        self.last_actions = Some((defender_move, attacker_move));
    }

    pub fn take_checkpoint(&mut self) {
        self.checkpoint = Some((self.defender_belief.clone(), self.attacker_belief.clone()));
    }

    /// Largest belief change of either player since the checkpoint.
    pub fn change_since_checkpoint(&self) -> Option<f64> {
        self.checkpoint.as_ref().map(|(d, a)| {
            max_abs_diff(d, &self.defender_belief).max(max_abs_diff(a, &self.attacker_belief))
        })
    }
}

fn normalize_into(counts: &[f64], total: f64, out: &mut [f64]) {
    for (o, c) in out.iter_mut().zip(counts) {
        *o = c / total;
    }
}

/// Single-player belief update: increments `counts[observed]` and returns the
/// new frequencies `counts / Σ counts`.
pub fn update_beliefs(counts: &mut [f64], observed: usize) -> Vec<f64> {
    counts[observed] += 1.0;
    let total: f64 = counts.iter().sum();
    counts.iter().map(|c| c / total).collect()
}

/// True when both players' beliefs moved by less than `1/M` since the checkpoint.
pub fn check_convergence(state: &FpState, convergence_m: f64) -> bool {
    state
        .change_since_checkpoint()
        .is_some_and(|delta| delta < 1.0 / convergence_m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    pub p_d: Vec<f64>,
    pub p_a: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumResult {
    /// Defender strategy: the attacker's belief about the defender.
    pub p_d_star: MixedStrategy,
    /// Attacker strategy: the defender's belief about the attacker.
    pub p_a_star: MixedStrategy,
    pub value: GameValue,
    pub iterations: u64,
    /// The belief criterion was met before `max_iterations`.
    pub converged: bool,
    pub residual_d: Residual,
    pub residual_a: Residual,
    pub trace: Option<Vec<TraceRow>>,
}

pub fn run(spec: &GameSpec, config: &FpConfig) -> Result<EquilibriumResult> {
    run_matrix(&spec.payoff_matrix(), config)
}

pub fn run_matrix(m_a: &PayoffMatrix, config: &FpConfig) -> Result<EquilibriumResult> {
    config.validate(m_a)?;
    let model = config.model;
    let (alpha_d, alpha_a) = (model.alpha(Player::Defender), model.alpha(Player::Attacker));
    let mut state = FpState::new(&config.defender_prior, &config.attacker_prior);
    state.take_checkpoint();

    let mut seen_d = vec![0.0; m_a.num_attacker()];
    let mut seen_a = vec![0.0; m_a.num_defender()];
    let mut pay_d = vec![0.0; m_a.num_defender()];
    let mut pay_a = vec![0.0; m_a.num_attacker()];
    let mut trace = config.record_trace.then(Vec::new);
    let mut converged = false;

    while state.k < config.max_iterations {
        perceive_into(&state.defender_belief, alpha_d, &mut seen_d);
        perceive_into(&state.attacker_belief, alpha_a, &mut seen_a);
        m_a.pure_payoffs_into(Player::Defender, &seen_d, &mut pay_d);
        m_a.pure_payoffs_into(Player::Attacker, &seen_a, &mut pay_a);
        let s_d = argmax_lowest(&pay_d);
        let s_a = argmax_lowest(&pay_a);
        state.observe(s_d, s_a);

        if state.k % config.checkpoint_gap == 0 {
            if let Some(t) = trace.as_mut() {
                t.push(trace_row(&state));
            }
            if check_convergence(&state, config.convergence_m) {
                converged = true;
                break;
            }
            state.take_checkpoint();
        }
    }
    if let Some(t) = trace.as_mut() {
        if t.last().map_or(true, |r| r.iteration != state.k) {
            t.push(trace_row(&state));
        }
    }

    let p_d_star = MixedStrategy::from_approx(state.attacker_belief.clone(), 1e-9)?;
    let p_a_star = MixedStrategy::from_approx(state.defender_belief.clone(), 1e-9)?;
    let value = game_value(m_a, &p_d_star, &p_a_star, &model)?;
    let (residual_d, residual_a) = indifference_residual(m_a, &p_d_star, &p_a_star, &model)?;
    Ok(EquilibriumResult {
        p_d_star,
        p_a_star,
        value,
        iterations: state.k,
        converged,
        residual_d,
        residual_a,
        trace,
    })
}

fn perceive_into(belief: &[f64], alpha: f64, out: &mut [f64]) {
    if alpha == 1.0 {
        out.copy_from_slice(belief);
    } else {
        for (o, &p) in out.iter_mut().zip(belief) {
            *o = weight_unchecked(p, alpha);
        }
    }
}

fn trace_row(state: &FpState) -> TraceRow {
    TraceRow {
        iteration: state.k,
        p_d: state.attacker_belief.clone(),
        p_a: state.defender_belief.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn paper_matrix() -> PayoffMatrix {
        GameSpec::paper_case(8.0).unwrap().payoff_matrix()
    }

    #[test]
    fn paper_priors_are_distributions() {
        check_simplex(&PAPER_DEFENDER_PRIOR, SIMPLEX_TOL).unwrap();
        check_simplex(&PAPER_ATTACKER_PRIOR, SIMPLEX_TOL).unwrap();
        let spec = GameSpec::paper_case(8.0).unwrap();
        let cfg = FpConfig::for_spec(&spec, BehaviorModel::Eut);
        assert_eq!(cfg.defender_prior, PAPER_DEFENDER_PRIOR);
        let other = GameSpec::with_labels(&[1.0, 2.0, 3.0], 1.0, 1).unwrap();
        assert_eq!(FpConfig::for_spec(&other, BehaviorModel::Eut).attacker_prior, vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn best_response_examples() {
        let m = paper_matrix();
        let eut = BehaviorModel::Eut;
        assert_eq!(best_response(&m, Player::Defender, &[1.0, 0.0, 0.0, 0.0], &eut).unwrap(), 0);
        let ab = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(best_response(&m, Player::Attacker, &ab, &eut).unwrap(), 3);
        assert_eq!(m.pure_payoffs(Player::Attacker, &ab), vec![-8.0, -8.0, 4.0, 12.0]);
        let pt = BehaviorModel::pt(0.5, 0.5).unwrap();
        let u = [0.25; 4];
        assert_eq!(
            best_response(&m, Player::Defender, &u, &pt).unwrap(),
            best_response(&m, Player::Defender, &u, &eut).unwrap()
        );
        assert!(best_response(&m, Player::Defender, &[0.5, 0.5], &eut).is_err());
    }

    #[test]
    fn update_examples() {
        let mut c = vec![1.0, 0.0, 0.0, 0.0];
        assert_eq!(update_beliefs(&mut c, 2), vec![0.5, 0.0, 0.5, 0.0]);
        let mut c = vec![3.0, 1.0];
        assert_eq!(update_beliefs(&mut c, 1), vec![0.6, 0.4]);
        let mut c = vec![0.0, 0.0, 0.0];
        let mut b = Vec::new();
        for _ in 0..5 {
            b = update_beliefs(&mut c, 1);
        }
        assert_eq!(b, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn convergence_examples() {
        let mut s = FpState::new(&[0.5, 0.5], &[0.5, 0.5]);
        assert!(!check_convergence(&s, 1000.0));
        s.take_checkpoint();
        assert!(check_convergence(&s, 1000.0));
        s.defender_belief = vec![0.51, 0.49];
        assert!(!check_convergence(&s, 1000.0));
    }

    #[test]
    fn config_validation() {
        let m = paper_matrix();
        let base = FpConfig::uniform(&m, BehaviorModel::Eut);
        assert!(base.validate(&m).is_ok());
        let mut c = base.clone();
        c.convergence_m = 5.0;
        assert!(matches!(c.validate(&m), Err(Error::InvalidConfig(_))));
        let mut c = base.clone();
        c.max_iterations = 10;
        assert!(c.validate(&m).is_err());
        let mut c = base.clone();
        c.defender_prior = vec![0.5, 0.5];
        assert!(matches!(c.validate(&m), Err(Error::DimensionMismatch { .. })));
        let mut c = base;
        c.attacker_prior = vec![0.5, 0.5, 0.5, 0.0, 0.0, 0.0];
        assert!(c.validate(&m).is_err());
    }

    #[test]
    fn matching_pennies() {
        let m = PayoffMatrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let mut cfg = FpConfig::uniform(&m, BehaviorModel::Eut);
        cfg.convergence_m = 1e4;
        let r = run_matrix(&m, &cfg).unwrap();
        assert!(r.converged);
        for p in r.p_d_star.probs().iter().chain(r.p_a_star.probs()) {
            assert!((p - 0.5).abs() < 0.01, "{p}");
        }
        assert!(r.value.objective.abs() < 0.01);
    }

    #[test]
    fn paper_case_eut_converges_near_reference() {
        let spec = GameSpec::paper_case(8.0).unwrap();
        let r = run(&spec, &FpConfig::for_spec(&spec, BehaviorModel::Eut)).unwrap();
        assert!(r.converged);
        let exact = [10.0 / 31.0, 9.0 / 31.0, 15.0 / 62.0, 9.0 / 62.0];
        assert!(r.p_a_star.max_abs_diff(&exact) < 0.01, "{:?}", r.p_a_star);
        assert!((r.value.objective - 68.0 / 31.0).abs() < 0.02);
    }

    #[test]
    fn trace_is_downsampled() {
        let spec = GameSpec::paper_case(8.0).unwrap();
        let mut cfg = FpConfig::for_spec(&spec, BehaviorModel::Eut);
        cfg.record_trace = true;
        cfg.checkpoint_gap = 700;
        cfg.max_iterations = 10_500;
        cfg.convergence_m = 1e9;
        let r = run(&spec, &cfg).unwrap();
        let t = r.trace.unwrap();
        assert_eq!(r.iterations, 10_500);
        assert_eq!(t.len() as u64, r.iterations.div_ceil(700));
        assert!(r.p_a_star.max_abs_diff(&t.last().unwrap().p_a) < 1e-12);

        cfg.max_iterations = 10_000;
        let r = run(&spec, &cfg).unwrap();
        assert_eq!(r.trace.unwrap().len() as u64, 10_000u64.div_ceil(700));
    }

    #[test]
    fn runs_are_deterministic() {
        let spec = GameSpec::paper_case(8.0).unwrap();
        let mut cfg = FpConfig::for_spec(&spec, BehaviorModel::pt(0.5, 0.5).unwrap());
        cfg.record_trace = true;
        cfg.max_iterations = 20_000;
        assert_eq!(run(&spec, &cfg).unwrap(), run(&spec, &cfg).unwrap());
    }

    #[test]
    fn non_convergence_is_reported() {
        let spec = GameSpec::paper_case(8.0).unwrap();
        let mut cfg = FpConfig::for_spec(&spec, BehaviorModel::Eut);
        cfg.max_iterations = 2000;
        let r = run(&spec, &cfg).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 2000);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn beliefs_stay_consistent_and_move_slowly(
            moves in proptest::collection::vec((0usize..6, 0usize..4), 1..300)
        ) {
            let mut s = FpState::new(&PAPER_DEFENDER_PRIOR, &PAPER_ATTACKER_PRIOR);
            for (d, a) in moves {
                let before = (s.defender_belief.clone(), s.attacker_belief.clone());
                s.observe(d, a);
                let bound = 1.0 / (s.k as f64 + 1.0) + 1e-15;
                prop_assert!(max_abs_diff(&before.0, &s.defender_belief) <= bound);
                prop_assert!(max_abs_diff(&before.1, &s.attacker_belief) <= bound);
                for (b, c) in [(&s.defender_belief, &s.defender_counts), (&s.attacker_belief, &s.attacker_counts)] {
                    prop_assert!(check_simplex(b, 1e-12).is_ok());
                    let total: f64 = c.iter().sum();
                    for (x, y) in b.iter().zip(c.iter()) {
                        prop_assert!((x - y / total).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

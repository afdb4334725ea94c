//! Scenario files: JSON descriptions of a game, a behavior model, learning
//! settings and an experiment.
//!
//! ```json
//! {
//!   "trojans": [{"id": "A", "damage": 1}, {"id": "B", "damage": 2}],
//!   "uniform_fine": 8,
//!   "test_budget": 1,
//!   "model": {"kind": "pt", "alpha_a": 0.5, "alpha_d": 0.5},
//!   "fp": {"convergence_m": 1000, "checkpoint_gap": 1000, "max_iterations": 10000000},
//!   "experiment": {"mode": "sweep_fine", "fines": [1, 2, 3]}
//! }
//! ```
//!
//! Unknown fields are rejected. `model`, `fp` and `experiment` may be
//! omitted.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fictitious_play::{default_priors, FpConfig, DEFAULT_CHECKPOINT_GAP, DEFAULT_CONVERGENCE_M, DEFAULT_MAX_ITERATIONS};
use crate::game_model::{BehaviorModel, GameSpec, Trojan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrojanEntry {
    pub id: String,
    pub damage: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fine: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Eut,
    Pt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_d: Option<f64>,
}

impl Default for ModelEntry {
    fn default() -> Self {
        ModelEntry {
            kind: ModelKind::Eut,
            alpha_a: None,
            alpha_d: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0_d: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma0_a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_gap: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Solve,
    SweepFine,
    SweepAlpha,
    Threshold,
    Trace,
    ScenarioPair,
}

/// Which rationality parameters an alpha sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Vary {
    /// `α_a = α_d = α`.
    Joint,
    /// `α_a = α`, `α_d = 1`.
    AttackerOnly,
    /// `α_d = α`, `α_a = 1`.
    DefenderOnly,
}

impl Vary {
    pub fn name(self) -> &'static str {
        match self {
            Vary::Joint => "joint",
            Vary::AttackerOnly => "attacker_only",
            Vary::DefenderOnly => "defender_only",
        }
    }

    /// `(α_d, α_a)` for sweep value `alpha`.
    pub fn alphas(self, alpha: f64) -> (f64, f64) {
        match self {
            Vary::Joint => (alpha, alpha),
            Vary::AttackerOnly => (1.0, alpha),
            Vary::DefenderOnly => (alpha, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentEntry {
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fines: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vary: Option<Vary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<u8>,
}

impl Default for ExperimentEntry {
    fn default() -> Self {
        ExperimentEntry {
            mode: Mode::Solve,
            fines: None,
            alphas: None,
            vary: None,
            bracket: None,
            pair: None,
        }
    }
}

/// The file as written, before defaults and validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub trojans: Vec<TrojanEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_fine: Option<f64>,
    pub test_budget: usize,
    #[serde(default)]
    pub model: ModelEntry,
    #[serde(default)]
    pub fp: FpEntry,
    #[serde(default)]
    pub experiment: ExperimentEntry,
}

/// A validated experiment with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Experiment {
    Solve,
    SweepFine { fines: Vec<f64> },
    SweepAlpha { alphas: Vec<f64>, vary: Vary },
    Threshold { bracket: (f64, f64) },
    Trace,
    ScenarioPair { pair: u8 },
}

impl Experiment {
    pub fn mode(&self) -> Mode {
        match self {
            Experiment::Solve => Mode::Solve,
            Experiment::SweepFine { .. } => Mode::SweepFine,
            Experiment::SweepAlpha { .. } => Mode::SweepAlpha,
            Experiment::Threshold { .. } => Mode::Threshold,
            Experiment::Trace => Mode::Trace,
            Experiment::ScenarioPair { .. } => Mode::ScenarioPair,
        }
    }
}

/// Fines `1, 2, ..., 12`.
pub fn default_fine_grid() -> Vec<f64> {
    (1..=12).map(f64::from).collect()
}

/// Rationality parameters `0.1, 0.2, ..., 1.0`.
pub fn default_alpha_grid() -> Vec<f64> {
    (1..=10).map(|i| f64::from(i) / 10.0).collect()
}

/// `(α_d, α_a)` of asymmetric-rationality scenario `pair`.
pub fn pair_alphas(pair: u8) -> Result<(f64, f64)> {
    match pair {
        1 => Ok((0.1, 0.5)),
        2 => Ok((0.5, 0.1)),
        _ => Err(Error::Scenario(format!("scenario pair must be 1 or 2, got {pair}"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub spec: GameSpec,
    pub model: BehaviorModel,
    pub fp: FpConfig,
    pub experiment: Experiment,
}

fn check_grid(name: &str, grid: &[f64], valid: impl Fn(f64) -> bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Scenario(format!("{name} grid is empty")));
    }
    if let Some(&bad) = grid.iter().find(|&&x| !valid(x)) {
        return Err(Error::Scenario(format!("{name} grid value {bad} out of range")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Scenario(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

fn unexpected(mode: Mode, field: &str) -> Error {
    Error::Scenario(format!("field `{field}` does not apply to mode {mode:?}"))
}

impl ExperimentEntry {
    fn resolve(&self) -> Result<Experiment> {
        let allowed: &[&str] = match self.mode {
            Mode::Solve | Mode::Trace => &[],
            Mode::SweepFine => &["fines"],
            Mode::SweepAlpha => &["alphas", "vary"],
            Mode::Threshold => &["bracket"],
            Mode::ScenarioPair => &["pair"],
        };
        let present = [
            ("fines", self.fines.is_some()),
            ("alphas", self.alphas.is_some()),
            ("vary", self.vary.is_some()),
            ("bracket", self.bracket.is_some()),
            ("pair", self.pair.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                return Err(unexpected(self.mode, name));
            }
        }
        Ok(match self.mode {
            Mode::Solve => Experiment::Solve,
            Mode::Trace => Experiment::Trace,
            Mode::SweepFine => {
                let fines = self.fines.clone().unwrap_or_else(default_fine_grid);
                check_grid("fine", &fines, |f| f.is_finite() && f > 0.0)?;
                Experiment::SweepFine { fines }
            }
            Mode::SweepAlpha => {
                let alphas = self.alphas.clone().unwrap_or_else(default_alpha_grid);
                check_grid("alpha", &alphas, |a| a > 0.0 && a <= 1.0)?;
                Experiment::SweepAlpha {
                    alphas,
                    vary: self.vary.unwrap_or(Vary::Joint),
                }
            }
            Mode::Threshold => {
                let [lo, hi] = self.bracket.unwrap_or([0.1, 50.0]);
                if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                    return Err(Error::Scenario(format!("bad fine bracket [{lo}, {hi}]")));
                }
                Experiment::Threshold { bracket: (lo, hi) }
            }
            Mode::ScenarioPair => {
                let pair = self.pair.unwrap_or(1);
                pair_alphas(pair)?;
                Experiment::ScenarioPair { pair }
            }
        })
    }
}

impl ModelEntry {
    fn resolve(&self) -> Result<BehaviorModel> {
        match self.kind {
            ModelKind::Eut => {
                if self.alpha_a.is_some() || self.alpha_d.is_some() {
                    return Err(Error::Scenario("alpha_a / alpha_d only apply to the pt model".into()));
                }
                Ok(BehaviorModel::Eut)
            }
            ModelKind::Pt => {
                let (Some(a_d), Some(a_a)) = (self.alpha_d, self.alpha_a) else {
                    return Err(Error::Scenario("pt model needs alpha_a and alpha_d".into()));
                };
                BehaviorModel::pt(a_d, a_a).map_err(|e| Error::Scenario(e.to_string()))
            }
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(format!("parse error: {e}")))
    }

    pub fn resolve(&self) -> Result<Scenario> {
        let mut trojans = Vec::with_capacity(self.trojans.len());
        for t in &self.trojans {
            let fine = match (t.fine, self.uniform_fine) {
                (Some(_), Some(_)) => {
                    return Err(Error::Scenario(format!(
                        "trojan `{}` sets a fine while uniform_fine is given",
                        t.id
                    )))
                }
                (Some(f), None) | (None, Some(f)) => f,
                (None, None) => {
                    return Err(Error::Scenario(format!(
                        "trojan `{}` has no fine and no uniform_fine is given",
                        t.id
                    )))
                }
            };
            trojans.push(Trojan::new(t.id.clone(), t.damage, fine));
        }
        let spec = GameSpec::new(trojans, self.test_budget).map_err(|e| Error::Scenario(e.to_string()))?;
        let model = self.model.resolve()?;

        let space = spec.strategy_space();
        let (d0, a0) = default_priors(space.num_attacker(), space.num_defender(), spec.test_budget());
        let fp = FpConfig {
            defender_prior: self.fp.sigma0_d.clone().unwrap_or(d0),
            attacker_prior: self.fp.sigma0_a.clone().unwrap_or(a0),
            model,
            convergence_m: self.fp.convergence_m.unwrap_or(DEFAULT_CONVERGENCE_M),
            checkpoint_gap: self.fp.checkpoint_gap.unwrap_or(DEFAULT_CHECKPOINT_GAP),
            max_iterations: self.fp.max_iterations.unwrap_or(DEFAULT_MAX_ITERATIONS),
            record_trace: false,
        };
        fp.validate(&spec.payoff_matrix()).map_err(|e| Error::Scenario(e.to_string()))?;
        let experiment = self.experiment.resolve()?;
        Ok(Scenario {
            spec,
            model,
            fp,
            experiment,
        })
    }
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let file = ScenarioFile::parse(&text).map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
    file.resolve()
}

/// Fully resolved content, in a fixed field order, for hashing.
#[derive(Serialize)]
struct Canonical<'a> {
    trojans: &'a [Trojan],
    test_budget: usize,
    model: &'a BehaviorModel,
    sigma0_d: &'a [f64],
    sigma0_a: &'a [f64],
    convergence_m: f64,
    checkpoint_gap: u64,
    max_iterations: u64,
    experiment: &'a Experiment,
}

impl Scenario {
    /// Hex SHA-256 of the resolved scenario. Spelling out a default gives
    /// the same hash as omitting it.
    pub fn hash(&self) -> String {
        let c = Canonical {
            trojans: self.spec.trojans(),
            test_budget: self.spec.test_budget(),
            model: &self.model,
            sigma0_d: &self.fp.defender_prior,
            sigma0_a: &self.fp.attacker_prior,
            convergence_m: self.fp.convergence_m,
            checkpoint_gap: self.fp.checkpoint_gap,
            max_iterations: self.fp.max_iterations,
            experiment: &self.experiment,
        };
        let json = serde_json::to_string(&c).expect("scenario serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Replaces the behavior model of both the scenario and its learning
    /// configuration.
    pub fn set_model(&mut self, model: BehaviorModel) {
        self.model = model;
        self.fp.model = model;
    }

    /// Sets every trojan's fine to `fine`.
    pub fn set_uniform_fine(&mut self, fine: f64) -> Result<()> {
        self.spec = self.spec.with_uniform_fine(fine)?;
        Ok(())
    }

    /// The case-study game (`V = [1, 2, 4, 12]`, `K = 2`, `F = 8`) with the
    /// given model and experiment.
    pub fn paper_case(model: BehaviorModel, experiment: Experiment) -> Self {
        let spec = GameSpec::paper_case(8.0).expect("valid case study");
        let fp = FpConfig::for_spec(&spec, model);
        Scenario {
            spec,
            model,
            fp,
            experiment,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAPER: &str = r#"{
        "trojans": [
            {"id": "A", "damage": 1}, {"id": "B", "damage": 2},
            {"id": "C", "damage": 4}, {"id": "D", "damage": 12}
        ],
        "uniform_fine": 8,
        "test_budget": 2
    }"#;

    #[test]
    fn minimal_file_gets_defaults() {
        let s = ScenarioFile::parse(PAPER).unwrap().resolve().unwrap();
        assert_eq!(s.spec.damages(), vec![1.0, 2.0, 4.0, 12.0]);
        assert_eq!(s.spec.fines(), vec![8.0; 4]);
        assert_eq!(s.model, BehaviorModel::Eut);
        assert_eq!(s.fp.convergence_m, 1000.0);
        assert_eq!(s.fp.checkpoint_gap, 1000);
        assert_eq!(s.fp.max_iterations, 10_000_000);
        assert_eq!(s.fp.defender_prior, crate::fictitious_play::PAPER_DEFENDER_PRIOR);
        assert_eq!(s.experiment, Experiment::Solve);
    }

    #[test]
    fn k_equal_t_is_rejected() {
        let text = PAPER.replace("\"test_budget\": 2", "\"test_budget\": 4");
        let err = ScenarioFile::parse(&text).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("K < T required"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = PAPER.replace("\"test_budget\"", "\"budget_typo\": 1, \"test_budget\"");
        let err = ScenarioFile::parse(&text).unwrap_err();
        assert!(err.to_string().contains("budget_typo"), "{err}");
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn mode_fields_are_checked() {
        let mut f = ScenarioFile::parse(PAPER).unwrap();
        f.experiment = ExperimentEntry {
            mode: Mode::Solve,
            fines: Some(vec![1.0]),
            ..Default::default()
        };
        assert!(f.resolve().is_err());
        f.experiment = ExperimentEntry {
            mode: Mode::SweepFine,
            fines: Some(vec![2.0, 1.0]),
            ..Default::default()
        };
        assert!(f.resolve().unwrap_err().to_string().contains("increasing"));
        f.experiment = ExperimentEntry {
            mode: Mode::SweepAlpha,
            alphas: Some(vec![0.5, 1.5]),
            ..Default::default()
        };
        assert!(f.resolve().is_err());
        f.experiment = ExperimentEntry {
            mode: Mode::ScenarioPair,
            pair: Some(3),
            ..Default::default()
        };
        assert!(f.resolve().is_err());
    }

    #[test]
    fn default_grids() {
        assert_eq!(default_fine_grid().len(), 12);
        let a = default_alpha_grid();
        assert_eq!(a.len(), 10);
        assert_eq!(a[1], 0.2);
        assert_eq!(a[9], 1.0);
    }

    #[test]
    fn fine_sources_must_not_conflict() {
        let text = PAPER.replace(r#"{"id": "A", "damage": 1}"#, r#"{"id": "A", "damage": 1, "fine": 3}"#);
        assert!(ScenarioFile::parse(&text).unwrap().resolve().is_err());
        let text = PAPER.replace("\"uniform_fine\": 8,", "");
        assert!(ScenarioFile::parse(&text).unwrap().resolve().is_err());
    }

    #[test]
    fn model_entry_validation() {
        let mut f = ScenarioFile::parse(PAPER).unwrap();
        f.model = ModelEntry {
            kind: ModelKind::Pt,
            alpha_a: Some(0.5),
            alpha_d: None,
        };
        assert!(f.resolve().is_err());
        f.model.alpha_d = Some(0.0);
        assert!(f.resolve().is_err());
        f.model.alpha_d = Some(0.5);
        assert_eq!(f.resolve().unwrap().model, BehaviorModel::pt(0.5, 0.5).unwrap());
    }

    #[test]
    fn hash_tracks_semantic_changes_only() {
        let base = ScenarioFile::parse(PAPER).unwrap();
        let h0 = base.resolve().unwrap().hash();
        assert_eq!(h0.len(), 64);

        let mut explicit = base.clone();
        explicit.fp.convergence_m = Some(1000.0);
        explicit.model = ModelEntry::default();
        assert_eq!(explicit.resolve().unwrap().hash(), h0);

        let reformatted = ScenarioFile::parse(&PAPER.replace('\n', " ")).unwrap();
        assert_eq!(reformatted.resolve().unwrap().hash(), h0);

        let mut changed = base.clone();
        changed.uniform_fine = Some(8.5);
        assert_ne!(changed.resolve().unwrap().hash(), h0);
        let mut changed = base.clone();
        changed.fp.checkpoint_gap = Some(500);
        assert_ne!(changed.resolve().unwrap().hash(), h0);
        let mut changed = base;
        changed.trojans[0].id = "Z".into();
        assert_ne!(changed.resolve().unwrap().hash(), h0);
    }
}

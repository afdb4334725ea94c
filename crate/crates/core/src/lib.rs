//! Attacker-defender hardware-trojan detection game.
//!
//! A manufacturer inserts one of `T` trojan types; a testing agency tests for
//! `K` types at once. The crate builds the zero-sum payoff structure, solves
//! for mixed equilibria under expected utility and under prospect theory
//! (Prelec-weighted beliefs), and runs the fine and rationality experiments.
//!
//! - [`game_model`]: instances, strategy spaces, payoffs, utilities.
//! - [`weighting`]: the Prelec probability weighting function.
//! - [`fictitious_play`]: the learning dynamic that finds equilibria.
//! - [`analysis`]: exact solvers, support enumeration oracle, fine thresholds.
//! - [`experiments`]: scenario files, sweeps and CSV tables behind the CLI.

pub mod analysis;
pub mod error;
pub mod experiments;
pub mod fictitious_play;
pub mod game_model;
pub mod linalg;
pub mod weighting;

pub use error::{Error, Result};
pub use fictitious_play::{EquilibriumResult, FpConfig};
pub use game_model::{BehaviorModel, GameSpec, MixedStrategy, PayoffMatrix, Player, Trojan};
pub use weighting::{prelec_inverse, prelec_weight, Prelec, ProbabilityWeighting};

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use trojan_game::experiments::{
    default_alpha_grid, default_fine_grid, load_scenario, run_scenario, run_scenario_pair, run_solve,
    run_sweep_alpha, run_sweep_fine, run_threshold, run_trace, Experiment, ResultTable, Scenario, Vary,
};
use trojan_game::{BehaviorModel, Error, Player, Result};

/// Solve the hardware-trojan attacker-defender game and run its experiments.
///
/// Without `--scenario` the four-trojan case study is used
/// (damages 1, 2, 4, 12; two tests; fine 8). Results are CSV on stdout or
/// in `--out`.
#[derive(Parser)]
#[command(name = "trojan-game", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Equilibrium by learning, indifference equations and (expected utility) support enumeration.
    Solve(Common),
    /// Equilibria over a grid of uniform fines.
    SweepFine {
        #[command(flatten)]
        common: Common,
        /// Comma-separated fines; defaults to the scenario's grid or 1..12.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
    /// Equilibria over a grid of rationality parameters.
    SweepAlpha {
        #[command(flatten)]
        common: Common,
        /// Comma-separated alphas; defaults to the scenario's grid or 0.1..1.0.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long, value_enum)]
        vary: Option<Vary>,
    },
    /// Asymmetric rationality: pair 1 is alpha_d=0.1, alpha_a=0.5; pair 2 swaps them.
    ScenarioPair {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        pair: Option<u8>,
    },
    /// Belief trajectories of both players, one row per checkpoint.
    Trace(Common),
    /// Fine at which the equilibrium value is zero.
    Threshold {
        #[command(flatten)]
        common: Common,
        /// Bisection bracket `lo,hi`.
        #[arg(long, value_delimiter = ',', num_args = 1)]
        bracket: Option<Vec<f64>>,
    },
    /// Run the experiment configured in the scenario file.
    Run(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Eut,
    Pt,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long = "alpha-a")]
    alpha_a: Option<f64>,
    #[arg(long = "alpha-d")]
    alpha_d: Option<f64>,
    /// Uniform fine for every trojan type.
    #[arg(long)]
    fine: Option<f64>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "max-iters")]
    max_iters: Option<u64>,
    /// Convergence tolerance 1/M.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "checkpoint-gap")]
    checkpoint_gap: Option<u64>,
}

impl Common {
    fn scenario(&self) -> Result<Scenario> {
        let mut s = match &self.scenario {
            Some(p) => load_scenario(p)?,
            None => Scenario::paper_case(BehaviorModel::Eut, Experiment::Solve),
        };
        if let Some(f) = self.fine {
            s.set_uniform_fine(f)?;
        }
        let current = s.model;
        let alphas_given = self.alpha_a.is_some() || self.alpha_d.is_some();
        let model = match (self.model, alphas_given) {
            (Some(ModelArg::Eut), true) => {
                return Err(Error::InvalidConfig("--alpha-a/--alpha-d need --model pt".into()))
            }
            (Some(ModelArg::Eut), false) => BehaviorModel::Eut,
            (Some(ModelArg::Pt), _) | (None, true) => BehaviorModel::pt(
                self.alpha_d.unwrap_or(current.alpha(Player::Defender)),
                self.alpha_a.unwrap_or(current.alpha(Player::Attacker)),
            )?,
            (None, false) => current,
        };
        s.set_model(model);
        if let Some(n) = self.max_iters {
            s.fp.max_iterations = n;
        }
        if let Some(t) = self.tol {
            if t.is_nan() || t <= 0.0 {
                return Err(Error::InvalidConfig(format!("--tol must be positive, got {t}")));
            }
            s.fp.convergence_m = 1.0 / t;
        }
        if let Some(g) = self.checkpoint_gap {
            s.fp.checkpoint_gap = g;
        }
        s.fp.validate(&s.spec.payoff_matrix())?;
        Ok(s)
    }

    fn emit(&self, table: &ResultTable) -> Result<()> {
        match &self.out {
            Some(path) => {
                let f = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                let mut w = BufWriter::new(f);
                table.write_csv(&mut w)?;
                w.flush()?;
            }
            None => {
                let stdout = io::stdout();
                table.write_csv(stdout.lock())?;
            }
        }
        Ok(())
    }
}

fn execute(cmd: Command) -> Result<()> {
    let (common, table) = match cmd {
        Command::Solve(c) => {
            let s = c.scenario()?;
            let t = run_solve(&s)?;
            (c, t)
        }
        Command::SweepFine { common, grid } => {
            let s = common.scenario()?;
            let fines = grid
                .or_else(|| match &s.experiment {
                    Experiment::SweepFine { fines } => Some(fines.clone()),
                    _ => None,
                })
                .unwrap_or_else(default_fine_grid);
            check_grid("fine", &fines, |f| f > 0.0 && f.is_finite())?;
            let t = run_sweep_fine(&s, &fines)?;
            (common, t)
        }
        Command::SweepAlpha { common, grid, vary } => {
            let s = common.scenario()?;
            let (g0, v0) = match &s.experiment {
                Experiment::SweepAlpha { alphas, vary } => (Some(alphas.clone()), *vary),
                _ => (None, Vary::Joint),
            };
            let alphas = grid.or(g0).unwrap_or_else(default_alpha_grid);
            check_grid("alpha", &alphas, |a| a > 0.0 && a <= 1.0)?;
            let t = run_sweep_alpha(&s, &alphas, vary.unwrap_or(v0))?;
            (common, t)
        }
        Command::ScenarioPair { common, pair } => {
            let s = common.scenario()?;
            let default = match s.experiment {
                Experiment::ScenarioPair { pair } => pair,
                _ => 1,
            };
            let t = run_scenario_pair(&s, pair.unwrap_or(default))?;
            (common, t)
        }
        Command::Trace(c) => {
            let s = c.scenario()?;
            let t = run_trace(&s)?;
            (c, t)
        }
        Command::Threshold { common, bracket } => {
            let s = common.scenario()?;
            let bracket = match bracket.as_deref() {
                Some([lo, hi]) => (*lo, *hi),
                Some(_) => return Err(Error::InvalidConfig("--bracket takes exactly two values lo,hi".into())),
                None => match s.experiment {
                    Experiment::Threshold { bracket } => bracket,
                    _ => trojan_game::analysis::DEFAULT_FINE_BRACKET,
                },
            };
            if !(bracket.0 > 0.0 && bracket.1 > bracket.0) {
                return Err(Error::InvalidConfig(format!("bad bracket [{}, {}]", bracket.0, bracket.1)));
            }
            let t = run_threshold(&s, bracket)?;
            (common, t)
        }
        Command::Run(c) => {
            let s = c.scenario()?;
            let t = run_scenario(&s)?;
            (c, t)
        }
    };
    common.emit(&table)
}

fn check_grid(name: &str, grid: &[f64], valid: impl Fn(f64) -> bool) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|&x| !valid(x)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(format!(
            "{name} grid must be non-empty, in range and strictly increasing"
        )));
    }
    Ok(())
}

fn fail(kind: &str, message: &str) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message }));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            return fail("usage", e.to_string().trim());
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}

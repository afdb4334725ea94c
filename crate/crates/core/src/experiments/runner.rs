//! Experiment runners. Each one turns a scenario into a [`ResultTable`].
//!
//! Solver failures become `error: ...` entries in the `status` column; only
//! configuration problems abort a run. Sweep rows are computed in parallel
//! and written in grid order.

use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use crate::analysis::{
    attacker_msne_eut, defender_msne_family_eut, eut_equilibrium, fine_threshold, game_value, indifference_residual,
    pt_attacker_msne, support_enumeration_solve, FineThresholdResult, GameValue, Residual, ThresholdOptions,
};
use crate::error::{Error, Result};
use crate::fictitious_play::{self, EquilibriumResult, FpConfig};
use crate::game_model::{max_abs_diff, BehaviorModel, GameSpec, MixedStrategy, Player, StrategySpace};

use super::scenario::{pair_alphas, Experiment, Mode, Scenario, Vary};
use super::table::{Cell, Column, ResultTable};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

const PROB: &str = "probability";
const UTIL: &str = "utility";

fn strategy_columns(space: &StrategySpace) -> Vec<Column> {
    let mut cols: Vec<Column> = space
        .defender
        .iter()
        .map(|d| Column::new(format!("p_d_{}", d.label), PROB))
        .collect();
    cols.extend(space.attacker.iter().map(|a| Column::new(format!("p_a_{a}"), PROB)));
    cols
}

fn strategy_cells(space: &StrategySpace, p_d: Option<&MixedStrategy>, p_a: Option<&MixedStrategy>) -> Vec<Cell> {
    let mut out: Vec<Cell> = match p_d {
        Some(p) => p.probs().iter().map(|&x| Cell::Num(x)).collect(),
        None => vec![Cell::Empty; space.num_defender()],
    };
    match p_a {
        Some(p) => out.extend(p.probs().iter().map(|&x| Cell::Num(x))),
        None => out.extend(vec![Cell::Empty; space.num_attacker()]),
    }
    out
}

fn error_status(e: &Error) -> Cell {
    Cell::Text(format!("error: {}: {e}", e.kind()))
}

fn cols(spec: &[(&str, &str)]) -> Vec<Column> {
    spec.iter().map(|(n, u)| Column::new(*n, *u)).collect()
}

fn alpha_cells(model: &BehaviorModel) -> [Cell; 2] {
    [
        model.alpha(Player::Defender).into(),
        model.alpha(Player::Attacker).into(),
    ]
}

fn fine_cell(spec: &GameSpec) -> Cell {
    spec.uniform_fine().into()
}

fn stamp(table: &mut ResultTable, scenario: &Scenario, mode: Mode) {
    let ts = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse::<u64>().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()));
    table.set_meta("scenario_hash", scenario.hash());
    table.set_meta("tool_version", TOOL_VERSION);
    table.set_meta("generated_unix", ts.to_string());
    table.set_meta(
        "mode",
        serde_json::to_value(mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
    );
}

fn fp_config(scenario: &Scenario, model: BehaviorModel) -> FpConfig {
    FpConfig {
        model,
        ..scenario.fp.clone()
    }
}

fn solve_fp(spec: &GameSpec, cfg: &FpConfig) -> Result<EquilibriumResult> {
    fictitious_play::run(spec, cfg)
}

/// Cells `converged, iterations, value, perceived_d, perceived_a, residual_d, residual_a`.
fn fp_cells(r: &EquilibriumResult) -> Vec<Cell> {
    vec![
        r.converged.into(),
        r.iterations.into(),
        r.value.objective.into(),
        r.value.perceived_d.into(),
        r.value.perceived_a.into(),
        r.residual_d.value().into(),
        r.residual_a.value().into(),
    ]
}

fn pair_cells(value: Option<&GameValue>, residuals: Option<&(Residual, Residual)>) -> Vec<Cell> {
    vec![
        value.map(|v| v.objective).into(),
        value.map(|v| v.perceived_d).into(),
        value.map(|v| v.perceived_a).into(),
        residuals.map(|r| r.0.value()).into(),
        residuals.map(|r| r.1.value()).into(),
    ]
}

/// One row per solver: learning, indifference equations and, under expected
/// utility, support enumeration. `discrepancy` is the largest attacker
/// probability difference from the learning row.
pub fn run_solve(scenario: &Scenario) -> Result<ResultTable> {
    let spec = &scenario.spec;
    let space = spec.strategy_space();
    let model = scenario.model;
    let m_a = spec.payoff_matrix();
    let mut columns = cols(&[
        ("route", ""),
        ("model", ""),
        ("alpha_d", ""),
        ("alpha_a", ""),
        ("fine", UTIL),
        ("status", ""),
        ("converged", ""),
        ("iterations", "count"),
        ("value", UTIL),
        ("perceived_d", UTIL),
        ("perceived_a", UTIL),
        ("residual_d", UTIL),
        ("residual_a", UTIL),
        ("discrepancy", PROB),
    ]);
    columns.extend(strategy_columns(&space));
    let mut table = ResultTable::new(columns);
    let head = |route: &str| -> Vec<Cell> {
        let [ad, aa] = alpha_cells(&model);
        vec![route.into(), model.name().into(), ad, aa, fine_cell(spec)]
    };

    let fp = solve_fp(spec, &scenario.fp);
    let fp_p_a = fp.as_ref().ok().map(|r| r.p_a_star.clone());
    let discrepancy = |p_a: &MixedStrategy| -> Cell { fp_p_a.as_ref().map(|f| max_abs_diff(f.probs(), p_a.probs())).into() };

    let mut row = head("fp");
    match &fp {
        Ok(r) => {
            row.push("ok".into());
            row.extend(fp_cells(r));
            row.push(Cell::Num(0.0));
            row.extend(strategy_cells(&space, Some(&r.p_d_star), Some(&r.p_a_star)));
        }
        Err(e) => {
            row.push(error_status(e));
            row.extend(vec![Cell::Empty; 8]);
            row.extend(strategy_cells(&space, None, None));
        }
    }
    table.push_row(row);

    // Indifference equations.
    let mut row = head("indifference");
    let indiff: Result<(Option<MixedStrategy>, MixedStrategy)> = if model.is_eut() {
        attacker_msne_eut(&m_a).and_then(|p_a| {
            let fam = defender_msne_family_eut(&m_a, &p_a)?;
            Ok((Some(fam.base_point), p_a))
        })
    } else {
        pt_attacker_msne(&m_a, model.alpha(Player::Defender)).map(|p_a| (None, p_a))
    };
    match indiff {
        Ok((p_d, p_a)) => {
            let (value, res) = match &p_d {
                Some(p_d) => (
                    Some(game_value(&m_a, p_d, &p_a, &model)?),
                    Some(indifference_residual(&m_a, p_d, &p_a, &model)?),
                ),
                None => (None, None),
            };
            row.push(if p_d.is_some() { "ok" } else { "attacker_only" }.into());
            row.extend([Cell::Empty, Cell::Empty]);
            row.extend(pair_cells(value.as_ref(), res.as_ref()));
            row.push(discrepancy(&p_a));
            row.extend(strategy_cells(&space, p_d.as_ref(), Some(&p_a)));
        }
        Err(e) => {
            row.push(error_status(&e));
            row.extend(vec![Cell::Empty; 8]);
            row.extend(strategy_cells(&space, None, None));
        }
    }
    table.push_row(row);

    if model.is_eut() {
        let eqs = support_enumeration_solve(&m_a);
        let eq = &eqs[0];
        let value = game_value(&m_a, &eq.p_d, &eq.p_a, &model)?;
        let res = indifference_residual(&m_a, &eq.p_d, &eq.p_a, &model)?;
        let mut row = head("oracle");
        row.push(format!("ok: {} equilibria", eqs.len()).into());
        row.extend([Cell::Empty, Cell::Empty]);
        row.extend(pair_cells(Some(&value), Some(&res)));
        row.push(discrepancy(&eq.p_a));
        row.extend(strategy_cells(&space, Some(&eq.p_d), Some(&eq.p_a)));
        table.push_row(row);
    }
    stamp(&mut table, scenario, Mode::Solve);
    Ok(table)
}

fn models_to_compare(model: BehaviorModel) -> Vec<BehaviorModel> {
    if model.is_eut() {
        vec![model]
    } else {
        vec![BehaviorModel::Eut, model]
    }
}

/// Learning equilibria over a grid of uniform fines. A prospect-theoretic
/// scenario also gets expected-utility rows for comparison. `sign_change` is
/// 1 on the first row of a model whose value has the opposite sign to the
/// previous fine's.
pub fn run_sweep_fine(scenario: &Scenario, fines: &[f64]) -> Result<ResultTable> {
    let space = scenario.spec.strategy_space();
    let mut columns = cols(&[
        ("model", ""),
        ("alpha_d", ""),
        ("alpha_a", ""),
        ("fine", UTIL),
        ("status", ""),
        ("converged", ""),
        ("iterations", "count"),
        ("value_defender", UTIL),
        ("value_attacker", UTIL),
        ("perceived_d", UTIL),
        ("perceived_a", UTIL),
        ("sign_change", ""),
    ]);
    columns.extend(strategy_columns(&space));
    let mut table = ResultTable::new(columns);

    let models = models_to_compare(scenario.model);
    let jobs: Vec<(BehaviorModel, f64)> = models.iter().flat_map(|&m| fines.iter().map(move |&f| (m, f))).collect();
    let results: Vec<Result<EquilibriumResult>> = jobs
        .par_iter()
        .map(|&(m, f)| {
            let spec = scenario.spec.with_uniform_fine(f)?;
            solve_fp(&spec, &fp_config(scenario, m))
        })
        .collect();

    let mut prev: Option<(BehaviorModel, f64)> = None;
    for ((m, f), res) in jobs.iter().zip(&results) {
        let [ad, aa] = alpha_cells(m);
        let mut row = vec![m.name().into(), ad, aa, (*f).into()];
        match res {
            Ok(r) => {
                let v = r.value.objective;
                let crossed = matches!(prev, Some((pm, pv)) if pm == *m && (pv < 0.0) != (v < 0.0));
                prev = Some((*m, v));
                row.extend([
                    "ok".into(),
                    r.converged.into(),
                    r.iterations.into(),
                    v.into(),
                    (-v).into(),
                    r.value.perceived_d.into(),
                    r.value.perceived_a.into(),
                    crossed.into(),
                ]);
                row.extend(strategy_cells(&space, Some(&r.p_d_star), Some(&r.p_a_star)));
            }
            Err(e) => {
                prev = None;
                row.push(error_status(e));
                row.extend(vec![Cell::Empty; 7]);
                row.extend(strategy_cells(&space, None, None));
            }
        }
        table.push_row(row);
    }
    stamp(&mut table, scenario, Mode::SweepFine);
    Ok(table)
}

/// Learning equilibria over a grid of rationality parameters.
pub fn run_sweep_alpha(scenario: &Scenario, alphas: &[f64], vary: Vary) -> Result<ResultTable> {
    let space = scenario.spec.strategy_space();
    let mut columns = cols(&[
        ("vary", ""),
        ("alpha", ""),
        ("alpha_d", ""),
        ("alpha_a", ""),
        ("fine", UTIL),
        ("status", ""),
        ("converged", ""),
        ("iterations", "count"),
        ("value", UTIL),
        ("perceived_d", UTIL),
        ("perceived_a", UTIL),
        ("residual_d", UTIL),
        ("residual_a", UTIL),
    ]);
    columns.extend(strategy_columns(&space));
    let mut table = ResultTable::new(columns);

    let results: Vec<Result<EquilibriumResult>> = alphas
        .par_iter()
        .map(|&a| {
            let (ad, aa) = vary.alphas(a);
            let model = BehaviorModel::pt(ad, aa)?;
            solve_fp(&scenario.spec, &fp_config(scenario, model))
        })
        .collect();
    for (&a, res) in alphas.iter().zip(&results) {
        let (ad, aa) = vary.alphas(a);
        let mut row = vec![vary.name().into(), a.into(), ad.into(), aa.into(), fine_cell(&scenario.spec)];
        match res {
            Ok(r) => {
                row.push("ok".into());
                row.extend(fp_cells(r));
                row.extend(strategy_cells(&space, Some(&r.p_d_star), Some(&r.p_a_star)));
            }
            Err(e) => {
                row.push(error_status(e));
                row.extend(vec![Cell::Empty; 7]);
                row.extend(strategy_cells(&space, None, None));
            }
        }
        table.push_row(row);
    }
    stamp(&mut table, scenario, Mode::SweepAlpha);
    Ok(table)
}

/// One of the two asymmetric-rationality scenarios: pair 1 has
/// `α_d = 0.1, α_a = 0.5`, pair 2 has `α_d = 0.5, α_a = 0.1`.
/// `change_vs_eut` is `(value - eut_value) / eut_value`.
pub fn run_scenario_pair(scenario: &Scenario, pair: u8) -> Result<ResultTable> {
    let (ad, aa) = pair_alphas(pair)?;
    let model = BehaviorModel::pt(ad, aa)?;
    let space = scenario.spec.strategy_space();
    let mut columns = cols(&[
        ("pair", ""),
        ("alpha_d", ""),
        ("alpha_a", ""),
        ("fine", UTIL),
        ("status", ""),
        ("converged", ""),
        ("iterations", "count"),
        ("value", UTIL),
        ("perceived_d", UTIL),
        ("perceived_a", UTIL),
        ("residual_d", UTIL),
        ("residual_a", UTIL),
        ("eut_value", UTIL),
        ("change_vs_eut", ""),
    ]);
    columns.extend(strategy_columns(&space));
    let mut table = ResultTable::new(columns);

    let eut_value = eut_equilibrium(&scenario.spec.payoff_matrix()).value;
    let mut row = vec![f64::from(pair).into(), ad.into(), aa.into(), fine_cell(&scenario.spec)];
    match solve_fp(&scenario.spec, &fp_config(scenario, model)) {
        Ok(r) => {
            row.push("ok".into());
            row.extend(fp_cells(&r));
            row.push(eut_value.into());
            row.push(((r.value.objective - eut_value) / eut_value).into());
            row.extend(strategy_cells(&space, Some(&r.p_d_star), Some(&r.p_a_star)));
        }
        Err(e) => {
            row.push(error_status(&e));
            row.extend(vec![Cell::Empty; 7]);
            row.push(eut_value.into());
            row.push(Cell::Empty);
            row.extend(strategy_cells(&space, None, None));
        }
    }
    table.push_row(row);
    stamp(&mut table, scenario, Mode::ScenarioPair);
    Ok(table)
}

/// Beliefs of both players every checkpoint gap, plus the final iteration.
pub fn run_trace(scenario: &Scenario) -> Result<ResultTable> {
    let space = scenario.spec.strategy_space();
    let mut columns = cols(&[("iteration", "count")]);
    columns.extend(strategy_columns(&space));
    let mut table = ResultTable::new(columns);
    let cfg = FpConfig {
        record_trace: true,
        ..scenario.fp.clone()
    };
    let r = solve_fp(&scenario.spec, &cfg)?;
    for t in r.trace.as_deref().unwrap_or_default() {
        let mut row: Vec<Cell> = vec![t.iteration.into()];
        row.extend(t.p_d.iter().chain(&t.p_a).map(|&x| Cell::Num(x)));
        table.push_row(row);
    }
    stamp(&mut table, scenario, Mode::Trace);
    table.set_meta("converged", r.converged.to_string());
    table.set_meta("iterations", r.iterations.to_string());
    Ok(table)
}

/// Zero-value fine for expected utility and, for a prospect-theoretic
/// scenario, for its model too.
pub fn run_threshold(scenario: &Scenario, bracket: (f64, f64)) -> Result<ResultTable> {
    let space = scenario.spec.strategy_space();
    let mut columns = cols(&[
        ("model", ""),
        ("alpha_d", ""),
        ("alpha_a", ""),
        ("status", ""),
        ("f_value", UTIL),
        ("bracket_lo", UTIL),
        ("bracket_hi", UTIL),
        ("value", UTIL),
        ("perceived_d", UTIL),
        ("perceived_a", UTIL),
        ("closed_form", UTIL),
        ("ratio_form", UTIL),
        ("probes", "count"),
    ]);
    columns.extend(strategy_columns(&space));
    let mut table = ResultTable::new(columns);

    let models = models_to_compare(scenario.model);
    let results: Vec<Result<FineThresholdResult>> = models
        .par_iter()
        .map(|m| {
            let opts = ThresholdOptions {
                bracket,
                fp: Some(fp_config(scenario, *m)),
                ..Default::default()
            };
            fine_threshold(&scenario.spec, m, &opts)
        })
        .collect();
    for (m, res) in models.iter().zip(&results) {
        let [ad, aa] = alpha_cells(m);
        let mut row = vec![m.name().into(), ad, aa];
        match res {
            Ok(r) => {
                row.extend([
                    "ok".into(),
                    r.f_value.into(),
                    r.bracket.0.into(),
                    r.bracket.1.into(),
                    r.value_at_threshold.objective.into(),
                    r.value_at_threshold.perceived_d.into(),
                    r.value_at_threshold.perceived_a.into(),
                    r.closed_form.into(),
                    r.ratio_form.into(),
                    (r.probes as u64).into(),
                ]);
                row.extend(strategy_cells(&space, Some(&r.p_d_at_threshold), Some(&r.p_a_at_threshold)));
            }
            Err(e) => {
                row.push(error_status(e));
                row.extend([Cell::Empty, bracket.0.into(), bracket.1.into()]);
                row.extend(vec![Cell::Empty; 6]);
                row.extend(strategy_cells(&space, None, None));
            }
        }
        table.push_row(row);
    }
    stamp(&mut table, scenario, Mode::Threshold);
    Ok(table)
}

/// Runs the scenario's configured experiment.
pub fn run_scenario(scenario: &Scenario) -> Result<ResultTable> {
    match &scenario.experiment {
        Experiment::Solve => run_solve(scenario),
        Experiment::SweepFine { fines } => run_sweep_fine(scenario, fines),
        Experiment::SweepAlpha { alphas, vary } => run_sweep_alpha(scenario, alphas, *vary),
        Experiment::Threshold { bracket } => run_threshold(scenario, *bracket),
        Experiment::Trace => run_trace(scenario),
        Experiment::ScenarioPair { pair } => run_scenario_pair(scenario, *pair),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(model: BehaviorModel, experiment: Experiment) -> Scenario {
        let mut s = Scenario::paper_case(model, experiment);
        s.fp.max_iterations = 50_000;
        s
    }

    #[test]
    fn solve_table_layout() {
        let t = run_solve(&quick(BehaviorModel::Eut, Experiment::Solve)).unwrap();
        assert_eq!(t.rows.len(), 3);
        assert_eq!(&t.column_names()[..3], &["route", "model", "alpha_d"]);
        assert!(t.column_names().contains(&"p_d_CD"));
        assert!(t.column_names().contains(&"p_a_D"));
        let oracle = t.get_f64(2, "value").unwrap();
        assert!((oracle - 68.0 / 31.0).abs() < 1e-9);
        assert_eq!(t.meta("scenario_hash").unwrap().len(), 64);
        assert_eq!(t.meta("mode"), Some("solve"));
    }

    #[test]
    fn pt_solve_has_attacker_only_indifference_row() {
        let t = run_solve(&quick(BehaviorModel::pt(0.5, 0.5).unwrap(), Experiment::Solve)).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.get(1, "status").unwrap().as_str(), Some("attacker_only"));
        assert_eq!(t.get(1, "p_d_AB"), Some(&Cell::Empty));
    }

    #[test]
    fn sweep_rows_follow_grid_order() {
        let s = quick(BehaviorModel::pt(0.5, 0.5).unwrap(), Experiment::Solve);
        let t = run_sweep_fine(&s, &[1.0, 2.0, 6.0]).unwrap();
        assert_eq!(t.rows.len(), 6);
        let fines: Vec<f64> = (0..6).map(|i| t.get_f64(i, "fine").unwrap()).collect();
        assert_eq!(fines, vec![1.0, 2.0, 6.0, 1.0, 2.0, 6.0]);
        assert_eq!(t.get(0, "model").unwrap().as_str(), Some("eut"));
        assert_eq!(t.get(3, "model").unwrap().as_str(), Some("pt"));
        // EUT value crosses zero between 2 and 6
        assert_eq!(t.get_f64(2, "sign_change"), Some(1.0));
        assert_eq!(t.get_f64(1, "sign_change"), Some(0.0));
    }

    #[test]
    fn alpha_sweep_sets_parameters() {
        let s = quick(BehaviorModel::Eut, Experiment::Solve);
        let t = run_sweep_alpha(&s, &[0.4, 0.8], Vary::AttackerOnly).unwrap();
        assert_eq!(t.get_f64(0, "alpha_d"), Some(1.0));
        assert_eq!(t.get_f64(1, "alpha_a"), Some(0.8));
        let t = run_sweep_alpha(&s, &[0.4], Vary::DefenderOnly).unwrap();
        assert_eq!(t.get_f64(0, "alpha_a"), Some(1.0));
        assert_eq!(t.get_f64(0, "alpha_d"), Some(0.4));
    }

    #[test]
    fn trace_row_count() {
        let mut s = quick(BehaviorModel::Eut, Experiment::Trace);
        s.fp.max_iterations = 12_345;
        s.fp.convergence_m = 1e9;
        let t = run_trace(&s).unwrap();
        assert_eq!(t.rows.len(), 13);
        assert_eq!(t.get_f64(12, "iteration"), Some(12_345.0));
        assert_eq!(t.meta("iterations"), Some("12345"));
    }

    #[test]
    fn errors_land_in_status_column() {
        let s = quick(BehaviorModel::Eut, Experiment::Solve);
        let t = run_threshold(&s, (5.0, 10.0)).unwrap();
        let status = t.get(0, "status").unwrap().as_str().unwrap();
        assert!(status.starts_with("error: no_root_in_bracket"), "{status}");
    }

    #[test]
    fn scenario_pair_two_reaches_the_fine() {
        let mut s = quick(BehaviorModel::Eut, Experiment::ScenarioPair { pair: 2 });
        s.fp.max_iterations = 200_000;
        let t = run_scenario(&s).unwrap();
        assert!((t.get_f64(0, "value").unwrap() - 8.0).abs() < 0.2);
        assert!(run_scenario_pair(&s, 3).is_err());
    }
}

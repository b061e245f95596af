//! Per-mode experiment execution.
//!
//! Every runner writes `<out>/trace.csv` and `<out>/summary.json` and
//! returns the process exit code: 0 when the mode's convergence or
//! pass criteria are met, 2 when the run completed without meeting
//! them. Errors bubble up and map to exit code 1 in `main`.

use std::path::Path;

use serde_json::{json, Map, Value};

use lqmf::drifted::{self, InterceptPolicy};
use lqmf::lqr::{self, GainPolicy, GdOptions, TraceRecord};
use lqmf::mfc::{self, MfcPolicy};
use lqmf::mfg::{self, InnerSchedule, MeanFieldState, MfgOptions};
use lqmf::sim;

use crate::config::{ExperimentConfig, Mode, ModelSpec};
use crate::output::{fmt_float, log_gap, matrix_json, vector_json, write_csv, write_summary};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    Solver(#[from] lqmf::Error),
    #[error("cannot write outputs: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
}

/// Scheduling override from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScheduleChoice {
    #[default]
    Fixed,
    Accuracy,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOverrides {
    pub schedule: ScheduleChoice,
    pub backtracking: bool,
    pub seed: Option<u64>,
}

/// Default gap threshold for declaring convergence in the descent
/// modes.
const DEFAULT_GAP_TOL: f64 = 1e-6;

/// Runs the experiment under `mode` (the command-line mode, which may
/// be `validate` or `check` on top of any compatible config).
pub fn run(
    cfg: &ExperimentConfig,
    mode: Mode,
    out_dir: &Path,
    overrides: &RunOverrides,
) -> Result<i32, RunError> {
    std::fs::create_dir_all(out_dir)?;
    match mode {
        Mode::Lqr => run_lqr(cfg, out_dir, overrides),
        Mode::Drifted => run_drifted(cfg, out_dir, overrides),
        Mode::Mfc => run_mfc(cfg, out_dir, overrides),
        Mode::Mfg => run_mfg(cfg, out_dir, overrides),
        Mode::Validate => run_validate(cfg, out_dir, overrides),
        Mode::Check => run_check(cfg, out_dir),
    }
}

fn descent_rows(records: &[TraceRecord]) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| {
            vec![
                r.iter.to_string(),
                fmt_float(r.cost),
                fmt_float(r.gap),
                fmt_float(log_gap(r.gap)),
                fmt_float(r.grad_norm),
            ]
        })
        .collect()
}

const DESCENT_HEADER: [&str; 5] = ["iter", "cost", "gap", "log_gap", "grad_norm"];

fn gd_options(cfg: &ExperimentConfig, overrides: &RunOverrides) -> GdOptions {
    let mut opts = GdOptions::new(cfg.eta, cfg.n_iters);
    opts.gap_tol = cfg.eps.unwrap_or(DEFAULT_GAP_TOL);
    opts.backtracking = overrides.backtracking;
    opts
}

fn run_lqr(cfg: &ExperimentConfig, out_dir: &Path, overrides: &RunOverrides) -> Result<i32, RunError> {
    let ModelSpec::Plain(model) = &cfg.model else {
        return Err(RunError::Invalid("lqr mode needs a plain model".into()));
    };
    let (care, j_star) = model.optimal()?;
    let trace =
        lqr::run_policy_gradient_with(model, &GainPolicy::new(cfg.init_gain.clone()), &gd_options(cfg, overrides))?;

    write_csv(&out_dir.join("trace.csv"), &DESCENT_HEADER, &descent_rows(&trace.records))?;
    let final_record = trace.records.last().expect("nonempty trace");
    let mut summary = Map::new();
    summary.insert("mode".into(), json!("lqr"));
    summary.insert("converged".into(), json!(trace.converged));
    summary.insert("final_gain".into(), matrix_json(&trace.final_policy.k));
    summary.insert("final_cost".into(), json!(final_record.cost));
    summary.insert("final_gap".into(), json!(final_record.gap));
    summary.insert("optimal_gain".into(), matrix_json(&care.k_star));
    summary.insert("optimal_value_matrix".into(), matrix_json(&care.p_star));
    summary.insert("optimal_cost".into(), json!(j_star));
    summary.insert("iterations".into(), json!(cfg.n_iters));
    summary.insert("eta".into(), json!(cfg.eta));
    write_summary(&out_dir.join("summary.json"), &Value::Object(summary))?;
    Ok(if trace.converged { 0 } else { 2 })
}

fn run_drifted(cfg: &ExperimentConfig, out_dir: &Path, overrides: &RunOverrides) -> Result<i32, RunError> {
    let ModelSpec::Drifted(model) = &cfg.model else {
        return Err(RunError::Invalid("drifted mode needs a model with a drift vector".into()));
    };
    let (care, j1_star) = model.base.optimal()?;
    let (trace, policy, bounds) =
        drifted::run_drifted_pg_with(model, &GainPolicy::new(cfg.init_gain.clone()), &gd_options(cfg, overrides))?;

    // total cost column: intercept-free trace cost plus the
    // gain-independent optimal intercept cost
    let b_star = drifted::optimal_intercept(model, &GainPolicy::new(care.k_star.clone()))?;
    let opt_policy = InterceptPolicy::new(care.k_star.clone(), b_star.clone());
    let stationary = drifted::cost_decomposition(model, &opt_policy)?;
    let j2_star = stationary.j2;
    let rows: Vec<Vec<String>> = trace
        .records
        .iter()
        .map(|r| {
            vec![
                r.iter.to_string(),
                fmt_float(r.cost + j2_star),
                fmt_float(r.gap),
                fmt_float(log_gap(r.gap)),
                fmt_float(r.grad_norm),
            ]
        })
        .collect();
    write_csv(&out_dir.join("trace.csv"), &DESCENT_HEADER, &rows)?;

    let final_record = trace.records.last().expect("nonempty trace");
    let mut summary = Map::new();
    summary.insert("mode".into(), json!("drifted"));
    summary.insert("converged".into(), json!(trace.converged));
    summary.insert("final_gain".into(), matrix_json(&policy.k));
    summary.insert("final_intercept".into(), vector_json(&policy.b));
    summary.insert("final_gap".into(), json!(final_record.gap));
    summary.insert("optimal_gain".into(), matrix_json(&care.k_star));
    summary.insert("optimal_intercept".into(), vector_json(&b_star));
    summary.insert("optimal_value_matrix".into(), matrix_json(&care.p_star));
    summary.insert("optimal_cost".into(), json!(j1_star + j2_star));
    summary.insert("stationary_mean".into(), vector_json(&stationary.mean));
    summary.insert("gain_error_bound".into(), json!(bounds.gain_error));
    summary.insert("intercept_error_bound".into(), json!(bounds.intercept_error));
    summary.insert("achieved_gap".into(), json!(bounds.achieved_gap));
    write_summary(&out_dir.join("summary.json"), &Value::Object(summary))?;
    Ok(if trace.converged { 0 } else { 2 })
}

fn run_mfc(cfg: &ExperimentConfig, out_dir: &Path, overrides: &RunOverrides) -> Result<i32, RunError> {
    let ModelSpec::MeanField(model) = &cfg.model else {
        return Err(RunError::Invalid("mfc mode needs a mean-field model".into()));
    };
    let (pi_star, j_star) = mfc::mfc_optimal(model)?;
    let pi0 = MfcPolicy::new(cfg.init_gain.clone(), cfg.init_mean_gain.clone());
    let trace = mfc::run_mfc_pg_with(model, &pi0, &gd_options(cfg, overrides))?;

    write_csv(&out_dir.join("trace.csv"), &DESCENT_HEADER, &descent_rows(&trace.records))?;
    let final_record = trace.records.last().expect("nonempty trace");
    let mut summary = Map::new();
    summary.insert("mode".into(), json!("mfc"));
    summary.insert("converged".into(), json!(trace.converged));
    summary.insert("final_deviation_gain".into(), matrix_json(&trace.final_policy.k));
    summary.insert("final_mean_gain".into(), matrix_json(&trace.final_policy.l));
    summary.insert("final_cost".into(), json!(final_record.cost));
    summary.insert("final_gap".into(), json!(final_record.gap));
    summary.insert("optimal_deviation_gain".into(), matrix_json(&pi_star.k));
    summary.insert("optimal_mean_gain".into(), matrix_json(&pi_star.l));
    summary.insert("optimal_cost".into(), json!(j_star));
    let (deviation, mean) = mfc::decoupled_blocks(model)?;
    summary.insert("deviation_value_matrix".into(), matrix_json(&deviation.optimal()?.0.p_star));
    summary.insert("mean_value_matrix".into(), matrix_json(&mean.optimal()?.0.p_star));
    summary.insert("iterations".into(), json!(cfg.n_iters));
    summary.insert("eta".into(), json!(cfg.eta));
    write_summary(&out_dir.join("summary.json"), &Value::Object(summary))?;
    Ok(if trace.converged { 0 } else { 2 })
}

fn run_mfg(cfg: &ExperimentConfig, out_dir: &Path, overrides: &RunOverrides) -> Result<i32, RunError> {
    let ModelSpec::MeanField(model) = &cfg.model else {
        return Err(RunError::Invalid("mfg mode needs a mean-field model".into()));
    };
    let schedule = match overrides.schedule {
        ScheduleChoice::Fixed => InnerSchedule::FixedCount(cfg.inner_iters),
        ScheduleChoice::Accuracy => {
            let eps = cfg.eps.ok_or_else(|| {
                RunError::Invalid("the accuracy schedule needs `eps` in the config".into())
            })?;
            InnerSchedule::Accuracy { eps }
        }
    };
    let opts = MfgOptions {
        eta: cfg.eta,
        outer_iters: cfg.outer_iters,
        schedule,
        include_cost_constant: false,
    };
    let mu0 = MeanFieldState::new(cfg.init_mu_x.clone(), cfg.init_mu_u.clone());
    let pi0 = InterceptPolicy::new(cfg.init_gain.clone(), cfg.init_intercept.clone());
    let trace = mfg::solve_mfg(model, &mu0, &pi0, &opts)?;
    if !trace.contractive {
        eprintln!(
            "warning: contraction modulus L0 = {:.6} >= 1; the fixed-point iteration may diverge",
            trace.l0
        );
    }

    // equilibrium references from the direct affine solve
    let mu_star = mfg::nash_fixed_point(model)?;
    let pi_star = mfg::lambda1(model, &mu_star)?;
    let (lifted_star, _) = mfg::lift(model, &mu_star)?;
    let j_star = drifted::cost_decomposition(&lifted_star, &pi_star)?.total;
    let consts = mfg::lipschitz_constants(model, None)?;

    let header = [
        "s",
        "inner_iters",
        "eps_s",
        "j_mu_s",
        "gap_to_jstar",
        "log_gap",
        "nash_residual_mu",
        "nash_residual_policy",
    ];
    let rows: Vec<Vec<String>> = trace
        .outer_records
        .iter()
        .map(|r| {
            vec![
                r.s.to_string(),
                r.inner_iters.to_string(),
                r.eps_s.map(fmt_float).unwrap_or_default(),
                fmt_float(r.cost),
                fmt_float(r.cost - j_star),
                fmt_float(log_gap(r.cost - j_star)),
                fmt_float(r.nash_residual_mu),
                fmt_float(r.nash_residual_policy),
            ]
        })
        .collect();
    write_csv(&out_dir.join("trace.csv"), &header, &rows)?;

    let final_record = trace.outer_records.last().expect("nonempty trace");
    let converged = match cfg.eps {
        Some(eps) => {
            trace.final_mu.distance(&mu_star) <= eps
                && (&trace.final_policy.k - &pi_star.k).norm() <= eps
                && (&trace.final_policy.b - &pi_star.b).norm() <= (1.0 + consts.l1) * eps
        }
        None => final_record.nash_residual_mu <= DEFAULT_GAP_TOL,
    };

    let mut summary = Map::new();
    summary.insert("mode".into(), json!("mfg"));
    summary.insert("converged".into(), json!(converged));
    summary.insert("final_gain".into(), matrix_json(&trace.final_policy.k));
    summary.insert("final_intercept".into(), vector_json(&trace.final_policy.b));
    summary.insert("final_mu_x".into(), vector_json(&trace.final_mu.mean_x));
    summary.insert("final_mu_u".into(), vector_json(&trace.final_mu.mean_u));
    summary.insert("final_cost".into(), json!(final_record.cost));
    summary.insert("final_gap".into(), json!(final_record.cost - j_star));
    summary.insert("nash_residual_mu".into(), json!(final_record.nash_residual_mu));
    summary.insert("nash_residual_policy".into(), json!(final_record.nash_residual_policy));
    summary.insert("equilibrium_cost".into(), json!(j_star));
    summary.insert("equilibrium_mu_x".into(), vector_json(&mu_star.mean_x));
    summary.insert("equilibrium_mu_u".into(), vector_json(&mu_star.mean_u));
    summary.insert("equilibrium_gain".into(), matrix_json(&pi_star.k));
    summary.insert("equilibrium_intercept".into(), vector_json(&pi_star.b));
    summary.insert(
        "optimal_value_matrix".into(),
        matrix_json(&model.base.optimal()?.0.p_star),
    );
    summary.insert("l0".into(), json!(consts.l0));
    summary.insert("l1".into(), json!(consts.l1));
    summary.insert("l2".into(), json!(consts.l2));
    summary.insert("l3".into(), json!(consts.l3));
    summary.insert("eta".into(), json!(cfg.eta));
    summary.insert("outer_iterations".into(), json!(cfg.outer_iters));
    write_summary(&out_dir.join("summary.json"), &Value::Object(summary))?;
    Ok(if converged { 0 } else { 2 })
}

fn run_validate(cfg: &ExperimentConfig, out_dir: &Path, overrides: &RunOverrides) -> Result<i32, RunError> {
    let mut sim_cfg = cfg
        .sim
        .clone()
        .ok_or_else(|| RunError::Invalid("validate mode needs a `sim` block".into()))?;
    if let Some(seed) = overrides.seed {
        sim_cfg.seed = seed;
    }

    let (label, report): (&str, sim::ValidationReport) = match &cfg.model {
        ModelSpec::Plain(model) => (
            "lqr",
            sim::empirical_vs_analytic_lqr(model, &GainPolicy::new(cfg.init_gain.clone()), &sim_cfg)?,
        ),
        ModelSpec::Drifted(model) => {
            let policy = InterceptPolicy::new(cfg.init_gain.clone(), cfg.init_intercept.clone());
            ("drifted", sim::empirical_vs_analytic_drifted(model, &policy, &sim_cfg)?)
        }
        ModelSpec::MeanField(model) => {
            let policy = if cfg.has_init_policy {
                MfcPolicy::new(cfg.init_gain.clone(), cfg.init_mean_gain.clone())
            } else {
                mfc::mfc_optimal(model)?.0
            };
            ("mfc", sim::empirical_vs_analytic_mfc(model, &policy, &sim_cfg)?)
        }
    };

    let header = ["check", "analytic", "empirical", "std_error", "bias_allowance", "pass"];
    let rows = vec![vec![
        format!("{label}_ergodic_cost"),
        fmt_float(report.analytic_cost),
        fmt_float(report.empirical_cost),
        fmt_float(report.std_error),
        fmt_float(report.bias_allowance),
        report.pass.to_string(),
    ]];
    write_csv(&out_dir.join("trace.csv"), &header, &rows)?;

    let mut summary = Map::new();
    summary.insert("mode".into(), json!("validate"));
    summary.insert("check".into(), json!(format!("{label}_ergodic_cost")));
    summary.insert("analytic_cost".into(), json!(report.analytic_cost));
    summary.insert("empirical_cost".into(), json!(report.empirical_cost));
    summary.insert("std_error".into(), json!(report.std_error));
    summary.insert("bias_allowance".into(), json!(report.bias_allowance));
    summary.insert("pass".into(), json!(report.pass));
    summary.insert("seed".into(), json!(sim_cfg.seed));
    write_summary(&out_dir.join("summary.json"), &Value::Object(summary))?;
    Ok(if report.pass { 0 } else { 2 })
}

fn run_check(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32, RunError> {
    let ModelSpec::MeanField(model) = &cfg.model else {
        return Err(RunError::Invalid("check mode needs a mean-field model".into()));
    };
    let report = mfg::check_assumptions(model);
    let constants = mfg::lipschitz_constants(model, None).ok();

    let mut summary = Map::new();
    summary.insert("mode".into(), json!("check"));
    summary.insert("pass".into(), json!(report.passed()));
    summary.insert("care_solvable".into(), json!(report.care_solvable));
    summary.insert("p_star_positive_definite".into(), json!(report.p_star_positive_definite));
    summary.insert("contractive".into(), json!(report.contractive));
    if let Some(l0) = report.l0 {
        summary.insert("l0".into(), json!(l0));
    }
    if let Some(c) = &constants {
        summary.insert("l1".into(), json!(c.l1));
        summary.insert("l2".into(), json!(c.l2));
        summary.insert("l3".into(), json!(c.l3));
    }
    if let Some(failure) = &report.failure {
        summary.insert("failure".into(), json!(failure));
    }
    write_summary(&out_dir.join("summary.json"), &Value::Object(summary))?;
    Ok(if report.passed() { 0 } else { 2 })
}

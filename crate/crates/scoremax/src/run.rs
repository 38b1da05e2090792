//! Dispatch of a parsed configuration to the solver and the writers.

use std::path::Path;

use scoremax_core::agent::{best_response, BestResponse};
use scoremax_core::contracts::{check_ic, VShapedParams};
use scoremax_core::model::{BeliefSystem, EnvironmentSpec};
use scoremax_core::optimizer::{optimal_r1_analytic, Mode, SolveOptions, SolvedContract};
use serde::Serialize;
use serde_json::json;

use crate::config::{RunConfig, RunMode};
use crate::formats::{
    contract_rows, output_path, read_contract_csv, write_beliefs_csv, write_contract_csv,
    write_json, write_table, write_value_csv, ErrorReport, FormatError, LoadedContract, SolveReportJson,
};
use crate::scan::{solve_parallel, thread_pool};
use crate::sweep::{self, SweepError};
use crate::verify::{bundled_fixtures, load_fixtures, run_suite, FixtureError};

/// Step of the `r1` grid in the analytic curve.
pub const CURVE_STEP: f64 = 0.01;

/// Errors that prevent a run from writing its report.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("mode {0} needs an environment")]
    NoEnvironment(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    SolverFailure,
    VerifyFailure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::SolverFailure => 1,
            Status::VerifyFailure => 2,
        }
    }
}

/// Runs the configured mode. `fixtures` replaces the bundled fixture set in
/// verify mode.
pub fn run(config: &RunConfig, fixtures: Option<&Path>) -> Result<Status, RunError> {
    let opts = solve_options(config);
    let env = || config.environment.ok_or(RunError::NoEnvironment(config.mode.as_str()));
    match config.mode {
        RunMode::SolveDynamic => run_solve(config, env()?, Mode::Dynamic, &opts),
        RunMode::SolveStatic => run_solve(config, env()?, Mode::Static, &opts),
        RunMode::BestResponse => run_best_response(config, env()?),
        RunMode::Analytic => run_analytic(config, env()?),
        RunMode::Verify => run_verify(config, fixtures, &opts),
        RunMode::Sweep => run_sweep(config, env()?, &opts),
    }
}

pub fn solve_options(config: &RunConfig) -> SolveOptions {
    let mut opts = SolveOptions::default();
    opts.lp.tol = config.tol;
    opts
}

fn report_path(config: &RunConfig) -> std::path::PathBuf {
    output_path(&config.out, "report.json")
}

fn fail(config: &RunConfig, error: impl ToString) -> Result<Status, RunError> {
    let report = ErrorReport { mode: config.mode.as_str().into(), error: error.to_string() };
    write_json(&report_path(config), &report)?;
    Ok(Status::SolverFailure)
}

fn write_agent_files(config: &RunConfig, beliefs: &BeliefSystem, br: &BestResponse) -> Result<(), FormatError> {
    write_beliefs_csv(&output_path(&config.out, "beliefs.csv"), beliefs)?;
    write_value_csv(&output_path(&config.out, "value.csv"), br)
}

fn run_solve(config: &RunConfig, env: EnvironmentSpec, mode: Mode, opts: &SolveOptions) -> Result<Status, RunError> {
    let beliefs = BeliefSystem::new(env).expect("validated environment");
    let report = match thread_pool().install(|| solve_parallel(&beliefs, mode, opts)) {
        Ok(r) => r,
        Err(e) => return fail(config, e),
    };
    write_json(&report_path(config), &SolveReportJson::from(&report))?;
    write_contract_csv(&output_path(&config.out, "contract.csv"), &contract_rows(&report.contract))?;
    let br = match &report.contract {
        SolvedContract::Menu(c) => best_response(&beliefs, c),
        SolvedContract::Static(r) => best_response(&beliefs, r),
    };
    write_agent_files(config, &beliefs, &br)?;
    Ok(Status::Success)
}

#[derive(Serialize)]
struct BestResponseReport {
    mode: &'static str,
    contract: &'static str,
    tau_star: usize,
    stopping_belief: f64,
    /// `None` for static rules, which are incentive compatible by construction.
    ic_violations: Option<usize>,
}

fn run_best_response(config: &RunConfig, env: EnvironmentSpec) -> Result<Status, RunError> {
    let beliefs = BeliefSystem::new(env).expect("validated environment");
    let path = config.contract_path.as_deref().expect("validated config");
    let (kind, br, ic) = match read_contract_csv(path)? {
        LoadedContract::Menu(c) => match check_ic(&c, &beliefs) {
            Ok(v) => ("menu", best_response(&beliefs, &c), Some(v.len())),
            Err(e) => return fail(config, e),
        },
        LoadedContract::Static(r) => ("static", best_response(&beliefs, &r), None),
    };
    let report = BestResponseReport {
        mode: RunMode::BestResponse.as_str(),
        contract: kind,
        tau_star: br.tau_star,
        stopping_belief: beliefs.no_info(br.tau_star),
        ic_violations: ic,
    };
    write_json(&report_path(config), &report)?;
    write_agent_files(config, &beliefs, &br)?;
    Ok(Status::Success)
}

/// Continuous-time solution for perfect good news, checked against the
/// discrete best response to the same rule.
fn run_analytic(config: &RunConfig, env: EnvironmentSpec) -> Result<Status, RunError> {
    if !env.classify().perfect_learning {
        return fail(config, "analytic mode needs perfect good-news learning (g1 > 0, all other rates 0)");
    }
    let beliefs = BeliefSystem::new(env).expect("validated environment");
    let lambda = env.lambda.g1;
    let horizon = env.periods as f64 * env.delta;
    let sol = match optimal_r1_analytic(env.cost, lambda, env.prior, horizon) {
        Ok(s) => s,
        Err(e) => return fail(config, e),
    };
    let discrete = |r1: f64| {
        let p = VShapedParams::new(1.0, r1).expect("r1 in (0, 1]");
        best_response(&beliefs, &p.rule())
    };
    let (tau, mu) = match sol.r1_opt {
        Some(r1) => {
            let br = discrete(r1);
            (Some(br.tau_star), Some(beliefs.no_info(br.tau_star)))
        }
        None => (None, None),
    };
    let report = json!({
        "mode": RunMode::Analytic.as_str(),
        "r1_opt": sol.r1_opt,
        "mu_star": sol.mu_star,
        "mu_star_star": sol.mu_star_star,
        "r_t": sol.r_t,
        "stopping_belief": sol.stopping_belief(),
        "tau_discrete": tau,
        "stopping_belief_discrete": mu,
    });
    write_json(&report_path(config), &report)?;

    let header = ["r1", "mu_lower", "mu_upper", "tau_discrete"].map(String::from);
    let steps = (1.0 / CURVE_STEP).round() as usize;
    let mut rows = Vec::with_capacity(steps);
    for i in 1..=steps {
        let r1 = i as f64 * CURVE_STEP;
        let upper = match sol.mu_upper(r1) {
            Ok(u) => u.map(|u| u.to_string()).unwrap_or_default(),
            Err(e) => return fail(config, e),
        };
        rows.push(vec![r1.to_string(), sol.mu_lower(r1).to_string(), upper, discrete(r1).tau_star.to_string()]);
    }
    write_table(&output_path(&config.out, "curve.csv"), &header, &rows)?;
    Ok(Status::Success)
}

fn run_verify(config: &RunConfig, dir: Option<&Path>, opts: &SolveOptions) -> Result<Status, RunError> {
    let fixtures = match dir {
        Some(d) => load_fixtures(d)?,
        None => bundled_fixtures(),
    };
    let outcome = thread_pool().install(|| run_suite(&fixtures, config.seed, opts));
    write_json(&report_path(config), &outcome.report)?;
    let header = ["epsilon", "tau_dynamic", "tau_static", "gap"].map(String::from);
    let rows: Vec<Vec<String>> = outcome
        .gaps
        .iter()
        .map(|g| vec![g.epsilon.to_string(), g.tau_dynamic.to_string(), g.tau_static.to_string(), g.gap().to_string()])
        .collect();
    write_table(&output_path(&config.out, "gaps.csv"), &header, &rows)?;
    Ok(if outcome.report.all_pass() { Status::Success } else { Status::VerifyFailure })
}

fn run_sweep(config: &RunConfig, env: EnvironmentSpec, opts: &SolveOptions) -> Result<Status, RunError> {
    let spec = config.sweep.as_ref().expect("validated config");
    let rows = sweep::run_sweep(&env, spec, opts)?;
    let table: Vec<Vec<String>> = rows.iter().map(sweep::record).collect();
    write_table(&output_path(&config.out, "sweep.csv"), &sweep::header(spec), &table)?;
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    let report = json!({
        "mode": RunMode::Sweep.as_str(),
        "parameters": spec.axes.iter().map(|(p, _)| p.name()).collect::<Vec<_>>(),
        "cells": rows.len(),
        "failed": failed,
    });
    write_json(&report_path(config), &report)?;
    Ok(if failed == 0 { Status::Success } else { Status::SolverFailure })
}

//! Parameter sweeps. Each cell is an independent solve; cells run on the
//! shared pool and rows are written in cell order.

use rayon::prelude::*;
use scoremax_core::contracts::VShapedParams;
use scoremax_core::agent::best_response;
use scoremax_core::model::{BeliefSystem, EnvironmentSpec};
use scoremax_core::optimizer::{solve, solve_vshaped_grid, Mode, SolveOptions};

use crate::config::{SweepParam, SweepSpec};
use crate::scan::thread_pool;
use crate::verify::VSHAPED_GRID;

pub const MAX_SWEEP_PARAMS: usize = 3;
pub const MAX_SWEEP_CELLS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("grid of {params} parameters and {cells} cells exceeds {MAX_SWEEP_PARAMS} parameters or {MAX_SWEEP_CELLS} cells")]
    GridTooLarge { params: usize, cells: usize },
}

/// One solved cell. A solver failure is kept as text so the rest of the
/// grid still completes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub values: Vec<(SweepParam, f64)>,
    pub outcome: Result<CellResult, String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellResult {
    pub tau_dynamic: usize,
    pub tau_static: usize,
    pub tau_vshaped: usize,
    pub r1_vshaped: f64,
    pub mu_dynamic: f64,
    pub mu_static: f64,
    pub mu_vshaped: f64,
}

pub fn check_grid(spec: &SweepSpec) -> Result<(), SweepError> {
    let (params, cells) = (spec.axes.len(), spec.cells());
    if params > MAX_SWEEP_PARAMS || cells > MAX_SWEEP_CELLS {
        return Err(SweepError::GridTooLarge { params, cells });
    }
    Ok(())
}

/// Solves one cell: both programs, then the best V-shaped rule (or the
/// swept rule `(1, r1)` when `r1` is an axis).
pub fn solve_cell(base: &EnvironmentSpec, values: &[(SweepParam, f64)], opts: &SolveOptions) -> Result<CellResult, String> {
    let mut env = *base;
    let mut r1 = None;
    for &(p, v) in values {
        p.apply(&mut env, v);
        if p == SweepParam::R1 {
            r1 = Some(v);
        }
    }
    let b = BeliefSystem::new(env).map_err(|e| e.to_string())?;
    let d = solve(&b, Mode::Dynamic, opts).map_err(|e| e.to_string())?;
    let s = solve(&b, Mode::Static, opts).map_err(|e| e.to_string())?;
    let (tau_vshaped, r1_vshaped) = match r1 {
        Some(r1) => {
            let p = VShapedParams::new(1.0, r1).map_err(|e| e.to_string())?;
            (best_response(&b, &p.rule()).tau_star, r1)
        }
        None => {
            let g = solve_vshaped_grid(&b, VSHAPED_GRID).map_err(|e| e.to_string())?;
            (g.tau, g.params.r1)
        }
    };
    Ok(CellResult {
        tau_dynamic: d.tau_star,
        tau_static: s.tau_star,
        tau_vshaped,
        r1_vshaped,
        mu_dynamic: b.no_info(d.tau_star),
        mu_static: b.no_info(s.tau_star),
        mu_vshaped: b.no_info(tau_vshaped),
    })
}

pub fn run_sweep(base: &EnvironmentSpec, spec: &SweepSpec, opts: &SolveOptions) -> Result<Vec<SweepRow>, SweepError> {
    check_grid(spec)?;
    let mut rows: Vec<SweepRow> = thread_pool().install(|| {
        (0..spec.cells())
            .into_par_iter()
            .map(|index| {
                let values = spec.cell(index);
                let outcome = solve_cell(base, &values, opts);
                SweepRow { index, values, outcome }
            })
            .collect()
    });
    rows.sort_by_key(|r| r.index);
    Ok(rows)
}

pub fn header(spec: &SweepSpec) -> Vec<String> {
    let mut h: Vec<String> = spec.axes.iter().map(|(p, _)| p.name().to_string()).collect();
    h.extend(
        ["tau_dynamic", "tau_static", "tau_vshaped", "r1_vshaped", "mu_dynamic", "mu_static", "mu_vshaped", "error"]
            .map(String::from),
    );
    h
}

pub fn record(row: &SweepRow) -> Vec<String> {
    let mut out: Vec<String> = row.values.iter().map(|(_, v)| v.to_string()).collect();
    match &row.outcome {
        Ok(c) => {
            out.extend([c.tau_dynamic, c.tau_static, c.tau_vshaped].map(|t| t.to_string()));
            out.extend([c.r1_vshaped, c.mu_dynamic, c.mu_static, c.mu_vshaped].map(|x| x.to_string()));
            out.push(String::new());
        }
        Err(e) => {
            out.extend(std::iter::repeat_n(String::new(), 7));
            out.push(e.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use scoremax_core::model::Rates;

    fn env() -> EnvironmentSpec {
        EnvironmentSpec { delta: 0.1, periods: 8, prior: 0.4, cost: 0.1, lambda: Rates::new(1.0, 0.0, 0.0, 0.0) }
    }

    #[test]
    fn grid_limits() {
        let four = SweepSpec {
            axes: vec![
                (SweepParam::Prior, vec![0.3]),
                (SweepParam::Cost, vec![0.1]),
                (SweepParam::Delta, vec![0.1]),
                (SweepParam::R1, vec![1.0]),
            ],
        };
        assert_eq!(check_grid(&four), Err(SweepError::GridTooLarge { params: 4, cells: 1 }));
        let big = SweepSpec { axes: vec![(SweepParam::Prior, vec![0.3; 101]), (SweepParam::Cost, vec![0.1; 100])] };
        assert!(matches!(check_grid(&big), Err(SweepError::GridTooLarge { cells: 10_100, .. })));
    }

    #[test]
    fn rows_come_back_in_cell_order() {
        let spec = SweepSpec { axes: vec![(SweepParam::Prior, vec![0.2, 0.4]), (SweepParam::R1, vec![0.5, 1.0])] };
        let rows = run_sweep(&env(), &spec, &SolveOptions::default()).unwrap();
        assert_eq!(rows.iter().map(|r| r.index).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        assert_eq!(rows[3].values, spec.cell(3));
        assert!(rows.iter().all(|r| r.outcome.is_ok()));
        assert_eq!(record(&rows[0]).len(), header(&spec).len());
    }

    #[test]
    fn invalid_cell_is_recorded_not_fatal() {
        let spec = SweepSpec { axes: vec![(SweepParam::Prior, vec![0.4, 1.5])] };
        let rows = run_sweep(&env(), &spec, &SolveOptions::default()).unwrap();
        assert!(rows[0].outcome.is_ok());
        assert!(rows[1].outcome.is_err());
    }
}

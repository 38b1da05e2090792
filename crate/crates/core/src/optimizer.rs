//! Effort-maximizing contracts: per-horizon feasibility programs, the
//! stopping-time scan, the V-shaped grid search, the closed-form solution
//! under perfect good-news learning, and the single-signal staticization.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::agent::{best_response, AgentError};
use crate::contracts::{
    check_ic, no_info_utilities, v_shaped_from_kink, ContractError, Menu, MenuContract, Provenance, RewardPair,
    StaticScoringRule, VShapedParams, DEDUP_TOL,
};
use crate::lp::{solve_with, Constraint, LinearProgram, LpError, LpStatus, SolverOptions};
use crate::model::{expected_effort_cost, BeliefSystem, ModelError, Signal};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Contract(#[from] ContractError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("linear program for horizon {tau} failed: {source}")]
    Lp { tau: usize, source: LpError },
    #[error("environment has signals of both kinds or none")]
    NotSingleSignal,
    #[error("argument outside the domain: {0}")]
    DomainError(&'static str),
    #[error("root finding did not converge: {0}")]
    ConvergenceFailure(&'static str),
    #[error("contract for horizon {tau} failed certification: {reason}")]
    CertificationFailed { tau: usize, reason: &'static str },
    #[error("grid step {0} outside (0, 0.1]")]
    InvalidGridStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Dynamic,
    Static,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Dynamic => "dynamic",
            Mode::Static => "static",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub lp: SolverOptions,
    /// Subtract the expected effort cost in the effort rows.
    pub include_cost: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { lp: SolverOptions::default(), include_cost: true }
    }
}

/// Contract certified by a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SolvedContract {
    Menu(MenuContract),
    Static(StaticScoringRule),
}

impl SolvedContract {
    pub fn tau_star(&self, beliefs: &BeliefSystem) -> usize {
        match self {
            SolvedContract::Menu(c) => best_response(beliefs, c).tau_star,
            SolvedContract::Static(r) => best_response(beliefs, r).tau_star,
        }
    }
}

/// Outcome of one horizon in the scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub tau: usize,
    pub status: LpStatus,
    pub vars: usize,
    pub rows: usize,
    pub working_rows: usize,
    pub iterations: usize,
    pub max_residual: f64,
}

impl ScanEntry {
    pub fn feasible(&self) -> bool {
        self.status == LpStatus::Feasible
    }
}

/// One solved horizon with its witness.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonSolve {
    pub entry: ScanEntry,
    pub contract: Option<SolvedContract>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub mode: Mode,
    pub tau_star: usize,
    pub contract: SolvedContract,
    pub scan: Vec<ScanEntry>,
}

fn push_utility(row: &mut Vec<(usize, f64)>, var: usize, mu: f64, weight: f64) {
    row.push((var, weight * (1.0 - mu)));
    row.push((var + 1, weight * mu));
}

fn merge(mut row: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    row.sort_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(row.len());
    for (j, a) in row {
        match out.last_mut() {
            Some((lj, la)) if *lj == j => *la += a,
            _ => out.push((j, a)),
        }
    }
    out.retain(|&(_, a)| a != 0.0);
    out
}

fn check_tau(beliefs: &BeliefSystem, tau: usize) -> Result<(), OptimizerError> {
    if tau == 0 || tau > beliefs.periods() {
        return Err(ModelError::IndexOutOfRange { index: tau, lo: 1, hi: beliefs.periods() }.into());
    }
    Ok(())
}

/// Dynamic feasibility program for horizon `tau` with its variable layout.
///
/// Every option occupies two consecutive variables `(r0, r1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicLp {
    pub lp: LinearProgram,
    pub tau: usize,
    g: Vec<Option<usize>>,
    b: Vec<Option<usize>>,
    n: Vec<usize>,
}

impl DynamicLp {
    fn signal_var(&self, s: Signal, k: usize) -> Option<usize> {
        match s {
            Signal::G => self.g[k - 1],
            Signal::B => self.b[k - 1],
        }
    }

    /// Reads the menu contract off an LP point.
    pub fn contract(&self, x: &[f64]) -> Result<MenuContract, ContractError> {
        let pair = |v: usize| RewardPair::new(x[v], x[v + 1]);
        let mut c = MenuContract::terminal_only(self.tau, pair(self.n[self.tau])?);
        for k in 1..=self.tau {
            c.g_options[k - 1] = self.g[k - 1].map(pair).transpose()?;
            c.b_options[k - 1] = self.b[k - 1].map(pair).transpose()?;
        }
        c.aux_n = Some(self.n[..self.tau].iter().map(|&v| pair(v)).collect::<Result<_, _>>()?);
        Ok(c)
    }
}

/// Effort and incentive rows for a menu contract that keeps the agent
/// working through `tau`.
///
/// Effort rows compare, for each start period `k`, working through `tau`
/// with stopping at node `k − 1`. Incentive rows let every belief holder
/// at node `k` weakly prefer their own option to every option offered at
/// node `k` or later.
pub fn build_dynamic_lp(beliefs: &BeliefSystem, tau: usize, include_cost: bool) -> Result<DynamicLp, OptimizerError> {
    check_tau(beliefs, tau)?;
    let mut next = 0;
    let mut alloc_var = || {
        let v = next;
        next += 2;
        v
    };
    let n: Vec<usize> = (0..=tau).map(|_| alloc_var()).collect();
    let mut g = Vec::with_capacity(tau);
    let mut b = Vec::with_capacity(tau);
    for k in 1..=tau {
        g.push(beliefs.posterior(Signal::G, k).map(|_| alloc_var()));
        b.push(beliefs.posterior(Signal::B, k).map(|_| alloc_var()));
    }
    let mut lp = LinearProgram::new(next);
    let mut names = vec![alloc::string::String::new(); next];
    let mut name = |v: usize, label: alloc::string::String| {
        names[v] = alloc::format!("{label}.r0");
        names[v + 1] = alloc::format!("{label}.r1");
    };
    for (k, &v) in n.iter().enumerate() {
        name(v, alloc::format!("N{k}"));
    }
    for k in 1..=tau {
        if let Some(v) = g[k - 1] {
            name(v, alloc::format!("G{k}"));
        }
        if let Some(v) = b[k - 1] {
            name(v, alloc::format!("B{k}"));
        }
    }
    lp.set_names(names);
    let layout = DynamicLp { lp: LinearProgram::new(0), tau, g, b, n };

    let env = beliefs.env();
    for k in 1..=tau {
        let law = beliefs.arrival_law(k)?;
        let mut row = Vec::new();
        for j in k..=tau {
            for s in Signal::ALL {
                if let (Some(v), Some(mu)) = (layout.signal_var(s, j), beliefs.posterior(s, j)) {
                    push_utility(&mut row, v, mu, law.pmf(s, j));
                }
            }
        }
        push_utility(&mut row, layout.n[tau], beliefs.no_info(tau), law.survival(tau));
        push_utility(&mut row, layout.n[k - 1], beliefs.no_info(k - 1), -1.0);
        let rhs = if include_cost { expected_effort_cost(env, &law, tau)? } else { 0.0 };
        lp.add(Constraint::ge(merge(row), rhs)).map_err(|e| OptimizerError::Lp { tau, source: e })?;
    }

    // Options available at node k.
    let options_from = |k: usize| {
        let mut out = Vec::new();
        for j in k..=tau {
            out.push(layout.n[j]);
            if j >= 1 {
                for s in Signal::ALL {
                    if let Some(v) = layout.signal_var(s, j) {
                        out.push(v);
                    }
                }
            }
        }
        out
    };
    let mut bearers: Vec<(usize, usize, f64)> = Vec::new();
    for k in 0..=tau {
        bearers.push((layout.n[k], k, beliefs.no_info(k)));
        if k >= 1 {
            for s in Signal::ALL {
                if let (Some(v), Some(mu)) = (layout.signal_var(s, k), beliefs.posterior(s, k)) {
                    bearers.push((v, k, mu));
                }
            }
        }
    }
    for &(own, k, mu) in &bearers {
        for other in options_from(k) {
            if other == own {
                continue;
            }
            let mut row = Vec::with_capacity(4);
            push_utility(&mut row, own, mu, 1.0);
            push_utility(&mut row, other, mu, -1.0);
            lp.add(Constraint::ge(merge(row), 0.0)).map_err(|e| OptimizerError::Lp { tau, source: e })?;
        }
    }
    Ok(DynamicLp { lp, ..layout })
}

/// Static feasibility program for horizon `tau`: one option per distinct
/// reachable belief, offered at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticLp {
    pub lp: LinearProgram,
    pub tau: usize,
    /// Distinct beliefs in increasing order; belief `i` owns variables
    /// `2i, 2i + 1`.
    pub beliefs: Vec<f64>,
}

impl StaticLp {
    pub fn rule(&self, x: &[f64]) -> Result<StaticScoringRule, ContractError> {
        let opts = (0..self.beliefs.len()).map(|i| RewardPair::new(x[2 * i], x[2 * i + 1])).collect::<Result<_, _>>()?;
        StaticScoringRule::new(opts, Some(Provenance::Lp))
    }
}

/// Index of `mu` among sorted distinct beliefs.
fn belief_index(sorted: &[f64], mu: f64) -> usize {
    let i = sorted.partition_point(|&b| b < mu - DEDUP_TOL);
    debug_assert!((sorted[i] - mu).abs() <= DEDUP_TOL);
    i
}

/// Static counterpart of [`build_dynamic_lp`]. Incentive rows run in both
/// directions between neighbouring beliefs. Because every belief holder
/// prefers their own option, one effort row per start period against the
/// option of `μ^N_{k−1}` covers every option the agent could stop with.
pub fn build_static_lp(beliefs: &BeliefSystem, tau: usize, include_cost: bool) -> Result<StaticLp, OptimizerError> {
    check_tau(beliefs, tau)?;
    let mut all: Vec<f64> = (0..=tau).map(|k| beliefs.no_info(k)).collect();
    for k in 1..=tau {
        for s in Signal::ALL {
            if let Some(mu) = beliefs.posterior(s, k) {
                all.push(mu);
            }
        }
    }
    all.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = Vec::new();
    for mu in all {
        if distinct.last().is_none_or(|&l| mu - l > DEDUP_TOL) {
            distinct.push(mu);
        }
    }
    let var = |mu: f64| 2 * belief_index(&distinct, mu);
    let mut lp = LinearProgram::new(2 * distinct.len());
    let env = beliefs.env();
    for k in 1..=tau {
        let law = beliefs.arrival_law(k)?;
        let mut row = Vec::new();
        for j in k..=tau {
            for s in Signal::ALL {
                if let Some(mu) = beliefs.posterior(s, j) {
                    push_utility(&mut row, var(mu), mu, law.pmf(s, j));
                }
            }
        }
        let mu_tau = beliefs.no_info(tau);
        push_utility(&mut row, var(mu_tau), mu_tau, law.survival(tau));
        let mu_stop = beliefs.no_info(k - 1);
        push_utility(&mut row, var(mu_stop), mu_stop, -1.0);
        let rhs = if include_cost { expected_effort_cost(env, &law, tau)? } else { 0.0 };
        lp.add(Constraint::ge(merge(row), rhs)).map_err(|e| OptimizerError::Lp { tau, source: e })?;
    }
    // Utilities are linear in the belief, so incentive compatibility between
    // neighbours forces slopes to increase along the sorted beliefs, which
    // in turn makes every holder prefer their own option to any other.
    for i in 1..distinct.len() {
        for (own, other) in [(i - 1, i), (i, i - 1)] {
            let mu = distinct[own];
            let mut row = Vec::with_capacity(4);
            push_utility(&mut row, 2 * own, mu, 1.0);
            push_utility(&mut row, 2 * other, mu, -1.0);
            lp.add(Constraint::ge(merge(row), 0.0)).map_err(|e| OptimizerError::Lp { tau, source: e })?;
        }
    }
    Ok(StaticLp { lp, tau, beliefs: distinct })
}

/// Horizons the scan visits: `0..=min(K, max_horizon)`.
pub fn scan_range(beliefs: &BeliefSystem) -> core::ops::RangeInclusive<usize> {
    0..=beliefs.max_horizon().min(beliefs.periods())
}

/// Solves the program of one horizon. Horizon 0 is trivially feasible.
pub fn solve_horizon(
    beliefs: &BeliefSystem,
    mode: Mode,
    tau: usize,
    opts: &SolveOptions,
) -> Result<HorizonSolve, OptimizerError> {
    if tau == 0 {
        let contract = match mode {
            Mode::Dynamic => SolvedContract::Menu(MenuContract::terminal_only(0, RewardPair::ZERO)),
            Mode::Static => SolvedContract::Static(StaticScoringRule::new(vec![RewardPair::ZERO], Some(Provenance::Lp))?),
        };
        let entry = ScanEntry {
            tau,
            status: LpStatus::Feasible,
            vars: 0,
            rows: 0,
            working_rows: 0,
            iterations: 0,
            max_residual: 0.0,
        };
        return Ok(HorizonSolve { entry, contract: Some(contract) });
    }
    let lp_err = |e| OptimizerError::Lp { tau, source: e };
    let (lp, out, contract) = match mode {
        Mode::Dynamic => {
            let d = build_dynamic_lp(beliefs, tau, opts.include_cost)?;
            let out = solve_with(&d.lp, &opts.lp).map_err(lp_err)?;
            let c = out.point.as_deref().map(|x| d.contract(x).map(SolvedContract::Menu)).transpose()?;
            (d.lp, out, c)
        }
        Mode::Static => {
            let s = build_static_lp(beliefs, tau, opts.include_cost)?;
            let out = solve_with(&s.lp, &opts.lp).map_err(lp_err)?;
            let c = out.point.as_deref().map(|x| s.rule(x).map(SolvedContract::Static)).transpose()?;
            (s.lp, out, c)
        }
    };
    let entry = ScanEntry {
        tau,
        status: out.status,
        vars: lp.num_vars(),
        rows: lp.constraints().len(),
        working_rows: out.working_rows,
        iterations: out.iterations,
        max_residual: out.max_residual,
    };
    Ok(HorizonSolve { entry, contract })
}

/// Picks the largest feasible horizon and certifies its contract against
/// the incentive check and the agent's best response.
pub fn finish_report(beliefs: &BeliefSystem, mode: Mode, mut solves: Vec<HorizonSolve>) -> Result<SolveReport, OptimizerError> {
    solves.sort_by_key(|s| s.entry.tau);
    let best = solves
        .iter()
        .rev()
        .find(|s| s.entry.feasible())
        .ok_or(OptimizerError::CertificationFailed { tau: 0, reason: "no feasible horizon" })?;
    let tau = best.entry.tau;
    let contract = best.contract.clone().expect("feasible horizons carry a contract");
    if let SolvedContract::Menu(c) = &contract {
        if !check_ic(c, beliefs)?.is_empty() {
            return Err(OptimizerError::CertificationFailed { tau, reason: "incentive check" });
        }
    }
    if contract.tau_star(beliefs) < tau {
        return Err(OptimizerError::CertificationFailed { tau, reason: "best response stops early" });
    }
    Ok(SolveReport { mode, tau_star: tau, contract, scan: solves.into_iter().map(|s| s.entry).collect() })
}

/// Scans every horizon up to the bound and returns the largest one a
/// contract of the given kind can implement.
pub fn solve(beliefs: &BeliefSystem, mode: Mode, opts: &SolveOptions) -> Result<SolveReport, OptimizerError> {
    let solves = scan_range(beliefs).map(|tau| solve_horizon(beliefs, mode, tau, opts)).collect::<Result<Vec<_>, _>>()?;
    finish_report(beliefs, mode, solves)
}

pub fn solve_dynamic(beliefs: &BeliefSystem, opts: &SolveOptions) -> Result<SolveReport, OptimizerError> {
    solve(beliefs, Mode::Dynamic, opts)
}

pub fn solve_static(beliefs: &BeliefSystem, opts: &SolveOptions) -> Result<SolveReport, OptimizerError> {
    solve(beliefs, Mode::Static, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub params: VShapedParams,
    pub tau: usize,
}

/// Searches V-shaped rules `(1, r1)` on a grid of `r1`, refined around the
/// incumbent, together with the rules whose kink sits at a no-information
/// belief. Ties go to the larger `r1`.
pub fn solve_vshaped_grid(beliefs: &BeliefSystem, grid_step: f64) -> Result<GridResult, OptimizerError> {
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(OptimizerError::InvalidGridStep(grid_step));
    }
    let eval = |p: VShapedParams| best_response(beliefs, &p.rule()).tau_star;
    let better = |cand: &GridResult, inc: &GridResult| {
        cand.tau > inc.tau || (cand.tau == inc.tau && cand.params.r1 > inc.params.r1)
    };
    let mut best = GridResult { params: VShapedParams { r0: 1.0, r1: 1.0 }, tau: eval(VShapedParams { r0: 1.0, r1: 1.0 }) };
    let steps = libm::round(1.0 / grid_step) as usize;
    let consider = |p: VShapedParams, best: &mut GridResult| {
        let cand = GridResult { params: p, tau: eval(p) };
        if better(&cand, best) {
            *best = cand;
        }
    };
    for i in 1..=steps {
        let r1 = (i as f64 * grid_step).min(1.0);
        consider(VShapedParams { r0: 1.0, r1 }, &mut best);
    }
    for mu in beliefs.no_info_path() {
        if *mu > 0.0 && *mu < 1.0 {
            consider(v_shaped_from_kink(*mu)?, &mut best);
        }
    }
    // Local refinement around the incumbent.
    let fine = 1e-5;
    let center = best.params.r1;
    let n_fine = libm::round(grid_step / fine) as i64;
    for i in -n_fine..=n_fine {
        let r1 = center + i as f64 * fine;
        if r1 > 0.0 && r1 <= 1.0 {
            consider(VShapedParams { r0: 1.0, r1 }, &mut best);
        }
    }
    Ok(best)
}

/// Closed-form continuation value under perfect good-news learning with
/// the rule `(1, r1)` in continuous time; see [`PerfectLearning`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfectLearning {
    pub cost: f64,
    pub lambda: f64,
}

impl PerfectLearning {
    pub fn new(cost: f64, lambda: f64) -> Result<Self, OptimizerError> {
        if !(lambda > 0.0 && lambda.is_finite()) || !(cost >= 0.0 && cost.is_finite()) {
            return Err(OptimizerError::DomainError("need λ > 0 and c ≥ 0"));
        }
        Ok(PerfectLearning { cost, lambda })
    }

    /// Belief at which the agent stops working: `c / (λ r1)`, capped at 1.
    pub fn stopping_belief(&self, r1: f64) -> f64 {
        (self.cost / (self.lambda * r1)).min(1.0)
    }

    fn particular(&self, mu: f64, r1: f64) -> f64 {
        let c = self.cost;
        (r1 * self.lambda - c + c * (1.0 - mu) * libm::log((1.0 - mu) / mu)) / self.lambda
    }

    /// Constant `k` that pins `V(μ_stop) = 1 − μ_stop`.
    pub fn boundary_constant(&self, r1: f64) -> Result<f64, OptimizerError> {
        if (r1 * self.lambda).partial_cmp(&self.cost) != Some(core::cmp::Ordering::Greater) {
            return Err(OptimizerError::DomainError("no effort when r1·λ ≤ c"));
        }
        let ms = self.stopping_belief(r1);
        Ok((1.0 - ms - self.particular(ms, r1)) / (1.0 - ms))
    }

    /// `V(μ) = k(1−μ) + (r1 λ − c + c (1−μ) ln((1−μ)/μ)) / λ`.
    pub fn value(&self, mu: f64, r1: f64) -> Result<f64, OptimizerError> {
        value_function_cont(mu, r1, self.cost, self.lambda, self.boundary_constant(r1)?)
    }

    /// Upper belief at which working and claiming `(0, r1)` give the same
    /// value; `None` when no belief makes effort worthwhile.
    pub fn mu_upper(&self, r1: f64) -> Result<Option<f64>, OptimizerError> {
        if (r1 * self.lambda).partial_cmp(&self.cost) != Some(core::cmp::Ordering::Greater) {
            return Ok(None);
        }
        let lo = self.stopping_belief(r1);
        let h = |mu: f64| self.value(mu, r1).map(|v| v - r1 * mu);
        if h(lo)? <= 0.0 {
            return Ok(None);
        }
        // h is concave-free but V is convex and V − r1 μ changes sign once
        // above the stopping belief.
        let (mut a, mut b) = (lo, 1.0 - 1e-15);
        if h(b)? > 0.0 {
            return Ok(Some(b));
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if h(m)? > 0.0 {
                a = m;
            } else {
                b = m;
            }
            if b - a < 1e-12 {
                return Ok(Some(0.5 * (a + b)));
            }
        }
        Err(OptimizerError::ConvergenceFailure("upper crossing"))
    }

    /// Smallest `r1` for which a belief makes effort worthwhile.
    pub fn r1_min(&self) -> f64 {
        self.cost / (self.lambda - self.cost)
    }
}

/// `V(μ) = k(1−μ) + (r1 λ − c + c (1−μ) ln((1−μ)/μ)) / λ` for a given
/// constant `k`.
pub fn value_function_cont(mu: f64, r1: f64, c: f64, lambda: f64, k_const: f64) -> Result<f64, OptimizerError> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(OptimizerError::DomainError("belief must lie in (0, 1)"));
    }
    if (r1 * lambda).partial_cmp(&c) != Some(core::cmp::Ordering::Greater) {
        return Err(OptimizerError::DomainError("no effort when r1·λ ≤ c"));
    }
    Ok(k_const * (1.0 - mu) + (r1 * lambda - c + c * (1.0 - mu) * libm::log((1.0 - mu) / mu)) / lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfectLearningSolution {
    pub model: PerfectLearning,
    pub prior: f64,
    pub horizon: f64,
    /// Upper threshold with `r1 = 1`.
    pub mu_star: f64,
    /// Largest prior at which any `r1` induces effort.
    pub mu_star_star: f64,
    /// Reward beyond which a longer stopping belief cannot be reached by
    /// the horizon.
    pub r_t: f64,
    /// Effort-maximizing `r1`; `None` when no effort can be induced.
    pub r1_opt: Option<f64>,
}

impl PerfectLearningSolution {
    pub fn stopping_belief(&self) -> Option<f64> {
        self.r1_opt.map(|r| self.model.stopping_belief(r))
    }

    pub fn mu_lower(&self, r1: f64) -> f64 {
        self.model.stopping_belief(r1)
    }

    pub fn mu_upper(&self, r1: f64) -> Result<Option<f64>, OptimizerError> {
        self.model.mu_upper(r1)
    }
}

/// Continuous-time no-information belief after working for `t` under
/// perfect good news.
pub fn no_info_belief_at(prior: f64, lambda: f64, t: f64) -> f64 {
    let e = libm::exp(-lambda * t);
    prior * e / (prior * e + 1.0 - prior)
}

fn golden_max<F: Fn(f64) -> Result<f64, OptimizerError>>(f: F, mut a: f64, mut b: f64) -> Result<f64, OptimizerError> {
    let g = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..200 {
        if b - a < 1e-10 {
            return Ok(0.5 * (a + b));
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
    }
    Err(OptimizerError::ConvergenceFailure("golden-section search"))
}

/// Effort-maximizing V-shaped rule `(1, r1)` under perfect good-news
/// learning in continuous time with horizon `horizon`.
pub fn optimal_r1_analytic(c: f64, lambda: f64, prior: f64, horizon: f64) -> Result<PerfectLearningSolution, OptimizerError> {
    if !(prior > 0.0 && prior < 1.0) {
        return Err(OptimizerError::DomainError("prior must lie in (0, 1)"));
    }
    let model = PerfectLearning::new(c, lambda)?;
    let upper0 = |r: f64| model.mu_upper(r).map(|m| m.unwrap_or(0.0));
    let mu_star = upper0(1.0)?;
    let r_min = model.r1_min();
    let mu_star_star = if r_min > 0.0 && r_min < 1.0 {
        let r = golden_max(upper0, r_min, 1.0)?;
        upper0(r)?.max(mu_star)
    } else {
        mu_star
    };
    let mu_t = no_info_belief_at(prior, lambda, horizon);
    let r_t = if model.stopping_belief(1.0) > mu_t { 1.0 } else { (c / (lambda * mu_t)).min(1.0) };
    let mut sol = PerfectLearningSolution { model, prior, horizon, mu_star, mu_star_star, r_t, r1_opt: None };
    if prior < c / lambda || prior > mu_star_star {
        return Ok(sol);
    }
    if upper0(r_t)? >= prior {
        sol.r1_opt = Some(r_t);
        return Ok(sol);
    }
    // μ̄ decreases in r1: find the largest r with μ̄(r) ≥ D.
    let (mut a, mut b) = (r_min.max(0.0), r_t);
    if upper0(a.max(1e-15) + 1e-12)? < prior {
        return Ok(sol);
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if upper0(m)? >= prior {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-8 {
            sol.r1_opt = Some(a);
            return Ok(sol);
        }
    }
    Err(OptimizerError::ConvergenceFailure("optimal r1"))
}

/// Static scoring rule that keeps the effort of a contract in an
/// environment with only one signal kind.
///
/// The no-information utilities `u^N_k` are convexified; the options are the
/// contract's choice at the horizon, the lines through the hull segments
/// between the horizon belief and the tangent point, and the line through
/// the tangent point with the largest admissible reward in the relevant
/// state.
pub fn staticize_single_signal<M: Menu + ?Sized>(
    beliefs: &BeliefSystem,
    contract: &M,
    tau: usize,
) -> Result<StaticScoringRule, OptimizerError> {
    if !beliefs.env().classify().single_signal {
        return Err(OptimizerError::NotSingleSignal);
    }
    if tau > beliefs.periods() {
        return Err(ModelError::IndexOutOfRange { index: tau, lo: 0, hi: beliefs.periods() }.into());
    }
    let u = no_info_utilities(contract, beliefs, tau);
    let mut pts: Vec<(f64, f64)> = (0..=tau).map(|k| (beliefs.no_info(k), u[k])).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    // Equal beliefs keep the smallest utility after the lower hull pass.
    let hull = lower_hull(&pts);

    let (z0, z1) = if pts.iter().all(|&(m, v)| m < v) {
        let z0 = pts.iter().map(|&(m, v)| (v - m) / (1.0 - m)).fold(f64::INFINITY, f64::min);
        (z0.min(1.0), 1.0)
    } else {
        let z1 = pts.iter().filter(|p| p.0 > 0.0).map(|&(m, v)| v / m).fold(f64::INFINITY, f64::min);
        (0.0, z1.min(1.0))
    };
    let tangent = RewardPair::new(z0.max(0.0), z1.max(0.0))?;
    let line = |m: f64| tangent.utility(m);
    // Tangent point with the largest belief.
    let t_hat = pts
        .iter()
        .filter(|&&(m, v)| (line(m) - v).abs() <= 1e-10)
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max);

    let mu_tau = beliefs.no_info(tau);
    let mut options = vec![contract.best_at(tau, mu_tau).1];
    for w in hull.windows(2) {
        let ((m_a, v_a), (m_b, v_b)) = (w[0], w[1]);
        if m_a >= mu_tau - DEDUP_TOL && m_b <= t_hat + DEDUP_TOL && m_b - m_a > DEDUP_TOL {
            let slope = (v_b - v_a) / (m_b - m_a);
            let at0 = v_a - slope * m_a;
            let at1 = at0 + slope;
            options.push(RewardPair::new(at0, at1)?);
        }
    }
    options.push(tangent);
    Ok(StaticScoringRule::new(options, Some(Provenance::Staticized))?)
}

/// Lower convex hull of points sorted by abscissa.
fn lower_hull(pts: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut h: Vec<(f64, f64)> = Vec::new();
    for &p in pts {
        if let Some(&(lx, ly)) = h.last() {
            if (p.0 - lx).abs() <= DEDUP_TOL {
                if p.1 < ly {
                    h.pop();
                } else {
                    continue;
                }
            }
        }
        while h.len() >= 2 {
            let (a, b) = (h[h.len() - 2], h[h.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                h.pop();
            } else {
                break;
            }
        }
        h.push(p);
    }
    h
}

/// Incentive to work under the rule with kink at the prior (`inc_at_d`) and
/// under that same rule once the prior moves to `d_prime`.
pub fn static_incentive_increase(d: f64, d_prime: f64, f0b: f64, f1g: f64) -> Result<(f64, f64), OptimizerError> {
    let inside = |v: f64| v > 0.0 && v < 1.0;
    if !(inside(d) && inside(d_prime) && inside(f0b) && inside(f1g)) {
        return Err(OptimizerError::DomainError("arguments must lie in (0, 1)"));
    }
    if d >= 0.5 {
        return Err(OptimizerError::DomainError("prior must lie below 1/2"));
    }
    let odds = d / (1.0 - d);
    let inc = d * (f0b + f1g - 1.0);
    let inc_fixed = d_prime * (f1g - 1.0 - f0b * odds) + f0b * odds;
    Ok((inc, inc_fixed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EnvironmentSpec, Rates};

    fn env(delta: f64, periods: usize, prior: f64, cost: f64, r: [f64; 4]) -> BeliefSystem {
        BeliefSystem::new(EnvironmentSpec {
            delta,
            periods,
            prior,
            cost,
            lambda: Rates::new(r[0], r[1], r[2], r[3]),
        })
        .unwrap()
    }

    #[test]
    fn neighbour_rows_give_global_incentive_compatibility() {
        let b = env(0.1, 10, 0.4, 0.05, [1.5, 0.5, 0.4, 1.2]);
        for tau in [3, 6, 10] {
            let s = build_static_lp(&b, tau, true).unwrap();
            let out = solve_with(&s.lp, &SolverOptions::default()).unwrap();
            let Some(x) = out.point else { continue };
            let opt = |i: usize| RewardPair { r0: x[2 * i], r1: x[2 * i + 1] };
            for (i, &mu) in s.beliefs.iter().enumerate() {
                for j in 0..s.beliefs.len() {
                    assert!(opt(i).utility(mu) >= opt(j).utility(mu) - 1e-9, "tau {tau}: {i} prefers {j}");
                }
            }
        }
    }

    #[test]
    fn one_period_layout() {
        let b = env(0.1, 5, 0.4, 0.1, [1.0, 0.5, 0.0, 0.0]);
        let d = build_dynamic_lp(&b, 1, true).unwrap();
        assert_eq!(d.lp.num_vars(), 6);
        let effort = 1;
        assert!(d.lp.constraints().len() - effort <= 6);
        assert!(matches!(build_dynamic_lp(&b, 6, true), Err(OptimizerError::Model(_))));
    }

    #[test]
    fn stationary_kink_at_prior_satisfies_every_row() {
        let b = env(0.1, 8, 0.4, 0.2, [2.0, 1.0, 1.0, 2.0]);
        let rule = v_shaped_from_kink(0.4).unwrap().rule();
        let c = MenuContract::from_static(&b, &rule, 8);
        let d = build_dynamic_lp(&b, 8, true).unwrap();
        let mut x = vec![0.0; d.lp.num_vars()];
        for (k, &v) in d.n.iter().enumerate() {
            let r = if k == 8 { c.terminal } else { rule.best(b.no_info(k)).1 };
            x[v] = r.r0;
            x[v + 1] = r.r1;
        }
        for k in 1..=8 {
            for s in Signal::ALL {
                let v = d.signal_var(s, k).unwrap();
                let r = c.signal_option(s, k).unwrap();
                x[v] = r.r0;
                x[v + 1] = r.r1;
            }
        }
        assert!(d.lp.max_residual(&x) < 1e-12, "{}", d.lp.max_residual(&x));
    }

    #[test]
    fn one_period_infeasible_when_cost_exceeds_gain() {
        // Gain of the kink-at-prior rule in one period:
        // D (λ1G − λ0G) Δ + ... below cΔ.
        let b = env(0.1, 4, 0.3, 3.0, [1.0, 0.5, 0.5, 1.0]);
        let out = solve_horizon(&b, Mode::Dynamic, 1, &SolveOptions::default()).unwrap();
        assert_eq!(out.entry.status, LpStatus::Infeasible);
    }

    #[test]
    fn stationary_solve_matches_v_shape() {
        let b = env(0.1, 6, 0.4, 0.2, [2.0, 1.0, 1.0, 2.0]);
        let rep = solve_dynamic(&b, &SolveOptions::default()).unwrap();
        let v = best_response(&b, &v_shaped_from_kink(0.4).unwrap().rule()).tau_star;
        assert_eq!(rep.tau_star, v);
        assert_eq!(rep.tau_star, 6);
        let st = solve_static(&b, &SolveOptions::default()).unwrap();
        assert_eq!(st.tau_star, 6);
    }

    #[test]
    fn analytic_value_boundary() {
        let m = PerfectLearning::new(0.2, 1.0).unwrap();
        assert!((m.value(0.2, 1.0).unwrap() - 0.8).abs() < 1e-12);
        let h = 1e-6;
        let d = (m.value(0.2 + h, 1.0).unwrap() - m.value(0.2 - h, 1.0).unwrap()) / (2.0 * h);
        assert!((d + 1.0).abs() < 1e-4, "{d}");
        for mu in [0.3, 0.5, 0.7] {
            let v = m.value(mu, 1.0).unwrap();
            let dv = (m.value(mu + h, 1.0).unwrap() - m.value(mu - h, 1.0).unwrap()) / (2.0 * h);
            let res = dv * mu * (1.0 - mu) + 0.2 - mu * (1.0 - v);
            assert!(res.abs() < 1e-6, "{res}");
        }
        assert!(matches!(value_function_cont(0.0, 1.0, 0.2, 1.0, 0.0), Err(OptimizerError::DomainError(_))));
    }

    #[test]
    fn analytic_thresholds() {
        let s = optimal_r1_analytic(0.2, 1.0, 0.35, 10.0).unwrap();
        assert!((s.mu_star_star - 0.8).abs() < 1e-6, "{}", s.mu_star_star);
        assert!(s.mu_star > 0.35 && s.mu_star < s.mu_star_star);
        assert_eq!(s.r1_opt, Some(1.0));
        let low = optimal_r1_analytic(0.2, 1.0, 0.15, 10.0).unwrap();
        assert_eq!(low.r1_opt, None);
        let mid = optimal_r1_analytic(0.2, 1.0, 0.5 * (s.mu_star + s.mu_star_star), 10.0).unwrap();
        let r = mid.r1_opt.unwrap();
        assert!(r < 1.0);
        assert!((mid.mu_upper(r).unwrap().unwrap() - mid.prior).abs() < 1e-6);
    }

    #[test]
    fn incentive_increase_values() {
        let (inc, fixed) = static_incentive_increase(0.4, 0.4, 0.7, 0.8).unwrap();
        assert!((inc - 0.2).abs() < 1e-15);
        assert!((fixed - inc).abs() < 1e-15);
        assert!(static_incentive_increase(0.6, 0.4, 0.7, 0.8).is_err());
        let vals: Vec<f64> =
            (1..=10).map(|i| static_incentive_increase(0.3, i as f64 / 11.0, 0.7, 0.8).unwrap().1).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn hull_drops_interior_points() {
        let h = lower_hull(&[(0.0, 0.0), (0.5, 0.6), (1.0, 1.0)]);
        assert_eq!(h, vec![(0.0, 0.0), (1.0, 1.0)]);
        let h = lower_hull(&[(0.0, 1.0), (0.5, 0.2), (1.0, 1.0)]);
        assert_eq!(h.len(), 3);
    }

    #[test]
    fn staticize_rejects_two_signals() {
        let b = env(0.1, 5, 0.4, 0.1, [1.0, 0.5, 0.5, 1.0]);
        let c = MenuContract::terminal_only(2, RewardPair::ZERO);
        assert_eq!(staticize_single_signal(&b, &c, 2), Err(OptimizerError::NotSingleSignal));
    }

    #[test]
    fn grid_step_validation() {
        let b = env(0.1, 5, 0.4, 0.1, [1.0, 0.0, 0.0, 0.0]);
        assert!(solve_vshaped_grid(&b, 0.0).is_err());
        assert!(solve_vshaped_grid(&b, 0.2).is_err());
    }
}

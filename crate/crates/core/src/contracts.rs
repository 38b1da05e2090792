//! Menu-form contracts, static scoring rules and incentive checks.
//!
//! A [`RewardPair`] is always `(reward in state 0, reward in state 1)`.
//! In a [`MenuContract`] with horizon `τ` the option offered for a signal in
//! period `j` can be chosen by any agent who has not yet chosen at node
//! `k ≤ j`; the terminal option is available at every node.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::model::{BeliefSystem, Signal};

/// Absolute slack tolerated by [`check_ic`].
pub const IC_TOL: f64 = 1e-9;
/// Componentwise equality used when deduplicating options.
pub const DEDUP_TOL: f64 = 1e-12;
/// Utility difference treated as a tie when picking the best option.
pub const TIE_TOL: f64 = 1e-12;
const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ContractError {
    #[error("reward ({r0}, {r1}) outside [0, 1]^2")]
    OutOfBounds { r0: f64, r1: f64 },
    #[error("kink {0} must lie strictly inside (0, 1)")]
    InvalidKink(f64),
    #[error("menu has no options")]
    EmptyMenu,
    #[error("the myopic-incentive contract needs a prior below 1/2 (got {0})")]
    DomainViolation(f64),
    #[error("contract dimensions do not match the belief system: {0}")]
    DimensionMismatch(&'static str),
    #[error("canonical rewards infeasible at period {0}")]
    InfeasibleCanonicalization(usize),
}

/// Reward in each state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardPair {
    pub r0: f64,
    pub r1: f64,
}

impl RewardPair {
    pub const ZERO: RewardPair = RewardPair { r0: 0.0, r1: 0.0 };

    /// Checked constructor; values within `1e-9` of the box are clamped.
    pub fn new(r0: f64, r1: f64) -> Result<Self, ContractError> {
        let ok = |v: f64| v.is_finite() && (-BOUND_TOL..=1.0 + BOUND_TOL).contains(&v);
        if !ok(r0) || !ok(r1) {
            return Err(ContractError::OutOfBounds { r0, r1 });
        }
        Ok(RewardPair {
            r0: r0.clamp(0.0, 1.0),
            r1: r1.clamp(0.0, 1.0),
        })
    }

    /// Expected reward `μ·r1 + (1−μ)·r0` at belief `mu`.
    #[inline]
    pub fn utility(&self, mu: f64) -> f64 {
        mu * self.r1 + (1.0 - mu) * self.r0
    }

    /// `self ⪯ other` componentwise, with tolerance.
    pub fn dominated_by(&self, other: &RewardPair, tol: f64) -> bool {
        self.r0 <= other.r0 + tol && self.r1 <= other.r1 + tol
    }

    pub fn approx_eq(&self, other: &RewardPair, tol: f64) -> bool {
        (self.r0 - other.r0).abs() <= tol && (self.r1 - other.r1).abs() <= tol
    }

    /// The option with the largest state-0 reward that yields `value` at
    /// belief `mu` (`mu` in (0,1), `value` in [0,1]).
    pub fn rebalanced(value: f64, mu: f64) -> RewardPair {
        if value >= 1.0 - mu {
            let r1 = ((value - (1.0 - mu)) / mu).clamp(0.0, 1.0);
            RewardPair { r0: 1.0, r1 }
        } else {
            let r0 = (value / (1.0 - mu)).clamp(0.0, 1.0);
            RewardPair { r0, r1: 0.0 }
        }
    }
}

impl fmt::Display for RewardPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.r0, self.r1)
    }
}

/// Best option at belief `mu`; near-ties go to the smaller state-1 reward.
pub fn best_option<'a, I>(options: I, mu: f64) -> Option<(f64, RewardPair)>
where
    I: IntoIterator<Item = &'a RewardPair>,
{
    let mut best: Option<(f64, RewardPair)> = None;
    for r in options {
        let v = r.utility(mu);
        best = match best {
            None => Some((v, *r)),
            Some((bv, br)) => {
                if v > bv + TIE_TOL || ((v - bv).abs() <= TIE_TOL && r.r1 < br.r1) {
                    Some((v, *r))
                } else {
                    Some((bv, br))
                }
            }
        };
    }
    best
}

/// Indirect utility of a finite option set at `mu`.
pub fn indirect_utility(options: &[RewardPair], mu: f64) -> Result<(f64, RewardPair), ContractError> {
    best_option(options, mu).ok_or(ContractError::EmptyMenu)
}

/// Where an option sits in a menu contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Slot {
    /// Reward for reporting `signal` in a period.
    Signal(Signal, usize),
    /// Auxiliary no-information option at a node before the horizon.
    Aux(usize),
    /// Option for reaching the horizon without a signal.
    Terminal,
}

impl Slot {
    /// CSV kind column.
    pub fn kind(&self) -> &'static str {
        match self {
            Slot::Signal(s, _) => s.as_str(),
            Slot::Aux(_) => "AUX",
            Slot::Terminal => "N",
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Signal(s, k) => write!(f, "{s}@{k}"),
            Slot::Aux(k) => write!(f, "N@{k}"),
            Slot::Terminal => f.write_str("N@terminal"),
        }
    }
}

/// Anything that offers options to the agent node by node.
pub trait Menu {
    /// Options that an agent who has not yet chosen can pick at node `k`.
    fn available(&self, k: usize) -> Vec<RewardPair>;

    /// Best available option at node `k` for belief `mu`.
    fn best_at(&self, k: usize, mu: f64) -> (f64, RewardPair) {
        best_option(self.available(k).iter(), mu).unwrap_or((0.0, RewardPair::ZERO))
    }
}

/// A dynamic contract in menu form with horizon `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MenuContract {
    pub tau: usize,
    /// `g_options[k-1]` is the good-news option of period `k`.
    pub g_options: Vec<Option<RewardPair>>,
    /// `b_options[k-1]` is the bad-news option of period `k`.
    pub b_options: Vec<Option<RewardPair>>,
    pub terminal: RewardPair,
    /// Auxiliary options `r^N_k` for nodes `0..tau`.
    pub aux_n: Option<Vec<RewardPair>>,
}

impl MenuContract {
    /// Contract offering no signal options, only `terminal`.
    pub fn terminal_only(tau: usize, terminal: RewardPair) -> Self {
        MenuContract {
            tau,
            g_options: vec![None; tau],
            b_options: vec![None; tau],
            terminal,
            aux_n: None,
        }
    }

    /// The same `g` and `b` options every period up to `tau`, terminal `n`;
    /// signals that cannot arrive get no option.
    pub fn constant(beliefs: &BeliefSystem, tau: usize, g: RewardPair, b: RewardPair, n: RewardPair) -> Self {
        let l = beliefs.env().lambda;
        MenuContract {
            tau,
            g_options: vec![l.is_active(Signal::G).then_some(g); tau],
            b_options: vec![l.is_active(Signal::B).then_some(b); tau],
            terminal: n,
            aux_n: None,
        }
    }

    /// A static rule offered as a menu: at every period each signal gets
    /// its best option and the terminal option is the best at `μ^N_τ`.
    pub fn from_static(beliefs: &BeliefSystem, rule: &StaticScoringRule, tau: usize) -> Self {
        let mut c = MenuContract::terminal_only(tau, rule.best(beliefs.no_info(tau)).1);
        for k in 1..=tau {
            for s in Signal::ALL {
                if let Some(mu) = beliefs.posterior(s, k) {
                    let r = rule.best(mu).1;
                    c.slot_mut(s)[k - 1] = Some(r);
                }
            }
        }
        c
    }

    fn slot_mut(&mut self, s: Signal) -> &mut Vec<Option<RewardPair>> {
        match s {
            Signal::G => &mut self.g_options,
            Signal::B => &mut self.b_options,
        }
    }

    pub fn signal_option(&self, s: Signal, k: usize) -> Option<RewardPair> {
        match s {
            Signal::G => self.g_options.get(k - 1).copied().flatten(),
            Signal::B => self.b_options.get(k - 1).copied().flatten(),
        }
    }

    pub fn get(&self, slot: Slot) -> Option<RewardPair> {
        match slot {
            Slot::Signal(s, k) => self.signal_option(s, k),
            Slot::Aux(k) => self.aux_n.as_ref().and_then(|a| a.get(k).copied()),
            Slot::Terminal => Some(self.terminal),
        }
    }

    /// Every option with its slot, in period order.
    pub fn slots(&self) -> Vec<(Slot, RewardPair)> {
        self.slots_from(0)
    }

    /// Options available at node `k`: signal options of periods `≥ k`,
    /// auxiliary options of nodes `≥ k`, and the terminal option.
    pub fn slots_from(&self, k: usize) -> Vec<(Slot, RewardPair)> {
        let mut out = Vec::new();
        if let Some(aux) = &self.aux_n {
            if k < self.tau {
                out.push((Slot::Aux(k), aux[k]));
            }
        }
        for j in k.max(1)..=self.tau {
            for s in Signal::ALL {
                if let Some(r) = self.signal_option(s, j) {
                    out.push((Slot::Signal(s, j), r));
                }
            }
            if let Some(aux) = &self.aux_n {
                if j < self.tau {
                    out.push((Slot::Aux(j), aux[j]));
                }
            }
        }
        out.push((Slot::Terminal, self.terminal));
        out
    }

    /// Checks that the contract's dimensions fit `beliefs`.
    pub fn check_dimensions(&self, beliefs: &BeliefSystem) -> Result<(), ContractError> {
        if self.tau > beliefs.periods() {
            return Err(ContractError::DimensionMismatch("horizon exceeds the number of periods"));
        }
        if self.g_options.len() != self.tau || self.b_options.len() != self.tau {
            return Err(ContractError::DimensionMismatch("signal option count differs from the horizon"));
        }
        if let Some(aux) = &self.aux_n {
            if aux.len() != self.tau {
                return Err(ContractError::DimensionMismatch("auxiliary option count differs from the horizon"));
            }
        }
        for k in 1..=self.tau {
            for s in Signal::ALL {
                if self.signal_option(s, k).is_some() && beliefs.posterior(s, k).is_none() {
                    return Err(ContractError::DimensionMismatch("option offered for a signal that cannot arrive"));
                }
            }
        }
        Ok(())
    }
}

impl Menu for MenuContract {
    fn available(&self, k: usize) -> Vec<RewardPair> {
        self.slots_from(k).into_iter().map(|(_, r)| r).collect()
    }
}

/// What produced a static rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    VShaped { kink: f64 },
    Lp,
    Staticized,
}

/// A finite menu available at all times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticScoringRule {
    options: Vec<RewardPair>,
    pub provenance: Option<Provenance>,
}

impl StaticScoringRule {
    /// Deduplicates `options` at [`DEDUP_TOL`], keeping first occurrences.
    pub fn new(options: Vec<RewardPair>, provenance: Option<Provenance>) -> Result<Self, ContractError> {
        let mut kept: Vec<RewardPair> = Vec::with_capacity(options.len());
        for r in options {
            RewardPair::new(r.r0, r.r1)?;
            if !kept.iter().any(|k| k.approx_eq(&r, DEDUP_TOL)) {
                kept.push(r);
            }
        }
        if kept.is_empty() {
            return Err(ContractError::EmptyMenu);
        }
        Ok(StaticScoringRule { options: kept, provenance })
    }

    pub fn options(&self) -> &[RewardPair] {
        &self.options
    }

    pub fn best(&self, mu: f64) -> (f64, RewardPair) {
        best_option(self.options.iter(), mu).expect("nonempty by construction")
    }

    pub fn indirect_utility(&self, mu: f64) -> f64 {
        self.best(mu).0
    }
}

impl Menu for StaticScoringRule {
    fn available(&self, _k: usize) -> Vec<RewardPair> {
        self.options.clone()
    }
}

impl From<VShapedParams> for StaticScoringRule {
    fn from(v: VShapedParams) -> Self {
        StaticScoringRule {
            options: vec![RewardPair { r0: v.r0, r1: 0.0 }, RewardPair { r0: 0.0, r1: v.r1 }],
            provenance: Some(Provenance::VShaped { kink: v.kink() }),
        }
    }
}

/// Two-option rule `{(r0, 0), (0, r1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VShapedParams {
    pub r0: f64,
    pub r1: f64,
}

impl VShapedParams {
    pub fn new(r0: f64, r1: f64) -> Result<Self, ContractError> {
        let p = RewardPair::new(r0, r1)?;
        if p.r0 + p.r1 <= 0.0 {
            return Err(ContractError::InvalidKink(f64::NAN));
        }
        Ok(VShapedParams { r0: p.r0, r1: p.r1 })
    }

    /// Belief at which both options yield equal utility.
    pub fn kink(&self) -> f64 {
        self.r0 / (self.r0 + self.r1)
    }

    pub fn rule(&self) -> StaticScoringRule {
        (*self).into()
    }
}

/// The V-shaped rule whose kink sits at `kink`, with the larger reward
/// normalized to 1.
pub fn v_shaped_from_kink(kink: f64) -> Result<VShapedParams, ContractError> {
    if !(kink > 0.0 && kink < 1.0) {
        return Err(ContractError::InvalidKink(kink));
    }
    Ok(if kink >= 0.5 {
        VShapedParams { r0: 1.0, r1: (1.0 - kink) / kink }
    } else {
        VShapedParams { r0: kink / (1.0 - kink), r1: 1.0 }
    })
}

/// How the good-news and terminal options of the myopic-incentive contract
/// are oriented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MyopicOrientation {
    /// Good-news and terminal options pay 1 in state 0, read literally as
    /// `(r0, r1) = (1, 0)`.
    Literal,
    /// Good-news and terminal options pay 1 in state 1, so each period's
    /// menu is the V-shaped rule with kink at the current no-information
    /// belief.
    Swapped,
}

/// Myopic-incentive contract: bad news in period `k` pays
/// `(μ^N_k / (1 − μ^N_k), 0)`; good news and the terminal option pay 1 in
/// one state according to `orientation`.
pub fn myopic_incentive_contract(
    beliefs: &BeliefSystem,
    tau: usize,
    orientation: MyopicOrientation,
) -> Result<MenuContract, ContractError> {
    let prior = beliefs.env().prior;
    if prior >= 0.5 {
        return Err(ContractError::DomainViolation(prior));
    }
    if tau > beliefs.periods() {
        return Err(ContractError::DimensionMismatch("horizon exceeds the number of periods"));
    }
    let top = match orientation {
        MyopicOrientation::Literal => RewardPair { r0: 1.0, r1: 0.0 },
        MyopicOrientation::Swapped => RewardPair { r0: 0.0, r1: 1.0 },
    };
    let l = beliefs.env().lambda;
    let mut c = MenuContract::terminal_only(tau, top);
    for k in 1..=tau {
        let mu = beliefs.no_info(k);
        if l.is_active(Signal::G) {
            c.g_options[k - 1] = Some(top);
        }
        if l.is_active(Signal::B) {
            c.b_options[k - 1] = Some(RewardPair::new(mu / (1.0 - mu), 0.0)?);
        }
    }
    Ok(c)
}

/// Who holds a belief when choosing from the menu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bearer {
    Signal(Signal, usize),
    Aux(usize),
    Terminal,
}

impl fmt::Display for Bearer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bearer::Signal(s, k) => write!(f, "{s}@{k}"),
            Bearer::Aux(k) => write!(f, "N@{k}"),
            Bearer::Terminal => f.write_str("N@terminal"),
        }
    }
}

/// A bearer who strictly prefers another available option to their own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcViolation {
    pub bearer: Bearer,
    pub offending: Slot,
    /// `u(own) − u(offending)`; negative.
    pub slack: f64,
}

/// Lists every incentive violation larger than [`IC_TOL`].
pub fn check_ic(contract: &MenuContract, beliefs: &BeliefSystem) -> Result<Vec<IcViolation>, ContractError> {
    contract.check_dimensions(beliefs)?;
    let tau = contract.tau;
    let mut bearers: Vec<(Bearer, usize, f64, RewardPair)> = Vec::new();
    for k in 1..=tau {
        for s in Signal::ALL {
            if let (Some(r), Some(mu)) = (contract.signal_option(s, k), beliefs.posterior(s, k)) {
                bearers.push((Bearer::Signal(s, k), k, mu, r));
            }
        }
    }
    if let Some(aux) = &contract.aux_n {
        for (k, r) in aux.iter().enumerate() {
            bearers.push((Bearer::Aux(k), k, beliefs.no_info(k), *r));
        }
    }
    bearers.push((Bearer::Terminal, tau, beliefs.no_info(tau), contract.terminal));

    let mut out = Vec::new();
    for (bearer, k, mu, own) in bearers {
        let own_u = own.utility(mu);
        for (slot, r) in contract.slots_from(k) {
            let slack = own_u - r.utility(mu);
            if slack < -IC_TOL {
                out.push(IcViolation { bearer, offending: slot, slack });
            }
        }
    }
    Ok(out)
}

/// Maximizes `u(mu, r)` over the unit box subject to
/// `u(b_i, r) ≤ v_i` for each `(b_i, v_i)` in `caps`.
///
/// The optimum of this two-variable program lies at a vertex of the
/// feasible polygon, so it is found by enumerating intersections of
/// constraint lines and box edges. Ties go to the smaller state-1 reward.
pub fn maximize_under_caps(mu: f64, caps: &[(f64, f64)]) -> Option<RewardPair> {
    const FEAS_TOL: f64 = 1e-12;
    // Lines a·r0 + b·r1 = c.
    let mut lines: Vec<(f64, f64, f64)> = vec![(1.0, 0.0, 0.0), (1.0, 0.0, 1.0), (0.0, 1.0, 0.0), (0.0, 1.0, 1.0)];
    for &(b, v) in caps {
        lines.push((1.0 - b, b, v));
    }
    let feasible = |p: (f64, f64)| {
        p.0 >= -FEAS_TOL
            && p.0 <= 1.0 + FEAS_TOL
            && p.1 >= -FEAS_TOL
            && p.1 <= 1.0 + FEAS_TOL
            && caps.iter().all(|&(b, v)| (1.0 - b) * p.0 + b * p.1 <= v + FEAS_TOL)
    };
    let mut best: Option<(f64, RewardPair)> = None;
    for i in 0..lines.len() {
        for j in (i + 1)..lines.len() {
            let (a1, b1, c1) = lines[i];
            let (a2, b2, c2) = lines[j];
            let det = a1 * b2 - a2 * b1;
            if det.abs() < 1e-14 {
                continue;
            }
            let r0 = (c1 * b2 - c2 * b1) / det;
            let r1 = (a1 * c2 - a2 * c1) / det;
            if !feasible((r0, r1)) {
                continue;
            }
            let p = RewardPair { r0: r0.clamp(0.0, 1.0), r1: r1.clamp(0.0, 1.0) };
            let u = p.utility(mu);
            best = match best {
                Some((bu, bp)) if !(u > bu + TIE_TOL || ((u - bu).abs() <= TIE_TOL && p.r1 < bp.r1)) => Some((bu, bp)),
                _ => Some((u, p)),
            };
        }
    }
    best.map(|(_, p)| p)
}

/// No-information utilities `u^N_k` at nodes `0..=tau`: the best available
/// option at each node.
pub fn no_info_utilities<M: Menu + ?Sized>(menu: &M, beliefs: &BeliefSystem, tau: usize) -> Vec<f64> {
    (0..=tau).map(|k| menu.best_at(k, beliefs.no_info(k)).0).collect()
}

/// Rewrites an incentive-compatible contract into the decreasing-bad-news /
/// maximal-good-news form.
///
/// The no-information utility at each node is kept and realized by the
/// option with the largest state-0 reward; that option becomes the node's
/// auxiliary option, the bad-news option of the same period, and (at the
/// horizon) the terminal option. Good-news options are then raised to the
/// best option that no earlier node prefers to its own. In perfect-learning
/// environments bad news and the terminal option pay `(1, 0)` whenever
/// that keeps the contract incentive compatible.
pub fn canonicalize(contract: &MenuContract, beliefs: &BeliefSystem) -> Result<MenuContract, ContractError> {
    contract.check_dimensions(beliefs)?;
    let tau = contract.tau;
    let class = beliefs.env().classify();
    let l = beliefs.env().lambda;
    let g_active = l.is_active(Signal::G);
    let b_active = l.is_active(Signal::B);

    if class.perfect_learning && !class.stationary {
        // State 0 always ends with bad news or no news: pay it fully there.
        let full0 = RewardPair { r0: 1.0, r1: 0.0 };
        let mut base = contract.clone();
        base.terminal = full0;
        for k in 1..=tau {
            if b_active {
                base.b_options[k - 1] = Some(full0);
            }
        }
        let caps_u = no_info_utilities(&base, beliefs, tau);
        let mut out = base.clone();
        out.aux_n = Some((0..tau).map(|k| RewardPair::rebalanced(caps_u[k], beliefs.no_info(k))).collect());
        if g_active {
            for k in 1..=tau {
                let caps: Vec<(f64, f64)> = (0..=k).map(|j| (beliefs.no_info(j), caps_u[j])).collect();
                let mu = beliefs.posterior(Signal::G, k).unwrap();
                out.g_options[k - 1] =
                    Some(maximize_under_caps(mu, &caps).ok_or(ContractError::InfeasibleCanonicalization(k))?);
            }
        }
        // A late no-information holder with a high belief may prefer good
        // news over (1, 0); then the general form applies.
        if check_ic(&out, beliefs)?.is_empty() {
            return Ok(out);
        }
    }

    let u_n = no_info_utilities(contract, beliefs, tau);
    let rebal: Vec<RewardPair> = (0..=tau).map(|k| RewardPair::rebalanced(u_n[k], beliefs.no_info(k))).collect();
    let mut out = MenuContract::terminal_only(tau, rebal[tau]);
    out.aux_n = Some(rebal[..tau].to_vec());
    if g_active {
        for k in 1..=tau {
            let caps: Vec<(f64, f64)> = (0..=k).map(|j| (beliefs.no_info(j), u_n[j])).collect();
            let mu = beliefs.posterior(Signal::G, k).unwrap();
            out.g_options[k - 1] =
                Some(maximize_under_caps(mu, &caps).ok_or(ContractError::InfeasibleCanonicalization(k))?);
        }
    }
    if b_active {
        // Usually the rebalanced option. When bad news leaves the belief
        // above the no-information belief, its holder may prefer another
        // option still on the menu or the one it had; that is copied.
        for k in (1..=tau).rev() {
            let mu = beliefs.posterior(Signal::B, k).unwrap();
            let candidates = rebal[k..]
                .iter()
                .chain(out.g_options[k - 1..].iter().flatten())
                .chain(out.b_options[k..].iter().flatten())
                .chain(contract.b_options[k - 1].iter());
            let mut best = (rebal[k].utility(mu), rebal[k]);
            for r in candidates {
                let u = r.utility(mu);
                if u > best.0 + IC_TOL {
                    best = (u, *r);
                }
            }
            out.b_options[k - 1] = Some(best.1);
        }
    }
    Ok(out)
}

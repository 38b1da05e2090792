//! Learning environment, Bayesian belief paths and signal-arrival laws.
//!
//! Periods are numbered `1..=K`. Node `k` is the point after `k` periods of
//! effort with only null signals; node `0` carries the prior. A signal that
//! arrives during period `k` is drawn from the law at node `k - 1`.
//!
//! Arrival intensities are rates: the per-period arrival probability of
//! signal `s` in state `θ` is `λ_θ^s · Δ`.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Tolerance for the probability identities checked at construction.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Tolerance for the belief martingale identity.
pub const MARTINGALE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("field `{field}` is not a finite number")]
    NonFinite { field: &'static str },
    #[error("invalid rate: {0}")]
    InvalidRate(&'static str),
    #[error("signal labeling violated: {0}")]
    LabelViolation(&'static str),
    #[error("beliefs must drift toward state 0: total state-1 rate {state1} < state-0 rate {state0}")]
    DriftViolation { state1: f64, state0: f64 },
    #[error("prior {0} must lie strictly inside (0, 1)")]
    InvalidPrior(f64),
    #[error("cost {0} must be nonnegative")]
    InvalidCost(f64),
    #[error("period length {0} must be positive")]
    InvalidDelta(f64),
    #[error("the number of periods must be positive")]
    NoPeriods,
    #[error("period {index} outside {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },
    #[error("probability identity `{identity}` violated by {error:e} at period {period}")]
    IdentityViolation {
        identity: &'static str,
        period: usize,
        error: f64,
    },
}

/// The two non-null signals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Signal {
    /// Good news: more likely in state 1.
    G,
    /// Bad news: more likely in state 0.
    B,
}

impl Signal {
    pub const ALL: [Signal; 2] = [Signal::G, Signal::B];

    pub fn as_str(self) -> &'static str {
        match self {
            Signal::G => "G",
            Signal::B => "B",
        }
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Arrival rates per signal and state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rates {
    pub g1: f64,
    pub g0: f64,
    pub b1: f64,
    pub b0: f64,
}

impl Rates {
    pub fn new(g1: f64, g0: f64, b1: f64, b0: f64) -> Self {
        Rates { g1, g0, b1, b0 }
    }

    /// Rate of `signal` in `state` (0 or 1).
    pub fn rate(&self, signal: Signal, state1: bool) -> f64 {
        match (signal, state1) {
            (Signal::G, true) => self.g1,
            (Signal::G, false) => self.g0,
            (Signal::B, true) => self.b1,
            (Signal::B, false) => self.b0,
        }
    }

    pub fn total1(&self) -> f64 {
        self.g1 + self.b1
    }

    pub fn total0(&self) -> f64 {
        self.g0 + self.b0
    }

    /// Whether `signal` can arrive in either state.
    pub fn is_active(&self, signal: Signal) -> bool {
        self.rate(signal, true) > 0.0 || self.rate(signal, false) > 0.0
    }
}

/// Primitives of the learning problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    /// Period length Δ.
    pub delta: f64,
    /// Number of effort opportunities K.
    pub periods: usize,
    /// Prior probability D of state 1.
    pub prior: f64,
    /// Flow cost c; one period of effort costs `c · Δ`.
    pub cost: f64,
    pub lambda: Rates,
}

/// Environment classes with dedicated structural results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnvironmentClass {
    /// Equal total arrival rates: null signals leave beliefs unchanged.
    pub stationary: bool,
    /// Every active signal reveals the state.
    pub perfect_learning: bool,
    /// Exactly one signal can arrive.
    pub single_signal: bool,
}

impl EnvironmentSpec {
    /// Checks every invariant and returns the environment unchanged on success.
    pub fn validate(self) -> Result<Self, ModelError> {
        let l = &self.lambda;
        let fields = [
            ("delta", self.delta),
            ("prior", self.prior),
            ("cost", self.cost),
            ("lambda.g1", l.g1),
            ("lambda.g0", l.g0),
            ("lambda.b1", l.b1),
            ("lambda.b0", l.b0),
        ];
        for (field, v) in fields {
            if !v.is_finite() {
                return Err(ModelError::NonFinite { field });
            }
        }
        if self.delta <= 0.0 {
            return Err(ModelError::InvalidDelta(self.delta));
        }
        if self.periods == 0 {
            return Err(ModelError::NoPeriods);
        }
        if !(self.prior > 0.0 && self.prior < 1.0) {
            return Err(ModelError::InvalidPrior(self.prior));
        }
        if self.cost < 0.0 {
            return Err(ModelError::InvalidCost(self.cost));
        }
        if l.g1 < 0.0 || l.g0 < 0.0 || l.b1 < 0.0 || l.b0 < 0.0 {
            return Err(ModelError::InvalidRate("arrival rates must be nonnegative"));
        }
        if l.total1() * self.delta > 1.0 {
            return Err(ModelError::InvalidRate(
                "per-period arrival probability in state 1 exceeds 1",
            ));
        }
        if l.total0() * self.delta > 1.0 {
            return Err(ModelError::InvalidRate(
                "per-period arrival probability in state 0 exceeds 1",
            ));
        }
        if l.g1 < l.g0 {
            return Err(ModelError::LabelViolation(
                "good news must be weakly more likely in state 1 (g1 >= g0)",
            ));
        }
        if l.b1 > l.b0 {
            return Err(ModelError::LabelViolation(
                "bad news must be weakly more likely in state 0 (b1 <= b0)",
            ));
        }
        if l.total1() < l.total0() - IDENTITY_TOL {
            return Err(ModelError::DriftViolation {
                state1: l.total1(),
                state0: l.total0(),
            });
        }
        Ok(self)
    }

    /// Per-period cost of effort `c · Δ`.
    pub fn period_cost(&self) -> f64 {
        self.cost * self.delta
    }

    /// Per-period arrival probability of any signal in the given state.
    pub fn arrival_prob(&self, state1: bool) -> f64 {
        if state1 {
            self.lambda.total1() * self.delta
        } else {
            self.lambda.total0() * self.delta
        }
    }

    pub fn classify(&self) -> EnvironmentClass {
        let l = &self.lambda;
        let g = l.is_active(Signal::G);
        let b = l.is_active(Signal::B);
        // G reveals state 1 iff it never arrives in state 0, and symmetrically for B.
        let g_reveals = !g || l.g0 == 0.0;
        let b_reveals = !b || l.b1 == 0.0;
        EnvironmentClass {
            stationary: (l.total1() - l.total0()).abs() <= IDENTITY_TOL,
            perfect_learning: (g || b) && g_reveals && b_reveals,
            single_signal: g != b,
        }
    }
}

/// Precomputed belief paths of an environment.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefSystem {
    env: EnvironmentSpec,
    mu_n: Vec<f64>,
    mu_g: Vec<Option<f64>>,
    mu_b: Vec<Option<f64>>,
}

fn bayes(prior: f64, like1: f64, like0: f64) -> Option<f64> {
    let num = prior * like1;
    let den = num + (1.0 - prior) * like0;
    if den > 0.0 {
        Some(num / den)
    } else {
        None
    }
}

impl BeliefSystem {
    /// Builds the belief paths by forward recursion and checks the
    /// martingale identity at every period.
    pub fn new(env: EnvironmentSpec) -> Result<Self, ModelError> {
        let env = env.validate()?;
        let k_max = env.periods;
        let l = env.lambda;
        let (p1, p0) = (env.arrival_prob(true), env.arrival_prob(false));
        let mut mu_n = Vec::with_capacity(k_max + 1);
        let mut mu_g = Vec::with_capacity(k_max);
        let mut mu_b = Vec::with_capacity(k_max);
        mu_n.push(env.prior);
        for _ in 1..=k_max {
            let prev = *mu_n.last().unwrap();
            // A positive prior with p1 < 1 keeps the denominator positive;
            // p1 = 1 with p0 < 1 sends the belief to 0.
            let next = bayes(prev, 1.0 - p1, 1.0 - p0).unwrap_or(prev);
            mu_n.push(next);
            mu_g.push(if l.is_active(Signal::G) {
                bayes(prev, l.g1, l.g0)
            } else {
                None
            });
            mu_b.push(if l.is_active(Signal::B) {
                bayes(prev, l.b1, l.b0)
            } else {
                None
            });
        }
        let sys = BeliefSystem {
            env,
            mu_n,
            mu_g,
            mu_b,
        };
        sys.check_identities()?;
        Ok(sys)
    }

    fn check_identities(&self) -> Result<(), ModelError> {
        for k in 1..=self.periods() {
            let prev = self.no_info(k - 1);
            let mut mix = self.null_prob(k) * self.no_info(k);
            for s in Signal::ALL {
                if let Some(post) = self.posterior(s, k) {
                    mix += self.signal_prob(s, k) * post;
                }
            }
            let err = (mix - prev).abs();
            if err > MARTINGALE_TOL {
                return Err(ModelError::IdentityViolation {
                    identity: "martingale",
                    period: k,
                    error: err,
                });
            }
            let cur = self.no_info(k);
            if !(0.0..=1.0).contains(&cur) || cur > prev + IDENTITY_TOL {
                return Err(ModelError::IdentityViolation {
                    identity: "monotone drift",
                    period: k,
                    error: cur - prev,
                });
            }
        }
        Ok(())
    }

    pub fn env(&self) -> &EnvironmentSpec {
        &self.env
    }

    /// Number of periods K.
    pub fn periods(&self) -> usize {
        self.env.periods
    }

    /// No-information belief μ^N_k at node `k` (`0..=K`).
    pub fn no_info(&self, k: usize) -> f64 {
        self.mu_n[k]
    }

    pub fn no_info_path(&self) -> &[f64] {
        &self.mu_n
    }

    /// Posterior after `signal` arrives in period `k` (`1..=K`); `None` when
    /// the signal cannot arrive.
    pub fn posterior(&self, signal: Signal, k: usize) -> Option<f64> {
        debug_assert!(k >= 1 && k <= self.periods());
        match signal {
            Signal::G => self.mu_g[k - 1],
            Signal::B => self.mu_b[k - 1],
        }
    }

    /// Probability that `signal` arrives in period `k` given no arrival
    /// before it.
    pub fn signal_prob(&self, signal: Signal, k: usize) -> f64 {
        let prev = self.no_info(k - 1);
        let d = self.env.delta;
        let l = &self.env.lambda;
        prev * l.rate(signal, true) * d + (1.0 - prev) * l.rate(signal, false) * d
    }

    /// Probability of a null signal in period `k` given no arrival before it.
    pub fn null_prob(&self, k: usize) -> f64 {
        let prev = self.no_info(k - 1);
        prev * (1.0 - self.env.arrival_prob(true)) + (1.0 - prev) * (1.0 - self.env.arrival_prob(false))
    }

    /// Arrival law for effort starting in period `start` (`1..=K`).
    pub fn arrival_law(&self, start: usize) -> Result<ArrivalLaw, ModelError> {
        ArrivalLaw::new(self, start)
    }

    /// Largest `k ≤ K` with `μ^N_{k-1} ≥ min{1/2, c / (λ_1^G − λ_0^G)}`: an
    /// upper bound on the stopping time any bounded contract can induce.
    pub fn max_horizon(&self) -> usize {
        let l = &self.env.lambda;
        let gap = l.g1 - l.g0;
        if gap <= 0.0 {
            return self.periods();
        }
        let threshold = f64::min(0.5, self.env.cost / gap);
        (1..=self.periods())
            .take_while(|&k| self.no_info(k - 1) >= threshold - 1e-12)
            .last()
            .unwrap_or(0)
    }
}

/// Distribution of the first arrival for effort that starts in period
/// `start`, conditional on no arrival before it.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalLaw {
    start: usize,
    pmf_g: Vec<f64>,
    pmf_b: Vec<f64>,
    survival: Vec<f64>,
}

impl ArrivalLaw {
    fn new(beliefs: &BeliefSystem, start: usize) -> Result<Self, ModelError> {
        let k_max = beliefs.periods();
        if start == 0 || start > k_max {
            return Err(ModelError::IndexOutOfRange {
                index: start,
                lo: 1,
                hi: k_max,
            });
        }
        let env = beliefs.env();
        let prior = beliefs.no_info(start - 1);
        let (q1, q0) = (1.0 - env.arrival_prob(true), 1.0 - env.arrival_prob(false));
        let d = env.delta;
        let l = &env.lambda;
        let n = k_max - start + 1;
        let mut pmf_g = Vec::with_capacity(n);
        let mut pmf_b = Vec::with_capacity(n);
        let mut survival = Vec::with_capacity(n);
        // Alive probabilities per state before period j.
        let (mut a1, mut a0) = (prior, 1.0 - prior);
        for _ in 0..n {
            pmf_g.push(a1 * l.g1 * d + a0 * l.g0 * d);
            pmf_b.push(a1 * l.b1 * d + a0 * l.b0 * d);
            a1 *= q1;
            a0 *= q0;
            survival.push(a1 + a0);
        }
        let law = ArrivalLaw {
            start,
            pmf_g,
            pmf_b,
            survival,
        };
        let mut mass = 0.0;
        for j in start..=k_max {
            mass += law.pmf(Signal::G, j) + law.pmf(Signal::B, j);
            let err = (mass + law.survival(j) - 1.0).abs();
            if err > IDENTITY_TOL {
                return Err(ModelError::IdentityViolation {
                    identity: "mass conservation",
                    period: j,
                    error: err,
                });
            }
        }
        Ok(law)
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// Last period covered by the law.
    pub fn end(&self) -> usize {
        self.start + self.survival.len() - 1
    }

    /// Probability that the first arrival is `signal` in period `j`.
    pub fn pmf(&self, signal: Signal, j: usize) -> f64 {
        let i = j - self.start;
        match signal {
            Signal::G => self.pmf_g[i],
            Signal::B => self.pmf_b[i],
        }
    }

    /// Probability of no arrival through period `j`; equals 1 at
    /// `j = start - 1`.
    pub fn survival(&self, j: usize) -> f64 {
        if j + 1 == self.start {
            1.0
        } else {
            self.survival[j - self.start]
        }
    }

    fn check_tau(&self, tau: usize) -> Result<(), ModelError> {
        if tau < self.start || tau > self.end() {
            return Err(ModelError::IndexOutOfRange {
                index: tau,
                lo: self.start,
                hi: self.end(),
            });
        }
        Ok(())
    }

    /// Expected number of effort periods when working from `start` through
    /// `tau` or until the first arrival.
    pub fn expected_periods(&self, tau: usize) -> Result<f64, ModelError> {
        self.check_tau(tau)?;
        Ok((self.start..=tau).map(|j| self.survival(j - 1)).sum())
    }
}

/// Expected cost `cΔ · Σ_{j=start..tau} S_start(j-1)` of working from the
/// law's start period through `tau`.
pub fn expected_effort_cost(
    env: &EnvironmentSpec,
    law: &ArrivalLaw,
    tau: usize,
) -> Result<f64, ModelError> {
    Ok(env.period_cost() * law.expected_periods(tau)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(delta: f64, periods: usize, prior: f64, cost: f64, r: [f64; 4]) -> EnvironmentSpec {
        EnvironmentSpec {
            delta,
            periods,
            prior,
            cost,
            lambda: Rates::new(r[0], r[1], r[2], r[3]),
        }
    }

    #[test]
    fn reference_parameters_accepted() {
        assert!(env(0.1, 60, 0.4, 0.2, [1.0, 0.0, 0.0, 0.0]).validate().is_ok());
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            env(0.5, 10, 0.4, 0.2, [3.0, 0.0, 0.0, 0.0]).validate(),
            Err(ModelError::InvalidRate(_))
        ));
        assert!(matches!(
            env(0.1, 10, 0.4, 0.2, [0.2, 0.3, 0.0, 0.0]).validate(),
            Err(ModelError::LabelViolation(_))
        ));
        assert!(matches!(
            env(0.1, 10, 0.4, 0.2, [0.3, 0.0, 0.2, 0.1]).validate(),
            Err(ModelError::LabelViolation(_))
        ));
        assert!(matches!(
            env(0.1, 10, 0.4, 0.2, [0.5, 0.4, 0.0, 0.3]).validate(),
            Err(ModelError::DriftViolation { .. })
        ));
        assert!(matches!(
            env(0.1, 10, 1.0, 0.2, [1.0, 0.0, 0.0, 0.0]).validate(),
            Err(ModelError::InvalidPrior(_))
        ));
        assert!(matches!(
            env(0.1, 10, 0.5, -0.1, [1.0, 0.0, 0.0, 0.0]).validate(),
            Err(ModelError::InvalidCost(_))
        ));
        assert!(matches!(
            env(0.1, 10, f64::NAN, 0.1, [1.0, 0.0, 0.0, 0.0]).validate(),
            Err(ModelError::NonFinite { field: "prior" })
        ));
        assert!(matches!(
            env(0.1, 0, 0.5, 0.1, [1.0, 0.0, 0.0, 0.0]).validate(),
            Err(ModelError::NoPeriods)
        ));
    }

    #[test]
    fn no_info_update_hand_values() {
        // λ_1Δ = 0.2, λ_0Δ = 0.1 with Δ = 1.
        let b = BeliefSystem::new(env(1.0, 3, 0.5, 0.0, [0.2, 0.1, 0.0, 0.0])).unwrap();
        assert!((b.no_info(1) - 8.0 / 17.0).abs() < 1e-15);
        assert!((b.posterior(Signal::G, 1).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(b.posterior(Signal::B, 1), None);
    }

    #[test]
    fn stationary_beliefs_constant() {
        let b = BeliefSystem::new(env(0.1, 50, 0.37, 0.1, [1.0, 0.5, 0.5, 1.0])).unwrap();
        for k in 0..=50 {
            assert!((b.no_info(k) - 0.37).abs() < 1e-14);
        }
        assert!(b.env().classify().stationary);
    }

    #[test]
    fn arrival_law_hand_values() {
        let stat = BeliefSystem::new(env(0.1, 5, 0.3, 0.5, [1.5, 1.5, 0.5, 0.5])).unwrap();
        let law = stat.arrival_law(1).unwrap();
        assert!((law.pmf(Signal::G, 1) - 0.15).abs() < 1e-15);
        assert!((law.pmf(Signal::B, 1) - 0.05).abs() < 1e-15);
        assert!((law.survival(1) - 0.8).abs() < 1e-15);
        assert_eq!(law.survival(0), 1.0);
        // cΔ = 0.05, τ = 2: 0.05 · (1 + 0.8).
        let cost = expected_effort_cost(stat.env(), &law, 2).unwrap();
        assert!((cost - 0.09).abs() < 1e-15);

        let drift = BeliefSystem::new(env(1.0, 4, 0.5, 0.0, [0.2, 0.1, 0.0, 0.0])).unwrap();
        let law = drift.arrival_law(1).unwrap();
        assert!((law.survival(2) - 0.725).abs() < 1e-15);
        assert!(matches!(drift.arrival_law(5), Err(ModelError::IndexOutOfRange { .. })));
        assert!(matches!(drift.arrival_law(0), Err(ModelError::IndexOutOfRange { .. })));
        assert!(law.expected_periods(5).is_err());
    }

    #[test]
    fn no_arrivals() {
        let b = BeliefSystem::new(env(0.1, 4, 0.3, 0.5, [0.0, 0.0, 0.0, 0.0])).unwrap();
        let law = b.arrival_law(1).unwrap();
        for j in 1..=4 {
            assert_eq!(law.survival(j), 1.0);
            assert_eq!(law.pmf(Signal::G, j), 0.0);
        }
        assert!((expected_effort_cost(b.env(), &law, 4).unwrap() - 0.2).abs() < 1e-15);
        let zero_cost = EnvironmentSpec { cost: 0.0, ..*b.env() };
        assert_eq!(expected_effort_cost(&zero_cost, &law, 3).unwrap(), 0.0);
    }

    #[test]
    fn max_horizon_cases() {
        // Threshold 0.5 above the prior: nothing implementable.
        let b = BeliefSystem::new(env(0.1, 20, 0.3, 5.0, [1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(b.max_horizon(), 0);
        // Stationary with the prior above the threshold.
        let b = BeliefSystem::new(env(0.1, 20, 0.3, 0.1, [1.0, 0.5, 0.5, 1.0])).unwrap();
        assert_eq!(b.max_horizon(), 20);
        // Threshold crossing: iterate the recursion directly.
        let b = BeliefSystem::new(env(0.1, 60, 0.4, 0.2, [1.0, 0.0, 0.0, 0.0])).unwrap();
        let mut mu = 0.4;
        let mut first_below = None;
        for k in 1..=60 {
            mu = mu * 0.9 / (mu * 0.9 + (1.0 - mu));
            if mu < 0.2 {
                first_below = Some(k);
                break;
            }
        }
        // First node with μ^N_k < 0.2 is k*, so the last period whose
        // starting belief clears the threshold is k*.
        assert_eq!(b.max_horizon(), first_below.unwrap());
    }

    #[test]
    fn classify_envs() {
        let c = env(0.1, 5, 0.3, 0.1, [1.0, 0.0, 0.0, 0.0]).classify();
        assert!(c.perfect_learning && c.single_signal && !c.stationary);
        let c = env(0.1, 5, 0.3, 0.1, [1.0, 0.5, 0.0, 0.0]).classify();
        assert!(!c.perfect_learning && c.single_signal);
        let c = env(0.1, 5, 0.3, 0.1, [1.0, 0.0, 0.0, 0.5]).classify();
        assert!(c.perfect_learning && !c.single_signal);
    }
}

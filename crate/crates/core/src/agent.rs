//! The agent's side: stopping-strategy payoffs, the best-response dynamic
//! program and an exhaustive effort-subset oracle for short horizons.
//!
//! Indifference is always broken toward effort.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::contracts::{best_option, Menu, RewardPair};
use crate::model::{expected_effort_cost, BeliefSystem, ModelError, Signal};

/// Tolerance within which continuing counts as weakly optimal.
pub const EFFORT_TIE_TOL: f64 = 1e-9;
/// Largest horizon the subset oracle accepts.
pub const ORACLE_MAX_PERIODS: usize = 14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AgentError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("oracle limited to {max} periods, got {got}")]
    HorizonTooLarge { got: usize, max: usize },
}

/// Payoff of working from `start` through `tau` or until a signal arrives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingEvaluation {
    pub tau: usize,
    pub gross_reward: f64,
    pub cost: f64,
    pub net: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Action {
    Work,
    Stop,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::Work => "work",
            Action::Stop => "stop",
        }
    }
}

/// Solution of the agent's optimal stopping problem at no-signal nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub tau_star: usize,
    /// Continuation value at nodes `0..=K`.
    pub value: Vec<f64>,
    /// Value of stopping immediately at nodes `0..=K`.
    pub stop_value: Vec<f64>,
    /// Optimal action at nodes `0..=K`; the last node always stops.
    pub action: Vec<Action>,
}

/// Expected reward and cost of the stopping strategy `(start, tau)`.
///
/// On arrival in period `j` the agent takes the best option available at
/// node `j`; without arrival, the best option available at node `tau`.
pub fn evaluate_stopping<M: Menu + ?Sized>(
    beliefs: &BeliefSystem,
    menu: &M,
    start: usize,
    tau: usize,
) -> Result<StoppingEvaluation, AgentError> {
    let law = beliefs.arrival_law(start)?;
    let cost = expected_effort_cost(beliefs.env(), &law, tau)?;
    let mut gross = 0.0;
    for j in start..=tau {
        let opts = menu.available(j);
        for s in Signal::ALL {
            if let Some(mu) = beliefs.posterior(s, j) {
                gross += law.pmf(s, j) * best_value(&opts, mu);
            }
        }
    }
    gross += law.survival(tau) * best_value(&menu.available(tau), beliefs.no_info(tau));
    Ok(StoppingEvaluation { tau, gross_reward: gross, cost, net: gross - cost })
}

fn best_value(opts: &[RewardPair], mu: f64) -> f64 {
    best_option(opts.iter(), mu).map_or(0.0, |(v, _)| v)
}

/// Backward induction over the no-signal nodes `0..=K`.
pub fn best_response<M: Menu + ?Sized>(beliefs: &BeliefSystem, menu: &M) -> BestResponse {
    let k_max = beliefs.periods();
    let cost = beliefs.env().period_cost();
    let mut value = alloc::vec![0.0; k_max + 1];
    let mut stop_value = alloc::vec![0.0; k_max + 1];
    let mut action = alloc::vec![Action::Stop; k_max + 1];

    let mut next_opts = menu.available(k_max);
    stop_value[k_max] = best_value(&next_opts, beliefs.no_info(k_max));
    value[k_max] = stop_value[k_max];
    for k in (0..k_max).rev() {
        let opts = menu.available(k);
        let stop = best_value(&opts, beliefs.no_info(k));
        let mut cont = -cost + beliefs.null_prob(k + 1) * value[k + 1];
        for s in Signal::ALL {
            if let Some(mu) = beliefs.posterior(s, k + 1) {
                cont += beliefs.signal_prob(s, k + 1) * best_value(&next_opts, mu);
            }
        }
        stop_value[k] = stop;
        if cont >= stop - EFFORT_TIE_TOL {
            value[k] = cont.max(stop);
            action[k] = Action::Work;
        } else {
            value[k] = stop;
        }
        next_opts = opts;
    }
    let tau_star = action.iter().position(|a| *a == Action::Stop).unwrap_or(k_max);
    BestResponse { tau_star, value, stop_value, action }
}

/// Effort subset encoded as a bitmask: bit `j - 1` set means period `j` is
/// worked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EffortSet(pub u32);

impl EffortSet {
    pub fn prefix(n: usize) -> Self {
        EffortSet(((1u64 << n) - 1) as u32)
    }

    pub fn periods(&self) -> impl Iterator<Item = usize> + '_ {
        (0..32).filter(move |b| self.0 >> b & 1 == 1).map(|b| b + 1)
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }
}

/// Exhaustive search over effort subsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub best_value: f64,
    pub best_set: EffortSet,
    /// Net value of every subset, indexed by bitmask.
    pub values: Vec<f64>,
}

impl OracleResult {
    /// Largest amount by which any subset beats the prefix of equal size.
    pub fn front_loading_gap(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(mask, v)| {
                let set = EffortSet(mask as u32);
                v - self.values[EffortSet::prefix(set.len()).0 as usize]
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value of the strategy that flips a fair coin between two subsets.
    pub fn mixture_value(&self, a: EffortSet, b: EffortSet) -> f64 {
        0.5 * (self.values[a.0 as usize] + self.values[b.0 as usize])
    }
}

/// Net value of working the periods of `set` in order until the first
/// arrival. A signal on the `m`-th worked period `j` leads to belief
/// `μ^s_m` and a choice among options available at node `j`; without
/// arrival the agent holds `μ^N_{|A|}` and chooses at the last worked
/// period.
pub fn effort_set_value<M: Menu + ?Sized>(beliefs: &BeliefSystem, menu: &M, set: EffortSet) -> f64 {
    let avail: Vec<Vec<RewardPair>> = (0..=beliefs.periods()).map(|k| menu.available(k)).collect();
    set_value(beliefs, &avail, set)
}

fn set_value(beliefs: &BeliefSystem, avail: &[Vec<RewardPair>], set: EffortSet) -> f64 {
    let cost = beliefs.env().period_cost();
    let mut alive = 1.0;
    let mut total = 0.0;
    let mut last = 0;
    for (i, j) in set.periods().enumerate() {
        let m = i + 1;
        total -= cost * alive;
        for s in Signal::ALL {
            if let Some(mu) = beliefs.posterior(s, m) {
                total += alive * beliefs.signal_prob(s, m) * best_value(&avail[j], mu);
            }
        }
        alive *= beliefs.null_prob(m);
        last = j;
    }
    total + alive * best_value(&avail[last], beliefs.no_info(set.len()))
}

/// Enumerates every subset of `{1..K}` as an effort plan.
pub fn brute_force_oracle<M: Menu + ?Sized>(beliefs: &BeliefSystem, menu: &M) -> Result<OracleResult, AgentError> {
    let k_max = beliefs.periods();
    if k_max > ORACLE_MAX_PERIODS {
        return Err(AgentError::HorizonTooLarge { got: k_max, max: ORACLE_MAX_PERIODS });
    }
    let avail: Vec<Vec<RewardPair>> = (0..=k_max).map(|k| menu.available(k)).collect();
    let values: Vec<f64> = (0u32..(1u32 << k_max)).map(|m| set_value(beliefs, &avail, EffortSet(m))).collect();
    let (best_mask, best_value) = values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bm, bv), (m, &v)| if v > bv + EFFORT_TIE_TOL { (m, v) } else { (bm, bv) });
    Ok(OracleResult { best_value, best_set: EffortSet(best_mask as u32), values })
}

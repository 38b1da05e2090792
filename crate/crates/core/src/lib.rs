//! Effort-maximizing reward contracts for an agent who learns about a binary
//! state through discretized Poisson signals.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod agent;
pub mod contracts;
pub mod lp;
pub mod model;
pub mod optimizer;

pub use agent::{best_response, brute_force_oracle, evaluate_stopping, BestResponse, StoppingEvaluation};
pub use contracts::{
    canonicalize, check_ic, myopic_incentive_contract, v_shaped_from_kink, MenuContract, RewardPair,
    StaticScoringRule, VShapedParams,
};
pub use model::{BeliefSystem, EnvironmentSpec, Rates, Signal};

/// Any error raised by this crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Contract(#[from] contracts::ContractError),
    #[error(transparent)]
    Agent(#[from] agent::AgentError),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
    #[error(transparent)]
    Optimizer(#[from] optimizer::OptimizerError),
}

//! Online block packing.
//!
//! Transactions arrive over time, each with a value that decays geometrically
//! while it waits and a demand vector over `m` resources. Every block has the
//! same per-resource capacities. This crate provides the online algorithms
//! (greedy fractional LP packing, oracle-based integral packing with
//! deterministic or randomized rounding, and batching), offline optima to
//! compare them against, adversarial lower-bound instances, and validators for
//! feasibility, slackness and myopic reasonableness.

pub mod model;
pub mod lp;
pub mod seeding;
pub mod rounding;
pub mod engine;
pub mod offline;
pub mod adversary;
pub mod harness;

pub use model::{
    Allocation, Block, Instance, ModelError, Transaction, TxnId, FEAS_TOL, WELFARE_RTOL,
};

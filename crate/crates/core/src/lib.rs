//! Online multi-objective combinatorial optimization with decomposed
//! position-wise bandits.
//!
//! The optimizer treats every decision position as a multi-armed bandit,
//! shares position-action statistics between several selection experts
//! (UCB or Thompson sampling, EXP3 and FTRL), refines solutions by local
//! search restricted to overlapping subproblems, and coordinates the overlap
//! with Lagrangian multipliers updated by entropic mirror descent. Running it
//! once per scalarization weight approximates the Pareto front.
//!
//! Module map:
//!
//! * [`problems`] benchmark generators and objective evaluation
//! * [`scalarization`] weight vectors and scalar rewards
//! * [`pareto`] dominance, archive and hypervolume
//! * [`decomposition`] sliding-window and k-NN subproblems
//! * [`experts`] shared statistics and the expert selection rules
//! * [`coordination`] soft violations and dual updates
//! * [`localsearch`] unit perturbations and greedy refinement
//! * [`engine`] the per-weight driver, baselines and regret traces

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coordination;
pub mod decomposition;
pub mod engine;
mod error;
pub mod experts;
pub mod localsearch;
pub mod pareto;
pub mod problems;
pub mod scalarization;

pub use error::{Error, Result};

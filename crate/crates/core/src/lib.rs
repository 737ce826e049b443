//! Learning the edges and couplings of sparse binary pairwise Markov (Ising)
//! models from samples.
//!
//! Three estimators are provided, all built on one ℓ1-penalized logistic
//! regression engine ([`solver`]):
//!
//! * node-wise fits symmetrized by keeping the smaller estimate per pair
//!   ([`MethodId::NLm`]),
//! * node-wise fits symmetrized by keeping the larger one ([`MethodId::NLM`]),
//! * a single global fit over the stacked conditional likelihoods with one
//!   parameter per pair ([`MethodId::GL`]).

pub mod conditions;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod sampling;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
pub use estimators::{estimate, Estimate, MethodId};
pub use model::{Dataset, EdgeVector, IsingModel, StateDistribution};
pub use solver::{FitResult, LogisticProblem};

//! Stochastic variance-reduced ADMM for linearly constrained composition
//! problems
//!
//! ```text
//! min_x,ω  F(x) + R(ω)   s.t.  Ax + Bω = 0,
//! F(x) = Σᵢ uᵢ fᵢ(Σⱼ wⱼ gⱼ(x)).
//! ```
//!
//! The crate is `no_std` (it needs `alloc`). Problems are described by a
//! [`Composition`] oracle wrapped in a [`CompositionProblem`], which adds
//! sampling weights and smoothness metadata; every oracle access is
//! charged to an [`OracleLedger`].

#![no_std]

extern crate alloc;

pub mod baselines;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod problem;
pub mod problems;
pub mod rate;
pub mod reference;
pub mod solver;

pub use error::{Error, Result};
pub use problem::{
    objective, soft_threshold, Composition, CompositionProblem, ConstraintSpec, OracleLedger,
    Proximal, Regularizer, Smoothness, Weights,
};
pub use solver::{
    run_algorithm1, run_algorithm2, Mode, ReferenceSolution, Run, RunError, RunOptions, SolverConfig,
    Trace, TraceRow,
};

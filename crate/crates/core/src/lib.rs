//! Evolution strategies that adapt a mutation matrix with rank-one updates
//! driven by two evolution paths, together with Cholesky CMA-ES and a
//! rank-one CMA-ES reference, the usual benchmark problems, per-generation
//! diagnostics and a batch harness with rank-sum comparisons.
//!
//! ```
//! use mmaes::{objectives::{Objective, Problem}, strategy::{self, EsParams, RunOptions, Variant}};
//!
//! let params = EsParams::default_params(8).unwrap();
//! let mut f = Objective::new(Problem::Ellipsoid, 8).unwrap();
//! let res = strategy::run(Variant::Mma, &mut f, &params, 42, 0, &RunOptions::for_dim(8)).unwrap();
//! assert!(res.success);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod diagnostics;
pub mod linalg;
pub mod objectives;
pub mod rng;
pub mod strategy;

pub use linalg::{Matrix, Vector};
pub use objectives::{Objective, Problem};
pub use rng::RngStream;
pub use strategy::{EsParams, EvolutionStrategy, RunOptions, RunResult, Variant};

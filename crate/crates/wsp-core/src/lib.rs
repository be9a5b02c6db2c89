//! Exact solvers for the workflow satisfiability problem.
//!
//! A workflow has `k` steps, `n` users, an authorization relation and a set
//! of constraints. Solvers run in time exponential only in `k`.

pub mod constraints;
pub mod genbench;
pub mod hierarchy;
pub mod kernel;
pub mod model;
pub mod solver;
pub mod stepset;

pub use stepset::{StepSet, SubsetTable, MAX_STEPS};

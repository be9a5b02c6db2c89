//! Reference oracle, instance generators from hardness reductions, and benchmarks.

pub mod bench;
pub mod coloring;
pub mod hitting;
pub mod nae;
pub mod oracle;
pub mod random;

pub use bench::{bench_run, write_csv, BenchRecord, BenchSpec};
pub use coloring::{gen_3coloring_or, three_colorable, Graph};
pub use hitting::{gen_hitting_set_counting, gen_hitting_set_eq, hitting_set_classes, hitting_set_exists, HittingSetInstance};
pub use nae::{canonical_formulas, gen_nae3sat, nae_satisfiable, random_formula, CnfFormula, Literal};
pub use oracle::{
    oracle_solve, oracle_solve_unpruned, oracle_solve_with_budget, OracleError, DEFAULT_ORACLE_BUDGET, ORACLE_MAX_STEPS,
};
pub use random::{gen_random, random_hierarchy, random_tree, seeded_rng, Mix, RandomSpec};

use crate::model::ModelError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{k} steps exceed the cap of {cap}")]
    StepLimitExceeded { k: usize, cap: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

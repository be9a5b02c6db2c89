//! Solvers and dispatch.

pub mod cover;
mod flat;
mod hierarchical;
mod min_users;
mod quotient;
mod search;

pub use cover::Backend;
pub use flat::{solve_flat, solve_flat_with};
pub use hierarchical::{solve_hierarchy, solve_hierarchy_with};
pub use min_users::{
    min_fully_authorized_users, min_fully_authorized_users_with, min_users_by_bisection, min_users_by_bisection_with,
    MinUsers,
};
pub use quotient::{quotient_instance, solve_quotient, solve_quotient_with};
pub use search::{solve_search, solve_search_with};

use crate::constraints::{classify, drop_trivial, rewrite_eq_type3, ConstraintError, Route};
use crate::hierarchy::{canonicalize, HierarchyError};
use crate::kernel::{kernelize, lift_plan, KernelError, Verdict};
use crate::model::{check_plan, Constraint, ConstraintType, ModelError, Plan, Relation, WorkflowInstance};
use std::fmt;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("constraint is not regular: {0}")]
    NonRegularConstraint(String),
    #[error("unsupported for this route: {0}")]
    Unsupported(String),
    #[error("user-level =/≠ constraints mixed with a block relation")]
    MixedRelations,
    #[error("explicit relation pairs are only supported by the oracle")]
    OracleOnlyConstraints,
    #[error("{k} steps exceed the cap of {cap}")]
    StepLimitExceeded { k: usize, cap: usize },
    #[error("{k} steps exceed the dense-table limit of {limit}")]
    DenseLimitExceeded { k: usize, limit: usize },
    #[error("hierarchy is missing or not canonical")]
    NotCanonical,
    #[error("search budget exhausted")]
    BudgetExceeded,
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl From<ConstraintError> for SolveError {
    fn from(e: ConstraintError) -> Self {
        match e {
            ConstraintError::StepLimitExceeded { k, cap } => SolveError::StepLimitExceeded { k, cap },
            ConstraintError::Model(ModelError::StepLimitExceeded { k, cap }) => SolveError::StepLimitExceeded { k, cap },
            ConstraintError::Model(m) => SolveError::Model(m),
            other => SolveError::Unsupported(other.to_string()),
        }
    }
}

impl SolveError {
    /// Errors that mean "this solver cannot handle the input" rather than "the input is wrong".
    pub fn is_capability(&self) -> bool {
        match self {
            SolveError::Model(ModelError::StepLimitExceeded { .. }) => true,
            SolveError::Model(_) | SolveError::Hierarchy(_) | SolveError::InternalInconsistency(_) => false,
            _ => true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Sat,
    Unsat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolverRoute {
    #[default]
    Flat,
    Quotient,
    Hierarchy,
    Search,
    Oracle,
    /// Decided during kernelization.
    Kernel,
}

impl fmt::Display for SolverRoute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverRoute::Flat => "flat",
            SolverRoute::Quotient => "quotient",
            SolverRoute::Hierarchy => "hierarchy",
            SolverRoute::Search => "search",
            SolverRoute::Oracle => "oracle",
            SolverRoute::Kernel => "kernel",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub route: SolverRoute,
    pub subsets_visited: u64,
    pub blocks_solved: usize,
    pub elapsed: Duration,
    /// User count after kernelization, when it ran.
    pub kernel_users: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub plan: Option<Plan>,
    pub stats: SolveStats,
}

impl SolveResult {
    pub fn from_plan(plan: Option<Plan>, stats: SolveStats) -> Self {
        let status = if plan.is_some() { SolveStatus::Sat } else { SolveStatus::Unsat };
        SolveResult { status, plan, stats }
    }

    pub fn is_sat(&self) -> bool {
        self.status == SolveStatus::Sat
    }
}

/// Which solver `solve_with` uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RouteChoice {
    /// Kernelize, then pick by constraint mix and size.
    #[default]
    Auto,
    Flat,
    Quotient,
    Hierarchy,
    Search,
    Oracle,
}

impl RouteChoice {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "auto" => RouteChoice::Auto,
            "flat" => RouteChoice::Flat,
            "quotient" => RouteChoice::Quotient,
            "hierarchy" => RouteChoice::Hierarchy,
            "search" => RouteChoice::Search,
            "oracle" => RouteChoice::Oracle,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    pub route: RouteChoice,
    pub backend: Backend,
    /// Largest step count for which the flat and quotient solvers build `2^k` tables.
    pub flat_dense_limit: usize,
    /// Largest step count (after rewrites) for the hierarchy solver.
    pub hierarchy_dense_limit: usize,
    pub kernelize: bool,
    pub search_node_budget: Option<u64>,
    pub oracle_budget: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            route: RouteChoice::Auto,
            backend: Backend::Auto,
            flat_dense_limit: 22,
            hierarchy_dense_limit: 18,
            kernelize: true,
            search_node_budget: None,
            oracle_budget: crate::genbench::DEFAULT_ORACLE_BUDGET,
        }
    }
}

pub fn solve(w: &WorkflowInstance) -> Result<SolveResult, SolveError> {
    solve_with(w, &SolveOptions::default())
}

/// Routes to a solver; any plan returned is checked against `w`.
pub fn solve_with(w: &WorkflowInstance, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let has_pairs = w.constraints().iter().any(|c| matches!(c.relation(), Some(Relation::Pairs(_))));
    if has_pairs && opts.route != RouteChoice::Oracle {
        return Err(SolveError::OracleOnlyConstraints);
    }
    let mut result = match opts.route {
        RouteChoice::Oracle => crate::genbench::oracle_solve_with_budget(w, opts.oracle_budget)
            .map_err(|_| SolveError::BudgetExceeded)?,
        RouteChoice::Search => solve_search_with(w, opts)?,
        RouteChoice::Flat => solve_flat_with(&rewrite_eq_type3(&drop_trivial(w)?)?, opts).map(|r| truncate(r, w.k()))?,
        RouteChoice::Hierarchy => {
            let wc = canonical_form(w)?.ok_or(SolveError::NotCanonical)?;
            solve_hierarchy_with(&wc, opts)?
        }
        RouteChoice::Quotient => {
            let wc = canonical_form(w)?.ok_or_else(|| SolveError::Unsupported("quotient needs a hierarchy".into()))?;
            solve_quotient_with(&wc, quotient_level(&wc).unwrap_or(1), opts)?
        }
        RouteChoice::Auto => solve_auto(w, opts)?,
    };
    if let Some(p) = &result.plan {
        let per_block_counting = result.stats.route == SolverRoute::Quotient
            && w.constraints().iter().any(|c| matches!(c, Constraint::Counting { .. }));
        if !per_block_counting && !check_plan(w, p)?.is_valid() {
            return Err(SolveError::InternalInconsistency(format!("{} route returned an invalid plan", result.stats.route)));
        }
    }
    result.stats.elapsed = start.elapsed();
    Ok(result)
}

fn truncate(mut r: SolveResult, k: usize) -> SolveResult {
    if let Some(p) = &mut r.plan {
        p.assignment.truncate(k);
    }
    r
}

/// Instance with a canonical hierarchy and remapped levels; `None` without a hierarchy.
fn canonical_form(w: &WorkflowInstance) -> Result<Option<WorkflowInstance>, SolveError> {
    let Some(h) = w.hierarchy() else { return Ok(None) };
    if h.is_canonical() {
        return Ok(Some(w.clone()));
    }
    let (hc, cs) = canonicalize(h, w.constraints());
    let mut parts = w.to_parts();
    parts.hierarchy = Some(hc);
    parts.constraints = cs;
    Ok(Some(w.rebuild(parts)?))
}

/// The level all Sim/Nsim constraints share (by partition), if the mix suits the quotient solver.
fn quotient_level(w: &WorkflowInstance) -> Option<usize> {
    let h = w.hierarchy()?;
    let mut level: Option<usize> = None;
    for c in w.constraints() {
        match c.relation() {
            Some(Relation::Sim(i) | Relation::Nsim(i)) => match level {
                None => level = Some(*i),
                Some(l) if h.level_ids(l) == h.level_ids(*i) => {}
                Some(_) => return None,
            },
            Some(_) => return None,
            None => {}
        }
    }
    level
}

fn solve_auto(w: &WorkflowInstance, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    if w.k() == 0 {
        return Ok(SolveResult::from_plan(Some(Plan::new(Vec::new())), SolveStats::default()));
    }
    let w = drop_trivial(w)?;
    let report = classify(w.constraints());
    if report.route == Route::NeedsHierarchy {
        let wc = canonical_form(&w)?.expect("Sim/Nsim constraints imply a hierarchy");
        let (eq3, sim3) = type3_counts(wc.constraints());
        let dense_k = wc.k() + eq3 + sim3;
        if dense_k <= opts.hierarchy_dense_limit.min(wc.cap()) {
            return solve_hierarchy_with(&wc, opts);
        }
        let has_counting = wc.constraints().iter().any(|c| matches!(c, Constraint::Counting { .. }));
        if !has_counting && dense_k <= opts.flat_dense_limit.min(wc.cap()) {
            if let Some(level) = quotient_level(&wc) {
                return solve_quotient_with(&wc, level, opts);
            }
        }
        return solve_search_with(&wc, opts);
    }
    if !opts.kernelize {
        return solve_regular(&w, opts);
    }
    let kr = kernelize(&w);
    let kernel_users = kr.reduced.n();
    let mut result = match kr.verdict_shortcut {
        Some(Verdict::Unsat) => SolveResult::from_plan(None, SolveStats { route: SolverRoute::Kernel, ..Default::default() }),
        Some(Verdict::Sat) => {
            let plan = lift_plan(&kr, &Plan::new(Vec::new()))?;
            SolveResult::from_plan(Some(plan), SolveStats { route: SolverRoute::Kernel, ..Default::default() })
        }
        None => {
            let mut r = solve_regular(&kr.reduced, opts)?;
            if let Some(p) = r.plan.take() {
                r.plan = Some(lift_plan(&kr, &p)?);
            }
            r
        }
    };
    result.stats.kernel_users = Some(kernel_users);
    Ok(result)
}

/// Flat route after the dummy-step rewrite, or search when that does not fit.
fn solve_regular(w: &WorkflowInstance, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    let (eq3, _) = type3_counts(w.constraints());
    if w.k() + eq3 <= opts.flat_dense_limit.min(w.cap()) {
        let inner = rewrite_eq_type3(w)?;
        return solve_flat_with(&inner, opts).map(|r| truncate(r, w.k()));
    }
    solve_search_with(w, opts)
}

/// Dummy steps the Type-3 `=` and `∼` rewrites would add.
fn type3_counts(cs: &[Constraint]) -> (usize, usize) {
    let mut eq = 0;
    let mut sim = 0;
    for c in cs.iter().filter(|c| c.kind() == Some(ConstraintType::Three)) {
        match c.relation() {
            Some(Relation::Eq) => eq += 1,
            Some(Relation::Sim(_)) => sim += 1,
            _ => {}
        }
    }
    (eq, sim)
}

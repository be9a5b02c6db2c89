//! Exhaustive reference solver.

use crate::model::{check_plan, Constraint, Plan, UserId, WorkflowInstance};
use crate::solver::{SolveResult, SolveStats, SolverRoute};
use std::time::Instant;
use thiserror::Error;

pub const ORACLE_MAX_STEPS: usize = 8;
pub const DEFAULT_ORACLE_BUDGET: u64 = 50_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle handles at most {ORACLE_MAX_STEPS} steps, got {0}")]
    TooManySteps(usize),
    #[error("oracle node budget of {0} exhausted")]
    BudgetExceeded(u64),
}

pub fn oracle_solve(w: &WorkflowInstance) -> Result<SolveResult, OracleError> {
    oracle_solve_with_budget(w, DEFAULT_ORACLE_BUDGET)
}

/// Depth-first over steps in ascending domain size, rejecting a partial
/// plan once a constraint with all its steps assigned fails or a counting
/// upper bound is exceeded.
pub fn oracle_solve_with_budget(w: &WorkflowInstance, budget: u64) -> Result<SolveResult, OracleError> {
    let start = Instant::now();
    let k = w.k();
    if k > ORACLE_MAX_STEPS {
        return Err(OracleError::TooManySteps(k));
    }
    let domains: Vec<Vec<usize>> = (0..k).map(|s| w.authorized_users(s)).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by_key(|&s| (domains[s].len(), s));
    let mut position = vec![0; k];
    for (d, &s) in order.iter().enumerate() {
        position[s] = d;
    }
    let mut closing: Vec<Vec<&Constraint>> = vec![Vec::new(); k];
    for c in w.constraints() {
        if let Some(last) = c.steps().iter().map(|s| position[s]).max() {
            closing[last].push(c);
        }
    }
    let mut assignment = vec![UserId(usize::MAX); k];
    let mut nodes = 0u64;
    let found = descend(w, &order, &domains, &closing, 0, &mut assignment, &mut nodes, budget)?;
    let plan = found.then(|| Plan::new(assignment));
    if let Some(p) = &plan {
        debug_assert!(check_plan(w, p).map(|v| v.is_valid()).unwrap_or(false));
    }
    Ok(SolveResult::from_plan(
        plan,
        SolveStats { route: SolverRoute::Oracle, subsets_visited: nodes, elapsed: start.elapsed(), ..Default::default() },
    ))
}

#[allow(clippy::too_many_arguments)]
fn descend(
    w: &WorkflowInstance,
    order: &[usize],
    domains: &[Vec<usize>],
    closing: &[Vec<&Constraint>],
    depth: usize,
    assignment: &mut Vec<UserId>,
    nodes: &mut u64,
    budget: u64,
) -> Result<bool, OracleError> {
    if depth == order.len() {
        return Ok(true);
    }
    let s = order[depth];
    for &u in &domains[s] {
        *nodes += 1;
        if *nodes > budget {
            return Err(OracleError::BudgetExceeded(budget));
        }
        assignment[s] = UserId(u);
        if partial_ok(w, s, assignment) && closing[depth].iter().all(|c| c.satisfied_by(assignment, w.hierarchy()).unwrap_or(false))
            && descend(w, order, domains, closing, depth + 1, assignment, nodes, budget)?
        {
            return Ok(true);
        }
        assignment[s] = UserId(usize::MAX);
    }
    Ok(false)
}

/// Counting upper bounds can be checked on any partial plan.
fn partial_ok(w: &WorkflowInstance, s: usize, assignment: &[UserId]) -> bool {
    let u = assignment[s];
    w.constraints().iter().all(|c| match c {
        Constraint::Counting { upper, scope, .. } if scope.contains(s) => {
            scope.iter().filter(|&t| assignment[t] == u).count() <= *upper
        }
        _ => true,
    })
}

/// Enumerates all `n^k` plans with no pruning at all.
pub fn oracle_solve_unpruned(w: &WorkflowInstance, budget: u64) -> Result<SolveResult, OracleError> {
    let start = Instant::now();
    let (k, n) = (w.k(), w.n());
    if k > ORACLE_MAX_STEPS {
        return Err(OracleError::TooManySteps(k));
    }
    let total = (n as u64).checked_pow(k as u32).unwrap_or(u64::MAX);
    if total > budget {
        return Err(OracleError::BudgetExceeded(budget));
    }
    let mut digits = vec![0usize; k];
    let mut visited = 0u64;
    let mut plan = None;
    for _ in 0..total {
        visited += 1;
        let p = Plan::new(digits.iter().map(|&u| UserId(u)).collect());
        if check_plan(w, &p).map(|v| v.is_valid()).unwrap_or(false) {
            plan = Some(p);
            break;
        }
        for d in digits.iter_mut() {
            *d += 1;
            if *d < n {
                break;
            }
            *d = 0;
        }
    }
    Ok(SolveResult::from_plan(
        plan,
        SolveStats { route: SolverRoute::Oracle, subsets_visited: visited, elapsed: start.elapsed(), ..Default::default() },
    ))
}

//! Partition solver for regular constraint sets.
//!
//! A plan is valid iff its classes are eligible and each is fully
//! authorized for a distinct user, so the problem becomes an exact cover
//! of the step set by one (possibly empty) eligible set per user.

use super::cover::{cover_sweep, reconstruct, Family};
use super::{SolveError, SolveOptions, SolveResult, SolveStats, SolverRoute};
use crate::constraints::{classify, table_from_rules, Route, Rules};
use crate::model::{check_plan, Plan, UserId, WorkflowInstance};
use crate::stepset::StepSet;
use std::time::Instant;

pub(crate) struct FlatOutcome {
    pub plan: Option<Plan>,
    /// Least number of sweep slots covering all steps, if any.
    pub min_prefix: Option<usize>,
    pub visited: u64,
}

/// Users grouped by identical authorization rows, each group repeated up to `k` times.
pub(crate) fn sweep_order(w: &WorkflowInstance) -> Vec<usize> {
    let k = w.k();
    let mut groups: Vec<(StepSet, Vec<usize>)> = Vec::new();
    for u in 0..w.n() {
        let row = w.auth_of(u);
        if row.is_empty() {
            continue;
        }
        match groups.iter_mut().find(|(r, _)| *r == row) {
            Some((_, members)) => members.push(u),
            None => groups.push((row, vec![u])),
        }
    }
    groups.into_iter().flat_map(|(_, members)| members.into_iter().take(k.max(1))).collect()
}

pub(crate) fn check_flat_support(w: &WorkflowInstance) -> Result<(), SolveError> {
    let report = classify(w.constraints());
    match report.route {
        Route::Flat => Ok(()),
        Route::NeedsRewrite => Err(SolveError::NonRegularConstraint("Type-3 equality needs the dummy-step rewrite".into())),
        Route::NeedsHierarchy => Err(SolveError::Unsupported("Sim/Nsim constraints need the hierarchy solver".into())),
        Route::OracleOnly => Err(SolveError::OracleOnlyConstraints),
    }
}

pub(crate) fn flat_core(w: &WorkflowInstance, opts: &SolveOptions) -> Result<FlatOutcome, SolveError> {
    check_flat_support(w)?;
    let k = w.k();
    if k > opts.flat_dense_limit {
        return Err(SolveError::DenseLimitExceeded { k, limit: opts.flat_dense_limit });
    }
    if k == 0 {
        return Ok(FlatOutcome { plan: Some(Plan::new(Vec::new())), min_prefix: Some(0), visited: 0 });
    }
    let mut rules = Rules::new();
    for c in w.constraints() {
        if !crate::constraints::is_trivially_satisfied(c) {
            rules.add(c)?;
        }
    }
    let elig = table_from_rules(&rules, k);
    let order = sweep_order(w);
    let families: Vec<Family> = order.iter().map(|&u| Family { base: &elig, mask: w.auth_of(u) }).collect();
    let full = w.all_steps();
    let mut visited = 0;
    let reach = cover_sweep(k, &families, opts.backend, Some(full), &mut visited);
    if !reach.reachable(full) {
        return Ok(FlatOutcome { plan: None, min_prefix: None, visited });
    }
    let mut assignment = vec![UserId(usize::MAX); k];
    for (slot, f) in reconstruct(&reach, &families, full)? {
        for s in f.iter() {
            assignment[s] = UserId(order[slot]);
        }
    }
    Ok(FlatOutcome {
        plan: Some(Plan::new(assignment)),
        min_prefix: Some(reach.get(full) as usize - 1),
        visited,
    })
}

/// Solves an instance whose constraints are all regular (counting, `≠`, `=` of Type 1 or 2).
pub fn solve_flat(w: &WorkflowInstance) -> Result<SolveResult, SolveError> {
    solve_flat_with(w, &SolveOptions::default())
}

pub fn solve_flat_with(w: &WorkflowInstance, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let out = flat_core(w, opts)?;
    if let Some(p) = &out.plan {
        if !check_plan(w, p)?.is_valid() {
            return Err(SolveError::InternalInconsistency("flat solver produced an invalid plan".into()));
        }
    }
    Ok(SolveResult::from_plan(
        out.plan,
        SolveStats { route: SolverRoute::Flat, subsets_visited: out.visited, elapsed: start.elapsed(), ..Default::default() },
    ))
}

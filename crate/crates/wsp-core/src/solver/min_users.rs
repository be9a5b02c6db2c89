//! Fewest fully authorized users that admit a valid plan.

use super::flat::flat_core;
use super::{solve_with, SolveError, SolveOptions, SolveStatus};
use crate::constraints::{drop_trivial, rewrite_eq_type3};
use crate::model::{Constraint, InstanceParts, Plan, UserId, WorkflowInstance, DEFAULT_CAP};
use crate::stepset::StepSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MinUsers {
    /// `None` when even one user per step is not enough.
    pub users: Option<usize>,
    pub solve_calls: usize,
}

fn fully_authorized(steps: &[String], constraints: &[Constraint], m: usize) -> Result<WorkflowInstance, SolveError> {
    let parts = InstanceParts {
        steps: steps.to_vec(),
        users: (1..=m).map(|i| format!("u{i}")).collect(),
        order: Vec::new(),
        auth: vec![StepSet::full(steps.len()); m],
        constraints: constraints.to_vec(),
        hierarchy: None,
    };
    Ok(WorkflowInstance::new(parts, DEFAULT_CAP)?)
}

/// One solve with `k` interchangeable users: the sweep's minimal prefix is the answer.
///
/// With `k ≤ 1` the single possible partition is checked directly.
pub fn min_fully_authorized_users(steps: &[String], constraints: &[Constraint]) -> Result<MinUsers, SolveError> {
    min_fully_authorized_users_with(steps, constraints, &SolveOptions::default())
}

pub fn min_fully_authorized_users_with(
    steps: &[String],
    constraints: &[Constraint],
    opts: &SolveOptions,
) -> Result<MinUsers, SolveError> {
    let k = steps.len();
    if k == 0 {
        return Ok(MinUsers { users: Some(0), solve_calls: 0 });
    }
    let w = fully_authorized(steps, constraints, k)?;
    if k == 1 {
        let p = Plan::new(vec![UserId(0)]);
        let ok = crate::model::check_plan(&w, &p)?.is_valid();
        return Ok(MinUsers { users: ok.then_some(1), solve_calls: 0 });
    }
    let inner = rewrite_eq_type3(&drop_trivial(&w)?)?;
    if inner.k() > opts.flat_dense_limit {
        return min_users_by_bisection_with(steps, constraints, opts);
    }
    let out = flat_core(&inner, opts)?;
    Ok(MinUsers { users: out.min_prefix, solve_calls: 1 })
}

/// Binary search over the user count, one solve per probe.
///
/// Needs `⌈log₂ k⌉` probes when the answer is below `k` and one more to
/// confirm `k` itself.
pub fn min_users_by_bisection(steps: &[String], constraints: &[Constraint]) -> Result<MinUsers, SolveError> {
    min_users_by_bisection_with(steps, constraints, &SolveOptions::default())
}

pub fn min_users_by_bisection_with(
    steps: &[String],
    constraints: &[Constraint],
    opts: &SolveOptions,
) -> Result<MinUsers, SolveError> {
    let k = steps.len();
    if k == 0 {
        return Ok(MinUsers { users: Some(0), solve_calls: 0 });
    }
    let mut calls = 0;
    let mut probe = |m: usize| -> Result<bool, SolveError> {
        calls += 1;
        Ok(solve_with(&fully_authorized(steps, constraints, m)?, opts)?.status == SolveStatus::Sat)
    };
    let (mut lo, mut hi) = (1, k);
    let mut hi_known = false;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if probe(mid)? {
            hi = mid;
            hi_known = true;
        } else {
            lo = mid + 1;
        }
    }
    let users = if hi_known || probe(lo)? { Some(lo) } else { None };
    Ok(MinUsers { users, solve_calls: calls })
}

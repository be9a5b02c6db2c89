//! Single equivalence relation: solve over blocks, then pick members.

use super::flat::flat_core;
use super::{SolveError, SolveOptions, SolveResult, SolveStats, SolverRoute};
use crate::constraints::{drop_trivial, rewrite_eq_type3};
use crate::hierarchy::HierarchyError;
use crate::model::{check_plan, Constraint, InstanceParts, Plan, Relation, UserId, WorkflowInstance};
use crate::stepset::StepSet;
use std::time::Instant;

/// The instance whose users are the blocks of `level`, with `∼`/`≁` read as `=`/`≠`.
///
/// Counting constraints carry over unchanged and therefore count steps per block.
pub fn quotient_instance(w: &WorkflowInstance, level: usize) -> Result<(WorkflowInstance, Vec<Vec<usize>>), SolveError> {
    let h = w.hierarchy().ok_or_else(|| SolveError::Unsupported("quotient needs a hierarchy".into()))?;
    if level == 0 || level > h.level_count() {
        return Err(HierarchyError::LevelOutOfRange { level, levels: h.level_count() }.into());
    }
    let ids = h.level_ids(level);
    let mut constraints = Vec::with_capacity(w.c());
    for c in w.constraints() {
        constraints.push(match c {
            Constraint::Counting { .. } => c.clone(),
            Constraint::Entailment { relation, first, second } => {
                let rel = match relation {
                    Relation::Sim(i) if h.level_ids(*i) == ids => Relation::Eq,
                    Relation::Nsim(i) if h.level_ids(*i) == ids => Relation::Neq,
                    Relation::Pairs(_) => return Err(SolveError::OracleOnlyConstraints),
                    _ => return Err(SolveError::MixedRelations),
                };
                Constraint::entailment(rel, *first, *second)
            }
        });
    }
    let blocks = h.partition(level);
    let users = blocks
        .iter()
        .map(|b| format!("{{{}}}", b.iter().map(|&u| w.users()[u].as_str()).collect::<Vec<_>>().join(",")))
        .collect();
    let auth = blocks.iter().map(|b| b.iter().fold(StepSet::EMPTY, |acc, &u| acc | w.auth_of(u))).collect();
    let parts = InstanceParts {
        steps: w.steps().to_vec(),
        users,
        order: w.order().iter().map(|&(a, b)| (a.0, b.0)).collect(),
        auth,
        constraints,
        hierarchy: None,
    };
    Ok((w.rebuild(parts)?, blocks))
}

pub fn solve_quotient(w: &WorkflowInstance, level: usize) -> Result<SolveResult, SolveError> {
    solve_quotient_with(w, level, &SolveOptions::default())
}

/// Solves over the blocks of hierarchy level `level`.
///
/// The returned plan always satisfies the `∼`/`≁` constraints; counting
/// constraints are honoured per block, which is the quotient's reading of
/// them. Without counting constraints the plan is checked against `w`.
pub fn solve_quotient_with(w: &WorkflowInstance, level: usize, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let (q, blocks) = quotient_instance(w, level)?;
    let inner = rewrite_eq_type3(&drop_trivial(&q)?)?;
    let out = flat_core(&inner, opts)?;
    let mut stats = SolveStats { route: SolverRoute::Quotient, subsets_visited: out.visited, ..Default::default() };
    let plan = match out.plan {
        None => None,
        Some(bp) => {
            let block_plan = Plan::new(bp.assignment[..w.k()].to_vec());
            if !check_plan(&q, &block_plan)?.is_valid() {
                return Err(SolveError::InternalInconsistency("quotient plan is invalid over blocks".into()));
            }
            let plan = refine(w, &blocks, &block_plan);
            let has_counting = w.constraints().iter().any(|c| matches!(c, Constraint::Counting { .. }));
            if !has_counting && !check_plan(w, &plan)?.is_valid() {
                return Err(SolveError::InternalInconsistency("refined quotient plan is invalid".into()));
            }
            Some(plan)
        }
    };
    stats.elapsed = start.elapsed();
    Ok(SolveResult::from_plan(plan, stats))
}

/// Gives each block's steps to one member when possible, else splits greedily.
fn refine(w: &WorkflowInstance, blocks: &[Vec<usize>], block_plan: &Plan) -> Plan {
    let mut assignment = vec![UserId(usize::MAX); w.k()];
    for (b, class) in block_plan.classes() {
        let members = &blocks[b.0];
        let mut rest = class;
        while !rest.is_empty() {
            let &u = members
                .iter()
                .max_by_key(|&&u| ((w.auth_of(u) & rest).len(), std::cmp::Reverse(u)))
                .expect("blocks are nonempty");
            let take = w.auth_of(u) & rest;
            debug_assert!(!take.is_empty(), "block authorization is the union of its members");
            for s in take.iter() {
                assignment[s] = UserId(u);
            }
            rest = rest - take;
        }
    }
    Plan::new(assignment)
}

//! Bottom-up solver over the significant-block tree.
//!
//! `T_V[F]` says the steps `F` can be performed inside block `V`. Leaves
//! test authorization and per-user eligibility, internal blocks combine
//! their children by exact cover. At a block with level range `[a, b]`,
//! a `≁ᵢ` pair (`a ≤ i ≤ b`) may not sit entirely inside `F`, and a `∼ᵢ`
//! pair may not have one side entirely inside `F` and the other outside.
//! `=`/`≠` act as level-1 relations.

use super::cover::{cover_sweep, reconstruct, Family, ReachTable};
use super::{SolveError, SolveOptions, SolveResult, SolveStats, SolverRoute};
use crate::constraints::{drop_trivial, rewrite_eq_type3, rewrite_sim_type3, Rules};
use crate::hierarchy::significant_block_tree;
use crate::model::{check_plan, Constraint, Plan, Relation, UserId, WorkflowInstance};
use crate::stepset::{StepSet, SubsetTable};
use std::time::Instant;

pub fn solve_hierarchy(w: &WorkflowInstance) -> Result<SolveResult, SolveError> {
    solve_hierarchy_with(w, &SolveOptions::default())
}

/// Requires a canonical hierarchy. Type-3 `=`/`∼` are rewritten internally.
pub fn solve_hierarchy_with(w: &WorkflowInstance, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let h = w.hierarchy().ok_or(SolveError::NotCanonical)?;
    if !h.is_canonical() {
        return Err(SolveError::NotCanonical);
    }
    if w.constraints().iter().any(|c| matches!(c.relation(), Some(Relation::Pairs(_)))) {
        return Err(SolveError::OracleOnlyConstraints);
    }
    let inner = rewrite_eq_type3(&rewrite_sim_type3(&drop_trivial(w)?)?)?;
    let k = inner.k();
    if k > opts.hierarchy_dense_limit {
        return Err(SolveError::DenseLimitExceeded { k, limit: opts.hierarchy_dense_limit });
    }
    let mut stats = SolveStats { route: SolverRoute::Hierarchy, ..Default::default() };
    let plan = if w.k() == 0 {
        Some(Plan::new(Vec::new()))
    } else {
        run(&inner, opts, &mut stats)?.map(|p| Plan::new(p.assignment[..w.k()].to_vec()))
    };
    if let Some(p) = &plan {
        if !check_plan(w, p)?.is_valid() {
            return Err(SolveError::InternalInconsistency("hierarchy solver produced an invalid plan".into()));
        }
    }
    stats.elapsed = start.elapsed();
    Ok(SolveResult::from_plan(plan, stats))
}

/// Level at which an entailment constraint acts, and whether it demands co-location.
fn level_of(c: &Constraint) -> Option<(usize, bool, StepSet, StepSet)> {
    match c {
        Constraint::Entailment { relation, first, second } => match relation {
            Relation::Eq => Some((1, true, *first, *second)),
            Relation::Neq => Some((1, false, *first, *second)),
            Relation::Sim(i) => Some((*i, true, *first, *second)),
            Relation::Nsim(i) => Some((*i, false, *first, *second)),
            Relation::Pairs(_) => None,
        },
        Constraint::Counting { .. } => None,
    }
}

fn block_rules(w: &WorkflowInstance, lo: usize, hi: usize, leaf: bool) -> Rules {
    let mut rules = Rules::new();
    for c in w.constraints() {
        match (c, level_of(c)) {
            (Constraint::Counting { lower, upper, scope }, _) if leaf => rules.add_counting(*lower, *upper, *scope),
            (_, Some((i, together, a, b))) if lo <= i && i <= hi => {
                if together {
                    rules.add_together(a, b);
                } else {
                    rules.add_apart(a, b);
                }
            }
            _ => {}
        }
    }
    rules
}

fn run(w: &WorkflowInstance, opts: &SolveOptions, stats: &mut SolveStats) -> Result<Option<Plan>, SolveError> {
    let h = w.hierarchy().expect("checked by caller");
    let tree = significant_block_tree(h)?;
    let k = w.k();
    let full = w.all_steps();
    let mut tables: Vec<SubsetTable> = Vec::with_capacity(tree.nodes.len());
    let mut reaches: Vec<Option<ReachTable>> = Vec::with_capacity(tree.nodes.len());
    for (v, node) in tree.nodes.iter().enumerate() {
        let (a, b) = node.range;
        let leaf = node.children.is_empty();
        let rules = block_rules(w, if leaf { 1 } else { a }, b, leaf);
        let bad = if rules.is_empty() { None } else { Some(rules.ineligible_table(k)) };
        let ok = |f: usize| bad.as_ref().is_none_or(|t| !t[f]);
        let mut table = SubsetTable::new(k);
        if leaf {
            let row = w.auth_of(node.members[0]);
            for f in row.subsets() {
                if ok(f.bits() as usize) {
                    table.set(f, true);
                }
            }
            reaches.push(None);
        } else {
            let families: Vec<Family> =
                node.children.iter().map(|&c| Family { base: &tables[c], mask: full }).collect();
            let stop = (v == tree.root).then_some(full);
            let reach = cover_sweep(k, &families, opts.backend, stop, &mut stats.subsets_visited);
            for (f, &r) in reach.raw().iter().enumerate() {
                if r != 0 && ok(f) {
                    table.set(StepSet::from_bits(f as u32), true);
                }
            }
            reaches.push(Some(reach));
        }
        stats.blocks_solved += 1;
        tables.push(table);
    }
    if !tables[tree.root].get(full) {
        return Ok(None);
    }
    let mut assignment = vec![UserId(usize::MAX); k];
    let mut stack = vec![(tree.root, full)];
    while let Some((v, f)) = stack.pop() {
        let node = &tree.nodes[v];
        if node.children.is_empty() {
            for s in f.iter() {
                assignment[s] = UserId(node.members[0]);
            }
            continue;
        }
        let families: Vec<Family> = node.children.iter().map(|&c| Family { base: &tables[c], mask: full }).collect();
        let reach = reaches[v].as_ref().expect("internal node has a reach table");
        for (i, piece) in reconstruct(reach, &families, f)? {
            stack.push((node.children[i], piece));
        }
    }
    Ok(Some(Plan::new(assignment)))
}

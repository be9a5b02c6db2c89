//! Exact depth-first search for instances beyond the dense-table limits.
//!
//! Each constraint is checked as soon as its last step is assigned, with
//! counting upper bounds checked eagerly. Users that are interchangeable
//! (same authorization row, same blocks on every non-trivial level) are
//! tried in a fixed order, so only the first unused one is branched on.

use super::{SolveError, SolveOptions, SolveResult, SolveStats, SolverRoute};
use crate::model::{check_plan, Constraint, Plan, Relation, UserId, WorkflowInstance};
use std::collections::HashMap;
use std::time::Instant;

struct Search<'a> {
    w: &'a WorkflowInstance,
    order: Vec<usize>,
    /// Constraints to check when the step at that depth is assigned.
    due: Vec<Vec<usize>>,
    /// Counting constraints touching each step.
    counting_of: Vec<Vec<usize>>,
    domains: Vec<Vec<usize>>,
    class_of: Vec<usize>,
    class_members: Vec<Vec<usize>>,
    assignment: Vec<UserId>,
    load: Vec<usize>,
    counts: Vec<HashMap<usize, usize>>,
    nodes: u64,
    budget: Option<u64>,
}

pub fn solve_search(w: &WorkflowInstance) -> Result<SolveResult, SolveError> {
    solve_search_with(w, &SolveOptions::default())
}

pub fn solve_search_with(w: &WorkflowInstance, opts: &SolveOptions) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    if w.constraints().iter().any(|c| matches!(c.relation(), Some(Relation::Pairs(_)))) {
        return Err(SolveError::OracleOnlyConstraints);
    }
    let mut s = Search::new(w, opts.search_node_budget);
    let found = s.dfs(0)?;
    let plan = found.then(|| Plan::new(s.assignment.clone()));
    if let Some(p) = &plan {
        if !check_plan(w, p)?.is_valid() {
            return Err(SolveError::InternalInconsistency("search produced an invalid plan".into()));
        }
    }
    Ok(SolveResult::from_plan(
        plan,
        SolveStats { route: SolverRoute::Search, subsets_visited: s.nodes, elapsed: start.elapsed(), ..Default::default() },
    ))
}

impl<'a> Search<'a> {
    fn new(w: &'a WorkflowInstance, budget: Option<u64>) -> Self {
        let k = w.k();
        let domains: Vec<Vec<usize>> = (0..k).map(|s| w.authorized_users(s)).collect();
        let mut linked = vec![vec![0usize; k]; k];
        for c in w.constraints() {
            let st: Vec<usize> = c.steps().iter().collect();
            for &a in &st {
                for &b in &st {
                    if a != b {
                        linked[a][b] += 1;
                    }
                }
            }
        }
        let mut order: Vec<usize> = Vec::with_capacity(k);
        let mut placed = vec![false; k];
        while order.len() < k {
            let next = (0..k)
                .filter(|&s| !placed[s])
                .max_by_key(|&s| {
                    let ties: usize = order.iter().map(|&t| linked[s][t]).sum();
                    (ties, std::cmp::Reverse(domains[s].len()), std::cmp::Reverse(s))
                })
                .unwrap();
            placed[next] = true;
            order.push(next);
        }
        let mut depth_of = vec![0; k];
        for (d, &s) in order.iter().enumerate() {
            depth_of[s] = d;
        }
        let mut due = vec![Vec::new(); k];
        let mut counting_of = vec![Vec::new(); k];
        for (i, c) in w.constraints().iter().enumerate() {
            let last = c.steps().iter().map(|s| depth_of[s]).max().unwrap();
            due[last].push(i);
            if let Constraint::Counting { scope, .. } = c {
                for s in scope.iter() {
                    counting_of[s].push(i);
                }
            }
        }
        let h = w.hierarchy();
        let levels: Vec<usize> = h
            .map(|h| (1..=h.level_count()).filter(|&i| h.block_count(i) < w.n()).collect())
            .unwrap_or_default();
        let mut keys: HashMap<(u32, Vec<usize>), usize> = HashMap::new();
        let mut class_of = Vec::with_capacity(w.n());
        let mut class_members: Vec<Vec<usize>> = Vec::new();
        for u in 0..w.n() {
            let key = (w.auth_of(u).bits(), levels.iter().map(|&i| h.unwrap().block(u, i)).collect());
            let next = keys.len();
            let c = *keys.entry(key).or_insert(next);
            if c == class_members.len() {
                class_members.push(Vec::new());
            }
            class_members[c].push(u);
            class_of.push(c);
        }
        Search {
            w,
            order,
            due,
            counting_of,
            domains,
            class_of,
            class_members,
            assignment: vec![UserId(usize::MAX); k],
            load: vec![0; w.n()],
            counts: vec![HashMap::new(); w.c()],
            nodes: 0,
            budget,
        }
    }

    fn allowed(&self, u: usize) -> bool {
        if self.load[u] > 0 {
            return true;
        }
        let members = &self.class_members[self.class_of[u]];
        members.iter().take_while(|&&v| v != u).all(|&v| self.load[v] > 0)
    }

    fn dfs(&mut self, depth: usize) -> Result<bool, SolveError> {
        if depth == self.order.len() {
            return Ok(true);
        }
        let s = self.order[depth];
        for di in 0..self.domains[s].len() {
            let u = self.domains[s][di];
            if !self.allowed(u) {
                continue;
            }
            self.nodes += 1;
            if self.budget.is_some_and(|b| self.nodes > b) {
                return Err(SolveError::BudgetExceeded);
            }
            self.assignment[s] = UserId(u);
            self.load[u] += 1;
            let mut ok = true;
            for &ci in &self.counting_of[s] {
                let e = self.counts[ci].entry(u).or_insert(0);
                *e += 1;
                if let Constraint::Counting { upper, .. } = self.w.constraints()[ci] {
                    if *e > upper {
                        ok = false;
                    }
                }
            }
            if ok {
                ok = self.due[depth].iter().all(|&ci| {
                    self.w.constraints()[ci].satisfied_by(&self.assignment, self.w.hierarchy()).unwrap_or(false)
                });
            }
            if ok && self.dfs(depth + 1)? {
                return Ok(true);
            }
            for &ci in &self.counting_of[s] {
                *self.counts[ci].get_mut(&u).unwrap() -= 1;
            }
            self.load[u] -= 1;
            self.assignment[s] = UserId(usize::MAX);
        }
        Ok(false)
    }
}

//! Instances, plans and the reference semantics of constraints.

mod io;

pub use io::{parse_instance, parse_plan, plan_to_json, serialize_instance, unsat_json, RawInstance};

use crate::hierarchy::{Hierarchy, HierarchyError};
use crate::stepset::{StepSet, MAX_STEPS};
use std::collections::{HashMap, HashSet};
use thiserror::Error;

/// Default step cap.
pub const DEFAULT_CAP: usize = MAX_STEPS;

/// Prefix reserved for steps introduced by rewrites.
pub const DUMMY_PREFIX: &str = "__dummy";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("name `{0}` uses the reserved prefix `{DUMMY_PREFIX}`")]
    ReservedName(String),
    #[error("order relation contains a cycle")]
    CyclicOrder,
    #[error("no user is authorized for step `{0}`")]
    UnauthorizedStep(String),
    #[error("{k} steps exceed the cap of {cap}")]
    StepLimitExceeded { k: usize, cap: usize },
    #[error("malformed constraint: {0}")]
    MalformedConstraint(String),
    #[error("Sim/Nsim constraint evaluated without a hierarchy")]
    MissingHierarchy,
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error("user `{user}` is not authorized for step `{step}`")]
    NotAuthorized { step: String, user: String },
    #[error("malformed plan: {0}")]
    MalformedPlan(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StepId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UserId(pub usize);

/// Relation used by an entailment constraint.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Eq,
    Neq,
    /// Same block at the given hierarchy level.
    Sim(usize),
    /// Different blocks at the given hierarchy level.
    Nsim(usize),
    /// Explicit user pairs; only the oracle accepts these.
    Pairs(Vec<(UserId, UserId)>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintType {
    One,
    Two,
    Three,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// Every user performs either none of `scope` or between `lower` and `upper` of its steps.
    Counting { lower: usize, upper: usize, scope: StepSet },
    /// Some `(s', s'') ∈ first × second` is executed by a pair of users in `relation`.
    Entailment { relation: Relation, first: StepSet, second: StepSet },
}

impl Constraint {
    pub fn counting(lower: usize, upper: usize, scope: StepSet) -> Self {
        Constraint::Counting { lower, upper, scope }
    }

    pub fn entailment(relation: Relation, first: StepSet, second: StepSet) -> Self {
        Constraint::Entailment { relation, first, second }
    }

    pub fn eq(a: StepSet, b: StepSet) -> Self {
        Self::entailment(Relation::Eq, a, b)
    }

    pub fn neq(a: StepSet, b: StepSet) -> Self {
        Self::entailment(Relation::Neq, a, b)
    }

    /// Steps the constraint mentions.
    pub fn steps(&self) -> StepSet {
        match self {
            Constraint::Counting { scope, .. } => *scope,
            Constraint::Entailment { first, second, .. } => *first | *second,
        }
    }

    /// Entailment type by scope cardinalities; `None` for counting constraints.
    pub fn kind(&self) -> Option<ConstraintType> {
        match self {
            Constraint::Counting { .. } => None,
            Constraint::Entailment { first, second, .. } => Some(match (first.len() == 1, second.len() == 1) {
                (true, true) => ConstraintType::One,
                (true, false) | (false, true) => ConstraintType::Two,
                (false, false) => ConstraintType::Three,
            }),
        }
    }

    pub fn relation(&self) -> Option<&Relation> {
        match self {
            Constraint::Entailment { relation, .. } => Some(relation),
            _ => None,
        }
    }

    /// Evaluates the constraint on a total plan.
    pub fn satisfied_by(&self, assignment: &[UserId], h: Option<&Hierarchy>) -> Result<bool, ModelError> {
        match self {
            Constraint::Counting { lower, upper, scope } => {
                let mut per_user: HashMap<UserId, usize> = HashMap::new();
                for s in scope.iter() {
                    *per_user.entry(assignment[s]).or_default() += 1;
                }
                Ok(per_user.values().all(|&c| c >= *lower && c <= *upper))
            }
            Constraint::Entailment { relation, first, second } => {
                if matches!(relation, Relation::Sim(_) | Relation::Nsim(_)) && h.is_none() {
                    return Err(ModelError::MissingHierarchy);
                }
                let related = |a: UserId, b: UserId| match relation {
                    Relation::Eq => a == b,
                    Relation::Neq => a != b,
                    Relation::Sim(i) => h.unwrap().same_block(a.0, b.0, *i),
                    Relation::Nsim(i) => !h.unwrap().same_block(a.0, b.0, *i),
                    Relation::Pairs(ps) => ps.binary_search(&(a, b)).is_ok(),
                };
                Ok(first.iter().any(|x| second.iter().any(|y| related(assignment[x], assignment[y]))))
            }
        }
    }
}

/// A total assignment of users to steps, indexed by step.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Plan {
    pub assignment: Vec<UserId>,
}

impl Plan {
    pub fn new(assignment: Vec<UserId>) -> Self {
        Plan { assignment }
    }

    pub fn user(&self, s: usize) -> UserId {
        self.assignment[s]
    }

    /// Steps assigned to each user that performs at least one step.
    pub fn classes(&self) -> Vec<(UserId, StepSet)> {
        let mut out: Vec<(UserId, StepSet)> = Vec::new();
        for (s, &u) in self.assignment.iter().enumerate() {
            match out.iter_mut().find(|(v, _)| *v == u) {
                Some((_, set)) => *set = set.with(s),
                None => out.push((u, StepSet::singleton(s))),
            }
        }
        out
    }

    pub fn distinct_users(&self) -> usize {
        self.assignment.iter().collect::<HashSet<_>>().len()
    }
}

/// Outcome of [`check_plan`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PlanVerdict {
    pub unauthorized: Vec<StepId>,
    /// Indices into the instance's constraint list.
    pub violated: Vec<usize>,
}

impl PlanVerdict {
    pub fn is_valid(&self) -> bool {
        self.unauthorized.is_empty() && self.violated.is_empty()
    }
}

/// Components of an instance prior to validation, with interned indices.
#[derive(Clone, Debug, Default)]
pub struct InstanceParts {
    pub steps: Vec<String>,
    pub users: Vec<String>,
    pub order: Vec<(usize, usize)>,
    /// Authorization row per user.
    pub auth: Vec<StepSet>,
    pub constraints: Vec<Constraint>,
    pub hierarchy: Option<Hierarchy>,
}

/// A validated constrained workflow authorization schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WorkflowInstance {
    steps: Vec<String>,
    users: Vec<String>,
    order: Vec<(StepId, StepId)>,
    auth: Vec<StepSet>,
    constraints: Vec<Constraint>,
    hierarchy: Option<Hierarchy>,
    cap: usize,
}

fn check_unique(names: &[String]) -> Result<(), ModelError> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(ModelError::DuplicateName(n.clone()));
        }
    }
    Ok(())
}

fn is_acyclic(k: usize, order: &[(usize, usize)]) -> bool {
    let mut indeg = vec![0usize; k];
    let mut out = vec![Vec::new(); k];
    for &(a, b) in order {
        out[a].push(b);
        indeg[b] += 1;
    }
    let mut queue: Vec<usize> = (0..k).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = queue.pop() {
        seen += 1;
        for &w in &out[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push(w);
            }
        }
    }
    seen == k
}

/// Removes duplicates; among Sim (resp. Nsim) constraints on the same scope
/// pair only the finest (resp. coarsest) level survives.
fn dedup_constraints(cs: Vec<Constraint>) -> Vec<Constraint> {
    let mut best_sim: HashMap<(StepSet, StepSet), usize> = HashMap::new();
    let mut best_nsim: HashMap<(StepSet, StepSet), usize> = HashMap::new();
    for c in &cs {
        if let Constraint::Entailment { relation, first, second } = c {
            match relation {
                Relation::Sim(i) => {
                    let e = best_sim.entry((*first, *second)).or_insert(*i);
                    *e = (*e).min(*i);
                }
                Relation::Nsim(i) => {
                    let e = best_nsim.entry((*first, *second)).or_insert(*i);
                    *e = (*e).max(*i);
                }
                _ => {}
            }
        }
    }
    let mut seen = HashSet::new();
    cs.into_iter()
        .filter(|c| {
            let keep = match c {
                Constraint::Entailment { relation: Relation::Sim(i), first, second } => best_sim[&(*first, *second)] == *i,
                Constraint::Entailment { relation: Relation::Nsim(i), first, second } => {
                    best_nsim[&(*first, *second)] == *i
                }
                _ => true,
            };
            keep && seen.insert(c.clone())
        })
        .collect()
}

impl WorkflowInstance {
    /// Validates and interns an instance. Constraints are deduplicated.
    pub fn new(parts: InstanceParts, cap: usize) -> Result<Self, ModelError> {
        let InstanceParts { steps, users, order, auth, constraints, hierarchy } = parts;
        let k = steps.len();
        let n = users.len();
        let cap = cap.min(MAX_STEPS);
        if k > cap {
            return Err(ModelError::StepLimitExceeded { k, cap });
        }
        check_unique(&steps)?;
        check_unique(&users)?;
        if auth.len() != n {
            return Err(ModelError::MalformedPlan(format!("{} authorization rows for {n} users", auth.len())));
        }
        let all = StepSet::full(k);
        if auth.iter().any(|a| !a.is_subset(all)) {
            return Err(ModelError::UnknownIdentifier("step index beyond step list".into()));
        }
        if order.iter().any(|&(a, b)| a >= k || b >= k) {
            return Err(ModelError::UnknownIdentifier("order refers to unknown step index".into()));
        }
        if !is_acyclic(k, &order) {
            return Err(ModelError::CyclicOrder);
        }
        let covered = auth.iter().fold(StepSet::EMPTY, |acc, &a| acc | a);
        if let Some(s) = (all - covered).first() {
            return Err(ModelError::UnauthorizedStep(steps[s].clone()));
        }
        if let Some(h) = &hierarchy {
            if h.user_count() != n {
                return Err(HierarchyError::UserCountMismatch { got: h.user_count(), expected: n }.into());
            }
        }
        let levels = hierarchy.as_ref().map(|h| h.level_count());
        let mut constraints = constraints;
        for c in constraints.iter_mut() {
            match c {
                Constraint::Counting { lower, upper, scope } => {
                    if scope.is_empty() || !scope.is_subset(all) {
                        return Err(ModelError::MalformedConstraint("counting scope must be a nonempty set of steps".into()));
                    }
                    if *lower < 1 || lower > upper || *upper > k {
                        return Err(ModelError::MalformedConstraint(format!(
                            "counting bounds ({lower},{upper}) must satisfy 1 <= tl <= tr <= {k}"
                        )));
                    }
                }
                Constraint::Entailment { relation, first, second } => {
                    if first.is_empty() || second.is_empty() || !(*first | *second).is_subset(all) {
                        return Err(ModelError::MalformedConstraint("entailment scopes must be nonempty sets of steps".into()));
                    }
                    match relation {
                        Relation::Sim(i) | Relation::Nsim(i) => match levels {
                            None => return Err(ModelError::MalformedConstraint("Sim/Nsim constraint without a hierarchy".into())),
                            Some(l) if *i == 0 || *i > l => {
                                return Err(ModelError::MalformedConstraint(format!("level {i} outside 1..={l}")))
                            }
                            _ => {}
                        },
                        Relation::Pairs(ps) => {
                            if ps.iter().any(|(a, b)| a.0 >= n || b.0 >= n) {
                                return Err(ModelError::UnknownIdentifier("pair refers to unknown user index".into()));
                            }
                            ps.sort();
                            ps.dedup();
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(WorkflowInstance {
            steps,
            users,
            order: order.into_iter().map(|(a, b)| (StepId(a), StepId(b))).collect(),
            auth,
            constraints: dedup_constraints(constraints),
            hierarchy,
            cap,
        })
    }

    pub fn to_parts(&self) -> InstanceParts {
        InstanceParts {
            steps: self.steps.clone(),
            users: self.users.clone(),
            order: self.order.iter().map(|&(a, b)| (a.0, b.0)).collect(),
            auth: self.auth.clone(),
            constraints: self.constraints.clone(),
            hierarchy: self.hierarchy.clone(),
        }
    }

    /// Rebuilds from modified parts under the same cap.
    pub fn rebuild(&self, parts: InstanceParts) -> Result<Self, ModelError> {
        WorkflowInstance::new(parts, self.cap)
    }

    pub fn k(&self) -> usize {
        self.steps.len()
    }

    pub fn n(&self) -> usize {
        self.users.len()
    }

    pub fn c(&self) -> usize {
        self.constraints.len()
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn steps(&self) -> &[String] {
        &self.steps
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn order(&self) -> &[(StepId, StepId)] {
        &self.order
    }

    pub fn auth(&self) -> &[StepSet] {
        &self.auth
    }

    pub fn auth_of(&self, u: usize) -> StepSet {
        self.auth[u]
    }

    /// Users authorized for step `s`.
    pub fn authorized_users(&self, s: usize) -> Vec<usize> {
        (0..self.n()).filter(|&u| self.auth[u].contains(s)).collect()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn hierarchy(&self) -> Option<&Hierarchy> {
        self.hierarchy.as_ref()
    }

    pub fn all_steps(&self) -> StepSet {
        StepSet::full(self.k())
    }

    pub fn step_index(&self, name: &str) -> Option<usize> {
        self.steps.iter().position(|s| s == name)
    }

    pub fn user_index(&self, name: &str) -> Option<usize> {
        self.users.iter().position(|u| u == name)
    }
}

/// Reference semantics: which steps are unauthorized and which constraints fail.
pub fn check_plan(w: &WorkflowInstance, p: &Plan) -> Result<PlanVerdict, ModelError> {
    if p.assignment.len() != w.k() {
        return Err(ModelError::MalformedPlan(format!("plan covers {} of {} steps", p.assignment.len(), w.k())));
    }
    if p.assignment.iter().any(|u| u.0 >= w.n()) {
        return Err(ModelError::MalformedPlan("plan refers to unknown user".into()));
    }
    let unauthorized = (0..w.k()).filter(|&s| !w.auth[p.assignment[s].0].contains(s)).map(StepId).collect();
    let mut violated = Vec::new();
    for (i, c) in w.constraints.iter().enumerate() {
        if !c.satisfied_by(&p.assignment, w.hierarchy())? {
            violated.push(i);
        }
    }
    Ok(PlanVerdict { unauthorized, violated })
}

/// Restricts step `s` to the single user `u`.
pub fn commit_step(w: &WorkflowInstance, s: StepId, u: UserId) -> Result<WorkflowInstance, ModelError> {
    if s.0 >= w.k() || u.0 >= w.n() {
        return Err(ModelError::UnknownIdentifier(format!("step {} / user {}", s.0, u.0)));
    }
    if !w.auth[u.0].contains(s.0) {
        return Err(ModelError::NotAuthorized { step: w.steps[s.0].clone(), user: w.users[u.0].clone() });
    }
    let mut out = w.clone();
    for (v, row) in out.auth.iter_mut().enumerate() {
        if v != u.0 {
            *row = row.without(s.0);
        }
    }
    Ok(out)
}

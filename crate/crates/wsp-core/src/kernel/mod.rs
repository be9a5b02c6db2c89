//! Kernelization: superstep merging, easy-step removal and the matching kernel.
//!
//! Every stage maps an instance to a smaller equivalent one and records
//! enough to turn a plan for the smaller instance back into a plan for
//! its input.

mod matching;

pub use matching::{alternating_reach, hopcroft_karp, matching_size, Bipartite};

use crate::model::{Constraint, ConstraintType, InstanceParts, ModelError, Plan, Relation, UserId, WorkflowInstance};
use crate::stepset::StepSet;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("stage not applicable: {0}")]
    Inapplicable(String),
    #[error("no unused authorized user left for step `{0}`")]
    InsufficientUsers(String),
    #[error("plan does not fit the reduced instance: {0}")]
    PlanMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Sat,
    Unsat,
}

/// One applied reduction, in terms of indices into its input instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "stage", rename_all = "kebab-case")]
pub enum Stage {
    /// Member steps of each reduced step.
    MergeEqualitySteps { components: Vec<Vec<usize>> },
    /// `hard[i]` is reduced step `i`; `users[j]` is reduced user `j`.
    RemoveEasySteps { hard: Vec<usize>, easy: Vec<usize>, users: Vec<usize> },
    /// `assigned` covers the steps outside the kernel.
    MatchingKernel {
        matching: Vec<(usize, usize)>,
        assigned: Vec<(usize, usize)>,
        kernel_steps: Vec<usize>,
        kernel_users: Vec<usize>,
    },
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::MergeEqualitySteps { .. } => "merge-equality-steps",
            Stage::RemoveEasySteps { .. } => "remove-easy-steps",
            Stage::MatchingKernel { .. } => "matching-kernel",
        }
    }
}

#[derive(Clone, Debug)]
pub struct KernelResult {
    pub reduced: WorkflowInstance,
    pub trace: Vec<Stage>,
    pub verdict_shortcut: Option<Verdict>,
    /// Input instance of each stage in `trace`.
    inputs: Vec<WorkflowInstance>,
}

impl KernelResult {
    fn identity(w: &WorkflowInstance) -> Self {
        KernelResult { reduced: w.clone(), trace: Vec::new(), verdict_shortcut: None, inputs: Vec::new() }
    }

    fn single(input: &WorkflowInstance, stage: Stage, reduced: WorkflowInstance, verdict: Option<Verdict>) -> Self {
        KernelResult { reduced, trace: vec![stage], verdict_shortcut: verdict, inputs: vec![input.clone()] }
    }

    fn then(mut self, next: KernelResult) -> Self {
        self.reduced = next.reduced;
        self.trace.extend(next.trace);
        self.inputs.extend(next.inputs);
        self.verdict_shortcut = next.verdict_shortcut;
        self
    }

    /// The instance the pipeline started from.
    pub fn original(&self) -> &WorkflowInstance {
        self.inputs.first().unwrap_or(&self.reduced)
    }

    /// Stage list with step and user names, for `--emit-trace`.
    pub fn trace_json(&self) -> Value {
        let stages: Vec<Value> = self.trace.iter().zip(&self.inputs).map(|(st, w)| stage_json(st, w)).collect();
        json!({
            "stages": stages,
            "verdict_shortcut": self.verdict_shortcut,
            "reduced": { "steps": self.reduced.steps(), "users": self.reduced.users() },
        })
    }
}

fn stage_json(stage: &Stage, w: &WorkflowInstance) -> Value {
    let s = |i: &usize| w.steps()[*i].clone();
    let u = |i: &usize| w.users()[*i].clone();
    let pairs = |v: &[(usize, usize)]| v.iter().map(|(a, b)| json!([s(a), u(b)])).collect::<Vec<_>>();
    match stage {
        Stage::MergeEqualitySteps { components } => json!({
            "stage": stage.name(),
            "supersteps": components
                .iter()
                .filter(|c| c.len() > 1)
                .map(|c| c.iter().map(s).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        }),
        Stage::RemoveEasySteps { hard, easy, users } => json!({
            "stage": stage.name(),
            "easy": easy.iter().map(s).collect::<Vec<_>>(),
            "hard": hard.iter().map(s).collect::<Vec<_>>(),
            "users_kept": users.iter().map(u).collect::<Vec<_>>(),
        }),
        Stage::MatchingKernel { matching, assigned, kernel_steps, kernel_users } => json!({
            "stage": stage.name(),
            "matching": pairs(matching),
            "assigned": pairs(assigned),
            "kernel_steps": kernel_steps.iter().map(s).collect::<Vec<_>>(),
            "kernel_users": kernel_users.iter().map(u).collect::<Vec<_>>(),
        }),
    }
}

fn remap(set: StepSet, map: &[Option<usize>]) -> StepSet {
    set.iter().filter_map(|s| map[s]).collect()
}

/// Builds a reduced instance, dropping the order if remapping made it cyclic.
fn build(w: &WorkflowInstance, parts: InstanceParts) -> WorkflowInstance {
    match w.rebuild(parts.clone()) {
        Ok(r) => r,
        Err(ModelError::CyclicOrder) => w.rebuild(InstanceParts { order: Vec::new(), ..parts }).expect("reduced instance is valid"),
        Err(e) => panic!("reduced instance failed validation: {e}"),
    }
}

fn remap_order(w: &WorkflowInstance, map: &[Option<usize>]) -> Vec<(usize, usize)> {
    let mut order: Vec<(usize, usize)> = w
        .order()
        .iter()
        .filter_map(|&(a, b)| Some((map[a.0]?, map[b.0]?)))
        .filter(|(a, b)| a != b)
        .collect();
    order.sort_unstable();
    order.dedup();
    order
}

fn has_block_relations(w: &WorkflowInstance) -> bool {
    w.constraints().iter().any(|c| matches!(c.relation(), Some(Relation::Sim(_) | Relation::Nsim(_) | Relation::Pairs(_))))
}

/// Contracts each component of the Type-1 `=` graph into one superstep.
pub fn merge_equality_steps(w: &WorkflowInstance) -> Result<KernelResult, KernelError> {
    if has_block_relations(w) {
        return Err(KernelError::Inapplicable("block or pair relations present".into()));
    }
    let k = w.k();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for c in w.constraints() {
        match c {
            Constraint::Entailment { relation: Relation::Eq, first, second } => {
                if c.kind() != Some(ConstraintType::One) {
                    return Err(KernelError::Inapplicable("equality constraint of Type 2 or 3".into()));
                }
                let (a, b) = (find(&mut parent, first.first().unwrap()), find(&mut parent, second.first().unwrap()));
                parent[a] = b;
            }
            Constraint::Counting { lower, .. } if *lower > 1 => {
                return Err(KernelError::Inapplicable("counting constraint with lower bound above 1".into()));
            }
            _ => {}
        }
    }
    let mut comp_of = vec![None; k];
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut root_index = vec![usize::MAX; k];
    for s in 0..k {
        let r = find(&mut parent, s);
        if root_index[r] == usize::MAX {
            root_index[r] = components.len();
            components.push(Vec::new());
        }
        components[root_index[r]].push(s);
        comp_of[s] = Some(root_index[r]);
    }
    let merged: StepSet = components.iter().filter(|c| c.len() > 1).flatten().copied().collect();
    if w.constraints().iter().any(|c| matches!(c, Constraint::Counting { scope, .. } if scope.intersects(merged))) {
        return Err(KernelError::Inapplicable("counting constraint touches merged steps".into()));
    }
    let stage = Stage::MergeEqualitySteps { components: components.clone() };
    let mut constraints = Vec::new();
    let mut unsat = false;
    for c in w.constraints() {
        match c {
            Constraint::Entailment { relation: Relation::Eq, .. } => {}
            Constraint::Entailment { relation, first, second } => {
                let (a, b) = (remap(*first, &comp_of), remap(*second, &comp_of));
                if (a | b).len() == 1 {
                    unsat = true;
                }
                constraints.push(Constraint::entailment(relation.clone(), a, b));
            }
            Constraint::Counting { lower, upper, scope } => {
                constraints.push(Constraint::counting(*lower, *upper, remap(*scope, &comp_of)))
            }
        }
    }
    let members: Vec<StepSet> = components.iter().map(|c| StepSet::from_indices(c.iter().copied())).collect();
    let auth: Vec<StepSet> = w
        .auth()
        .iter()
        .map(|&row| members.iter().enumerate().filter(|(_, m)| m.is_subset(row)).map(|(i, _)| i).collect())
        .collect();
    let orphan = (0..components.len()).any(|i| auth.iter().all(|row| !row.contains(i)));
    if unsat || orphan {
        return Ok(KernelResult::single(w, stage, w.clone(), Some(Verdict::Unsat)));
    }
    let mut names: Vec<String> = Vec::with_capacity(components.len());
    for c in &components {
        let mut name = c.iter().map(|&s| w.steps()[s].as_str()).collect::<Vec<_>>().join("+");
        while (c.len() > 1 && w.step_index(&name).is_some()) || names.contains(&name) {
            name.push('\'');
        }
        names.push(name);
    }
    let parts = InstanceParts {
        steps: names,
        users: w.users().to_vec(),
        order: remap_order(w, &comp_of),
        auth,
        constraints,
        hierarchy: w.hierarchy().cloned(),
    };
    let reduced = build(w, parts);
    Ok(KernelResult::single(w, stage, reduced, None))
}

/// Sets aside steps with at least `k` authorized users.
///
/// Applies to `≠` constraints of any type and counting constraints `(1, t, S′)`.
pub fn remove_easy_steps(w: &WorkflowInstance) -> Result<KernelResult, KernelError> {
    for c in w.constraints() {
        match c {
            Constraint::Entailment { relation: Relation::Neq, .. } => {}
            Constraint::Counting { lower: 1, .. } => {}
            _ => return Err(KernelError::Inapplicable("only ≠ and (1, t, S′) constraints are allowed".into())),
        }
    }
    let k = w.k();
    let users_of: Vec<Vec<usize>> = (0..k).map(|s| w.authorized_users(s)).collect();
    let (easy, hard): (Vec<usize>, Vec<usize>) = (0..k).partition(|&s| users_of[s].len() >= k);
    let hard_set = StepSet::from_indices(hard.iter().copied());
    let users: Vec<usize> = (0..w.n()).filter(|&u| w.auth_of(u).intersects(hard_set)).collect();
    let stage = Stage::RemoveEasySteps { hard: hard.clone(), easy, users: users.clone() };
    let degenerate = w.constraints().iter().any(|c| {
        matches!(c, Constraint::Entailment { first, second, .. } if (*first | *second).len() == 1)
    });
    if degenerate {
        return Ok(KernelResult::single(w, stage, w.clone(), Some(Verdict::Unsat)));
    }
    assert!(users.len() <= k * k.saturating_sub(1), "easy-step kernel has {} users for k = {k}", users.len());
    let mut map = vec![None; k];
    for (i, &s) in hard.iter().enumerate() {
        map[s] = Some(i);
    }
    let mut constraints = Vec::new();
    for c in w.constraints() {
        match c {
            Constraint::Entailment { relation, first, second } if (*first | *second).is_subset(hard_set) => {
                constraints.push(Constraint::entailment(relation.clone(), remap(*first, &map), remap(*second, &map)))
            }
            Constraint::Counting { lower, upper, scope } => {
                let rest = remap(*scope, &map);
                if !rest.is_empty() && *upper < rest.len() {
                    constraints.push(Constraint::counting(*lower, *upper, rest));
                }
            }
            _ => {}
        }
    }
    let parts = InstanceParts {
        steps: hard.iter().map(|&s| w.steps()[s].clone()).collect(),
        users: users.iter().map(|&u| w.users()[u].clone()).collect(),
        order: remap_order(w, &map),
        auth: users.iter().map(|&u| remap(w.auth_of(u), &map)).collect(),
        constraints,
        hierarchy: None,
    };
    let reduced = build(w, parts);
    let verdict = hard.is_empty().then_some(Verdict::Sat);
    Ok(KernelResult::single(w, stage, reduced, verdict))
}

/// Maximum matching and the alternating-path set `R = U′ ∪ S′`.
#[derive(Clone, Debug)]
pub struct MatchingState {
    pub graph: Bipartite,
    pub mate_of_step: Vec<Option<usize>>,
    pub mate_of_user: Vec<Option<usize>>,
    pub kernel_steps: Vec<usize>,
    pub kernel_users: Vec<usize>,
}

impl MatchingState {
    pub fn new(w: &WorkflowInstance) -> Self {
        let graph = Bipartite { adj: (0..w.k()).map(|s| w.authorized_users(s)).collect(), users: w.n() };
        let (mate_of_step, mate_of_user) = hopcroft_karp(&graph);
        let (in_s, in_u) = alternating_reach(&graph, &mate_of_step, &mate_of_user);
        let kernel_steps = (0..w.k()).filter(|&s| in_s[s]).collect();
        let kernel_users = (0..w.n()).filter(|&u| in_u[u]).collect();
        MatchingState { graph, mate_of_step, mate_of_user, kernel_steps, kernel_users }
    }

    pub fn covers_all_steps(&self) -> bool {
        self.mate_of_step.iter().all(Option::is_some)
    }

    /// Checks P1 (steps outside `S′` are matched), P2 (no edge from `U∖U′`
    /// into `S′`), P3 (every `U″ ⊆ U′` has more than `|U″|` neighbours in `S′`)
    /// and `|U′| < |S′|` when `S′` is nonempty.
    pub fn check_properties(&self) -> Result<(), String> {
        let in_s: Vec<bool> = (0..self.graph.steps()).map(|s| self.kernel_steps.contains(&s)).collect();
        let in_u: Vec<bool> = (0..self.graph.users).map(|u| self.kernel_users.contains(&u)).collect();
        for s in 0..self.graph.steps() {
            if !in_s[s] && self.mate_of_step[s].is_none() {
                return Err(format!("P1: step {s} outside S′ is unmatched"));
            }
        }
        for &s in &self.kernel_steps {
            if let Some(&u) = self.graph.adj[s].iter().find(|&&u| !in_u[u]) {
                return Err(format!("P2: edge from user {u} outside U′ to step {s} in S′"));
            }
        }
        // Surplus Hall condition, tested as: U′ saturates into S′ minus any single step.
        for &drop in &self.kernel_steps {
            let adj: Vec<Vec<usize>> = self
                .kernel_users
                .iter()
                .map(|&u| {
                    self.kernel_steps
                        .iter()
                        .enumerate()
                        .filter(|&(_, &s)| s != drop && self.graph.adj[s].contains(&u))
                        .map(|(i, _)| i)
                        .collect()
                })
                .collect();
            let sub = Bipartite { adj, users: self.kernel_steps.len() };
            if matching_size(&sub) < self.kernel_users.len() {
                return Err(format!("P3: U′ does not saturate S′ without step {drop}"));
            }
        }
        if !self.kernel_steps.is_empty() && self.kernel_users.len() >= self.kernel_steps.len() {
            return Err(format!("|U′| = {} is not below |S′| = {}", self.kernel_users.len(), self.kernel_steps.len()));
        }
        Ok(())
    }
}

/// Keeps only `S′` and `U′`; all other steps take their matched users.
///
/// Requires every constraint to be a Type-1 `≠`.
pub fn matching_kernel(w: &WorkflowInstance) -> Result<KernelResult, KernelError> {
    let all_type1_neq = w.constraints().iter().all(|c| {
        matches!(c.relation(), Some(Relation::Neq)) && c.kind() == Some(ConstraintType::One)
    });
    if !all_type1_neq {
        return Err(KernelError::Inapplicable("matching kernel needs Type-1 ≠ constraints only".into()));
    }
    let st = MatchingState::new(w);
    if let Err(e) = st.check_properties() {
        panic!("matching kernel invariant violated: {e}");
    }
    let matching: Vec<(usize, usize)> =
        st.mate_of_step.iter().enumerate().filter_map(|(s, m)| m.map(|u| (s, u))).collect();
    let kernel_set = StepSet::from_indices(st.kernel_steps.iter().copied());
    let assigned: Vec<(usize, usize)> = matching.iter().copied().filter(|&(s, _)| !kernel_set.contains(s)).collect();
    let stage = Stage::MatchingKernel {
        matching,
        assigned,
        kernel_steps: st.kernel_steps.clone(),
        kernel_users: st.kernel_users.clone(),
    };
    assert!(st.kernel_users.len() <= w.k(), "matching kernel has more than k users");
    let mut map = vec![None; w.k()];
    for (i, &s) in st.kernel_steps.iter().enumerate() {
        map[s] = Some(i);
    }
    let constraints = w
        .constraints()
        .iter()
        .filter(|c| c.steps().is_subset(kernel_set))
        .map(|c| match c {
            Constraint::Entailment { relation, first, second } => {
                Constraint::entailment(relation.clone(), remap(*first, &map), remap(*second, &map))
            }
            Constraint::Counting { .. } => unreachable!("checked above"),
        })
        .collect();
    let parts = InstanceParts {
        steps: st.kernel_steps.iter().map(|&s| w.steps()[s].clone()).collect(),
        users: st.kernel_users.iter().map(|&u| w.users()[u].clone()).collect(),
        order: remap_order(w, &map),
        auth: st.kernel_users.iter().map(|&u| remap(w.auth_of(u), &map)).collect(),
        constraints,
        hierarchy: None,
    };
    let reduced = build(w, parts);
    let verdict = st.covers_all_steps().then_some(Verdict::Sat);
    Ok(KernelResult::single(w, stage, reduced, verdict))
}

type StageFn = fn(&WorkflowInstance) -> Result<KernelResult, KernelError>;

/// Runs merge, easy-step removal and the matching kernel, each when applicable.
pub fn kernelize(w: &WorkflowInstance) -> KernelResult {
    let mut kr = KernelResult::identity(w);
    let has_eq = w.constraints().iter().any(|c| matches!(c.relation(), Some(Relation::Eq)));
    let stages: [StageFn; 3] =
        [merge_equality_steps, remove_easy_steps, matching_kernel];
    for (i, stage) in stages.iter().enumerate() {
        if i == 0 && !has_eq {
            continue;
        }
        if let Ok(next) = stage(&kr.reduced) {
            kr = kr.then(next);
            if kr.verdict_shortcut.is_some() {
                break;
            }
        }
    }
    kr
}

/// Turns a valid plan for `kr.reduced` into a valid plan for the original instance.
pub fn lift_plan(kr: &KernelResult, kernel_plan: &Plan) -> Result<Plan, KernelError> {
    if kr.verdict_shortcut == Some(Verdict::Unsat) {
        return Err(KernelError::PlanMismatch("the kernel decided the instance is unsatisfiable".into()));
    }
    if kernel_plan.assignment.len() != kr.reduced.k() {
        return Err(KernelError::PlanMismatch(format!(
            "plan has {} steps, reduced instance has {}",
            kernel_plan.assignment.len(),
            kr.reduced.k()
        )));
    }
    if let Some(u) = kernel_plan.assignment.iter().find(|u| u.0 >= kr.reduced.n()) {
        return Err(KernelError::PlanMismatch(format!("unknown user index {}", u.0)));
    }
    let mut plan = kernel_plan.assignment.clone();
    for (stage, w) in kr.trace.iter().zip(&kr.inputs).rev() {
        plan = lift_stage(stage, w, &plan)?;
    }
    Ok(Plan::new(plan))
}

fn lift_stage(stage: &Stage, w: &WorkflowInstance, plan: &[UserId]) -> Result<Vec<UserId>, KernelError> {
    let mut out = vec![UserId(usize::MAX); w.k()];
    match stage {
        Stage::MergeEqualitySteps { components } => {
            for (t, members) in components.iter().enumerate() {
                for &s in members {
                    out[s] = plan[t];
                }
            }
        }
        Stage::RemoveEasySteps { hard, easy, users } => {
            let mut used = vec![false; w.n()];
            for (i, &s) in hard.iter().enumerate() {
                let u = users[plan[i].0];
                out[s] = UserId(u);
                used[u] = true;
            }
            for &s in easy {
                let u = w
                    .authorized_users(s)
                    .into_iter()
                    .find(|&u| !used[u])
                    .ok_or_else(|| KernelError::InsufficientUsers(w.steps()[s].clone()))?;
                used[u] = true;
                out[s] = UserId(u);
            }
        }
        Stage::MatchingKernel { assigned, kernel_steps, kernel_users, .. } => {
            for &(s, u) in assigned {
                out[s] = UserId(u);
            }
            for (i, &s) in kernel_steps.iter().enumerate() {
                out[s] = UserId(kernel_users[plan[i].0]);
            }
        }
    }
    Ok(out)
}

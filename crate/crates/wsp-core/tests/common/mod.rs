#![allow(dead_code)]

use wsp_core::hierarchy::{from_management_tree, Hierarchy, ManagementTree, TreeMethod};
use wsp_core::model::{Constraint, InstanceParts, Relation, WorkflowInstance, DEFAULT_CAP};
use wsp_core::StepSet;

pub fn one(i: usize) -> StepSet {
    StepSet::singleton(i)
}

pub fn set(ix: &[usize]) -> StepSet {
    StepSet::from_indices(ix.iter().copied())
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn instance(k: usize, auth: Vec<StepSet>, constraints: Vec<Constraint>, h: Option<Hierarchy>) -> WorkflowInstance {
    let parts = InstanceParts {
        steps: names("s", k),
        users: names("u", auth.len()),
        order: Vec::new(),
        auth,
        constraints,
        hierarchy: h,
    };
    WorkflowInstance::new(parts, DEFAULT_CAP).unwrap()
}

/// Purchase-order workflow: six steps, one `=` and four `≠`.
pub fn fig1_constraints() -> Vec<Constraint> {
    vec![
        Constraint::eq(one(0), one(2)),
        Constraint::neq(one(2), one(4)),
        Constraint::neq(one(0), one(3)),
        Constraint::neq(one(0), one(1)),
        Constraint::neq(one(3), one(5)),
    ]
}

pub fn fig1(users: usize) -> WorkflowInstance {
    let parts = InstanceParts {
        steps: names("s", 6),
        users: names("u", users),
        order: vec![(0, 1), (1, 2), (1, 3), (2, 4), (3, 5), (4, 5)],
        auth: vec![StepSet::full(6); users],
        constraints: fig1_constraints(),
        hierarchy: None,
    };
    WorkflowInstance::new(parts, DEFAULT_CAP).unwrap()
}

pub const FIG_USERS: [&str; 10] = ["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"];

/// The ten-user management tree rooted at `j`.
pub fn fig_tree() -> ManagementTree {
    let e = |p: &str, c: &str| (p.to_string(), c.to_string());
    ManagementTree::new(
        "j",
        &[e("j", "d"), e("j", "i"), e("d", "a"), e("d", "b"), e("d", "c"), e("i", "e"), e("i", "h"), e("h", "f"), e("h", "g")],
    )
    .unwrap()
}

/// The tree's hierarchy with users reordered to `a..j`.
pub fn fig_hierarchy(method: TreeMethod) -> Hierarchy {
    let t = fig_tree();
    let h = from_management_tree(&t, method);
    let order: Vec<usize> = FIG_USERS.iter().map(|u| t.names().iter().position(|x| x == u).unwrap()).collect();
    h.restrict(&order)
}

/// Partition of `a..j` written as `abc|d|...`.
pub fn render(h: &Hierarchy, level: usize) -> String {
    let mut blocks = h.partition(level);
    blocks.sort();
    blocks.iter().map(|b| b.iter().map(|&u| FIG_USERS[u]).collect::<String>()).collect::<Vec<_>>().join("|")
}

pub fn sim(i: usize, a: StepSet, b: StepSet) -> Constraint {
    Constraint::entailment(Relation::Sim(i), a, b)
}

pub fn nsim(i: usize, a: StepSet, b: StepSet) -> Constraint {
    Constraint::entailment(Relation::Nsim(i), a, b)
}

//! Seeded random instances.

use super::GenError;
use crate::hierarchy::{from_management_tree, Hierarchy, ManagementTree, TreeMethod};
use crate::model::{Constraint, InstanceParts, Relation, UserId, WorkflowInstance, DEFAULT_CAP};
use crate::stepset::StepSet;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Which constraint forms to draw.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mix {
    /// Counting constraints only.
    Counting,
    /// Type-1 `≠` only.
    Wsp1Neq,
    /// `≠` of all three types.
    Neq,
    /// `=` of all three types, with some Type-1 `≠`.
    Eq,
    /// Type-1 `=` and `≠`.
    Wsp1EqNeq,
    /// `≠` of all types and counting `(1, t, S′)`.
    NeqCounting1,
    /// Counting, `=` and `≠` of all types.
    Regular,
    /// `∼₂`/`≁₂` over a three-level hierarchy.
    SingleRelation,
    /// `∼ᵢ`/`≁ᵢ` at random levels of a management-tree hierarchy, with some `=`, `≠` and counting.
    MultiLevel,
    /// Explicit user-pair relations and `≠`.
    Pairs,
}

impl Mix {
    pub const ALL: [Mix; 10] = [
        Mix::Counting,
        Mix::Wsp1Neq,
        Mix::Neq,
        Mix::Eq,
        Mix::Wsp1EqNeq,
        Mix::NeqCounting1,
        Mix::Regular,
        Mix::SingleRelation,
        Mix::MultiLevel,
        Mix::Pairs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mix::Counting => "counting",
            Mix::Wsp1Neq => "wsp1-neq",
            Mix::Neq => "neq",
            Mix::Eq => "eq",
            Mix::Wsp1EqNeq => "wsp1-eq-neq",
            Mix::NeqCounting1 => "neq-counting1",
            Mix::Regular => "regular",
            Mix::SingleRelation => "single-relation",
            Mix::MultiLevel => "multi-level",
            Mix::Pairs => "pairs",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Mix::ALL.into_iter().find(|m| m.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RandomSpec {
    pub k: usize,
    pub n: usize,
    pub constraints: usize,
    /// Probability that a user is authorized for a step.
    pub density: f64,
    pub mix: Mix,
    pub seed: u64,
}

impl RandomSpec {
    pub fn new(k: usize, n: usize, constraints: usize, density: f64, mix: Mix, seed: u64) -> Self {
        RandomSpec { k, n, constraints, density, mix, seed }
    }
}

/// Deterministic for a given spec. Steps left without a user get one at random.
/// The generator stream used for every seeded construction.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gen_random(spec: &RandomSpec) -> Result<WorkflowInstance, GenError> {
    let RandomSpec { k, n, constraints: c, density, mix, seed } = *spec;
    if k > DEFAULT_CAP {
        return Err(GenError::StepLimitExceeded { k, cap: DEFAULT_CAP });
    }
    if n == 0 && k > 0 {
        return Err(GenError::InvalidParameter("steps need at least one user".into()));
    }
    if !(0.0..=1.0).contains(&density) {
        return Err(GenError::InvalidParameter(format!("density {density} outside [0, 1]")));
    }
    if k == 0 && c > 0 {
        return Err(GenError::InvalidParameter("constraints need at least one step".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut auth = vec![StepSet::EMPTY; n];
    for row in auth.iter_mut() {
        for s in 0..k {
            if rng.gen_bool(density) {
                *row = row.with(s);
            }
        }
    }
    for s in 0..k {
        if auth.iter().all(|r| !r.contains(s)) {
            let u = rng.gen_range(0..n);
            auth[u] = auth[u].with(s);
        }
    }
    let hierarchy = match mix {
        Mix::SingleRelation => Some(three_level(&mut rng, n)),
        Mix::MultiLevel => Some(random_hierarchy(&mut rng, n)),
        _ => None,
    };
    let levels = hierarchy.as_ref().map_or(1, |h| h.level_count());
    let mut g = Draw { rng: &mut rng, k };
    let constraints = (0..c)
        .map(|_| match mix {
            Mix::Counting => g.counting(false),
            Mix::Wsp1Neq => g.entail(Relation::Neq, 1),
            Mix::Neq => g.entail_any(Relation::Neq),
            Mix::Eq => {
                if g.rng.gen_bool(0.3) {
                    g.entail(Relation::Neq, 1)
                } else {
                    g.entail_any(Relation::Eq)
                }
            }
            Mix::Wsp1EqNeq => {
                let r = if g.rng.gen_bool(0.5) { Relation::Eq } else { Relation::Neq };
                g.entail(r, 1)
            }
            Mix::NeqCounting1 => {
                if g.rng.gen_bool(0.3) {
                    g.counting(true)
                } else {
                    g.entail_any(Relation::Neq)
                }
            }
            Mix::Regular => match g.rng.gen_range(0..3) {
                0 => g.counting(false),
                1 => g.entail_any(Relation::Eq),
                _ => g.entail_any(Relation::Neq),
            },
            Mix::SingleRelation => {
                let r = if g.rng.gen_bool(0.5) { Relation::Sim(2) } else { Relation::Nsim(2) };
                g.entail_any(r)
            }
            Mix::MultiLevel => match g.rng.gen_range(0..10) {
                0 => g.counting(false),
                1 => g.entail_any(Relation::Eq),
                2 => g.entail_any(Relation::Neq),
                _ => {
                    let i = g.rng.gen_range(1..=levels);
                    let r = if g.rng.gen_bool(0.5) { Relation::Sim(i) } else { Relation::Nsim(i) };
                    g.entail_any(r)
                }
            },
            Mix::Pairs => {
                if g.rng.gen_bool(0.5) {
                    let pairs = (0..n)
                        .flat_map(|a| (0..n).map(move |b| (UserId(a), UserId(b))))
                        .filter(|_| g.rng.gen_bool(0.5))
                        .collect();
                    g.entail_any(Relation::Pairs(pairs))
                } else {
                    g.entail_any(Relation::Neq)
                }
            }
        })
        .collect();
    let parts = InstanceParts {
        steps: (1..=k).map(|i| format!("s{i}")).collect(),
        users: (1..=n).map(|i| format!("u{i}")).collect(),
        order: Vec::new(),
        auth,
        constraints,
        hierarchy,
    };
    Ok(WorkflowInstance::new(parts, DEFAULT_CAP)?)
}

struct Draw<'a> {
    rng: &'a mut ChaCha8Rng,
    k: usize,
}

impl Draw<'_> {
    fn subset(&mut self, size: usize) -> StepSet {
        let mut all: Vec<usize> = (0..self.k).collect();
        all.shuffle(self.rng);
        StepSet::from_indices(all.into_iter().take(size.clamp(1, self.k)))
    }

    fn counting(&mut self, lower_one: bool) -> Constraint {
        let size = self.rng.gen_range(1..=self.k);
        let scope = self.subset(size);
        let lower = if lower_one { 1 } else { self.rng.gen_range(1..=size.min(2)) };
        let upper = self.rng.gen_range(lower..=size);
        Constraint::counting(lower, upper, scope)
    }

    /// Type `t` scopes: singletons for Type 1, a singleton and a larger set for Type 2, two larger sets for Type 3.
    fn entail(&mut self, relation: Relation, t: usize) -> Constraint {
        if self.k < 2 {
            return Constraint::entailment(relation, StepSet::singleton(0), StepSet::singleton(0));
        }
        let big = |d: &mut Self| {
            let size = d.rng.gen_range(2..=d.k.min(3));
            d.subset(size)
        };
        let (first, second) = match t {
            1 => {
                let pair = self.subset(2);
                let a = pair.first().unwrap();
                (StepSet::singleton(a), pair.without(a))
            }
            2 => {
                let s = self.subset(1);
                (s, big(self))
            }
            _ => (big(self), big(self)),
        };
        if self.rng.gen_bool(0.5) && t != 2 {
            Constraint::entailment(relation, second, first)
        } else {
            Constraint::entailment(relation, first, second)
        }
    }

    fn entail_any(&mut self, relation: Relation) -> Constraint {
        let t = self.rng.gen_range(1..=3);
        self.entail(relation, t)
    }
}

/// Singletons, a random partition, everyone.
fn three_level(rng: &mut ChaCha8Rng, n: usize) -> Hierarchy {
    let blocks = if n <= 2 { n } else { rng.gen_range(2..n) };
    let mut mid: Vec<usize> = (0..n).map(|u| if u < blocks { u } else { rng.gen_range(0..blocks) }).collect();
    mid.shuffle(rng);
    Hierarchy::from_block_ids(n, vec![(0..n).collect(), mid, vec![0; n]]).expect("nested partitions")
}

/// From a random management tree when `n ≥ 3`; otherwise the only canonical hierarchy.
pub fn random_hierarchy<R: Rng>(rng: &mut R, n: usize) -> Hierarchy {
    if n < 3 {
        let levels = if n < 2 { vec![vec![0; n]] } else { vec![(0..n).collect(), vec![0; n]] };
        return Hierarchy::from_block_ids(n, levels).expect("nested partitions");
    }
    let tree = random_tree(rng, n);
    let method = if rng.gen_bool(0.5) { TreeMethod::FoldSubtrees } else { TreeMethod::CollapseRootAndLeaves };
    from_management_tree(&tree, method)
}

/// Node `i` is user `u{i+1}` and every parent precedes its children, so the
/// tree's node order is user order. No node gets exactly one child.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize) -> ManagementTree {
    assert!(n >= 3, "a tree without single-child nodes needs 1 or at least 3 nodes");
    let mut parent = vec![usize::MAX; n];
    let mut kids = vec![0usize; n];
    parent[1] = 0;
    parent[2] = 0;
    kids[0] = 2;
    let mut i = 3;
    while i < n {
        let leaves: Vec<usize> = (1..i).filter(|&v| kids[v] == 0).collect();
        if i + 1 < n && rng.gen_bool(0.5) {
            let l = *leaves.choose(rng).expect("a tree with two or more nodes has leaves");
            parent[i] = l;
            parent[i + 1] = l;
            kids[l] = 2;
            i += 2;
        } else {
            let internal: Vec<usize> = (0..i).filter(|&v| kids[v] > 0).collect();
            let p = *internal.choose(rng).unwrap();
            parent[i] = p;
            kids[p] += 1;
            i += 1;
        }
    }
    let name = |v: usize| format!("u{}", v + 1);
    let edges: Vec<(String, String)> = (1..n).map(|v| (name(parent[v]), name(v))).collect();
    ManagementTree::new(&name(0), &edges).expect("valid by construction")
}

//! Organizational hierarchies: stacked partitions of the user set.
//!
//! Level `1` is the finest partition and every level refines the one
//! above it. Levels are 1-based in the public API to match constraint
//! notation (`Sim(i)` compares blocks at level `i`).

mod tree;

pub use tree::{from_management_tree, ManagementTree, TreeMethod};

use crate::model::{Constraint, Relation};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HierarchyError {
    #[error("level {level} is not a partition of the user set: {detail}")]
    NotAPartition { level: usize, detail: String },
    #[error("level {level} does not refine level {}", level + 1)]
    NotARefinement { level: usize },
    #[error("level {level} is outside 1..={levels}")]
    LevelOutOfRange { level: usize, levels: usize },
    #[error("hierarchy is not canonical")]
    NotCanonical,
    #[error("malformed management tree: {0}")]
    MalformedTree(String),
    #[error("hierarchy has {got} users, instance has {expected}")]
    UserCountMismatch { got: usize, expected: usize },
}

/// A chain of partitions over users `0..n`.
///
/// Block ids are dense per level and numbered by first appearance in user
/// order, so two levels describe the same partition iff their id vectors
/// are equal.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Hierarchy {
    n: usize,
    levels: Vec<Vec<u32>>,
    counts: Vec<usize>,
}

fn normalize(ids: &[usize]) -> (Vec<u32>, usize) {
    let mut map = std::collections::HashMap::new();
    let out = ids
        .iter()
        .map(|&b| {
            let next = map.len() as u32;
            *map.entry(b).or_insert(next)
        })
        .collect();
    (out, map.len())
}

impl Hierarchy {
    /// Builds a hierarchy from per-level lists of blocks (lists of user indices).
    pub fn from_partitions(n: usize, levels: &[Vec<Vec<usize>>]) -> Result<Self, HierarchyError> {
        let mut ids = Vec::with_capacity(levels.len());
        for (li, blocks) in levels.iter().enumerate() {
            let level = li + 1;
            let mut owner = vec![usize::MAX; n];
            for (b, block) in blocks.iter().enumerate() {
                if block.is_empty() {
                    return Err(HierarchyError::NotAPartition { level, detail: "empty block".into() });
                }
                for &u in block {
                    if u >= n {
                        return Err(HierarchyError::NotAPartition {
                            level,
                            detail: format!("user index {u} out of range"),
                        });
                    }
                    if owner[u] != usize::MAX {
                        return Err(HierarchyError::NotAPartition {
                            level,
                            detail: format!("user {u} appears in two blocks"),
                        });
                    }
                    owner[u] = b;
                }
            }
            if let Some(u) = owner.iter().position(|&b| b == usize::MAX) {
                return Err(HierarchyError::NotAPartition { level, detail: format!("user {u} is uncovered") });
            }
            ids.push(owner);
        }
        Self::from_block_ids(n, ids)
    }

    /// Builds a hierarchy from per-level block labels (arbitrary integers).
    pub fn from_block_ids(n: usize, levels: Vec<Vec<usize>>) -> Result<Self, HierarchyError> {
        if levels.is_empty() {
            return Err(HierarchyError::NotAPartition { level: 1, detail: "no levels".into() });
        }
        let mut out = Vec::with_capacity(levels.len());
        let mut counts = Vec::with_capacity(levels.len());
        for (li, ids) in levels.iter().enumerate() {
            if ids.len() != n {
                return Err(HierarchyError::NotAPartition {
                    level: li + 1,
                    detail: format!("{} labels for {n} users", ids.len()),
                });
            }
            let (norm, count) = normalize(ids);
            out.push(norm);
            counts.push(count);
        }
        for li in 0..out.len().saturating_sub(1) {
            let mut up = vec![u32::MAX; counts[li]];
            for u in 0..n {
                let b = out[li][u] as usize;
                let p = out[li + 1][u];
                if up[b] == u32::MAX {
                    up[b] = p;
                } else if up[b] != p {
                    return Err(HierarchyError::NotARefinement { level: li + 1 });
                }
            }
        }
        Ok(Hierarchy { n, levels: out, counts })
    }

    /// The two-level hierarchy of singletons under a single block.
    pub fn flat(n: usize) -> Self {
        Self::from_block_ids(n, vec![(0..n).collect(), vec![0; n]]).expect("flat hierarchy is valid")
    }

    pub fn user_count(&self) -> usize {
        self.n
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn block_count(&self, level: usize) -> usize {
        self.counts[level - 1]
    }

    pub fn block_of(&self, u: usize, level: usize) -> Result<usize, HierarchyError> {
        if level == 0 || level > self.levels.len() {
            return Err(HierarchyError::LevelOutOfRange { level, levels: self.levels.len() });
        }
        Ok(self.levels[level - 1][u] as usize)
    }

    /// Unchecked variant of [`block_of`](Self::block_of) for inner loops.
    #[inline]
    pub fn block(&self, u: usize, level: usize) -> usize {
        self.levels[level - 1][u] as usize
    }

    #[inline]
    pub fn same_block(&self, u: usize, v: usize, level: usize) -> bool {
        let l = &self.levels[level - 1];
        l[u] == l[v]
    }

    /// Block id vector of a level.
    pub fn level_ids(&self, level: usize) -> &[u32] {
        &self.levels[level - 1]
    }

    /// Blocks of a level as sorted member lists, in block-id order.
    pub fn partition(&self, level: usize) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.counts[level - 1]];
        for (u, &b) in self.levels[level - 1].iter().enumerate() {
            blocks[b as usize].push(u);
        }
        blocks
    }

    pub fn is_canonical(&self) -> bool {
        let l = self.levels.len();
        self.counts[0] == self.n
            && self.counts[l - 1] <= 1
            && self.levels.windows(2).all(|w| w[0] != w[1])
    }

    /// Keeps only the listed users, renumbered in the given order.
    pub fn restrict(&self, users: &[usize]) -> Hierarchy {
        let levels = self
            .levels
            .iter()
            .map(|ids| users.iter().map(|&u| ids[u] as usize).collect())
            .collect();
        Hierarchy::from_block_ids(users.len(), levels).expect("restriction of a chain is a chain")
    }
}

/// Makes a hierarchy canonical and remaps Sim/Nsim levels to match.
///
/// Equal adjacent levels are merged (constraints on the upper copy move
/// down), then a singleton bottom and a single-block top are added when
/// missing.
pub fn canonicalize(h: &Hierarchy, constraints: &[Constraint]) -> (Hierarchy, Vec<Constraint>) {
    let mut levels: Vec<Vec<u32>> = h.levels.clone();
    let mut counts = h.counts.clone();
    let mut cons: Vec<Constraint> = constraints.to_vec();

    let remap = |cons: &mut Vec<Constraint>, f: &dyn Fn(usize) -> usize| {
        for c in cons.iter_mut() {
            if let Constraint::Entailment { relation: Relation::Sim(i) | Relation::Nsim(i), .. } = c {
                *i = f(*i);
            }
        }
    };

    let mut i = 0;
    while i + 1 < levels.len() {
        if levels[i] == levels[i + 1] {
            let dropped = i + 2;
            remap(&mut cons, &|j| if j >= dropped { j - 1 } else { j });
            levels.remove(i + 1);
            counts.remove(i + 1);
        } else {
            i += 1;
        }
    }
    if counts[0] != h.n {
        remap(&mut cons, &|j| j + 1);
        levels.insert(0, (0..h.n as u32).collect());
        counts.insert(0, h.n);
    }
    if *counts.last().unwrap() > 1 {
        levels.push(vec![0; h.n]);
        counts.push(1);
    }
    (Hierarchy { n: h.n, levels, counts }, cons)
}

/// A node of the significant-block tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockNode {
    pub members: Vec<usize>,
    /// Inclusive level range `[a, b]` over which the block exists.
    pub range: (usize, usize),
    pub children: Vec<usize>,
}

/// Significant blocks of a canonical hierarchy, children before parents.
#[derive(Clone, Debug)]
pub struct SignificantBlockTree {
    pub nodes: Vec<BlockNode>,
    pub root: usize,
    /// Leaf node of each user.
    pub leaf: Vec<usize>,
}

impl SignificantBlockTree {
    pub fn is_leaf(&self, v: usize) -> bool {
        self.nodes[v].children.is_empty()
    }
}

pub fn significant_block_tree(h: &Hierarchy) -> Result<SignificantBlockTree, HierarchyError> {
    if !h.is_canonical() {
        return Err(HierarchyError::NotCanonical);
    }
    let mut nodes: Vec<BlockNode> = Vec::new();
    let mut prev: Vec<usize> = Vec::new();
    let mut leaf = vec![0; h.n];
    for (li, ids) in h.levels.iter().enumerate() {
        let level = li + 1;
        let mut cur = vec![usize::MAX; h.counts[li]];
        if li == 0 {
            for (u, &b) in ids.iter().enumerate() {
                cur[b as usize] = nodes.len();
                leaf[u] = nodes.len();
                nodes.push(BlockNode { members: vec![u], range: (1, 1), children: Vec::new() });
            }
        } else {
            let below = &h.levels[li - 1];
            let mut kids: Vec<Vec<usize>> = vec![Vec::new(); h.counts[li]];
            let mut members: Vec<Vec<usize>> = vec![Vec::new(); h.counts[li]];
            for u in 0..h.n {
                let b = ids[u] as usize;
                let child = prev[below[u] as usize];
                if !kids[b].contains(&child) {
                    kids[b].push(child);
                }
                members[b].push(u);
            }
            for (b, (ks, ms)) in kids.into_iter().zip(members).enumerate() {
                if ks.len() == 1 {
                    nodes[ks[0]].range.1 = level;
                    cur[b] = ks[0];
                } else {
                    cur[b] = nodes.len();
                    nodes.push(BlockNode { members: ms, range: (level, level), children: ks });
                }
            }
        }
        prev = cur;
    }
    let root = prev.first().copied().unwrap_or(0);
    Ok(SignificantBlockTree { nodes, root, leaf })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_labels(levels: &[&str]) -> Hierarchy {
        // Each level is a string of block letters, one per user.
        let n = levels[0].len();
        let ids = levels.iter().map(|l| l.bytes().map(|b| b as usize).collect()).collect();
        Hierarchy::from_block_ids(n, ids).unwrap()
    }

    #[test]
    fn refinement_violation_detected() {
        let err = Hierarchy::from_partitions(3, &[vec![vec![0, 1], vec![2]], vec![vec![0], vec![1, 2]]]);
        assert_eq!(err, Err(HierarchyError::NotARefinement { level: 1 }));
    }

    #[test]
    fn partition_errors() {
        assert!(matches!(
            Hierarchy::from_partitions(3, &[vec![vec![0, 1]]]),
            Err(HierarchyError::NotAPartition { .. })
        ));
        assert!(matches!(
            Hierarchy::from_partitions(2, &[vec![vec![0, 1], vec![1]]]),
            Err(HierarchyError::NotAPartition { .. })
        ));
    }

    #[test]
    fn single_singleton_level_is_valid_but_not_canonical() {
        let h = Hierarchy::from_block_ids(3, vec![vec![0, 1, 2]]).unwrap();
        assert!(!h.is_canonical());
        let (c, _) = canonicalize(&h, &[]);
        assert!(c.is_canonical());
        assert_eq!(c.level_count(), 2);
    }

    #[test]
    fn canonicalize_merges_and_pads() {
        let h = from_labels(&["aabb", "aabb", "aaaa"]);
        let cons = vec![Constraint::Entailment {
            relation: Relation::Sim(2),
            first: crate::StepSet::singleton(0),
            second: crate::StepSet::singleton(1),
        }];
        let (c, cs) = canonicalize(&h, &cons);
        assert_eq!(c.level_count(), 3);
        match &cs[0] {
            Constraint::Entailment { relation, .. } => assert_eq!(*relation, Relation::Sim(2)),
            _ => unreachable!(),
        }
        let (again, _) = canonicalize(&c, &[]);
        assert_eq!(again, c);
    }

    #[test]
    fn star_tree_for_two_levels() {
        let t = significant_block_tree(&Hierarchy::flat(4)).unwrap();
        assert_eq!(t.nodes.len(), 5);
        assert_eq!(t.nodes[t.root].range, (2, 2));
        assert_eq!(t.nodes[t.root].children.len(), 4);
        assert!(t.leaf.iter().all(|&l| t.nodes[l].range == (1, 1)));
    }

    #[test]
    fn level_out_of_range() {
        let h = Hierarchy::flat(2);
        assert!(h.block_of(0, 0).is_err());
        assert!(h.block_of(0, 3).is_err());
        assert_eq!(h.block_of(1, 2), Ok(0));
    }
}

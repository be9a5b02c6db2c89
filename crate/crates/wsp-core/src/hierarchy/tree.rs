use super::{Hierarchy, HierarchyError};
use serde::Deserialize;
use std::collections::BTreeMap;

/// A reporting tree: an edge `(p, c)` means `c` reports to `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManagementTree {
    names: Vec<String>,
    root: usize,
    children: Vec<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeMethod {
    /// Fold every bottom subtree in two moves: leaves together, then into the parent.
    FoldSubtrees,
    /// Fold every bottom subtree into its root in one move.
    CollapseRootAndLeaves,
}

impl TreeMethod {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fold-subtrees" => Some(TreeMethod::FoldSubtrees),
            "collapse-root-and-leaves" => Some(TreeMethod::CollapseRootAndLeaves),
            _ => None,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTree {
    root: String,
    #[serde(default)]
    edges: Vec<(String, String)>,
}

impl ManagementTree {
    /// Nodes are numbered root first, then in order of first appearance in `edges`.
    pub fn new(root: &str, edges: &[(String, String)]) -> Result<Self, HierarchyError> {
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let mut names = vec![root.to_string()];
        index.insert(root.to_string(), 0);
        let mut id = |s: &str, names: &mut Vec<String>| {
            *index.entry(s.to_string()).or_insert_with(|| {
                names.push(s.to_string());
                names.len() - 1
            })
        };
        let pairs: Vec<(usize, usize)> = edges
            .iter()
            .map(|(p, c)| {
                let p = id(p, &mut names);
                let c = id(c, &mut names);
                (p, c)
            })
            .collect();
        let n = names.len();
        let mut parent = vec![usize::MAX; n];
        let mut children = vec![Vec::new(); n];
        for &(p, c) in &pairs {
            if c == 0 {
                return Err(HierarchyError::MalformedTree(format!("root {root} has a parent")));
            }
            if parent[c] != usize::MAX {
                return Err(HierarchyError::MalformedTree(format!("{} has two parents", names[c])));
            }
            parent[c] = p;
            children[p].push(c);
        }
        // Every node has a parent except the root, so reachability from the root rules out cycles.
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            seen[v] = true;
            stack.extend(children[v].iter().copied().filter(|&c| !seen[c]));
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(HierarchyError::MalformedTree(format!("{} is not reachable from the root", names[v])));
        }
        if let Some(v) = children.iter().position(|c| c.len() == 1) {
            return Err(HierarchyError::MalformedTree(format!("{} has exactly one subordinate", names[v])));
        }
        Ok(ManagementTree { names, root: 0, children })
    }

    pub fn from_json(text: &str) -> Result<Self, HierarchyError> {
        let raw: RawTree = serde_json::from_str(text).map_err(|e| HierarchyError::MalformedTree(e.to_string()))?;
        Self::new(&raw.root, &raw.edges)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    /// Number of edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn go(t: &ManagementTree, v: usize) -> usize {
            t.children[v].iter().map(|&c| 1 + go(t, c)).max().unwrap_or(0)
        }
        go(self, self.root)
    }
}

/// Builds a canonical hierarchy over the tree's nodes (in [`ManagementTree::names`] order).
pub fn from_management_tree(t: &ManagementTree, method: TreeMethod) -> Hierarchy {
    let n = t.names.len();
    // group[u] = surviving node that currently contains user u
    let mut group: Vec<usize> = (0..n).collect();
    let mut children = t.children.clone();
    let mut levels = vec![group.clone()];
    let snapshot = |group: &[usize], levels: &mut Vec<Vec<usize>>| {
        if levels.last().map(|l| l.as_slice()) != Some(group) {
            levels.push(group.to_vec());
        }
    };

    loop {
        let bottoms: Vec<usize> = (0..n)
            .filter(|&v| !children[v].is_empty() && children[v].iter().all(|&c| children[c].is_empty()))
            .collect();
        if bottoms.is_empty() {
            break;
        }
        match method {
            TreeMethod::FoldSubtrees => {
                for &v in &bottoms {
                    let keep = children[v][0];
                    for &c in &children[v][1..] {
                        absorb(&mut group, c, keep);
                    }
                    children[v].truncate(1);
                }
                snapshot(&group, &mut levels);
                for &v in &bottoms {
                    absorb(&mut group, children[v][0], v);
                    children[v].clear();
                }
                snapshot(&group, &mut levels);
            }
            TreeMethod::CollapseRootAndLeaves => {
                for &v in &bottoms {
                    for c in std::mem::take(&mut children[v]) {
                        absorb(&mut group, c, v);
                    }
                }
                snapshot(&group, &mut levels);
            }
        }
    }
    Hierarchy::from_block_ids(n, levels).expect("tree folding produces a refinement chain")
}

fn absorb(group: &mut [usize], from: usize, into: usize) {
    for g in group.iter_mut() {
        if *g == from {
            *g = into;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edges(list: &[(&str, &str)]) -> Vec<(String, String)> {
        list.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn rejects_single_child_and_two_parents() {
        assert!(ManagementTree::new("r", &edges(&[("r", "a")])).is_err());
        assert!(ManagementTree::new("r", &edges(&[("r", "a"), ("r", "b"), ("a", "b"), ("a", "c")])).is_err());
        assert!(ManagementTree::new("r", &edges(&[("r", "a"), ("r", "b"), ("x", "y"), ("x", "z")])).is_err());
    }

    #[test]
    fn lone_root_gives_one_level() {
        let t = ManagementTree::new("r", &[]).unwrap();
        let h = from_management_tree(&t, TreeMethod::FoldSubtrees);
        assert_eq!(h.level_count(), 1);
        assert!(h.is_canonical());
    }

    #[test]
    fn unbalanced_tree_level_counts() {
        let t = ManagementTree::new("r", &edges(&[("r", "x"), ("r", "y"), ("y", "a"), ("y", "b")])).unwrap();
        assert_eq!(t.depth(), 2);
        assert_eq!(from_management_tree(&t, TreeMethod::FoldSubtrees).level_count(), 5);
        assert_eq!(from_management_tree(&t, TreeMethod::CollapseRootAndLeaves).level_count(), 3);
    }
}

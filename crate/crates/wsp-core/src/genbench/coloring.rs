//! Graph 3-coloring and the OR-composition into a three-level hierarchy instance.

use super::GenError;
use crate::hierarchy::Hierarchy;
use crate::model::{Constraint, InstanceParts, Relation, WorkflowInstance, DEFAULT_CAP};
use crate::stepset::StepSet;
use rand::Rng;

/// Simple undirected graph on vertices `0..vertices`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self, GenError> {
        let mut norm = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a >= vertices || b >= vertices || a == b {
                return Err(GenError::InvalidParameter(format!("bad edge ({a}, {b}) for {vertices} vertices")));
            }
            norm.push((a.min(b), a.max(b)));
        }
        norm.sort_unstable();
        norm.dedup();
        Ok(Graph { vertices, edges: norm })
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        Graph { vertices: n, edges }
    }

    pub fn cycle(n: usize) -> Self {
        Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect()).expect("valid cycle")
    }

    pub fn path(n: usize) -> Self {
        Graph::new(n, (1..n).map(|i| (i - 1, i)).collect()).expect("valid path")
    }

    pub fn random<R: Rng>(rng: &mut R, n: usize, p: f64) -> Self {
        let edges = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|_| rng.gen_bool(p)).collect();
        Graph { vertices: n, edges }
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    /// Graphs separated by blank lines; each starts with its vertex count,
    /// followed by `u v` edge lines with 1-based vertices.
    pub fn parse_list(text: &str) -> Result<Vec<Graph>, GenError> {
        let mut out = Vec::new();
        let mut block: Vec<&str> = Vec::new();
        for line in text.lines().chain(std::iter::once("")) {
            let line = line.trim();
            if line.starts_with('#') {
                continue;
            }
            if !line.is_empty() {
                block.push(line);
                continue;
            }
            if block.is_empty() {
                continue;
            }
            let n: usize = block[0].parse().map_err(|e| GenError::Parse(format!("vertex count `{}`: {e}", block[0])))?;
            let mut edges = Vec::new();
            for l in &block[1..] {
                let f: Vec<&str> = l.split_whitespace().collect();
                let parse = |s: &str| s.parse::<usize>().map_err(|e| GenError::Parse(format!("edge `{l}`: {e}")));
                if f.len() != 2 {
                    return Err(GenError::Parse(format!("edge line `{l}` needs two vertices")));
                }
                let (a, b) = (parse(f[0])?, parse(f[1])?);
                if a == 0 || b == 0 {
                    return Err(GenError::Parse(format!("edge `{l}`: vertices are 1-based")));
                }
                edges.push((a - 1, b - 1));
            }
            out.push(Graph::new(n, edges)?);
            block.clear();
        }
        Ok(out)
    }
}

/// Backtracking over vertices in index order.
pub fn three_colorable(g: &Graph) -> bool {
    fn go(g: &Graph, v: usize, colors: &mut Vec<u8>) -> bool {
        if v == g.vertices {
            return true;
        }
        for c in 0..3 {
            if (0..v).all(|u| !g.has_edge(u, v) || colors[u] != c) {
                colors[v] = c;
                if go(g, v + 1, colors) {
                    return true;
                }
            }
        }
        false
    }
    go(g, 0, &mut vec![0; g.vertices])
}

/// Satisfiable iff at least one graph is 3-colorable.
///
/// Steps: `v1_i`, `v2_i` per vertex and `e_i_j`, `e'_i_j` per vertex pair
/// (1-based, `i < j`). Users `c1_a`, `c2_a`, `c3_a`, `alpha_a` per graph `a`,
/// grouped by graph at level 2. `alpha_a` may only take `e_i_j` for
/// non-edges of graph `a`; everyone else is authorized for every step.
pub fn gen_3coloring_or(graphs: &[Graph]) -> Result<WorkflowInstance, GenError> {
    let Some(first) = graphs.first() else {
        return Err(GenError::InvalidParameter("need at least one graph".into()));
    };
    let kappa = first.vertices;
    if graphs.iter().any(|g| g.vertices != kappa) {
        return Err(GenError::InvalidParameter("all graphs need the same vertex count".into()));
    }
    let k = kappa + kappa * kappa;
    if k > DEFAULT_CAP {
        return Err(GenError::StepLimitExceeded { k, cap: DEFAULT_CAP });
    }
    let mut steps = Vec::with_capacity(k);
    for i in 1..=kappa {
        steps.push(format!("v1_{i}"));
        steps.push(format!("v2_{i}"));
    }
    let v1 = |i: usize| 2 * i;
    let v2 = |i: usize| 2 * i + 1;
    let mut pair_index = Vec::new();
    for i in 0..kappa {
        for j in i + 1..kappa {
            pair_index.push((i, j, steps.len()));
            steps.push(format!("e_{}_{}", i + 1, j + 1));
            steps.push(format!("e'_{}_{}", i + 1, j + 1));
        }
    }
    debug_assert_eq!(steps.len(), k);
    let one = StepSet::singleton;
    let nsim1 = |a: usize, b: usize| Constraint::entailment(Relation::Nsim(1), one(a), one(b));
    let mut constraints = Vec::new();
    for i in 0..kappa {
        constraints.push(nsim1(v1(i), v2(i)));
    }
    for &(i, j, e) in &pair_index {
        let e2 = e + 1;
        constraints.extend([nsim1(v1(i), e), nsim1(v2(i), e), nsim1(e, e2), nsim1(v1(j), e2), nsim1(v2(j), e2)]);
    }
    for a in 0..k {
        for b in a + 1..k {
            constraints.push(Constraint::entailment(Relation::Sim(2), one(a), one(b)));
        }
    }
    let mut users = Vec::new();
    let mut auth = Vec::new();
    for (a, g) in graphs.iter().enumerate() {
        for c in 1..=3 {
            users.push(format!("c{c}_{}", a + 1));
            auth.push(StepSet::full(k));
        }
        users.push(format!("alpha_{}", a + 1));
        auth.push(pair_index.iter().filter(|&&(i, j, _)| !g.has_edge(i, j)).map(|&(_, _, e)| e).collect());
    }
    let n = users.len();
    let hierarchy = Hierarchy::from_block_ids(n, vec![(0..n).collect(), (0..n).map(|u| u / 4).collect(), vec![0; n]])
        .map_err(|e| GenError::InvalidParameter(e.to_string()))?;
    let parts = InstanceParts { steps, users, order: Vec::new(), auth, constraints, hierarchy: Some(hierarchy) };
    Ok(WorkflowInstance::new(parts, DEFAULT_CAP)?)
}

//! Maximum bipartite matching between steps and users.

use std::collections::VecDeque;

const NIL: usize = usize::MAX;

/// Bipartite graph with steps on the left and users on the right.
#[derive(Clone, Debug)]
pub struct Bipartite {
    /// Users adjacent to each step.
    pub adj: Vec<Vec<usize>>,
    pub users: usize,
}

impl Bipartite {
    pub fn steps(&self) -> usize {
        self.adj.len()
    }
}

/// Hopcroft–Karp. Returns the mate of every step and every user (`None` if free).
pub fn hopcroft_karp(g: &Bipartite) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let (ns, nu) = (g.steps(), g.users);
    let mut mate_s = vec![NIL; ns];
    let mut mate_u = vec![NIL; nu];
    let mut dist = vec![0usize; ns];
    loop {
        let mut queue = VecDeque::new();
        let mut found = false;
        for s in 0..ns {
            if mate_s[s] == NIL {
                dist[s] = 0;
                queue.push_back(s);
            } else {
                dist[s] = usize::MAX;
            }
        }
        while let Some(s) = queue.pop_front() {
            for &u in &g.adj[s] {
                match mate_u[u] {
                    NIL => found = true,
                    t if dist[t] == usize::MAX => {
                        dist[t] = dist[s] + 1;
                        queue.push_back(t);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            break;
        }
        let mut next = vec![0usize; ns];
        for s in 0..ns {
            if mate_s[s] == NIL {
                augment(g, s, &mut mate_s, &mut mate_u, &mut dist, &mut next);
            }
        }
    }
    let conv = |v: Vec<usize>| v.into_iter().map(|x| (x != NIL).then_some(x)).collect();
    (conv(mate_s), conv(mate_u))
}

fn augment(
    g: &Bipartite,
    s: usize,
    mate_s: &mut [usize],
    mate_u: &mut [usize],
    dist: &mut [usize],
    next: &mut [usize],
) -> bool {
    while next[s] < g.adj[s].len() {
        let u = g.adj[s][next[s]];
        next[s] += 1;
        let t = mate_u[u];
        if t == NIL || (dist[t] == dist[s] + 1 && augment(g, t, mate_s, mate_u, dist, next)) {
            mate_s[s] = u;
            mate_u[u] = s;
            return true;
        }
    }
    dist[s] = usize::MAX;
    false
}

/// Size of a maximum matching.
pub fn matching_size(g: &Bipartite) -> usize {
    hopcroft_karp(g).0.iter().filter(|m| m.is_some()).count()
}

/// Steps and users reachable from free steps by alternating paths.
pub fn alternating_reach(g: &Bipartite, mate_s: &[Option<usize>], mate_u: &[Option<usize>]) -> (Vec<bool>, Vec<bool>) {
    let mut in_s = vec![false; g.steps()];
    let mut in_u = vec![false; g.users];
    let mut queue: VecDeque<usize> = (0..g.steps()).filter(|&s| mate_s[s].is_none()).collect();
    for &s in &queue {
        in_s[s] = true;
    }
    while let Some(s) = queue.pop_front() {
        for &u in &g.adj[s] {
            if in_u[u] {
                continue;
            }
            in_u[u] = true;
            if let Some(t) = mate_u[u] {
                if !in_s[t] {
                    in_s[t] = true;
                    queue.push_back(t);
                }
            }
        }
    }
    (in_s, in_u)
}

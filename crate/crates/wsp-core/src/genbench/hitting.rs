//! Hitting set and its two workflow encodings.

use super::GenError;
use crate::model::{Constraint, InstanceParts, WorkflowInstance, DEFAULT_CAP};
use crate::stepset::StepSet;
use serde::{Deserialize, Serialize};

/// Sets over ground elements `0..elements`, each given as element indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HittingSetInstance {
    pub elements: usize,
    pub sets: Vec<Vec<usize>>,
    pub budget: usize,
}

impl HittingSetInstance {
    pub fn new(elements: usize, sets: Vec<Vec<usize>>, budget: usize) -> Result<Self, GenError> {
        let h = HittingSetInstance { elements, sets, budget };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.budget == 0 {
            return Err(GenError::InvalidParameter("budget must be at least 1".into()));
        }
        if self.elements == 0 {
            return Err(GenError::InvalidParameter("need at least one element".into()));
        }
        for (i, s) in self.sets.iter().enumerate() {
            if s.is_empty() {
                return Err(GenError::InvalidParameter(format!("set {} is empty", i + 1)));
            }
            if let Some(e) = s.iter().find(|&&e| e >= self.elements) {
                return Err(GenError::InvalidParameter(format!("set {} names element {e}", i + 1)));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, GenError> {
        let h: HittingSetInstance = serde_json::from_str(text).map_err(|e| GenError::Parse(e.to_string()))?;
        h.validate()?;
        Ok(h)
    }

    fn masks(&self) -> Vec<u32> {
        self.sets.iter().map(|s| s.iter().fold(0u32, |m, &e| m | 1 << e)).collect()
    }
}

/// Brute force over element subsets of size at most the budget.
pub fn hitting_set_exists(h: &HittingSetInstance) -> bool {
    let masks = h.masks();
    (0u32..1 << h.elements)
        .filter(|c| c.count_ones() as usize <= h.budget)
        .any(|c| masks.iter().all(|&m| m & c != 0))
}

fn encode(h: &HittingSetInstance, constraint: impl Fn(usize, StepSet) -> Constraint) -> Result<WorkflowInstance, GenError> {
    h.validate()?;
    let m = h.sets.len();
    let k = m + h.budget;
    if k > DEFAULT_CAP {
        return Err(GenError::StepLimitExceeded { k, cap: DEFAULT_CAP });
    }
    let fresh = StepSet::full(k) - StepSet::full(m);
    let auth = (0..h.elements)
        .map(|e| {
            let hit: StepSet = (0..m).filter(|&i| h.sets[i].contains(&e)).collect();
            hit | fresh
        })
        .collect();
    let mut steps: Vec<String> = (1..=m).map(|i| format!("v{i}")).collect();
    steps.extend((1..=h.budget).map(|i| format!("x{i}")));
    let parts = InstanceParts {
        steps,
        users: (1..=h.elements).map(|i| format!("z{i}")).collect(),
        order: Vec::new(),
        auth,
        constraints: (0..m).map(|i| constraint(i, fresh)).collect(),
        hierarchy: None,
    };
    Ok(WorkflowInstance::new(parts, DEFAULT_CAP)?)
}

/// Steps `v_i` per set and `x_1..x_budget`; users are elements; `(=, v_i, X)`.
pub fn gen_hitting_set_eq(h: &HittingSetInstance) -> Result<WorkflowInstance, GenError> {
    encode(h, |i, fresh| Constraint::eq(StepSet::singleton(i), fresh))
}

/// As [`gen_hitting_set_eq`] with `(2, budget + 1, X ∪ {v_i})` instead.
pub fn gen_hitting_set_counting(h: &HittingSetInstance) -> Result<WorkflowInstance, GenError> {
    encode(h, |i, fresh| Constraint::counting(2, h.budget + 1, fresh | StepSet::singleton(i)))
}

/// All instances with `elements` elements and `sets` nonempty sets, one per
/// isomorphism class under relabeling elements and reordering sets.
///
/// An instance is a 0/1 matrix with a column per element; it is kept when
/// its sorted column list is the least among all row permutations.
pub fn hitting_set_classes(elements: usize, sets: usize) -> Vec<Vec<Vec<usize>>> {
    let perms = permutations(sets);
    let width = 1usize << sets;
    // image[p][col]: column bits after permuting rows by p.
    let image: Vec<Vec<u32>> = perms
        .iter()
        .map(|p| {
            (0..width as u32)
                .map(|col| (0..sets).filter(|&r| col >> r & 1 == 1).fold(0u32, |acc, r| acc | 1 << p[r]))
                .collect()
        })
        .collect();
    let full = (width - 1) as u32;
    let mut out = Vec::new();
    let mut cols = vec![0u32; elements];
    let mut scratch = vec![0u32; elements];
    loop {
        let covered = cols.iter().fold(0, |a, &c| a | c) == full;
        if covered {
            let minimal = image.iter().all(|img| {
                for (d, &c) in scratch.iter_mut().zip(&cols) {
                    *d = img[c as usize];
                }
                scratch.sort_unstable();
                scratch.as_slice() >= cols.as_slice()
            });
            if minimal {
                out.push(
                    (0..sets)
                        .map(|r| (0..elements).filter(|&e| cols[e] >> r & 1 == 1).collect())
                        .collect(),
                );
            }
        }
        // Next nondecreasing column sequence.
        let mut i = elements;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cols[i] < full {
                let v = cols[i] + 1;
                for c in cols[i..].iter_mut() {
                    *c = v;
                }
                break;
            }
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

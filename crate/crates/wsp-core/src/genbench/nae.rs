//! Not-all-equal 3-SAT and its two-user workflow encoding.

use super::GenError;
use crate::model::{Constraint, InstanceParts, WorkflowInstance, DEFAULT_CAP};
use crate::stepset::StepSet;
use rand::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    /// 1-based.
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, positive: true }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, positive: false }
    }

    fn value(self, assignment: u32) -> bool {
        (assignment >> (self.var - 1) & 1 == 1) == self.positive
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CnfFormula {
    pub vars: usize,
    pub clauses: Vec<[Literal; 3]>,
}

impl CnfFormula {
    pub fn new(vars: usize, clauses: Vec<[Literal; 3]>) -> Result<Self, GenError> {
        for c in &clauses {
            for l in c {
                if l.var == 0 || l.var > vars {
                    return Err(GenError::InvalidParameter(format!("variable {} outside 1..={vars}", l.var)));
                }
            }
        }
        Ok(CnfFormula { vars, clauses })
    }

    /// Reads DIMACS-style CNF: a `p cnf <vars> <clauses>` line, then
    /// clauses of exactly three nonzero literals, each ended by `0`.
    /// Lines starting with `c` are comments.
    pub fn parse_dimacs(text: &str) -> Result<Self, GenError> {
        let mut vars = None;
        let mut lits: Vec<i64> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let f: Vec<&str> = rest.split_whitespace().collect();
                if f.len() != 3 || f[0] != "cnf" {
                    return Err(GenError::Parse(format!("line {}: bad problem line", i + 1)));
                }
                vars = Some(f[1].parse::<usize>().map_err(|e| GenError::Parse(format!("line {}: {e}", i + 1)))?);
                continue;
            }
            for tok in line.split_whitespace() {
                lits.push(tok.parse().map_err(|e| GenError::Parse(format!("line {}: `{tok}`: {e}", i + 1)))?);
            }
        }
        let vars = vars.ok_or_else(|| GenError::Parse("missing `p cnf` line".into()))?;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        for l in lits {
            if l == 0 {
                if current.len() != 3 {
                    return Err(GenError::Parse(format!("clause with {} literals, expected 3", current.len())));
                }
                clauses.push([current[0], current[1], current[2]]);
                current.clear();
            } else {
                let var = l.unsigned_abs() as usize;
                current.push(Literal { var, positive: l > 0 });
            }
        }
        if !current.is_empty() {
            return Err(GenError::Parse("last clause is not terminated by 0".into()));
        }
        CnfFormula::new(vars, clauses)
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.vars, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                let v = l.var as i64;
                out.push_str(&format!("{} ", if l.positive { v } else { -v }));
            }
            out.push_str("0\n");
        }
        out
    }
}

/// Truth-table check: some assignment gives every clause a true and a false literal.
pub fn nae_satisfiable(f: &CnfFormula) -> bool {
    (0u32..1 << f.vars).any(|a| {
        f.clauses.iter().all(|c| {
            let v: Vec<bool> = c.iter().map(|l| l.value(a)).collect();
            v.contains(&true) && v.contains(&false)
        })
    })
}

/// Step `s_i` stands for `x_i` and `s_{i+n}` for its negation; the two users are the truth values.
pub fn gen_nae3sat(f: &CnfFormula) -> Result<WorkflowInstance, GenError> {
    let n = f.vars;
    let step = |l: Literal| if l.positive { l.var - 1 } else { l.var - 1 + n };
    let mut constraints: Vec<Constraint> =
        (0..n).map(|j| Constraint::neq(StepSet::singleton(j), StepSet::singleton(j + n))).collect();
    for c in &f.clauses {
        constraints.push(Constraint::neq(
            StepSet::singleton(step(c[0])),
            StepSet::singleton(step(c[1])) | StepSet::singleton(step(c[2])),
        ));
    }
    let parts = InstanceParts {
        steps: (1..=2 * n).map(|i| format!("s{i}")).collect(),
        users: vec!["u0".into(), "u1".into()],
        order: Vec::new(),
        auth: vec![StepSet::full(2 * n); 2],
        constraints,
        hierarchy: None,
    };
    Ok(WorkflowInstance::new(parts, DEFAULT_CAP)?)
}

/// Every formula over exactly `vars` variables with at most `max_clauses`
/// clauses, up to clause order, where each clause uses three distinct
/// variables in increasing order and its first literal is positive.
///
/// Negating all literals of a clause does not change its NAE value, so the
/// sign convention loses nothing.
pub fn canonical_formulas(vars: usize, max_clauses: usize) -> Vec<CnfFormula> {
    let mut clauses: Vec<[Literal; 3]> = Vec::new();
    for a in 1..=vars {
        for b in a + 1..=vars {
            for c in b + 1..=vars {
                for signs in 0..4 {
                    clauses.push([
                        Literal::pos(a),
                        Literal { var: b, positive: signs & 1 == 0 },
                        Literal { var: c, positive: signs & 2 == 0 },
                    ]);
                }
            }
        }
    }
    let mut out = Vec::new();
    let mut pick = Vec::new();
    multisets(&clauses, 0, max_clauses, &mut pick, &mut |p| {
        out.push(CnfFormula { vars, clauses: p.to_vec() });
    });
    out
}

fn multisets<T: Copy>(items: &[T], from: usize, left: usize, pick: &mut Vec<T>, emit: &mut impl FnMut(&[T])) {
    emit(pick);
    if left == 0 {
        return;
    }
    for i in from..items.len() {
        pick.push(items[i]);
        multisets(items, i, left - 1, pick, emit);
        pick.pop();
    }
}

/// Uniform random clauses; literals may repeat within a clause.
pub fn random_formula<R: Rng>(rng: &mut R, vars: usize, clauses: usize) -> CnfFormula {
    let clauses = (0..clauses)
        .map(|_| std::array::from_fn(|_| Literal { var: rng.gen_range(1..=vars), positive: rng.gen_bool(0.5) }))
        .collect();
    CnfFormula { vars, clauses }
}

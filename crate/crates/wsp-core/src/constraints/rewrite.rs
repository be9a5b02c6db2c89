use super::{is_trivially_satisfied, ConstraintError};
use crate::model::{Constraint, ConstraintType, InstanceParts, Relation, WorkflowInstance, DUMMY_PREFIX};
use crate::stepset::StepSet;

/// Removes `=`/`∼` constraints with overlapping scopes.
pub fn drop_trivial(w: &WorkflowInstance) -> Result<WorkflowInstance, ConstraintError> {
    if !w.constraints().iter().any(is_trivially_satisfied) {
        return Ok(w.clone());
    }
    let mut parts = w.to_parts();
    parts.constraints.retain(|c| !is_trivially_satisfied(c));
    Ok(w.rebuild(parts)?)
}

/// Splits every Type-3 `=` through a fresh, fully authorized step.
pub fn rewrite_eq_type3(w: &WorkflowInstance) -> Result<WorkflowInstance, ConstraintError> {
    split_type3(w, |r| matches!(r, Relation::Eq))
}

/// Splits every Type-3 `∼ᵢ` through a fresh, fully authorized step.
pub fn rewrite_sim_type3(w: &WorkflowInstance) -> Result<WorkflowInstance, ConstraintError> {
    if w.hierarchy().is_none() && w.constraints().iter().any(|c| matches!(c.relation(), Some(Relation::Sim(_)))) {
        return Err(ConstraintError::Unsupported("Sim constraints without a hierarchy".into()));
    }
    split_type3(w, |r| matches!(r, Relation::Sim(_)))
}

fn split_type3(w: &WorkflowInstance, pick: impl Fn(&Relation) -> bool) -> Result<WorkflowInstance, ConstraintError> {
    let targets = w
        .constraints()
        .iter()
        .filter(|c| c.kind() == Some(ConstraintType::Three) && c.relation().is_some_and(&pick))
        .count();
    if targets == 0 {
        return Ok(w.clone());
    }
    let k = w.k() + targets;
    if k > w.cap() {
        return Err(ConstraintError::StepLimitExceeded { k, cap: w.cap() });
    }
    let mut parts: InstanceParts = w.to_parts();
    let mut constraints = Vec::with_capacity(parts.constraints.len() + targets);
    let mut counter = 0usize;
    for c in std::mem::take(&mut parts.constraints) {
        match c {
            Constraint::Entailment { ref relation, first, second }
                if c.kind() == Some(ConstraintType::Three) && pick(relation) =>
            {
                let name = loop {
                    let candidate = format!("{DUMMY_PREFIX}{counter}");
                    counter += 1;
                    if !parts.steps.contains(&candidate) {
                        break candidate;
                    }
                };
                let s = StepSet::singleton(parts.steps.len());
                parts.steps.push(name);
                for row in parts.auth.iter_mut() {
                    *row = *row | s;
                }
                constraints.push(Constraint::entailment(relation.clone(), first, s));
                constraints.push(Constraint::entailment(relation.clone(), s, second));
            }
            other => constraints.push(other),
        }
    }
    parts.constraints = constraints;
    Ok(w.rebuild(parts)?)
}

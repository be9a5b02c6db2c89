//! JSON encoding of instances and plans.

use super::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Parsed but unvalidated instance, keyed by names.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawInstance {
    pub steps: Vec<String>,
    #[serde(default)]
    pub order: Vec<(String, String)>,
    pub users: Vec<String>,
    #[serde(default)]
    pub auth: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub constraints: Vec<RawConstraint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hierarchy: Option<RawHierarchy>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum RawConstraint {
    Counting {
        tl: usize,
        tr: usize,
        scope: Vec<String>,
    },
    Entailment {
        relation: RawRelation,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        level: Option<usize>,
        scope1: Vec<String>,
        scope2: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pairs: Option<Vec<(String, String)>>,
    },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum RawRelation {
    Eq,
    Neq,
    Sim,
    Nsim,
    Pairs,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RawHierarchy {
    pub levels: Vec<Vec<Vec<String>>>,
}

fn parse_error(e: serde_json::Error) -> ModelError {
    ModelError::Parse { line: e.line(), column: e.column(), message: e.to_string() }
}

pub fn parse_instance(text: &str) -> Result<RawInstance, ModelError> {
    serde_json::from_str(text).map_err(parse_error)
}

fn interner(names: &[String]) -> HashMap<&str, usize> {
    names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
}

fn lookup(map: &HashMap<&str, usize>, name: &str) -> Result<usize, ModelError> {
    map.get(name).copied().ok_or_else(|| ModelError::UnknownIdentifier(name.to_string()))
}

fn scope(map: &HashMap<&str, usize>, names: &[String]) -> Result<StepSet, ModelError> {
    names.iter().map(|s| lookup(map, s)).collect::<Result<StepSet, _>>()
}

impl RawInstance {
    /// Interns names and validates; user input may not use the reserved prefix.
    pub fn validate(&self, cap: usize) -> Result<WorkflowInstance, ModelError> {
        if let Some(s) = self.steps.iter().find(|s| s.starts_with(DUMMY_PREFIX)) {
            return Err(ModelError::ReservedName(s.clone()));
        }
        self.validate_unchecked(cap)
    }

    fn validate_unchecked(&self, cap: usize) -> Result<WorkflowInstance, ModelError> {
        let k = self.steps.len();
        if k > cap.min(MAX_STEPS) {
            return Err(ModelError::StepLimitExceeded { k, cap: cap.min(MAX_STEPS) });
        }
        check_unique(&self.steps)?;
        check_unique(&self.users)?;
        let sidx = interner(&self.steps);
        let uidx = interner(&self.users);
        let order = self
            .order
            .iter()
            .map(|(a, b)| Ok((lookup(&sidx, a)?, lookup(&sidx, b)?)))
            .collect::<Result<Vec<_>, ModelError>>()?;
        let mut auth = vec![StepSet::EMPTY; self.users.len()];
        for (u, steps) in &self.auth {
            auth[lookup(&uidx, u)?] = scope(&sidx, steps)?;
        }
        let constraints = self
            .constraints
            .iter()
            .map(|c| match c {
                RawConstraint::Counting { tl, tr, scope: sc } => Ok(Constraint::counting(*tl, *tr, scope(&sidx, sc)?)),
                RawConstraint::Entailment { relation, level, scope1, scope2, pairs } => {
                    let need_level = matches!(relation, RawRelation::Sim | RawRelation::Nsim);
                    if need_level != level.is_some() {
                        return Err(ModelError::MalformedConstraint(if need_level {
                            "sim/nsim constraint needs a level".into()
                        } else {
                            "level given for a relation without levels".into()
                        }));
                    }
                    if (*relation == RawRelation::Pairs) != pairs.is_some() {
                        return Err(ModelError::MalformedConstraint("pairs must be given exactly for relation \"pairs\"".into()));
                    }
                    let rel = match relation {
                        RawRelation::Eq => Relation::Eq,
                        RawRelation::Neq => Relation::Neq,
                        RawRelation::Sim => Relation::Sim(level.unwrap()),
                        RawRelation::Nsim => Relation::Nsim(level.unwrap()),
                        RawRelation::Pairs => Relation::Pairs(
                            pairs
                                .as_ref()
                                .unwrap()
                                .iter()
                                .map(|(a, b)| Ok((UserId(lookup(&uidx, a)?), UserId(lookup(&uidx, b)?))))
                                .collect::<Result<_, ModelError>>()?,
                        ),
                    };
                    Ok(Constraint::entailment(rel, scope(&sidx, scope1)?, scope(&sidx, scope2)?))
                }
            })
            .collect::<Result<Vec<_>, ModelError>>()?;
        let hierarchy = match &self.hierarchy {
            None => None,
            Some(rh) => {
                let levels = rh
                    .levels
                    .iter()
                    .map(|lvl| {
                        lvl.iter()
                            .map(|block| block.iter().map(|u| lookup(&uidx, u)).collect::<Result<Vec<_>, _>>())
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Some(Hierarchy::from_partitions(self.users.len(), &levels)?)
            }
        };
        WorkflowInstance::new(InstanceParts { steps: self.steps.clone(), users: self.users.clone(), order, auth, constraints, hierarchy }, cap)
    }
}

impl WorkflowInstance {
    pub fn from_json(text: &str, cap: usize) -> Result<Self, ModelError> {
        parse_instance(text)?.validate(cap)
    }

    pub fn to_raw(&self) -> RawInstance {
        let names = |set: StepSet| set.iter().map(|s| self.steps[s].clone()).collect::<Vec<_>>();
        RawInstance {
            steps: self.steps.clone(),
            order: self.order.iter().map(|(a, b)| (self.steps[a.0].clone(), self.steps[b.0].clone())).collect(),
            users: self.users.clone(),
            auth: self.users.iter().cloned().zip(self.auth.iter().map(|&a| names(a))).collect(),
            constraints: self
                .constraints
                .iter()
                .map(|c| match c {
                    Constraint::Counting { lower, upper, scope } => {
                        RawConstraint::Counting { tl: *lower, tr: *upper, scope: names(*scope) }
                    }
                    Constraint::Entailment { relation, first, second } => {
                        let (relation, level, pairs) = match relation {
                            Relation::Eq => (RawRelation::Eq, None, None),
                            Relation::Neq => (RawRelation::Neq, None, None),
                            Relation::Sim(i) => (RawRelation::Sim, Some(*i), None),
                            Relation::Nsim(i) => (RawRelation::Nsim, Some(*i), None),
                            Relation::Pairs(ps) => (
                                RawRelation::Pairs,
                                None,
                                Some(ps.iter().map(|(a, b)| (self.users[a.0].clone(), self.users[b.0].clone())).collect()),
                            ),
                        };
                        RawConstraint::Entailment { relation, level, scope1: names(*first), scope2: names(*second), pairs }
                    }
                })
                .collect(),
            hierarchy: self.hierarchy.as_ref().map(|h| RawHierarchy {
                levels: (1..=h.level_count())
                    .map(|i| {
                        h.partition(i).into_iter().map(|b| b.into_iter().map(|u| self.users[u].clone()).collect()).collect()
                    })
                    .collect(),
            }),
        }
    }
}

/// Canonical pretty-printed JSON.
pub fn serialize_instance(w: &WorkflowInstance) -> String {
    serde_json::to_string_pretty(&w.to_raw()).expect("instance serialization cannot fail")
}

/// `{"status":"sat","plan":{...}}` with steps in name order.
pub fn plan_to_json(w: &WorkflowInstance, p: &Plan) -> String {
    let plan: BTreeMap<&str, &str> =
        p.assignment.iter().enumerate().map(|(s, u)| (w.steps()[s].as_str(), w.users()[u.0].as_str())).collect();
    serde_json::to_string_pretty(&serde_json::json!({ "status": "sat", "plan": plan })).unwrap()
}

pub fn unsat_json() -> String {
    serde_json::to_string_pretty(&serde_json::json!({ "status": "unsat" })).unwrap()
}

/// Reads `{"plan":{step:user}}`, with or without a status field, or a bare map.
pub fn parse_plan(w: &WorkflowInstance, text: &str) -> Result<Plan, ModelError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(parse_error)?;
    let map = match value.get("plan") {
        Some(p) => p.clone(),
        None => value,
    };
    let map: BTreeMap<String, String> =
        serde_json::from_value(map).map_err(|e| ModelError::MalformedPlan(e.to_string()))?;
    let mut assignment = vec![None; w.k()];
    for (s, u) in &map {
        let s = w.step_index(s).ok_or_else(|| ModelError::UnknownIdentifier(s.clone()))?;
        let u = w.user_index(u).ok_or_else(|| ModelError::UnknownIdentifier(u.clone()))?;
        assignment[s] = Some(UserId(u));
    }
    let assignment = assignment
        .into_iter()
        .enumerate()
        .map(|(s, u)| u.ok_or_else(|| ModelError::MalformedPlan(format!("step `{}` unassigned", w.steps()[s]))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Plan::new(assignment))
}

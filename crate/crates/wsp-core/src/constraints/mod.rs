//! Eligibility of step sets, regularity classification and rewrites.

mod rewrite;

pub use rewrite::{drop_trivial, rewrite_eq_type3, rewrite_sim_type3};

use crate::model::{Constraint, ConstraintType, ModelError, Relation};
use crate::stepset::{StepSet, SubsetTable};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstraintError {
    #[error("constraint is not supported here: {0}")]
    Unsupported(String),
    #[error("{k} steps exceed the cap of {cap}")]
    StepLimitExceeded { k: usize, cap: usize },
    #[error("threshold must be at least 2, got {0}")]
    DegenerateThreshold(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Tests whether no plan can use `f` as one user's workload without violating `c`.
pub fn is_ineligible(f: StepSet, c: &Constraint) -> Result<bool, ConstraintError> {
    let mut r = Rules::default();
    r.add(c)?;
    Ok(r.fires(f))
}

/// Ineligibility rules in three shapes; a set is ineligible if any rule fires.
#[derive(Clone, Debug, Default)]
pub struct Rules {
    /// Fires on `F ⊇ mask`.
    supersets: Vec<StepSet>,
    /// `(anchor, partner)` fires on `F ⊇ anchor` and `F ∩ partner = ∅`.
    anchors: Vec<(StepSet, StepSet)>,
    /// `(tl, tr, scope)` fires on `0 < |F ∩ scope| < tl` or `|F ∩ scope| > tr`.
    counting: Vec<(usize, usize, StepSet)>,
}

impl Rules {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a counting, `=` or `≠` constraint.
    pub fn add(&mut self, c: &Constraint) -> Result<(), ConstraintError> {
        match c {
            Constraint::Counting { lower, upper, scope } => self.counting.push((*lower, *upper, *scope)),
            Constraint::Entailment { relation: Relation::Neq, first, second } => self.add_apart(*first, *second),
            Constraint::Entailment { relation: Relation::Eq, first, second } => self.add_together(*first, *second),
            Constraint::Entailment { relation, .. } => {
                return Err(ConstraintError::Unsupported(format!("{relation:?} has no user-level eligibility test")))
            }
        }
        Ok(())
    }

    /// Rule for a pair that must not land entirely inside the set.
    pub fn add_apart(&mut self, first: StepSet, second: StepSet) {
        self.supersets.push(first | second);
    }

    /// Rules for a pair that must not be split with one side entirely inside the set.
    pub fn add_together(&mut self, first: StepSet, second: StepSet) {
        self.anchors.push((first, second));
        self.anchors.push((second, first));
    }

    pub fn add_counting(&mut self, lower: usize, upper: usize, scope: StepSet) {
        self.counting.push((lower, upper, scope));
    }

    pub fn is_empty(&self) -> bool {
        self.supersets.is_empty() && self.anchors.is_empty() && self.counting.is_empty()
    }

    #[inline]
    pub fn fires(&self, f: StepSet) -> bool {
        self.supersets.iter().any(|&m| m.is_subset(f))
            || self.anchors.iter().any(|&(a, p)| a.is_subset(f) && !p.intersects(f))
            || self.counting.iter().any(|&(lo, hi, s)| {
                let x = (f & s).len();
                (x > 0 && x < lo) || x > hi
            })
    }

    /// `bad[F]` for every `F ⊆ 0..k`.
    pub fn ineligible_table(&self, k: usize) -> Vec<bool> {
        let size = 1usize << k;
        let mut bad = vec![false; size];
        if !self.supersets.is_empty() {
            for &m in &self.supersets {
                bad[m.bits() as usize] = true;
            }
            for b in 0..k {
                let bit = 1 << b;
                for f in 0..size {
                    if f & bit != 0 && bad[f ^ bit] {
                        bad[f] = true;
                    }
                }
            }
        }
        self.mark_anchors(k, &mut bad);
        for &(lo, hi, s) in &self.counting {
            let s = s.bits();
            for (f, slot) in bad.iter_mut().enumerate() {
                let x = (f as u32 & s).count_ones() as usize;
                if (x > 0 && x < lo) || x > hi {
                    *slot = true;
                }
            }
        }
        bad
    }

    fn mark_anchors(&self, k: usize, bad: &mut [bool]) {
        if self.anchors.is_empty() {
            return;
        }
        let mut groups: Vec<(StepSet, Vec<StepSet>)> = Vec::new();
        for &(a, p) in &self.anchors {
            match groups.iter_mut().find(|(g, _)| *g == a) {
                Some((_, ps)) => ps.push(p),
                None => groups.push((a, vec![p])),
            }
        }
        let full = StepSet::full(k).bits() as usize;
        let size = 1usize << k;
        if groups.len() * k >= self.anchors.len() {
            for (f, slot) in bad.iter_mut().enumerate() {
                let f = StepSet::from_bits(f as u32);
                if !*slot && self.anchors.iter().any(|&(a, p)| a.is_subset(f) && !p.intersects(f)) {
                    *slot = true;
                }
            }
            return;
        }
        // Per anchor: the sets missing some partner are the subsets of some complement.
        let mut down = vec![false; size];
        for (a, ps) in groups {
            down.iter_mut().for_each(|d| *d = false);
            for p in ps {
                down[full & !(p.bits() as usize)] = true;
            }
            for b in 0..k {
                let bit = 1 << b;
                for f in 0..size {
                    if f & bit == 0 && down[f | bit] {
                        down[f] = true;
                    }
                }
            }
            let a = a.bits() as usize;
            for f in 0..size {
                if f & a == a && down[f] {
                    bad[f] = true;
                }
            }
        }
    }
}

/// Constraints over a fixed number of steps, evaluable without user identities.
#[derive(Clone, Debug)]
pub struct EligibilityContext {
    pub constraints: Vec<Constraint>,
    pub k: usize,
}

/// Bit `F` set iff `F` is eligible for every constraint of the context.
pub fn eligible_family(ctx: &EligibilityContext) -> Result<SubsetTable, ConstraintError> {
    let mut rules = Rules::new();
    for c in &ctx.constraints {
        rules.add(c)?;
    }
    Ok(table_from_rules(&rules, ctx.k))
}

pub fn table_from_rules(rules: &Rules, k: usize) -> SubsetTable {
    let bad = rules.ineligible_table(k);
    let mut t = SubsetTable::new(k);
    for (f, &b) in bad.iter().enumerate() {
        if !b {
            t.set(StepSet::from_bits(f as u32), true);
        }
    }
    t
}

/// Which solver family can handle a constraint list.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Route {
    Flat,
    NeedsRewrite,
    NeedsHierarchy,
    OracleOnly,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegularityReport {
    pub regular: Vec<bool>,
    /// `=`/`∼` constraints whose scopes overlap; they always hold.
    pub trivially_satisfied: Vec<bool>,
    pub route: Route,
}

/// True for `=` and `∼ᵢ` constraints whose scopes share a step.
pub fn is_trivially_satisfied(c: &Constraint) -> bool {
    matches!(c, Constraint::Entailment { relation: Relation::Eq | Relation::Sim(_), first, second } if first.intersects(*second))
}

pub fn classify(cs: &[Constraint]) -> RegularityReport {
    let mut regular = Vec::with_capacity(cs.len());
    let mut trivial = Vec::with_capacity(cs.len());
    let mut route = Route::Flat;
    for c in cs {
        let t = is_trivially_satisfied(c);
        let (reg, r) = match c {
            _ if t => (true, Route::Flat),
            Constraint::Counting { .. } => (true, Route::Flat),
            Constraint::Entailment { relation, .. } => match relation {
                Relation::Neq => (true, Route::Flat),
                Relation::Eq if c.kind() == Some(ConstraintType::Three) => (false, Route::NeedsRewrite),
                Relation::Eq => (true, Route::Flat),
                Relation::Sim(_) | Relation::Nsim(_) => (false, Route::NeedsHierarchy),
                Relation::Pairs(_) => (false, Route::OracleOnly),
            },
        };
        regular.push(reg);
        trivial.push(t);
        route = route.max(r);
    }
    RegularityReport { regular, trivially_satisfied: trivial, route }
}

/// At most `floor((|scope|-1)/(t-1))` steps per user, which forces at least `t` users.
pub fn over_enforce_min_users(t: usize, scope: StepSet) -> Result<Constraint, ConstraintError> {
    if t < 2 {
        return Err(ConstraintError::DegenerateThreshold(t));
    }
    if scope.len() < t {
        return Err(ConstraintError::InvalidArgument(format!("scope of {} steps cannot need {t} users", scope.len())));
    }
    Ok(Constraint::counting(1, (scope.len() - 1) / (t - 1), scope))
}

/// Separation of duty: no single user performs all of `scope`.
pub fn sod(scope: StepSet) -> Result<Constraint, ConstraintError> {
    if scope.len() < 2 {
        return Err(ConstraintError::InvalidArgument("separation of duty needs two steps".into()));
    }
    Ok(Constraint::counting(1, scope.len() - 1, scope))
}

/// Binding of duty: one user performs all of `scope`.
pub fn bod(scope: StepSet) -> Result<Constraint, ConstraintError> {
    if scope.is_empty() {
        return Err(ConstraintError::InvalidArgument("empty scope".into()));
    }
    Ok(Constraint::counting(scope.len(), scope.len(), scope))
}

/// Steps of `scope` split as evenly as possible between `v` users.
pub fn division(scope: StepSet, v: usize) -> Result<Constraint, ConstraintError> {
    if v == 0 || v > scope.len() {
        return Err(ConstraintError::InvalidArgument(format!("cannot divide {} steps among {v} users", scope.len())));
    }
    let s = scope.len();
    Ok(Constraint::counting(s / v, s.div_ceil(v), scope))
}

/// No user performs more than `t` steps of `scope`.
pub fn threshold(t: usize, scope: StepSet) -> Result<Constraint, ConstraintError> {
    if t == 0 || scope.is_empty() {
        return Err(ConstraintError::InvalidArgument("threshold needs t >= 1 and a nonempty scope".into()));
    }
    Ok(Constraint::counting(1, t, scope))
}

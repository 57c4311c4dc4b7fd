//! Model checking: bottom-up labeling over ULTS plan sets, and LTS checking
//! through the behavior closure.

use std::collections::HashMap;

use thiserror::Error;

use crate::model::{BehaviorClosure, Lts, PlanSet, Relation, StateSet, Ults};
use crate::syntax::{subformula_closure, Agent, Formula};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("formula mentions agent `{0}` not present in the model")]
    UnknownAgent(String),
}

/// A formula together with the set of states where it holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extension {
    pub formula: Formula,
    pub states: StateSet,
}

/// Per-planset data reused across Kh checks within one labeling run.
struct PlanSetData {
    se: StateSet,
    rel: Relation,
}

/// A labeling engine bound to one model: plan-set data is computed once and
/// Kh verdicts are memoized per (agent, condition set, goal set), so checking
/// many formulas against the same model stays cheap.
pub struct ModelChecker<'m> {
    m: &'m Ults,
    data: HashMap<Agent, Vec<PlanSetData>>,
    memo: HashMap<(Agent, StateSet, StateSet), bool>,
}

impl<'m> ModelChecker<'m> {
    pub fn new(m: &'m Ults) -> Self {
        let mut data = HashMap::new();
        for agent in m.agents() {
            let sets = m
                .plansets_of(agent)
                .iter()
                .map(|s| PlanSetData {
                    se: m.base().stexec_set(s),
                    rel: m.base().rel_of_set(s),
                })
                .collect();
            data.insert(agent.clone(), sets);
        }
        ModelChecker {
            m,
            data,
            memo: HashMap::new(),
        }
    }

    fn kh_holds(&mut self, agent: &Agent, cond: &StateSet, goal: &StateSet) -> bool {
        let key = (agent.clone(), cond.clone(), goal.clone());
        if let Some(v) = self.memo.get(&key) {
            return *v;
        }
        let v = self.data[agent]
            .iter()
            .any(|d| cond.is_subset_of(&d.se) && d.rel.image(cond).is_subset_of(goal));
        self.memo.insert(key, v);
        v
    }

    /// Evaluate every member of the subformula closure in order; returns the
    /// extension of `f`.
    pub fn extension(&mut self, f: &Formula) -> Result<Extension, CheckError> {
        let n = self.m.num_states();
        let closure = subformula_closure(f);
        let mut ext: HashMap<&Formula, StateSet> = HashMap::new();
        for g in &closure {
            let states = match g {
                Formula::Atom(p) => self.m.base().atom_extension(p),
                Formula::Neg(h) => ext[h.as_ref()].complement(),
                Formula::Or(a, b) => ext[a.as_ref()].union(&ext[b.as_ref()]),
                Formula::Kh(i, a, b) => {
                    if !self.m.has_agent(i) {
                        return Err(CheckError::UnknownAgent(i.id().to_owned()));
                    }
                    let cond = ext[a.as_ref()].clone();
                    let goal = ext[b.as_ref()].clone();
                    if self.kh_holds(i, &cond, &goal) {
                        StateSet::full(n)
                    } else {
                        StateSet::empty(n)
                    }
                }
            };
            ext.insert(g, states);
        }
        Ok(Extension {
            formula: f.clone(),
            states: ext[f].clone(),
        })
    }

    pub fn check(&mut self, w: &str, f: &Formula) -> Result<bool, CheckError> {
        let id = self
            .m
            .base()
            .state_id(w)
            .ok_or_else(|| CheckError::UnknownState(w.to_owned()))?;
        Ok(self.extension(f)?.states.contains(id))
    }
}

/// The truth set of `f` in `m`.
pub fn extension(m: &Ults, f: &Formula) -> Result<Extension, CheckError> {
    ModelChecker::new(m).extension(f)
}

/// Truth of `f` at the state named `w`.
pub fn check_ults(m: &Ults, w: &str, f: &Formula) -> Result<bool, CheckError> {
    let id = m
        .base()
        .state_id(w)
        .ok_or_else(|| CheckError::UnknownState(w.to_owned()))?;
    Ok(extension(m, f)?.states.contains(id))
}

/// True iff `f` holds at every state. Coincides with checking the desugared
/// `\/_i Kh[i](~f, false)`.
pub fn holds_universally(m: &Ults, f: &Formula) -> Result<bool, CheckError> {
    Ok(extension(m, f)?.states == StateSet::full(m.num_states()))
}

/// All plan sets of `agent` witnessing `Kh[agent](cond, goal)`.
pub fn witnesses(
    m: &Ults,
    agent: &Agent,
    cond: &Formula,
    goal: &Formula,
) -> Result<Vec<PlanSet>, CheckError> {
    if !m.has_agent(agent) {
        return Err(CheckError::UnknownAgent(agent.id().to_owned()));
    }
    let cond_ext = extension(m, cond)?.states;
    let goal_ext = extension(m, goal)?.states;
    Ok(m.plansets_of(agent)
        .iter()
        .filter(|s| {
            cond_ext.is_subset_of(&m.base().stexec_set(s))
                && m.base().rel_of_set(s).image(&cond_ext).is_subset_of(&goal_ext)
        })
        .cloned()
        .collect())
}

/// The truth set of `f` over a plain LTS, where Kh quantifies over all plans.
/// Agent labels in `f` are ignored. Sound and complete because Kh truth
/// depends on a plan only through its behavior, and the closure contains
/// every plan's behavior.
pub fn extension_lts(m: &Lts, f: &Formula) -> Extension {
    let closure = m.behavior_closure();
    extension_lts_with_closure(m, &closure, f)
}

/// As [`extension_lts`], reusing a precomputed behavior closure.
pub fn extension_lts_with_closure(m: &Lts, closure: &BehaviorClosure, f: &Formula) -> Extension {
    let n = m.num_states();
    let cl = subformula_closure(f);
    let mut ext: HashMap<&Formula, StateSet> = HashMap::new();
    for g in &cl {
        let states = match g {
            Formula::Atom(p) => m.atom_extension(p),
            Formula::Neg(h) => ext[h.as_ref()].complement(),
            Formula::Or(a, b) => ext[a.as_ref()].union(&ext[b.as_ref()]),
            Formula::Kh(_, a, b) => {
                let cond = &ext[a.as_ref()];
                let goal = &ext[b.as_ref()];
                let holds = closure
                    .behaviors()
                    .any(|bh| cond.is_subset_of(&bh.se) && bh.rel.image(cond).is_subset_of(goal));
                if holds {
                    StateSet::full(n)
                } else {
                    StateSet::empty(n)
                }
            }
        };
        ext.insert(g, states);
    }
    Extension {
        formula: f.clone(),
        states: ext[f].clone(),
    }
}

/// Truth of `f` at state `w` of a plain LTS.
pub fn check_lts(m: &Lts, w: &str, f: &Formula) -> Result<bool, CheckError> {
    let id = m
        .state_id(w)
        .ok_or_else(|| CheckError::UnknownState(w.to_owned()))?;
    Ok(extension_lts(m, f).states.contains(id))
}

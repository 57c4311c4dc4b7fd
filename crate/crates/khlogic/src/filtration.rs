//! Finite filtrations of a ULTS through a subformula-closed formula set Σ.
//!
//! States collapse to classes agreeing on every member of Σ; plan sets
//! collapse to classes sharing the same witness profile over the Kh members
//! of Σ; each witness class with an agent-matching witnessed formula becomes
//! one fresh action.
//!
//! The filtrated relation projects only those pairs whose source satisfies a
//! condition the generating plan set witnesses. Projecting every pair of a
//! witness-class member is not truth-preserving: a source outside the plan
//! set's SE set can share a class with an SE source, and then the projected
//! action acquires SE states the original plan set never had, turning false
//! Kh formulas true in the quotient. Restricting sources to witnessed
//! conditions keeps the quotient sound in both directions: witnessed
//! conditions lie inside the SE set, and any escape from a false formula's
//! condition set survives projection and falsifies it in the quotient too.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::checker::{extension, CheckError};
use crate::model::{Lts, ModelError, Plan, PlanSet, StateSet, Ults};
use crate::syntax::{subformula_closure, Agent, Formula, BOT_ATOM};

#[derive(Debug, Error)]
pub enum FiltrationError {
    #[error("formula set is not subformula-closed: missing {0}")]
    SigmaNotClosed(Formula),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// The Σ-partitions: states by Σ-truth, plan sets by witness profile.
#[derive(Debug, Clone)]
pub struct SigmaClasses {
    /// Distinct Kh argument pairs occurring in Σ, in first-occurrence order.
    pub kh_conditions: Vec<(Formula, Formula)>,
    /// Per state, the index of its Σ-class.
    pub state_classes: Vec<usize>,
    pub num_state_classes: usize,
    /// Plan-set groups sharing a witness profile: for each group, the profile
    /// (bitmask over `kh_conditions`) and the member plan sets tagged with
    /// their owners.
    pub plan_classes: Vec<(u64, Vec<(Agent, PlanSet)>)>,
}

fn closed_under_subformulas(sigma: &[Formula]) -> Result<(), FiltrationError> {
    for f in sigma {
        for sub in subformula_closure(f) {
            if !sigma.contains(&sub) {
                return Err(FiltrationError::SigmaNotClosed(sub));
            }
        }
    }
    Ok(())
}

/// Whether `plans` witnesses `Kh(cond, goal)` for the given extensions.
fn is_witness(m: &Ults, plans: &PlanSet, cond: &StateSet, goal: &StateSet) -> bool {
    cond.is_subset_of(&m.base().stexec_set(plans))
        && m.base().rel_of_set(plans).image(cond).is_subset_of(goal)
}

/// Compute the Σ-partitions of states and plan sets.
pub fn sigma_classes(m: &Ults, sigma: &[Formula]) -> Result<SigmaClasses, FiltrationError> {
    closed_under_subformulas(sigma)?;
    let n = m.num_states();

    let exts: Vec<StateSet> = sigma
        .iter()
        .map(|f| extension(m, f).map(|e| e.states))
        .collect::<Result<_, _>>()?;

    // states sharing all Σ-truth values share a class
    let mut keys: Vec<Vec<bool>> = Vec::new();
    let mut state_classes = vec![0usize; n];
    for w in 0..n {
        let key: Vec<bool> = exts.iter().map(|e| e.contains(w)).collect();
        let idx = match keys.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                keys.push(key);
                keys.len() - 1
            }
        };
        state_classes[w] = idx;
    }

    let mut kh_conditions: Vec<(Formula, Formula)> = Vec::new();
    let mut kh_ext: Vec<(StateSet, StateSet)> = Vec::new();
    for f in sigma {
        if let Formula::Kh(_, a, b) = f {
            let pair = ((**a).clone(), (**b).clone());
            if !kh_conditions.contains(&pair) {
                let ca = extension(m, a)?.states;
                let cb = extension(m, b)?.states;
                kh_conditions.push(pair);
                kh_ext.push((ca, cb));
            }
        }
    }
    assert!(kh_conditions.len() <= 64, "witness profiles are stored in a u64");

    let mut plan_classes: Vec<(u64, Vec<(Agent, PlanSet)>)> = Vec::new();
    for (agent, plans) in m.all_plansets() {
        let mut profile = 0u64;
        for (k, (cond, goal)) in kh_ext.iter().enumerate() {
            if is_witness(m, plans, cond, goal) {
                profile |= 1 << k;
            }
        }
        match plan_classes.iter_mut().find(|(p, _)| *p == profile) {
            Some((_, members)) => members.push((agent, plans.clone())),
            None => plan_classes.push((profile, vec![(agent, plans.clone())])),
        }
    }

    Ok(SigmaClasses {
        kh_conditions,
        state_classes,
        num_state_classes: keys.len(),
        plan_classes,
    })
}

/// A filtration: the quotient model plus the state-class map.
#[derive(Debug, Clone)]
pub struct Filtration {
    pub model: Ults,
    pub class_map: BTreeMap<String, String>,
}

const INERT_ACTION: &str = "d";

/// Build the canonical filtration of `m` through `sigma`.
pub fn filtrate(m: &Ults, sigma: &[Formula]) -> Result<Filtration, FiltrationError> {
    let classes = sigma_classes(m, sigma)?;
    let n = m.num_states();
    let ncl = classes.num_state_classes;

    let class_name = |k: usize| format!("c{k}");

    // class valuations: the Σ-atoms true at any (hence every) member
    let mut atoms: Vec<String> = sigma
        .iter()
        .filter_map(|f| match f {
            Formula::Atom(p) if p != BOT_ATOM => Some(p.clone()),
            _ => None,
        })
        .collect();
    atoms.sort();
    atoms.dedup();

    let mut class_vals: Vec<Vec<String>> = vec![Vec::new(); ncl];
    let mut seen_class = vec![false; ncl];
    for w in 0..n {
        let k = classes.state_classes[w];
        if !seen_class[k] {
            seen_class[k] = true;
            class_vals[k] = atoms
                .iter()
                .filter(|a| m.base().valuation(w).contains(*a))
                .cloned()
                .collect();
        }
    }

    // extensions of witnessed conditions, for source restriction
    let mut cond_ext: Vec<StateSet> = Vec::new();
    let mut goal_ext: Vec<StateSet> = Vec::new();
    for (cond, goal) in &classes.kh_conditions {
        cond_ext.push(extension(m, cond)?.states);
        goal_ext.push(extension(m, goal)?.states);
    }

    // per agent, which Kh-condition indices are indexed by that agent in Σ
    let mut agent_pairs: BTreeMap<Agent, u64> = BTreeMap::new();
    for f in sigma {
        if let Formula::Kh(i, a, b) = f {
            let idx = classes
                .kh_conditions
                .iter()
                .position(|(x, y)| x == &**a && y == &**b)
                .unwrap();
            *agent_pairs.entry(i.clone()).or_insert(0) |= 1 << idx;
        }
    }

    // one action per witness class that witnesses something; remember which
    // agents get it
    let mut actions: Vec<String> = Vec::new();
    let mut rel: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    let mut per_agent_actions: BTreeMap<Agent, Vec<String>> = BTreeMap::new();
    for agent in m.agents() {
        per_agent_actions.insert(agent.clone(), Vec::new());
    }

    for (ci, (profile, members)) in classes.plan_classes.iter().enumerate() {
        if *profile == 0 {
            continue;
        }
        // owners whose agent indexes a witnessed formula
        let mut owners: Vec<&Agent> = Vec::new();
        for (agent, _) in members {
            if agent_pairs.get(agent).copied().unwrap_or(0) & profile != 0
                && !owners.contains(&agent)
            {
                owners.push(agent);
            }
        }
        if owners.is_empty() {
            continue;
        }
        let name = format!("k{ci}");
        // project pairs whose source satisfies a witnessed condition
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (_, plans) in members {
            let r = m.base().rel_of_set(plans);
            for (u, v) in r.pairs() {
                let visible = (0..classes.kh_conditions.len())
                    .any(|k| profile & (1 << k) != 0 && cond_ext[k].contains(u));
                if visible {
                    let cu = classes.state_classes[u];
                    let cv = classes.state_classes[v];
                    if !pairs.contains(&(cu, cv)) {
                        pairs.push((cu, cv));
                    }
                }
            }
        }
        actions.push(name.clone());
        rel.insert(
            name.clone(),
            pairs
                .into_iter()
                .map(|(u, v)| (class_name(u), class_name(v)))
                .collect(),
        );
        for agent in owners {
            per_agent_actions.get_mut(agent).unwrap().push(name.clone());
        }
    }

    // agents with no witness action get the inert plan set
    let needs_inert = per_agent_actions.values().any(|v| v.is_empty());
    if needs_inert {
        actions.push(INERT_ACTION.to_owned());
        rel.insert(INERT_ACTION.to_owned(), Vec::new());
    }

    let states: Vec<(String, Vec<String>)> = (0..ncl)
        .map(|k| (class_name(k), class_vals[k].clone()))
        .collect();
    let base = Lts::new(atoms, states, actions, rel)?;

    let mut plansets: BTreeMap<Agent, Vec<PlanSet>> = BTreeMap::new();
    for agent in m.agents() {
        let acts = &per_agent_actions[agent];
        let sets: Vec<PlanSet> = if acts.is_empty() {
            vec![PlanSet::singleton(Plan(vec![INERT_ACTION.to_owned()]))]
        } else {
            acts.iter()
                .map(|a| PlanSet::singleton(Plan(vec![a.clone()])))
                .collect()
        };
        plansets.insert(agent.clone(), sets);
    }
    let model = Ults::new(base, m.agents().to_vec(), plansets)?;

    let class_map = (0..n)
        .map(|w| {
            (
                m.base().state_name(w).to_owned(),
                class_name(classes.state_classes[w]),
            )
        })
        .collect();

    Ok(Filtration { model, class_map })
}

/// Outcome of checking a filtration against its source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FiltrationCheck {
    Ok,
    /// Σ-truth differs between `state` and its class on `formula`.
    TruthMismatch { formula: Formula, state: String },
    /// The quotient exceeds the 2^|Σ| state bound.
    TooManyClasses { classes: usize, bound: usize },
}

impl FiltrationCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, FiltrationCheck::Ok)
    }
}

/// Check that `filt` preserves the truth of every member of `sigma` at every
/// state, and respects the class-count bound.
pub fn verify_filtration(
    m: &Ults,
    sigma: &[Formula],
    filt: &Filtration,
) -> Result<FiltrationCheck, FiltrationError> {
    closed_under_subformulas(sigma)?;
    let bound = 1usize
        .checked_shl(sigma.len().min(62) as u32)
        .unwrap_or(usize::MAX);
    if filt.model.num_states() > bound {
        return Ok(FiltrationCheck::TooManyClasses {
            classes: filt.model.num_states(),
            bound,
        });
    }
    for f in sigma {
        let src = extension(m, f)?.states;
        let dst = extension(&filt.model, f)?.states;
        for w in 0..m.num_states() {
            let name = m.base().state_name(w);
            let class = &filt.class_map[name];
            let class_id = filt.model.base().state_id(class).expect("class map is total");
            if src.contains(w) != dst.contains(class_id) {
                return Ok(FiltrationCheck::TruthMismatch {
                    formula: f.clone(),
                    state: name.to_owned(),
                });
            }
        }
    }
    Ok(FiltrationCheck::Ok)
}

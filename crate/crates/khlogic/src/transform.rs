//! SE-composition of plan sets, membership tests for the model classes that
//! recapture plain LTS semantics, and the semantics-preserving translations
//! between LTSs and ULTSs.
//!
//! The translations quotient plans by behavior: Kh truth depends on a plan
//! only through its `(relation, SE set)` fingerprint, and a finite model has
//! finitely many fingerprints, so one representative plan per behavior stands
//! in for the full plan universe.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::bisim::same_model_equivalence_classes;
use crate::model::{Lts, ModelError, Plan, PlanSet, Ults};
use crate::syntax::Agent;

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("operation requires a single-agent model, got {0} agents")]
    MultiAgent(usize),
    #[error("model is not active and SE-compositional: {0}")]
    NotInClass(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `π1 ⊚ π2`: the concatenation set when `SE(π1)` is nonempty and every
/// `π1`-successor of an `SE(π1)` state is in `SE(π2)`; `None` otherwise.
pub fn se_compose(base: &Lts, p1: &PlanSet, p2: &PlanSet) -> Option<PlanSet> {
    let se1 = base.stexec_set(p1);
    if se1.is_empty() {
        return None;
    }
    let se2 = base.stexec_set(p2);
    if !base.rel_of_set(p1).image(&se1).is_subset_of(&se2) {
        return None;
    }
    Some(p1.concat(p2))
}

/// `π1 ⊚ ... ⊚ πk`: nonempty iff `SE(π1)` is nonempty and each adjacent pair
/// satisfies the composition guard; a chain of one is returned as is.
pub fn se_compose_chain(base: &Lts, chain: &[PlanSet]) -> Option<PlanSet> {
    assert!(!chain.is_empty(), "chain must have at least one plan set");
    if chain.len() == 1 {
        return Some(chain[0].clone());
    }
    if base.stexec_set(&chain[0]).is_empty() {
        return None;
    }
    for pair in chain.windows(2) {
        let se_i = base.stexec_set(&pair[0]);
        let se_next = base.stexec_set(&pair[1]);
        if !base.rel_of_set(&pair[0]).image(&se_i).is_subset_of(&se_next) {
            return None;
        }
    }
    let mut out = chain[0].clone();
    for p in &chain[1..] {
        out = out.concat(p);
    }
    Some(out)
}

fn single_agent(m: &Ults) -> Result<&Agent, TransformError> {
    match m.agents() {
        [a] => Ok(a),
        more => Err(TransformError::MultiAgent(more.len())),
    }
}

/// Cached `(R_π, SE(π))` per plan set of the single agent.
fn set_data(m: &Ults, agent: &Agent) -> Vec<(crate::model::Relation, crate::model::StateSet)> {
    m.plansets_of(agent)
        .iter()
        .map(|s| (m.base().rel_of_set(s), m.base().stexec_set(s)))
        .collect()
}

/// Whether some plan set is strongly executable everywhere and only relates
/// states that satisfy the same formulas; returns the witness if so.
pub fn is_active(m: &Ults) -> Result<(bool, Option<PlanSet>), TransformError> {
    let agent = single_agent(m)?;
    let classes = same_model_equivalence_classes(m);
    let n = m.num_states();
    for (k, (rel, se)) in set_data(m, agent).iter().enumerate() {
        if se.len() != n {
            continue;
        }
        let ok = rel
            .pairs()
            .into_iter()
            .all(|(u, v)| classes[u] == classes[v]);
        if ok {
            return Ok((true, Some(m.plansets_of(agent)[k].clone())));
        }
    }
    Ok((false, None))
}

/// A composable pair with no covering plan set, reported with the failing
/// condition.
#[derive(Debug, Clone)]
pub struct ComposeCounterexample {
    pub left: PlanSet,
    pub right: PlanSet,
    pub reason: String,
}

/// Result of the SE-compositionality test, with per-pair covering witnesses.
#[derive(Debug, Clone)]
pub struct SeCompositionality {
    pub holds: bool,
    pub counterexample: Option<ComposeCounterexample>,
    /// `(π1, π2, covering π)` for every composable pair, when the test holds.
    pub witnesses: Vec<(PlanSet, PlanSet, PlanSet)>,
}

/// Whether every composable pair of plan sets is covered by some member of
/// the collection: the member contains the composed relation and SE set, and
/// each of its pairs has an equivalent-endpoint pair in the composition.
///
/// Works on cached set-level data: the concatenation set's relation is the
/// relational composition of the members' relations (composition distributes
/// over the unions), and under the composability guard its SE set equals the
/// first member's.
pub fn is_se_compositional(m: &Ults) -> Result<SeCompositionality, TransformError> {
    let agent = single_agent(m)?;
    let classes = same_model_equivalence_classes(m);
    let nclasses = classes.iter().copied().max().unwrap_or(0) + 1;
    let sets = m.plansets_of(agent);
    let data = set_data(m, agent);
    let mut witnesses = Vec::new();
    for (i1, (rel1, se1)) in data.iter().enumerate() {
        if se1.is_empty() {
            continue;
        }
        let reach = rel1.image(se1);
        for (i2, (rel2, se2)) in data.iter().enumerate() {
            if !reach.is_subset_of(se2) {
                continue; // pair does not compose
            }
            let rel_c = rel1.compose(rel2);
            let se_c = se1; // composability guard keeps SE at the first member
            // class-level pairs present in the composition
            let mut class_pairs = vec![false; nclasses * nclasses];
            for (u, v) in rel_c.pairs() {
                class_pairs[classes[u] * nclasses + classes[v]] = true;
            }
            let mut cover = None;
            'candidates: for (k, (rel, se)) in data.iter().enumerate() {
                if !rel_c.is_subset_of(rel) || !se_c.is_subset_of(se) {
                    continue;
                }
                for (u, v) in rel.pairs() {
                    if !class_pairs[classes[u] * nclasses + classes[v]] {
                        continue 'candidates;
                    }
                }
                cover = Some(k);
                break;
            }
            match cover {
                Some(k) => witnesses.push((sets[i1].clone(), sets[i2].clone(), sets[k].clone())),
                None => {
                    let composed = sets[i1].concat(&sets[i2]);
                    return Ok(SeCompositionality {
                        holds: false,
                        counterexample: Some(ComposeCounterexample {
                            left: sets[i1].clone(),
                            right: sets[i2].clone(),
                            reason: format!(
                                "no member of the collection covers {} ⊚ {} = {composed}",
                                sets[i1], sets[i2]
                            ),
                        }),
                        witnesses: Vec::new(),
                    });
                }
            }
        }
    }
    Ok(SeCompositionality {
        holds: true,
        counterexample: None,
        witnesses,
    })
}

/// Class flags of a single-agent model, with supporting witnesses.
#[derive(Debug, Clone)]
pub struct ClassReport {
    /// All plan sets are singletons and their behaviors are exactly the
    /// behavior closure of the base: the finite stand-in for "every plan
    /// available and distinguishable".
    pub is_nu_style: bool,
    pub is_active: bool,
    pub is_se_compositional: bool,
    pub active_witness: Option<PlanSet>,
    pub compose_counterexample: Option<ComposeCounterexample>,
}

pub fn classify(m: &Ults) -> Result<ClassReport, TransformError> {
    let agent = single_agent(m)?;
    let closure = m.base().behavior_closure();
    let all_singletons = m.plansets_of(agent).iter().all(|s| s.len() == 1);
    let is_nu_style = all_singletons && {
        let mut have: Vec<_> = m
            .plansets_of(agent)
            .iter()
            .map(|s| m.base().behavior(s.iter().next().unwrap()))
            .collect();
        have.sort();
        have.dedup();
        let mut want: Vec<_> = closure.behaviors().cloned().collect();
        want.sort();
        have == want
    };
    let (active, active_witness) = is_active(m)?;
    let comp = is_se_compositional(m)?;
    Ok(ClassReport {
        is_nu_style,
        is_active: active,
        is_se_compositional: comp.holds,
        active_witness,
        compose_counterexample: comp.counterexample,
    })
}

const TRANSLATION_AGENT: &str = "1";

/// One singleton plan set per behavior of the base LTS, using the shortest
/// representative plan of each. Pointwise equivalent to checking the LTS
/// directly, and validates EMP and COMPKh.
pub fn lts_to_ults_nu(l: &Lts) -> Ults {
    let closure = l.behavior_closure();
    let agent = Agent::new(TRANSLATION_AGENT);
    let sets: Vec<PlanSet> = closure
        .items
        .iter()
        .map(|(_, plan)| PlanSet::singleton(plan.clone()))
        .collect();
    Ults::new(
        l.clone(),
        vec![agent.clone()],
        BTreeMap::from([(agent, sets)]),
    )
    .expect("closure representatives are distinct plans over declared actions")
}

fn behavior_action_name(plan: &Plan, used: &mut Vec<String>) -> String {
    let base = if plan.is_empty() {
        "eps".to_owned()
    } else {
        plan.actions().join(".")
    };
    let mut name = base.clone();
    let mut k = 1;
    while used.contains(&name) {
        name = format!("{base}#{k}");
        k += 1;
    }
    used.push(name.clone());
    name
}

/// One fresh action per behavior with a nonempty SE set, carrying the
/// behavior's SE-restricted relation; plan sets are the singletons of those
/// actions. The output is active, SE-compositional, and pointwise equivalent
/// to the input LTS.
pub fn lts_to_ults_ac(l: &Lts) -> Ults {
    let closure = l.behavior_closure();
    let n = l.num_states();
    let mut used = Vec::new();
    let mut actions = Vec::new();
    let mut rel = BTreeMap::new();
    for (behavior, plan) in &closure.items {
        if behavior.se.is_empty() {
            continue;
        }
        let name = behavior_action_name(plan, &mut used);
        let pairs = behavior
            .rel
            .pairs()
            .into_iter()
            .map(|(u, v)| (l.state_name(u).to_owned(), l.state_name(v).to_owned()))
            .collect();
        actions.push(name.clone());
        rel.insert(name, pairs);
    }
    let states = (0..n)
        .map(|i| {
            (
                l.state_name(i).to_owned(),
                l.valuation(i).iter().cloned().collect(),
            )
        })
        .collect();
    let base = Lts::new(l.atoms().to_vec(), states, actions.clone(), rel)
        .expect("behavior actions are well-formed");
    let agent = Agent::new(TRANSLATION_AGENT);
    let sets = actions
        .iter()
        .map(|a| PlanSet::singleton(Plan(vec![a.clone()])))
        .collect();
    Ults::new(base, vec![agent.clone()], BTreeMap::from([(agent, sets)]))
        .expect("singleton plan sets over fresh actions are disjoint")
}

/// One action per plan set, carrying the plan set's relation restricted to
/// its SE states. Requires an active and SE-compositional model; pointwise
/// equivalent to the input.
pub fn ults_to_lts(m: &Ults) -> Result<Lts, TransformError> {
    let agent = single_agent(m)?;
    let (active, _) = is_active(m)?;
    if !active {
        return Err(TransformError::NotInClass(
            "no plan set is strongly executable everywhere with equivalence-preserving edges"
                .into(),
        ));
    }
    let comp = is_se_compositional(m)?;
    if !comp.holds {
        let why = comp
            .counterexample
            .map(|c| c.reason)
            .unwrap_or_else(|| "composition not covered".into());
        return Err(TransformError::NotInClass(why));
    }
    let l = m.base();
    let n = l.num_states();
    let mut used = Vec::new();
    let mut actions = Vec::new();
    let mut rel = BTreeMap::new();
    for plans in m.plansets_of(agent) {
        let base_name = plans
            .iter()
            .map(|p| {
                if p.is_empty() {
                    "eps".to_owned()
                } else {
                    p.actions().join(".")
                }
            })
            .collect::<Vec<_>>()
            .join("+");
        let mut name = base_name.clone();
        let mut k = 1;
        while used.contains(&name) {
            name = format!("{base_name}#{k}");
            k += 1;
        }
        used.push(name.clone());
        let se = l.stexec_set(plans);
        let restricted = l.rel_of_set(plans).restrict_sources(&se);
        let pairs = restricted
            .pairs()
            .into_iter()
            .map(|(u, v)| (l.state_name(u).to_owned(), l.state_name(v).to_owned()))
            .collect();
        actions.push(name.clone());
        rel.insert(name, pairs);
    }
    let states = (0..n)
        .map(|i| {
            (
                l.state_name(i).to_owned(),
                l.valuation(i).iter().cloned().collect(),
            )
        })
        .collect();
    Ok(Lts::new(l.atoms().to_vec(), states, actions, rel)?)
}

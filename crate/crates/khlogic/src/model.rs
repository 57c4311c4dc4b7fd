//! Finite LTS and ULTS models, plans and plan sets, strong executability,
//! the plan-behavior algebra, and the JSON model file format.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{Agent, BOT_ATOM};

// ---------------------------------------------------------------------------
// State sets and relations
// ---------------------------------------------------------------------------

/// A subset of the state space, as a fixed-width bitset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateSet {
    n: usize,
    words: Vec<u64>,
}

impl StateSet {
    pub fn empty(n: usize) -> Self {
        StateSet {
            n,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        for i in 0..n {
            s.insert(i);
        }
        s
    }

    pub fn singleton(n: usize, i: usize) -> Self {
        let mut s = Self::empty(n);
        s.insert(i);
        s
    }

    pub fn from_iter(n: usize, it: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(n);
        for i in it {
            s.insert(i);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < self.n);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.n && self.words[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_subset_of(&self, other: &StateSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn union_with(&mut self, other: &StateSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &StateSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn intersect(&self, other: &StateSet) -> StateSet {
        let mut s = self.clone();
        s.intersect_with(other);
        s
    }

    pub fn complement(&self) -> StateSet {
        let mut s = Self::full(self.n);
        for (a, b) in s.words.iter_mut().zip(&self.words) {
            *a &= !b;
        }
        s
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(|i| self.contains(*i))
    }
}

/// A binary relation on the state space, stored as successor bitsets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Relation {
    n: usize,
    rows: Vec<StateSet>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        Relation {
            n,
            rows: vec![StateSet::empty(n); n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = Self::empty(n);
        for i in 0..n {
            r.insert(i, i);
        }
        r
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn insert(&mut self, u: usize, v: usize) {
        self.rows[u].insert(v);
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        u < self.n && self.rows[u].contains(v)
    }

    pub fn row(&self, u: usize) -> &StateSet {
        &self.rows[u]
    }

    pub fn is_empty(&self) -> bool {
        self.rows.iter().all(|r| r.is_empty())
    }

    /// Sources with at least one successor.
    pub fn domain(&self) -> StateSet {
        StateSet::from_iter(self.n, (0..self.n).filter(|u| !self.rows[*u].is_empty()))
    }

    /// Relational composition `self ; other`.
    pub fn compose(&self, other: &Relation) -> Relation {
        let mut out = Relation::empty(self.n);
        for u in 0..self.n {
            let mut img = StateSet::empty(self.n);
            for v in self.rows[u].iter() {
                img.union_with(&other.rows[v]);
            }
            out.rows[u] = img;
        }
        out
    }

    /// Image of a set of states.
    pub fn image(&self, set: &StateSet) -> StateSet {
        let mut img = StateSet::empty(self.n);
        for u in set.iter() {
            img.union_with(&self.rows[u]);
        }
        img
    }

    pub fn union(&self, other: &Relation) -> Relation {
        let mut out = self.clone();
        for (a, b) in out.rows.iter_mut().zip(&other.rows) {
            a.union_with(b);
        }
        out
    }

    pub fn is_subset_of(&self, other: &Relation) -> bool {
        self.rows.iter().zip(&other.rows).all(|(a, b)| a.is_subset_of(b))
    }

    /// Keep only pairs whose source lies in `sources`.
    pub fn restrict_sources(&self, sources: &StateSet) -> Relation {
        let mut out = Relation::empty(self.n);
        for u in sources.iter() {
            out.rows[u] = self.rows[u].clone();
        }
        out
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in self.rows[u].iter() {
                out.push((u, v));
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Plans and plan sets
// ---------------------------------------------------------------------------

/// A finite sequence of action names; the empty plan is `ε`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Plan(pub Vec<String>);

impl Plan {
    pub fn epsilon() -> Self {
        Plan(Vec::new())
    }

    pub fn from_actions(actions: &[&str]) -> Self {
        Plan(actions.iter().map(|s| s.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn actions(&self) -> &[String] {
        &self.0
    }

    /// Concatenation `self · other`.
    pub fn concat(&self, other: &Plan) -> Plan {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        Plan(v)
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            write!(f, "[ε]")
        } else {
            write!(f, "[{}]", self.0.join(","))
        }
    }
}

/// A finite nonempty set of plans an agent cannot tell apart.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlanSet(BTreeSet<Plan>);

impl PlanSet {
    pub fn new(plans: impl IntoIterator<Item = Plan>) -> Result<Self, ModelError> {
        let set: BTreeSet<Plan> = plans.into_iter().collect();
        if set.is_empty() {
            return Err(ModelError::EmptyPlanSet { agent: None });
        }
        Ok(PlanSet(set))
    }

    pub fn singleton(plan: Plan) -> Self {
        PlanSet(BTreeSet::from([plan]))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Plan> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, p: &Plan) -> bool {
        self.0.contains(p)
    }

    pub fn intersects(&self, other: &PlanSet) -> bool {
        self.0.iter().any(|p| other.contains(p))
    }

    /// Pairwise concatenation `{σ1σ2 : σ1 ∈ self, σ2 ∈ other}`.
    pub fn concat(&self, other: &PlanSet) -> PlanSet {
        let mut set = BTreeSet::new();
        for p in &self.0 {
            for q in &other.0 {
                set.insert(p.concat(q));
            }
        }
        PlanSet(set)
    }
}

impl fmt::Display for PlanSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, p) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

// ---------------------------------------------------------------------------
// Plan behaviors
// ---------------------------------------------------------------------------

/// The semantic fingerprint of a plan: its induced relation restricted to
/// strongly-executable sources, together with the strong-executability set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlanBehavior {
    pub rel: Relation,
    pub se: StateSet,
}

impl PlanBehavior {
    pub fn identity(n: usize) -> Self {
        PlanBehavior {
            rel: Relation::identity(n),
            se: StateSet::full(n),
        }
    }

    pub fn dead(n: usize) -> Self {
        PlanBehavior {
            rel: Relation::empty(n),
            se: StateSet::empty(n),
        }
    }
}

/// Sequential composition of behaviors. Satisfies
/// `behavior(στ) = behavior_compose(behavior(σ), behavior(τ))` whenever both
/// plans' relations are defined.
pub fn behavior_compose(b1: &PlanBehavior, b2: &PlanBehavior) -> PlanBehavior {
    let n = b1.se.universe();
    let mut se = StateSet::empty(n);
    for u in b1.se.iter() {
        if b1.rel.row(u).is_subset_of(&b2.se) {
            se.insert(u);
        }
    }
    let rel = b1.rel.compose(&b2.rel).restrict_sources(&se);
    PlanBehavior { rel, se }
}

/// The set of all plan behaviors of a model, with a shortest representative
/// plan for each, in BFS discovery order (the representative for a behavior is
/// the length-lexicographically least plan in declared-action order).
#[derive(Debug, Clone)]
pub struct BehaviorClosure {
    pub items: Vec<(PlanBehavior, Plan)>,
}

impl BehaviorClosure {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn behaviors(&self) -> impl Iterator<Item = &PlanBehavior> {
        self.items.iter().map(|(b, _)| b)
    }

    pub fn contains(&self, b: &PlanBehavior) -> bool {
        self.items.iter().any(|(x, _)| x == b)
    }
}

// ---------------------------------------------------------------------------
// LTS
// ---------------------------------------------------------------------------

/// A finite labeled transition system. Relations are partial: a declared
/// action may have no relation, in which case plans through it are undefined.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lts {
    state_names: Vec<String>,
    state_index: BTreeMap<String, usize>,
    atoms: Vec<String>,
    val: Vec<BTreeSet<String>>,
    actions: Vec<String>,
    rel: BTreeMap<String, Relation>,
}

impl Lts {
    pub fn new(
        atoms: Vec<String>,
        states: Vec<(String, Vec<String>)>,
        actions: Vec<String>,
        rel_pairs: BTreeMap<String, Vec<(String, String)>>,
    ) -> Result<Self, ModelError> {
        if states.is_empty() {
            return Err(ModelError::EmptyStates);
        }
        let mut atoms = atoms;
        atoms.sort();
        for w in atoms.windows(2) {
            if w[0] == w[1] {
                return Err(ModelError::DuplicateAtom(w[0].clone()));
            }
        }
        if atoms.iter().any(|a| a == BOT_ATOM) {
            return Err(ModelError::ReservedAtom);
        }
        let mut state_names = Vec::new();
        let mut state_index = BTreeMap::new();
        let mut val = Vec::new();
        for (id, vs) in states {
            if state_index.insert(id.clone(), state_names.len()).is_some() {
                return Err(ModelError::DuplicateState(id));
            }
            let mut set = BTreeSet::new();
            for a in vs {
                if a == BOT_ATOM {
                    return Err(ModelError::ReservedAtom);
                }
                if !atoms.contains(&a) {
                    return Err(ModelError::UnknownAtom { state: id.clone(), atom: a });
                }
                set.insert(a);
            }
            state_names.push(id);
            val.push(set);
        }
        let mut seen_actions = BTreeSet::new();
        for a in &actions {
            if !seen_actions.insert(a.clone()) {
                return Err(ModelError::DuplicateAction(a.clone()));
            }
        }
        let n = state_names.len();
        let mut rel = BTreeMap::new();
        for (a, pairs) in rel_pairs {
            if !seen_actions.contains(&a) {
                return Err(ModelError::UnknownActionInRel(a));
            }
            let mut r = Relation::empty(n);
            for (u, v) in pairs {
                let ui = *state_index.get(&u).ok_or_else(|| ModelError::UnknownStateInRel {
                    action: a.clone(),
                    state: u.clone(),
                })?;
                let vi = *state_index.get(&v).ok_or_else(|| ModelError::UnknownStateInRel {
                    action: a.clone(),
                    state: v.clone(),
                })?;
                r.insert(ui, vi);
            }
            rel.insert(a, r);
        }
        Ok(Lts {
            state_names,
            state_index,
            atoms,
            val,
            actions,
            rel,
        })
    }

    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn state_name(&self, i: usize) -> &str {
        &self.state_names[i]
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn state_id(&self, name: &str) -> Option<usize> {
        self.state_index.get(name).copied()
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn has_action(&self, a: &str) -> bool {
        self.actions.iter().any(|x| x == a)
    }

    pub fn valuation(&self, i: usize) -> &BTreeSet<String> {
        &self.val[i]
    }

    /// States where `atom` holds.
    pub fn atom_extension(&self, atom: &str) -> StateSet {
        StateSet::from_iter(
            self.num_states(),
            (0..self.num_states()).filter(|i| self.val[*i].contains(atom)),
        )
    }

    pub fn rel_of_action(&self, a: &str) -> Option<&Relation> {
        self.rel.get(a)
    }

    pub fn defined_actions(&self) -> impl Iterator<Item = &String> {
        self.actions.iter().filter(|a| self.rel.contains_key(*a))
    }

    /// `R_σ`: identity for ε, composition along the plan; `None` when some
    /// action in the plan has no relation.
    pub fn rel_of_plan(&self, plan: &Plan) -> Option<Relation> {
        let n = self.num_states();
        let mut r = Relation::identity(n);
        for a in plan.actions() {
            let ra = self.rel.get(a)?;
            r = r.compose(ra);
        }
        Some(r)
    }

    /// `SE(σ)`: the states where every partial execution of `σ` can be
    /// completed. Empty when `R_σ` is undefined.
    pub fn stexec_plan(&self, plan: &Plan) -> StateSet {
        let n = self.num_states();
        for a in plan.actions() {
            if !self.rel.contains_key(a) {
                return StateSet::empty(n);
            }
        }
        let mut se = StateSet::full(n);
        let mut prefix = Relation::identity(n);
        for a in plan.actions() {
            let ra = &self.rel[a];
            for u in 0..n {
                if !se.contains(u) {
                    continue;
                }
                for v in prefix.row(u).iter() {
                    if ra.row(v).is_empty() {
                        se.remove(u);
                        break;
                    }
                }
            }
            prefix = prefix.compose(ra);
        }
        se
    }

    /// `SE(π) = ⋂_{σ∈π} SE(σ)`.
    pub fn stexec_set(&self, plans: &PlanSet) -> StateSet {
        let mut se = StateSet::full(self.num_states());
        for p in plans.iter() {
            se.intersect_with(&self.stexec_plan(p));
        }
        se
    }

    /// `R_π = ⋃_{σ∈π} R_σ`, undefined members contributing nothing.
    pub fn rel_of_set(&self, plans: &PlanSet) -> Relation {
        let mut r = Relation::empty(self.num_states());
        for p in plans.iter() {
            if let Some(rp) = self.rel_of_plan(p) {
                r = r.union(&rp);
            }
        }
        r
    }

    /// The SE-restricted fingerprint `(R_σ|_{SE(σ)}, SE(σ))`.
    pub fn behavior(&self, plan: &Plan) -> PlanBehavior {
        let se = self.stexec_plan(plan);
        let rel = match self.rel_of_plan(plan) {
            Some(r) => r.restrict_sources(&se),
            None => Relation::empty(self.num_states()),
        };
        PlanBehavior { rel, se }
    }

    /// Least set containing the ε-behavior, closed under composition with
    /// basic-action behaviors on the right. Contains `behavior(σ)` for every
    /// plan `σ` over the defined actions.
    pub fn behavior_closure(&self) -> BehaviorClosure {
        let n = self.num_states();
        let basics: Vec<(String, PlanBehavior)> = self
            .actions
            .iter()
            .filter(|a| self.rel.contains_key(*a))
            .map(|a| (a.clone(), self.behavior(&Plan(vec![a.clone()]))))
            .collect();
        let eps = PlanBehavior::identity(n);
        let mut seen: HashSet<PlanBehavior> = HashSet::new();
        seen.insert(eps.clone());
        let mut items = vec![(eps.clone(), Plan::epsilon())];
        let mut queue: VecDeque<(PlanBehavior, Plan)> = VecDeque::new();
        queue.push_back((eps, Plan::epsilon()));
        while let Some((b, p)) = queue.pop_front() {
            for (a, ba) in &basics {
                let nb = behavior_compose(&b, ba);
                if seen.insert(nb.clone()) {
                    let mut np = p.clone();
                    np.0.push(a.clone());
                    items.push((nb.clone(), np.clone()));
                    queue.push_back((nb, np));
                }
            }
        }
        BehaviorClosure { items }
    }
}

// ---------------------------------------------------------------------------
// ULTS
// ---------------------------------------------------------------------------

/// An LTS together with, per agent, a finite collection of pairwise-disjoint
/// nonempty plan sets (the agent's indistinguishability classes).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ults {
    base: Lts,
    agents: Vec<Agent>,
    plansets: BTreeMap<Agent, Vec<PlanSet>>,
}

impl Ults {
    pub fn new(
        base: Lts,
        agents: Vec<Agent>,
        plansets: BTreeMap<Agent, Vec<PlanSet>>,
    ) -> Result<Self, ModelError> {
        let mut agents = agents;
        agents.sort();
        agents.dedup();
        if agents.is_empty() {
            return Err(ModelError::EmptyAgents);
        }
        for agent in plansets.keys() {
            if !agents.contains(agent) {
                return Err(ModelError::UnknownAgentInPlansets(agent.id().to_owned()));
            }
        }
        for agent in &agents {
            let sets = plansets
                .get(agent)
                .filter(|s| !s.is_empty())
                .ok_or_else(|| ModelError::EmptyPlanCollection { agent: agent.id().to_owned() })?;
            for (k, s1) in sets.iter().enumerate() {
                for plan in s1.iter() {
                    for a in plan.actions() {
                        if !base.has_action(a) {
                            return Err(ModelError::UndeclaredActionInPlan {
                                agent: agent.id().to_owned(),
                                action: a.clone(),
                            });
                        }
                    }
                }
                for s2 in sets.iter().skip(k + 1) {
                    if s1.intersects(s2) {
                        return Err(ModelError::OverlappingPlanSets { agent: agent.id().to_owned() });
                    }
                }
            }
        }
        Ok(Ults {
            base,
            agents,
            plansets,
        })
    }

    pub fn base(&self) -> &Lts {
        &self.base
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn has_agent(&self, agent: &Agent) -> bool {
        self.agents.binary_search(agent).is_ok()
    }

    pub fn plansets_of(&self, agent: &Agent) -> &[PlanSet] {
        &self.plansets[agent]
    }

    /// All plan sets of all agents, tagged with their owner, in agent order.
    pub fn all_plansets(&self) -> Vec<(Agent, &PlanSet)> {
        let mut out = Vec::new();
        for agent in &self.agents {
            for s in &self.plansets[agent] {
                out.push((agent.clone(), s));
            }
        }
        out
    }

    pub fn num_states(&self) -> usize {
        self.base.num_states()
    }
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("model must have at least one state")]
    EmptyStates,
    #[error("duplicate state id `{0}`")]
    DuplicateState(String),
    #[error("duplicate atom `{0}`")]
    DuplicateAtom(String),
    #[error("duplicate action `{0}`")]
    DuplicateAction(String),
    #[error("atom `{BOT_ATOM}` is reserved for falsum and may not appear in models")]
    ReservedAtom,
    #[error("state `{state}` uses undeclared atom `{atom}`")]
    UnknownAtom { state: String, atom: String },
    #[error("relation key `{0}` is not a declared action")]
    UnknownActionInRel(String),
    #[error("relation for action `{action}` mentions unknown state `{state}`")]
    UnknownStateInRel { action: String, state: String },
    #[error("agent list must be nonempty")]
    EmptyAgents,
    #[error("planset entry for `{0}` does not match any declared agent")]
    UnknownAgentInPlansets(String),
    #[error("agent `{agent}`: the collection of plan sets must be nonempty")]
    EmptyPlanCollection { agent: String },
    #[error("empty plan set{}", agent.as_ref().map(|a| format!(" for agent `{a}`")).unwrap_or_default())]
    EmptyPlanSet { agent: Option<String> },
    #[error("agent `{agent}`: plan sets must be pairwise disjoint")]
    OverlappingPlanSets { agent: String },
    #[error("agent `{agent}`: plan uses undeclared action `{action}`")]
    UndeclaredActionInPlan { agent: String, action: String },
    #[error("model file has `agents` without `plansets` or vice versa")]
    HalfUlts,
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct RawState {
    id: String,
    #[serde(default)]
    val: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawModel {
    atoms: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    agents: Option<Vec<String>>,
    states: Vec<RawState>,
    actions: Vec<String>,
    #[serde(default)]
    rel: BTreeMap<String, Vec<(String, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    plansets: Option<BTreeMap<String, Vec<Vec<Vec<String>>>>>,
    /// Extra section emitted by filtration outputs; ignored on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    class_map: Option<BTreeMap<String, String>>,
}

/// Either kind of model file.
#[derive(Debug, Clone)]
pub enum Model {
    Lts(Lts),
    Ults(Ults),
}

impl Model {
    pub fn base(&self) -> &Lts {
        match self {
            Model::Lts(l) => l,
            Model::Ults(u) => u.base(),
        }
    }
}

pub fn model_from_json(text: &str) -> Result<Model, ModelError> {
    let raw: RawModel = serde_json::from_str(text)?;
    let lts = Lts::new(
        raw.atoms,
        raw.states.into_iter().map(|s| (s.id, s.val)).collect(),
        raw.actions,
        raw.rel,
    )?;
    match (raw.agents, raw.plansets) {
        (None, None) => Ok(Model::Lts(lts)),
        (Some(agents), Some(plansets)) => {
            let agents: Vec<Agent> = agents.into_iter().map(Agent).collect();
            let mut map = BTreeMap::new();
            for (agent, collection) in plansets {
                let mut sets = Vec::new();
                for raw_set in collection {
                    if raw_set.is_empty() {
                        return Err(ModelError::EmptyPlanSet { agent: Some(agent.clone()) });
                    }
                    sets.push(PlanSet::new(raw_set.into_iter().map(Plan)).map_err(|_| {
                        ModelError::EmptyPlanSet { agent: Some(agent.clone()) }
                    })?);
                }
                map.insert(Agent(agent), sets);
            }
            Ok(Model::Ults(Ults::new(lts, agents, map)?))
        }
        _ => Err(ModelError::HalfUlts),
    }
}

pub fn model_to_json(model: &Model) -> serde_json::Value {
    model_to_json_with_class_map(model, None)
}

pub fn model_to_json_with_class_map(
    model: &Model,
    class_map: Option<&BTreeMap<String, String>>,
) -> serde_json::Value {
    let base = model.base();
    let raw = RawModel {
        atoms: base.atoms.clone(),
        agents: match model {
            Model::Lts(_) => None,
            Model::Ults(u) => Some(u.agents.iter().map(|a| a.id().to_owned()).collect()),
        },
        states: (0..base.num_states())
            .map(|i| RawState {
                id: base.state_names[i].clone(),
                val: base.val[i].iter().cloned().collect(),
            })
            .collect(),
        actions: base.actions.clone(),
        rel: base
            .rel
            .iter()
            .map(|(a, r)| {
                (
                    a.clone(),
                    r.pairs()
                        .into_iter()
                        .map(|(u, v)| (base.state_names[u].clone(), base.state_names[v].clone()))
                        .collect(),
                )
            })
            .collect(),
        plansets: match model {
            Model::Lts(_) => None,
            Model::Ults(u) => Some(
                u.agents
                    .iter()
                    .map(|agent| {
                        (
                            agent.id().to_owned(),
                            u.plansets[agent]
                                .iter()
                                .map(|s| s.iter().map(|p| p.0.clone()).collect())
                                .collect(),
                        )
                    })
                    .collect(),
            ),
        },
        class_map: class_map.cloned(),
    };
    serde_json::to_value(raw).expect("model serialization cannot fail")
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model, ModelError> {
    let text = std::fs::read_to_string(path)?;
    model_from_json(&text)
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let value = model_to_json(model);
    std::fs::write(path, serde_json::to_string_pretty(&value).unwrap())?;
    Ok(())
}

/// The four-state single-agent fixture with
/// `S = {{[a]}, {[b]}, {[a,b],[c]}}`: Kh(p,q) and Kh(q,r) hold while
/// Kh(p,r) and Kh(p,p) fail even though A(p->p) holds.
pub fn emp_fail() -> Ults {
    let lts = Lts::new(
        vec!["p".into(), "q".into(), "r".into()],
        vec![
            ("w".into(), vec!["p".into()]),
            ("u".into(), vec!["q".into()]),
            ("v_r".into(), vec!["r".into()]),
            ("x".into(), vec![]),
        ],
        vec!["a".into(), "b".into(), "c".into()],
        BTreeMap::from([
            ("a".into(), vec![("w".into(), "u".into())]),
            ("b".into(), vec![("u".into(), "v_r".into())]),
            ("c".into(), vec![("w".into(), "x".into())]),
        ]),
    )
    .unwrap();
    let agent = Agent::new("1");
    let plansets = BTreeMap::from([(
        agent.clone(),
        vec![
            PlanSet::singleton(Plan::from_actions(&["a"])),
            PlanSet::singleton(Plan::from_actions(&["b"])),
            PlanSet::new([Plan::from_actions(&["a", "b"]), Plan::from_actions(&["c"])]).unwrap(),
        ],
    )]);
    Ults::new(lts, vec![agent], plansets).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(m: &Lts, names: &[&str]) -> StateSet {
        StateSet::from_iter(m.num_states(), names.iter().map(|n| m.state_id(n).unwrap()))
    }

    #[test]
    fn rel_of_plan_basics() {
        let m = emp_fail();
        let l = m.base();
        let n = l.num_states();

        assert_eq!(l.rel_of_plan(&Plan::epsilon()).unwrap(), Relation::identity(n));

        // [a,b] composes a then b
        let r = l.rel_of_plan(&Plan::from_actions(&["a", "b"])).unwrap();
        let w = l.state_id("w").unwrap();
        let vr = l.state_id("v_r").unwrap();
        assert_eq!(r.pairs(), vec![(w, vr)]);

        // undefined action yields None, not an error
        assert!(l.rel_of_plan(&Plan::from_actions(&["d"])).is_none());
    }

    #[test]
    fn stexec_matches_hand_enumeration() {
        let m = emp_fail();
        let l = m.base();
        assert_eq!(l.stexec_plan(&Plan::epsilon()), StateSet::full(l.num_states()));
        assert_eq!(l.stexec_plan(&Plan::from_actions(&["a", "b"])), ids(l, &["w"]));
        assert_eq!(l.stexec_plan(&Plan::from_actions(&["b"])), ids(l, &["u"]));
        // undefined plan is strongly executable nowhere
        assert!(l.stexec_plan(&Plan::from_actions(&["d"])).is_empty());
    }

    #[test]
    fn stexec_set_intersects_members() {
        let m = emp_fail();
        let l = m.base();
        let eps = PlanSet::singleton(Plan::epsilon());
        assert_eq!(l.stexec_set(&eps), StateSet::full(l.num_states()));

        let ab_c = PlanSet::new([Plan::from_actions(&["a", "b"]), Plan::from_actions(&["c"])]).unwrap();
        assert_eq!(l.stexec_set(&ab_c), ids(l, &["w"]));

        let a_b = PlanSet::new([Plan::from_actions(&["a"]), Plan::from_actions(&["b"])]).unwrap();
        assert!(l.stexec_set(&a_b).is_empty());
    }

    #[test]
    fn rel_of_set_unions_defined_members() {
        let m = emp_fail();
        let l = m.base();
        let eps = PlanSet::singleton(Plan::epsilon());
        assert_eq!(l.rel_of_set(&eps), Relation::identity(l.num_states()));

        let ab_c = PlanSet::new([Plan::from_actions(&["a", "b"]), Plan::from_actions(&["c"])]).unwrap();
        let r = l.rel_of_set(&ab_c);
        let w = l.state_id("w").unwrap();
        assert_eq!(
            StateSet::from_iter(l.num_states(), r.row(w).iter()),
            ids(l, &["v_r", "x"])
        );

        let undef = PlanSet::singleton(Plan::from_actions(&["d"]));
        assert!(l.rel_of_set(&undef).is_empty());
    }

    #[test]
    fn behavior_packages_se_restricted_rel() {
        let m = emp_fail();
        let l = m.base();
        let b = l.behavior(&Plan::epsilon());
        assert_eq!(b, PlanBehavior::identity(l.num_states()));

        let ba = l.behavior(&Plan::from_actions(&["a"]));
        assert_eq!(ba.se, ids(l, &["w"]));
        assert_eq!(ba.rel.pairs(), vec![(l.state_id("w").unwrap(), l.state_id("u").unwrap())]);

        let bab = l.behavior(&Plan::from_actions(&["a", "b"]));
        assert_eq!(bab.se, ids(l, &["w"]));
        assert_eq!(bab.rel.pairs(), vec![(l.state_id("w").unwrap(), l.state_id("v_r").unwrap())]);
    }

    #[test]
    fn behavior_compose_identity_and_law() {
        let m = emp_fail();
        let l = m.base();
        let eps = l.behavior(&Plan::epsilon());
        let a = l.behavior(&Plan::from_actions(&["a"]));
        let b = l.behavior(&Plan::from_actions(&["b"]));

        assert_eq!(behavior_compose(&eps, &a), a);
        assert_eq!(behavior_compose(&a, &eps), a);

        assert_eq!(behavior_compose(&a, &b), l.behavior(&Plan::from_actions(&["a", "b"])));

        // u's b-successor v_r has no a-successor
        let dead = behavior_compose(&b, &a);
        assert_eq!(dead, PlanBehavior::dead(l.num_states()));
    }

    /// Independent oracle: enumerate all plans up to a length bound and
    /// deduplicate their behaviors.
    fn enumerate_behaviors(l: &Lts, max_len: usize) -> BTreeSet<PlanBehavior> {
        let actions: Vec<String> = l.defined_actions().cloned().collect();
        let mut plans = vec![Plan::epsilon()];
        let mut frontier = vec![Plan::epsilon()];
        for _ in 0..max_len {
            let mut next = Vec::new();
            for p in &frontier {
                for a in &actions {
                    let mut q = p.clone();
                    q.0.push(a.clone());
                    next.push(q);
                }
            }
            plans.extend(next.iter().cloned());
            frontier = next;
        }
        plans.iter().map(|p| l.behavior(p)).collect()
    }

    #[test]
    fn closure_matches_plan_enumeration_on_fixture() {
        let m = emp_fail();
        let l = m.base();
        let by_plans = enumerate_behaviors(l, 3);
        let closure: BTreeSet<PlanBehavior> = l.behavior_closure().behaviors().cloned().collect();
        assert_eq!(closure, by_plans);
        // ε, a, b, c, ab, and the single dead behavior all collapsed failures
        // share; every composition of length >= 2 other than ab is dead.
        assert_eq!(closure.len(), 6);
        assert!(closure.contains(&PlanBehavior::dead(l.num_states())));
    }

    #[test]
    fn closure_of_relation_free_model_is_identity_only() {
        let l = Lts::new(
            vec!["p".into()],
            vec![("w".into(), vec!["p".into()])],
            vec!["a".into()],
            BTreeMap::new(),
        )
        .unwrap();
        let c = l.behavior_closure();
        assert_eq!(c.len(), 1);
        assert_eq!(c.items[0].0, PlanBehavior::identity(1));
    }

    #[test]
    fn closure_collapses_all_powers_of_a_self_loop() {
        // on a single state the self-loop behavior *is* the identity
        let l = Lts::new(
            vec![],
            vec![("w".into(), vec![])],
            vec!["a".into()],
            BTreeMap::from([("a".into(), vec![("w".into(), "w".into())])]),
        )
        .unwrap();
        let c = l.behavior_closure();
        assert_eq!(c.len(), 1);
        assert_eq!(c.items[0].0, PlanBehavior::identity(1));

        // with a second, loop-free state they separate, and all powers of a
        // still coincide
        let l2 = Lts::new(
            vec![],
            vec![("w".into(), vec![]), ("u".into(), vec![])],
            vec!["a".into()],
            BTreeMap::from([("a".into(), vec![("w".into(), "w".into())])]),
        )
        .unwrap();
        let c2 = l2.behavior_closure();
        assert_eq!(c2.len(), 2);
        assert_eq!(l2.behavior(&Plan::from_actions(&["a"])), l2.behavior(&Plan::from_actions(&["a", "a", "a"])));
    }

    #[test]
    fn closure_is_a_fixed_point_under_composition() {
        let m = emp_fail();
        let l = m.base();
        let c = l.behavior_closure();
        for (b, _) in &c.items {
            for a in l.defined_actions() {
                let nb = behavior_compose(b, &l.behavior(&Plan(vec![a.clone()])));
                assert!(c.contains(&nb));
            }
        }
    }

    #[test]
    fn fixture_round_trips_through_json() {
        let m = emp_fail();
        let json = model_to_json(&Model::Ults(m.clone()));
        let text = serde_json::to_string(&json).unwrap();
        match model_from_json(&text).unwrap() {
            Model::Ults(m2) => assert_eq!(m, m2),
            _ => panic!("expected a ULTS"),
        }
    }

    #[test]
    fn rejects_empty_plan_set() {
        let text = r#"{
            "atoms": ["p"],
            "agents": ["1"],
            "states": [{"id": "w", "val": ["p"]}],
            "actions": ["a"],
            "rel": {},
            "plansets": {"1": [[]]}
        }"#;
        match model_from_json(text) {
            Err(ModelError::EmptyPlanSet { agent: Some(a) }) => assert_eq!(a, "1"),
            other => panic!("expected empty plan set error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_overlapping_plan_sets_and_reserved_atom() {
        let overlapping = r#"{
            "atoms": [],
            "agents": ["1"],
            "states": [{"id": "w", "val": []}],
            "actions": ["a"],
            "rel": {},
            "plansets": {"1": [[["a"]], [["a"], ["a","a"]]]}
        }"#;
        assert!(matches!(
            model_from_json(overlapping),
            Err(ModelError::OverlappingPlanSets { .. })
        ));

        let reserved = r#"{
            "atoms": ["_bot"],
            "states": [{"id": "w", "val": []}],
            "actions": [],
            "rel": {}
        }"#;
        assert!(matches!(model_from_json(reserved), Err(ModelError::ReservedAtom)));
    }

    #[test]
    fn lts_files_omit_agents_and_plansets() {
        let text = r#"{
            "atoms": ["p"],
            "states": [{"id": "w", "val": ["p"]}, {"id": "u"}],
            "actions": ["a"],
            "rel": {"a": [["w", "u"]]}
        }"#;
        match model_from_json(text).unwrap() {
            Model::Lts(l) => {
                assert_eq!(l.num_states(), 2);
                assert!(l.rel_of_action("a").is_some());
            }
            _ => panic!("expected an LTS"),
        }
        let half = r#"{
            "atoms": [],
            "agents": ["1"],
            "states": [{"id": "w"}],
            "actions": [],
            "rel": {}
        }"#;
        assert!(matches!(model_from_json(half), Err(ModelError::HalfUlts)));
    }

    #[test]
    fn monotonicity_of_set_images() {
        let m = emp_fail();
        let l = m.base();
        let pi = PlanSet::new([Plan::from_actions(&["a", "b"]), Plan::from_actions(&["c"])]).unwrap();
        let r = l.rel_of_set(&pi);
        let small = ids(l, &["w"]);
        let big = ids(l, &["w", "u"]);
        assert!(r.image(&small).is_subset_of(&r.image(&big)));
    }
}

//! Bisimulations between ULTSs: verification of candidate relations,
//! deciding equivalence of finite pointed models through global Kh profiles,
//! and exhaustive search for distinguishing formulas.
//!
//! Equivalence is decided by comparing (a) the point valuations, (b) the sets
//! of realized valuations, and (c) for every agent and every pair of unions
//! of valuation classes, the global Kh fact "some plan set is strongly
//! executable on the first union and lands inside the second". Every
//! definable set is a union of valuation classes and Kh truth is global, so
//! agreement on (a)-(c) forces agreement on every formula; conversely each
//! disagreement is itself expressible, which is what
//! [`find_distinguishing_formula`] exploits.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{Relation, StateSet, Ults};
use crate::syntax::{Agent, AgentSet, Formula, SurfaceFormula};

/// Most valuation classes allowed before definable-set enumeration (2^c sets)
/// is refused.
pub const MAX_VALUATION_CLASSES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BisimError {
    #[error("model has {0} distinct valuations; definable-set enumeration is capped at {MAX_VALUATION_CLASSES}")]
    TooManyValuations(usize),
    #[error("models have different agent sets")]
    AgentMismatch,
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("relation pair refers to state index out of range")]
    PairOutOfRange,
}

/// A candidate relation between the state spaces of two models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BisimRelation {
    pairs: BTreeSet<(usize, usize)>,
}

impl BisimRelation {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        BisimRelation {
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn from_names(
        m: &Ults,
        m2: &Ults,
        pairs: &[(String, String)],
    ) -> Result<Self, BisimError> {
        let mut set = BTreeSet::new();
        for (a, b) in pairs {
            let u = m
                .base()
                .state_id(a)
                .ok_or_else(|| BisimError::UnknownState(a.clone()))?;
            let v = m2
                .base()
                .state_id(b)
                .ok_or_else(|| BisimError::UnknownState(b.clone()))?;
            set.insert((u, v));
        }
        Ok(BisimRelation { pairs: set })
    }

    pub fn identity(m: &Ults) -> Self {
        BisimRelation {
            pairs: (0..m.num_states()).map(|i| (i, i)).collect(),
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.pairs.contains(&(u, v))
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    /// Forward image `Z(U)` in the second model's state space.
    pub fn image(&self, set: &StateSet, n2: usize) -> StateSet {
        let mut out = StateSet::empty(n2);
        for (u, v) in &self.pairs {
            if set.contains(*u) {
                out.insert(*v);
            }
        }
        out
    }

    /// Backward image `Z⁻¹(U')` in the first model's state space.
    pub fn preimage(&self, set: &StateSet, n1: usize) -> StateSet {
        let mut out = StateSet::empty(n1);
        for (u, v) in &self.pairs {
            if set.contains(*v) {
                out.insert(*u);
            }
        }
        out
    }

    pub fn name_pairs(&self, m: &Ults, m2: &Ults) -> Vec<(String, String)> {
        self.pairs
            .iter()
            .map(|(u, v)| {
                (
                    m.base().state_name(*u).to_owned(),
                    m2.base().state_name(*v).to_owned(),
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationClause {
    Atom,
    KhZig,
    KhZag,
    AZig,
    AZag,
}

/// A replayable report of which bisimulation clause failed and where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub clause: ViolationClause,
    /// The offending related pair (Atom) or unmatched state (A-Zig/A-Zag).
    pub pair: Option<(String, String)>,
    pub agent: Option<Agent>,
    /// The definable set U the clause was instantiated with.
    pub cond: Vec<String>,
    /// The minimal image T₀ that could not be matched.
    pub image: Vec<String>,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.clause {
            ViolationClause::Atom => {
                let (a, b) = self.pair.as_ref().unwrap();
                write!(f, "Atom clause fails: {a} and {b} have different valuations")
            }
            ViolationClause::AZig => {
                write!(f, "A-Zig fails: state {} has no related partner", self.pair.as_ref().unwrap().0)
            }
            ViolationClause::AZag => {
                write!(f, "A-Zag fails: state {} has no related partner", self.pair.as_ref().unwrap().1)
            }
            ViolationClause::KhZig | ViolationClause::KhZag => {
                let dir = if self.clause == ViolationClause::KhZig { "Kh-Zig" } else { "Kh-Zag" };
                write!(
                    f,
                    "{dir} fails for agent {} on U = {{{}}} with image {{{}}}",
                    self.agent.as_ref().unwrap(),
                    self.cond.join(","),
                    self.image.join(",")
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BisimCheck {
    Ok,
    Fail(Violation),
}

impl BisimCheck {
    pub fn is_ok(&self) -> bool {
        matches!(self, BisimCheck::Ok)
    }
}

/// Valuation classes of a model: distinct valuations (as sets of true atoms)
/// with the states realizing each, sorted by valuation.
pub fn valuation_classes(m: &Ults) -> Vec<(BTreeSet<String>, StateSet)> {
    let base = m.base();
    let mut map: BTreeMap<BTreeSet<String>, StateSet> = BTreeMap::new();
    for i in 0..base.num_states() {
        map.entry(base.valuation(i).clone())
            .or_insert_with(|| StateSet::empty(base.num_states()))
            .insert(i);
    }
    map.into_iter().collect()
}

/// All propositionally definable subsets of the state space: the 2^c unions
/// of valuation classes, in mask order.
pub fn prop_definable_sets(m: &Ults) -> Result<Vec<StateSet>, BisimError> {
    let classes = valuation_classes(m);
    if classes.len() > MAX_VALUATION_CLASSES {
        return Err(BisimError::TooManyValuations(classes.len()));
    }
    let n = m.num_states();
    let mut out = Vec::with_capacity(1 << classes.len());
    for mask in 0u32..(1 << classes.len()) {
        let mut s = StateSet::empty(n);
        for (k, (_, class)) in classes.iter().enumerate() {
            if mask & (1 << k) != 0 {
                s.union_with(class);
            }
        }
        out.push(s);
    }
    Ok(out)
}

fn planset_data(m: &Ults, agent: &Agent) -> Vec<(StateSet, Relation)> {
    m.plansets_of(agent)
        .iter()
        .map(|s| (m.base().stexec_set(s), m.base().rel_of_set(s)))
        .collect()
}

fn names(m: &Ults, s: &StateSet) -> Vec<String> {
    s.iter().map(|i| m.base().state_name(i).to_owned()).collect()
}

/// Check every clause of the bisimulation definition on a candidate `z`.
///
/// Kh-Zig is checked on minimal images only: for each agent, each
/// propositionally definable `U`, and each plan set with `U ⊆ SE(π)`, the
/// image `T₀ = R_π(U)` must be matched by some plan set on the other side
/// whose image from `Z(U)` stays inside `Z(T₀)`. Any larger witness image `T`
/// only enlarges `Z(T)`, so the minimal check suffices.
pub fn verify_bisim(m: &Ults, m2: &Ults, z: &BisimRelation) -> Result<BisimCheck, BisimError> {
    if m.agents() != m2.agents() {
        return Err(BisimError::AgentMismatch);
    }
    if z.is_empty() {
        // an empty relation vacuously fails totality on nonempty models
        return Ok(BisimCheck::Fail(Violation {
            clause: ViolationClause::AZig,
            pair: Some((m.base().state_name(0).to_owned(), String::new())),
            agent: None,
            cond: vec![],
            image: vec![],
        }));
    }
    let (n1, n2) = (m.num_states(), m2.num_states());
    for (u, v) in z.pairs() {
        if u >= n1 || v >= n2 {
            return Err(BisimError::PairOutOfRange);
        }
        if m.base().valuation(u) != m2.base().valuation(v) {
            return Ok(BisimCheck::Fail(Violation {
                clause: ViolationClause::Atom,
                pair: Some((
                    m.base().state_name(u).to_owned(),
                    m2.base().state_name(v).to_owned(),
                )),
                agent: None,
                cond: vec![],
                image: vec![],
            }));
        }
    }
    for u in 0..n1 {
        if !z.image(&StateSet::singleton(n1, u), n2).is_empty() {
            continue;
        }
        return Ok(BisimCheck::Fail(Violation {
            clause: ViolationClause::AZig,
            pair: Some((m.base().state_name(u).to_owned(), String::new())),
            agent: None,
            cond: vec![],
            image: vec![],
        }));
    }
    for v in 0..n2 {
        if !z.preimage(&StateSet::singleton(n2, v), n1).is_empty() {
            continue;
        }
        return Ok(BisimCheck::Fail(Violation {
            clause: ViolationClause::AZag,
            pair: Some((String::new(), m2.base().state_name(v).to_owned())),
            agent: None,
            cond: vec![],
            image: vec![],
        }));
    }

    let def1 = prop_definable_sets(m)?;
    let def2 = prop_definable_sets(m2)?;
    for agent in m.agents() {
        let d1 = planset_data(m, agent);
        let d2 = planset_data(m2, agent);
        // Kh-Zig
        for u_set in &def1 {
            for (se, rel) in &d1 {
                if !u_set.is_subset_of(se) {
                    continue;
                }
                let t0 = rel.image(u_set);
                let zu = z.image(u_set, n2);
                let zt0 = z.image(&t0, n2);
                let matched = d2
                    .iter()
                    .any(|(se2, rel2)| zu.is_subset_of(se2) && rel2.image(&zu).is_subset_of(&zt0));
                if !matched {
                    return Ok(BisimCheck::Fail(Violation {
                        clause: ViolationClause::KhZig,
                        pair: None,
                        agent: Some(agent.clone()),
                        cond: names(m, u_set),
                        image: names(m, &t0),
                    }));
                }
            }
        }
        // Kh-Zag
        for u_set in &def2 {
            for (se, rel) in &d2 {
                if !u_set.is_subset_of(se) {
                    continue;
                }
                let t0 = rel.image(u_set);
                let zu = z.preimage(u_set, n1);
                let zt0 = z.preimage(&t0, n1);
                let matched = d1
                    .iter()
                    .any(|(se1, rel1)| zu.is_subset_of(se1) && rel1.image(&zu).is_subset_of(&zt0));
                if !matched {
                    return Ok(BisimCheck::Fail(Violation {
                        clause: ViolationClause::KhZag,
                        pair: None,
                        agent: Some(agent.clone()),
                        cond: names(m2, u_set),
                        image: names(m2, &t0),
                    }));
                }
            }
        }
    }
    Ok(BisimCheck::Ok)
}

/// Realized valuations plus the global Kh facts over unions of valuation
/// classes; two pointed models are equivalent exactly when their profiles
/// agree and the points share a valuation.
pub struct GlobalProfile<'m> {
    m: &'m Ults,
    /// Sorted realized valuations and their classes.
    pub classes: Vec<(BTreeSet<String>, StateSet)>,
    planset_data: BTreeMap<Agent, Vec<(StateSet, Relation)>>,
}

impl<'m> GlobalProfile<'m> {
    pub fn build(m: &'m Ults) -> Result<Self, BisimError> {
        let classes = valuation_classes(m);
        if classes.len() > MAX_VALUATION_CLASSES {
            return Err(BisimError::TooManyValuations(classes.len()));
        }
        let planset_data = m
            .agents()
            .iter()
            .map(|a| (a.clone(), planset_data(m, a)))
            .collect();
        Ok(GlobalProfile {
            m,
            classes,
            planset_data,
        })
    }

    pub fn realized(&self) -> Vec<&BTreeSet<String>> {
        self.classes.iter().map(|(v, _)| v).collect()
    }

    /// The state set denoted by a subset of this model's valuation classes,
    /// indexed against `shared`, the common sorted valuation list.
    fn set_of_mask(&self, shared: &[BTreeSet<String>], mask: u32) -> StateSet {
        let mut s = StateSet::empty(self.m.num_states());
        for (k, v) in shared.iter().enumerate() {
            if mask & (1 << k) != 0 {
                if let Some((_, class)) = self.classes.iter().find(|(cv, _)| cv == v) {
                    s.union_with(class);
                }
            }
        }
        s
    }

    /// The Kh fact for `agent` on the pair of class unions named by the two
    /// masks: does some plan set satisfy both witness clauses? Always true
    /// for the empty condition because plan-set collections are nonempty.
    pub fn kh_fact(&self, agent: &Agent, shared: &[BTreeSet<String>], cond_mask: u32, goal_mask: u32) -> bool {
        let cond = self.set_of_mask(shared, cond_mask);
        let goal = self.set_of_mask(shared, goal_mask);
        self.planset_data[agent]
            .iter()
            .any(|(se, rel)| cond.is_subset_of(se) && rel.image(&cond).is_subset_of(&goal))
    }
}

/// The first model-level or point-level fact separating two pointed models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Distinguisher {
    /// The two points disagree on this atom.
    PointAtom(String),
    /// This valuation is realized in exactly one of the models
    /// (`in_first` tells which).
    RealizedValuation { valuation: BTreeSet<String>, in_first: bool },
    /// The global Kh fact for this agent and pair of valuation-class unions
    /// differs (`in_first` is its value in the first model).
    KhFact {
        agent: Agent,
        cond: Vec<BTreeSet<String>>,
        goal: Vec<BTreeSet<String>>,
        in_first: bool,
    },
}

fn find_distinguisher(
    m: &Ults,
    w: &str,
    m2: &Ults,
    w2: &str,
) -> Result<Option<Distinguisher>, BisimError> {
    if m.agents() != m2.agents() {
        return Err(BisimError::AgentMismatch);
    }
    let wid = m
        .base()
        .state_id(w)
        .ok_or_else(|| BisimError::UnknownState(w.to_owned()))?;
    let wid2 = m2
        .base()
        .state_id(w2)
        .ok_or_else(|| BisimError::UnknownState(w2.to_owned()))?;

    // (a) point valuations agree
    let v1 = m.base().valuation(wid);
    let v2 = m2.base().valuation(wid2);
    if v1 != v2 {
        let atom = v1.symmetric_difference(v2).next().unwrap().clone();
        return Ok(Some(Distinguisher::PointAtom(atom)));
    }

    let p1 = GlobalProfile::build(m)?;
    let p2 = GlobalProfile::build(m2)?;

    // (b) same realized valuations
    let r1: BTreeSet<_> = p1.realized().into_iter().cloned().collect();
    let r2: BTreeSet<_> = p2.realized().into_iter().cloned().collect();
    if let Some(v) = r1.difference(&r2).next() {
        return Ok(Some(Distinguisher::RealizedValuation {
            valuation: v.clone(),
            in_first: true,
        }));
    }
    if let Some(v) = r2.difference(&r1).next() {
        return Ok(Some(Distinguisher::RealizedValuation {
            valuation: v.clone(),
            in_first: false,
        }));
    }

    // (c) same Kh facts over every pair of class unions
    let shared: Vec<BTreeSet<String>> = r1.into_iter().collect();
    let nmasks = 1u32 << shared.len();
    for agent in m.agents() {
        for cond_mask in 0..nmasks {
            for goal_mask in 0..nmasks {
                let f1 = p1.kh_fact(agent, &shared, cond_mask, goal_mask);
                let f2 = p2.kh_fact(agent, &shared, cond_mask, goal_mask);
                if f1 != f2 {
                    let pick = |mask: u32| {
                        shared
                            .iter()
                            .enumerate()
                            .filter(|(k, _)| mask & (1 << *k) != 0)
                            .map(|(_, v)| v.clone())
                            .collect()
                    };
                    return Ok(Some(Distinguisher::KhFact {
                        agent: agent.clone(),
                        cond: pick(cond_mask),
                        goal: pick(goal_mask),
                        in_first: f1,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Decide whether two finite pointed models satisfy the same formulas.
pub fn equivalent(m: &Ults, w: &str, m2: &Ults, w2: &str) -> Result<bool, BisimError> {
    Ok(find_distinguisher(m, w, m2, w2)?.is_none())
}

#[derive(Debug, Clone)]
pub enum BisimOutcome {
    /// The certified relation containing the given point pair.
    Bisimilar(BisimRelation),
    /// The first distinguishing fact found.
    Distinguished(Distinguisher),
    /// The profile comparison succeeded but certification failed; this
    /// indicates a bug and is never expected.
    CertificationFailed(Violation),
}

impl BisimOutcome {
    pub fn is_bisimilar(&self) -> bool {
        matches!(self, BisimOutcome::Bisimilar(_))
    }
}

/// Decide bisimilarity of finite pointed models by building the relation of
/// all equivalent state pairs and certifying it with [`verify_bisim`].
pub fn bisimilar(m: &Ults, w: &str, m2: &Ults, w2: &str) -> Result<BisimOutcome, BisimError> {
    match find_distinguisher(m, w, m2, w2)? {
        Some(d) => Ok(BisimOutcome::Distinguished(d)),
        None => {
            // model-level facts agree, so states pair up by valuation
            let mut pairs = BTreeSet::new();
            for u in 0..m.num_states() {
                for v in 0..m2.num_states() {
                    if m.base().valuation(u) == m2.base().valuation(v) {
                        pairs.insert((u, v));
                    }
                }
            }
            let z = BisimRelation { pairs };
            match verify_bisim(m, m2, &z)? {
                BisimCheck::Ok => Ok(BisimOutcome::Bisimilar(z)),
                BisimCheck::Fail(v) => Ok(BisimOutcome::CertificationFailed(v)),
            }
        }
    }
}

/// Within a single model, two states satisfy the same formulas iff they share
/// a valuation: Kh facts are global and every other clause is propositional.
/// Returns, per state, the index of its equivalence class.
pub fn same_model_equivalence_classes(m: &Ults) -> Vec<usize> {
    let classes = valuation_classes(m);
    let mut out = vec![0; m.num_states()];
    for (k, (_, class)) in classes.iter().enumerate() {
        for i in class.iter() {
            out[i] = k;
        }
    }
    out
}

/// Indicator formula for a set of valuations over the combined atom universe:
/// the disjunction over valuations of the conjunction of signed atoms.
fn indicator(valuations: &[&BTreeSet<String>], universe: &[String]) -> SurfaceFormula {
    if valuations.is_empty() {
        return SurfaceFormula::Bot;
    }
    let conj = |v: &BTreeSet<String>| {
        let mut lits: Vec<SurfaceFormula> = Vec::new();
        for atom in universe {
            let lit = if v.contains(atom) {
                SurfaceFormula::atom(atom.clone())
            } else {
                SurfaceFormula::neg(SurfaceFormula::atom(atom.clone()))
            };
            lits.push(lit);
        }
        lits.into_iter()
            .reduce(SurfaceFormula::and)
            .unwrap_or(SurfaceFormula::Top)
    };
    valuations
        .iter()
        .map(|v| conj(v))
        .reduce(SurfaceFormula::or)
        .unwrap()
}

/// Search for a formula telling the two pointed models apart, with Kh-nesting
/// at most `maxdepth` and propositional arguments drawn from valuation-class
/// indicator combinations.
///
/// Because Kh formulas are globally true or false, their truth values are
/// propositionally definable sets, so any formula of nesting depth two or
/// more is equivalent to a Boolean combination of depth-one facts; depths
/// beyond one therefore add no distinguishing power, and the search is
/// exhaustive up to semantic equivalence.
pub fn find_distinguishing_formula(
    m: &Ults,
    w: &str,
    m2: &Ults,
    w2: &str,
    maxdepth: usize,
) -> Result<Option<Formula>, BisimError> {
    let universe: Vec<String> = {
        let mut u: Vec<String> = m.base().atoms().to_vec();
        u.extend(m2.base().atoms().iter().cloned());
        u.sort();
        u.dedup();
        u
    };
    let agents = AgentSet::new(m.agents().iter().cloned()).expect("models have agents");

    let dist = match find_distinguisher(m, w, m2, w2)? {
        None => return Ok(None),
        Some(d) => d,
    };
    let surface = match dist {
        Distinguisher::PointAtom(p) => SurfaceFormula::atom(p),
        Distinguisher::RealizedValuation { valuation, .. } => {
            if maxdepth == 0 {
                return Ok(None);
            }
            SurfaceFormula::exists(indicator(&[&valuation], &universe))
        }
        Distinguisher::KhFact { agent, cond, goal, .. } => {
            if maxdepth == 0 {
                return Ok(None);
            }
            let cond_refs: Vec<&BTreeSet<String>> = cond.iter().collect();
            let goal_refs: Vec<&BTreeSet<String>> = goal.iter().collect();
            SurfaceFormula::kh(
                agent,
                indicator(&cond_refs, &universe),
                indicator(&goal_refs, &universe),
            )
        }
    };
    let formula = surface.desugar(&agents).expect("agents are nonempty");
    Ok(Some(formula))
}

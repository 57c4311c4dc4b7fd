//! Satisfiability and validity by bounded model search, axiom schemas, and
//! the randomized soundness harness.
//!
//! The search enumerates candidate models of a restricted shape: states carry
//! distinct valuations over the formula's atoms; each distinct Kh argument
//! pair gets one action whose relation is either empty or the rectangle
//! between the guessed extensions of its arguments; plan-set collections are
//! singletons of those actions, chosen per agent, plus an inert action. This
//! is the shape of the model a satisfiable formula is guaranteed to have
//! within the size bound, so exhausting it decides satisfiability; every
//! candidate is verified with the real model checker before being accepted.

use std::collections::BTreeMap;
use std::fmt;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::checker::{extension, holds_universally, CheckError};
use crate::gen::{random_surface_formula, random_ults, FormulaGenConfig, ModelGenConfig};
use crate::model::{emp_fail, Lts, Plan, PlanSet, Ults};
use crate::syntax::{kh_pairs, subformula_closure, Agent, AgentSet, Formula, SurfaceFormula, BOT_ATOM};

/// The inert action realizing the always-present dummy plan set.
const DUMMY_ACTION: &str = "d";

/// State-count bound for the bounded search: each Kh occurrence contributes
/// at most two selected states per action, plus the recursive selections
/// bounded by the closure size.
pub fn sat_bound(f: &Formula) -> usize {
    let closure = subformula_closure(f).len();
    let pairs = distinct_pairs(f).len();
    1 + 2 * closure * (pairs + 1)
}

fn distinct_pairs(f: &Formula) -> Vec<(Formula, Formula)> {
    let mut out: Vec<(Formula, Formula)> = Vec::new();
    for (_, a, b) in kh_pairs(f) {
        if !out.contains(&(a.clone(), b.clone())) {
            out.push((a, b));
        }
    }
    out
}

/// The candidate-model shape derived from a formula.
#[derive(Debug, Clone)]
pub struct SearchShape {
    /// Atoms of the formula, the reserved falsum atom excluded (it is false
    /// in every model).
    pub atoms: Vec<String>,
    /// Distinct Kh argument pairs; pair `j` is realized by action `k{j}`.
    pub pairs: Vec<(Formula, Formula)>,
    /// Kh subformula instances as (agent, pair index).
    pub triples: Vec<(Agent, usize)>,
    pub agents: Vec<Agent>,
    /// The state-count bound `sat_bound(f)`.
    pub bound: usize,
}

impl SearchShape {
    pub fn of(f: &Formula, agents: &AgentSet) -> SearchShape {
        let pairs = distinct_pairs(f);
        let mut triples = Vec::new();
        for (i, a, b) in kh_pairs(f) {
            let idx = pairs.iter().position(|(x, y)| *x == a && *y == b).unwrap();
            if !triples.contains(&(i.clone(), idx)) {
                triples.push((i, idx));
            }
        }
        SearchShape {
            atoms: f.atoms().into_iter().filter(|a| a != BOT_ATOM).collect(),
            pairs,
            triples,
            agents: agents.as_slice().to_vec(),
            bound: sat_bound(f),
        }
    }
}

/// Search result: a verified witness model or exhaustion of the bound.
#[derive(Debug, Clone)]
pub enum SatOutcome {
    Sat { model: Ults, state: String },
    Unsat { bound: usize },
}

impl SatOutcome {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatOutcome::Sat { .. })
    }
}

/// Evaluate the closure of `f` over a fixed set of valuations, reading Kh
/// truth from the guess; returns per-formula extensions as bitmasks over the
/// valuation list.
fn guess_extensions(
    closure: &[Formula],
    shape: &SearchShape,
    vals: &[u32],
    guess: u32,
) -> BTreeMap<Formula, u64> {
    let mut ext: BTreeMap<Formula, u64> = BTreeMap::new();
    let all: u64 = if vals.len() == 64 { !0 } else { (1u64 << vals.len()) - 1 };
    for g in closure {
        let bits = match g {
            Formula::Atom(p) => match shape.atoms.iter().position(|a| a == p) {
                Some(k) => {
                    let mut b = 0u64;
                    for (s, v) in vals.iter().enumerate() {
                        if v & (1 << k) != 0 {
                            b |= 1 << s;
                        }
                    }
                    b
                }
                None => 0,
            },
            Formula::Neg(h) => !ext[h.as_ref()] & all,
            Formula::Or(a, b) => ext[a.as_ref()] | ext[b.as_ref()],
            Formula::Kh(i, a, b) => {
                let idx = shape
                    .pairs
                    .iter()
                    .position(|(x, y)| x == a.as_ref() && y == b.as_ref())
                    .unwrap();
                let t = shape
                    .triples
                    .iter()
                    .position(|(ag, j)| ag == i && *j == idx)
                    .unwrap();
                if guess & (1 << t) != 0 {
                    all
                } else {
                    0
                }
            }
        };
        ext.insert(g.clone(), bits);
    }
    ext
}

/// Build the candidate ULTS for a valuation subset and a Kh-truth guess.
fn build_candidate(shape: &SearchShape, closure: &[Formula], vals: &[u32], guess: u32) -> Ults {
    let ext = guess_extensions(closure, shape, vals, guess);
    let states: Vec<(String, Vec<String>)> = vals
        .iter()
        .enumerate()
        .map(|(s, v)| {
            let val = shape
                .atoms
                .iter()
                .enumerate()
                .filter(|(k, _)| v & (1 << *k) != 0)
                .map(|(_, a)| a.clone())
                .collect();
            (format!("s{s}"), val)
        })
        .collect();

    let mut actions: Vec<String> = (0..shape.pairs.len()).map(|j| format!("k{j}")).collect();
    actions.push(DUMMY_ACTION.to_owned());

    let mut rel: BTreeMap<String, Vec<(String, String)>> = BTreeMap::new();
    for (j, (cond, goal)) in shape.pairs.iter().enumerate() {
        let on = shape
            .triples
            .iter()
            .enumerate()
            .any(|(t, (_, pj))| *pj == j && guess & (1 << t) != 0);
        let mut pairs = Vec::new();
        if on {
            let cbits = ext[cond];
            let gbits = ext[goal];
            for u in 0..vals.len() {
                if cbits & (1 << u) == 0 {
                    continue;
                }
                for v in 0..vals.len() {
                    if gbits & (1 << v) != 0 {
                        pairs.push((format!("s{u}"), format!("s{v}")));
                    }
                }
            }
        }
        rel.insert(format!("k{j}"), pairs);
    }
    rel.insert(DUMMY_ACTION.to_owned(), Vec::new());

    let base = Lts::new(shape.atoms.clone(), states, actions, rel)
        .expect("candidate model is well-formed");

    let mut plansets: BTreeMap<Agent, Vec<PlanSet>> = BTreeMap::new();
    for agent in &shape.agents {
        let mut sets = Vec::new();
        for (t, (ag, j)) in shape.triples.iter().enumerate() {
            if ag == agent && guess & (1 << t) != 0 {
                sets.push(PlanSet::singleton(Plan(vec![format!("k{j}")])));
            }
        }
        sets.push(PlanSet::singleton(Plan(vec![DUMMY_ACTION.to_owned()])));
        plansets.insert(agent.clone(), sets);
    }
    Ults::new(base, shape.agents.clone(), plansets).expect("candidate plan sets are disjoint")
}

fn combinations(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    struct Combos {
        n: usize,
        k: usize,
        cur: Option<Vec<usize>>,
    }
    impl Iterator for Combos {
        type Item = Vec<usize>;
        fn next(&mut self) -> Option<Vec<usize>> {
            let cur = self.cur.as_mut()?;
            let out = cur.clone();
            // advance to the next k-combination in lexicographic order
            let mut i = self.k;
            loop {
                if i == 0 {
                    self.cur = None;
                    break;
                }
                i -= 1;
                if cur[i] < self.n - (self.k - i) {
                    cur[i] += 1;
                    for j in i + 1..self.k {
                        cur[j] = cur[j - 1] + 1;
                    }
                    break;
                }
            }
            Some(out)
        }
    }
    let first = if k <= n { Some((0..k).collect()) } else { None };
    Combos { n, k, cur: first }
}

/// Decide satisfiability of `f` over the agent set by bounded search.
///
/// Worst-case exponential in the number of atoms and Kh subformulas, which
/// matches the problem's hardness; intended for desk-scale formulas.
pub fn is_satisfiable(f: &Formula, agents: &AgentSet) -> Result<SatOutcome, CheckError> {
    for agent in f.agents() {
        if !agents.contains(&agent) {
            return Err(CheckError::UnknownAgent(agent.id().to_owned()));
        }
    }
    let shape = SearchShape::of(f, agents);
    let closure = subformula_closure(f);
    let nvals: u32 = 1 << shape.atoms.len();
    let max_states = (nvals as usize).min(shape.bound).min(64);
    let nguesses: u32 = 1 << shape.triples.len();

    for size in 1..=max_states {
        for combo in combinations(nvals as usize, size) {
            let vals: Vec<u32> = combo.iter().map(|i| *i as u32).collect();
            for guess in 0..nguesses {
                let candidate = build_candidate(&shape, &closure, &vals, guess);
                let ext = extension(&candidate, f).expect("candidate covers the agents");
                let witness = ext.states.iter().next();
                if let Some(w) = witness {
                    let state = candidate.base().state_name(w).to_owned();
                    return Ok(SatOutcome::Sat {
                        model: candidate,
                        state,
                    });
                }
            }
        }
    }
    Ok(SatOutcome::Unsat { bound: shape.bound })
}

/// `f` is valid iff `~f` is unsatisfiable.
pub fn is_valid(f: &Formula, agents: &AgentSet) -> Result<bool, CheckError> {
    Ok(!is_satisfiable(&Formula::neg(f.clone()), agents)?.is_sat())
}

// ---------------------------------------------------------------------------
// Axiom schemas
// ---------------------------------------------------------------------------

/// The axiom schemas of the proof systems, as instantiable templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AxiomSchema {
    /// `phi | ~phi`, a canonical tautology instance.
    TautInstance,
    /// `A(phi -> psi) -> (A phi -> A psi)`
    DistA,
    /// `A phi -> phi`
    TA,
    /// `Kh[i](psi, phi) -> A Kh[i](psi, phi)`
    FourKhA,
    /// `~Kh[i](psi, phi) -> A ~Kh[i](psi, phi)`
    FiveKhA,
    /// `(E psi & Kh[i](psi, phi)) -> E phi`
    KhE,
    /// `(A(chi -> psi) & Kh[i](psi, phi) & A(phi -> theta)) -> Kh[i](chi, theta)`
    KhA,
    /// `A ~psi -> Kh[i](psi, phi)`
    SCond,
    /// `Kh[i](false, phi)`
    Cond,
    /// `A(psi -> phi) -> Kh[i](psi, phi)`; valid over plan-complete models
    /// only.
    Emp,
    /// `(Kh[i](psi, phi) & Kh[i](phi, chi)) -> Kh[i](psi, chi)`; valid over
    /// plan-complete models only.
    CompKh,
}

impl AxiomSchema {
    pub const ALL: [AxiomSchema; 11] = [
        AxiomSchema::TautInstance,
        AxiomSchema::DistA,
        AxiomSchema::TA,
        AxiomSchema::FourKhA,
        AxiomSchema::FiveKhA,
        AxiomSchema::KhE,
        AxiomSchema::KhA,
        AxiomSchema::SCond,
        AxiomSchema::Cond,
        AxiomSchema::Emp,
        AxiomSchema::CompKh,
    ];

    /// The schemas valid over every model.
    pub const SOUND: [AxiomSchema; 9] = [
        AxiomSchema::TautInstance,
        AxiomSchema::DistA,
        AxiomSchema::TA,
        AxiomSchema::FourKhA,
        AxiomSchema::FiveKhA,
        AxiomSchema::KhE,
        AxiomSchema::KhA,
        AxiomSchema::SCond,
        AxiomSchema::Cond,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AxiomSchema::TautInstance => "TAUT",
            AxiomSchema::DistA => "DISTA",
            AxiomSchema::TA => "TA",
            AxiomSchema::FourKhA => "4KhA",
            AxiomSchema::FiveKhA => "5KhA",
            AxiomSchema::KhE => "KhE",
            AxiomSchema::KhA => "KhA",
            AxiomSchema::SCond => "SCOND",
            AxiomSchema::Cond => "COND",
            AxiomSchema::Emp => "EMP",
            AxiomSchema::CompKh => "COMPKh",
        }
    }

    pub fn from_name(name: &str) -> Option<AxiomSchema> {
        AxiomSchema::ALL.iter().copied().find(|s| s.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for AxiomSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// Metavariable bindings for schema instantiation.
#[derive(Debug, Clone, Default)]
pub struct Bindings {
    pub psi: Option<SurfaceFormula>,
    pub phi: Option<SurfaceFormula>,
    pub chi: Option<SurfaceFormula>,
    pub theta: Option<SurfaceFormula>,
    pub agent: Option<Agent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schema {schema} needs a binding for `{metavariable}`")]
pub struct InstantiationError {
    pub schema: &'static str,
    pub metavariable: &'static str,
}

pub fn instantiate(schema: AxiomSchema, b: &Bindings) -> Result<SurfaceFormula, InstantiationError> {
    use SurfaceFormula as S;
    let need = |f: &Option<SurfaceFormula>, name: &'static str| {
        f.clone().ok_or(InstantiationError {
            schema: schema.name(),
            metavariable: name,
        })
    };
    let need_agent = |a: &Option<Agent>| {
        a.clone().ok_or(InstantiationError {
            schema: schema.name(),
            metavariable: "i",
        })
    };
    Ok(match schema {
        AxiomSchema::TautInstance => {
            let phi = need(&b.phi, "phi")?;
            S::or(phi.clone(), S::neg(phi))
        }
        AxiomSchema::DistA => {
            let phi = need(&b.phi, "phi")?;
            let psi = need(&b.psi, "psi")?;
            S::implies(
                S::always(S::implies(phi.clone(), psi.clone())),
                S::implies(S::always(phi), S::always(psi)),
            )
        }
        AxiomSchema::TA => {
            let phi = need(&b.phi, "phi")?;
            S::implies(S::always(phi.clone()), phi)
        }
        AxiomSchema::FourKhA => {
            let psi = need(&b.psi, "psi")?;
            let phi = need(&b.phi, "phi")?;
            let i = need_agent(&b.agent)?;
            let kh = S::kh(i, psi, phi);
            S::implies(kh.clone(), S::always(kh))
        }
        AxiomSchema::FiveKhA => {
            let psi = need(&b.psi, "psi")?;
            let phi = need(&b.phi, "phi")?;
            let i = need_agent(&b.agent)?;
            let nkh = S::neg(S::kh(i, psi, phi));
            S::implies(nkh.clone(), S::always(nkh))
        }
        AxiomSchema::KhE => {
            let psi = need(&b.psi, "psi")?;
            let phi = need(&b.phi, "phi")?;
            let i = need_agent(&b.agent)?;
            S::implies(
                S::and(S::exists(psi.clone()), S::kh(i, psi, phi.clone())),
                S::exists(phi),
            )
        }
        AxiomSchema::KhA => {
            let psi = need(&b.psi, "psi")?;
            let phi = need(&b.phi, "phi")?;
            let chi = need(&b.chi, "chi")?;
            let theta = need(&b.theta, "theta")?;
            let i = need_agent(&b.agent)?;
            S::implies(
                S::and(
                    S::and(
                        S::always(S::implies(chi.clone(), psi.clone())),
                        S::kh(i.clone(), psi, phi.clone()),
                    ),
                    S::always(S::implies(phi, theta.clone())),
                ),
                S::kh(i, chi, theta),
            )
        }
        AxiomSchema::SCond => {
            let psi = need(&b.psi, "psi")?;
            let phi = need(&b.phi, "phi")?;
            let i = need_agent(&b.agent)?;
            S::implies(S::always(S::neg(psi.clone())), S::kh(i, psi, phi))
        }
        AxiomSchema::Cond => {
            let phi = need(&b.phi, "phi")?;
            let i = need_agent(&b.agent)?;
            S::kh(i, S::Bot, phi)
        }
        AxiomSchema::Emp => {
            let psi = need(&b.psi, "psi")?;
            let phi = need(&b.phi, "phi")?;
            let i = need_agent(&b.agent)?;
            S::implies(
                S::always(S::implies(psi.clone(), phi.clone())),
                S::kh(i, psi, phi),
            )
        }
        AxiomSchema::CompKh => {
            let psi = need(&b.psi, "psi")?;
            let phi = need(&b.phi, "phi")?;
            let chi = need(&b.chi, "chi")?;
            let i = need_agent(&b.agent)?;
            S::implies(
                S::and(
                    S::kh(i.clone(), psi.clone(), phi.clone()),
                    S::kh(i.clone(), phi, chi.clone()),
                ),
                S::kh(i, psi, chi),
            )
        }
    })
}

// ---------------------------------------------------------------------------
// Soundness harness
// ---------------------------------------------------------------------------

/// A schema instance falsified somewhere on a generated model.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub model: Ults,
    pub instance: SurfaceFormula,
    pub state: String,
}

#[derive(Debug, Clone)]
pub struct SchemaReport {
    pub schema: AxiomSchema,
    pub trials: usize,
    pub counterexamples: usize,
    pub first_counterexample: Option<Box<Counterexample>>,
}

#[derive(Debug, Clone)]
pub struct HarnessReport {
    pub per_schema: Vec<SchemaReport>,
}

impl HarnessReport {
    /// Counterexamples among the always-sound schemas.
    pub fn unsound_hits(&self) -> usize {
        self.per_schema
            .iter()
            .filter(|r| AxiomSchema::SOUND.contains(&r.schema))
            .map(|r| r.counterexamples)
            .sum()
    }
}

/// Test schemas against random instantiations on random models. EMP and
/// COMPKh additionally get the known falsifying fixture as their first trial,
/// so their counterexample count is positive whenever they are included.
pub fn soundness_harness(
    schemas: &[AxiomSchema],
    trials: usize,
    max_states: usize,
    seed: u64,
) -> HarnessReport {
    let model_cfg = ModelGenConfig {
        max_states,
        ..ModelGenConfig::default()
    };
    let mut per_schema = Vec::new();
    for &schema in schemas {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ schema_seed(schema));
        let mut counterexamples = 0;
        let mut first = None;
        let mut executed = 0;

        if matches!(schema, AxiomSchema::Emp | AxiomSchema::CompKh) {
            let m = emp_fail();
            let b = Bindings {
                psi: Some(SurfaceFormula::atom("p")),
                phi: Some(if schema == AxiomSchema::Emp {
                    SurfaceFormula::atom("p")
                } else {
                    SurfaceFormula::atom("q")
                }),
                chi: Some(SurfaceFormula::atom("r")),
                theta: None,
                agent: Some(Agent::new("1")),
            };
            let instance = instantiate(schema, &b).unwrap();
            executed += 1;
            if let Some(cx) = falsify(&m, &instance) {
                counterexamples += 1;
                first = Some(Box::new(cx));
            }
        }

        while executed < trials {
            executed += 1;
            let m = random_ults(&mut rng, &model_cfg);
            let agents: Vec<Agent> = m.agents().to_vec();
            let fcfg = FormulaGenConfig {
                atoms: model_cfg.atoms.clone(),
                agents: agents.clone(),
                max_depth: 2,
                kh_depth: 1,
            };
            let b = Bindings {
                psi: Some(random_surface_formula(&mut rng, &fcfg)),
                phi: Some(random_surface_formula(&mut rng, &fcfg)),
                chi: Some(random_surface_formula(&mut rng, &fcfg)),
                theta: Some(random_surface_formula(&mut rng, &fcfg)),
                agent: Some(agents[rng.gen_range(0..agents.len())].clone()),
            };
            let instance = instantiate(schema, &b).unwrap();
            if let Some(cx) = falsify(&m, &instance) {
                counterexamples += 1;
                if first.is_none() {
                    first = Some(Box::new(cx));
                }
            }
        }
        per_schema.push(SchemaReport {
            schema,
            trials: executed,
            counterexamples,
            first_counterexample: first,
        });
    }
    HarnessReport { per_schema }
}

fn schema_seed(schema: AxiomSchema) -> u64 {
    AxiomSchema::ALL.iter().position(|s| *s == schema).unwrap() as u64 + 1
}

/// Evaluate an instance on a model; a counterexample is a state falsifying it.
fn falsify(m: &Ults, instance: &SurfaceFormula) -> Option<Counterexample> {
    let agents = AgentSet::new(m.agents().iter().cloned()).unwrap();
    let f = instance.desugar(&agents).unwrap();
    if holds_universally(m, &f).unwrap() {
        return None;
    }
    let ext = extension(m, &f).unwrap();
    let bad = (0..m.num_states()).find(|w| !ext.states.contains(*w)).unwrap();
    Some(Counterexample {
        model: m.clone(),
        instance: instance.clone(),
        state: m.base().state_name(bad).to_owned(),
    })
}

/// Check a schema's random instances on translated plan-complete models,
/// where EMP and COMPKh are expected to hold.
pub fn schema_holds_on_model(m: &Ults, schema: AxiomSchema, rng: &mut ChaCha8Rng) -> bool {
    let agents: Vec<Agent> = m.agents().to_vec();
    let fcfg = FormulaGenConfig {
        atoms: m.base().atoms().to_vec(),
        agents: agents.clone(),
        max_depth: 2,
        kh_depth: 1,
    };
    let b = Bindings {
        psi: Some(random_surface_formula(rng, &fcfg)),
        phi: Some(random_surface_formula(rng, &fcfg)),
        chi: Some(random_surface_formula(rng, &fcfg)),
        theta: Some(random_surface_formula(rng, &fcfg)),
        agent: Some(agents[rng.gen_range(0..agents.len())].clone()),
    };
    let instance = instantiate(schema, &b).unwrap();
    falsify(m, &instance).is_none()
}

//! Seeded random models and formulas for the soundness harness and the
//! property tests.

use std::collections::{BTreeMap, BTreeSet};

use rand::prelude::*;

use crate::model::{Lts, Plan, PlanSet, Ults};
use crate::syntax::{Agent, SurfaceFormula};

/// Shape bounds for random model generation.
#[derive(Debug, Clone)]
pub struct ModelGenConfig {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_plansets_per_agent: usize,
    pub max_plans_per_set: usize,
    pub max_plan_len: usize,
    pub atoms: Vec<String>,
    pub agents: Vec<Agent>,
    pub edge_prob: f64,
    /// Probability that a declared action has no relation at all.
    pub undefined_action_prob: f64,
}

impl Default for ModelGenConfig {
    fn default() -> Self {
        ModelGenConfig {
            max_states: 6,
            max_actions: 3,
            max_plansets_per_agent: 3,
            max_plans_per_set: 2,
            max_plan_len: 3,
            atoms: vec!["p".into(), "q".into(), "r".into()],
            agents: vec![Agent::new("1"), Agent::new("2")],
            edge_prob: 0.35,
            undefined_action_prob: 0.1,
        }
    }
}

const ACTION_NAMES: [&str; 6] = ["a", "b", "c", "e", "g", "h"];

pub fn random_lts(rng: &mut impl Rng, cfg: &ModelGenConfig) -> Lts {
    let n = rng.gen_range(1..=cfg.max_states);
    let states: Vec<(String, Vec<String>)> = (0..n)
        .map(|i| {
            let val = cfg
                .atoms
                .iter()
                .filter(|_| rng.gen_bool(0.5))
                .cloned()
                .collect();
            (format!("s{i}"), val)
        })
        .collect();
    let nact = rng.gen_range(1..=cfg.max_actions.min(ACTION_NAMES.len()));
    let actions: Vec<String> = ACTION_NAMES[..nact].iter().map(|s| s.to_string()).collect();
    let mut rel = BTreeMap::new();
    for a in &actions {
        if rng.gen_bool(cfg.undefined_action_prob) {
            continue;
        }
        let mut pairs = Vec::new();
        for u in 0..n {
            for v in 0..n {
                if rng.gen_bool(cfg.edge_prob) {
                    pairs.push((format!("s{u}"), format!("s{v}")));
                }
            }
        }
        rel.insert(a.clone(), pairs);
    }
    Lts::new(cfg.atoms.clone(), states, actions, rel).expect("generated LTS is well-formed")
}

fn random_plan(rng: &mut impl Rng, actions: &[String], max_len: usize) -> Plan {
    let len = rng.gen_range(0..=max_len);
    Plan((0..len).map(|_| actions.choose(rng).unwrap().clone()).collect())
}

pub fn random_ults(rng: &mut impl Rng, cfg: &ModelGenConfig) -> Ults {
    let base = random_lts(rng, cfg);
    let actions: Vec<String> = base.actions().to_vec();
    let mut plansets = BTreeMap::new();
    for agent in &cfg.agents {
        let nsets = rng.gen_range(1..=cfg.max_plansets_per_agent);
        // draw a pool of distinct plans, then split it into nonempty groups
        let want = nsets * cfg.max_plans_per_set;
        let mut pool: BTreeSet<Plan> = BTreeSet::new();
        for _ in 0..want * 3 {
            if pool.len() >= want {
                break;
            }
            pool.insert(random_plan(rng, &actions, cfg.max_plan_len));
        }
        let mut pool: Vec<Plan> = pool.into_iter().collect();
        pool.shuffle(rng);
        let nsets = nsets.min(pool.len()).max(1);
        let mut sets: Vec<Vec<Plan>> = vec![Vec::new(); nsets];
        for (k, plan) in pool.into_iter().enumerate() {
            if k < nsets {
                sets[k].push(plan);
            } else if rng.gen_bool(0.4) {
                sets[rng.gen_range(0..nsets)].push(plan);
            }
        }
        let sets: Vec<PlanSet> = sets
            .into_iter()
            .filter(|s| !s.is_empty())
            .map(|s| PlanSet::new(s).unwrap())
            .collect();
        plansets.insert(agent.clone(), sets);
    }
    Ults::new(base, cfg.agents.clone(), plansets).expect("generated ULTS is well-formed")
}

/// Shape bounds for random formula generation.
#[derive(Debug, Clone)]
pub struct FormulaGenConfig {
    pub atoms: Vec<String>,
    pub agents: Vec<Agent>,
    pub max_depth: usize,
    /// Remaining Kh nesting budget.
    pub kh_depth: usize,
}

impl FormulaGenConfig {
    pub fn new(atoms: &[&str], agents: &[Agent], max_depth: usize, kh_depth: usize) -> Self {
        FormulaGenConfig {
            atoms: atoms.iter().map(|s| s.to_string()).collect(),
            agents: agents.to_vec(),
            max_depth,
            kh_depth,
        }
    }
}

pub fn random_surface_formula(rng: &mut impl Rng, cfg: &FormulaGenConfig) -> SurfaceFormula {
    gen_formula(rng, cfg, cfg.max_depth, cfg.kh_depth)
}

fn gen_formula(
    rng: &mut impl Rng,
    cfg: &FormulaGenConfig,
    depth: usize,
    kh: usize,
) -> SurfaceFormula {
    if depth == 0 {
        return leaf(rng, cfg);
    }
    let roll = rng.gen_range(0..100);
    match roll {
        0..=24 => leaf(rng, cfg),
        25..=44 => SurfaceFormula::neg(gen_formula(rng, cfg, depth - 1, kh)),
        45..=59 => SurfaceFormula::or(
            gen_formula(rng, cfg, depth - 1, kh),
            gen_formula(rng, cfg, depth - 1, kh),
        ),
        60..=74 => SurfaceFormula::and(
            gen_formula(rng, cfg, depth - 1, kh),
            gen_formula(rng, cfg, depth - 1, kh),
        ),
        75..=84 => SurfaceFormula::implies(
            gen_formula(rng, cfg, depth - 1, kh),
            gen_formula(rng, cfg, depth - 1, kh),
        ),
        _ => {
            if kh > 0 && !cfg.agents.is_empty() {
                let agent = cfg.agents.choose(rng).unwrap().clone();
                SurfaceFormula::kh(
                    agent,
                    gen_formula(rng, cfg, depth - 1, kh - 1),
                    gen_formula(rng, cfg, depth - 1, kh - 1),
                )
            } else {
                SurfaceFormula::neg(gen_formula(rng, cfg, depth - 1, kh))
            }
        }
    }
}

fn leaf(rng: &mut impl Rng, cfg: &FormulaGenConfig) -> SurfaceFormula {
    match rng.gen_range(0..10) {
        0 => SurfaceFormula::Top,
        1 => SurfaceFormula::Bot,
        _ => SurfaceFormula::atom(cfg.atoms.choose(rng).unwrap().clone()),
    }
}

//! Browser bindings: thin JSON-in/JSON-out wrappers over the core crate,
//! driving the static demo page in `www/`. Each function returns a JSON
//! object with an `ok` flag so the page can render errors inline.

use serde_json::json;
use wasm_bindgen::prelude::*;

use khlogic::bisim::{bisimilar, find_distinguishing_formula, BisimOutcome};
use khlogic::checker::ModelChecker;
use khlogic::model::{model_from_json, model_to_json, Model};
use khlogic::sat::{is_satisfiable, SatOutcome};
use khlogic::syntax::{parse, Agent, AgentSet, SurfaceFormula};
use khlogic::transform::{classify, lts_to_ults_ac, lts_to_ults_nu, ults_to_lts};
use khlogic::Ults;

fn err(message: impl std::fmt::Display) -> String {
    json!({"ok": false, "error": message.to_string()}).to_string()
}

fn load_ults(model_json: &str) -> Result<Ults, String> {
    match model_from_json(model_json).map_err(err)? {
        Model::Ults(m) => Ok(m),
        Model::Lts(l) => {
            // plain LTS files are checked through the plan-complete view
            Ok(lts_to_ults_nu(&l))
        }
    }
}

/// Check a formula on a model: returns the per-state truth map, the
/// extension, and the witnessing plan sets for a top-level `Kh`.
#[wasm_bindgen]
pub fn check_model(model_json: &str, formula: &str) -> String {
    let m = match load_ults(model_json) {
        Ok(m) => m,
        Err(e) => return e,
    };
    let agents = AgentSet::new(m.agents().iter().cloned()).expect("model has agents");
    let surface = match parse(formula, &agents) {
        Ok(f) => f,
        Err(e) => return err(e),
    };
    let core = match surface.desugar(&agents) {
        Ok(f) => f,
        Err(e) => return err(e),
    };
    let mut checker = ModelChecker::new(&m);
    let ext = match checker.extension(&core) {
        Ok(e) => e,
        Err(e) => return err(e),
    };
    let states: Vec<String> = ext
        .states
        .iter()
        .map(|i| m.base().state_name(i).to_owned())
        .collect();
    let mut witness_sets: Vec<String> = Vec::new();
    if let SurfaceFormula::Kh(i, a, b) = &surface {
        let cond = a.desugar(&agents).unwrap();
        let goal = b.desugar(&agents).unwrap();
        if let Ok(sets) = khlogic::checker::witnesses(&m, i, &cond, &goal) {
            witness_sets = sets.iter().map(|s| s.to_string()).collect();
        }
    }
    json!({
        "ok": true,
        "formula": surface.to_string(),
        "extension": states,
        "global": ext.states.len() == m.num_states(),
        "witnesses": witness_sets,
        "model": model_to_json(&Model::Ults(m)),
    })
    .to_string()
}

/// Bounded-search satisfiability; on success the witness model is returned
/// for rendering.
#[wasm_bindgen]
pub fn solve_formula(formula: &str, agents_csv: &str) -> String {
    let mut agent_list: Vec<Agent> = agents_csv
        .split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(Agent::new)
        .collect();
    if agent_list.is_empty() {
        agent_list.push(Agent::new("1"));
    }
    let agents = match AgentSet::new(agent_list) {
        Ok(a) => a,
        Err(e) => return err(e),
    };
    let surface = match parse(formula, &agents) {
        Ok(f) => f,
        Err(e) => return err(e),
    };
    let core = match surface.desugar(&agents) {
        Ok(f) => f,
        Err(e) => return err(e),
    };
    match is_satisfiable(&core, &agents) {
        Ok(SatOutcome::Sat { model, state }) => json!({
            "ok": true,
            "verdict": "sat",
            "state": state,
            "model": model_to_json(&Model::Ults(model)),
        })
        .to_string(),
        Ok(SatOutcome::Unsat { bound }) => {
            json!({"ok": true, "verdict": "unsat", "bound": bound}).to_string()
        }
        Err(e) => err(e),
    }
}

/// Classify a single-agent model and translate it (`lts`, `ults-nu`,
/// `ults-ac`).
#[wasm_bindgen]
pub fn classify_and_translate(model_json: &str, target: &str) -> String {
    let model = match model_from_json(model_json) {
        Ok(m) => m,
        Err(e) => return err(e),
    };
    let translated = match target {
        "lts" => {
            let m = match model {
                Model::Ults(m) => m,
                Model::Lts(_) => return err("input is already a plain LTS"),
            };
            match ults_to_lts(&m) {
                Ok(l) => model_to_json(&Model::Lts(l)),
                Err(e) => return json!({"ok": true, "rejected": e.to_string()}).to_string(),
            }
        }
        "ults-nu" => model_to_json(&Model::Ults(lts_to_ults_nu(model.base()))),
        "ults-ac" => model_to_json(&Model::Ults(lts_to_ults_ac(model.base()))),
        other => return err(format!("unknown target `{other}`")),
    };
    let flags = match model_from_json(model_json) {
        Ok(Model::Ults(m)) if m.agents().len() == 1 => match classify(&m) {
            Ok(r) => json!({
                "is_nu_style": r.is_nu_style,
                "is_active": r.is_active,
                "is_se_compositional": r.is_se_compositional,
            }),
            Err(_) => json!(null),
        },
        _ => json!(null),
    };
    json!({"ok": true, "model": translated, "class": flags}).to_string()
}

/// Compare two pointed models: bisimilarity verdict plus a distinguishing
/// formula when they differ.
#[wasm_bindgen]
pub fn compare_models(model_json: &str, state: &str, other_json: &str, other_state: &str) -> String {
    let m1 = match load_ults(model_json) {
        Ok(m) => m,
        Err(e) => return e,
    };
    let m2 = match load_ults(other_json) {
        Ok(m) => m,
        Err(e) => return e,
    };
    match bisimilar(&m1, state, &m2, other_state) {
        Ok(BisimOutcome::Bisimilar(z)) => json!({
            "ok": true,
            "verdict": true,
            "relation": z.name_pairs(&m1, &m2),
        })
        .to_string(),
        Ok(_) => {
            let formula = find_distinguishing_formula(&m1, state, &m2, other_state, 2)
                .ok()
                .flatten()
                .map(|f| f.to_string());
            json!({"ok": true, "verdict": false, "formula": formula}).to_string()
        }
        Err(e) => err(e),
    }
}

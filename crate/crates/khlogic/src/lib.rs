//! A toolkit for the knowing-how modality `Kh[i](cond, goal)` interpreted
//! over labeled transition systems with per-agent indistinguishability
//! between plans.
//!
//! - [`syntax`]: formula ASTs, parser, printer, closure utilities.
//! - [`model`]: LTS/ULTS representations, plans, strong executability, the
//!   plan-behavior algebra, and the JSON model format.
//! - [`checker`]: model checking over ULTSs (bottom-up labeling) and plain
//!   LTSs (via the behavior closure).
//! - [`bisim`]: bisimulation verification, equivalence deciding, and
//!   distinguishing-formula search.
//! - [`transform`]: SE-composition, model-class tests, and the
//!   semantics-preserving translations between LTSs and ULTSs.
//! - [`filtration`]: finite quotients through subformula-closed sets.
//! - [`sat`]: bounded-model satisfiability, validity, axiom schemas, and the
//!   randomized soundness harness.
//! - [`gen`]: seeded random models and formulas for the harness and tests.

pub mod bisim;
pub mod checker;
pub mod filtration;
pub mod gen;
pub mod model;
pub mod sat;
pub mod syntax;
pub mod transform;

pub use checker::{check_lts, check_ults, extension, holds_universally, witnesses, Extension};
pub use model::{
    behavior_compose, emp_fail, load_model, model_from_json, model_to_json, save_model, Lts,
    Model, Plan, PlanBehavior, PlanSet, Relation, StateSet, Ults,
};
pub use syntax::{kh_pairs, parse, subformula_closure, Agent, AgentSet, Formula, SurfaceFormula};

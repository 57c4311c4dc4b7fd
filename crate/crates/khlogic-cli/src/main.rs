//! Command-line front end. Exit codes: 0 affirmative/success, 1 negative
//! verdict, 2 usage or format error.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use khlogic::bisim::{bisimilar, equivalent, find_distinguishing_formula, BisimOutcome, Distinguisher};
use khlogic::checker::{check_lts, check_ults, witnesses};
use khlogic::filtration::{filtrate, verify_filtration};
use khlogic::model::{load_model, model_to_json, model_to_json_with_class_map, Model, PlanSet};
use khlogic::sat::{is_satisfiable, soundness_harness, AxiomSchema, SatOutcome};
use khlogic::syntax::{parse, subformula_closure, Agent, AgentSet, Formula, SurfaceFormula};
use khlogic::transform::{classify, lts_to_ults_ac, lts_to_ults_nu, ults_to_lts};
use khlogic::Ults;

#[derive(Parser)]
#[command(name = "khlogic", about = "Model checking, satisfiability, bisimulation, translations and filtration for the knowing-how modality over uncertainty-based transition systems", version)]
struct Cli {
    /// Emit machine-readable JSON instead of human-readable text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a formula at a state of a model.
    Check(CheckArgs),
    /// Decide satisfiability by bounded model search.
    Sat(SatArgs),
    /// Decide validity (unsatisfiability of the negation).
    Valid(SatArgs),
    /// Decide bisimilarity of two pointed models and certify the relation.
    Bisim(PairArgs),
    /// Decide logical equivalence of two pointed models.
    Equiv(PairArgs),
    /// Filtrate a model through the subformula closure of a formula.
    Filter(FilterArgs),
    /// Translate between LTS and ULTS representations.
    Translate(TranslateArgs),
    /// Report which model classes a single-agent model belongs to.
    Classify(ModelArg),
    /// Run the randomized axiom-schema soundness harness.
    Axioms(AxiomArgs),
}

#[derive(Args)]
struct CheckArgs {
    /// Model file (LTS or ULTS).
    #[arg(short, long)]
    model: PathBuf,
    /// State to evaluate at.
    #[arg(short = 'w', long)]
    state: String,
    /// Formula text.
    #[arg(short, long)]
    formula: String,
}

#[derive(Args)]
struct SatArgs {
    /// Formula text.
    #[arg(short, long)]
    formula: String,
    /// Comma-separated agent set; defaults to the agents in the formula,
    /// or `1` when it has none.
    #[arg(long)]
    agents: Option<String>,
}

#[derive(Args)]
struct PairArgs {
    /// First model file.
    #[arg(short, long)]
    model: PathBuf,
    /// State of the first model.
    #[arg(short = 'w', long)]
    state: String,
    /// Second model file.
    #[arg(short = 'n', long)]
    other: PathBuf,
    /// State of the second model.
    #[arg(short = 'x', long)]
    other_state: String,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(short, long)]
    model: PathBuf,
    #[arg(short, long)]
    formula: String,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TranslateTarget {
    /// ULTS to LTS (requires an active, SE-compositional model).
    Lts,
    /// LTS to the plan-complete ULTS (one singleton per behavior).
    UltsNu,
    /// LTS to the active SE-compositional ULTS over behavior actions.
    UltsAc,
}

#[derive(Args)]
struct TranslateArgs {
    #[arg(short, long)]
    model: PathBuf,
    #[arg(long, value_enum)]
    to: TranslateTarget,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ModelArg {
    #[arg(short, long)]
    model: PathBuf,
}

#[derive(Args)]
struct AxiomArgs {
    /// Random instantiations per schema.
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Comma-separated schema names; defaults to all.
    #[arg(long)]
    schemas: Option<String>,
    /// Maximum states of the random models.
    #[arg(long, default_value_t = 6)]
    max_states: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

/// Agents mentioned in the formula text, for models that do not carry an
/// agent set.
fn formula_agents(text: &str) -> AgentSet {
    let mut agents: BTreeSet<Agent> = BTreeSet::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i + 2 < bytes.len() {
        if bytes[i..].starts_with(b"Kh") {
            let mut j = i + 2;
            while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                j += 1;
            }
            if j < bytes.len() && bytes[j] == b'[' {
                let start = j + 1;
                let mut k = start;
                while k < bytes.len() && bytes[k] != b']' {
                    k += 1;
                }
                if k > start {
                    agents.insert(Agent::new(text[start..k].trim().to_owned()));
                }
                i = k;
                continue;
            }
        }
        i += 1;
    }
    if agents.is_empty() {
        agents.insert(Agent::new("1"));
    }
    AgentSet::new(agents).expect("nonempty by construction")
}

fn ults_agents(m: &Ults) -> AgentSet {
    AgentSet::new(m.agents().iter().cloned()).expect("models have agents")
}

fn load_ults(path: &PathBuf) -> Result<Ults, String> {
    match load_model(path).map_err(|e| e.to_string())? {
        Model::Ults(m) => Ok(m),
        Model::Lts(_) => Err(format!(
            "{} is a plain LTS; this command needs a ULTS (agents + plansets)",
            path.display()
        )),
    }
}

fn parse_with(text: &str, agents: &AgentSet) -> Result<(SurfaceFormula, Formula), String> {
    let surface = parse(text, agents).map_err(|e| e.to_string())?;
    let core = surface.desugar(agents).map_err(|e| e.to_string())?;
    Ok((surface, core))
}

fn planset_list(sets: &[PlanSet]) -> Vec<Vec<Vec<String>>> {
    sets.iter()
        .map(|s| s.iter().map(|p| p.actions().to_vec()).collect())
        .collect()
}

fn run(cli: &Cli) -> Result<ExitCode, String> {
    match &cli.command {
        Command::Check(args) => {
            let model = load_model(&args.model).map_err(|e| e.to_string())?;
            match model {
                Model::Ults(m) => {
                    let agents = ults_agents(&m);
                    let (surface, core) = parse_with(&args.formula, &agents)?;
                    let verdict =
                        check_ults(&m, &args.state, &core).map_err(|e| e.to_string())?;
                    let mut found: Vec<Vec<Vec<String>>> = Vec::new();
                    if let SurfaceFormula::Kh(i, a, b) = &surface {
                        let cond = a.desugar(&agents).map_err(|e| e.to_string())?;
                        let goal = b.desugar(&agents).map_err(|e| e.to_string())?;
                        let sets =
                            witnesses(&m, i, &cond, &goal).map_err(|e| e.to_string())?;
                        found = planset_list(&sets);
                    }
                    if cli.json {
                        println!(
                            "{}",
                            json!({"verdict": verdict, "state": args.state, "formula": surface.to_string(), "witnesses": found})
                        );
                    } else {
                        println!("{} at {}: {}", surface, args.state, verdict);
                        if !found.is_empty() {
                            let rendered: Vec<String> = found
                                .iter()
                                .map(|s| {
                                    let plans: Vec<String> = s
                                        .iter()
                                        .map(|p| {
                                            if p.is_empty() {
                                                "[ε]".to_owned()
                                            } else {
                                                format!("[{}]", p.join(","))
                                            }
                                        })
                                        .collect();
                                    format!("{{{}}}", plans.join(","))
                                })
                                .collect();
                            println!("witnesses: {}", rendered.join(" "));
                        }
                    }
                    Ok(bool_exit(verdict))
                }
                Model::Lts(l) => {
                    let agents = formula_agents(&args.formula);
                    let (surface, core) = parse_with(&args.formula, &agents)?;
                    let verdict = check_lts(&l, &args.state, &core).map_err(|e| e.to_string())?;
                    if cli.json {
                        println!(
                            "{}",
                            json!({"verdict": verdict, "state": args.state, "formula": surface.to_string()})
                        );
                    } else {
                        println!("{} at {}: {} (plain LTS semantics)", surface, args.state, verdict);
                    }
                    Ok(bool_exit(verdict))
                }
            }
        }
        Command::Sat(args) => {
            let agents = sat_agents(args)?;
            let (_, core) = parse_with(&args.formula, &agents)?;
            match is_satisfiable(&core, &agents).map_err(|e| e.to_string())? {
                SatOutcome::Sat { model, state } => {
                    let value = model_to_json(&Model::Ults(model));
                    if cli.json {
                        println!("{}", json!({"verdict": "sat", "state": state, "model": value}));
                    } else {
                        println!("SAT at state {state}");
                        println!("{}", serde_json::to_string_pretty(&value).unwrap());
                    }
                    Ok(ExitCode::SUCCESS)
                }
                SatOutcome::Unsat { bound } => {
                    if cli.json {
                        println!("{}", json!({"verdict": "unsat", "bound": bound}));
                    } else {
                        println!("UNSAT (state bound {bound} exhausted)");
                    }
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Valid(args) => {
            let agents = sat_agents(args)?;
            let (surface, core) = parse_with(&args.formula, &agents)?;
            let negated = Formula::neg(core);
            match is_satisfiable(&negated, &agents).map_err(|e| e.to_string())? {
                SatOutcome::Unsat { .. } => {
                    if cli.json {
                        println!("{}", json!({"verdict": "valid", "formula": surface.to_string()}));
                    } else {
                        println!("valid: {surface}");
                    }
                    Ok(ExitCode::SUCCESS)
                }
                SatOutcome::Sat { model, state } => {
                    let value = model_to_json(&Model::Ults(model));
                    if cli.json {
                        println!(
                            "{}",
                            json!({"verdict": "invalid", "countermodel": value, "state": state})
                        );
                    } else {
                        println!("not valid: {surface}");
                        println!("countermodel (falsified at {state}):");
                        println!("{}", serde_json::to_string_pretty(&value).unwrap());
                    }
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Bisim(args) => {
            let m1 = load_ults(&args.model)?;
            let m2 = load_ults(&args.other)?;
            let outcome = bisimilar(&m1, &args.state, &m2, &args.other_state)
                .map_err(|e| e.to_string())?;
            match outcome {
                BisimOutcome::Bisimilar(z) => {
                    let pairs = z.name_pairs(&m1, &m2);
                    if cli.json {
                        println!("{}", json!({"verdict": true, "relation": pairs}));
                    } else {
                        println!("bisimilar");
                        let rendered: Vec<String> =
                            pairs.iter().map(|(a, b)| format!("({a},{b})")).collect();
                        println!("certified relation: {}", rendered.join(" "));
                    }
                    Ok(ExitCode::SUCCESS)
                }
                BisimOutcome::Distinguished(d) => {
                    let formula = find_distinguishing_formula(
                        &m1,
                        &args.state,
                        &m2,
                        &args.other_state,
                        2,
                    )
                    .map_err(|e| e.to_string())?
                    .map(|f| f.to_string());
                    if cli.json {
                        println!(
                            "{}",
                            json!({"verdict": false, "fact": describe_distinguisher(&d), "formula": formula})
                        );
                    } else {
                        println!("not bisimilar: {}", describe_distinguisher(&d));
                        if let Some(f) = formula {
                            println!("distinguishing formula: {f}");
                        }
                    }
                    Ok(ExitCode::from(1))
                }
                BisimOutcome::CertificationFailed(v) => Err(format!(
                    "internal inconsistency: profiles agree but certification failed ({v})"
                )),
            }
        }
        Command::Equiv(args) => {
            let m1 = load_ults(&args.model)?;
            let m2 = load_ults(&args.other)?;
            let verdict = equivalent(&m1, &args.state, &m2, &args.other_state)
                .map_err(|e| e.to_string())?;
            let formula = if verdict {
                None
            } else {
                find_distinguishing_formula(&m1, &args.state, &m2, &args.other_state, 2)
                    .map_err(|e| e.to_string())?
                    .map(|f| f.to_string())
            };
            if cli.json {
                println!("{}", json!({"verdict": verdict, "distinguishing_formula": formula}));
            } else if verdict {
                println!("equivalent");
            } else {
                println!("not equivalent");
                if let Some(f) = formula {
                    println!("distinguishing formula: {f}");
                }
            }
            Ok(bool_exit(verdict))
        }
        Command::Filter(args) => {
            let m = load_ults(&args.model)?;
            let agents = ults_agents(&m);
            let (_, core) = parse_with(&args.formula, &agents)?;
            let sigma = subformula_closure(&core);
            let filt = filtrate(&m, &sigma).map_err(|e| e.to_string())?;
            let check = verify_filtration(&m, &sigma, &filt).map_err(|e| e.to_string())?;
            if !check.is_ok() {
                return Err(format!("filtration verification failed: {check:?}"));
            }
            let value =
                model_to_json_with_class_map(&Model::Ults(filt.model.clone()), Some(&filt.class_map));
            emit_model(cli, &args.output, value, &format!("filtration through the closure of {core} ({} classes)", filt.model.num_states()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Translate(args) => {
            let model = load_model(&args.model).map_err(|e| e.to_string())?;
            match args.to {
                TranslateTarget::Lts => {
                    let m = match model {
                        Model::Ults(m) => m,
                        Model::Lts(_) => {
                            return Err("input is already a plain LTS".to_owned());
                        }
                    };
                    match ults_to_lts(&m) {
                        Ok(l) => {
                            let value = model_to_json(&Model::Lts(l));
                            emit_model(cli, &args.output, value, "LTS over one action per plan set")?;
                            Ok(ExitCode::SUCCESS)
                        }
                        Err(e) => {
                            if cli.json {
                                println!("{}", json!({"verdict": "rejected", "reason": e.to_string()}));
                            } else {
                                println!("rejected: {e}");
                            }
                            Ok(ExitCode::from(1))
                        }
                    }
                }
                TranslateTarget::UltsNu | TranslateTarget::UltsAc => {
                    let base = model.base().clone();
                    let out = match args.to {
                        TranslateTarget::UltsNu => lts_to_ults_nu(&base),
                        _ => lts_to_ults_ac(&base),
                    };
                    let value = model_to_json(&Model::Ults(out));
                    emit_model(cli, &args.output, value, "translated ULTS")?;
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
        Command::Classify(args) => {
            let m = load_ults(&args.model)?;
            let report = classify(&m).map_err(|e| e.to_string())?;
            if cli.json {
                println!(
                    "{}",
                    json!({
                        "is_nu_style": report.is_nu_style,
                        "is_active": report.is_active,
                        "is_se_compositional": report.is_se_compositional,
                        "active_witness": report.active_witness.as_ref().map(|s| s.to_string()),
                        "compose_counterexample": report.compose_counterexample.as_ref().map(|c| c.reason.clone()),
                    })
                );
            } else {
                println!("plan-complete (one singleton per behavior): {}", report.is_nu_style);
                println!("active: {}", report.is_active);
                if let Some(w) = &report.active_witness {
                    println!("  witness: {w}");
                }
                println!("SE-compositional: {}", report.is_se_compositional);
                if let Some(c) = &report.compose_counterexample {
                    println!("  counterexample: {}", c.reason);
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Axioms(args) => {
            let schemas: Vec<AxiomSchema> = match &args.schemas {
                None => AxiomSchema::ALL.to_vec(),
                Some(names) => {
                    let mut out = Vec::new();
                    for name in names.split(',') {
                        out.push(
                            AxiomSchema::from_name(name.trim())
                                .ok_or_else(|| format!("unknown schema `{name}`"))?,
                        );
                    }
                    out
                }
            };
            let seed = std::env::var("KHOW_SEED")
                .ok()
                .and_then(|s| s.parse::<u64>().ok())
                .unwrap_or(0xC0FFEE);
            let report = soundness_harness(&schemas, args.trials, args.max_states, seed);
            if cli.json {
                let rows: Vec<_> = report
                    .per_schema
                    .iter()
                    .map(|r| {
                        json!({
                            "schema": r.schema.name(),
                            "trials": r.trials,
                            "counterexamples": r.counterexamples,
                            "first_counterexample": r.first_counterexample.as_ref().map(|c| json!({
                                "instance": c.instance.to_string(),
                                "state": c.state,
                                "model": model_to_json(&Model::Ults(c.model.clone())),
                            })),
                        })
                    })
                    .collect();
                println!("{}", json!({"seed": seed, "schemas": rows}));
            } else {
                println!("seed {seed}");
                for r in &report.per_schema {
                    println!(
                        "{:>7}: {} trials, {} counterexample(s)",
                        r.schema.name(),
                        r.trials,
                        r.counterexamples
                    );
                    if let Some(c) = &r.first_counterexample {
                        println!("         first: {} falsified at {}", c.instance, c.state);
                    }
                }
            }
            Ok(if report.unsound_hits() == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

fn sat_agents(args: &SatArgs) -> Result<AgentSet, String> {
    match &args.agents {
        Some(csv) => {
            let agents: Vec<Agent> = csv
                .split(',')
                .map(|s| Agent::new(s.trim().to_owned()))
                .filter(|a| !a.id().is_empty())
                .collect();
            AgentSet::new(agents).map_err(|e| e.to_string())
        }
        None => Ok(formula_agents(&args.formula)),
    }
}

fn describe_distinguisher(d: &Distinguisher) -> String {
    match d {
        Distinguisher::PointAtom(p) => format!("the points disagree on atom `{p}`"),
        Distinguisher::RealizedValuation { valuation, in_first } => {
            let side = if *in_first { "only the first" } else { "only the second" };
            format!("valuation {{{}}} is realized in {side} model", valuation.iter().cloned().collect::<Vec<_>>().join(","))
        }
        Distinguisher::KhFact { agent, in_first, .. } => {
            let side = if *in_first { "the first" } else { "the second" };
            format!("a Kh fact for agent {agent} holds only in {side} model")
        }
    }
}

fn emit_model(
    cli: &Cli,
    output: &Option<PathBuf>,
    value: serde_json::Value,
    note: &str,
) -> Result<(), String> {
    let text = serde_json::to_string_pretty(&value).unwrap();
    match output {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| e.to_string())?;
            if cli.json {
                println!("{}", json!({"written": path.display().to_string()}));
            } else {
                println!("wrote {} ({note})", path.display());
            }
        }
        None => {
            if cli.json {
                println!("{value}");
            } else {
                println!("{text}");
            }
        }
    }
    Ok(())
}

fn bool_exit(affirmative: bool) -> ExitCode {
    if affirmative {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

//! Formula syntax: the core AST, the surface language with derived
//! connectives, a recursive-descent parser, a precedence-aware printer, and
//! structural utilities (subformula closure, Kh-argument extraction,
//! desugaring of the universal modality).
//!
//! Concrete grammar (precedence from loosest to tightest, `->` is
//! right-associative):
//!
//! ```text
//! formula  := or ('->' formula)?
//! or       := and ('|' and)*
//! and      := unary ('&' unary)*
//! unary    := ('~' | 'A' | 'E') unary | primary
//! primary  := '(' formula ')'
//!           | 'Kh' '[' ident ']' '(' formula ',' formula ')'
//!           | 'true' | 'false' | ident
//! ident    := [A-Za-z0-9_]+   (excluding the keywords Kh, A, E, true, false)
//! ```

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// Reserved falsum atom. `false` desugars to `_bot & ~_bot`; model files may
/// not mention it, so its extension is empty in every model.
pub const BOT_ATOM: &str = "_bot";

/// An agent identifier, drawn from a finite nonempty agent set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Agent(pub String);

impl Agent {
    pub fn new(id: impl Into<String>) -> Self {
        Agent(id.into())
    }

    pub fn id(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for Agent {
    fn from(s: &str) -> Self {
        Agent(s.to_owned())
    }
}

/// A finite nonempty set of agents, kept sorted for deterministic iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentSet(Vec<Agent>);

impl AgentSet {
    pub fn new(agents: impl IntoIterator<Item = Agent>) -> Result<Self, SyntaxError> {
        let mut v: Vec<Agent> = agents.into_iter().collect();
        v.sort();
        v.dedup();
        if v.is_empty() {
            return Err(SyntaxError::EmptyAgentSet);
        }
        Ok(AgentSet(v))
    }

    pub fn singleton(agent: Agent) -> Self {
        AgentSet(vec![agent])
    }

    pub fn contains(&self, agent: &Agent) -> bool {
        self.0.binary_search(agent).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Agent> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Agent] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Core formulas: atoms, negation, disjunction, and the knowing-how modality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atom(String),
    Neg(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Kh(Agent, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    pub fn neg(f: Formula) -> Self {
        Formula::Neg(Box::new(f))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn kh(agent: impl Into<Agent>, cond: Formula, goal: Formula) -> Self {
        Formula::Kh(agent.into(), Box::new(cond), Box::new(goal))
    }

    /// The falsum encoding `_bot & ~_bot`, expanded into core connectives.
    pub fn bot() -> Self {
        // a & b == ~(~a | ~b)
        let p = Formula::atom(BOT_ATOM);
        Formula::neg(Formula::or(Formula::neg(p.clone()), Formula::neg(Formula::neg(p))))
    }

    /// Atom names occurring in the formula, sorted and deduplicated.
    pub fn atoms(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |f| {
            if let Formula::Atom(p) = f {
                out.push(p.clone());
            }
        });
        out.sort();
        out.dedup();
        out
    }

    /// Agents occurring in Kh positions, sorted and deduplicated.
    pub fn agents(&self) -> Vec<Agent> {
        let mut out = Vec::new();
        self.walk(&mut |f| {
            if let Formula::Kh(i, _, _) = f {
                out.push(i.clone());
            }
        });
        out.sort();
        out.dedup();
        out
    }

    fn walk(&self, visit: &mut impl FnMut(&Formula)) {
        match self {
            Formula::Atom(_) => {}
            Formula::Neg(f) => f.walk(visit),
            Formula::Or(a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
            Formula::Kh(_, a, b) => {
                a.walk(visit);
                b.walk(visit);
            }
        }
        visit(self);
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |_| n += 1);
        n
    }
}

impl From<Formula> for SurfaceFormula {
    fn from(f: Formula) -> Self {
        match f {
            Formula::Atom(p) => SurfaceFormula::Atom(p),
            Formula::Neg(g) => SurfaceFormula::neg((*g).into()),
            Formula::Or(a, b) => SurfaceFormula::or((*a).into(), (*b).into()),
            Formula::Kh(i, a, b) => SurfaceFormula::kh(i, (*a).into(), (*b).into()),
        }
    }
}

/// Surface formulas: the core connectives plus derived sugar.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SurfaceFormula {
    Atom(String),
    Top,
    Bot,
    Neg(Box<SurfaceFormula>),
    And(Box<SurfaceFormula>, Box<SurfaceFormula>),
    Or(Box<SurfaceFormula>, Box<SurfaceFormula>),
    Implies(Box<SurfaceFormula>, Box<SurfaceFormula>),
    /// Universal modality: truth at every state.
    A(Box<SurfaceFormula>),
    /// Existential modality: truth at some state.
    E(Box<SurfaceFormula>),
    Kh(Agent, Box<SurfaceFormula>, Box<SurfaceFormula>),
}

impl SurfaceFormula {
    pub fn atom(name: impl Into<String>) -> Self {
        SurfaceFormula::Atom(name.into())
    }

    pub fn neg(f: SurfaceFormula) -> Self {
        SurfaceFormula::Neg(Box::new(f))
    }

    pub fn and(a: SurfaceFormula, b: SurfaceFormula) -> Self {
        SurfaceFormula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: SurfaceFormula, b: SurfaceFormula) -> Self {
        SurfaceFormula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: SurfaceFormula, b: SurfaceFormula) -> Self {
        SurfaceFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn always(f: SurfaceFormula) -> Self {
        SurfaceFormula::A(Box::new(f))
    }

    pub fn exists(f: SurfaceFormula) -> Self {
        SurfaceFormula::E(Box::new(f))
    }

    pub fn kh(agent: impl Into<Agent>, cond: SurfaceFormula, goal: SurfaceFormula) -> Self {
        SurfaceFormula::Kh(agent.into(), Box::new(cond), Box::new(goal))
    }

    /// Expand all sugar into the core language. `A f` becomes the disjunction
    /// of `Kh[i](~f, false)` over the agent set, `E f` becomes `~A ~f`, and
    /// the Boolean sugar expands classically.
    pub fn desugar(&self, agents: &AgentSet) -> Result<Formula, SyntaxError> {
        if agents.is_empty() {
            return Err(SyntaxError::EmptyAgentSet);
        }
        let f = match self {
            SurfaceFormula::Atom(p) => Formula::Atom(p.clone()),
            SurfaceFormula::Bot => Formula::bot(),
            SurfaceFormula::Top => Formula::neg(Formula::bot()),
            SurfaceFormula::Neg(g) => Formula::neg(g.desugar(agents)?),
            SurfaceFormula::Or(a, b) => Formula::or(a.desugar(agents)?, b.desugar(agents)?),
            SurfaceFormula::And(a, b) => {
                let (a, b) = (a.desugar(agents)?, b.desugar(agents)?);
                Formula::neg(Formula::or(Formula::neg(a), Formula::neg(b)))
            }
            SurfaceFormula::Implies(a, b) => {
                Formula::or(Formula::neg(a.desugar(agents)?), b.desugar(agents)?)
            }
            SurfaceFormula::A(g) => {
                let inner = Formula::neg(g.desugar(agents)?);
                desugar_universal(&inner, agents)
            }
            SurfaceFormula::E(g) => {
                // E f == ~A ~f
                let inner = Formula::neg(Formula::neg(g.desugar(agents)?));
                Formula::neg(desugar_universal(&inner, agents))
            }
            SurfaceFormula::Kh(i, a, b) => {
                if !agents.contains(i) {
                    return Err(SyntaxError::UnknownAgent {
                        agent: i.id().to_owned(),
                        offset: None,
                    });
                }
                Formula::kh(i.clone(), a.desugar(agents)?, b.desugar(agents)?)
            }
        };
        Ok(f)
    }
}

/// `\/_{i in AGT} Kh[i](cond, false)`, folded left in agent order.
fn desugar_universal(cond: &Formula, agents: &AgentSet) -> Formula {
    let mut iter = agents.iter();
    let first = iter.next().expect("agent set is nonempty");
    let mut out = Formula::kh(first.clone(), cond.clone(), Formula::bot());
    for i in iter {
        out = Formula::or(out, Formula::kh(i.clone(), cond.clone(), Formula::bot()));
    }
    out
}

/// The smallest subformula-closed set containing `f`, in deduplicated
/// post-order.
pub fn subformula_closure(f: &Formula) -> Vec<Formula> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    fn go(f: &Formula, seen: &mut HashSet<Formula>, out: &mut Vec<Formula>) {
        match f {
            Formula::Atom(_) => {}
            Formula::Neg(g) => go(g, seen, out),
            Formula::Or(a, b) | Formula::Kh(_, a, b) => {
                go(a, seen, out);
                go(b, seen, out);
            }
        }
        if seen.insert(f.clone()) {
            out.push(f.clone());
        }
    }
    go(f, &mut seen, &mut out);
    out
}

/// All Kh-subformula argument triples `(agent, cond, goal)`, deduplicated in
/// post-order of first occurrence.
pub fn kh_pairs(f: &Formula) -> Vec<(Agent, Formula, Formula)> {
    let mut out = Vec::new();
    for g in subformula_closure(f) {
        if let Formula::Kh(i, a, b) = g {
            out.push((i, *a, *b));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("syntax error at byte {offset}: {message}")]
    Parse { message: String, offset: usize },
    #[error("unknown agent id `{agent}`{}", offset.map(|o| format!(" at byte {o}")).unwrap_or_default())]
    UnknownAgent { agent: String, offset: Option<usize> },
    #[error("agent set must be nonempty")]
    EmptyAgentSet,
}

// ---------------------------------------------------------------------------
// Lexer and parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Tilde,
    Amp,
    Pipe,
    Arrow,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eof,
}

struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn lex(text: &str) -> Result<Lexer, SyntaxError> {
    let bytes = text.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => i += 1,
            b'~' => {
                toks.push((Tok::Tilde, i));
                i += 1;
            }
            b'&' => {
                toks.push((Tok::Amp, i));
                i += 1;
            }
            b'|' => {
                toks.push((Tok::Pipe, i));
                i += 1;
            }
            b'(' => {
                toks.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                toks.push((Tok::RParen, i));
                i += 1;
            }
            b'[' => {
                toks.push((Tok::LBracket, i));
                i += 1;
            }
            b']' => {
                toks.push((Tok::RBracket, i));
                i += 1;
            }
            b',' => {
                toks.push((Tok::Comma, i));
                i += 1;
            }
            b'-' => {
                if i + 1 < bytes.len() && bytes[i + 1] == b'>' {
                    toks.push((Tok::Arrow, i));
                    i += 2;
                } else {
                    return Err(SyntaxError::Parse {
                        message: "expected `->`".into(),
                        offset: i,
                    });
                }
            }
            c if c.is_ascii_alphanumeric() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                toks.push((Tok::Ident(text[start..i].to_owned()), start));
            }
            other => {
                return Err(SyntaxError::Parse {
                    message: format!("unexpected character `{}`", other as char),
                    offset: i,
                });
            }
        }
    }
    toks.push((Tok::Eof, bytes.len()));
    Ok(Lexer { toks, pos: 0 })
}

impl Lexer {
    fn peek(&self) -> &(Tok, usize) {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<usize, SyntaxError> {
        let (t, off) = self.next();
        if t == tok {
            Ok(off)
        } else {
            Err(SyntaxError::Parse {
                message: format!("expected {what}"),
                offset: off,
            })
        }
    }
}

/// Parse a surface formula. `Kh[i]` agent ids must belong to `agents`.
pub fn parse(text: &str, agents: &AgentSet) -> Result<SurfaceFormula, SyntaxError> {
    if text.trim().is_empty() {
        return Err(SyntaxError::Parse {
            message: "empty formula".into(),
            offset: 0,
        });
    }
    let mut lx = lex(text)?;
    let f = parse_implies(&mut lx, agents)?;
    let (t, off) = lx.next();
    if t != Tok::Eof {
        return Err(SyntaxError::Parse {
            message: "unexpected trailing input".into(),
            offset: off,
        });
    }
    Ok(f)
}

fn parse_implies(lx: &mut Lexer, agents: &AgentSet) -> Result<SurfaceFormula, SyntaxError> {
    let lhs = parse_or(lx, agents)?;
    if lx.peek().0 == Tok::Arrow {
        lx.next();
        let rhs = parse_implies(lx, agents)?; // right-associative
        Ok(SurfaceFormula::implies(lhs, rhs))
    } else {
        Ok(lhs)
    }
}

fn parse_or(lx: &mut Lexer, agents: &AgentSet) -> Result<SurfaceFormula, SyntaxError> {
    let mut f = parse_and(lx, agents)?;
    while lx.peek().0 == Tok::Pipe {
        lx.next();
        let rhs = parse_and(lx, agents)?;
        f = SurfaceFormula::or(f, rhs);
    }
    Ok(f)
}

fn parse_and(lx: &mut Lexer, agents: &AgentSet) -> Result<SurfaceFormula, SyntaxError> {
    let mut f = parse_unary(lx, agents)?;
    while lx.peek().0 == Tok::Amp {
        lx.next();
        let rhs = parse_unary(lx, agents)?;
        f = SurfaceFormula::and(f, rhs);
    }
    Ok(f)
}

fn parse_unary(lx: &mut Lexer, agents: &AgentSet) -> Result<SurfaceFormula, SyntaxError> {
    match lx.peek().0.clone() {
        Tok::Tilde => {
            lx.next();
            Ok(SurfaceFormula::neg(parse_unary(lx, agents)?))
        }
        Tok::Ident(id) if id == "A" => {
            lx.next();
            Ok(SurfaceFormula::always(parse_unary(lx, agents)?))
        }
        Tok::Ident(id) if id == "E" => {
            lx.next();
            Ok(SurfaceFormula::exists(parse_unary(lx, agents)?))
        }
        _ => parse_primary(lx, agents),
    }
}

fn parse_primary(lx: &mut Lexer, agents: &AgentSet) -> Result<SurfaceFormula, SyntaxError> {
    let (t, off) = lx.next();
    match t {
        Tok::LParen => {
            let f = parse_implies(lx, agents)?;
            lx.expect(Tok::RParen, "`)`")?;
            Ok(f)
        }
        Tok::Ident(id) => match id.as_str() {
            "true" => Ok(SurfaceFormula::Top),
            "false" => Ok(SurfaceFormula::Bot),
            "Kh" => {
                lx.expect(Tok::LBracket, "`[` after `Kh`")?;
                let (t, aoff) = lx.next();
                let agent = match t {
                    Tok::Ident(a) => a,
                    _ => {
                        return Err(SyntaxError::Parse {
                            message: "expected agent id".into(),
                            offset: aoff,
                        })
                    }
                };
                if !agents.contains(&Agent::new(agent.clone())) {
                    return Err(SyntaxError::UnknownAgent {
                        agent,
                        offset: Some(aoff),
                    });
                }
                lx.expect(Tok::RBracket, "`]`")?;
                lx.expect(Tok::LParen, "`(`")?;
                let cond = parse_implies(lx, agents)?;
                lx.expect(Tok::Comma, "`,`")?;
                let goal = parse_implies(lx, agents)?;
                lx.expect(Tok::RParen, "`)`")?;
                Ok(SurfaceFormula::kh(Agent::new(agent), cond, goal))
            }
            "A" | "E" => Err(SyntaxError::Parse {
                message: format!("`{id}` is a modality, not an atom"),
                offset: off,
            }),
            _ => Ok(SurfaceFormula::Atom(id)),
        },
        _ => Err(SyntaxError::Parse {
            message: "expected a formula".into(),
            offset: off,
        }),
    }
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

// Precedence levels: -> is 0, | is 1, & is 2, unary is 3, primary is 4.
fn prec_surface(f: &SurfaceFormula) -> u8 {
    match f {
        SurfaceFormula::Implies(_, _) => 0,
        SurfaceFormula::Or(_, _) => 1,
        SurfaceFormula::And(_, _) => 2,
        SurfaceFormula::Neg(_) | SurfaceFormula::A(_) | SurfaceFormula::E(_) => 3,
        _ => 4,
    }
}

fn fmt_surface(f: &SurfaceFormula, min: u8, out: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = prec_surface(f);
    let paren = p < min;
    if paren {
        write!(out, "(")?;
    }
    match f {
        SurfaceFormula::Atom(a) => write!(out, "{a}")?,
        SurfaceFormula::Top => write!(out, "true")?,
        SurfaceFormula::Bot => write!(out, "false")?,
        SurfaceFormula::Neg(g) => {
            write!(out, "~")?;
            fmt_surface(g, 3, out)?;
        }
        SurfaceFormula::A(g) => {
            write!(out, "A ")?;
            fmt_surface(g, 3, out)?;
        }
        SurfaceFormula::E(g) => {
            write!(out, "E ")?;
            fmt_surface(g, 3, out)?;
        }
        SurfaceFormula::And(a, b) => {
            fmt_surface(a, 2, out)?;
            write!(out, " & ")?;
            fmt_surface(b, 3, out)?;
        }
        SurfaceFormula::Or(a, b) => {
            fmt_surface(a, 1, out)?;
            write!(out, " | ")?;
            fmt_surface(b, 2, out)?;
        }
        SurfaceFormula::Implies(a, b) => {
            fmt_surface(a, 1, out)?;
            write!(out, " -> ")?;
            fmt_surface(b, 0, out)?;
        }
        SurfaceFormula::Kh(i, a, b) => {
            write!(out, "Kh[{i}](")?;
            fmt_surface(a, 0, out)?;
            write!(out, ", ")?;
            fmt_surface(b, 0, out)?;
            write!(out, ")")?;
        }
    }
    if paren {
        write!(out, ")")?;
    }
    Ok(())
}

impl fmt::Display for SurfaceFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_surface(self, 0, f)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_surface(&SurfaceFormula::from(self.clone()), 0, f)
    }
}

//! Untyped first-order (TPTP FOF) problems via the polymorphic tagged encoding.

mod encode;
mod names;

use std::collections::BTreeMap;
use std::fmt;

pub use encode::{encode_problem, encode_problem_with};
pub use names::{decode_name, encode_name, encode_type_name, escape, unescape, NameMap, NAME_PREFIX, TYPE_PREFIX};

/// Type tag: `t(type, term)`.
pub const TAG: &str = "t";
/// Explicit application: `happ(function, argument)`.
pub const HAPP: &str = "happ";
/// Truth of a boolean term: `p(term)`.
pub const PRED: &str = "p";
/// Name of the conjecture formula.
pub const CONJECTURE_NAME: &str = "conj";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FofError {
    #[error("unknown identifier {0:?}")]
    UnknownIdentifier(String),
    #[error("premise {0:?} given twice")]
    DuplicatePremise(String),
    #[error("unsupported term: {0}")]
    UnsupportedTerm(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FofTerm {
    Var(String),
    Fn(String, Vec<FofTerm>),
}

impl FofTerm {
    pub fn constant(name: &str) -> FofTerm {
        FofTerm::Fn(name.to_string(), Vec::new())
    }

    /// `(type, term)` if this is a tagged term.
    pub fn dest_tag(&self) -> Option<(&FofTerm, &FofTerm)> {
        match self {
            FofTerm::Fn(f, args) if f == TAG && args.len() == 2 => Some((&args[0], &args[1])),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    /// A predicate application; in encoder output always `p(...)`.
    Atom(FofTerm),
    Eq(FofTerm, FofTerm),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Imp(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Forall(Vec<String>, Box<Formula>),
    Exists(Vec<String>, Box<Formula>),
}

impl Formula {
    /// Universal closure over `vars`, merged with an immediately nested `!`.
    pub fn forall(mut vars: Vec<String>, body: Formula) -> Formula {
        if vars.is_empty() {
            return body;
        }
        match body {
            Formula::Forall(inner, b) => {
                vars.extend(inner);
                Formula::Forall(vars, b)
            }
            b => Formula::Forall(vars, Box::new(b)),
        }
    }

    pub fn exists(mut vars: Vec<String>, body: Formula) -> Formula {
        if vars.is_empty() {
            return body;
        }
        match body {
            Formula::Exists(inner, b) => {
                vars.extend(inner);
                Formula::Exists(vars, b)
            }
            b => Formula::Exists(vars, Box::new(b)),
        }
    }

    /// Visit every first-order term occurring at the top of an atom or equation.
    pub fn terms(&self) -> Vec<&FofTerm> {
        let mut out = Vec::new();
        self.collect_terms(&mut out);
        out
    }

    fn collect_terms<'a>(&'a self, out: &mut Vec<&'a FofTerm>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(t) => out.push(t),
            Formula::Eq(a, b) => {
                out.push(a);
                out.push(b);
            }
            Formula::Not(f) | Formula::Forall(_, f) | Formula::Exists(_, f) => f.collect_terms(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imp(a, b) | Formula::Iff(a, b) => {
                a.collect_terms(out);
                b.collect_terms(out);
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Axiom,
    Conjecture,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Axiom => "axiom",
            Role::Conjecture => "conjecture",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnnotatedFormula {
    pub name: String,
    pub role: Role,
    pub formula: Formula,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FofProblem {
    /// Premises in input order, then lambda-lifting definitions, then the conjecture.
    pub formulas: Vec<AnnotatedFormula>,
    /// Arity of every function symbol used.
    pub arities: BTreeMap<String, usize>,
    pub names: NameMap,
    /// Axiom identifiers of the submitted premises with their original names, in input order.
    pub premises: Vec<(String, String)>,
    /// Comment lines written before the formulas (without the leading `%`).
    pub header: Vec<String>,
}

impl FofProblem {
    pub fn conjecture(&self) -> &AnnotatedFormula {
        self.formulas.iter().find(|f| f.role == Role::Conjecture).expect("one conjecture")
    }

    /// Original premise name of an axiom identifier, if it names a submitted premise.
    pub fn premise_name(&self, id: &str) -> Option<&str> {
        self.premises.iter().find(|(i, _)| i == id).map(|(_, n)| n.as_str())
    }
}

impl fmt::Display for FofTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FofTerm::Var(v) => f.write_str(v),
            FofTerm::Fn(name, args) => {
                f.write_str(name)?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{}", a)?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("$true"),
            Formula::False => f.write_str("$false"),
            Formula::Atom(t) => write!(f, "{}", t),
            Formula::Eq(a, b) => write!(f, "{} = {}", a, b),
            Formula::Not(g) => match **g {
                Formula::Eq(..) => write!(f, "~ ({})", g),
                _ => write!(f, "~ {}", g),
            },
            Formula::And(a, b) => write!(f, "({} & {})", a, b),
            Formula::Or(a, b) => write!(f, "({} | {})", a, b),
            Formula::Imp(a, b) => write!(f, "({} => {})", a, b),
            Formula::Iff(a, b) => write!(f, "({} <=> {})", a, b),
            Formula::Forall(vs, g) => write!(f, "![{}]: {}", vs.join(","), g),
            Formula::Exists(vs, g) => write!(f, "?[{}]: {}", vs.join(","), g),
        }
    }
}

/// Render the problem as TPTP text: header comments, axioms, then the conjecture.
pub fn write_tptp(p: &FofProblem) -> String {
    let mut out = String::new();
    for line in &p.header {
        out.push_str("% ");
        out.push_str(line);
        out.push('\n');
    }
    for f in &p.formulas {
        out.push_str(&format!("fof({}, {}, {}).\n", f.name, f.role.as_str(), f.formula));
    }
    out
}

//! Propositional tautology checking over atom-abstracted formulas.

use std::time::{Duration, Instant};

use crate::term::Term;

/// Formulas with more distinct atoms than this are not attempted.
pub const MAX_ATOMS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TautResult {
    Proved,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Prop {
    Const(bool),
    Atom(usize),
    Not(Box<Prop>),
    And(Box<Prop>, Box<Prop>),
    Or(Box<Prop>, Box<Prop>),
    Imp(Box<Prop>, Box<Prop>),
    Iff(Box<Prop>, Box<Prop>),
}

impl Prop {
    pub fn eval(&self, v: &[bool]) -> bool {
        match self {
            Prop::Const(b) => *b,
            Prop::Atom(i) => v[*i],
            Prop::Not(a) => !a.eval(v),
            Prop::And(a, b) => a.eval(v) && b.eval(v),
            Prop::Or(a, b) => a.eval(v) || b.eval(v),
            Prop::Imp(a, b) => !a.eval(v) || b.eval(v),
            Prop::Iff(a, b) => a.eval(v) == b.eval(v),
        }
    }

    /// Partially evaluate under `v` (`None` = unassigned).
    fn simplify(&self, v: &[Option<bool>]) -> Prop {
        use Prop::*;
        match self {
            Const(b) => Const(*b),
            Atom(i) => v[*i].map_or(Atom(*i), Const),
            Not(a) => match a.simplify(v) {
                Const(b) => Const(!b),
                a => Not(Box::new(a)),
            },
            And(a, b) => match (a.simplify(v), b.simplify(v)) {
                (Const(false), _) | (_, Const(false)) => Const(false),
                (Const(true), x) | (x, Const(true)) => x,
                (a, b) => And(Box::new(a), Box::new(b)),
            },
            Or(a, b) => match (a.simplify(v), b.simplify(v)) {
                (Const(true), _) | (_, Const(true)) => Const(true),
                (Const(false), x) | (x, Const(false)) => x,
                (a, b) => Or(Box::new(a), Box::new(b)),
            },
            Imp(a, b) => match (a.simplify(v), b.simplify(v)) {
                (Const(false), _) | (_, Const(true)) => Const(true),
                (Const(true), x) => x,
                (x, Const(false)) => Not(Box::new(x)),
                (a, b) => Imp(Box::new(a), Box::new(b)),
            },
            Iff(a, b) => match (a.simplify(v), b.simplify(v)) {
                (Const(x), Const(y)) => Const(x == y),
                (Const(true), x) | (x, Const(true)) => x,
                (Const(false), x) | (x, Const(false)) => Not(Box::new(x)),
                (a, b) => Iff(Box::new(a), Box::new(b)),
            },
        }
    }

    fn first_atom(&self) -> Option<usize> {
        match self {
            Prop::Const(_) => None,
            Prop::Atom(i) => Some(*i),
            Prop::Not(a) => a.first_atom(),
            Prop::And(a, b) | Prop::Or(a, b) | Prop::Imp(a, b) | Prop::Iff(a, b) => {
                a.first_atom().or_else(|| b.first_atom())
            }
        }
    }
}

/// Replace maximal non-propositional subformulas by atoms; syntactically
/// identical subformulas share an atom. Returns the skeleton and the atoms.
pub fn abstract_atoms(t: &Term) -> (Prop, Vec<Term>) {
    fn go(t: &Term, atoms: &mut Vec<Term>) -> Prop {
        let bx = Box::new;
        if t.is_const("T") {
            return Prop::Const(true);
        }
        if t.is_const("F") {
            return Prop::Const(false);
        }
        if let Some(a) = t.dest_unary("~") {
            return Prop::Not(bx(go(a, atoms)));
        }
        if let Some((a, b)) = t.dest_binary("/\\") {
            return Prop::And(bx(go(a, atoms)), bx(go(b, atoms)));
        }
        if let Some((a, b)) = t.dest_binary("\\/") {
            return Prop::Or(bx(go(a, atoms)), bx(go(b, atoms)));
        }
        if let Some((a, b)) = t.dest_binary("==>") {
            return Prop::Imp(bx(go(a, atoms)), bx(go(b, atoms)));
        }
        if let Some((a, b)) = t.dest_binary("=") {
            if a.ty().is_bool() {
                return Prop::Iff(bx(go(a, atoms)), bx(go(b, atoms)));
            }
        }
        let i = atoms.iter().position(|x| x == t).unwrap_or_else(|| {
            atoms.push(t.clone());
            atoms.len() - 1
        });
        Prop::Atom(i)
    }
    let mut atoms = Vec::new();
    let p = go(t, &mut atoms);
    (p, atoms)
}

/// Validity by case splitting with simplification. `None` when the deadline passes.
pub fn is_valid(p: &Prop, n_atoms: usize, deadline: Instant) -> Option<bool> {
    fn split(p: &Prop, v: &mut Vec<Option<bool>>, deadline: Instant) -> Option<bool> {
        if Instant::now() > deadline {
            return None;
        }
        match p.first_atom() {
            None => Some(p.eval(&[])),
            Some(i) => {
                for b in [true, false] {
                    v[i] = Some(b);
                    let q = p.simplify(v);
                    let ok = match q {
                        Prop::Const(c) => Some(c),
                        q => split(&q, v, deadline),
                    };
                    v[i] = None;
                    if ok != Some(true) {
                        return ok;
                    }
                }
                Some(true)
            }
        }
    }
    let mut v = vec![None; n_atoms];
    match p.simplify(&v) {
        Prop::Const(c) => Some(c),
        q => split(&q, &mut v, deadline),
    }
}

/// Decide whether `goal` is a propositional tautology after atom abstraction.
pub fn taut_check(goal: &Term, timeout: Duration) -> TautResult {
    let deadline = Instant::now() + timeout;
    let (p, atoms) = abstract_atoms(goal);
    if atoms.len() > MAX_ATOMS {
        return TautResult::Unknown;
    }
    match is_valid(&p, atoms.len(), deadline) {
        Some(true) => TautResult::Proved,
        _ => TautResult::Unknown,
    }
}

use std::collections::{BTreeMap, HashMap, HashSet};

use super::names::NameMap;
use super::{AnnotatedFormula, FofError, FofProblem, FofTerm, Formula, Role, CONJECTURE_NAME, HAPP, PRED, TAG};
use crate::term::{normalize_term_tyvars, Name, Term, TermKind, Type};

const LIFTED_PREFIX: &str = "hhl_";

/// Formula-level reading of a boolean HOL term.
enum Shape<'a> {
    True,
    False,
    Not(&'a Term),
    And(&'a Term, &'a Term),
    Or(&'a Term, &'a Term),
    Imp(&'a Term, &'a Term),
    Iff(&'a Term, &'a Term),
    Eq(&'a Term, &'a Term),
    Forall(Name, Type, Term),
    Exists(Name, Type, Term),
    Unique(Name, Type, Term),
    Atom(&'a Term),
}

/// `b f` with `f` not an abstraction: eta-expand to a fresh bound variable.
fn binder_body(f: &Term) -> (Name, Type, Term) {
    if let Some((v, ty, body)) = f.dest_abs() {
        return (v.clone(), ty.clone(), body.clone());
    }
    let ty = f.ty().dest_fun().expect("binder argument is a function").0.clone();
    let mut name = String::from("x");
    while f.has_free(&name, &ty) {
        name.push('\'');
    }
    let x = Term::var(&name, ty.clone());
    (name.into(), ty, Term::app(f.clone(), x).expect("eta expansion is well typed"))
}

fn shape(t: &Term) -> Shape<'_> {
    if t.is_const("T") {
        return Shape::True;
    }
    if t.is_const("F") {
        return Shape::False;
    }
    if let Some(a) = t.dest_unary("~") {
        return Shape::Not(a);
    }
    if let Some((l, r)) = t.dest_binary("/\\") {
        return Shape::And(l, r);
    }
    if let Some((l, r)) = t.dest_binary("\\/") {
        return Shape::Or(l, r);
    }
    if let Some((l, r)) = t.dest_binary("==>") {
        return Shape::Imp(l, r);
    }
    if let Some((l, r)) = t.dest_binary("=") {
        return if l.ty().is_bool() { Shape::Iff(l, r) } else { Shape::Eq(l, r) };
    }
    for q in ["!", "?", "?!"] {
        if let Some(f) = t.dest_unary(q) {
            let (v, ty, body) = binder_body(f);
            return match q {
                "!" => Shape::Forall(v, ty, body),
                "?" => Shape::Exists(v, ty, body),
                _ => Shape::Unique(v, ty, body),
            };
        }
    }
    Shape::Atom(t)
}

fn hol_eq(l: Term, r: Term) -> Term {
    let ty = l.ty().clone();
    let eq = Term::constant("=", Type::funs([ty.clone(), ty.clone()], Type::bool()), vec![ty]);
    Term::apps(eq, [l, r]).expect("equation sides share a type")
}

fn hol_forall(var: &Name, ty: &Type, body: Term) -> Term {
    let abs = Term::abs(var, ty.clone(), body);
    let q = Term::constant("!", Type::fun(abs.ty().clone(), Type::bool()), vec![ty.clone()]);
    Term::app(q, abs).expect("quantifier is well typed")
}

/// Lambda lifting state shared by all formulas of one problem.
#[derive(Default)]
struct Lifter {
    lifted: HashMap<(Vec<(Name, Type)>, Term), Term>,
    defs: Vec<Term>,
}

impl Lifter {
    fn formula(&mut self, t: &Term) -> Term {
        let rebuild = |f: &Term, args: Vec<Term>| Term::apps(f.clone(), args).expect("same types as before");
        let Some((fun, _)) = t.dest_app() else {
            return self.term(t);
        };
        match shape(t) {
            Shape::Not(a) => rebuild(fun, vec![self.formula(a)]),
            Shape::And(l, r) | Shape::Or(l, r) | Shape::Imp(l, r) | Shape::Iff(l, r) => {
                let (op, _) = fun.dest_app().expect("binary operator");
                rebuild(op, vec![self.formula(l), self.formula(r)])
            }
            Shape::Eq(l, r) => {
                let (op, _) = fun.dest_app().expect("binary operator");
                rebuild(op, vec![self.term(l), self.term(r)])
            }
            Shape::Forall(v, ty, body) | Shape::Exists(v, ty, body) | Shape::Unique(v, ty, body) => {
                let body = self.formula(&body);
                rebuild(fun, vec![Term::abs(&v, ty, body)])
            }
            Shape::Atom(_) | Shape::True | Shape::False => self.term(t),
        }
    }

    fn term(&mut self, t: &Term) -> Term {
        match t.kind() {
            TermKind::Var { .. } | TermKind::Const { .. } => t.clone(),
            TermKind::App { fun, arg, .. } => {
                Term::app(self.term(fun), self.term(arg)).expect("lifting preserves types")
            }
            TermKind::Abs { var, var_ty, body, .. } => {
                let frees = t.frees();
                let key = (frees.clone(), t.clone());
                if let Some(c) = self.lifted.get(&key) {
                    return Term::apps(c.clone(), frees.iter().map(|(n, ty)| Term::var(n, ty.clone())))
                        .expect("lifted constant takes the free variables");
                }
                let name = format!("{}{}", LIFTED_PREFIX, self.lifted.len());
                let ty = Type::funs(frees.iter().map(|(_, ty)| ty.clone()), t.ty().clone());
                let tyargs = t.tyvars().into_iter().map(Type::Var).collect();
                let c = Term::constant(&name, ty, tyargs);
                self.lifted.insert(key, c.clone());
                let head = Term::apps(c, frees.iter().map(|(n, ty)| Term::var(n, ty.clone())))
                    .expect("lifted constant takes the free variables");
                let lhs = Term::app(head.clone(), Term::var(var, var_ty.clone())).expect("abstraction domain");
                let mut def = hol_forall(var, var_ty, hol_eq(lhs, body.clone()));
                for (n, ty) in frees.iter().rev() {
                    def = hol_forall(n, ty, def);
                }
                let def = self.formula(&def);
                self.defs.push(def);
                head
            }
        }
    }
}

/// Term-position occurrences of constants: minimal applied arity.
fn count_formula(t: &Term, arities: &mut BTreeMap<Name, usize>) {
    match shape(t) {
        Shape::True | Shape::False => {}
        Shape::Not(a) => count_formula(a, arities),
        Shape::And(l, r) | Shape::Or(l, r) | Shape::Imp(l, r) | Shape::Iff(l, r) => {
            count_formula(l, arities);
            count_formula(r, arities);
        }
        Shape::Eq(l, r) => {
            count_term(l, arities);
            count_term(r, arities);
        }
        Shape::Forall(_, _, b) | Shape::Exists(_, _, b) | Shape::Unique(_, _, b) => count_formula(&b, arities),
        Shape::Atom(a) => count_term(a, arities),
    }
}

fn count_term(t: &Term, arities: &mut BTreeMap<Name, usize>) {
    let (head, args) = t.strip_comb();
    if let TermKind::Const { name, .. } = head.kind() {
        let m = arities.entry(name.clone()).or_insert(args.len());
        *m = (*m).min(args.len());
    }
    for a in args {
        count_term(a, arities);
    }
}

fn upper_var_name(name: &str) -> String {
    let mut s: String = name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    match s.chars().next() {
        Some(c) if c.is_ascii_lowercase() => s.replace_range(..1, &c.to_ascii_uppercase().to_string()),
        Some(c) if c.is_ascii_uppercase() => {}
        _ => s.insert(0, 'V'),
    }
    s
}

/// Per-formula emission state: variable names in scope.
struct Emitter<'a> {
    arities: &'a BTreeMap<Name, usize>,
    names: &'a mut NameMap,
    used: HashSet<String>,
    scope: Vec<((Name, Type), String)>,
}

impl Emitter<'_> {
    fn fresh(&mut self, name: &str) -> String {
        let base = upper_var_name(name);
        let mut candidate = base.clone();
        let mut i = 1;
        while self.used.contains(&candidate) {
            candidate = format!("{}{}", base, i);
            i += 1;
        }
        self.used.insert(candidate.clone());
        candidate
    }

    fn bind(&mut self, v: &Name, ty: &Type) -> String {
        let fo = self.fresh(v);
        self.scope.push(((v.clone(), ty.clone()), fo.clone()));
        fo
    }

    fn lookup(&self, v: &Name, ty: &Type) -> Result<String, FofError> {
        self.scope
            .iter()
            .rev()
            .find(|((n, t), _)| n == v && t == ty)
            .map(|(_, fo)| fo.clone())
            .ok_or_else(|| FofError::UnsupportedTerm(format!("unbound variable {}", v)))
    }

    fn ty(&mut self, ty: &Type) -> FofTerm {
        match ty {
            Type::Var(v) => FofTerm::Var(upper_var_name(v)),
            Type::App(c, args) => {
                let id = self.names.insert_type(c);
                FofTerm::Fn(id, args.iter().map(|a| self.ty(a)).collect())
            }
        }
    }

    fn tag(&mut self, ty: &Type, t: FofTerm) -> FofTerm {
        FofTerm::Fn(TAG.into(), vec![self.ty(ty), t])
    }

    fn constant_id(&mut self, name: &str) -> String {
        if name.starts_with(LIFTED_PREFIX) {
            name.to_string()
        } else {
            self.names.insert(name)
        }
    }

    /// Tagged encoding of a term in argument position.
    fn term(&mut self, t: &Term) -> Result<FofTerm, FofError> {
        let (head, args) = t.strip_comb();
        let (mut cur, mut ty, rest) = match head.kind() {
            TermKind::Const { name, ty, .. } => {
                let m = self.arities.get(name).copied().unwrap_or(0).min(args.len());
                let id = self.constant_id(name);
                let fo_args = args[..m].iter().map(|a| self.term(a)).collect::<Result<Vec<_>, _>>()?;
                let mut res_ty = ty.clone();
                for _ in 0..m {
                    res_ty = res_ty.dest_fun().expect("applied constant has function type").1.clone();
                }
                let raw = FofTerm::Fn(id, fo_args);
                (self.tag(&res_ty, raw), res_ty, &args[m..])
            }
            TermKind::Var { name, ty } => {
                let v = FofTerm::Var(self.lookup(name, ty)?);
                (self.tag(ty, v), ty.clone(), &args[..])
            }
            TermKind::Abs { .. } => {
                return Err(FofError::UnsupportedTerm("abstraction left after lambda lifting".into()))
            }
            TermKind::App { .. } => unreachable!("strip_comb returns a non-application head"),
        };
        for a in rest {
            let arg = self.term(a)?;
            ty = ty.dest_fun().expect("applied term has function type").1.clone();
            cur = FofTerm::Fn(HAPP.into(), vec![cur, arg]);
            cur = self.tag(&ty, cur);
        }
        Ok(cur)
    }

    fn formula(&mut self, t: &Term) -> Result<Formula, FofError> {
        let bx = Box::new;
        Ok(match shape(t) {
            Shape::True => Formula::True,
            Shape::False => Formula::False,
            Shape::Not(a) => Formula::Not(bx(self.formula(a)?)),
            Shape::And(l, r) => Formula::And(bx(self.formula(l)?), bx(self.formula(r)?)),
            Shape::Or(l, r) => Formula::Or(bx(self.formula(l)?), bx(self.formula(r)?)),
            Shape::Imp(l, r) => Formula::Imp(bx(self.formula(l)?), bx(self.formula(r)?)),
            Shape::Iff(l, r) => Formula::Iff(bx(self.formula(l)?), bx(self.formula(r)?)),
            Shape::Eq(l, r) => Formula::Eq(self.term(l)?, self.term(r)?),
            Shape::Forall(v, ty, body) => {
                let fo = self.bind(&v, &ty);
                let b = self.formula(&body)?;
                self.scope.pop();
                Formula::forall(vec![fo], b)
            }
            Shape::Exists(v, ty, body) => {
                let fo = self.bind(&v, &ty);
                let b = self.formula(&body)?;
                self.scope.pop();
                Formula::exists(vec![fo], b)
            }
            Shape::Unique(v, ty, body) => {
                // ?x. P x /\ !y. P y ==> y = x
                let x = self.bind(&v, &ty);
                let px = self.formula(&body)?;
                let tx = self.tag(&ty, FofTerm::Var(x.clone()));
                self.scope.pop();
                let y = self.bind(&v, &ty);
                let py = self.formula(&body)?;
                let ty_tag = self.tag(&ty, FofTerm::Var(y.clone()));
                self.scope.pop();
                let uniq = Formula::forall(vec![y], Formula::Imp(bx(py), bx(Formula::Eq(ty_tag, tx))));
                Formula::exists(vec![x], Formula::And(bx(px), bx(uniq)))
            }
            Shape::Atom(a) => Formula::Atom(FofTerm::Fn(PRED.into(), vec![self.term(a)?])),
        })
    }

    /// Close over type variables and free variables, then encode.
    fn closed(&mut self, t: &Term) -> Result<Formula, FofError> {
        let tyvars: Vec<String> = t.tyvars().iter().map(|v| upper_var_name(v)).collect();
        self.used.extend(tyvars.iter().cloned());
        let frees: Vec<String> = t.frees().iter().map(|(n, ty)| self.bind(n, ty)).collect();
        let body = self.formula(t)?;
        Ok(Formula::forall(tyvars, Formula::forall(frees, body)))
    }
}

fn record_arities(f: &Formula, arities: &mut BTreeMap<String, usize>) {
    fn go(t: &FofTerm, arities: &mut BTreeMap<String, usize>) {
        if let FofTerm::Fn(name, args) = t {
            arities.insert(name.clone(), args.len());
            args.iter().for_each(|a| go(a, arities));
        }
    }
    for t in f.terms() {
        go(t, arities);
    }
}

/// Encode a conjecture and named premises (see [`encode_problem_with`]).
pub fn encode_problem(conjecture: &Term, premises: &[(String, Term)]) -> Result<FofProblem, FofError> {
    encode_problem_with(conjecture, premises, Vec::new())
}

/// Encode with extra header comment lines, e.g. `hh: project=P strategy=S`.
///
/// Pipeline: lambda-lift abstractions outside quantifiers, compute every
/// constant's minimal applied arity over the whole problem, encode surplus
/// arguments with `happ`, wrap atoms in `p`, and tag every term with its type.
pub fn encode_problem_with(
    conjecture: &Term,
    premises: &[(String, Term)],
    extra_header: Vec<String>,
) -> Result<FofProblem, FofError> {
    let mut names = NameMap::new();
    let mut seen = HashSet::new();
    let mut premise_ids = Vec::new();
    for (name, _) in premises {
        if !seen.insert(name.as_str()) {
            return Err(FofError::DuplicatePremise(name.clone()));
        }
        premise_ids.push((names.insert(name), name.clone()));
    }
    let conj = (CONJECTURE_NAME.to_string(), conjecture.clone());
    for (name, t) in premises.iter().chain([&conj]) {
        if !t.ty().is_bool() {
            return Err(FofError::UnsupportedTerm(format!("{} is not a formula", name)));
        }
    }

    let mut lifter = Lifter::default();
    let lifted: Vec<Term> = premises.iter().map(|(_, t)| lifter.formula(&normalize_term_tyvars(t))).collect();
    let goal = lifter.formula(&normalize_term_tyvars(conjecture));
    let defs: Vec<Term> = lifter.defs.iter().map(normalize_term_tyvars).collect();
    for d in &defs {
        d.check_types().map_err(|e| FofError::UnsupportedTerm(format!("lifted definition: {}", e)))?;
    }

    let mut min_arity = BTreeMap::new();
    for t in lifted.iter().chain(&defs).chain([&goal]) {
        count_formula(t, &mut min_arity);
    }

    let mut formulas = Vec::new();
    let mut emit = |name: String, role: Role, t: &Term, names: &mut NameMap| -> Result<(), FofError> {
        let mut e = Emitter { arities: &min_arity, names, used: HashSet::new(), scope: Vec::new() };
        let formula = e.closed(t)?;
        formulas.push(AnnotatedFormula { name, role, formula });
        Ok(())
    };
    for ((id, _), t) in premise_ids.iter().zip(&lifted) {
        emit(id.clone(), Role::Axiom, t, &mut names)?;
    }
    for (i, d) in defs.iter().enumerate() {
        emit(format!("{}def_{}", LIFTED_PREFIX, i), Role::Axiom, d, &mut names)?;
    }
    emit(CONJECTURE_NAME.to_string(), Role::Conjecture, &goal, &mut names)?;

    let mut arities = BTreeMap::new();
    for f in &formulas {
        record_arities(&f.formula, &mut arities);
    }
    let mut header = vec!["hh: encoding=polymorphic-tagged equality=native".to_string()];
    header.extend(extra_header);
    Ok(FofProblem { formulas, arities, names, premises: premise_ids, header })
}

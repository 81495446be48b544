//! Hindley–Milner style elaboration of parse trees into typed terms.

use std::collections::{HashMap, HashSet};

use super::ast::Term;
use super::parser::Pre;
use super::symbols::{Candidate, SymbolTable};
use super::types::{canonical_tyvar_name, Name, Type};
use super::TermError;

#[derive(Clone, Debug, PartialEq, Eq)]
enum ITy {
    Meta(usize),
    Var(Name),
    App(Name, Vec<ITy>),
}

impl ITy {
    fn from_type(t: &Type) -> ITy {
        match t {
            Type::Var(v) => ITy::Var(v.clone()),
            Type::App(c, args) => ITy::App(c.clone(), args.iter().map(ITy::from_type).collect()),
        }
    }

    fn fun(a: ITy, b: ITy) -> ITy {
        ITy::App("fun".into(), vec![a, b])
    }
}

enum Elab {
    Var { name: String, ty: ITy },
    Const { slot: usize, ty: ITy },
    Ground(Term),
    App { fun: Box<Elab>, arg: Box<Elab>, ty: ITy },
    Abs { var: String, var_ty: ITy, body: Box<Elab>, ty: ITy },
}

struct Pending {
    candidates: Vec<Candidate>,
    ty: ITy,
    offset: usize,
    resolved: Option<usize>,
}

struct Infer<'a> {
    symbols: &'a SymbolTable,
    subst: Vec<Option<ITy>>,
    frees: HashMap<String, ITy>,
    scope: Vec<(String, ITy)>,
    consts: Vec<Pending>,
}

fn type_error<T>(offset: usize, message: String) -> Result<T, TermError> {
    Err(TermError::Type { offset, message })
}

impl<'a> Infer<'a> {
    fn fresh(&mut self) -> ITy {
        self.subst.push(None);
        ITy::Meta(self.subst.len() - 1)
    }

    fn instantiate(&mut self, scheme: &Type) -> ITy {
        let mut map: HashMap<Name, ITy> = HashMap::new();
        for v in scheme.tyvars() {
            let m = self.fresh();
            map.insert(v, m);
        }
        fn go(t: &Type, map: &HashMap<Name, ITy>) -> ITy {
            match t {
                Type::Var(v) => map[v].clone(),
                Type::App(c, args) => ITy::App(c.clone(), args.iter().map(|a| go(a, map)).collect()),
            }
        }
        go(scheme, &map)
    }

    fn resolve(&self, t: &ITy) -> ITy {
        match t {
            ITy::Meta(m) => match &self.subst[*m] {
                Some(b) => self.resolve(b),
                None => t.clone(),
            },
            _ => t.clone(),
        }
    }

    fn zonk(&self, t: &ITy) -> ITy {
        match self.resolve(t) {
            ITy::App(c, args) => ITy::App(c, args.iter().map(|a| self.zonk(a)).collect()),
            other => other,
        }
    }

    fn occurs(&self, m: usize, t: &ITy) -> bool {
        match self.resolve(t) {
            ITy::Meta(n) => n == m,
            ITy::Var(_) => false,
            ITy::App(_, args) => args.iter().any(|a| self.occurs(m, a)),
        }
    }

    fn unify(&mut self, a: &ITy, b: &ITy) -> bool {
        let a = self.resolve(a);
        let b = self.resolve(b);
        match (&a, &b) {
            (ITy::Meta(x), ITy::Meta(y)) if x == y => true,
            (ITy::Meta(x), other) | (other, ITy::Meta(x)) => {
                if self.occurs(*x, other) {
                    return false;
                }
                self.subst[*x] = Some(other.clone());
                true
            }
            (ITy::Var(x), ITy::Var(y)) => x == y,
            (ITy::App(c1, a1), ITy::App(c2, a2)) => {
                c1 == c2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(p, q)| self.unify(p, q))
            }
            _ => false,
        }
    }

    fn show(&self, t: &ITy) -> String {
        fn go(t: &ITy) -> Type {
            match t {
                ITy::Meta(m) => Type::var(&format!("?{}", m)),
                ITy::Var(v) => Type::Var(v.clone()),
                ITy::App(c, args) => Type::App(c.clone(), args.iter().map(go).collect()),
            }
        }
        go(&self.zonk(t)).to_string()
    }

    fn expect(&mut self, a: &ITy, b: &ITy, offset: usize) -> Result<(), TermError> {
        if self.unify(a, b) {
            Ok(())
        } else {
            type_error(offset, format!("cannot unify {} with {}", self.show(a), self.show(b)))
        }
    }

    fn constant(&mut self, candidates: Vec<Candidate>, offset: usize) -> Elab {
        let ty = if candidates.len() == 1 { self.instantiate(&candidates[0].scheme) } else { self.fresh() };
        let resolved = (candidates.len() == 1).then_some(0);
        self.consts.push(Pending { candidates, ty: ty.clone(), offset, resolved });
        Elab::Const { slot: self.consts.len() - 1, ty }
    }

    fn ty_of(e: &Elab) -> ITy {
        match e {
            Elab::Var { ty, .. } | Elab::Const { ty, .. } | Elab::App { ty, .. } | Elab::Abs { ty, .. } => ty.clone(),
            Elab::Ground(t) => ITy::from_type(t.ty()),
        }
    }

    fn elab(&mut self, p: &Pre) -> Result<Elab, TermError> {
        match p {
            Pre::Ident { name, offset } => {
                if let Some((_, ty)) = self.scope.iter().rev().find(|(n, _)| n == name) {
                    return Ok(Elab::Var { name: name.clone(), ty: ty.clone() });
                }
                if let Some(s) = self.symbols.surface(name) {
                    return Ok(self.constant(s.candidates.clone(), *offset));
                }
                if let Some(scheme) = self.symbols.const_scheme(name) {
                    let c = Candidate { constant: name.as_str().into(), scheme: scheme.clone() };
                    return Ok(self.constant(vec![c], *offset));
                }
                let ty = match self.frees.get(name) {
                    Some(t) => t.clone(),
                    None => {
                        let t = self.fresh();
                        self.frees.insert(name.clone(), t.clone());
                        t
                    }
                };
                Ok(Elab::Var { name: name.clone(), ty })
            }
            Pre::Op { token, offset } => match self.symbols.surface(token) {
                Some(s) => Ok(self.constant(s.candidates.clone(), *offset)),
                None => Err(TermError::UnknownSymbol { name: token.clone(), offset: *offset }),
            },
            Pre::Num { value, offset } => Ok(Elab::Ground(numeral(self.symbols, *value, *offset)?)),
            Pre::App { fun, arg, offset } => {
                let f = self.elab(fun)?;
                let a = self.elab(arg)?;
                let res = self.fresh();
                let fty = Self::ty_of(&f);
                let want = ITy::fun(Self::ty_of(&a), res.clone());
                if !self.unify(&fty, &want) {
                    let fz = self.zonk(&fty);
                    let msg = match fz {
                        ITy::App(ref c, ref args) if &**c == "fun" => format!(
                            "function expects {} but argument has type {}",
                            self.show(&args[0]),
                            self.show(&Self::ty_of(&a))
                        ),
                        _ => format!("cannot apply a term of type {}", self.show(&fz)),
                    };
                    return type_error(*offset, msg);
                }
                Ok(Elab::App { fun: Box::new(f), arg: Box::new(a), ty: res })
            }
            Pre::Abs { var, ann, body, offset } => {
                let vty = self.fresh();
                if let Some(t) = ann {
                    check_type(self.symbols, t, *offset)?;
                    let it = ITy::from_type(t);
                    self.expect(&vty, &it, *offset)?;
                }
                self.scope.push((var.clone(), vty.clone()));
                let b = self.elab(body);
                self.scope.pop();
                let b = b?;
                let ty = ITy::fun(vty.clone(), Self::ty_of(&b));
                Ok(Elab::Abs { var: var.clone(), var_ty: vty, body: Box::new(b), ty })
            }
            Pre::Ann { term, ty, offset } => {
                check_type(self.symbols, ty, *offset)?;
                let e = self.elab(term)?;
                let it = ITy::from_type(ty);
                self.expect(&Self::ty_of(&e), &it, *offset)?;
                Ok(e)
            }
        }
    }

    fn try_candidate(&mut self, slot: usize, cand: usize) -> bool {
        let saved = self.subst.clone();
        let scheme = self.consts[slot].candidates[cand].scheme.clone();
        let inst = self.instantiate(&scheme);
        let ty = self.consts[slot].ty.clone();
        let ok = self.unify(&ty, &inst);
        self.subst = saved;
        ok
    }

    fn commit(&mut self, slot: usize, cand: usize) {
        let scheme = self.consts[slot].candidates[cand].scheme.clone();
        let inst = self.instantiate(&scheme);
        let ty = self.consts[slot].ty.clone();
        let ok = self.unify(&ty, &inst);
        debug_assert!(ok);
        self.consts[slot].resolved = Some(cand);
    }

    /// Resolve overloaded constants: forced choices first, then defaults by table order.
    fn resolve_overloads(&mut self) -> Result<(), TermError> {
        loop {
            let mut progress = false;
            for slot in 0..self.consts.len() {
                if self.consts[slot].resolved.is_some() {
                    continue;
                }
                let ok: Vec<usize> =
                    (0..self.consts[slot].candidates.len()).filter(|&c| self.try_candidate(slot, c)).collect();
                match ok.len() {
                    0 => return self.no_overload(slot),
                    1 => {
                        self.commit(slot, ok[0]);
                        progress = true;
                    }
                    _ => {}
                }
            }
            if progress {
                continue;
            }
            let Some(slot) = (0..self.consts.len()).find(|&s| self.consts[s].resolved.is_none()) else {
                return Ok(());
            };
            match (0..self.consts[slot].candidates.len()).find(|&c| self.try_candidate(slot, c)) {
                Some(c) => self.commit(slot, c),
                None => return self.no_overload(slot),
            }
        }
    }

    fn no_overload(&self, slot: usize) -> Result<(), TermError> {
        let p = &self.consts[slot];
        let names: Vec<&str> = p.candidates.iter().map(|c| &*c.constant).collect();
        type_error(p.offset, format!("no reading of {} fits type {}", names.join("/"), self.show(&p.ty)))
    }

    fn build(&self, e: &Elab, names: &HashMap<usize, Type>) -> Result<Term, TermError> {
        Ok(match e {
            Elab::Var { name, ty } => Term::var(name, self.finish(ty, names)),
            Elab::Const { slot, ty } => {
                let p = &self.consts[*slot];
                let cand = &p.candidates[p.resolved.expect("overloads resolved")];
                self.symbols.mk_const(&cand.constant, self.finish(ty, names))?
            }
            Elab::Ground(t) => t.clone(),
            Elab::App { fun, arg, .. } => Term::app_unchecked(self.build(fun, names)?, self.build(arg, names)?),
            Elab::Abs { var, var_ty, body, .. } => Term::abs(var, self.finish(var_ty, names), self.build(body, names)?),
        })
    }

    fn finish(&self, t: &ITy, names: &HashMap<usize, Type>) -> Type {
        match self.zonk(t) {
            ITy::Meta(m) => names[&m].clone(),
            ITy::Var(v) => Type::Var(v),
            ITy::App(c, args) => Type::App(c, args.iter().map(|a| self.finish(a, names)).collect()),
        }
    }
}

fn collect_metas(inf: &Infer, e: &Elab, metas: &mut Vec<usize>, rigid: &mut HashSet<Name>) {
    fn walk(inf: &Infer, t: &ITy, metas: &mut Vec<usize>, rigid: &mut HashSet<Name>) {
        match inf.zonk(t) {
            ITy::Meta(m) => {
                if !metas.contains(&m) {
                    metas.push(m)
                }
            }
            ITy::Var(v) => {
                rigid.insert(v);
            }
            ITy::App(_, args) => args.iter().for_each(|a| walk(inf, a, metas, rigid)),
        }
    }
    match e {
        Elab::Var { ty, .. } | Elab::Const { ty, .. } => walk(inf, ty, metas, rigid),
        Elab::Ground(_) => {}
        Elab::App { fun, arg, .. } => {
            collect_metas(inf, fun, metas, rigid);
            collect_metas(inf, arg, metas, rigid);
        }
        Elab::Abs { var_ty, body, .. } => {
            walk(inf, var_ty, metas, rigid);
            collect_metas(inf, body, metas, rigid);
        }
    }
}

fn check_type(symbols: &SymbolTable, t: &Type, offset: usize) -> Result<(), TermError> {
    if let Type::App(c, args) = t {
        match symbols.tycon_arity(c) {
            Some(n) if n == args.len() => {}
            Some(n) => {
                return Err(TermError::Parse {
                    offset,
                    message: format!("type constructor {} expects {} arguments", c, n),
                })
            }
            // numeric index types such as the 3 in real^3
            None if args.is_empty() && c.bytes().all(|b| b.is_ascii_digit()) => {}
            None => return Err(TermError::UnknownSymbol { name: c.to_string(), offset }),
        }
        for a in args {
            check_type(symbols, a, offset)?;
        }
    }
    Ok(())
}

/// The num numeral `n` as a NUMERAL/BIT0/BIT1/_0 chain.
pub fn numeral(symbols: &SymbolTable, n: u128, offset: usize) -> Result<Term, TermError> {
    let need = |name: &str| {
        if symbols.is_const(name) {
            Ok(())
        } else {
            Err(TermError::UnknownSymbol { name: name.to_string(), offset })
        }
    };
    for c in ["NUMERAL", "_0", "BIT0", "BIT1"] {
        need(c)?;
    }
    let num = Type::num();
    let unary = Type::fun(num.clone(), num.clone());
    let mut bits = Vec::new();
    let mut k = n;
    while k > 0 {
        bits.push(k & 1 == 1);
        k >>= 1;
    }
    let mut t = Term::constant("_0", num.clone(), vec![]);
    for bit in bits.into_iter().rev() {
        let c = Term::constant(if bit { "BIT1" } else { "BIT0" }, unary.clone(), vec![]);
        t = Term::app_unchecked(c, t);
    }
    Ok(Term::app_unchecked(Term::constant("NUMERAL", unary, vec![]), t))
}

pub(crate) fn elaborate(pre: &Pre, symbols: &SymbolTable, want: Option<&Type>) -> Result<Term, TermError> {
    let mut inf = Infer { symbols, subst: Vec::new(), frees: HashMap::new(), scope: Vec::new(), consts: Vec::new() };
    let e = inf.elab(pre)?;
    if let Some(w) = want {
        let ty = Infer::ty_of(&e);
        if !inf.unify(&ty, &ITy::from_type(w)) {
            return type_error(pre.offset(), format!("term has type {} but {} was expected", inf.show(&ty), w));
        }
    }
    inf.resolve_overloads()?;
    let mut metas = Vec::new();
    let mut rigid = HashSet::new();
    collect_metas(&inf, &e, &mut metas, &mut rigid);
    let mut names = HashMap::new();
    let mut next = 0;
    for m in metas {
        let name = loop {
            let cand: Name = canonical_tyvar_name(next).into();
            next += 1;
            if !rigid.contains(&cand) {
                break cand;
            }
        };
        names.insert(m, Type::Var(name));
    }
    inf.build(&e, &names)
}

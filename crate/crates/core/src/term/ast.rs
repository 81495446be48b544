use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::types::{Name, Type};
use super::TermError;

/// A typed lambda term. Cheap to clone; immutable once built.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Term(Arc<TermKind>);

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TermKind {
    Var {
        name: Name,
        ty: Type,
    },
    /// A constant instance. `tyargs` instantiates the scheme's type variables
    /// in the scheme's own first-occurrence order.
    Const {
        name: Name,
        ty: Type,
        tyargs: Vec<Type>,
    },
    App {
        fun: Term,
        arg: Term,
        ty: Type,
    },
    Abs {
        var: Name,
        var_ty: Type,
        body: Term,
        ty: Type,
    },
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.0 {
            TermKind::Var { name, ty } => write!(f, "({}:{})", name, ty),
            TermKind::Const { name, .. } => write!(f, "{}", name),
            TermKind::App { fun, arg, .. } => write!(f, "({:?} {:?})", fun, arg),
            TermKind::Abs { var, var_ty, body, .. } => write!(f, "(\\{}:{}. {:?})", var, var_ty, body),
        }
    }
}

impl Term {
    pub fn kind(&self) -> &TermKind {
        &self.0
    }

    pub fn var(name: &str, ty: Type) -> Term {
        Term(Arc::new(TermKind::Var { name: name.into(), ty }))
    }

    pub fn constant(name: &str, ty: Type, tyargs: Vec<Type>) -> Term {
        Term(Arc::new(TermKind::Const { name: name.into(), ty, tyargs }))
    }

    pub fn app(fun: Term, arg: Term) -> Result<Term, TermError> {
        let ty = match fun.ty().dest_fun() {
            Some((dom, cod)) if dom == arg.ty() => cod.clone(),
            Some((dom, _)) => {
                return Err(TermError::Type {
                    offset: 0,
                    message: format!("argument has type {} but function expects {}", arg.ty(), dom),
                })
            }
            None => {
                return Err(TermError::Type { offset: 0, message: format!("cannot apply a term of type {}", fun.ty()) })
            }
        };
        Ok(Term(Arc::new(TermKind::App { fun, arg, ty })))
    }

    /// Application without the domain check; used where types are known to line up.
    pub(crate) fn app_unchecked(fun: Term, arg: Term) -> Term {
        let ty = fun.ty().dest_fun().map(|(_, cod)| cod.clone()).expect("application of a non-function");
        debug_assert_eq!(fun.ty().dest_fun().map(|(d, _)| d), Some(arg.ty()));
        Term(Arc::new(TermKind::App { fun, arg, ty }))
    }

    pub fn apps(head: Term, args: impl IntoIterator<Item = Term>) -> Result<Term, TermError> {
        args.into_iter().try_fold(head, Term::app)
    }

    pub fn abs(var: &str, var_ty: Type, body: Term) -> Term {
        let ty = Type::fun(var_ty.clone(), body.ty().clone());
        Term(Arc::new(TermKind::Abs { var: var.into(), var_ty, body, ty }))
    }

    pub fn ty(&self) -> &Type {
        match &*self.0 {
            TermKind::Var { ty, .. }
            | TermKind::Const { ty, .. }
            | TermKind::App { ty, .. }
            | TermKind::Abs { ty, .. } => ty,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(&*self.0, TermKind::Var { .. })
    }

    pub fn const_name(&self) -> Option<&str> {
        match &*self.0 {
            TermKind::Const { name, .. } => Some(name),
            _ => None,
        }
    }

    pub fn is_const(&self, name: &str) -> bool {
        self.const_name() == Some(name)
    }

    pub fn dest_app(&self) -> Option<(&Term, &Term)> {
        match &*self.0 {
            TermKind::App { fun, arg, .. } => Some((fun, arg)),
            _ => None,
        }
    }

    pub fn dest_abs(&self) -> Option<(&Name, &Type, &Term)> {
        match &*self.0 {
            TermKind::Abs { var, var_ty, body, .. } => Some((var, var_ty, body)),
            _ => None,
        }
    }

    /// Split an application spine `f a1 ... an` into `(f, [a1, ..., an])`.
    pub fn strip_comb(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut t = self;
        while let Some((f, a)) = t.dest_app() {
            args.push(a);
            t = f;
        }
        args.reverse();
        (t, args)
    }

    /// `c a b` for a binary constant `c`.
    pub fn dest_binary(&self, name: &str) -> Option<(&Term, &Term)> {
        let (f, r) = self.dest_app()?;
        let (c, l) = f.dest_app()?;
        c.is_const(name).then_some((l, r))
    }

    pub fn dest_unary(&self, name: &str) -> Option<&Term> {
        let (f, a) = self.dest_app()?;
        f.is_const(name).then_some(a)
    }

    /// `b (\x. body)` for a binder constant `b`.
    pub fn dest_binder(&self, name: &str) -> Option<(&Name, &Type, &Term)> {
        self.dest_unary(name)?.dest_abs()
    }

    /// Free variables as (name, type), in first-occurrence order.
    pub fn frees(&self) -> Vec<(Name, Type)> {
        let mut out = Vec::new();
        let mut bound = Vec::new();
        self.collect_frees(&mut bound, &mut out);
        out
    }

    fn collect_frees(&self, bound: &mut Vec<(Name, Type)>, out: &mut Vec<(Name, Type)>) {
        match &*self.0 {
            TermKind::Var { name, ty } => {
                let v = (name.clone(), ty.clone());
                if !bound.contains(&v) && !out.contains(&v) {
                    out.push(v);
                }
            }
            TermKind::Const { .. } => {}
            TermKind::App { fun, arg, .. } => {
                fun.collect_frees(bound, out);
                arg.collect_frees(bound, out);
            }
            TermKind::Abs { var, var_ty, body, .. } => {
                bound.push((var.clone(), var_ty.clone()));
                body.collect_frees(bound, out);
                bound.pop();
            }
        }
    }

    pub fn has_free(&self, name: &str, ty: &Type) -> bool {
        self.frees().iter().any(|(n, t)| &**n == name && t == ty)
    }

    /// Type variables in order of first occurrence over the leaves, left to right.
    pub fn tyvars(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.collect_tyvars(&mut out);
        out
    }

    fn collect_tyvars(&self, out: &mut Vec<Name>) {
        match &*self.0 {
            TermKind::Var { ty, .. } | TermKind::Const { ty, .. } => ty.collect_tyvars(out),
            TermKind::App { fun, arg, .. } => {
                fun.collect_tyvars(out);
                arg.collect_tyvars(out);
            }
            TermKind::Abs { var_ty, body, .. } => {
                var_ty.collect_tyvars(out);
                body.collect_tyvars(out);
            }
        }
    }

    pub fn inst_types(&self, sigma: &HashMap<Name, Type>) -> Term {
        if sigma.is_empty() {
            return self.clone();
        }
        match &*self.0 {
            TermKind::Var { name, ty } => Term(Arc::new(TermKind::Var { name: name.clone(), ty: ty.subst(sigma) })),
            TermKind::Const { name, ty, tyargs } => Term(Arc::new(TermKind::Const {
                name: name.clone(),
                ty: ty.subst(sigma),
                tyargs: tyargs.iter().map(|t| t.subst(sigma)).collect(),
            })),
            TermKind::App { fun, arg, ty } => Term(Arc::new(TermKind::App {
                fun: fun.inst_types(sigma),
                arg: arg.inst_types(sigma),
                ty: ty.subst(sigma),
            })),
            TermKind::Abs { var, var_ty, body, ty } => Term(Arc::new(TermKind::Abs {
                var: var.clone(),
                var_ty: var_ty.subst(sigma),
                body: body.inst_types(sigma),
                ty: ty.subst(sigma),
            })),
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match &*self.0 {
            TermKind::Var { .. } | TermKind::Const { .. } => 1,
            TermKind::App { fun, arg, .. } => 1 + fun.size() + arg.size(),
            TermKind::Abs { body, .. } => 1 + body.size(),
        }
    }

    /// All subterms in pre-order, deduplicated. Binding occurrences of
    /// abstraction variables are not subterms; their uses in the body are.
    pub fn subterms(&self) -> Vec<Term> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        let mut stack = vec![self.clone()];
        while let Some(t) = stack.pop() {
            if !seen.insert(t.clone()) {
                continue;
            }
            match &*t.0 {
                TermKind::App { fun, arg, .. } => {
                    stack.push(arg.clone());
                    stack.push(fun.clone());
                }
                TermKind::Abs { body, .. } => stack.push(body.clone()),
                _ => {}
            }
            out.push(t);
        }
        out
    }

    /// Alpha-equivalence (bound variable names are irrelevant; types must agree).
    pub fn alpha_eq(&self, other: &Term) -> bool {
        type Binding<'a> = (&'a Name, &'a Type);
        fn go<'a>(a: &'a Term, b: &'a Term, env: &mut Vec<(Binding<'a>, Binding<'a>)>) -> bool {
            match (a.kind(), b.kind()) {
                (TermKind::Var { name: n1, ty: t1 }, TermKind::Var { name: n2, ty: t2 }) => {
                    for ((bn1, bt1), (bn2, bt2)) in env.iter().rev() {
                        let l = *bn1 == n1 && *bt1 == t1;
                        let r = *bn2 == n2 && *bt2 == t2;
                        if l || r {
                            return l && r;
                        }
                    }
                    n1 == n2 && t1 == t2
                }
                (TermKind::Const { name: n1, ty: t1, .. }, TermKind::Const { name: n2, ty: t2, .. }) => {
                    n1 == n2 && t1 == t2
                }
                (TermKind::App { fun: f1, arg: a1, .. }, TermKind::App { fun: f2, arg: a2, .. }) => {
                    go(f1, f2, env) && go(a1, a2, env)
                }
                (
                    TermKind::Abs { var: v1, var_ty: t1, body: b1, .. },
                    TermKind::Abs { var: v2, var_ty: t2, body: b2, .. },
                ) => {
                    if t1 != t2 {
                        return false;
                    }
                    env.push(((v1, t1), (v2, t2)));
                    let r = go(b1, b2, env);
                    env.pop();
                    r
                }
                _ => false,
            }
        }
        go(self, other, &mut Vec::new())
    }

    /// Check that every application is well typed. Terms built through the
    /// parser always satisfy this; the check guards generated terms.
    pub fn check_types(&self) -> Result<(), TermError> {
        match &*self.0 {
            TermKind::Var { .. } | TermKind::Const { .. } => Ok(()),
            TermKind::App { fun, arg, ty } => {
                fun.check_types()?;
                arg.check_types()?;
                match fun.ty().dest_fun() {
                    Some((d, c)) if d == arg.ty() && c == ty => Ok(()),
                    _ => Err(TermError::Type {
                        offset: 0,
                        message: format!("ill-typed application of {} to {}", fun.ty(), arg.ty()),
                    }),
                }
            }
            TermKind::Abs { var_ty, body, ty, .. } => {
                body.check_types()?;
                if *ty == Type::fun(var_ty.clone(), body.ty().clone()) {
                    Ok(())
                } else {
                    Err(TermError::Type { offset: 0, message: "ill-typed abstraction".into() })
                }
            }
        }
    }

    /// Replace free occurrences of the variable `(name, ty)` with `value`.
    /// The caller guarantees `value` has no free variables that could be captured.
    pub fn subst_free(&self, name: &str, ty: &Type, value: &Term) -> Term {
        match &*self.0 {
            TermKind::Var { name: n, ty: t } if &**n == name && t == ty => value.clone(),
            TermKind::Var { .. } | TermKind::Const { .. } => self.clone(),
            TermKind::App { fun, arg, .. } => {
                Term::app_unchecked(fun.subst_free(name, ty, value), arg.subst_free(name, ty, value))
            }
            TermKind::Abs { var, var_ty, body, .. } => {
                if &**var == name && var_ty == ty {
                    self.clone()
                } else {
                    Term::abs(var, var_ty.clone(), body.subst_free(name, ty, value))
                }
            }
        }
    }
}

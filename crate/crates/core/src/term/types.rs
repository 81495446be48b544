use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

pub type Name = Arc<str>;

/// A HOL type: either a type variable or an applied type constructor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Var(Name),
    App(Name, Vec<Type>),
}

impl Type {
    pub fn var(name: &str) -> Type {
        Type::Var(name.into())
    }

    pub fn con(name: &str, args: Vec<Type>) -> Type {
        Type::App(name.into(), args)
    }

    pub fn base(name: &str) -> Type {
        Type::App(name.into(), Vec::new())
    }

    pub fn bool() -> Type {
        Type::base("bool")
    }

    pub fn num() -> Type {
        Type::base("num")
    }

    pub fn real() -> Type {
        Type::base("real")
    }

    pub fn fun(dom: Type, cod: Type) -> Type {
        Type::App("fun".into(), vec![dom, cod])
    }

    /// `a1 -> a2 -> ... -> result`
    pub fn funs(args: impl IntoIterator<Item = Type>, result: Type) -> Type {
        let args: Vec<Type> = args.into_iter().collect();
        args.into_iter().rev().fold(result, |acc, a| Type::fun(a, acc))
    }

    pub fn is_bool(&self) -> bool {
        matches!(self, Type::App(c, a) if &**c == "bool" && a.is_empty())
    }

    pub fn is_fun(&self) -> bool {
        self.dest_fun().is_some()
    }

    pub fn dest_fun(&self) -> Option<(&Type, &Type)> {
        match self {
            Type::App(c, args) if &**c == "fun" && args.len() == 2 => Some((&args[0], &args[1])),
            _ => None,
        }
    }

    /// Type variables in order of first left-to-right occurrence.
    pub fn tyvars(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.collect_tyvars(&mut out);
        out
    }

    pub(crate) fn collect_tyvars(&self, out: &mut Vec<Name>) {
        match self {
            Type::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Type::App(_, args) => args.iter().for_each(|a| a.collect_tyvars(out)),
        }
    }

    /// Type constructor names in order of first occurrence.
    pub fn constructors(&self, out: &mut Vec<Name>) {
        if let Type::App(c, args) = self {
            if !out.contains(c) {
                out.push(c.clone());
            }
            args.iter().for_each(|a| a.constructors(out));
        }
    }

    pub fn subst(&self, sigma: &HashMap<Name, Type>) -> Type {
        match self {
            Type::Var(v) => sigma.get(v).cloned().unwrap_or_else(|| self.clone()),
            Type::App(c, args) => Type::App(c.clone(), args.iter().map(|a| a.subst(sigma)).collect()),
        }
    }

    /// One-way matching: find `sigma` with `pattern.subst(sigma) == self`.
    pub fn match_against(pattern: &Type, ty: &Type, sigma: &mut HashMap<Name, Type>) -> bool {
        match (pattern, ty) {
            (Type::Var(v), _) => match sigma.get(v) {
                Some(bound) => bound == ty,
                None => {
                    sigma.insert(v.clone(), ty.clone());
                    true
                }
            },
            (Type::App(c1, a1), Type::App(c2, a2)) => {
                c1 == c2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(p, t)| Type::match_against(p, t, sigma))
            }
            _ => false,
        }
    }

    /// Erase variable names, keeping only the constructor skeleton.
    pub fn skeleton(&self) -> Type {
        match self {
            Type::Var(_) => Type::var("_"),
            Type::App(c, args) => Type::App(c.clone(), args.iter().map(Type::skeleton).collect()),
        }
    }
}

/// The canonical name of the `index`-th type variable: A, B, ..., Z, AA, AB, ...
pub fn canonical_tyvar_name(mut index: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'A' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// Rename type variables to A, B, C, ... in order of first left-to-right occurrence.
pub fn normalize_type(ty: &Type) -> Type {
    let sigma: HashMap<Name, Type> =
        ty.tyvars().into_iter().enumerate().map(|(i, v)| (v, Type::Var(canonical_tyvar_name(i).into()))).collect();
    ty.subst(&sigma)
}

/// Surface syntax used by the parser: `'a`, `real^'N->bool`, `num#real`, `num list`.
impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_type(self, true))
    }
}

const PREC_FUN: u8 = 1;
const PREC_PROD: u8 = 2;
const PREC_CART: u8 = 3;
const PREC_ATOM: u8 = 4;

/// Print a type in surface syntax. Type variables carry a leading quote when `quoted`.
pub fn print_type(ty: &Type, quoted: bool) -> String {
    let mut s = String::new();
    write_type(&mut s, ty, 0, quoted);
    s
}

fn write_type(out: &mut String, ty: &Type, ctx: u8, quoted: bool) {
    match ty {
        Type::Var(v) => {
            if quoted {
                out.push('\'');
            }
            out.push_str(v);
        }
        Type::App(c, args) => {
            let (prec, binary) = match (&**c, args.len()) {
                ("fun", 2) => (PREC_FUN, Some(("->", true))),
                ("prod", 2) => (PREC_PROD, Some(("#", true))),
                ("cart", 2) => (PREC_CART, Some(("^", false))),
                _ => (PREC_ATOM, None),
            };
            if let Some((op, right_assoc)) = binary {
                let paren = prec < ctx;
                if paren {
                    out.push('(');
                }
                let (lp, rp) = if right_assoc { (prec + 1, prec) } else { (prec, prec + 1) };
                write_type(out, &args[0], lp, quoted);
                out.push_str(op);
                write_type(out, &args[1], rp, quoted);
                if paren {
                    out.push(')');
                }
                return;
            }
            match args.len() {
                0 => out.push_str(c),
                1 => {
                    write_type(out, &args[0], PREC_ATOM, quoted);
                    out.push(' ');
                    out.push_str(c);
                }
                _ => {
                    out.push('(');
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push(',');
                        }
                        write_type(out, a, 0, quoted);
                    }
                    out.push(')');
                    out.push_str(c);
                }
            }
        }
    }
}

use std::collections::{BTreeMap, HashMap};

use super::types::{Name, Type};
use super::TermError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Assoc {
    Left,
    Right,
}

/// How a surface token is written.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fixity {
    /// Ordinary identifier applied by juxtaposition.
    Ident,
    Infix {
        prec: u8,
        assoc: Assoc,
    },
    /// Tight prefix operator such as `~` or `&`.
    Prefix,
    /// `b x. body`, i.e. the constant applied to an abstraction.
    Binder,
}

/// One resolution of an overloaded surface token: the constant plus the
/// (possibly restricted) type scheme it has when reached through this token.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub constant: Name,
    pub scheme: Type,
}

#[derive(Clone, Debug)]
pub struct Surface {
    pub fixity: Fixity,
    pub candidates: Vec<Candidate>,
}

/// Constants with their polymorphic schemes, type constructors with arities,
/// and the surface syntax used to read and print them.
#[derive(Clone, Debug, Default)]
pub struct SymbolTable {
    consts: BTreeMap<Name, Type>,
    tycons: BTreeMap<Name, usize>,
    surfaces: HashMap<String, Surface>,
    print_as: HashMap<Name, (String, Fixity)>,
}

fn v(n: &str) -> Type {
    Type::var(n)
}

fn cart(a: Type, n: Type) -> Type {
    Type::con("cart", vec![a, n])
}

fn set(a: Type) -> Type {
    Type::fun(a, Type::bool())
}

impl SymbolTable {
    pub fn empty() -> SymbolTable {
        SymbolTable::default()
    }

    /// The built-in logical, arithmetic, set and vector vocabulary.
    pub fn prelude() -> SymbolTable {
        use Assoc::{Left, Right};
        let mut t = SymbolTable::empty();
        for (name, arity) in [("bool", 0), ("fun", 2), ("num", 0), ("real", 0), ("cart", 2), ("prod", 2)] {
            t.tycons.insert(name.into(), arity);
        }
        let b = Type::bool;
        let num = Type::num;
        let real = Type::real;
        let a = || v("A");
        let bin = |x: Type, r: Type| Type::funs([x.clone(), x], r);
        let vec_n = || cart(real(), v("N"));

        // logic
        t.add_infix("=", bin(a(), b()), "=", 12, Right);
        t.add_overload("<=>", "=", bin(b(), b()), Fixity::Infix { prec: 2, assoc: Right });
        t.add_infix("==>", bin(b(), b()), "==>", 4, Right);
        t.add_infix("\\/", bin(b(), b()), "\\/", 6, Right);
        t.add_infix("/\\", bin(b(), b()), "/\\", 8, Right);
        t.add_prefix("~", Type::fun(b(), b()), "~");
        for q in ["!", "?", "?!"] {
            t.add_binder(q, Type::fun(set(a()), b()));
        }
        t.add_binder("@", Type::fun(set(a()), a()));
        t.add_const("T", b());
        t.add_const("F", b());
        t.add_const("I", Type::fun(a(), a()));
        t.add_infix(
            "o",
            Type::funs([Type::fun(v("B"), v("C")), Type::fun(a(), v("B"))], Type::fun(a(), v("C"))),
            "o",
            26,
            Right,
        );
        let prod = Type::con("prod", vec![a(), v("B")]);
        t.add_infix(",", Type::funs([a(), v("B")], prod.clone()), ",", 14, Right);
        t.add_ident("FST", Type::fun(prod.clone(), a()), "FST");
        t.add_ident("SND", Type::fun(prod, v("B")), "SND");

        // natural numbers
        t.add_const("_0", num());
        t.add_const("NUMERAL", Type::fun(num(), num()));
        t.add_const("BIT0", Type::fun(num(), num()));
        t.add_const("BIT1", Type::fun(num(), num()));
        t.add_ident("SUC", Type::fun(num(), num()), "SUC");
        t.add_ident("PRE", Type::fun(num(), num()), "PRE");
        // real arithmetic; listed before num so it wins unresolved overloads
        t.add_prefix("real_of_num", Type::fun(num(), real()), "&");
        t.add_infix("real_add", bin(real(), real()), "+", 16, Right);
        t.add_infix("real_sub", bin(real(), real()), "-", 18, Left);
        t.add_infix("real_mul", bin(real(), real()), "*", 20, Right);
        t.add_infix("real_div", bin(real(), real()), "/", 22, Left);
        t.add_infix("real_pow", Type::funs([real(), num()], real()), "pow", 24, Left);
        t.add_infix("real_lt", bin(real(), b()), "<", 12, Right);
        t.add_infix("real_le", bin(real(), b()), "<=", 12, Right);
        t.add_infix("real_gt", bin(real(), b()), ">", 12, Right);
        t.add_infix("real_ge", bin(real(), b()), ">=", 12, Right);
        t.add_prefix("real_neg", Type::fun(real(), real()), "--");
        t.add_ident("real_abs", Type::fun(real(), real()), "abs");
        t.add_ident("real_max", bin(real(), real()), "max");
        t.add_ident("real_min", bin(real(), real()), "min");
        t.add_ident("real_inv", Type::fun(real(), real()), "inv");
        t.add_infix("+", bin(num(), num()), "+", 16, Right);
        t.add_infix("-", bin(num(), num()), "-", 18, Left);
        t.add_infix("*", bin(num(), num()), "*", 20, Right);
        t.add_infix("EXP", bin(num(), num()), "EXP", 24, Left);
        t.add_infix("DIV", bin(num(), num()), "DIV", 22, Left);
        t.add_infix("MOD", bin(num(), num()), "MOD", 22, Left);
        t.add_infix("<", bin(num(), b()), "<", 12, Right);
        t.add_infix("<=", bin(num(), b()), "<=", 12, Right);
        t.add_infix(">", bin(num(), b()), ">", 12, Right);
        t.add_infix(">=", bin(num(), b()), ">=", 12, Right);

        // sets
        t.add_infix("IN", Type::funs([a(), set(a())], b()), "IN", 11, Right);
        t.add_infix("SUBSET", bin(set(a()), b()), "SUBSET", 12, Right);
        t.add_infix("PSUBSET", bin(set(a()), b()), "PSUBSET", 12, Right);
        t.add_infix("UNION", bin(set(a()), set(a())), "UNION", 16, Right);
        t.add_infix("INTER", bin(set(a()), set(a())), "INTER", 20, Right);
        t.add_infix("DIFF", bin(set(a()), set(a())), "DIFF", 18, Left);
        t.add_infix("INSERT", Type::funs([a(), set(a())], set(a())), "INSERT", 21, Right);
        t.add_infix("DELETE", Type::funs([set(a()), a()], set(a())), "DELETE", 21, Left);
        t.add_const("EMPTY", set(a()));
        t.add_const("UNIV", set(a()));

        // vectors over real^N
        t.add_infix("vector_add", bin(vec_n(), vec_n()), "+", 16, Right);
        t.add_infix("vector_sub", bin(vec_n(), vec_n()), "-", 18, Left);
        t.add_infix("%", Type::funs([real(), vec_n()], vec_n()), "%", 21, Right);
        t.add_prefix("vector_neg", Type::fun(vec_n(), vec_n()), "--");
        t.add_ident("vector_norm", Type::fun(vec_n(), real()), "norm");
        t.add_ident("dot", bin(vec_n(), real()), "dot");
        t.add_const("closed", set(set(vec_n())));
        t.add_const("open", set(set(vec_n())));
        t
    }

    /// Register a constant written as its own name.
    pub fn add_const(&mut self, name: &str, scheme: Type) {
        self.add_ident(name, scheme, name);
    }

    pub fn add_ident(&mut self, name: &str, scheme: Type, surface: &str) {
        self.add_symbol(name, scheme, surface, Fixity::Ident);
    }

    pub fn add_infix(&mut self, name: &str, scheme: Type, surface: &str, prec: u8, assoc: Assoc) {
        self.add_symbol(name, scheme, surface, Fixity::Infix { prec, assoc });
    }

    pub fn add_prefix(&mut self, name: &str, scheme: Type, surface: &str) {
        self.add_symbol(name, scheme, surface, Fixity::Prefix);
    }

    pub fn add_binder(&mut self, name: &str, scheme: Type) {
        self.add_symbol(name, scheme, name, Fixity::Binder);
    }

    fn add_symbol(&mut self, name: &str, scheme: Type, surface: &str, fixity: Fixity) {
        self.consts.insert(name.into(), scheme.clone());
        self.print_as.insert(name.into(), (surface.to_string(), fixity));
        self.add_overload(surface, name, scheme, fixity);
    }

    /// Make `surface` additionally resolve to `constant` at `scheme`.
    pub fn add_overload(&mut self, surface: &str, constant: &str, scheme: Type, fixity: Fixity) {
        let entry =
            self.surfaces.entry(surface.to_string()).or_insert_with(|| Surface { fixity, candidates: Vec::new() });
        entry.candidates.retain(|c| &*c.constant != constant);
        entry.candidates.push(Candidate { constant: constant.into(), scheme });
    }

    pub fn add_tycon(&mut self, name: &str, arity: usize) {
        self.tycons.insert(name.into(), arity);
    }

    pub fn const_scheme(&self, name: &str) -> Option<&Type> {
        self.consts.get(name)
    }

    pub fn is_const(&self, name: &str) -> bool {
        self.consts.contains_key(name)
    }

    pub fn constants(&self) -> impl Iterator<Item = (&Name, &Type)> {
        self.consts.iter()
    }

    pub fn tycon_arity(&self, name: &str) -> Option<usize> {
        self.tycons.get(name).copied()
    }

    pub fn surface(&self, token: &str) -> Option<&Surface> {
        self.surfaces.get(token)
    }

    pub fn is_surface_symbol(&self, token: &str) -> bool {
        self.surfaces.contains_key(token)
    }

    /// How constant `name` is printed; unknown constants print as identifiers.
    pub fn print_form<'s>(&'s self, name: &'s str) -> (&'s str, Fixity) {
        match self.print_as.get(name) {
            Some((s, f)) => (s.as_str(), *f),
            None => (name, Fixity::Ident),
        }
    }

    pub fn infix_info(&self, token: &str) -> Option<(u8, Assoc)> {
        match self.surfaces.get(token)?.fixity {
            Fixity::Infix { prec, assoc } => Some((prec, assoc)),
            _ => None,
        }
    }

    /// Build a constant instance at type `ty`, computing its type arguments.
    pub fn mk_const(&self, name: &str, ty: Type) -> Result<super::Term, TermError> {
        let scheme =
            self.consts.get(name).ok_or_else(|| TermError::UnknownSymbol { name: name.to_string(), offset: 0 })?;
        let mut sigma = HashMap::new();
        if !Type::match_against(scheme, &ty, &mut sigma) {
            return Err(TermError::Type { offset: 0, message: format!("{} cannot have type {}", name, ty) });
        }
        let tyargs =
            scheme.tyvars().iter().map(|v| sigma.get(v).cloned().unwrap_or_else(|| Type::Var(v.clone()))).collect();
        Ok(super::Term::constant(name, ty, tyargs))
    }
}

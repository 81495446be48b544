use std::collections::HashMap;

use super::ast::{Term, TermKind};
use super::symbols::{Assoc, Fixity, SymbolTable};
use super::types::{canonical_tyvar_name, print_type, Name, Type};

/// How variables are rendered.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarMode {
    /// Every variable prints as `A` followed by its normalized type, e.g. `Areal^A`.
    Typed,
    /// Every variable prints as `A`.
    Same,
    /// Variables keep distinct names.
    Diff,
    /// Fully parenthesized prefix form used for content hashing.
    Hashing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrintOptions {
    pub mode: VarMode,
    /// In `Diff` mode, annotate binders, first free occurrences and polymorphic
    /// constants with their types so the output parses back to the same term.
    pub annotate: bool,
}

/// Canonical rendering: type variables are renamed A, B, ... by first
/// occurrence, and `Diff` output is annotated so that it parses back.
pub fn canonical_print(t: &Term, mode: VarMode, symbols: &SymbolTable) -> String {
    let t = normalize_term_tyvars(t);
    match mode {
        VarMode::Hashing => hashing_print(&t, &HashMap::new()),
        _ => print_term(&t, PrintOptions { mode, annotate: mode == VarMode::Diff }, symbols),
    }
}

/// Rename the type variables of `t` to A, B, C, ... in order of first occurrence.
pub fn normalize_term_tyvars(t: &Term) -> Term {
    let vars = t.tyvars();
    if vars.iter().enumerate().all(|(i, v)| **v == *canonical_tyvar_name(i)) {
        return t.clone();
    }
    let sigma: HashMap<Name, Type> =
        vars.into_iter().enumerate().map(|(i, v)| (v, Type::Var(canonical_tyvar_name(i).into()))).collect();
    t.inst_types(&sigma)
}

/// Print `t` in surface syntax (or prefix form for `Hashing`) without renaming type variables.
pub fn print_term(t: &Term, opts: PrintOptions, symbols: &SymbolTable) -> String {
    if opts.mode == VarMode::Hashing {
        return hashing_print(t, &HashMap::new());
    }
    let mut p = Printer::new(t, opts, symbols);
    p.show(t).0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Level {
    Atom,
    App,
    Prefix,
    Infix(u8, Assoc),
    Binder,
}

struct Printer<'a> {
    opts: PrintOptions,
    symbols: &'a SymbolTable,
    /// Printed names of free variables.
    free_names: HashMap<(Name, Type), String>,
    annotated: std::collections::HashSet<(Name, Type)>,
    /// Bound variables in scope with their printed names, innermost last.
    bound: Vec<(Name, Type, String)>,
}

fn dest_numeral(t: &Term) -> Option<u128> {
    fn chain(t: &Term) -> Option<u128> {
        if t.is_const("_0") {
            return Some(0);
        }
        let (f, a) = t.dest_app()?;
        let inner = chain(a)?;
        match f.const_name()? {
            "BIT0" if inner > 0 => inner.checked_mul(2),
            "BIT1" => inner.checked_mul(2)?.checked_add(1),
            _ => None,
        }
    }
    chain(t.dest_unary("NUMERAL")?)
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

impl<'a> Printer<'a> {
    fn new(t: &Term, opts: PrintOptions, symbols: &'a SymbolTable) -> Printer<'a> {
        let mut free_names = HashMap::new();
        let mut used: Vec<String> = Vec::new();
        for (name, ty) in t.frees() {
            let mut n = name.to_string();
            while used.contains(&n) {
                n.push('\'');
            }
            used.push(n.clone());
            free_names.insert((name, ty), n);
        }
        Printer { opts, symbols, free_names, annotated: Default::default(), bound: Vec::new() }
    }

    fn printed_name(&self, name: &Name, ty: &Type) -> String {
        for (n, t, p) in self.bound.iter().rev() {
            if n == name && t == ty {
                return p.clone();
            }
        }
        self.free_names.get(&(name.clone(), ty.clone())).cloned().unwrap_or_else(|| name.to_string())
    }

    fn var_text(&mut self, name: &Name, ty: &Type, binding: bool) -> String {
        match self.opts.mode {
            VarMode::Typed => format!("A{}", print_type(ty, false)),
            VarMode::Same => "A".to_string(),
            _ => {
                let shown = if binding {
                    self.bound.last().expect("binder pushed").2.clone()
                } else {
                    self.printed_name(name, ty)
                };
                if !self.opts.annotate {
                    return shown;
                }
                let is_bound = self.bound.iter().any(|(n, t, _)| n == name && t == ty);
                if binding || (!is_bound && self.annotated.insert((name.clone(), ty.clone()))) {
                    format!("({}:{})", shown, print_type(ty, true))
                } else {
                    shown
                }
            }
        }
    }

    /// Choose the printed name of a bound variable so it captures nothing in `body`.
    fn bind(&mut self, name: &Name, ty: &Type, body: &Term) {
        let mut avoid: Vec<String> = Vec::new();
        for (n, t) in body.frees() {
            if &n == name && &t == ty {
                continue;
            }
            avoid.push(self.printed_name(&n, &t));
        }
        let mut shown = name.to_string();
        if matches!(self.opts.mode, VarMode::Diff) {
            while avoid.contains(&shown) || self.symbols.is_surface_symbol(&shown) {
                shown.push('\'');
            }
        }
        self.bound.push((name.clone(), ty.clone(), shown));
    }

    fn paren(s: String) -> String {
        format!("({})", s)
    }

    fn atomic(&mut self, t: &Term) -> String {
        let (s, l) = self.show(t);
        if l == Level::Atom {
            s
        } else {
            Self::paren(s)
        }
    }

    fn const_atom(&self, name: &str, ty: &Type) -> String {
        let (surface, fixity) = self.symbols.print_form(name);
        let mut s = match fixity {
            Fixity::Ident => surface.to_string(),
            _ => format!("({})", surface),
        };
        if name == "=" && ty.dest_fun().is_some_and(|(d, _)| d.is_bool()) && fixity != Fixity::Ident {
            s = "(<=>)".to_string();
        }
        if self.opts.mode == VarMode::Diff && self.opts.annotate && !ty.tyvars().is_empty() {
            s = format!("({}:{})", s, print_type(ty, true));
        }
        s
    }

    fn show(&mut self, t: &Term) -> (String, Level) {
        if let Some(n) = dest_numeral(t) {
            return (n.to_string(), Level::Atom);
        }
        match t.kind() {
            TermKind::Var { name, ty } => (self.var_text(name, ty, false), Level::Atom),
            TermKind::Const { name, ty, .. } => (self.const_atom(name, ty), Level::Atom),
            TermKind::Abs { .. } => self.show_binder(t, None),
            TermKind::App { .. } => self.show_app(t),
        }
    }

    fn show_app(&mut self, t: &Term) -> (String, Level) {
        let (head, args) = t.strip_comb();
        if let TermKind::Const { name, ty, .. } = head.kind() {
            let (surface, fixity) = self.symbols.print_form(name);
            let surface = surface.to_string();
            let (core, used) = match fixity {
                Fixity::Infix { prec, assoc } if args.len() >= 2 => {
                    let (surface, prec, assoc) = if &**name == "=" && args[0].ty().is_bool() {
                        ("<=>".to_string(), 2, Assoc::Right)
                    } else {
                        (surface, prec, assoc)
                    };
                    let l = self.operand(args[0], prec, assoc, true);
                    let r = self.operand(args[1], prec, assoc, false);
                    ((format!("{} {} {}", l, surface, r), Level::Infix(prec, assoc)), 2)
                }
                Fixity::Prefix if !args.is_empty() => {
                    let (s, l) = self.show(args[0]);
                    let s = match l {
                        Level::Atom | Level::App | Level::Prefix => s,
                        _ => Self::paren(s),
                    };
                    let glue = if s.starts_with(is_word_char) && surface.ends_with(is_word_char) { " " } else { "" };
                    ((format!("{}{}{}", surface, glue, s), Level::Prefix), 1)
                }
                Fixity::Binder if !args.is_empty() && args[0].dest_abs().is_some() => {
                    (self.show_binder(args[0], Some((name, ty))), 1)
                }
                _ => ((self.const_atom(name, ty), Level::Atom), 0),
            };
            if used == args.len() {
                return core;
            }
            let mut s = if matches!(core.1, Level::Atom | Level::App) { core.0 } else { Self::paren(core.0) };
            for a in &args[used..] {
                s.push(' ');
                s.push_str(&self.atomic(a));
            }
            return (s, Level::App);
        }
        let mut s = self.atomic(head);
        for a in args {
            s.push(' ');
            s.push_str(&self.atomic(a));
        }
        (s, Level::App)
    }

    fn operand(&mut self, t: &Term, prec: u8, assoc: Assoc, left: bool) -> String {
        let (s, l) = self.show(t);
        let ok = match l {
            Level::Atom | Level::App | Level::Prefix => true,
            Level::Infix(q, _) => q > prec || (q == prec && (assoc == Assoc::Left) == left),
            Level::Binder => false,
        };
        if ok {
            s
        } else {
            Self::paren(s)
        }
    }

    /// Print `abs` under binder constant `binder` (or as a lambda when `None`),
    /// merging directly nested binders of the same kind.
    fn show_binder(&mut self, abs: &Term, binder: Option<(&Name, &Type)>) -> (String, Level) {
        let symbol = match binder {
            Some((name, _)) => self.symbols.print_form(name).0.to_string(),
            None => "\\".to_string(),
        };
        let mut vars = Vec::new();
        let mut pushed = 0;
        let mut cur = abs.clone();
        loop {
            let (var, var_ty, body) = cur.dest_abs().expect("abstraction");
            let (var, var_ty, body) = (var.clone(), var_ty.clone(), body.clone());
            self.bind(&var, &var_ty, &body);
            pushed += 1;
            vars.push(self.var_text(&var, &var_ty, true));
            let next = match binder {
                Some((name, _)) => match body.dest_app() {
                    Some((f, a)) if f.is_const(name) && a.dest_abs().is_some() => Some(a.clone()),
                    _ => None,
                },
                None => body.dest_abs().is_some().then(|| body.clone()),
            };
            match next {
                Some(n) => cur = n,
                None => {
                    let (b, _) = self.show(&body);
                    for _ in 0..pushed {
                        self.bound.pop();
                    }
                    return (format!("{}{}. {}", symbol, vars.join(" "), b), Level::Binder);
                }
            }
        }
    }
}

/// Fully parenthesized prefix form with type annotations on every variable
/// and constant instance. Bound variables print as `V<depth>`, free variables
/// as `F<index>`. Constants listed in `renames` print as `#<replacement>`.
pub fn hashing_print(t: &Term, renames: &HashMap<String, String>) -> String {
    let mut out = String::new();
    let mut frees: Vec<(Name, Type)> = Vec::new();
    let mut bound: Vec<(Name, Type)> = Vec::new();
    hash_term(t, renames, &mut frees, &mut bound, &mut out);
    out
}

fn escape_into(out: &mut String, name: &str) {
    for c in name.chars() {
        if matches!(c, '\\' | '(' | ')' | ',' | ':' | '\'' | '#' | ' ') {
            out.push('\\');
        }
        out.push(c);
    }
}

fn hash_type(ty: &Type, out: &mut String) {
    match ty {
        Type::Var(v) => {
            out.push('\'');
            escape_into(out, v);
        }
        Type::App(c, args) => {
            escape_into(out, c);
            if !args.is_empty() {
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    hash_type(a, out);
                }
                out.push(')');
            }
        }
    }
}

fn hash_term(
    t: &Term,
    renames: &HashMap<String, String>,
    frees: &mut Vec<(Name, Type)>,
    bound: &mut Vec<(Name, Type)>,
    out: &mut String,
) {
    match t.kind() {
        TermKind::Var { name, ty } => {
            let key = (name.clone(), ty.clone());
            match bound.iter().rposition(|b| *b == key) {
                Some(level) => out.push_str(&format!("(V{}:", level)),
                None => {
                    let i = match frees.iter().position(|f| *f == key) {
                        Some(i) => i,
                        None => {
                            frees.push(key);
                            frees.len() - 1
                        }
                    };
                    out.push_str(&format!("(F{}:", i));
                }
            }
            hash_type(ty, out);
            out.push(')');
        }
        TermKind::Const { name, tyargs, .. } => {
            match renames.get(&**name) {
                Some(r) => {
                    out.push('#');
                    out.push_str(r);
                }
                None => escape_into(out, name),
            }
            out.push('(');
            for (i, a) in tyargs.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                hash_type(a, out);
            }
            out.push(')');
        }
        TermKind::App { .. } => {
            let (head, args) = t.strip_comb();
            out.push('(');
            hash_term(head, renames, frees, bound, out);
            for a in args {
                hash_term(a, renames, frees, bound, out);
            }
            out.push(')');
        }
        TermKind::Abs { var, var_ty, body, .. } => {
            out.push_str(&format!("(\\(V{}:", bound.len()));
            hash_type(var_ty, out);
            out.push(')');
            bound.push((var.clone(), var_ty.clone()));
            hash_term(body, renames, frees, bound, out);
            bound.pop();
            out.push(')');
        }
    }
}

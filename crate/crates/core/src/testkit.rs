//! Deterministic generators for randomized tests: well-typed terms and toy corpora.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::term::{numeral, SymbolTable, Term, Type};

fn vector() -> Type {
    Type::con("cart", vec![Type::real(), Type::var("N")])
}

fn set_of(t: Type) -> Type {
    Type::fun(t, Type::bool())
}

/// The types random terms range over.
pub fn sample_types() -> Vec<Type> {
    vec![
        Type::bool(),
        Type::num(),
        Type::real(),
        Type::var("a"),
        vector(),
        set_of(Type::num()),
        Type::fun(Type::num(), Type::num()),
    ]
}

/// Random well-typed terms over the prelude vocabulary.
pub struct TermGen<'a> {
    symbols: &'a SymbolTable,
    bound: Vec<(String, Type)>,
}

impl<'a> TermGen<'a> {
    pub fn new(symbols: &'a SymbolTable) -> TermGen<'a> {
        TermGen { symbols, bound: Vec::new() }
    }

    fn c(&self, name: &str, ty: Type) -> Term {
        self.symbols.mk_const(name, ty).expect("prelude constant")
    }

    fn app2(&self, name: &str, ty: Type, a: Term, b: Term) -> Term {
        Term::apps(self.c(name, ty), [a, b]).expect("well typed")
    }

    fn free_name(ty: &Type, i: usize) -> String {
        let stem = match ty {
            t if t.is_bool() => "p",
            t if *t == Type::num() => "n",
            t if *t == Type::real() => "r",
            Type::Var(_) => "a",
            t if *t == vector() => "v",
            t if *t == set_of(Type::num()) => "s",
            _ => "f",
        };
        format!("{}{}", stem, i)
    }

    fn leaf<R: Rng>(&mut self, rng: &mut R, ty: &Type) -> Term {
        let bound: Vec<&(String, Type)> = self.bound.iter().filter(|(_, t)| t == ty).collect();
        if !bound.is_empty() && rng.gen_bool(0.7) {
            // innermost binding of the chosen name is the one the name refers to
            let (name, _) = bound[rng.gen_range(0..bound.len())];
            let shadowed = self.bound.iter().rev().find(|(n, _)| n == name).map(|(_, t)| t.clone());
            if shadowed.as_ref() == Some(ty) {
                return Term::var(name, ty.clone());
            }
        }
        match ty {
            t if *t == Type::num() && rng.gen_bool(0.4) => {
                numeral(self.symbols, rng.gen_range(0..20), 0).expect("numeral")
            }
            t if t.is_bool() && rng.gen_bool(0.2) => self.c(if rng.gen_bool(0.5) { "T" } else { "F" }, Type::bool()),
            t if *t == set_of(Type::num()) && rng.gen_bool(0.3) => self.c("EMPTY", t.clone()),
            _ => {
                let name = Self::free_name(ty, rng.gen_range(0..3));
                if self.bound.iter().any(|(n, _)| *n == name) {
                    // a free variable would be captured by a binder of that name
                    return self.c_default(ty, rng);
                }
                Term::var(&name, ty.clone())
            }
        }
    }

    fn c_default<R: Rng>(&mut self, ty: &Type, rng: &mut R) -> Term {
        match ty {
            t if t.is_bool() => self.c("T", Type::bool()),
            t if *t == Type::num() => numeral(self.symbols, rng.gen_range(0..5), 0).expect("numeral"),
            t if *t == Type::real() => Term::app(
                self.c("real_of_num", Type::fun(Type::num(), Type::real())),
                numeral(self.symbols, 1, 0).expect("numeral"),
            )
            .expect("well typed"),
            t if *t == set_of(Type::num()) => self.c("EMPTY", t.clone()),
            _ => {
                let name = format!("k{}", self.bound.len());
                Term::var(&name, ty.clone())
            }
        }
    }

    fn binder<R: Rng>(&mut self, rng: &mut R, q: &str, depth: u32) -> Term {
        let vty = sample_types()[rng.gen_range(0..4)].clone();
        let name = ["x", "y", "z"].choose(rng).expect("non-empty").to_string();
        self.bound.push((name.clone(), vty.clone()));
        let body = self.gen(rng, &Type::bool(), depth - 1);
        self.bound.pop();
        let abs = Term::abs(&name, vty, body);
        Term::app(self.c(q, Type::fun(abs.ty().clone(), Type::bool())), abs).expect("well typed")
    }

    /// A random term of type `ty` with nesting depth at most `depth`.
    pub fn gen<R: Rng>(&mut self, rng: &mut R, ty: &Type, depth: u32) -> Term {
        if depth == 0 || rng.gen_bool(0.25) {
            return self.leaf(rng, ty);
        }
        let d = depth - 1;
        let b = Type::bool;
        let bb = || Type::funs([b(), b()], b());
        if ty.is_bool() {
            return match rng.gen_range(0..9) {
                0 => {
                    let op = ["/\\", "\\/", "==>", "="].choose(rng).expect("non-empty").to_string();
                    let l = self.gen(rng, &b(), d);
                    let r = self.gen(rng, &b(), d);
                    self.app2(&op, bb(), l, r)
                }
                1 => {
                    let a = self.gen(rng, &b(), d);
                    Term::app(self.c("~", Type::fun(b(), b())), a).expect("well typed")
                }
                2 => {
                    let t = sample_types()[rng.gen_range(1..5)].clone();
                    let l = self.gen(rng, &t, d);
                    let r = self.gen(rng, &t, d);
                    self.app2("=", Type::funs([t.clone(), t], b()), l, r)
                }
                3 => {
                    let (name, t) = if rng.gen_bool(0.5) { ("<", Type::num()) } else { ("real_lt", Type::real()) };
                    let l = self.gen(rng, &t, d);
                    let r = self.gen(rng, &t, d);
                    self.app2(name, Type::funs([t.clone(), t], b()), l, r)
                }
                4 => {
                    let x = self.gen(rng, &Type::num(), d);
                    let s = self.gen(rng, &set_of(Type::num()), d);
                    self.app2("IN", Type::funs([Type::num(), set_of(Type::num())], b()), x, s)
                }
                5 | 6 => {
                    let q = if rng.gen_bool(0.6) { "!" } else { "?" };
                    self.binder(rng, q, depth)
                }
                _ => self.leaf(rng, ty),
            };
        }
        if *ty == Type::num() {
            return match rng.gen_range(0..4) {
                0 => {
                    let name = ["+", "*", "-"].choose(rng).expect("non-empty").to_string();
                    let l = self.gen(rng, ty, d);
                    let r = self.gen(rng, ty, d);
                    self.app2(&name, Type::funs([Type::num(), Type::num()], Type::num()), l, r)
                }
                1 => {
                    let f = self.gen(rng, &Type::fun(Type::num(), Type::num()), d);
                    let a = self.gen(rng, ty, d);
                    Term::app(f, a).expect("well typed")
                }
                _ => self.leaf(rng, ty),
            };
        }
        if *ty == Type::real() {
            return match rng.gen_range(0..5) {
                0 => {
                    let name = ["real_add", "real_mul", "real_sub"].choose(rng).expect("non-empty").to_string();
                    let l = self.gen(rng, ty, d);
                    let r = self.gen(rng, ty, d);
                    self.app2(&name, Type::funs([Type::real(), Type::real()], Type::real()), l, r)
                }
                1 => {
                    let n = self.gen(rng, &Type::num(), d);
                    Term::app(self.c("real_of_num", Type::fun(Type::num(), Type::real())), n).expect("well typed")
                }
                2 => {
                    let v = self.gen(rng, &vector(), d);
                    Term::app(self.c("vector_norm", Type::fun(vector(), Type::real())), v).expect("well typed")
                }
                3 => {
                    let a = self.gen(rng, ty, d);
                    Term::app(self.c("real_neg", Type::fun(Type::real(), Type::real())), a).expect("well typed")
                }
                _ => self.leaf(rng, ty),
            };
        }
        if *ty == vector() && rng.gen_bool(0.5) {
            let l = self.gen(rng, ty, d);
            let r = self.gen(rng, ty, d);
            return self.app2("vector_sub", Type::funs([vector(), vector()], vector()), l, r);
        }
        if *ty == set_of(Type::num()) && rng.gen_bool(0.4) {
            let l = self.gen(rng, ty, d);
            let r = self.gen(rng, ty, d);
            let st = set_of(Type::num());
            return self.app2("UNION", Type::funs([st.clone(), st.clone()], st), l, r);
        }
        if let Type::Var(_) = ty {
            if rng.gen_bool(0.3) {
                let a = self.gen(rng, ty, d);
                return Term::app(self.c("I", Type::fun(ty.clone(), ty.clone())), a).expect("well typed");
            }
        }
        if let Some((dom, cod)) = ty.dest_fun() {
            if rng.gen_bool(0.4) {
                let name = ["x", "y"].choose(rng).expect("non-empty").to_string();
                self.bound.push((name.clone(), dom.clone()));
                let body = self.gen(rng, &cod.clone(), d);
                self.bound.pop();
                return Term::abs(&name, dom.clone(), body);
            }
        }
        self.leaf(rng, ty)
    }
}

/// A random closed-or-open boolean formula.
pub fn random_formula<R: Rng>(rng: &mut R, symbols: &SymbolTable, depth: u32) -> Term {
    TermGen::new(symbols).gen(rng, &Type::bool(), depth)
}

/// A chronological toy training set. Features `0..shared` form a common pool;
/// each example additionally owns two unique features, and depends on a few
/// earlier labels.
pub fn toy_examples<R: Rng>(rng: &mut R, n: usize, shared: u32) -> Vec<crate::learners::TrainingExample> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n as u32 {
        let mut features: Vec<u32> = (0..shared).filter(|_| rng.gen_bool(0.25)).collect();
        features.push(shared + 2 * i);
        features.push(shared + 2 * i + 1);
        let mut deps: Vec<u32> = Vec::new();
        if i > 0 {
            for _ in 0..rng.gen_range(0..=4.min(i)) {
                let d = rng.gen_range(0..i);
                if !deps.contains(&d) {
                    deps.push(d);
                }
            }
        }
        deps.sort_unstable();
        out.push(crate::learners::TrainingExample { label: i, features, deps });
    }
    out
}

/// Live (non-zombie) processes whose command line contains `marker`.
pub fn processes_matching(marker: &str) -> Vec<u32> {
    let Ok(dir) = std::fs::read_dir("/proc") else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for entry in dir.flatten() {
        let Some(pid) = entry.file_name().to_str().and_then(|s| s.parse::<u32>().ok()) else {
            continue;
        };
        let Ok(cmdline) = std::fs::read(entry.path().join("cmdline")) else {
            continue;
        };
        if !String::from_utf8_lossy(&cmdline).contains(marker) {
            continue;
        }
        let zombie = std::fs::read_to_string(entry.path().join("stat"))
            .ok()
            .and_then(|s| s.rsplit_once(')').map(|(_, rest)| rest.trim_start().starts_with('Z')))
            .unwrap_or(true);
        if !zombie {
            out.push(pid);
        }
    }
    out
}

/// A small arithmetic library: `(name, statement, HOL dependencies)` in
/// chronological order.
pub const TOY_THEOREMS: [(&str, &str, &[&str]); 10] = [
    ("ADD_SYM", "!m n. m + n = n + m", &[]),
    ("ADD_ASSOC", "!m n p. m + (n + p) = (m + n) + p", &[]),
    ("ADD_0", "!n. n + 0 = n", &["ADD_SYM"]),
    ("MUL_SYM", "!m n. m * n = n * m", &[]),
    ("MUL_1", "!n. n * 1 = n", &["MUL_SYM"]),
    ("LT_REFL", "!n. ~(n < n)", &[]),
    ("LT_TRANS", "!m n p. m < n /\\ n < p ==> m < p", &["LT_REFL"]),
    ("ADD_AC", "(!m n. m + n = n + m) /\\ (!m n p. m + (n + p) = (m + n) + p)", &["ADD_SYM", "ADD_ASSOC"]),
    ("LT_ADD", "!m n. m < m + n ==> ~(n = 0)", &["ADD_0", "LT_REFL"]),
    ("MUL_ADD", "!m n p. m * (n + p) = m * n + m * p", &["MUL_SYM", "ADD_SYM"]),
];

/// Conjunct labels of [`TOY_THEOREMS`]; HOL dependencies on a theorem
/// expand to all of its conjunct labels.
pub fn toy_records(symbols: &SymbolTable) -> Vec<crate::advise::LabelRecord> {
    use crate::learners::split_conjuncts;
    let mut labels_of: std::collections::HashMap<&str, Vec<String>> = std::collections::HashMap::new();
    let mut out = Vec::new();
    for (name, text, deps) in TOY_THEOREMS {
        let stmt = crate::term::parse_term(text, symbols).expect("toy statement parses");
        let hol_deps: Vec<String> = deps.iter().flat_map(|d| labels_of[d].clone()).collect();
        let parts = split_conjuncts(name, &stmt);
        labels_of.insert(name, parts.iter().map(|(l, _)| l.clone()).collect());
        for (label, statement) in parts {
            out.push(crate::advise::LabelRecord {
                name: label,
                parent: name.to_string(),
                statement,
                hol_deps: hol_deps.clone(),
                atp_proofs: Vec::new(),
            });
        }
    }
    out
}

fn thm_line(name: &str, statement: &str, deps: &[&str]) -> String {
    serde_json::json!({"kind": "thm", "name": name, "statement": statement, "deps": deps}).to_string()
}

fn def_line(symbol: &str, ty: &str, body: &str) -> String {
    serde_json::json!({"kind": "def", "symbol": symbol, "type": ty, "body": body}).to_string()
}

/// [`TOY_THEOREMS`] as corpus records, one per line.
pub fn toy_corpus() -> String {
    TOY_THEOREMS.iter().map(|(n, s, d)| thm_line(n, s, d) + "\n").collect()
}

/// A generated corpus of `n` theorems interleaved with a definition every
/// tenth record. Statements need not be true.
pub fn generated_corpus(n: usize, seed: u64) -> String {
    use rand::SeedableRng;
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let mut out = String::new();
    let mut defined: Vec<String> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for i in 0..n {
        if i % 10 == 0 {
            let g = format!("g{}", i / 10);
            out.push_str(&def_line(&g, "num->num", &format!("\\x. x + {}", i / 10 + 1)));
            out.push('\n');
            defined.push(g);
        }
        let g = &defined[rng.gen_range(0..defined.len())];
        let k = rng.gen_range(0..20);
        let statement = match rng.gen_range(0..5) {
            0 => format!("!n. {} n = n + {}", g, k),
            1 => format!("!m n. m + {} < n ==> m < n + {}", k, i),
            2 => format!("!x. {} (x * {}) = {} x * {}", g, k, g, i),
            3 => format!("(!n. {} n < n + {}) /\\ (!n. n <= {} n)", g, k, g),
            _ => format!("!m n p. m * n + {} = p ==> {} m <= p + {}", k, g, i),
        };
        let mut deps: Vec<&str> = Vec::new();
        if !names.is_empty() {
            for _ in 0..rng.gen_range(0..=4.min(names.len())) {
                let d = names[rng.gen_range(0..names.len())].as_str();
                if !deps.contains(&d) {
                    deps.push(d);
                }
            }
        }
        let name = format!("T{}", i);
        out.push_str(&thm_line(&name, &statement, &deps));
        out.push('\n');
        names.push(name);
    }
    out
}

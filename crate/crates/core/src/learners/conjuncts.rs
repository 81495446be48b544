use crate::term::{Name, Term, Type};

fn flatten_conj(t: &Term, out: &mut Vec<Term>) {
    match t.dest_binary("/\\") {
        Some((l, r)) => {
            flatten_conj(l, out);
            flatten_conj(r, out);
        }
        None => out.push(t.clone()),
    }
}

fn forall(var: &Name, ty: &Type, body: Term) -> Term {
    let abs = Term::abs(var, ty.clone(), body);
    let q = Term::constant("!", Type::fun(abs.ty().clone(), Type::bool()), vec![ty.clone()]);
    Term::app(q, abs).expect("well typed quantifier")
}

/// Split a statement into labelled conjuncts. Leading universal quantifiers
/// are pushed into each conjunct and kept only where the variable occurs.
/// A statement with a single conjunct keeps the plain name; otherwise the
/// labels are `name_1`, `name_2`, ...
pub fn split_conjuncts(name: &str, statement: &Term) -> Vec<(String, Term)> {
    let mut binders = Vec::new();
    let mut body = statement.clone();
    while let Some((v, ty, b)) = body.dest_binder("!") {
        binders.push((v.clone(), ty.clone()));
        body = b.clone();
    }
    let mut parts = Vec::new();
    flatten_conj(&body, &mut parts);
    if parts.len() < 2 {
        return vec![(name.to_string(), statement.clone())];
    }
    parts
        .into_iter()
        .enumerate()
        .map(|(i, part)| {
            let mut t = part;
            for (v, ty) in binders.iter().rev() {
                if t.has_free(v, ty) {
                    t = forall(v, ty, t);
                }
            }
            (format!("{}_{}", name, i + 1), t)
        })
        .collect()
}

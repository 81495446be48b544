use hh_core::term::{
    canonical_print, normalize_term_tyvars, normalize_type, parse_term, SymbolTable, Term, Type, VarMode,
};
use hh_core::testkit::{random_formula, sample_types};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn formula(seed: u64, depth: u32) -> hh_core::term::Term {
    let s = SymbolTable::prelude();
    random_formula(&mut ChaCha8Rng::seed_from_u64(seed), &s, depth)
}

/// Alpha- and type-variable canonical form with free variables renamed by first occurrence.
fn canonical(t: &Term) -> Term {
    let mut t = normalize_term_tyvars(t);
    for (i, (name, ty)) in t.frees().into_iter().enumerate() {
        t = t.subst_free(&name, &ty, &Term::var(&format!("F{}", i), ty.clone()));
    }
    t
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn diff_print_round_trips(seed in any::<u64>()) {
        let s = SymbolTable::prelude();
        let t = formula(seed, 5);
        t.check_types().unwrap();
        let printed = canonical_print(&t, VarMode::Diff, &s);
        let back = parse_term(&printed, &s).map_err(|e| TestCaseError::fail(format!("{}: {}", printed, e)))?;
        back.check_types().unwrap();
        prop_assert!(normalize_term_tyvars(&t).alpha_eq(&normalize_term_tyvars(&back)), "{}", printed);
    }

    #[test]
    fn hashing_print_is_injective_modulo_alpha(a in any::<u64>(), b in any::<u64>()) {
        let s = SymbolTable::prelude();
        let (x, y) = (formula(a, 3), formula(b, 3));
        let same_print = canonical_print(&x, VarMode::Hashing, &s) == canonical_print(&y, VarMode::Hashing, &s);
        let same_term = canonical(&x).alpha_eq(&canonical(&y));
        prop_assert_eq!(same_print, same_term);
    }

    #[test]
    fn hashing_ignores_variable_names(seed in any::<u64>()) {
        // printing in Diff mode renames clashing binders; the reparsed term is alpha-equal
        let s = SymbolTable::prelude();
        let t = formula(seed, 4);
        let back = parse_term(&canonical_print(&t, VarMode::Diff, &s), &s).unwrap();
        prop_assert_eq!(canonical_print(&t, VarMode::Hashing, &s), canonical_print(&back, VarMode::Hashing, &s));
    }

    #[test]
    fn normalize_type_is_idempotent_and_keeps_skeleton(i in 0usize..7, j in 0usize..7, k in 0usize..7) {
        let ts = sample_types();
        let t = Type::funs([ts[i].clone(), Type::var("z"), ts[j].clone()], Type::con("prod", vec![ts[k].clone(), Type::var("b")]));
        let n = normalize_type(&t);
        prop_assert_eq!(normalize_type(&n), n.clone());
        prop_assert_eq!(n.skeleton(), t.skeleton());
    }
}

#[test]
fn distinct_seeds_produce_a_mix_of_equal_and_different_hashes() {
    let s = SymbolTable::prelude();
    let mut prints = std::collections::HashSet::new();
    for seed in 0..200 {
        prints.insert(canonical_print(&formula(seed, 3), VarMode::Hashing, &s));
    }
    assert!(prints.len() > 50);
}

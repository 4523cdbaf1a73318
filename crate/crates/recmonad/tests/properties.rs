//! Invariants checked on random terms and random finite algebras.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use proptest::prelude::*;

use recmonad::case_studies::fixtures;
use recmonad::finite_algebra::{generate_congruence, product, quotient, search_models, FiniteAlgebra};
use recmonad::presentation::{parse_presentation, print_presentation, LetterMap, Presentation, Term};
use recmonad::term_engine::{rename, BoundedFreeAlgebra};

const THEORIES: [&str; 5] = ["monoid", "group", "semilattice", "band", "commutative_monoid"];

/// Ground terms over `letters` with at most `max_ops` operation nodes.
fn term(p: &Presentation, letters: &'static [&'static str], max_ops: u32) -> BoxedStrategy<Term> {
    let ops: Vec<(String, usize)> = p.signature.ops().to_vec();
    let constants: Vec<String> = ops.iter().filter(|(_, k)| *k == 0).map(|(n, _)| n.clone()).collect();
    let mut leaves = vec![proptest::sample::select(letters.to_vec()).prop_map(Term::letter).boxed()];
    if !constants.is_empty() {
        leaves.push(proptest::sample::select(constants).prop_map(|c| Term::constant(&c)).boxed());
    }
    let leaf = proptest::strategy::Union::new(leaves);
    let nonconst: Vec<(String, usize)> = ops.into_iter().filter(|(_, k)| *k > 0).collect();
    leaf.prop_recursive(max_ops, 16, 2, move |inner| {
        let nonconst = nonconst.clone();
        (proptest::sample::select(nonconst), proptest::collection::vec(inner, 2)).prop_map(|((op, k), kids)| {
            Term::app(&op, kids.into_iter().take(k).collect())
        })
    })
    .prop_filter("size bound", move |t| t.size() <= max_ops as usize)
    .boxed()
}

struct Fixture {
    p: Presentation,
    free: BoundedFreeAlgebra,
    models: Vec<FiniteAlgebra>,
}

fn fixture(name: &str) -> &'static Fixture {
    static CELLS: OnceLock<BTreeMap<&'static str, Fixture>> = OnceLock::new();
    let all = CELLS.get_or_init(|| {
        THEORIES
            .iter()
            .map(|&n| {
                let p = fixtures::theory(n).unwrap();
                let free = BoundedFreeAlgebra::build(&p, &["a", "b"], 5).unwrap();
                let models = (1..=3).flat_map(|k| search_models(&p, k).unwrap()).collect();
                (n, Fixture { p, free, models })
            })
            .collect()
    });
    &all[name]
}

fn all_assignments(n: usize) -> impl Iterator<Item = BTreeMap<String, u32>> {
    (0..n * n).map(move |i| {
        BTreeMap::from([("a".to_string(), (i / n) as u32), ("b".to_string(), (i % n) as u32)])
    })
}

fn theory_and_terms() -> impl Strategy<Value = (&'static str, Term, Term)> {
    proptest::sample::select(THEORIES.to_vec()).prop_flat_map(|name| {
        let p = &fixture(name).p;
        (Just(name), term(p, &["a", "b"], 3), term(p, &["a", "b"], 3))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn printed_terms_parse_back((name, s, _t) in theory_and_terms()) {
        let p = &fixture(name).p;
        prop_assert_eq!(p.parse_term(&s.to_string()).unwrap(), s);
    }

    /// Equal in the bounded free algebra means equal in every model; a model
    /// that separates the terms rules out equality.
    #[test]
    fn free_algebra_agrees_with_models((name, s, t) in theory_and_terms()) {
        let fx = fixture(name);
        let equal = fx.free.decide_equal(&s, &t).unwrap().is_equal();
        for m in &fx.models {
            for h in all_assignments(m.size) {
                if m.eval(&s, &h).unwrap() != m.eval(&t, &h).unwrap() {
                    prop_assert!(!equal, "{} separates {} and {}", m.to_file_format(), s, t);
                }
            }
        }
    }

    #[test]
    fn renaming_preserves_equality((name, s, t) in theory_and_terms()) {
        let fx = fixture(name);
        let f = LetterMap::parse("a->a,b->a", None).unwrap();
        if fx.free.decide_equal(&s, &t).unwrap().is_equal() {
            let (fs, ft) = (rename(&f, &s).unwrap(), rename(&f, &t).unwrap());
            prop_assert!(fx.free.decide_equal(&fs, &ft).unwrap().is_equal());
        }
    }

    #[test]
    fn renaming_composes((_name, s, _t) in theory_and_terms()) {
        let f = LetterMap::parse("a->x,b->y", None).unwrap();
        let g = LetterMap::parse("x->c,y->c", None).unwrap();
        let gf = LetterMap::parse("a->c,b->c", None).unwrap();
        prop_assert_eq!(rename(&g, &rename(&f, &s).unwrap()).unwrap(), rename(&gf, &s).unwrap());
    }

    #[test]
    fn products_and_quotients_are_models(
        name in proptest::sample::select(THEORIES.to_vec()),
        i in 0usize..64, j in 0usize..64, x in 0u32..16, y in 0u32..16,
    ) {
        let models = &fixture(name).models;
        let (a, b) = (&models[i % models.len()], &models[j % models.len()]);
        let ab = product(a, b).unwrap();
        prop_assert!(ab.satisfies());
        let n = ab.size as u32;
        let theta = generate_congruence(&ab, &[(x % n, y % n)]).unwrap();
        prop_assert!(theta.related(x % n, y % n));
        prop_assert!(theta.is_compatible(&ab).is_ok());
        let (q, proj) = quotient(&ab, &theta).unwrap();
        prop_assert!(q.satisfies());
        prop_assert_eq!(q.size, theta.num_blocks());
        prop_assert_eq!(proj[(x % n) as usize], proj[(y % n) as usize]);
    }
}

#[test]
fn fixture_theories_print_and_parse_back() {
    for name in fixtures::theory_names() {
        let p = fixtures::theory(name).unwrap();
        assert_eq!(parse_presentation(&print_presentation(&p)).unwrap(), p, "{name}");
    }
}

#[test]
fn saturated_class_algebras_satisfy_their_theory() {
    for name in ["band", "semilattice"] {
        let fx = fixture(name);
        assert!(fx.free.saturated());
        let a = fx.free.class_algebra().unwrap();
        assert!(a.satisfies(), "{name}");
        // members of one free class agree in every model
        for m in &fx.models {
            for h in all_assignments(m.size) {
                for c in fx.free.classes() {
                    let values: Vec<u32> = fx.free.members(c).iter().map(|t| m.eval(t, &h).unwrap()).collect();
                    assert!(values.windows(2).all(|w| w[0] == w[1]), "{name}");
                }
            }
        }
    }
}

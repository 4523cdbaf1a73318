//! Acceptance criteria 1 to 12, run in order in one test so that runtimes
//! are measured without contention. Each criterion prints one
//! `criterion N: PASS|FAIL` line straight to stdout.
//!
//! Criteria 1 and 6 fail: some single-cell mutations of the fixture
//! tables keep every equation, and axiom (b) of the distributive law fails
//! for bands over two letters. For those two the test checks the
//! documented failure instead.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use recmonad::case_studies::burnside::{self, BurnsideVerdict};
use recmonad::case_studies::counterexamples::{refute_own_algebra, sweep, Counterexample};
use recmonad::case_studies::fixtures;
use recmonad::case_studies::lattice::{self, LatticeTerm};
use recmonad::case_studies::reader;
use recmonad::case_studies::studies::{chain_lattice, lattice_instances, square_lattice};
use recmonad::finite_algebra::{search_models, FiniteAlgebra, OpTable};
use recmonad::monad_props::{
    check_distributive_law_axioms, check_mult_cartesian, check_unit_cartesian, check_weak_pullback_preservation,
    detect_local_finiteness, find_malcev_term, verify_malcev_term, CheckOutcome, DistLawBounds, Finiteness,
    MultBounds, MultProbe,
};
use recmonad::presentation::{LetterMap, Presentation, Term};
use recmonad::recognition::{
    direct_image_locally_finite, direct_image_malcev, direct_image_powerset, CrossCheck, LanguageSpec,
    RecognizedLanguage,
};
use recmonad::report::Record;
use recmonad::term_engine::BoundedFreeAlgebra;

/// Criteria whose documented status is FAIL.
const KNOWN_FAILURES: [usize; 2] = [1, 6];

struct Outcome {
    pass: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        pass: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        pass: false,
        detail: detail.into(),
    }
}

fn criterion(n: usize, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    if elapsed > limit {
        o.pass = false;
        o.detail = format!("{}; over the {} s limit", o.detail, limit.as_secs());
    }
    let status = if o.pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {n}: {status} ({:.1} s) {}", elapsed.as_secs_f64(), o.detail);
    let _ = out.flush();
    o.pass
}

fn thy(name: &str) -> Presentation {
    fixtures::theory(name).unwrap()
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn criterion_1() -> Outcome {
    let golden: [(Counterexample, &str, &[&str], &str); 5] = [
        (Counterexample::MarkedWords, "dot", &["AA", "BA"], "AA"),
        (Counterexample::MarkedWords, "dot", &["AA", "BB"], "AB"),
        (Counterexample::BalancedAssoc, "dot", &["c", "b"], "R"),
        (Counterexample::BalancedAssoc, "dot", &["a", "R"], "L"),
        (Counterexample::BalancedAssoc, "dot", &["L", "b"], "R"),
    ];
    for (ce, op, args, v) in golden {
        let a = ce.algebra();
        let args: Vec<u32> = args.iter().map(|x| a.element(x).unwrap()).collect();
        assert_eq!(a.apply_named(op, &args).unwrap(), a.element(v).unwrap(), "{}", ce.name());
    }
    let p = Counterexample::NotQuiteMalcev.algebra();
    let four = p.element("4").unwrap();
    assert!((0..7).all(|x| p.apply_named("s", &[x]).unwrap() == four));

    let mut survivors = Vec::new();
    for ce in Counterexample::ALL {
        let a = ce.algebra();
        assert!(a.check_satisfies().is_ok(), "{} fails its equations", ce.name());
        let m = a.mutation_sweep();
        // replay the first survivor independently
        if let Some(s) = m.survivors.first() {
            let mut b = a.clone();
            let i = b.op_index(&s.op).unwrap();
            let idx = s.args.iter().fold(0usize, |acc, &x| acc * a.size + x as usize);
            b.ops[i].table[idx] = s.value;
            assert!(b.check_satisfies().is_ok());
            assert_ne!(a.ops[i].table[idx], s.value);
        }
        survivors.push((ce.name(), m.survivors.len(), m.mutations));
    }
    assert_eq!(
        survivors,
        vec![
            ("marked_words", 2, 336),
            ("balanced_assoc", 87, 180),
            ("not_quite_malcev", 1512, 2100)
        ]
    );
    let s: Vec<String> = survivors.iter().map(|(n, k, m)| format!("{n} {k}/{m}")).collect();
    fail(format!(
        "all three fixtures satisfy their equations and match the published cells, but single-cell mutations survive: {}",
        s.join(", ")
    ))
}

fn criterion_2() -> Outcome {
    let mut parts = Vec::new();
    for ce in Counterexample::ALL {
        let refuter = ce.refuter(4).unwrap();
        for size in 1..=3 {
            let s = sweep(ce, &refuter, size, 1).unwrap();
            if !s.all_refuted() {
                return fail(format!("{} size {size}: {} of {} refuted", ce.name(), s.refuted, s.candidates));
            }
            let w = s.first.unwrap();
            let (tin, tout) = ce.discriminator(w.n, w.m);
            assert_eq!((&w.t_in, &w.t_out), (&tin, &tout));
            assert!(ce.image_member(&w.t_in) && !ce.image_member(&w.t_out));
            parts.push(format!("{} size {size}: {} candidates", ce.name(), s.candidates));
        }
        let own = refute_own_algebra(ce).unwrap();
        for w in &own {
            assert_eq!(w.value_in, w.value_out);
            assert!(ce.image_member(&w.t_in) && !ce.image_member(&w.t_out));
        }
        parts.push(format!("{} own recognizer: {} assignments", ce.name(), own.len()));
    }
    pass(parts.join("; "))
}

fn criterion_3() -> Outcome {
    let (checked, escape) = burnside::check_source_closed(10);
    if let Some((w, v)) = escape {
        return fail(format!("{} -> {} leaves the language", burnside::show(&w), burnside::show(&v)));
    }
    let member = matches!(burnside::burnside_member(b"a0a0a0", &burnside::in_base, 12), BurnsideVerdict::Member(_));
    let non = matches!(
        burnside::burnside_member(b"ab0ba0ab0", &burnside::in_base, 12),
        BurnsideVerdict::NonMember { definitive: true, .. }
    );
    // brute-force oracle: square-freeness by checking every factor
    let w = b"ab0ba0ab0";
    let square = (0..w.len()).any(|i| (1..=(w.len() - i) / 2).any(|l| w[i..i + l] == w[i + l..i + 2 * l]));
    assert!(!square);
    if member && non {
        pass(format!("{checked} words closed; a0a0a0 member; ab0ba0ab0 definitive non-member"))
    } else {
        fail(format!("member {member}, non-member {non}"))
    }
}

fn witness(o: &CheckOutcome, key: &str) -> String {
    o.term(key).map(|t| t.to_string()).unwrap_or_default()
}

fn criterion_4() -> Outcome {
    let mut bad = Vec::new();
    let o = check_weak_pullback_preservation(&thy("group"), &fixtures::span("empty-ab-c").unwrap(), 3, 3).unwrap();
    if !(o.is_refuted() && witness(&o, "t") == "e" && witness(&o, "r") == "(dot a (inv b))") {
        bad.push(format!("group wpb {o}"));
    }
    let o = check_weak_pullback_preservation(&thy("x3_x2"), &fixtures::span("ab-cd-e").unwrap(), 3, 3).unwrap();
    if !(o.is_refuted() && witness(&o, "t") == "(dot a b)" && witness(&o, "r") == "(dot c (dot d c))") {
        bad.push(format!("x3_x2 wpb {o}"));
    }
    let collapse = LetterMap::parse("a->c,b->c", None).unwrap();
    let o = check_unit_cartesian(&thy("semilattice"), &collapse, true, 5).unwrap();
    if !(o.is_refuted() && witness(&o, "t") == "(join a b)") {
        bad.push(format!("semilattice unit {o}"));
    }
    let p = thy("xyyz");
    let f = LetterMap::parse("a1->a,a2->a,b->b,c->c", None).unwrap();
    let probe = MultProbe {
        outer: p.parse_term("(dot h1 h2)").unwrap(),
        binding: [
            ("h1".to_string(), p.parse_term("b").unwrap()),
            ("h2".to_string(), p.parse_term("(dot a c)").unwrap()),
        ]
        .into(),
        t: p.parse_term("(dot b (dot a1 (dot a2 c)))").unwrap(),
    };
    let bounds = MultBounds {
        term_bound: 4,
        outer_size: 1,
        handles: 2,
    };
    let o = check_mult_cartesian(&p, &f, true, &bounds, &[probe]).unwrap();
    if !o.is_refuted() {
        bad.push(format!("xyyz multiplication {o}"));
    }
    let p = thy("two_unary_fge");
    let iota = LetterMap::new(&["x"], &["x", "y"], &[("x", "x")]).unwrap();
    assert!(!iota.surjective);
    let probe = MultProbe {
        outer: p.parse_term("(f h1)").unwrap(),
        binding: [("h1".to_string(), p.parse_term("(f y)").unwrap())].into(),
        t: p.parse_term("e").unwrap(),
    };
    let o = check_mult_cartesian(&p, &iota, false, &MultBounds::default(), &[probe]).unwrap();
    if !o.is_refuted() {
        bad.push(format!("two_unary_fge multiplication {o}"));
    }
    let m = thy("monoid");
    let checks = [
        (
            "wpb",
            check_weak_pullback_preservation(&m, &fixtures::span("ab-ab-c").unwrap(), 5, 5).unwrap(),
        ),
        ("unit", check_unit_cartesian(&m, &collapse, true, 5).unwrap()),
        (
            "multiplication",
            check_mult_cartesian(
                &m,
                &collapse,
                true,
                &MultBounds {
                    term_bound: 5,
                    outer_size: 2,
                    handles: 2,
                },
                &[],
            )
            .unwrap(),
        ),
    ];
    for (name, o) in &checks {
        if !o.is_verified() {
            bad.push(format!("monoid {name} {o}"));
        }
    }
    if bad.is_empty() {
        pass("group, x3_x2, semilattice, xyyz and two_unary_fge refuted with their witnesses; monoid verified at (5,5)")
    } else {
        fail(bad.join("; "))
    }
}

fn z2() -> FiniteAlgebra {
    fixtures::cyclic_group(2)
}

fn criterion_5() -> Outcome {
    let l = fixtures::language("abstar").unwrap();
    let f = LetterMap::parse("a->c,b->c", None).unwrap();
    let img = direct_image_powerset(&l, &f, &CrossCheck::new(6)).unwrap();
    let verified = matches!(&img.outcome, CheckOutcome::Verified(b) if b["bound"] == 6);
    let lang = img.language.expect("powerset algebra satisfies the monoid equations");
    // image is the even-length words: compare with powers of c
    let mut c_n = Term::constant("e");
    for n in 0..12 {
        assert_eq!(lang.member(&c_n).unwrap(), n % 2 == 0, "c^{n}");
        c_n = Term::app2("dot", Term::letter("c"), c_n);
    }
    let lz = RecognizedLanguage::new(z2(), [("a".to_string(), 1), ("b".to_string(), 0)].into(), BTreeSet::from([1]))
        .unwrap();
    let o = direct_image_powerset(&lz, &f, &CrossCheck::new(3)).unwrap().outcome;
    let group_ok = match o.witness() {
        Some(w) => {
            w.summary.contains("complex algebra fails")
                && w.summary.contains("(dot ?x (inv ?x)) = e")
                && w.evidence.iter().any(|e| e.contains("?x={0|1}"))
        }
        None => false,
    };
    if verified && group_ok {
        pass("monoid (ab)* along a,b->c verified at bound 6, image = even lengths; Z2 refuted at x·x⁻¹ = e with x = {0,1}")
    } else {
        fail(format!("monoid {}; group {o}", img.outcome))
    }
}

fn criterion_6() -> Outcome {
    let mut failures = Vec::new();
    let mut count = 0;
    for name in ["monoid", "semigroup", "commutative_monoid", "band"] {
        for n in 1..=2 {
            let x: Vec<String> = ["a", "b"][..n].iter().map(|s| s.to_string()).collect();
            let r = check_distributive_law_axioms(&thy(name), &x, &DistLawBounds::default()).unwrap();
            assert!(r.monotone.is_verified(), "{name} |X|={n} monotone {}", r.monotone);
            for (axiom, o) in &r.axioms {
                count += 1;
                if !o.is_verified() {
                    failures.push((name, n, axiom.clone(), o.clone()));
                }
            }
        }
    }
    assert_eq!(failures.len(), 1);
    let (name, n, axiom, o) = &failures[0];
    assert_eq!((*name, *n, axiom.as_str()), ("band", 2, "(b)"));
    assert!(o.is_refuted());
    fail(format!(
        "{} of {count} axiom checks verified and monotonicity holds everywhere; band over |X|=2 fails axiom (b): {o}",
        count - 1
    ))
}

fn boolean_algebra(bits: u32) -> FiniteAlgebra {
    let n = 1u32 << bits;
    let top = n - 1;
    let t2 = |f: fn(u32, u32) -> u32| (0..n * n).map(|i| f(i / n, i % n)).collect();
    let op = |name: &str, arity, table| OpTable {
        name: name.into(),
        arity,
        table,
    };
    FiniteAlgebra::new(
        thy("boolean_algebra"),
        n as usize,
        vec![
            op("join", 2, t2(|x, y| x | y)),
            op("meet", 2, t2(|x, y| x & y)),
            op("neg", 1, (0..n).map(|x| x ^ top).collect()),
            op("bot", 0, vec![0]),
            op("top", 0, vec![top]),
        ],
        None,
    )
    .unwrap()
}

fn criterion_7() -> Outcome {
    let mut bad = Vec::new();
    for (name, expect) in [("group", true), ("boolean_algebra", true), ("monoid", false)] {
        let p = thy(name);
        let found = find_malcev_term(&p, 3, 4).unwrap();
        match (&found, expect) {
            (Some(t), true) => {
                let fa = BoundedFreeAlgebra::build(&p, &["a", "b"], 4).unwrap();
                if !verify_malcev_term(&fa, t).unwrap() {
                    bad.push(format!("{name}: {t} does not verify"));
                }
            }
            (None, false) => {}
            _ => bad.push(format!("{name}: {found:?}")),
        }
    }
    let ba = thy("boolean_algebra");
    let term = find_malcev_term(&ba, 3, 4).unwrap();
    let mut instances = Vec::new();
    let (free1, assign) = fixtures::free_boolean_algebra_one();
    let top = free1.apply_named("top", &[]).unwrap();
    let g = LetterMap::parse("a->c,b->c", None).unwrap();
    let gl = RecognizedLanguage::new(
        free1,
        [("a".to_string(), assign["g"]), ("b".to_string(), assign["(neg g)"])].into(),
        BTreeSet::from([top]),
    )
    .unwrap();
    instances.push(("g/neg g".to_string(), gl, g));
    let mut rng = StdRng::seed_from_u64(7);
    while instances.len() < 10 {
        let bits = rng.gen_range(1..=2);
        let a = boolean_algebra(bits);
        let n = a.size as u32;
        let h0: BTreeMap<String, u32> = ["a", "b"].iter().map(|x| (x.to_string(), rng.gen_range(0..n))).collect();
        let s: BTreeSet<u32> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        let f = if rng.gen_bool(0.5) {
            LetterMap::parse("a->x,b->x", None).unwrap()
        } else {
            LetterMap::parse("a->y,b->x", None).unwrap()
        };
        let label = format!("2^{bits} {h0:?} S={s:?} {:?}", f.target);
        instances.push((label, RecognizedLanguage::new(a, h0, s).unwrap(), f));
    }
    let mut collapse_size = 0;
    for (i, (label, l, f)) in instances.iter().enumerate() {
        let r = direct_image_malcev(l, f, term.as_ref(), &CrossCheck::new(3)).unwrap();
        if !r.outcome.is_verified() {
            bad.push(format!("{label}: {}", r.outcome));
        }
        if i == 0 {
            collapse_size = r.language.map_or(0, |x| x.algebra.size);
        }
    }
    if collapse_size != 1 {
        bad.push(format!("g/neg g image recognizer has {collapse_size} elements"));
    }
    if bad.is_empty() {
        pass("group and Boolean-algebra terms found and verified, none for monoid; 10 Boolean-algebra images verified at bound 3, g/¬g collapses to one element")
    } else {
        fail(bad.join("; "))
    }
}

/// Exact image of `accept` computed by evaluating every renamed member of
/// every accepted source class in the target class algebra.
fn image_by_evaluation(
    fs: &BoundedFreeAlgebra,
    fg: &BoundedFreeAlgebra,
    accept: &BTreeSet<u32>,
    f: &LetterMap,
) -> BTreeSet<u32> {
    let target = fg.class_algebra().unwrap();
    let h0: BTreeMap<String, u32> = fg
        .alphabet()
        .iter()
        .map(|y| (y.clone(), fg.letter_class(y).unwrap()))
        .collect();
    let mut out = BTreeSet::new();
    for c in fs.classes() {
        if accept.contains(&c) {
            for t in fs.members(c) {
                let r = t.map_letters(&|x| Term::letter(f.apply(x).unwrap()));
                out.insert(target.eval(&r, &h0).unwrap());
            }
        }
    }
    out
}

fn criterion_8() -> Outcome {
    let schedule = [2, 3, 4, 5];
    let band = detect_local_finiteness(&thy("band"), 2, &schedule).unwrap();
    let semi = detect_local_finiteness(&thy("semilattice"), 3, &schedule).unwrap();
    if band != Finiteness::Finite(6) || semi != Finiteness::Finite(7) {
        return fail(format!("band {band:?}, semilattice {semi:?}"));
    }
    let cases = [
        ("band", vec!["a", "b"], LetterMap::parse("a->c,b->c", None).unwrap()),
        ("semilattice", vec!["a", "b", "c"], LetterMap::parse("a->x,b->x,c->y", None).unwrap()),
    ];
    for (name, src, f) in cases {
        let p = thy(name);
        let fs = BoundedFreeAlgebra::build(&p, &src, 5).unwrap();
        let tgt: Vec<&str> = f.target.iter().map(String::as_str).collect();
        let fg = BoundedFreeAlgebra::build(&p, &tgt, 5).unwrap();
        assert!(fs.saturated() && fg.saturated());
        let algebra = fs.class_algebra().unwrap();
        let assignment: BTreeMap<String, u32> = src.iter().map(|x| (x.to_string(), fs.letter_class(x).unwrap())).collect();
        // every accepting set of a few shapes: each single class and the first half
        let classes: Vec<u32> = fs.classes().collect();
        let mut accepts: Vec<BTreeSet<u32>> = classes.iter().map(|&c| BTreeSet::from([c])).collect();
        accepts.push(classes[..classes.len() / 2].iter().copied().collect());
        for accept in accepts {
            let l = RecognizedLanguage::new(algebra.clone(), assignment.clone(), accept.clone()).unwrap();
            let img = direct_image_locally_finite(&LanguageSpec::Recognized(&l), &f, &fs, &fg).unwrap();
            let expected = image_by_evaluation(&fs, &fg, &accept, &f);
            if img.accept != expected {
                return fail(format!("{name} accept {accept:?}: {:?} vs {expected:?}", img.accept));
            }
        }
    }
    pass("band on 2 generators has 6 elements, semilattice on 3 has 7; locally finite images equal the evaluated images")
}

fn criterion_9() -> Outcome {
    let rnd = reader::random_reader_check(1000, 2024).unwrap();
    let ex = reader::exhaustive_reader_check(3, 3, 2).unwrap();
    let g = LetterMap::new(&["a", "b"], &["c", "d"], &[("a", "c"), ("b", "c")]).unwrap();
    let l = reader::RectangularLanguage::new(BTreeMap::from([(1, BTreeSet::from(["a".to_string()]))]));
    let rejected = reader::reader_direct_image(&[l], &g).is_err();
    match (&rnd.failure, &ex.failure, rejected) {
        (None, None, true) => pass(format!(
            "{} random words agree; {} exhaustive instances ({} words) agree; non-surjective map rejected",
            rnd.words, ex.instances, ex.words
        )),
        _ => fail(format!("random {:?}, exhaustive {:?}, rejected {rejected}", rnd.failure, ex.failure)),
    }
}

fn lattice_term() -> impl Strategy<Value = LatticeTerm> {
    let leaf = prop_oneof![Just("p"), Just("q"), Just("r")].prop_map(LatticeTerm::gen);
    leaf.prop_recursive(5, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| LatticeTerm::join(vec![a, b])),
            (inner.clone(), inner).prop_map(|(a, b)| LatticeTerm::meet(vec![a, b])),
        ]
    })
    .prop_filter("size at most 9", |t| t.size() <= 9)
}

/// The pentagon and the diamond, given by their order.
fn small_lattices() -> Vec<FiniteAlgebra> {
    let from_order = |n: u32, leq: &dyn Fn(u32, u32) -> bool| {
        let lub = |x: u32, y: u32| {
            let ups: Vec<u32> = (0..n).filter(|&z| leq(x, z) && leq(y, z)).collect();
            *ups.iter().find(|&&z| ups.iter().all(|&w| leq(z, w))).unwrap()
        };
        let glb = |x: u32, y: u32| {
            let downs: Vec<u32> = (0..n).filter(|&z| leq(z, x) && leq(z, y)).collect();
            *downs.iter().find(|&&z| downs.iter().all(|&w| leq(w, z))).unwrap()
        };
        FiniteAlgebra::new(
            thy("lattice"),
            n as usize,
            vec![
                OpTable {
                    name: "join".into(),
                    arity: 2,
                    table: (0..n * n).map(|i| lub(i / n, i % n)).collect(),
                },
                OpTable {
                    name: "meet".into(),
                    arity: 2,
                    table: (0..n * n).map(|i| glb(i / n, i % n)).collect(),
                },
            ],
            None,
        )
        .unwrap()
    };
    // 0 bottom, 4 top; pentagon 1 < 2, diamond 1, 2, 3 pairwise incomparable
    let pentagon = from_order(5, &|x, y| x == y || x == 0 || y == 4 || (x == 1 && y == 2));
    let diamond = from_order(5, &|x, y| x == y || x == 0 || y == 4);
    vec![pentagon, diamond, square_lattice(), chain_lattice(3)]
}

fn holds_everywhere(s: &LatticeTerm, t: &LatticeTerm, lattices: &[FiniteAlgebra]) -> bool {
    lattices.iter().all(|a| {
        let n = a.size as u32;
        (0..n.pow(3)).all(|code| {
            let h0: BTreeMap<String, u32> = ["p", "q", "r"]
                .iter()
                .enumerate()
                .map(|(i, x)| (x.to_string(), code / n.pow(i as u32) % n))
                .collect();
            let (x, y) = (s.eval(a, &h0).unwrap(), t.eval(a, &h0).unwrap());
            a.apply_named("join", &[x, y]).unwrap() == y
        })
    })
}

fn criterion_10() -> Outcome {
    let lattices = small_lattices();
    let mut runner = TestRunner::new(Config {
        cases: 10_000,
        failure_persistence: None,
        ..Config::default()
    });
    let prop = runner.run(&(lattice_term(), lattice_term(), lattice_term()), |(s, t, u)| {
        use lattice::{canonical_form, whitman_eq, whitman_leq};
        prop_assert!(whitman_leq(&s, &s));
        let both = whitman_leq(&s, &t) && whitman_leq(&t, &s);
        prop_assert_eq!(both, canonical_form(&s) == canonical_form(&t));
        prop_assert_eq!(whitman_eq(&s, &t), both);
        if whitman_leq(&s, &t) && whitman_leq(&t, &u) {
            prop_assert!(whitman_leq(&s, &u));
        }
        if whitman_leq(&s, &t) {
            prop_assert!(holds_everywhere(&s, &t, &lattices));
        }
        let cf = canonical_form(&s);
        prop_assert_eq!(canonical_form(&cf), cf.clone());
        prop_assert!(whitman_leq(&s, &cf) && whitman_leq(&cf, &s));
        Ok(())
    });
    if let Err(e) = prop {
        return fail(format!("property failure: {e}"));
    }
    let (t1, t, t2, s) = lattice::chain_example();
    let chain = lattice::whitman_leq(&t1, &t)
        && !lattice::whitman_leq(&t, &t1)
        && lattice::whitman_leq(&t, &t2)
        && !lattice::whitman_leq(&t2, &t)
        && !lattice::whitman_leq(&s, &t1)
        && !lattice::whitman_leq(&t2, &s);
    if !chain {
        return fail("chain t1 < (t1∨s)∧t2 < t2 not confirmed");
    }
    let instances = lattice_instances();
    for (name, l, f) in &instances {
        let img = lattice::lattice_direct_image(l, f).unwrap();
        let o = lattice::lattice_cross_check(l, f, &img, 5, 2).unwrap();
        if !o.is_verified() {
            return fail(format!("{name}: {o}"));
        }
    }
    pass(format!(
        "10000 random triples satisfy the order laws and finite-lattice soundness; chain confirmed; {} image instances verified at size 5",
        instances.len()
    ))
}

fn criterion_11() -> Outcome {
    let p = thy("fgfgg");
    let counts: Vec<usize> = (1..=3).map(|n| search_models(&p, n).unwrap().len()).collect();
    if counts == [1, 0, 0] {
        pass("models of sizes 1, 2, 3: 1, 0, 0")
    } else {
        fail(format!("models of sizes 1, 2, 3: {counts:?}"))
    }
}

struct Invocation {
    args: &'static [&'static str],
    exit: i32,
    theory: &'static str,
}

const INVOCATIONS: &[Invocation] = &[
    Invocation {
        args: &["case", "marked_words", "--sweep-size", "2"],
        exit: 0,
        theory: "marked_words",
    },
    Invocation {
        args: &["case", "not_quite_malcev", "--sweep-size", "2"],
        exit: 0,
        theory: "not_quite_malcev",
    },
    Invocation {
        args: &["noncase", "bag_kleisli", "--sweep-size", "4"],
        exit: 0,
        theory: "commutative_monoid",
    },
    Invocation {
        args: &["refute", "balanced_assoc", "--size", "3", "--own", "--expect", "refuted"],
        exit: 0,
        theory: "balanced_assoc",
    },
    Invocation {
        args: &["props", "--theory", "group.thy", "--check", "wpb", "--span", "empty-ab-c.span"],
        exit: 1,
        theory: "group",
    },
    Invocation {
        args: &[
            "direct-image",
            "--theory",
            "monoid.thy",
            "--lang",
            "abstar.lang",
            "--map",
            "a->c,b->c",
            "--method",
            "powerset",
            "--bound",
            "6",
        ],
        exit: 0,
        theory: "monoid",
    },
    Invocation {
        args: &["free", "--theory", "band", "--alphabet", "a,b", "--bound", "5", "--classes"],
        exit: 0,
        theory: "band",
    },
    Invocation {
        args: &["check-algebra", "--algebra", "not_quite_malcev.alg", "--mutations"],
        exit: 1,
        theory: "not_quite_malcev",
    },
    Invocation {
        args: &["case", "lattice"],
        exit: 0,
        theory: "lattice",
    },
    Invocation {
        args: &["case", "fgfgg"],
        exit: 0,
        theory: "fgfgg",
    },
];

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_recmonad")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn criterion_12() -> Outcome {
    let mut runs = 0;
    for inv in INVOCATIONS {
        for format in ["text", "jsonl"] {
            let with = |extra: &[&'static str]| {
                let mut a = inv.args.to_vec();
                a.extend(["--format", format]);
                a.extend(extra);
                a
            };
            let (code, first) = run_cli(&with(&[]));
            runs += 1;
            if code != inv.exit {
                return fail(format!("{:?} exited {code}, expected {}", inv.args, inv.exit));
            }
            for extra in [&[][..], &["--jobs", "3"][..]] {
                let (c, again) = run_cli(&with(extra));
                runs += 1;
                if c != code || again != first {
                    return fail(format!("{:?} {extra:?} differs between runs", inv.args));
                }
            }
            let (_, timed) = run_cli(&with(&["--timings"]));
            runs += 1;
            let timed = String::from_utf8(timed).unwrap();
            let first = String::from_utf8(first).unwrap();
            let deterministic = match format {
                "text" => timed.split("## timings\n").next().unwrap().to_string(),
                _ => timed.lines().filter(|l| l.starts_with("{\"check\"")).map(|l| format!("{l}\n")).collect(),
            };
            if deterministic != first {
                return fail(format!("{:?}: timings leak into the deterministic section", inv.args));
            }
            if format == "jsonl" {
                let p = thy(inv.theory);
                for line in first.lines() {
                    let r: Record = serde_json::from_str(line).unwrap();
                    for w in &r.witness {
                        let t = p.parse_term(&w.term).unwrap();
                        assert_eq!(t.to_string(), w.term);
                    }
                    if let Some(ce) = Counterexample::parse(inv.theory) {
                        let get = |k: &str| r.witness.iter().find(|w| w.name == k).map(|w| p.parse_term(&w.term).unwrap());
                        if let (Some(tin), Some(tout)) = (get("t_in"), get("t_out")) {
                            assert!(ce.image_member(&tin) && !ce.image_member(&tout), "{line}");
                        }
                    }
                }
            }
        }
    }
    pass(format!(
        "{} invocations, {runs} runs: identical bytes across runs and --jobs, timings kept apart, witnesses re-parse",
        INVOCATIONS.len()
    ))
}

#[test]
fn acceptance_criteria() {
    let results = [
        criterion(1, secs(10), criterion_1),
        criterion(2, secs(60), criterion_2),
        criterion(3, secs(30), criterion_3),
        criterion(4, secs(120), criterion_4),
        criterion(5, secs(30), criterion_5),
        criterion(6, secs(120), criterion_6),
        criterion(7, secs(120), criterion_7),
        criterion(8, secs(30), criterion_8),
        criterion(9, secs(120), criterion_9),
        criterion(10, secs(120), criterion_10),
        criterion(11, secs(10), criterion_11),
        criterion(12, secs(300), criterion_12),
    ];
    for (i, ok) in results.iter().enumerate() {
        let n = i + 1;
        assert_eq!(*ok, !KNOWN_FAILURES.contains(&n), "criterion {n} changed status");
    }
}

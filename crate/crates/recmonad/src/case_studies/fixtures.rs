//! Built-in fixtures: theory, algebra, language and span files shipped in
//! the data directory, plus small algebras built in code.

use std::collections::BTreeMap;

use crate::finite_algebra::{parse_algebra, FiniteAlgebra, OpTable};
use crate::monad_props::SpanInstance;
use crate::presentation::{parse_presentation, Presentation};
use crate::recognition::{parse_language, RecognizedLanguage};
use crate::term_engine::BoundedFreeAlgebra;

pub const THEORIES: &[(&str, &str)] = &[
    ("balanced_assoc", include_str!("../../../../data/theories/balanced_assoc.thy")),
    ("band", include_str!("../../../../data/theories/band.thy")),
    ("boolean_algebra", include_str!("../../../../data/theories/boolean_algebra.thy")),
    ("commutative_monoid", include_str!("../../../../data/theories/commutative_monoid.thy")),
    ("ffe", include_str!("../../../../data/theories/ffe.thy")),
    ("fgfgg", include_str!("../../../../data/theories/fgfgg.thy")),
    ("group", include_str!("../../../../data/theories/group.thy")),
    ("guarded_idempotent", include_str!("../../../../data/theories/guarded_idempotent.thy")),
    ("heyting_algebra", include_str!("../../../../data/theories/heyting_algebra.thy")),
    ("lattice", include_str!("../../../../data/theories/lattice.thy")),
    ("marked_words", include_str!("../../../../data/theories/marked_words.thy")),
    ("monoid", include_str!("../../../../data/theories/monoid.thy")),
    ("not_quite_malcev", include_str!("../../../../data/theories/not_quite_malcev.thy")),
    ("quasigroup", include_str!("../../../../data/theories/quasigroup.thy")),
    ("semigroup", include_str!("../../../../data/theories/semigroup.thy")),
    ("semilattice", include_str!("../../../../data/theories/semilattice.thy")),
    ("seminearring", include_str!("../../../../data/theories/seminearring.thy")),
    ("two_unary_fge", include_str!("../../../../data/theories/two_unary_fge.thy")),
    ("x3_x2", include_str!("../../../../data/theories/x3_x2.thy")),
    ("xxy_xy", include_str!("../../../../data/theories/xxy_xy.thy")),
    ("xyyz", include_str!("../../../../data/theories/xyyz.thy")),
];

pub const ALGEBRAS: &[(&str, &str)] = &[
    ("ab_star", include_str!("../../../../data/algebras/ab_star.alg")),
    ("balanced_assoc", include_str!("../../../../data/algebras/balanced_assoc.alg")),
    ("marked_words", include_str!("../../../../data/algebras/marked_words.alg")),
    ("not_quite_malcev", include_str!("../../../../data/algebras/not_quite_malcev.alg")),
];

pub const LANGUAGES: &[(&str, &str)] = &[
    ("abstar", include_str!("../../../../data/langs/abstar.lang")),
    ("balanced_assoc", include_str!("../../../../data/langs/balanced_assoc.lang")),
    ("marked_words", include_str!("../../../../data/langs/marked_words.lang")),
    ("not_quite_malcev", include_str!("../../../../data/langs/not_quite_malcev.lang")),
];

pub const SPANS: &[(&str, &str)] = &[
    ("ab-ab-c", include_str!("../../../../data/spans/ab-ab-c.span")),
    ("ab-cd-e", include_str!("../../../../data/spans/ab-cd-e.span")),
    ("empty-ab-c", include_str!("../../../../data/spans/empty-ab-c.span")),
];


fn lookup<'a>(table: &'a [(&str, &str)], name: &str, ext: &str) -> Option<&'a str> {
    let name = name.rsplit('/').next().unwrap_or(name);
    let name = name.strip_suffix(ext).unwrap_or(name);
    table.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// A built-in theory by name, with or without the `.thy` suffix.
pub fn theory(name: &str) -> Option<Presentation> {
    parse_presentation(lookup(THEORIES, name, ".thy")?).ok()
}

pub fn theory_names() -> Vec<&'static str> {
    THEORIES.iter().map(|(n, _)| *n).collect()
}

/// A built-in algebra file by name.
pub fn algebra(name: &str) -> Option<FiniteAlgebra> {
    parse_algebra(lookup(ALGEBRAS, name, ".alg")?, &theory).ok()
}

/// A built-in language file by name.
pub fn language(name: &str) -> Option<RecognizedLanguage> {
    let load = |n: &str| algebra(n).ok_or_else(|| format!("unknown algebra `{n}`"));
    parse_language(lookup(LANGUAGES, name, ".lang")?, &load).ok().map(|(_, l)| l)
}

/// A built-in span file by name.
pub fn span(name: &str) -> Option<SpanInstance> {
    SpanInstance::parse(lookup(SPANS, name, ".span")?).ok()
}

fn op(name: &str, arity: usize, table: Vec<u32>) -> OpTable {
    OpTable {
        name: name.into(),
        arity,
        table,
    }
}

/// The cyclic group of order `n` over the group theory.
pub fn cyclic_group(n: u32) -> FiniteAlgebra {
    let dot = (0..n * n).map(|i| (i / n + i % n) % n).collect();
    let inv = (0..n).map(|i| (n - i) % n).collect();
    FiniteAlgebra::new(
        theory("group").unwrap(),
        n as usize,
        vec![op("dot", 2, dot), op("inv", 1, inv), op("e", 0, vec![0])],
        None,
    )
    .unwrap()
}

/// Counting modulo `n` over the commutative monoid theory.
pub fn counting_monoid(n: u32) -> FiniteAlgebra {
    let dot = (0..n * n).map(|i| (i / n + i % n) % n).collect();
    FiniteAlgebra::new(
        theory("commutative_monoid").unwrap(),
        n as usize,
        vec![op("dot", 2, dot), op("e", 0, vec![0])],
        None,
    )
    .unwrap()
}

/// The two-element lattice `0 < 1`.
pub fn two_element_lattice() -> FiniteAlgebra {
    FiniteAlgebra::new(
        theory("lattice").unwrap(),
        2,
        vec![op("join", 2, vec![0, 1, 1, 1]), op("meet", 2, vec![0, 0, 0, 1])],
        None,
    )
    .unwrap()
}

/// The Boolean algebra freely generated by one letter `g`: four classes.
pub fn free_boolean_algebra_one() -> (FiniteAlgebra, BTreeMap<String, u32>) {
    let p = theory("boolean_algebra").unwrap();
    let fa = BoundedFreeAlgebra::build(&p, &["g"], 3).unwrap();
    let a = fa.class_algebra().expect("free Boolean algebra on one letter saturates");
    let names = ["g", "(neg g)", "bot", "top"];
    let assign = names
        .iter()
        .map(|n| {
            let t = p.parse_term(n).unwrap();
            (n.to_string(), fa.class_of(&t).unwrap())
        })
        .collect();
    (a, assign)
}

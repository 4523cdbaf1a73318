//! Direct images along substitutions of letters by terms (Kleisli maps)
//! that destroy recognizability: `a ↦ a·b, b ↦ c` for commutative monoids
//! and `a ↦ a+a, b ↦ b` for seminearrings.

use std::collections::{BTreeMap, BTreeSet};

use crate::finite_algebra::{FiniteAlgebra, OpTable};
use crate::presentation::{apply_substitution, Presentation, Term};
use crate::recognition::{
    direct_image_kleisli_bruteforce, LanguageSpec, RecognitionError, RecognizedLanguage, Refuter,
};
use crate::term_engine::BoundedFreeAlgebra;

use super::counterexamples::{sweep_models, SweepReport};
use super::fixtures;

type Result<T> = std::result::Result<T, RecognitionError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NonCase {
    BagKleisli,
    Seminearring,
}

impl NonCase {
    pub const ALL: [NonCase; 2] = [NonCase::BagKleisli, NonCase::Seminearring];

    pub fn name(self) -> &'static str {
        match self {
            NonCase::BagKleisli => "bag_kleisli",
            NonCase::Seminearring => "seminearring",
        }
    }

    pub fn parse(name: &str) -> Option<NonCase> {
        NonCase::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn theory(self) -> Presentation {
        let name = match self {
            NonCase::BagKleisli => "commutative_monoid",
            NonCase::Seminearring => "seminearring",
        };
        fixtures::theory(name).expect("built-in theory")
    }

    pub fn source_alphabet(self) -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    pub fn image_alphabet(self) -> Vec<String> {
        match self {
            NonCase::BagKleisli => vec!["a".into(), "b".into(), "c".into()],
            NonCase::Seminearring => vec!["a".into(), "b".into()],
        }
    }

    pub fn substitution(self) -> BTreeMap<String, Term> {
        let l = Term::letter;
        match self {
            NonCase::BagKleisli => BTreeMap::from([
                ("a".into(), Term::app2("dot", l("a"), l("b"))),
                ("b".into(), l("c")),
            ]),
            NonCase::Seminearring => BTreeMap::from([
                ("a".into(), Term::app2("add", l("a"), l("a"))),
                ("b".into(), l("b")),
            ]),
        }
    }

    /// `a*` via `({0,1}, max, 0)`, or `ab*` via [`seminearring_recognizer`].
    pub fn source_language(self) -> RecognizedLanguage {
        match self {
            NonCase::BagKleisli => {
                let a = FiniteAlgebra::new(
                    self.theory(),
                    2,
                    vec![
                        OpTable {
                            name: "dot".into(),
                            arity: 2,
                            table: vec![0, 1, 1, 1],
                        },
                        OpTable {
                            name: "e".into(),
                            arity: 0,
                            table: vec![0],
                        },
                    ],
                    None,
                )
                .expect("max is a commutative monoid");
                RecognizedLanguage::new(a, [("a".into(), 0), ("b".into(), 1)].into(), BTreeSet::from([0]))
                    .expect("letters assigned")
            }
            NonCase::Seminearring => seminearring_recognizer(),
        }
    }

    /// Exact membership in the source language.
    pub fn source_member(self, t: &Term) -> bool {
        match self {
            NonCase::BagKleisli => bag_nf(t).is_some_and(|w| w.keys().all(|x| x == "a")),
            NonCase::Seminearring => seminearring_nf(t).is_some_and(|f| is_ab_star(&f)),
        }
    }

    /// Exact membership in the image: `w(a) = w(b)` and `w(c) = 0` for
    /// bags, `ab^n + ab^n` for seminearrings.
    pub fn image_member(self, t: &Term) -> bool {
        match self {
            NonCase::BagKleisli => bag_nf(t).is_some_and(|w| {
                w.get("a") == w.get("b") && !w.contains_key("c")
            }),
            NonCase::Seminearring => {
                seminearring_nf(t).is_some_and(|f| f.len() == 2 && f[0] == f[1] && is_ab_star(&f[..1]))
            }
        }
    }

    /// `aⁿ` for bags, `bⁿ` for seminearrings.
    pub fn family(self, n: usize) -> Term {
        match self {
            NonCase::BagKleisli => power("dot", "a", n),
            NonCase::Seminearring => power("mul", "b", n),
        }
    }

    /// `(aⁿbⁿ, aᵐbⁿ)` or `(abⁿ+abⁿ, abⁿ+abᵐ)`.
    pub fn discriminator(self, n: usize, m: usize) -> (Term, Term) {
        match self {
            NonCase::BagKleisli => {
                let bn = power("dot", "b", n);
                (
                    Term::app2("dot", power("dot", "a", n), bn.clone()),
                    Term::app2("dot", power("dot", "a", m), bn),
                )
            }
            NonCase::Seminearring => {
                let abn = Term::app2("mul", Term::letter("a"), power("mul", "b", n));
                let abm = Term::app2("mul", Term::letter("a"), power("mul", "b", m));
                (Term::app2("add", abn.clone(), abn.clone()), Term::app2("add", abn, abm))
            }
        }
    }

    pub fn refuter(self, max_index: usize) -> Result<Refuter> {
        Refuter::new(
            &self.theory(),
            &self.image_alphabet(),
            max_index,
            &|n| self.family(n),
            &|n, m| self.discriminator(n, m),
            &|t| self.image_member(t),
        )
    }

    /// Largest model size swept by [`NonCase::sweep`] by default.
    pub fn default_sweep_size(self) -> usize {
        match self {
            NonCase::BagKleisli => 5,
            NonCase::Seminearring => 3,
        }
    }

    /// Refutes every model of `size` under every assignment.
    pub fn sweep(self, size: usize, jobs: usize) -> Result<SweepReport> {
        let r = self.refuter(size + 1)?;
        sweep_models(&self.theory(), &self.image_alphabet(), &r, size, jobs, &|t| self.image_member(t))
    }
}

fn power(op: &str, letter: &str, n: usize) -> Term {
    let mut t = Term::letter(letter);
    for _ in 1..n {
        t = Term::app2(op, Term::letter(letter), t);
    }
    t
}

/// `Z₃` with `a ↦ 1` and `b, c ↦ 0`, accepting `0`.
pub fn counting_candidate() -> RecognizedLanguage {
    RecognizedLanguage::new(
        fixtures::counting_monoid(3),
        [("a".into(), 1), ("b".into(), 0), ("c".into(), 0)].into(),
        BTreeSet::from([0]),
    )
    .expect("letters assigned")
}

/// Letter multiplicities of a commutative-monoid term.
pub fn bag_nf(t: &Term) -> Option<BTreeMap<String, usize>> {
    let mut out = BTreeMap::new();
    for leaf in t.leaves() {
        match leaf {
            Term::Letter(x) => *out.entry(x.clone()).or_default() += 1,
            Term::App(op, args) if op == "e" && args.is_empty() => {}
            _ => return None,
        }
    }
    Some(out)
}

/// A nonzero product that right distributivity cannot split: a nonempty
/// word of letters, optionally followed by one sum of length other than 1.
/// The empty word without tail is `1`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub letters: Vec<String>,
    pub tail: Option<Forest>,
}

/// Normal form of a seminearring element: the list of its summands.
pub type Forest = Vec<Monomial>;

pub fn sn_one() -> Forest {
    vec![Monomial {
        letters: Vec::new(),
        tail: None,
    }]
}

pub fn sn_letter(x: &str) -> Forest {
    vec![Monomial {
        letters: vec![x.to_string()],
        tail: None,
    }]
}

pub fn sn_add(x: &Forest, y: &Forest) -> Forest {
    x.iter().chain(y).cloned().collect()
}

/// `(m₁+⋯+mₖ)·y = m₁·y + ⋯ + mₖ·y`.
pub fn sn_mul(x: &Forest, y: &Forest) -> Forest {
    x.iter().flat_map(|m| mono_mul(m, y)).collect()
}

fn mono_mul(m: &Monomial, y: &Forest) -> Forest {
    if let Some(tail) = &m.tail {
        let inner = sn_mul(tail, y);
        let head = Monomial {
            letters: m.letters.clone(),
            tail: None,
        };
        return mono_mul(&head, &inner);
    }
    if m.letters.is_empty() {
        return y.clone();
    }
    match y.as_slice() {
        [single] => {
            let mut letters = m.letters.clone();
            letters.extend(single.letters.iter().cloned());
            vec![Monomial {
                letters,
                tail: single.tail.clone(),
            }]
        }
        _ => vec![Monomial {
            letters: m.letters.clone(),
            tail: Some(y.clone()),
        }],
    }
}

/// Normal form of a ground seminearring term; `None` on foreign symbols.
pub fn seminearring_nf(t: &Term) -> Option<Forest> {
    match t {
        Term::Letter(x) => Some(sn_letter(x)),
        Term::App(op, args) => match (op.as_str(), args.as_slice()) {
            ("zero", []) => Some(Vec::new()),
            ("one", []) => Some(sn_one()),
            ("add", [x, y]) => Some(sn_add(&seminearring_nf(x)?, &seminearring_nf(y)?)),
            ("mul", [x, y]) => Some(sn_mul(&seminearring_nf(x)?, &seminearring_nf(y)?)),
            _ => None,
        },
        Term::Var(_) => None,
    }
}

/// A single tail-free monomial `abⁿ`.
fn is_ab_star(f: &[Monomial]) -> bool {
    match f {
        [m] => {
            m.tail.is_none()
                && m.letters.first().is_some_and(|x| x == "a")
                && m.letters[1..].iter().all(|x| x == "b")
        }
        _ => false,
    }
}

/// Elements of [`seminearring_recognizer`].
pub const SN_ELEMENTS: [&str; 6] = ["0", "1", "U", "A", "B", "T"];
const ZERO: u32 = 0;
const ONE: u32 = 1;
const U: u32 = 2;
const A: u32 = 3;
const B: u32 = 4;
const T: u32 = 5;

/// Six classes of the syntactic congruence of `ab*`: `0`, `1`, `U` (sums
/// of at least two `1`s), `A` (`abⁿ`), `B` (`bⁿ`, `n ≥ 1`) and `T` (the
/// rest).
pub fn seminearring_recognizer() -> RecognizedLanguage {
    let add = |x: u32, y: u32| match (x, y) {
        (ZERO, y) => y,
        (x, ZERO) => x,
        (ONE | U, ONE | U) => U,
        _ => T,
    };
    let mul = |x: u32, y: u32| match (x, y) {
        (ZERO, _) => ZERO,
        (ONE, y) => y,
        (x, ONE) => x,
        (U, ZERO) => ZERO,
        (U, U) => U,
        (A, B) => A,
        (B, B) => B,
        _ => T,
    };
    let mut at = Vec::new();
    let mut mt = Vec::new();
    for x in 0..6 {
        for y in 0..6 {
            at.push(add(x, y));
            mt.push(mul(x, y));
        }
    }
    let ops = vec![
        OpTable {
            name: "add".into(),
            arity: 2,
            table: at,
        },
        OpTable {
            name: "mul".into(),
            arity: 2,
            table: mt,
        },
        OpTable {
            name: "zero".into(),
            arity: 0,
            table: vec![ZERO],
        },
        OpTable {
            name: "one".into(),
            arity: 0,
            table: vec![ONE],
        },
    ];
    let p = fixtures::theory("seminearring").expect("built-in theory");
    let names = Some(SN_ELEMENTS.iter().map(|s| s.to_string()).collect());
    let alg = FiniteAlgebra::new(p, 6, ops, names).expect("seminearring tables");
    RecognizedLanguage::new(alg, [("a".into(), A), ("b".into(), B)].into(), BTreeSet::from([A]))
        .expect("letters assigned")
}

/// One representative per element of [`seminearring_recognizer`] and, for
/// every pair, a one-hole context whose fillings the language separates.
/// Any recognizer of `ab*` therefore needs at least six elements.
pub fn seminearring_separation() -> Vec<(usize, usize, Term)> {
    let l = Term::letter;
    let reps = seminearring_reps();
    let hole = Term::var("x");
    let ab = Term::app2("mul", l("a"), l("b"));
    let contexts = [
        hole.clone(),
        Term::app2("add", hole.clone(), l("a")),
        Term::app2("mul", l("a"), hole.clone()),
        Term::app2("mul", hole.clone(), l("a")),
        Term::app2("add", Term::app2("mul", hole.clone(), Term::constant("zero")), l("a")),
        Term::app2("mul", hole.clone(), ab),
    ];
    let mut out = Vec::new();
    for i in 0..reps.len() {
        for j in i + 1..reps.len() {
            let fill = |c: &Term, r: &Term| {
                apply_substitution(c, &BTreeMap::from([("x".to_string(), r.clone())])).expect("one hole")
            };
            if let Some(c) = contexts.iter().find(|c| {
                NonCase::Seminearring.source_member(&fill(c, &reps[i]))
                    != NonCase::Seminearring.source_member(&fill(c, &reps[j]))
            }) {
                out.push((i, j, c.clone()));
            }
        }
    }
    out
}

/// `0, 1, 1+1, a, b, b+b`, in the order of [`SN_ELEMENTS`].
pub fn seminearring_reps() -> Vec<Term> {
    let l = Term::letter;
    vec![
        Term::constant("zero"),
        Term::constant("one"),
        Term::app2("add", Term::constant("one"), Term::constant("one")),
        l("a"),
        l("b"),
        Term::app2("add", l("b"), l("b")),
    ]
}

/// Bounded brute-force image compared with the exact image oracle on every
/// target class with a member of size at most `target_bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KleisliImageCheck {
    pub source_bound: usize,
    pub target_bound: usize,
    pub classes_checked: usize,
    pub image_classes: usize,
    /// Target representatives on which brute force and oracle disagree.
    pub mismatches: Vec<Term>,
}

pub fn kleisli_image_check(nc: NonCase, source_bound: usize, target_bound: usize) -> Result<KleisliImageCheck> {
    let p = nc.theory();
    let src: Vec<String> = nc.source_alphabet();
    let tgt: Vec<String> = nc.image_alphabet();
    let src_refs: Vec<&str> = src.iter().map(String::as_str).collect();
    let tgt_refs: Vec<&str> = tgt.iter().map(String::as_str).collect();
    let fs = BoundedFreeAlgebra::build(&p, &src_refs, source_bound)?;
    let fg = BoundedFreeAlgebra::build(&p, &tgt_refs, target_bound)?;
    let l = nc.source_language();
    let image = direct_image_kleisli_bruteforce(&LanguageSpec::Recognized(&l), &nc.substitution(), &fs, &fg)?;
    let mut check = KleisliImageCheck {
        source_bound,
        target_bound,
        classes_checked: 0,
        image_classes: 0,
        mismatches: Vec::new(),
    };
    for c in fg.classes() {
        let rep = fg.representative(c);
        check.classes_checked += 1;
        let brute = image.classes.contains(&c);
        if brute {
            check.image_classes += 1;
        }
        if brute != nc.image_member(&rep) {
            check.mismatches.push(rep);
        }
    }
    Ok(check)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term_engine::BoundedFreeAlgebra;
    use proptest::prelude::*;

    fn arb_term() -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![
            Just(Term::letter("a")),
            Just(Term::letter("b")),
            Just(Term::constant("zero")),
            Just(Term::constant("one")),
        ];
        leaf.prop_recursive(4, 16, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(x, y)| Term::app2("add", x, y)),
                (inner.clone(), inner).prop_map(|(x, y)| Term::app2("mul", x, y)),
            ]
        })
    }

    fn well_formed(f: &Forest) -> bool {
        f.iter().all(|m| match &m.tail {
            None => true,
            Some(t) => !m.letters.is_empty() && t.len() != 1 && well_formed(t),
        })
    }

    proptest! {
        #[test]
        fn normal_forms_satisfy_the_equations(x in arb_term(), y in arb_term(), z in arb_term()) {
            let p = fixtures::theory("seminearring").unwrap();
            for eq in &p.equations {
                let bind = BTreeMap::from([
                    ("x".to_string(), x.clone()),
                    ("y".to_string(), y.clone()),
                    ("z".to_string(), z.clone()),
                ]);
                let l = crate::presentation::apply_substitution(&eq.lhs, &bind).unwrap();
                let r = crate::presentation::apply_substitution(&eq.rhs, &bind).unwrap();
                prop_assert_eq!(seminearring_nf(&l), seminearring_nf(&r));
            }
            prop_assert!(well_formed(&seminearring_nf(&x).unwrap()));
        }

        #[test]
        fn recognizer_matches_normal_form(x in arb_term()) {
            let l = seminearring_recognizer();
            prop_assert_eq!(l.member(&x).unwrap(), NonCase::Seminearring.source_member(&x));
        }
    }

    #[test]
    fn normal_form_is_constant_on_classes() {
        let p = fixtures::theory("seminearring").unwrap();
        let f = BoundedFreeAlgebra::build(&p, &["a", "b"], 3).unwrap();
        for c in f.classes() {
            let nf = seminearring_nf(&f.representative(c)).unwrap();
            for m in f.members(c) {
                assert_eq!(seminearring_nf(&m).unwrap(), nf);
            }
        }
    }

    #[test]
    fn six_elements_pairwise_separated() {
        let l = seminearring_recognizer();
        let reps = seminearring_reps();
        for (i, r) in reps.iter().enumerate() {
            assert_eq!(l.value(r).unwrap(), i as u32);
        }
        assert_eq!(seminearring_separation().len(), 15);
    }

    #[test]
    fn bag_image_matches_oracle() {
        let c = kleisli_image_check(NonCase::BagKleisli, 2, 5).unwrap();
        assert!(c.mismatches.is_empty(), "{:?}", c.mismatches);
        assert!(c.image_classes >= 4);
    }

    #[test]
    fn seminearring_image_matches_oracle() {
        let c = kleisli_image_check(NonCase::Seminearring, 3, 4).unwrap();
        assert!(c.mismatches.is_empty(), "{:?}", c.mismatches);
        assert!(c.image_classes >= 4);
    }

    #[test]
    fn counting_candidate_collides() {
        let cand = counting_candidate();
        let w = NonCase::BagKleisli.refuter(4).unwrap().refute(&cand).unwrap();
        assert_eq!((w.n, w.m), (1, 4));
        assert!(w.revalidate(&cand, &|t| NonCase::BagKleisli.image_member(t)).unwrap());
    }

    #[test]
    fn trivial_candidate_collides_first() {
        for nc in NonCase::ALL {
            let r = nc.sweep(1, 1).unwrap();
            assert!(r.all_refuted());
            let w = r.first.unwrap();
            assert_eq!((w.n, w.m), (1, 2));
        }
    }

    #[test]
    fn sweeps_refute_everything() {
        for nc in NonCase::ALL {
            for size in 2..=3 {
                let r = nc.sweep(size, 2).unwrap();
                assert!(r.candidates > 0 && r.all_refuted(), "{nc:?} {size}: {r:?}");
            }
        }
    }
}

//! Named end-to-end studies. Each runs the checks of one example and
//! collects them into a [`Report`], one record per claim.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use thiserror::Error;

use crate::finite_algebra::{search_models, AlgebraError, FiniteAlgebra, OpTable};
use crate::monad_props::{check_mult_cartesian, check_weak_pullback_preservation, MultBounds, MultProbe, PropsError};
use crate::presentation::{LetterMap, PresentationError, Term};
use crate::recognition::{CrossCheck, RecognitionError, RecognizedLanguage};
use crate::report::{Outcome, Record, Report};
use crate::term_engine::{BoundedFreeAlgebra, EngineError, EqVerdict};

use super::burnside::{self, BurnsideVerdict};
use super::counterexamples::{balanced_family, refute_own_algebra, sweep, Counterexample};
use super::fixtures;
use super::lattice::{self, LatticeTerm};
use super::noncases::{self, NonCase};
use super::powerset_squared;
use super::reader::{self, EventuallyConstant, ReaderRecognizer, RectangularLanguage};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("unknown case `{0}`")]
    UnknownCase(String),
    #[error(transparent)]
    Recognition(#[from] RecognitionError),
    #[error(transparent)]
    Props(#[from] PropsError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Presentation(#[from] PresentationError),
}

type Result<T> = std::result::Result<T, StudyError>;

pub const CASES: [&str; 10] = [
    "marked_words",
    "balanced_assoc",
    "not_quite_malcev",
    "x3_x2",
    "reader",
    "lattice",
    "fgfgg",
    "xyyz",
    "bag_kleisli",
    "seminearring",
];

#[derive(Clone, Debug)]
pub struct CaseOptions {
    /// Largest candidate size in recognizer sweeps; each study has its own
    /// default.
    pub sweep_size: Option<usize>,
    pub jobs: usize,
}

impl Default for CaseOptions {
    fn default() -> Self {
        CaseOptions {
            sweep_size: None,
            jobs: 1,
        }
    }
}

pub fn run_case(name: &str, opts: &CaseOptions) -> Result<Report> {
    if let Some(ce) = Counterexample::parse(name) {
        return counterexample_study(ce, opts);
    }
    if let Some(nc) = NonCase::parse(name) {
        return noncase_study(nc, opts);
    }
    match name {
        "x3_x2" => burnside_study(),
        "reader" => reader_study(),
        "lattice" => lattice_study(),
        "fgfgg" => fgfgg_study(),
        "xyyz" => xyyz_study(),
        _ => Err(StudyError::UnknownCase(name.to_string())),
    }
}

fn timed<T>(report: &mut Report, label: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    report.time(label, start.elapsed());
    out
}

fn dot(l: Term, r: Term) -> Term {
    Term::app2("dot", l, r)
}

fn letter(x: &str) -> Term {
    Term::letter(x)
}

/// `(…((x·a)·a)…)·a` with `n` copies of `a`.
fn left_spine(x: Term, a: &Term, n: usize) -> Term {
    (0..n).fold(x, |acc, _| dot(acc, a.clone()))
}

/// Published table cells as `(op, arguments, value)` by element name.
fn golden_cells(ce: Counterexample) -> Vec<(&'static str, Vec<&'static str>, &'static str)> {
    match ce {
        Counterexample::MarkedWords => vec![("dot", vec!["AA", "BA"], "AA"), ("dot", vec!["AA", "BB"], "AB")],
        Counterexample::BalancedAssoc => vec![
            ("dot", vec!["c", "b"], "R"),
            ("dot", vec!["a", "R"], "L"),
            ("dot", vec!["L", "b"], "R"),
        ],
        Counterexample::NotQuiteMalcev => ["0", "1", "2", "3", "4", "5", "6"]
            .iter()
            .map(|x| ("s", vec![*x], "4"))
            .collect(),
    }
}

fn cell_holds(a: &FiniteAlgebra, op: &str, args: &[&str], value: &str) -> bool {
    let args: Option<Vec<u32>> = args.iter().map(|x| a.element(x)).collect();
    match (args, a.element(value)) {
        (Some(args), Some(v)) => a.apply_named(op, &args).ok() == Some(v),
        _ => false,
    }
}

fn show_mutation(a: &FiniteAlgebra, m: &crate::finite_algebra::Mutation) -> String {
    let args: Vec<String> = m.args.iter().map(|&x| a.name(x)).collect();
    format!("{}({}) := {}", m.op, args.join(","), a.name(m.value))
}

fn counterexample_study(ce: Counterexample, opts: &CaseOptions) -> Result<Report> {
    let mut report = Report::new(format!("case {}", ce.name()));
    let a = ce.algebra();
    let p = ce.theory();

    let sat = timed(&mut report, "satisfaction", || a.check_satisfies());
    let mut rec = Record::claim("fixture satisfies every equation", sat.is_ok())
        .bound("size", a.size)
        .bound("equations", p.equations.len());
    if let Err(v) = &sat {
        rec = rec.note(format!("{v:?}"));
    }
    report.push(rec);

    let cells = golden_cells(ce);
    let bad: Vec<String> = cells
        .iter()
        .filter(|(op, args, v)| !cell_holds(&a, op, args, v))
        .map(|(op, args, v)| format!("{op}({}) = {v} fails", args.join(",")))
        .collect();
    let mut rec = Record::claim("published table cells", bad.is_empty()).bound("cells", cells.len());
    for b in bad {
        rec = rec.note(b);
    }
    report.push(rec);

    let m = timed(&mut report, "mutation sweep", || a.mutation_sweep());
    let mut rec = Record::claim("every single-cell mutation breaks an equation", m.survivors.is_empty())
        .expect(Outcome::Refuted)
        .bound("mutations", m.mutations)
        .bound("survivors", m.survivors.len());
    if let Some(s) = m.survivors.first() {
        rec = rec.note(format!("first surviving mutation {}", show_mutation(&a, s)));
    }
    report.push(rec);

    let l = ce.language();
    let alphabet = l.alphabet();
    let letters: Vec<&str> = alphabet.iter().map(String::as_str).collect();
    let bound = if ce == Counterexample::NotQuiteMalcev { 3 } else { 4 };
    let fa = timed(&mut report, "source free algebra", || BoundedFreeAlgebra::build(&p, &letters, bound))?;
    let mut checked = 0;
    let mut mismatch = None;
    for c in fa.classes() {
        for t in fa.members(c) {
            checked += 1;
            if mismatch.is_none() && l.member(&t)? != ce.source_member(&t) {
                mismatch = Some(t);
            }
        }
    }
    let mut rec = Record::claim("recognizer accepts exactly the source language", mismatch.is_none())
        .bound("term_bound", bound)
        .bound("terms", checked);
    if let Some(t) = &mismatch {
        rec = rec.term("mismatch", t);
    }
    report.push(rec);

    match ce {
        Counterexample::BalancedAssoc => balanced_equations(&mut report)?,
        Counterexample::NotQuiteMalcev => {
            let ddd = Term::app("p", vec![letter("d"); 3]);
            let t = Term::app("p", vec![letter("a"), ddd.clone(), ddd]);
            let holds = super::counterexamples::nqm_normal_form(&t) == Term::app1("s", letter("a"))
                && ce.image_member(&t);
            report.push(Record::claim("p(a, p(d,d,d), p(d,d,d)) collapses into the image", holds).term("t", &t));
        }
        Counterexample::MarkedWords => {}
    }

    let max = opts.sweep_size.unwrap_or(3);
    let refuter = ce.refuter(max + 1)?;
    for size in 1..=max {
        let s = timed(&mut report, &format!("sweep size {size}"), || sweep(ce, &refuter, size, opts.jobs))?;
        let mut rec = Record::claim(format!("no algebra of size {size} recognizes the image"), s.all_refuted())
            .bound("models", s.models as usize)
            .bound("candidates", s.candidates as usize)
            .bound("refuted", s.refuted as usize);
        if let Some(w) = &s.first {
            rec = rec
                .term("t_in", &w.t_in)
                .term("t_out", &w.t_out)
                .note(format!("first candidate collides at n={} m={}", w.n, w.m));
        }
        report.push(rec);
    }

    let own = timed(&mut report, "own algebra", || refute_own_algebra(ce))?;
    let mut rec = Record::claim("the source recognizer does not recognize the image", !own.is_empty())
        .bound("assignments", own.len());
    if let Some(w) = own.first() {
        rec = rec.term("t_in", &w.t_in).term("t_out", &w.t_out);
    }
    report.push(rec);
    Ok(report)
}

/// `a·L_n(t) = L_n(a·t)` and `Pⁿ(c) = L_n(a·(a·(⋯(a·c))))` with
/// `P(x) = a·(x·a)`, decided in the bounded free algebra.
fn balanced_equations(report: &mut Report) -> Result<()> {
    let p = Counterexample::BalancedAssoc.theory();
    let a = letter("a");
    let fa = timed(report, "balanced free algebra", || BoundedFreeAlgebra::build(&p, &["a", "c"], 6))?;
    for n in 1..=3 {
        let t = letter("c");
        let lhs = dot(a.clone(), left_spine(t.clone(), &a, n));
        let rhs = left_spine(dot(a.clone(), t), &a, n);
        let v = fa.decide_equal(&lhs, &rhs)?;
        report.push(
            Record::claim(format!("moving a to the left, n={n}"), v == EqVerdict::Equal)
                .bound("term_bound", 6)
                .term("lhs", &lhs)
                .term("rhs", &rhs),
        );
        let lhs = (0..n).fold(letter("c"), |x, _| dot(a.clone(), dot(x, a.clone())));
        let rhs = left_spine(balanced_family(n), &a, n);
        let v = fa.decide_equal(&lhs, &rhs)?;
        report.push(
            Record::claim(format!("balanced nesting, n={n}"), v == EqVerdict::Equal)
                .bound("term_bound", 6)
                .term("lhs", &lhs)
                .term("rhs", &rhs),
        );
    }
    Ok(())
}

fn burnside_study() -> Result<Report> {
    let mut report = Report::new("case x3_x2");
    let (checked, escape) = timed(&mut report, "source closure", || burnside::check_source_closed(10));
    let mut rec = Record::claim("one rewrite step never leaves the source language", escape.is_none())
        .bound("max_length", 10)
        .bound("words", checked);
    if let Some((w, v)) = escape {
        rec = rec.note(format!("{} -> {}", burnside::show(&w), burnside::show(&v)));
    }
    report.push(rec);

    for v in [&b"a"[..], b"ab"] {
        let w: Vec<u8> = [v, b"0", v, b"0", v, b"0"].concat();
        let verdict = burnside::burnside_member(&w, &burnside::in_base, 12);
        let mut rec = Record::claim(
            format!("{} is in the image", burnside::show(&w)),
            matches!(verdict, BurnsideVerdict::Member(_)),
        )
        .bound("length_budget", 12);
        if let BurnsideVerdict::Member(trace) = &verdict {
            let steps: Vec<String> = trace.iter().map(|x| burnside::show(x)).collect();
            rec = rec.note(format!("trace {}", steps.join(" -> ")));
        }
        report.push(rec);
    }

    let verdict = burnside::burnside_member(b"ab0ba0ab0", &burnside::in_base, 12);
    report.push(
        Record::claim(
            "ab0ba0ab0 is square-free, hence outside the image",
            matches!(verdict, BurnsideVerdict::NonMember { definitive: true, .. }),
        )
        .bound("length_budget", 12),
    );

    let n = timed(&mut report, "square-free words", || burnside::squarefree_words(b"abc", 20).len());
    report.push(Record::claim("square-free words of length 20 exist", n > 0).bound("count", n));

    let same = burnside::v0w0v0_counterexample(5, true);
    report.push(Record::claim("v0w0v0 is square-free for distinct square-free v, w of equal length", same.is_none()).bound("max_length", 5));
    let any = burnside::v0w0v0_counterexample(3, false);
    let mut rec = Record::claim("v0w0v0 is square-free for all distinct square-free v, w", any.is_none())
        .expect(Outcome::Refuted)
        .bound("max_length", 3);
    if let Some((v, w)) = any {
        rec = rec.note(format!(
            "v={} w={} gives {}",
            burnside::show(&v),
            burnside::show(&w),
            burnside::show(&burnside::v0w0v0(&v, &w))
        ));
    }
    report.push(rec);

    let p = fixtures::theory("x3_x2").expect("built-in theory");
    let span = fixtures::span("ab-cd-e").expect("built-in span");
    let o = timed(&mut report, "weak pullback", || check_weak_pullback_preservation(&p, &span, 3, 3))?;
    report.push(
        Record::from_outcome("weak pullbacks are preserved", &o)
            .expect(Outcome::Refuted)
            .bound("term_bound", 3)
            .bound("witness_bound", 3),
    );
    Ok(report)
}

fn set(xs: &[&str]) -> BTreeSet<String> {
    xs.iter().map(|x| x.to_string()).collect()
}

fn reader_study() -> Result<Report> {
    let mut report = Report::new("case reader");
    let f = LetterMap::new(&["a", "b"], &["c", "d"], &[("a", "c"), ("b", "d")])?;
    let l = RectangularLanguage::new(BTreeMap::from([(1, set(&["a"]))]));
    let img = reader::reader_direct_image(&[l], &f)?;
    report.push(Record::claim(
        "image of {1:{a}} along a->c, b->d is {1:{c}}",
        img == vec![RectangularLanguage::new(BTreeMap::from([(1, set(&["c"]))]))],
    ));
    let img = reader::reader_direct_image(&[RectangularLanguage::default()], &f)?;
    report.push(Record::claim("image of the full language is full", img == vec![RectangularLanguage::default()]));
    let g = LetterMap::new(&["a", "b"], &["c", "d"], &[("a", "c"), ("b", "c")])?;
    let l = RectangularLanguage::new(BTreeMap::from([(1, set(&["a"])), (3, set(&["a", "b"]))]));
    report.push(Record::claim(
        "a map that is not onto is rejected",
        matches!(reader::reader_direct_image(&[l], &g), Err(RecognitionError::NotSurjective(_))),
    ));

    let ab = vec!["a".to_string(), "b".to_string()];
    let l = RectangularLanguage::new(BTreeMap::from([(1, set(&["a"])), (2, set(&["a", "b"]))]));
    let r = ReaderRecognizer::new(&l, &ab)?;
    report.push(Record::claim("two constrained positions over {a,b} give four elements", r.carrier_size() == 4));
    let full = ReaderRecognizer::new(&RectangularLanguage::default(), &ab)?;
    let w = EventuallyConstant::new(vec!["b".to_string()], "a".to_string());
    report.push(Record::claim(
        "no constraints give a one-element algebra accepting everything",
        full.carrier_size() == 1 && full.member(&w)?,
    ));
    let l = RectangularLanguage::new(BTreeMap::from([(1, set(&["a"]))]));
    report.push(Record::claim("b a^ω is rejected by {1:{a}}", !ReaderRecognizer::new(&l, &ab)?.member(&w)?));

    let mut laws = 0;
    let mut broken = 0;
    for z in [set(&["a"]), set(&["a", "b"])] {
        let l = RectangularLanguage::new(BTreeMap::from([(1, set(&["b"])), (3, z)]));
        let r = ReaderRecognizer::new(&l, &ab)?;
        let n = r.carrier_size();
        for e in 0..n {
            laws += 1;
            broken += usize::from(!r.unit_law(e));
        }
        for i in 0..n {
            for j in 0..n {
                let rows = EventuallyConstant::new(
                    vec![EventuallyConstant::new(vec![i, j], j), EventuallyConstant::constant(j)],
                    EventuallyConstant::new(vec![j, i, j], i),
                );
                laws += 1;
                broken += usize::from(!r.associativity_law(&rows));
            }
        }
    }
    report.push(Record::claim("algebra laws hold on sampled sequences", broken == 0).bound("instances", laws));

    let ex = timed(&mut report, "exhaustive", || reader::exhaustive_reader_check(3, 3, 2))?;
    let mut rec = Record::claim("image construction matches brute force", ex.failure.is_none())
        .bound("alphabet", 3)
        .bound("max_position", 3)
        .bound("constrained", 2)
        .bound("instances", ex.instances)
        .bound("words", ex.words);
    if let Some(f) = ex.failure {
        rec = rec.note(f);
    }
    report.push(rec);

    let rnd = timed(&mut report, "random words", || reader::random_reader_check(1000, 2024))?;
    let mut rec = Record::claim("recognizer and image agree on random words", rnd.failure.is_none())
        .bound("words", rnd.words)
        .bound("seed", 2024);
    if let Some(f) = rnd.failure {
        rec = rec.note(f);
    }
    report.push(rec);
    Ok(report)
}

/// The chain `0 < 1 < ⋯ < n-1`.
pub fn chain_lattice(n: u32) -> FiniteAlgebra {
    let table = |f: fn(u32, u32) -> u32| (0..n * n).map(|i| f(i / n, i % n)).collect();
    FiniteAlgebra::new(
        fixtures::theory("lattice").expect("built-in theory"),
        n as usize,
        vec![
            OpTable {
                name: "join".into(),
                arity: 2,
                table: table(u32::max),
            },
            OpTable {
                name: "meet".into(),
                arity: 2,
                table: table(u32::min),
            },
        ],
        None,
    )
    .expect("chains are lattices")
}

/// The four-element Boolean lattice on bit masks of two bits.
pub fn square_lattice() -> FiniteAlgebra {
    let table = |f: fn(u32, u32) -> u32| (0..16).map(|i| f(i / 4, i % 4)).collect();
    FiniteAlgebra::new(
        fixtures::theory("lattice").expect("built-in theory"),
        4,
        vec![
            OpTable {
                name: "join".into(),
                arity: 2,
                table: table(|x, y| x | y),
            },
            OpTable {
                name: "meet".into(),
                arity: 2,
                table: table(|x, y| x & y),
            },
        ],
        None,
    )
    .expect("the square is a lattice")
}

/// Lattice languages over `{a,b,c}` with their letter maps: three
/// lattices, fixed assignments, several accepting sets and maps.
pub fn lattice_instances() -> Vec<(String, RecognizedLanguage, LetterMap)> {
    let maps = [
        ("a,b->x c->y", vec![("a", "x"), ("b", "x"), ("c", "y")], vec!["x", "y"]),
        ("a->x b,c->y", vec![("a", "x"), ("b", "y"), ("c", "y")], vec!["x", "y"]),
        ("a,b,c->x", vec![("a", "x"), ("b", "x"), ("c", "x")], vec!["x"]),
    ];
    let lattices = [
        ("chain2", fixtures::two_element_lattice(), vec![0, 1, 1], vec![vec![1], vec![0]]),
        ("chain3", chain_lattice(3), vec![0, 1, 2], vec![vec![1], vec![1, 2], vec![0, 1]]),
        ("square", square_lattice(), vec![1, 2, 3], vec![vec![3], vec![1], vec![0, 1]]),
    ];
    let mut out = Vec::new();
    for (lname, a, h, accepts) in &lattices {
        let assignment: BTreeMap<String, u32> =
            ["a", "b", "c"].iter().zip(h).map(|(x, &v)| (x.to_string(), v)).collect();
        for s in accepts {
            let l = RecognizedLanguage::new(a.clone(), assignment.clone(), s.iter().copied().collect())
                .expect("valid language");
            for (mname, pairs, target) in &maps {
                let f = LetterMap::new(&["a", "b", "c"], target, pairs).expect("valid map");
                out.push((format!("{lname} S={s:?} {mname}"), l.clone(), f));
            }
        }
    }
    out
}

fn lattice_study() -> Result<Report> {
    let mut report = Report::new("case lattice");
    let g = LatticeTerm::gen;
    let pq = LatticeTerm::meet(vec![g("p"), g("q")]);
    let pr = LatticeTerm::join(vec![g("p"), g("r")]);
    report.push(Record::claim("p∧q ≤ p∨r", lattice::whitman_leq(&pq, &pr)));
    report.push(Record::claim("distinct generators are incomparable", !lattice::whitman_leq(&g("p"), &g("q"))));

    let (t1, t, t2, s) = lattice::chain_example();
    report.push(
        Record::claim("t1 < (t1∨s)∧t2 < t2", {
            lattice::whitman_leq(&t1, &t)
                && !lattice::whitman_leq(&t, &t1)
                && lattice::whitman_leq(&t, &t2)
                && !lattice::whitman_leq(&t2, &t)
        })
        .term("t1", &t1.to_term())
        .term("t", &t.to_term())
        .term("t2", &t2.to_term()),
    );
    report.push(Record::claim(
        "s is incomparable with t1 and t2",
        [&t1, &t2]
            .iter()
            .all(|x| !lattice::whitman_leq(&s, x) && !lattice::whitman_leq(x, &s)),
    ));
    let cf = lattice::canonical_form(&t);
    report.push(
        Record::claim(
            "the canonical form of the middle term is idempotent and still mentions s",
            lattice::canonical_form(&cf) == cf && cf.generators().contains("s"),
        )
        .term("canonical", &cf.to_term()),
    );
    let n = lattice::lattice_elements(&["a".to_string(), "b".to_string()], 5).len();
    report.push(Record::claim("the free lattice on two generators has four elements", n == 4).bound("term_bound", 5));

    let instances = lattice_instances();
    let mut failed = Vec::new();
    let start = Instant::now();
    for (name, l, f) in &instances {
        let img = lattice::lattice_direct_image(l, f)?;
        let o = lattice::lattice_cross_check(l, f, &img, 5, 2)?;
        if !o.is_verified() {
            failed.push(format!("{name}: {o}"));
        }
    }
    report.time("lattice cross-checks", start.elapsed());
    let mut rec = Record::claim("direct images match brute force", failed.is_empty())
        .bound("instances", instances.len())
        .bound("term_bound", 5)
        .bound("margin", 2);
    for f in failed {
        rec = rec.note(f);
    }
    report.push(rec);
    Ok(report)
}

fn fgfgg_study() -> Result<Report> {
    let mut report = Report::new("case fgfgg");
    let p = fixtures::theory("fgfgg").expect("built-in theory");
    for size in 1..=3 {
        let models = timed(&mut report, &format!("size {size}"), || search_models(&p, size))?;
        let expected = usize::from(size == 1);
        let check = if size == 1 {
            "exactly one model of size 1".to_string()
        } else {
            format!("no model of size {size}")
        };
        report.push(Record::claim(check, models.len() == expected).bound("size", size).bound("models", models.len()));
    }
    Ok(report)
}

fn xyyz_study() -> Result<Report> {
    let mut report = Report::new("case xyyz");
    let p = fixtures::theory("xyyz").expect("built-in theory");
    let f = LetterMap::parse("a1->a,a2->a,b->b,c->c", None)?;
    let probe = MultProbe {
        outer: p.parse_term("(dot h1 h2)")?,
        binding: [
            ("h1".to_string(), p.parse_term("b")?),
            ("h2".to_string(), p.parse_term("(dot a c)")?),
        ]
        .into(),
        t: p.parse_term("(dot b (dot a1 (dot a2 c)))")?,
    };
    let bounds = MultBounds {
        term_bound: 4,
        outer_size: 1,
        handles: 2,
    };
    let o = timed(&mut report, "multiplication", || check_mult_cartesian(&p, &f, true, &bounds, &[probe]))?;
    report.push(
        Record::from_outcome("multiplication is cartesian at a1,a2->a", &o)
            .expect(Outcome::Refuted)
            .bound("term_bound", 4),
    );

    let (l, f) = powerset_squared::witness_language()?;
    let (r, t) = powerset_squared::witness_terms();
    report.push(
        Record::claim("the witness language contains the mixed term", l.member(&r)?)
            .bound("recognizer_size", l.algebra.size)
            .term("r", &r),
    );
    let cc = CrossCheck {
        margin: 2,
        max_universe: 250_000,
        ..CrossCheck::new(3)
    };
    let img = timed(&mut report, "pairs of subsets", || powerset_squared::powerset_squared_image(&l, &f, &cc))?;
    report.push(
        Record::claim("the pairs-of-subsets image contains the renamed term", img.language.member(&t)?)
            .bound("image_size", img.language.algebra.size)
            .term("t", &t),
    );
    report.push(Record::from_outcome("pairs-of-subsets image matches brute force", &img.cross_check));
    let id = LetterMap::identity(&l.alphabet());
    let img = powerset_squared::powerset_squared_image(&l, &id, &CrossCheck::new(3))?;
    report.push(Record::from_outcome("identity map keeps the language", &img.cross_check));
    Ok(report)
}

fn noncase_study(nc: NonCase, opts: &CaseOptions) -> Result<Report> {
    let mut report = Report::new(format!("case {}", nc.name()));
    let (sb, tb) = match nc {
        NonCase::BagKleisli => (2, 5),
        NonCase::Seminearring => (3, 4),
    };
    let k = timed(&mut report, "kleisli image", || noncases::kleisli_image_check(nc, sb, tb))?;
    let mut rec = Record::claim("bounded Kleisli image matches the exact image", k.mismatches.is_empty())
        .bound("source_bound", k.source_bound)
        .bound("target_bound", k.target_bound)
        .bound("classes", k.classes_checked)
        .bound("image_classes", k.image_classes);
    for m in k.mismatches.iter().take(3) {
        rec = rec.term("mismatch", m);
    }
    report.push(rec);

    match nc {
        NonCase::BagKleisli => {
            let c = letter("c");
            let stated = noncases::bag_nf(&c).is_some_and(|w| w.get("a") == w.get("b"));
            report.push(
                Record::claim("the image is {w : w(a) = w(b)}", stated == nc.image_member(&c))
                    .expect(Outcome::Refuted)
                    .term("w", &c)
                    .note("w(a) = w(b) but c is not in the image; the image also needs w(c) = 0"),
            );
            let cand = noncases::counting_candidate();
            let w = nc.refuter(4)?.refute(&cand)?;
            let valid = w.revalidate(&cand, &|t| nc.image_member(t))?;
            report.push(
                Record::claim("counting modulo 3 does not recognize the image", valid)
                    .term("t_in", &w.t_in)
                    .term("t_out", &w.t_out)
                    .note(format!("collision at n={} m={}", w.n, w.m)),
            );
        }
        NonCase::Seminearring => {
            let pairs = noncases::seminearring_separation();
            report.push(
                Record::claim("the six recognizer elements are pairwise separated", pairs.len() == 15)
                    .bound("pairs", pairs.len()),
            );
            report.push(
                Record::claim("ab* has a five-element recognizer", pairs.len() < 15)
                    .expect(Outcome::Refuted)
                    .note("every recognizer has at least six elements"),
            );
        }
    }

    let max = opts.sweep_size.unwrap_or(nc.default_sweep_size());
    for size in 1..=max {
        let s = timed(&mut report, &format!("sweep size {size}"), || nc.sweep(size, opts.jobs))?;
        let mut rec = Record::claim(format!("no algebra of size {size} recognizes the image"), s.all_refuted())
            .bound("models", s.models as usize)
            .bound("candidates", s.candidates as usize)
            .bound("refuted", s.refuted as usize);
        if let Some(w) = &s.first {
            rec = rec
                .term("t_in", &w.t_in)
                .term("t_out", &w.t_out)
                .note(format!("first candidate collides at n={} m={}", w.n, w.m));
        }
        report.push(rec);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_case_is_an_error() {
        assert!(matches!(
            run_case("nope", &CaseOptions::default()),
            Err(StudyError::UnknownCase(_))
        ));
    }

    #[test]
    fn fgfgg_case_passes() {
        let r = run_case("fgfgg", &CaseOptions::default()).unwrap();
        assert_eq!(r.records.len(), 3);
        assert!(r.all_as_expected());
    }

    #[test]
    fn lattice_instances_are_lattices() {
        for (_, l, _) in lattice_instances() {
            assert!(l.algebra.satisfies());
        }
        assert!(chain_lattice(4).satisfies());
    }

    #[test]
    fn sweep_reports_do_not_depend_on_jobs() {
        let opts = |jobs| CaseOptions {
            sweep_size: Some(2),
            jobs,
        };
        let a = run_case("marked_words", &opts(1)).unwrap();
        let b = run_case("marked_words", &opts(3)).unwrap();
        assert_eq!(a.records, b.records);
    }
}

//! The three counterexample monads: exact membership oracles for the
//! source languages and their direct images, pigeonhole families, and
//! sweeps over small candidate recognizers.

use std::collections::{BTreeMap, HashSet, VecDeque};

use crate::finite_algebra::{for_each_model_tables, table_offsets, FiniteAlgebra, SearchOptions};
use crate::presentation::{LetterMap, Presentation, Term};
use crate::recognition::{RecognitionError, RecognizedLanguage, RefutationWitness, Refuter};

use super::fixtures;

type Result<T> = std::result::Result<T, RecognitionError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Counterexample {
    MarkedWords,
    BalancedAssoc,
    NotQuiteMalcev,
}

fn dot(l: Term, r: Term) -> Term {
    Term::app2("dot", l, r)
}

fn letter(a: &str) -> Term {
    Term::letter(a)
}

/// `x1 · (x2 · (… · last))`.
fn right_spine(op: &str, items: &[Term], last: Term) -> Term {
    items
        .iter()
        .rev()
        .fold(last, |acc, x| Term::app2(op, x.clone(), acc))
}

/// `(…((x · y) · y) …) · y` with `n` copies of `y`.
fn left_spine(x: Term, y: &Term, n: usize) -> Term {
    (0..n).fold(x, |acc, _| dot(acc, y.clone()))
}

impl Counterexample {
    pub const ALL: [Counterexample; 3] = [
        Counterexample::MarkedWords,
        Counterexample::BalancedAssoc,
        Counterexample::NotQuiteMalcev,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Counterexample::MarkedWords => "marked_words",
            Counterexample::BalancedAssoc => "balanced_assoc",
            Counterexample::NotQuiteMalcev => "not_quite_malcev",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn theory(self) -> Presentation {
        fixtures::theory(self.name()).expect("built-in theory")
    }

    /// The recognizer from the data directory.
    pub fn algebra(self) -> FiniteAlgebra {
        fixtures::algebra(self.name()).expect("built-in algebra")
    }

    /// The source language `L`.
    pub fn language(self) -> RecognizedLanguage {
        fixtures::language(self.name()).expect("built-in language")
    }

    /// The surjective letter map whose image of `L` is not recognizable.
    pub fn letter_map(self) -> LetterMap {
        let r = match self {
            Counterexample::MarkedWords => {
                LetterMap::new(&["a", "b"], &["c"], &[("a", "c"), ("b", "c")])
            }
            Counterexample::BalancedAssoc => LetterMap::new(
                &["a", "b", "c"],
                &["a", "c"],
                &[("a", "a"), ("b", "a"), ("c", "c")],
            ),
            Counterexample::NotQuiteMalcev => LetterMap::new(
                &["a", "b", "c"],
                &["a", "d"],
                &[("a", "a"), ("b", "d"), ("c", "d")],
            ),
        };
        r.expect("fixed letter map")
    }

    pub fn image_alphabet(self) -> Vec<String> {
        self.letter_map().target
    }

    /// Exact membership in `L`.
    pub fn source_member(self, t: &Term) -> bool {
        match self {
            Counterexample::MarkedWords => MarkedWord::of_term(t).is_some_and(|w| {
                let n = w.word.len() / 2;
                n >= 1
                    && w.word.len() == 2 * n
                    && w.word.chunks(2).all(|c| c[0] == "a" && c[1] == "b")
                    && w.count_marks("a") == n
                    && w.count_marks("b") == 0
            }),
            Counterexample::BalancedAssoc => {
                let leaves = t.leaves().len();
                leaves >= 3 && leaves % 2 == 1 && *t == balanced_source(leaves / 2)
            }
            Counterexample::NotQuiteMalcev => match nqm_normal_form(t) {
                Term::App(p, kids) if p == "p" => {
                    let middle = |k: &Term, x: &str| {
                        matches!(k, Term::App(q, ks) if q == "p" && ks[1] == letter(x))
                    };
                    kids[0] == letter("a") && middle(&kids[1], "b") && middle(&kids[2], "c")
                }
                _ => false,
            },
        }
    }

    /// Exact membership in the direct image of `L` along the letter map.
    pub fn image_member(self, t: &Term) -> bool {
        match self {
            Counterexample::MarkedWords => MarkedWord::of_term(t).is_some_and(|w| {
                let n = w.word.len() / 2;
                n >= 1
                    && w.word.len() == 2 * n
                    && w.word.iter().all(|x| x == "c")
                    && w.count_marks("c") == n
            }),
            Counterexample::BalancedAssoc => {
                let y = term_yield(t);
                let n = y.len() / 2;
                if y.len() != 2 * n + 1 || n == 0 {
                    return false;
                }
                let shape = y
                    .iter()
                    .enumerate()
                    .all(|(i, x)| x == if i == n { "c" } else { "a" });
                shape && balanced_class_contains(t, &balanced_image(n))
            }
            Counterexample::NotQuiteMalcev => {
                let nf = nqm_normal_form(t);
                if nf == Term::app1("s", letter("a")) {
                    return true;
                }
                match nf {
                    Term::App(p, kids) if p == "p" => {
                        let side = |k: &Term| match k {
                            Term::App(q, _) if q == "s" => true,
                            Term::App(q, ks) if q == "p" => ks[1] == letter("d"),
                            _ => false,
                        };
                        kids[0] == letter("a")
                            && side(&kids[1])
                            && side(&kids[2])
                            && kids[1] != kids[2]
                    }
                    _ => false,
                }
            }
        }
    }

    /// Member `n ≥ 1` of the colliding family, a term over the image
    /// alphabet.
    pub fn family(self, n: usize) -> Term {
        match self {
            Counterexample::MarkedWords => marked_c(n),
            Counterexample::BalancedAssoc => balanced_family(n),
            Counterexample::NotQuiteMalcev => Term::app1("s", nqm_spine(n)),
        }
    }

    /// The discriminating pair for indices `n < m`: the first term lies in
    /// the image, the second does not, and both have the shape `C[family(·)]`
    /// for one context `C`.
    pub fn discriminator(self, n: usize, m: usize) -> (Term, Term) {
        match self {
            Counterexample::MarkedWords => {
                let plain = Term::app1("o", marked_c(n));
                (dot(marked_c(n), plain.clone()), dot(marked_c(m), plain))
            }
            Counterexample::BalancedAssoc => {
                let a = letter("a");
                (
                    left_spine(balanced_family(n), &a, n),
                    left_spine(balanced_family(m), &a, n),
                )
            }
            Counterexample::NotQuiteMalcev => {
                let ctx = |x: Term| Term::app("p", vec![self.family(n), x, letter("a")]);
                (ctx(self.family(n)), ctx(self.family(m)))
            }
        }
    }

    /// A refuter for candidate recognizers of the image with up to
    /// `max_index - 1` elements.
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
}

/// Fully marked `c^n`.
fn marked_c(n: usize) -> Term {
    let cs = vec![letter("c"); n - 1];
    right_spine("dot", &cs, letter("c"))
}

/// A marked word: the underlying word and how many occurrences of each
/// letter are marked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkedWord {
    pub word: Vec<String>,
    pub marks: BTreeMap<String, usize>,
}

impl MarkedWord {
    /// Requires a nonempty word with at least as many occurrences of every
    /// letter as marks on it.
    pub fn new(word: Vec<String>, marks: BTreeMap<String, usize>) -> Option<Self> {
        let ok = !word.is_empty()
            && marks
                .iter()
                .all(|(x, &k)| word.iter().filter(|y| *y == x).count() >= k);
        ok.then(|| MarkedWord {
            word,
            marks: marks.into_iter().filter(|&(_, k)| k > 0).collect(),
        })
    }

    pub fn count_marks(&self, x: &str) -> usize {
        self.marks.get(x).copied().unwrap_or(0)
    }

    /// Evaluates a ground term over `dot` and `o`.
    pub fn of_term(t: &Term) -> Option<Self> {
        match t {
            Term::Letter(x) => Some(MarkedWord {
                word: vec![x.clone()],
                marks: BTreeMap::from([(x.clone(), 1)]),
            }),
            Term::App(op, kids) if op == "dot" && kids.len() == 2 => {
                let (l, r) = (Self::of_term(&kids[0])?, Self::of_term(&kids[1])?);
                let mut word = l.word;
                word.extend(r.word);
                let mut marks = l.marks;
                for (x, k) in r.marks {
                    *marks.entry(x).or_default() += k;
                }
                Some(MarkedWord { word, marks })
            }
            Term::App(op, kids) if op == "o" && kids.len() == 1 => {
                let w = Self::of_term(&kids[0])?;
                Some(MarkedWord {
                    word: w.word,
                    marks: BTreeMap::new(),
                })
            }
            _ => None,
        }
    }

    /// A term denoting this value: the first marked occurrences of each
    /// letter are bare, the rest are erased.
    pub fn to_term(&self) -> Term {
        let mut left = self.marks.clone();
        let items: Vec<Term> = self
            .word
            .iter()
            .map(|x| match left.get_mut(x) {
                Some(k) if *k > 0 => {
                    *k -= 1;
                    letter(x)
                }
                _ => Term::app1("o", letter(x)),
            })
            .collect();
        let (last, init) = items.split_last().expect("nonempty word");
        right_spine("dot", init, last.clone())
    }
}

/// Leaf letters from left to right.
pub fn term_yield(t: &Term) -> Vec<String> {
    t.leaves()
        .into_iter()
        .filter_map(|l| match l {
            Term::Letter(x) => Some(x.clone()),
            _ => None,
        })
        .collect()
}

/// `l_1 = a·(c·b)`, `l_{n+1} = a·(l_n·b)`.
fn balanced_source(n: usize) -> Term {
    let mut t = dot(letter("a"), dot(letter("c"), letter("b")));
    for _ in 1..n {
        t = dot(letter("a"), dot(t, letter("b")));
    }
    t
}

/// The renaming of `l_n` along `b ↦ a`.
pub fn balanced_image(n: usize) -> Term {
    let mut t = dot(letter("a"), dot(letter("c"), letter("a")));
    for _ in 1..n {
        t = dot(letter("a"), dot(t, letter("a")));
    }
    t
}

/// `t_n = a·(a·(…(a·c)))` with `n` copies of `a`.
pub fn balanced_family(n: usize) -> Term {
    right_spine("dot", &vec![letter("a"); n], letter("c"))
}

/// All terms one application of `(x·y)·x = x·(y·x)` away, in either
/// direction, at any position.
pub fn balanced_neighbors(t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    if let Term::App(_, kids) = t {
        if let (Term::App(_, lk), x2) = (&kids[0], &kids[1]) {
            if lk[0] == *x2 {
                out.push(dot(lk[0].clone(), dot(lk[1].clone(), x2.clone())));
            }
        }
        if let (x1, Term::App(_, rk)) = (&kids[0], &kids[1]) {
            if rk[1] == *x1 {
                out.push(dot(dot(x1.clone(), rk[0].clone()), x1.clone()));
            }
        }
        for (i, k) in kids.iter().enumerate() {
            for nk in balanced_neighbors(k) {
                let mut ks = kids.clone();
                ks[i] = nk;
                out.push(Term::App("dot".into(), ks));
            }
        }
    }
    out
}

/// Equivalence classes of the balanced associativity theory are finite
/// (the equation preserves size and yield), so breadth-first search over
/// rewrite steps decides equality exactly.
pub fn balanced_class(t: &Term) -> HashSet<Term> {
    let mut seen = HashSet::from([t.clone()]);
    let mut queue = VecDeque::from([t.clone()]);
    while let Some(u) = queue.pop_front() {
        for v in balanced_neighbors(&u) {
            if seen.insert(v.clone()) {
                queue.push_back(v);
            }
        }
    }
    seen
}

fn balanced_class_contains(t: &Term, target: &Term) -> bool {
    if t == target {
        return true;
    }
    let mut seen = HashSet::from([t.clone()]);
    let mut queue = VecDeque::from([t.clone()]);
    while let Some(u) = queue.pop_front() {
        for v in balanced_neighbors(&u) {
            if v == *target {
                return true;
            }
            if seen.insert(v.clone()) {
                queue.push_back(v);
            }
        }
    }
    false
}

/// `t_1 = d`, `t_{n+1} = p(d, d, t_n)`.
fn nqm_spine(n: usize) -> Term {
    let d = letter("d");
    (1..n).fold(d.clone(), |acc, _| Term::app("p", vec![d.clone(), d.clone(), acc]))
}

/// Normal form for `p(x,x,y) = s(y) = p(y,x,x)`: both equations oriented
/// towards `s(y)` form a terminating, locally confluent system, so
/// innermost rewriting yields a unique normal form.
pub fn nqm_normal_form(t: &Term) -> Term {
    match t {
        Term::App(op, kids) => {
            let ks: Vec<Term> = kids.iter().map(nqm_normal_form).collect();
            if op == "p" && ks.len() == 3 {
                if ks[0] == ks[1] {
                    return Term::app1("s", ks[2].clone());
                }
                if ks[1] == ks[2] {
                    return Term::app1("s", ks[0].clone());
                }
            }
            Term::App(op.clone(), ks)
        }
        _ => t.clone(),
    }
}

/// Refutations over every model of one size and every letter assignment.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SweepReport {
    pub size: usize,
    pub models: u64,
    pub candidates: u64,
    /// Candidates for which the replayed witness evaluated consistently.
    pub refuted: u64,
    /// The witness for the first candidate, fully revalidated.
    pub first: Option<RefutationWitness>,
}

impl SweepReport {
    pub fn all_refuted(&self) -> bool {
        self.refuted == self.candidates
    }
}

/// Every assignment of `letters` letters into a carrier of `size`.
fn assignments(size: usize, letters: usize) -> impl Iterator<Item = Vec<u32>> {
    let total = size.pow(letters as u32);
    (0..total).map(move |mut i| {
        (0..letters)
            .map(|_| {
                let d = (i % size) as u32;
                i /= size;
                d
            })
            .collect()
    })
}

/// Runs the refuter against every model of `size` produced by the model
/// search, under every assignment of the image alphabet, on `jobs` threads.
pub fn sweep(ce: Counterexample, refuter: &Refuter, size: usize, jobs: usize) -> Result<SweepReport> {
    sweep_models(&ce.theory(), &ce.image_alphabet(), refuter, size, jobs, &|t| ce.image_member(t))
}

/// [`sweep`] for any presentation, alphabet and membership oracle. Models
/// are buffered in batches, each split into contiguous chunks whose counts
/// are summed, so the report does not depend on `jobs`.
pub fn sweep_models(
    p: &Presentation,
    letters: &[String],
    refuter: &Refuter,
    size: usize,
    jobs: usize,
    membership: &dyn Fn(&Term) -> bool,
) -> Result<SweepReport> {
    const BATCH: usize = 1 << 16;
    let base = table_offsets(p, size);
    let jobs = jobs.max(1);
    let count = |chunk: &[Vec<u32>]| -> (u64, u64) {
        let (mut candidates, mut refuted) = (0, 0);
        for tables in chunk {
            for h0 in assignments(size, letters.len()) {
                candidates += 1;
                if let Some((_, _, vi, vo)) = refuter.refute_raw(size, &base, tables, &h0) {
                    if vi == vo {
                        refuted += 1;
                    }
                }
            }
        }
        (candidates, refuted)
    };
    let mut report = SweepReport {
        size,
        ..Default::default()
    };
    let mut first: Option<Vec<u32>> = None;
    let mut batch: Vec<Vec<u32>> = Vec::new();
    let flush = |batch: &mut Vec<Vec<u32>>, report: &mut SweepReport| {
        let (c, r) = if jobs == 1 || batch.len() < 2 {
            count(batch)
        } else {
            let chunk = batch.len().div_ceil(jobs);
            std::thread::scope(|s| {
                let handles: Vec<_> = batch.chunks(chunk).map(|c| s.spawn(move || count(c))).collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("sweep worker"))
                    .fold((0, 0), |acc, x| (acc.0 + x.0, acc.1 + x.1))
            })
        };
        report.models += batch.len() as u64;
        report.candidates += c;
        report.refuted += r;
        batch.clear();
    };
    for_each_model_tables(p, size, &SearchOptions::default(), &mut |tables| {
        if first.is_none() {
            first = Some(tables.to_vec());
        }
        batch.push(tables.to_vec());
        if batch.len() == BATCH {
            flush(&mut batch, &mut report);
        }
        true
    })?;
    flush(&mut batch, &mut report);
    if let Some(tables) = &first {
        let h0 = vec![0; letters.len()];
        let algebra = crate::finite_algebra::tables_to_algebra(p, size, &base, tables);
        let candidate = candidate(algebra, letters, &h0)?;
        let w = refuter.refute(&candidate)?;
        if !w.revalidate(&candidate, membership)? {
            return Err(RecognitionError::Oracle(format!(
                "witness {} / {} failed to revalidate",
                w.t_in, w.t_out
            )));
        }
        report.first = Some(w);
    }
    Ok(report)
}

fn candidate(algebra: FiniteAlgebra, letters: &[String], h0: &[u32]) -> Result<RecognizedLanguage> {
    let assignment = letters.iter().cloned().zip(h0.iter().copied()).collect();
    RecognizedLanguage::new(algebra, assignment, Default::default())
}

/// Refutes the data-directory algebra itself as a recognizer of the image,
/// under every assignment of the image alphabet; every witness is
/// revalidated.
pub fn refute_own_algebra(ce: Counterexample) -> Result<Vec<RefutationWitness>> {
    let a = ce.algebra();
    let letters = ce.image_alphabet();
    let refuter = ce.refuter(a.size + 1)?;
    let mut out = Vec::new();
    for h0 in assignments(a.size, letters.len()) {
        let cand = candidate(a.clone(), &letters, &h0)?;
        let w = refuter.refute(&cand)?;
        if !w.revalidate(&cand, &|t| ce.image_member(t))? {
            return Err(RecognitionError::Oracle(format!(
                "witness {} / {} failed to revalidate",
                w.t_in, w.t_out
            )));
        }
        out.push(w);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term_engine::BoundedFreeAlgebra;

    #[test]
    fn marked_word_terms_round_trip() {
        let w = MarkedWord::new(
            vec!["a".into(), "b".into(), "a".into()],
            BTreeMap::from([("a".to_string(), 1)]),
        )
        .unwrap();
        assert_eq!(MarkedWord::of_term(&w.to_term()), Some(w));
        assert!(MarkedWord::new(vec!["a".into()], BTreeMap::from([("a".to_string(), 2)])).is_none());
    }

    #[test]
    fn discriminators_split_the_image() {
        for ce in Counterexample::ALL {
            for n in 1..4 {
                for m in n + 1..5 {
                    let (tin, tout) = ce.discriminator(n, m);
                    assert!(ce.image_member(&tin), "{} {tin}", ce.name());
                    assert!(!ce.image_member(&tout), "{} {tout}", ce.name());
                }
            }
        }
    }

    #[test]
    fn nqm_collapse_example() {
        let t = Term::app(
            "p",
            vec![
                letter("a"),
                Term::app("p", vec![letter("d"), letter("d"), letter("d")]),
                Term::app("p", vec![letter("d"), letter("d"), letter("d")]),
            ],
        );
        assert_eq!(nqm_normal_form(&t), Term::app1("s", letter("a")));
        assert!(Counterexample::NotQuiteMalcev.image_member(&t));
    }

    #[test]
    fn source_languages_agree_with_recognizers() {
        for ce in Counterexample::ALL {
            let l = ce.language();
            let alphabet = l.alphabet();
            let letters: Vec<&str> = alphabet.iter().map(|s| s.as_str()).collect();
            let bound = if ce == Counterexample::NotQuiteMalcev { 3 } else { 4 };
            let fa = BoundedFreeAlgebra::build(&ce.theory(), &letters, bound).unwrap();
            for c in fa.classes() {
                for t in fa.members(c) {
                    assert_eq!(l.member(&t).unwrap(), ce.source_member(&t), "{} {t}", ce.name());
                }
            }
        }
    }

    #[test]
    fn balanced_source_classes_are_singletons() {
        for n in 1..5 {
            assert_eq!(balanced_class(&balanced_source(n)).len(), 1);
        }
    }
}

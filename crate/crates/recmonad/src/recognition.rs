//! Recognizable languages: membership, Boolean closure, inverse images,
//! direct images along letter maps, and the pigeonhole refuter.
//!
//! Every direct-image construction returns a candidate recognizer together
//! with a bounded cross-check against [`direct_image_bruteforce`].

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::finite_algebra::{
    compile_term, generate_congruence, product, quotient, AlgebraError, CompiledTerm,
    FiniteAlgebra, OpTable,
};
use crate::monad_props::{Bounds, CheckOutcome, Witness};
use crate::presentation::{LetterMap, Presentation, Term};
use crate::term_engine::{
    flatten, universe_size, BoundedFreeAlgebra, BuildOptions, ClassId, EngineError,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecognitionError {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Presentation(#[from] crate::presentation::PresentationError),
    #[error("alphabets differ: {0:?} vs {1:?}")]
    AlphabetMismatch(Vec<String>, Vec<String>),
    #[error("letter map is not surjective onto {0:?}")]
    NotSurjective(Vec<String>),
    #[error("letter `{0}` is not mapped")]
    Unmapped(String),
    #[error("free algebra over {0:?} is not saturated")]
    NotSaturated(Vec<String>),
    #[error("complex algebra would have {0} table cells")]
    Budget(u128),
    #[error("no collision among {0} family members")]
    NoCollision(usize),
    #[error("fixture bug: {0}")]
    Oracle(String),
    #[error("precondition: {0}")]
    Precondition(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

type Result<T> = std::result::Result<T, RecognitionError>;

/// A language given by a finite algebra, a letter assignment and an
/// accepting subset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecognizedLanguage {
    pub algebra: FiniteAlgebra,
    pub assignment: BTreeMap<String, u32>,
    pub accept: BTreeSet<u32>,
}

impl RecognizedLanguage {
    /// Checks range and that the algebra satisfies its equations.
    pub fn new(
        algebra: FiniteAlgebra,
        assignment: BTreeMap<String, u32>,
        accept: BTreeSet<u32>,
    ) -> Result<Self> {
        for &v in assignment.values().chain(accept.iter()) {
            if v as usize >= algebra.size {
                return Err(AlgebraError::OutOfRange(v).into());
            }
        }
        if let Err(v) = algebra.check_satisfies() {
            return Err(AlgebraError::FailsEquations(Box::new(v)).into());
        }
        Ok(RecognizedLanguage {
            algebra,
            assignment,
            accept,
        })
    }

    pub fn alphabet(&self) -> Vec<String> {
        self.assignment.keys().cloned().collect()
    }

    pub fn value(&self, t: &Term) -> Result<u32> {
        Ok(self.algebra.eval(t, &self.assignment)?)
    }

    pub fn member(&self, t: &Term) -> Result<bool> {
        Ok(self.accept.contains(&self.value(t)?))
    }

    fn assignment_vec(&self) -> Vec<u32> {
        self.assignment.values().copied().collect()
    }
}

pub fn member(l: &RecognizedLanguage, t: &Term) -> Result<bool> {
    l.member(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoolOp {
    Union,
    Intersection,
    Complement,
}

/// Boolean combination through the product algebra; `Complement` ignores
/// the second operand.
pub fn boolean_op(
    kind: BoolOp,
    l1: &RecognizedLanguage,
    l2: Option<&RecognizedLanguage>,
) -> Result<RecognizedLanguage> {
    if kind == BoolOp::Complement {
        let accept = (0..l1.algebra.size as u32)
            .filter(|a| !l1.accept.contains(a))
            .collect();
        return Ok(RecognizedLanguage {
            accept,
            ..l1.clone()
        });
    }
    let l2 = l2.expect("binary operation needs two languages");
    if l1.alphabet() != l2.alphabet() {
        return Err(RecognitionError::AlphabetMismatch(l1.alphabet(), l2.alphabet()));
    }
    let algebra = product(&l1.algebra, &l2.algebra)?;
    let m = l2.algebra.size as u32;
    let assignment = l1
        .assignment
        .iter()
        .map(|(a, &x)| (a.clone(), x * m + l2.assignment[a]))
        .collect();
    let accept = (0..algebra.size as u32)
        .filter(|&v| {
            let (x, y) = (l1.accept.contains(&(v / m)), l2.accept.contains(&(v % m)));
            match kind {
                BoolOp::Union => x || y,
                _ => x && y,
            }
        })
        .collect();
    Ok(RecognizedLanguage {
        algebra,
        assignment,
        accept,
    })
}

/// Inverse image along `f: Σ → Γ`: same algebra and accepting set,
/// assignment `h₀ ∘ f`.
pub fn inverse_image(l: &RecognizedLanguage, f: &LetterMap) -> Result<RecognizedLanguage> {
    let mut assignment = BTreeMap::new();
    for x in &f.source {
        let y = f.apply(x).ok_or_else(|| RecognitionError::Unmapped(x.clone()))?;
        let v = *l
            .assignment
            .get(y)
            .ok_or_else(|| RecognitionError::Unmapped(y.to_string()))?;
        assignment.insert(x.clone(), v);
    }
    Ok(RecognizedLanguage {
        algebra: l.algebra.clone(),
        assignment,
        accept: l.accept.clone(),
    })
}

/// Parses `lang:`, `algebra:`, `assign: a=X b=Y` and `accept: X Y` lines.
/// `load` resolves the algebra file name.
pub fn parse_language(
    text: &str,
    load: &dyn Fn(&str) -> std::result::Result<FiniteAlgebra, String>,
) -> Result<(String, RecognizedLanguage)> {
    let mut name = String::from("anonymous");
    let mut algebra = None;
    let mut assign: Vec<(String, String, usize)> = Vec::new();
    let mut accept: Vec<(String, usize)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let perr = |msg: String| RecognitionError::Parse { line, msg };
        let (key, rest) = content
            .split_once(':')
            .ok_or_else(|| perr(format!("expected `key: value`, got `{content}`")))?;
        let rest = rest.trim();
        match key.trim() {
            "lang" => name = rest.to_string(),
            "algebra" => algebra = Some(load(rest).map_err(perr)?),
            "assign" => {
                for tok in rest.split_whitespace() {
                    let (a, v) = tok
                        .split_once('=')
                        .ok_or_else(|| perr(format!("expected `letter=element`, got `{tok}`")))?;
                    assign.push((a.to_string(), v.to_string(), line));
                }
            }
            "accept" => accept.extend(rest.split_whitespace().map(|t| (t.to_string(), line))),
            other => return Err(perr(format!("unknown key `{other}`"))),
        }
    }
    let algebra = algebra.ok_or(RecognitionError::Parse {
        line: 1,
        msg: "missing `algebra:`".into(),
    })?;
    let lookup = |tok: &str, line: usize| {
        algebra.element(tok).ok_or_else(|| RecognitionError::Parse {
            line,
            msg: format!("unknown element `{tok}`"),
        })
    };
    let mut assignment = BTreeMap::new();
    for (a, v, line) in &assign {
        assignment.insert(a.clone(), lookup(v, *line)?);
    }
    let mut acc = BTreeSet::new();
    for (v, line) in &accept {
        acc.insert(lookup(v, *line)?);
    }
    Ok((name, RecognizedLanguage::new(algebra, assignment, acc)?))
}

/// How a language over Σ is given to the brute-force image computation.
pub enum LanguageSpec<'a> {
    Recognized(&'a RecognizedLanguage),
    /// Class ids of the source free algebra passed alongside.
    ExplicitClasses(BTreeSet<ClassId>),
    /// A class-invariant membership predicate.
    Oracle(&'a str, &'a (dyn Fn(&Term) -> bool + Sync)),
}

impl LanguageSpec<'_> {
    fn contains_class(&self, fs: &BoundedFreeAlgebra, c: ClassId) -> Result<bool> {
        match self {
            LanguageSpec::Recognized(l) => l.member(&fs.representative(c)),
            LanguageSpec::ExplicitClasses(set) => Ok(set.contains(&c)),
            LanguageSpec::Oracle(_, pred) => Ok(pred(&fs.representative(c))),
        }
    }
}

/// Result of a brute-force image computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruteImage {
    /// Classes of the target free algebra hit by some preimage.
    pub classes: BTreeSet<ClassId>,
    /// True when both free algebras are saturated, so the image is exact.
    pub complete: bool,
}

/// Renames every source class in `L` into `fg`. Terms whose renaming falls
/// outside `fg` are dropped unless `fg` is saturated.
pub fn direct_image_bruteforce(
    l: &LanguageSpec,
    f: &LetterMap,
    fs: &BoundedFreeAlgebra,
    fg: &BoundedFreeAlgebra,
) -> Result<BruteImage> {
    let mut classes = BTreeSet::new();
    let renamed = if fg.size_bound() >= fs.size_bound() {
        Some(fs.rename_nodes(f, fg)?)
    } else {
        None
    };
    for c in fs.classes() {
        if !l.contains_class(fs, c)? {
            continue;
        }
        for &n in fs.class_node_ids(c) {
            let target = match &renamed {
                Some(r) => Some(fg.node_class(r[n as usize])),
                None => fg.try_class_of(&crate::term_engine::rename(f, &fs.node_term(n))?),
            };
            if let Some(t) = target {
                classes.insert(t);
            }
        }
    }
    Ok(BruteImage {
        classes,
        complete: fs.saturated() && fg.saturated(),
    })
}

/// Image along a substitution of letters by terms (a Kleisli map), by
/// flattening every source class member.
pub fn direct_image_kleisli_bruteforce(
    l: &LanguageSpec,
    subst: &BTreeMap<String, Term>,
    fs: &BoundedFreeAlgebra,
    fg: &BoundedFreeAlgebra,
) -> Result<BruteImage> {
    let mut classes = BTreeSet::new();
    for c in fs.classes() {
        if !l.contains_class(fs, c)? {
            continue;
        }
        for &n in fs.class_node_ids(c) {
            let t = flatten(&fs.node_term(n), subst)?;
            if let Some(k) = fg.try_class_of(&t) {
                classes.insert(k);
            }
        }
    }
    Ok(BruteImage {
        classes,
        complete: false,
    })
}

/// Bounds for the cross-check of a candidate image recognizer.
#[derive(Clone, Debug)]
pub struct CrossCheck {
    /// Target classes with a member of at most this size are compared.
    pub bound: usize,
    /// Extra size allowed for preimages.
    pub margin: usize,
    /// The margin shrinks until the source universe has at most this many
    /// terms.
    pub max_universe: u128,
    pub build: BuildOptions,
}

impl CrossCheck {
    pub fn new(bound: usize) -> Self {
        CrossCheck {
            bound,
            margin: 2,
            max_universe: 100_000,
            build: BuildOptions::default(),
        }
    }
}

/// A candidate recognizer for a direct image with its cross-check outcome.
#[derive(Clone, Debug)]
pub struct ImageResult {
    pub language: Option<RecognizedLanguage>,
    pub outcome: CheckOutcome,
    /// Set when a construction is backed by a verified theorem hypothesis.
    pub theory_backed: bool,
}

/// Largest margin not above `cc.margin` whose source universe fits both
/// `cc.max_universe` and the node budget.
pub fn effective_margin(p: &Presentation, letters: usize, cc: &CrossCheck) -> usize {
    let cap = cc.max_universe.min(cc.build.max_nodes as u128);
    let mut m = cc.margin;
    while m > 0 && universe_size(p, letters, cc.bound + m) > cap {
        m -= 1;
    }
    m
}

/// Compares candidate membership with brute-force image membership on every
/// target class with a member of size at most `cc.bound`.
pub fn cross_check(
    source: &LanguageSpec,
    f: &LetterMap,
    p: &Presentation,
    candidate: &RecognizedLanguage,
    cc: &CrossCheck,
) -> Result<CheckOutcome> {
    let margin = effective_margin(p, f.source.len(), cc);
    let b = cc.bound + margin;
    let fs = BoundedFreeAlgebra::build_with(p, &f.source, b, &cc.build)?;
    let fg = BoundedFreeAlgebra::build_with(p, &f.target, b, &cc.build)?;
    let image = direct_image_bruteforce(source, f, &fs, &fg)?;
    let mut bounds = Bounds::new();
    bounds.insert("bound".into(), cc.bound);
    bounds.insert("margin".into(), margin);
    let mut checked = 0usize;
    for c in fg.classes() {
        if fg.representative_size(c) > cc.bound {
            continue;
        }
        checked += 1;
        let rep = fg.representative(c);
        let cand = candidate.member(&rep)?;
        let brute = image.classes.contains(&c);
        if cand != brute {
            let side = if brute {
                "in the brute-force image but rejected by the candidate"
            } else {
                "accepted by the candidate but without a preimage within the bound"
            };
            return Ok(CheckOutcome::Refuted(Witness {
                summary: format!("{rep} is {side}"),
                terms: vec![("term".into(), rep)],
                evidence: vec![format!("bound {} margin {}", cc.bound, margin)],
            }));
        }
    }
    bounds.insert("classes".into(), checked);
    Ok(CheckOutcome::Verified(bounds))
}

fn require_surjective(f: &LetterMap) -> Result<()> {
    if f.surjective {
        Ok(())
    } else {
        Err(RecognitionError::NotSurjective(f.target.clone()))
    }
}

/// Subset `mask` (bit i = element i) as an index into the complex algebra.
fn mask_index(mask: u64) -> u32 {
    (mask - 1) as u32
}

/// The algebra of nonempty subsets, each operation applied over all choices.
pub fn complex_algebra(a: &FiniteAlgebra) -> Result<FiniteAlgebra> {
    let n = a.size;
    if n > 20 {
        return Err(RecognitionError::Budget(1u128 << n));
    }
    let m = (1usize << n) - 1;
    let cells: u128 = a
        .ops
        .iter()
        .map(|op| (m as u128).saturating_pow(op.arity as u32))
        .sum();
    if cells > 1 << 24 {
        return Err(RecognitionError::Budget(cells));
    }
    let mut ops = Vec::new();
    for (oi, op) in a.ops.iter().enumerate() {
        let k = op.arity;
        let total = m.pow(k as u32);
        let mut table = Vec::with_capacity(total);
        let mut args = vec![0u32; k];
        for code in 0..total {
            let mut c = code;
            let mut masks = vec![0u64; k];
            for slot in masks.iter_mut().rev() {
                *slot = (c % m) as u64 + 1;
                c /= m;
            }
            let mut out = 0u64;
            choose_all(&masks, 0, &mut args, &mut |args| {
                out |= 1 << a.apply(oi, args);
            });
            table.push(mask_index(out));
        }
        ops.push(OpTable {
            name: op.name.clone(),
            arity: k,
            table,
        });
    }
    let names = (1..=m as u64)
        .map(|mask| {
            let parts: Vec<String> = (0..n as u32)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| a.name(i))
                .collect();
            format!("{{{}}}", parts.join("|"))
        })
        .collect();
    Ok(FiniteAlgebra::from_parts(a.presentation.clone(), m, ops, Some(names)))
}

fn choose_all(masks: &[u64], pos: usize, args: &mut [u32], k: &mut dyn FnMut(&[u32])) {
    if pos == masks.len() {
        k(args);
        return;
    }
    let mut rest = masks[pos];
    while rest != 0 {
        let i = rest.trailing_zeros();
        rest &= rest - 1;
        args[pos] = i;
        choose_all(masks, pos + 1, args, k);
    }
}

/// Direct image through the complex algebra of nonempty subsets, with
/// `k₀(γ) = {h₀(x) : f(x) = γ}` and acceptance `D ∩ S ≠ ∅`.
pub fn direct_image_powerset(
    l: &RecognizedLanguage,
    f: &LetterMap,
    cc: &CrossCheck,
) -> Result<ImageResult> {
    require_surjective(f)?;
    let pa = complex_algebra(&l.algebra)?;
    if let Err(v) = pa.check_satisfies() {
        let eq = &l.algebra.presentation.equations[v.equation];
        return Ok(ImageResult {
            language: None,
            outcome: CheckOutcome::Refuted(Witness {
                summary: format!("complex algebra fails {eq}"),
                terms: vec![
                    ("lhs".into(), eq.lhs.clone()),
                    ("rhs".into(), eq.rhs.clone()),
                ],
                evidence: vec![
                    format!(
                        "assignment {}",
                        v.assignment
                            .iter()
                            .map(|(x, &s)| format!("?{x}={}", pa.name(s)))
                            .collect::<Vec<_>>()
                            .join(" ")
                    ),
                    format!("lhs = {}, rhs = {}", pa.name(v.lhs), pa.name(v.rhs)),
                ],
            }),
            theory_backed: false,
        });
    }
    let mut assignment = BTreeMap::new();
    for g in &f.target {
        let mut mask = 0u64;
        for x in f.preimage(g) {
            let v = *l
                .assignment
                .get(x)
                .ok_or_else(|| RecognitionError::Unmapped(x.to_string()))?;
            mask |= 1 << v;
        }
        assignment.insert(g.clone(), mask_index(mask));
    }
    let smask: u64 = l.accept.iter().fold(0, |acc, &s| acc | 1 << s);
    let accept = (1..=pa.size as u64)
        .filter(|&d| d & smask != 0)
        .map(mask_index)
        .collect();
    let cand = RecognizedLanguage {
        algebra: pa,
        assignment,
        accept,
    };
    let outcome = cross_check(
        &LanguageSpec::Recognized(l),
        f,
        &l.algebra.presentation,
        &cand,
        cc,
    )?;
    Ok(ImageResult {
        language: Some(cand),
        outcome,
        theory_backed: false,
    })
}

/// Direct image through the quotient of the generated subalgebra by the
/// congruence generated from letters with equal image.
pub fn direct_image_malcev(
    l: &RecognizedLanguage,
    f: &LetterMap,
    malcev_term: Option<&Term>,
    cc: &CrossCheck,
) -> Result<ImageResult> {
    require_surjective(f)?;
    let gens = l.assignment_vec();
    let (sub, embed) = l.algebra.subalgebra(&gens);
    let local = |v: u32| embed.iter().position(|&e| e == v).unwrap() as u32;
    let mut pairs = Vec::new();
    for g in &f.target {
        let pre = f.preimage(g);
        for w in pre.windows(2) {
            pairs.push((local(l.assignment[w[0]]), local(l.assignment[w[1]])));
        }
    }
    let theta = generate_congruence(&sub, &pairs)?;
    let (quo, proj) = quotient(&sub, &theta)?;
    let mut assignment = BTreeMap::new();
    for g in &f.target {
        let x = f.preimage(g)[0];
        assignment.insert(g.clone(), proj[local(l.assignment[x]) as usize]);
    }
    let accept = embed
        .iter()
        .enumerate()
        .filter(|(_, e)| l.accept.contains(e))
        .map(|(i, _)| proj[i])
        .collect();
    let cand = RecognizedLanguage::new(quo, assignment, accept)?;
    let outcome = cross_check(
        &LanguageSpec::Recognized(l),
        f,
        &l.algebra.presentation,
        &cand,
        cc,
    )?;
    Ok(ImageResult {
        language: Some(cand),
        outcome,
        theory_backed: malcev_term.is_some(),
    })
}

/// Direct image for a locally finite theory: the target free algebra itself
/// recognizes the exact image.
pub fn direct_image_locally_finite(
    l: &LanguageSpec,
    f: &LetterMap,
    fs: &BoundedFreeAlgebra,
    fg: &BoundedFreeAlgebra,
) -> Result<RecognizedLanguage> {
    for fa in [fs, fg] {
        if !fa.saturated() {
            return Err(RecognitionError::NotSaturated(fa.alphabet().to_vec()));
        }
    }
    let image = direct_image_bruteforce(l, f, fs, fg)?;
    let algebra = fg.class_algebra().expect("saturated");
    let assignment = fg
        .alphabet()
        .iter()
        .map(|a| (a.clone(), fg.letter_class(a).unwrap()))
        .collect();
    RecognizedLanguage::new(algebra, assignment, image.classes)
}

/// A pigeonhole refutation: two family members collide in the candidate,
/// and the discriminating context separates them in the true language.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RefutationWitness {
    pub n: usize,
    pub m: usize,
    pub family_n: Term,
    pub family_m: Term,
    pub t_in: Term,
    pub t_out: Term,
    pub value_in: u32,
    pub value_out: u32,
}

impl RefutationWitness {
    /// Re-evaluates both terms and re-runs the membership oracle.
    pub fn revalidate(
        &self,
        candidate: &RecognizedLanguage,
        membership: &dyn Fn(&Term) -> bool,
    ) -> Result<bool> {
        let (vi, vo) = (candidate.value(&self.t_in)?, candidate.value(&self.t_out)?);
        Ok(vi == vo
            && vi == self.value_in
            && vo == self.value_out
            && candidate.value(&self.family_n)? == candidate.value(&self.family_m)?
            && membership(&self.t_in)
            && !membership(&self.t_out))
    }
}

/// Precompiled family and discriminating terms, reusable across many
/// candidate algebras of one presentation.
pub struct Refuter {
    alphabet: Vec<Term>,
    family: Vec<Term>,
    family_code: Vec<CompiledTerm>,
    pairs: HashMap<(usize, usize), (Term, Term, CompiledTerm, CompiledTerm)>,
}

impl Refuter {
    /// Prepares indices `1..=max_index`; every discriminating pair is
    /// checked against the oracle once.
    pub fn new(
        p: &Presentation,
        alphabet: &[String],
        max_index: usize,
        family: &dyn Fn(usize) -> Term,
        discriminator: &dyn Fn(usize, usize) -> (Term, Term),
        membership: &dyn Fn(&Term) -> bool,
    ) -> Result<Self> {
        let slots: Vec<Term> = alphabet.iter().map(|a| Term::letter(a)).collect();
        let fam: Vec<Term> = (1..=max_index).map(family).collect();
        let family_code = fam
            .iter()
            .map(|t| compile_term(p, t, &slots))
            .collect::<std::result::Result<_, _>>()?;
        let mut pairs = HashMap::new();
        for n in 1..=max_index {
            for m in n + 1..=max_index {
                let (tin, tout) = discriminator(n, m);
                if !membership(&tin) {
                    return Err(RecognitionError::Oracle(format!("{tin} is not in the language")));
                }
                if membership(&tout) {
                    return Err(RecognitionError::Oracle(format!("{tout} is in the language")));
                }
                let ci = compile_term(p, &tin, &slots)?;
                let co = compile_term(p, &tout, &slots)?;
                pairs.insert((n, m), (tin, tout, ci, co));
            }
        }
        Ok(Refuter {
            alphabet: slots,
            family: fam,
            family_code,
            pairs,
        })
    }

    pub fn max_index(&self) -> usize {
        self.family.len()
    }

    /// Finds the first colliding pair in an algebra given by raw tables;
    /// returns `(n, m, value_in, value_out)`.
    pub fn refute_raw(
        &self,
        size: usize,
        base: &[usize],
        tables: &[u32],
        h0: &[u32],
    ) -> Option<(usize, usize, u32, u32)> {
        let limit = (size + 1).min(self.family.len());
        let mut seen: Vec<u32> = Vec::with_capacity(limit);
        for code in self.family_code.iter().take(limit) {
            let v = code.eval_raw(size, base, tables, h0);
            if let Some(i) = seen.iter().position(|&s| s == v) {
                let (n, m) = (i + 1, seen.len() + 1);
                let (_, _, ci, co) = &self.pairs[&(n, m)];
                return Some((
                    n,
                    m,
                    ci.eval_raw(size, base, tables, h0),
                    co.eval_raw(size, base, tables, h0),
                ));
            }
            seen.push(v);
        }
        None
    }

    pub fn refute(&self, candidate: &RecognizedLanguage) -> Result<RefutationWitness> {
        let a = &candidate.algebra;
        let mut base = Vec::new();
        let mut tables = Vec::new();
        for op in &a.ops {
            base.push(tables.len());
            tables.extend_from_slice(&op.table);
        }
        let h0: Vec<u32> = self
            .alphabet
            .iter()
            .map(|t| match t {
                Term::Letter(x) => candidate
                    .assignment
                    .get(x)
                    .copied()
                    .ok_or_else(|| RecognitionError::Unmapped(x.clone())),
                _ => unreachable!(),
            })
            .collect::<Result<_>>()?;
        let (n, m, vi, vo) = self
            .refute_raw(a.size, &base, &tables, &h0)
            .ok_or(RecognitionError::NoCollision(self.family.len().min(a.size + 1)))?;
        let (tin, tout, _, _) = &self.pairs[&(n, m)];
        Ok(RefutationWitness {
            n,
            m,
            family_n: self.family[n - 1].clone(),
            family_m: self.family[m - 1].clone(),
            t_in: tin.clone(),
            t_out: tout.clone(),
            value_in: vi,
            value_out: vo,
        })
    }
}

/// Defeats a candidate recognizer by pigeonhole over `family(1..=size+1)`.
pub fn refute_recognizability(
    candidate: &RecognizedLanguage,
    family: &dyn Fn(usize) -> Term,
    discriminator: &dyn Fn(usize, usize) -> (Term, Term),
    membership: &dyn Fn(&Term) -> bool,
) -> Result<RefutationWitness> {
    let r = Refuter::new(
        &candidate.algebra.presentation,
        &candidate.alphabet(),
        candidate.algebra.size + 1,
        family,
        discriminator,
        membership,
    )?;
    r.refute(candidate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::parse_presentation;

    fn monoid() -> Presentation {
        parse_presentation(
            "name: monoid\nops: dot/2, e/0\neq: (dot (dot ?x ?y) ?z) = (dot ?x (dot ?y ?z))\neq: (dot e ?x) = ?x\neq: (dot ?x e) = ?x",
        )
        .unwrap()
    }

    /// Z₂ counting the letters listed in `counted`.
    fn parity(counted: &[&str], alphabet: &[&str]) -> RecognizedLanguage {
        let a = FiniteAlgebra::new(
            monoid(),
            2,
            vec![
                OpTable { name: "dot".into(), arity: 2, table: vec![0, 1, 1, 0] },
                OpTable { name: "e".into(), arity: 0, table: vec![0] },
            ],
            None,
        )
        .unwrap();
        let assignment = alphabet
            .iter()
            .map(|x| (x.to_string(), counted.contains(x) as u32))
            .collect();
        RecognizedLanguage::new(a, assignment, [0].into()).unwrap()
    }

    fn word(w: &str) -> Term {
        let mut it = w.chars().rev().map(|c| Term::letter(&c.to_string()));
        let mut t = it.next().unwrap_or(Term::constant("e"));
        for l in it {
            t = Term::app2("dot", l, t);
        }
        t
    }

    fn words(alphabet: &[&str], max: usize) -> Vec<String> {
        let mut out = vec![String::new()];
        let mut layer = vec![String::new()];
        for _ in 0..max {
            layer = layer
                .iter()
                .flat_map(|w| alphabet.iter().map(move |a| format!("{w}{a}")))
                .collect();
            out.extend(layer.iter().cloned());
        }
        out
    }

    #[test]
    fn even_a_and_even_b_by_product() {
        let ea = parity(&["a"], &["a", "b"]);
        let eb = parity(&["b"], &["a", "b"]);
        let both = boolean_op(BoolOp::Intersection, &ea, Some(&eb)).unwrap();
        let either = boolean_op(BoolOp::Union, &ea, Some(&eb)).unwrap();
        let not_a = boolean_op(BoolOp::Complement, &ea, None).unwrap();
        for w in words(&["a", "b"], 6) {
            let (na, nb) = (w.matches('a').count(), w.matches('b').count());
            let t = word(&w);
            assert_eq!(both.member(&t).unwrap(), na % 2 == 0 && nb % 2 == 0, "{w}");
            assert_eq!(either.member(&t).unwrap(), na % 2 == 0 || nb % 2 == 0, "{w}");
            assert_eq!(not_a.member(&t).unwrap(), na % 2 == 1, "{w}");
        }
    }

    #[test]
    fn inverse_image_of_even_length() {
        let even_c = parity(&["c"], &["c"]);
        let f = LetterMap::parse("a->c,b->c", None).unwrap();
        let l = inverse_image(&even_c, &f).unwrap();
        for w in words(&["a", "b"], 6) {
            assert_eq!(l.member(&word(&w)).unwrap(), w.len() % 2 == 0);
        }
    }

    #[test]
    fn complex_algebra_of_z2_fails_inverse_law() {
        let g = parse_presentation(
            "ops: dot/2, inv/1, e/0\neq: (dot ?x (inv ?x)) = e",
        )
        .unwrap();
        let z2 = FiniteAlgebra::new(
            g,
            2,
            vec![
                OpTable { name: "dot".into(), arity: 2, table: vec![0, 1, 1, 0] },
                OpTable { name: "inv".into(), arity: 1, table: vec![0, 1] },
                OpTable { name: "e".into(), arity: 0, table: vec![0] },
            ],
            None,
        )
        .unwrap();
        let pa = complex_algebra(&z2).unwrap();
        assert_eq!(pa.size, 3);
        let v = pa.check_satisfies().unwrap_err();
        assert_eq!(pa.name(v.assignment["x"]), "{0|1}");
    }

    #[test]
    fn pigeonhole_on_counting() {
        // Z₂ parity cannot recognize {aⁿbⁿ}: a¹ and a³ collide.
        let cand = parity(&["a"], &["a", "b"]);
        let pow = |x: &str, n: usize| x.repeat(n);
        let family = |n: usize| word(&pow("a", n));
        let disc = |n: usize, m: usize| {
            (word(&(pow("a", n) + &pow("b", n))), word(&(pow("a", m) + &pow("b", n))))
        };
        let member = |t: &Term| {
            let s: String = t.leaves().iter().map(|l| l.to_string()).collect();
            let na = s.matches('a').count();
            s == pow("a", na) + &pow("b", s.len() - na) && 2 * na == s.len()
        };
        let w = refute_recognizability(&cand, &family, &disc, &member).unwrap();
        assert_eq!((w.n, w.m), (1, 3));
        assert!(w.revalidate(&cand, &member).unwrap());
    }
}

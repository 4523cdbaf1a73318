//! Bounded checkers for weak pullback preservation, weak (epi-)cartesianness
//! of unit and multiplication, the Jacobs law and the distributive-law
//! axioms over nonempty powerset, Mal'cev-term search and local finiteness.
//!
//! Every checker returns [`CheckOutcome`]; `Refuted` is only produced when
//! the search space is exhausted and the separation is definitive.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::finite_algebra::{for_each_model, AlgebraError, FiniteAlgebra, SearchOptions};
use crate::presentation::{LetterMap, Presentation, PresentationError, Term};
use crate::term_engine::{
    flatten, rename, universe_size, BoundedFreeAlgebra, BuildOptions, ClassId, EngineError,
    NodeId, Shallow,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PropsError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Presentation(#[from] PresentationError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error("letter map is not surjective onto {0:?}")]
    NotSurjective(Vec<String>),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, PropsError>;

/// Named bound parameters and sweep counts.
pub type Bounds = BTreeMap<String, usize>;

/// Terms and facts instantiating a failure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub summary: String,
    pub terms: Vec<(String, Term)>,
    pub evidence: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckOutcome {
    Verified(Bounds),
    Refuted(Witness),
    Unknown(Bounds),
}

impl CheckOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            CheckOutcome::Verified(_) => "verified",
            CheckOutcome::Refuted(_) => "refuted",
            CheckOutcome::Unknown(_) => "unknown",
        }
    }

    pub fn is_verified(&self) -> bool {
        matches!(self, CheckOutcome::Verified(_))
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, CheckOutcome::Refuted(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            CheckOutcome::Refuted(w) => Some(w),
            _ => None,
        }
    }

    pub fn term(&self, key: &str) -> Option<&Term> {
        self.witness()?
            .terms
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, t)| t)
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckOutcome::Verified(b) | CheckOutcome::Unknown(b) => {
                let parts: Vec<String> = b.iter().map(|(k, v)| format!("{k}={v}")).collect();
                write!(f, "{} ({})", self.label(), parts.join(" "))
            }
            CheckOutcome::Refuted(w) => write!(f, "refuted: {}", w.summary),
        }
    }
}

fn letters(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            if i < 26 {
                ((b'a' + i as u8) as char).to_string()
            } else {
                format!("g{i}")
            }
        })
        .collect()
}

fn build(p: &Presentation, alphabet: &[String], bound: usize) -> Result<BoundedFreeAlgebra> {
    Ok(BoundedFreeAlgebra::build_with(
        p,
        alphabet,
        bound,
        &BuildOptions::default(),
    )?)
}

/// Largest bound `≤ want` whose universe fits the node budget.
fn fitting_bound(p: &Presentation, letters: usize, want: usize) -> usize {
    let budget = BuildOptions::default().max_nodes as u128;
    let mut b = want;
    while b > 1 && universe_size(p, letters, b) > budget {
        b -= 1;
    }
    b
}

/// Small models of a presentation, used to separate terms definitively.
pub struct ModelSeparator {
    models: Vec<FiniteAlgebra>,
}

impl ModelSeparator {
    /// Collects up to `per_size` models of each size in `2..=max_size`.
    pub fn new(p: &Presentation, max_size: usize, per_size: usize) -> Self {
        let mut models = Vec::new();
        let opts = SearchOptions {
            symmetry: true,
            budget: 2_000_000,
        };
        for n in 2..=max_size {
            let mut taken = 0;
            let _ = for_each_model(p, n, &opts, &mut |a| {
                models.push(a);
                taken += 1;
                taken < per_size
            });
        }
        ModelSeparator { models }
    }

    /// A model and letter assignment giving `t` and `s` different values.
    pub fn separate(&self, t: &Term, s: &Term) -> Option<String> {
        let mut ls: BTreeSet<String> = t.letters();
        ls.extend(s.letters());
        let ls: Vec<String> = ls.into_iter().collect();
        for (mi, a) in self.models.iter().enumerate() {
            let n = a.size;
            let total = (n as u64).checked_pow(ls.len() as u32).unwrap_or(u64::MAX);
            if total > 1 << 14 {
                continue;
            }
            for code in 0..total {
                let mut c = code;
                let mut h0 = BTreeMap::new();
                for l in &ls {
                    h0.insert(l.clone(), (c % n as u64) as u32);
                    c /= n as u64;
                }
                let (Ok(vt), Ok(vs)) = (a.eval(t, &h0), a.eval(s, &h0)) else {
                    continue;
                };
                if vt != vs {
                    let asg: Vec<String> = h0.iter().map(|(k, v)| format!("{k}={v}")).collect();
                    return Some(format!(
                        "model #{mi} of size {n} with {} gives {vt} vs {vs}",
                        asg.join(" ")
                    ));
                }
            }
        }
        None
    }
}

/// Definitive inequality of two classes: by closure or saturation, else by
/// a separating model.
fn definitely_different(
    fa: &BoundedFreeAlgebra,
    c1: ClassId,
    c2: ClassId,
    sep: &ModelSeparator,
) -> Option<String> {
    if c1 == c2 {
        return None;
    }
    if fa.compare_classes(c1, c2).is_definitely_different() {
        return Some(format!(
            "{} and {} are distinct classes in the free algebra (closed or saturated)",
            fa.representative(c1),
            fa.representative(c2)
        ));
    }
    sep.separate(&fa.representative(c1), &fa.representative(c2))
        .map(|m| format!("{} vs {}: {m}", fa.representative(c1), fa.representative(c2)))
}

/// A span `X → Z ← Y` with its pullback `P = {(x,y) | f(x) = g(y)}`, whose
/// letters are named `x.y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanInstance {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub z: Vec<String>,
    pub f: LetterMap,
    pub g: LetterMap,
    pub pullback: Vec<String>,
    pub pi1: LetterMap,
    pub pi2: LetterMap,
    /// Pairs `(t, r)` over X and Y checked before the sweep.
    pub probes: Vec<(String, String)>,
}

impl SpanInstance {
    pub fn new(x: &[String], y: &[String], z: &[String], f: LetterMap, g: LetterMap) -> Result<Self> {
        let mut pullback = Vec::new();
        let (mut m1, mut m2) = (BTreeMap::new(), BTreeMap::new());
        for a in x {
            for b in y {
                if f.apply(a) == g.apply(b) {
                    let name = format!("{a}.{b}");
                    m1.insert(name.clone(), a.clone());
                    m2.insert(name.clone(), b.clone());
                    pullback.push(name);
                }
            }
        }
        let pi1 = LetterMap::from_parts(pullback.clone(), x.to_vec(), m1)?;
        let pi2 = LetterMap::from_parts(pullback.clone(), y.to_vec(), m2)?;
        Ok(SpanInstance {
            x: x.to_vec(),
            y: y.to_vec(),
            z: z.to_vec(),
            f,
            g,
            pullback,
            pi1,
            pi2,
            probes: Vec::new(),
        })
    }

    /// Parses `X:`, `Y:`, `Z:`, `f:`, `g:` and optional `probe: t | r` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut fields: BTreeMap<&str, (String, usize)> = BTreeMap::new();
        let mut probes = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let perr = |msg: String| PropsError::Parse { line, msg };
            let (key, rest) = content
                .split_once(':')
                .ok_or_else(|| perr(format!("expected `key: value`, got `{content}`")))?;
            let key = key.trim();
            match key {
                "X" | "Y" | "Z" | "f" | "g" => {
                    fields.insert(
                        ["X", "Y", "Z", "f", "g"].into_iter().find(|k| *k == key).unwrap(),
                        (rest.trim().to_string(), line),
                    );
                }
                "probe" => {
                    let (t, r) = rest
                        .split_once('|')
                        .ok_or_else(|| perr("expected `probe: t | r`".into()))?;
                    probes.push((t.trim().to_string(), r.trim().to_string()));
                }
                other => return Err(perr(format!("unknown key `{other}`"))),
            }
        }
        let get = |k: &str| -> Result<(String, usize)> {
            fields.get(k).cloned().ok_or(PropsError::Parse {
                line: 1,
                msg: format!("missing `{k}:`"),
            })
        };
        let set = |k: &str| -> Result<Vec<String>> {
            Ok(get(k)?.0.split_whitespace().map(String::from).collect())
        };
        let (x, y, z) = (set("X")?, set("Y")?, set("Z")?);
        let map = |k: &str, src: &[String]| -> Result<LetterMap> {
            let (text, line) = get(k)?;
            let m = LetterMap::parse(&text, Some(&z)).map_err(|e| PropsError::Parse {
                line,
                msg: e.to_string(),
            })?;
            if m.source != src {
                return Err(PropsError::Parse {
                    line,
                    msg: format!("`{k}` must be defined on exactly {src:?}"),
                });
            }
            Ok(m)
        };
        let f = map("f", &sorted(&x))?;
        let g = map("g", &sorted(&y))?;
        let mut span = SpanInstance::new(&x, &y, &z, f, g)?;
        span.probes = probes;
        Ok(span)
    }
}

fn sorted(v: &[String]) -> Vec<String> {
    let mut v = v.to_vec();
    v.sort();
    v
}

/// For each node of `from`, its class in `to` after renaming along `m`, or
/// `None` when the renamed term leaves the universe of `to`.
fn rename_classes(
    from: &BoundedFreeAlgebra,
    m: &LetterMap,
    to: &BoundedFreeAlgebra,
) -> Result<Vec<Option<ClassId>>> {
    if to.size_bound() >= from.size_bound() {
        let ids = from.rename_nodes(m, to)?;
        return Ok(ids.into_iter().map(|n| Some(to.node_class(n))).collect());
    }
    let mut out = Vec::with_capacity(from.num_nodes());
    for n in 0..from.num_nodes() as NodeId {
        out.push(to.try_class_of(&rename(m, &from.node_term(n))?));
    }
    Ok(out)
}

/// Bounded check that `T` maps the span's pullback to a weak pullback.
///
/// Pairs `(t, r)` with `Tf(t) = Tg(r)` proved are swept over classes with a
/// representative of size at most `term_bound`; a witness is a term over P
/// of size at most `witness_bound`, found by zipping members of equal shape.
pub fn check_weak_pullback_preservation(
    p: &Presentation,
    span: &SpanInstance,
    term_bound: usize,
    witness_bound: usize,
) -> Result<CheckOutcome> {
    if term_bound == 0 || witness_bound == 0 {
        return Err(PropsError::Invalid("bounds must be at least 1".into()));
    }
    let b = term_bound.max(witness_bound);
    let fx = build(p, &span.x, b)?;
    let fy = build(p, &span.y, b)?;
    let fz = build(p, &span.z, b)?;
    let sep = ModelSeparator::new(p, 3, 64);
    let zx = rename_classes(&fx, &span.f, &fz)?;
    let zy = rename_classes(&fy, &span.g, &fz)?;
    let ctx = WpbContext {
        p,
        span,
        fx: &fx,
        fy: &fy,
        witness_bound,
        sep: &sep,
        pullback: std::cell::OnceCell::new(),
    };
    let mut bounds = Bounds::new();
    bounds.insert("term_bound".into(), term_bound);
    bounds.insert("witness_bound".into(), witness_bound);

    for (ts, rs) in &span.probes {
        let t = p.parse_term(ts)?;
        let r = p.parse_term(rs)?;
        let (ct, cr) = (fx.class_of(&t)?, fy.class_of(&r)?);
        let (zt, zr) = (fz.class_of(&rename(&span.f, &t)?)?, fz.class_of(&rename(&span.g, &r)?)?);
        if zt != zr {
            return Err(PropsError::Invalid(format!(
                "probe {t} | {r} is not compatible: images differ"
            )));
        }
        match ctx.pair(ct, cr)? {
            PairResult::Witness => {}
            PairResult::Refuted(ev) => return Ok(ctx.refuted(&t, &r, ev)),
            PairResult::Open => {
                bounds.insert("open_probes".into(), 1);
                return Ok(CheckOutcome::Unknown(bounds));
            }
        }
    }

    let mut by_z: BTreeMap<ClassId, Vec<ClassId>> = BTreeMap::new();
    for cy in fy.classes() {
        if fy.representative_size(cy) <= term_bound {
            if let Some(z) = zy[fy.class_root(cy) as usize] {
                by_z.entry(z).or_default().push(cy);
            }
        }
    }
    let mut pairs = 0usize;
    let mut open = 0usize;
    let mut first_refuted = None;
    for cx in fx.classes() {
        if fx.representative_size(cx) > term_bound {
            continue;
        }
        let Some(z) = zx[fx.class_root(cx) as usize] else {
            continue;
        };
        for &cy in by_z.get(&z).map(Vec::as_slice).unwrap_or(&[]) {
            pairs += 1;
            match ctx.pair(cx, cy)? {
                PairResult::Witness => {}
                PairResult::Refuted(ev) => {
                    if first_refuted.is_none() {
                        first_refuted = Some((cx, cy, ev));
                    }
                }
                PairResult::Open => open += 1,
            }
        }
    }
    if let Some((cx, cy, ev)) = first_refuted {
        return Ok(ctx.refuted(&fx.representative(cx), &fy.representative(cy), ev));
    }
    bounds.insert("pairs".into(), pairs);
    if open > 0 {
        bounds.insert("open_pairs".into(), open);
        return Ok(CheckOutcome::Unknown(bounds));
    }
    Ok(CheckOutcome::Verified(bounds))
}

enum PairResult {
    Witness,
    Refuted(Vec<String>),
    Open,
}

struct WpbContext<'a> {
    p: &'a Presentation,
    span: &'a SpanInstance,
    fx: &'a BoundedFreeAlgebra,
    fy: &'a BoundedFreeAlgebra,
    witness_bound: usize,
    sep: &'a ModelSeparator,
    /// The free algebra over the pullback, when some small bound saturates.
    pullback: std::cell::OnceCell<Option<BoundedFreeAlgebra>>,
}

impl WpbContext<'_> {
    fn refuted(&self, t: &Term, r: &Term, evidence: Vec<String>) -> CheckOutcome {
        CheckOutcome::Refuted(Witness {
            summary: format!(
                "no term over the pullback projects to t = {t} and r = {r}"
            ),
            terms: vec![("t".into(), t.clone()), ("r".into(), r.clone())],
            evidence,
        })
    }

    /// Terms over `other` with the shape of `t` whose letters lie over the
    /// same point of Z.
    fn partners(&self, t: &Term, pre: &dyn Fn(&str) -> Vec<String>, k: &mut dyn FnMut(Term) -> bool) {
        fn go(
            t: &Term,
            pre: &dyn Fn(&str) -> Vec<String>,
            k: &mut dyn FnMut(Term) -> bool,
        ) -> bool {
            match t {
                Term::Letter(a) => {
                    for b in pre(a) {
                        if !k(Term::letter(&b)) {
                            return false;
                        }
                    }
                    true
                }
                Term::App(op, kids) => {
                    let mut choices: Vec<Vec<Term>> = Vec::new();
                    for kid in kids {
                        let mut v = Vec::new();
                        go(kid, pre, &mut |s| {
                            v.push(s);
                            true
                        });
                        choices.push(v);
                    }
                    let mut idx = vec![0usize; kids.len()];
                    if choices.iter().any(Vec::is_empty) {
                        return true;
                    }
                    loop {
                        let term = Term::App(
                            op.clone(),
                            idx.iter().zip(&choices).map(|(&i, c)| c[i].clone()).collect(),
                        );
                        if !k(term) {
                            return false;
                        }
                        let mut pos = kids.len();
                        loop {
                            if pos == 0 {
                                return true;
                            }
                            pos -= 1;
                            idx[pos] += 1;
                            if idx[pos] < choices[pos].len() {
                                break;
                            }
                            idx[pos] = 0;
                        }
                    }
                }
                Term::Var(_) => true,
            }
        }
        go(t, pre, k);
    }

    fn y_over(&self, a: &str) -> Vec<String> {
        let z = self.span.f.apply(a).unwrap_or_default();
        self.span.g.preimage(z).into_iter().map(String::from).collect()
    }

    fn x_over(&self, b: &str) -> Vec<String> {
        let z = self.span.g.apply(b).unwrap_or_default();
        self.span.f.preimage(z).into_iter().map(String::from).collect()
    }

    fn pair(&self, cx: ClassId, cy: ClassId) -> Result<PairResult> {
        let (fx, fy) = (self.fx, self.fy);
        // a witness exists iff some member of [t] and some member of [r]
        // have equal shape and compatible letters
        for &n in fx.class_node_ids(cx) {
            if fx.node_size(n) > self.witness_bound {
                continue;
            }
            let t = fx.node_term(n);
            let mut found = false;
            self.partners(&t, &|a| self.y_over(a), &mut |r| {
                if fy.try_class_of(&r) == Some(cy) {
                    found = true;
                }
                !found
            });
            if found {
                return Ok(PairResult::Witness);
            }
        }
        // exhaustive when one class is closed: every candidate partner of a
        // member of that class must be definitively outside the other class
        let sides: [(bool, &BoundedFreeAlgebra, ClassId, &BoundedFreeAlgebra, ClassId); 2] = [
            (true, fx, cx, fy, cy),
            (false, fy, cy, fx, cx),
        ];
        for (from_x, fa, c, fb, d) in sides {
            if !fa.is_closed(c) {
                continue;
            }
            let mut evidence = vec![format!(
                "class of {} is closed with {} members",
                fa.representative(c),
                fa.class_size(c)
            )];
            let mut ok = true;
            for t in fa.members(c) {
                let pre = |a: &str| {
                    if from_x {
                        self.y_over(a)
                    } else {
                        self.x_over(a)
                    }
                };
                self.partners(&t, &pre, &mut |r| {
                    let Some(cr) = fb.try_class_of(&r) else {
                        ok = false;
                        return false;
                    };
                    match definitely_different(fb, cr, d, self.sep) {
                        Some(ev) => {
                            evidence.push(ev);
                            true
                        }
                        None => {
                            ok = false;
                            false
                        }
                    }
                });
                if !ok {
                    break;
                }
            }
            if ok {
                return Ok(PairResult::Refuted(evidence));
            }
        }
        // exhaustive when the free algebra over P is finite: every class over
        // P projects away from (t, r)
        if let Some(ev) = self.pullback_saturated(cx, cy)? {
            return Ok(PairResult::Refuted(ev));
        }
        Ok(PairResult::Open)
    }

    fn pullback_saturated(&self, cx: ClassId, cy: ClassId) -> Result<Option<Vec<String>>> {
        if self.pullback.get().is_none() {
            let k = self.span.pullback.len();
            let mut found = None;
            for b in self.witness_bound..self.witness_bound + 4 {
                if universe_size(self.p, k, b) > 200_000 {
                    break;
                }
                let f = build(self.p, &self.span.pullback, b)?;
                if f.saturated() {
                    found = Some(f);
                    break;
                }
            }
            let _ = self.pullback.set(found);
        }
        let Some(fp) = self.pullback.get().and_then(Option::as_ref) else {
            return Ok(None);
        };
        let mut evidence = vec![format!(
            "free algebra over the pullback is saturated with {} classes",
            fp.num_classes()
        )];
        for c in fp.classes() {
            let s = fp.representative(c);
            let (Some(px), Some(py)) = (
                self.fx.try_class_of(&rename(&self.span.pi1, &s)?),
                self.fy.try_class_of(&rename(&self.span.pi2, &s)?),
            ) else {
                return Ok(None);
            };
            let dx = definitely_different(self.fx, px, cx, self.sep);
            let dy = definitely_different(self.fy, py, cy, self.sep);
            match dx.or(dy) {
                Some(ev) => evidence.push(format!("{s}: {ev}")),
                None => return Ok(None),
            }
        }
        Ok(Some(evidence))
    }
}

fn require_epi(f: &LetterMap, epi_only: bool) -> Result<()> {
    if epi_only && !f.surjective {
        return Err(PropsError::NotSurjective(f.target.clone()));
    }
    Ok(())
}

/// Bounded check that the naturality square of the unit at `f` is a weak
/// pullback: a term renaming to a unit must itself be a unit.
pub fn check_unit_cartesian(
    p: &Presentation,
    f: &LetterMap,
    epi_only: bool,
    bound: usize,
) -> Result<CheckOutcome> {
    require_epi(f, epi_only)?;
    let fs = build(p, &f.source, bound)?;
    let fg = build(p, &f.target, bound)?;
    let sep = ModelSeparator::new(p, 3, 64);
    let img = rename_classes(&fs, f, &fg)?;
    let mut swept = 0usize;
    let mut open = 0usize;
    for c in fs.classes() {
        if fs.representative_size(c) > bound {
            continue;
        }
        swept += 1;
        let Some(gc) = img[fs.class_root(c) as usize] else {
            continue;
        };
        for y in &f.target {
            if fg.letter_class(y) != Some(gc) {
                continue;
            }
            let pre = f.preimage(y);
            if pre.iter().any(|x| fs.letter_class(x) == Some(c)) {
                continue;
            }
            let mut evidence = Vec::new();
            let mut definitive = true;
            for x in &pre {
                match definitely_different(&fs, c, fs.letter_class(x).unwrap(), &sep) {
                    Some(ev) => evidence.push(ev),
                    None => definitive = false,
                }
            }
            if definitive {
                let t = fs.representative(c);
                return Ok(CheckOutcome::Refuted(Witness {
                    summary: format!("non-unit term {t} renames to the unit {y}"),
                    terms: vec![("t".into(), t), ("unit".into(), Term::letter(y))],
                    evidence,
                }));
            }
            open += 1;
        }
    }
    let mut bounds = Bounds::new();
    bounds.insert("bound".into(), bound);
    bounds.insert("classes".into(), swept);
    if open > 0 {
        bounds.insert("open".into(), open);
        return Ok(CheckOutcome::Unknown(bounds));
    }
    Ok(CheckOutcome::Verified(bounds))
}

/// A two-layer term over Γ: an outer term over handles with each handle
/// bound to a term over Γ, and a term over Σ whose rename equals its
/// flattening.
#[derive(Clone, Debug)]
pub struct MultProbe {
    pub outer: Term,
    pub binding: BTreeMap<String, Term>,
    pub t: Term,
}

#[derive(Clone, Debug)]
pub struct MultBounds {
    /// Size bound for terms over Σ and Γ.
    pub term_bound: usize,
    /// Size bound for outer terms in the sweep.
    pub outer_size: usize,
    /// Number of handles in swept outer terms.
    pub handles: usize,
}

impl Default for MultBounds {
    fn default() -> Self {
        MultBounds {
            term_bound: 4,
            outer_size: 1,
            handles: 2,
        }
    }
}

fn handle_names(k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("h{i}")).collect()
}

/// Class of an outer term over handles whose handles are bound to classes.
fn eval_classes(fa: &BoundedFreeAlgebra, t: &Term, bind: &dyn Fn(&str) -> ClassId) -> Option<ClassId> {
    match t {
        Term::Letter(h) => Some(bind(h)),
        Term::App(op, kids) => {
            let args: Option<Vec<ClassId>> = kids.iter().map(|k| eval_classes(fa, k, bind)).collect();
            fa.apply_op(op, &args?)
        }
        Term::Var(_) => None,
    }
}

struct MultContext<'a> {
    f: &'a LetterMap,
    fs: &'a BoundedFreeAlgebra,
    fg: &'a BoundedFreeAlgebra,
    /// For each Γ-class, the Σ-classes renaming into it.
    kappa: HashMap<ClassId, Vec<ClassId>>,
    sep: &'a ModelSeparator,
    p: &'a Presentation,
    /// Outer free algebras keyed by handle alphabet and bound.
    outer: std::cell::RefCell<HashMap<(Vec<String>, usize), BoundedFreeAlgebra>>,
}

enum MultResult {
    Found,
    Refuted(Vec<String>),
    Open,
}

impl MultContext<'_> {
    /// Searches `p` over Σ with `TTf(p) = (outer, beta)` and `μ(p) = [t]`.
    fn search(&self, outer: &Term, beta: &BTreeMap<String, ClassId>, t: ClassId) -> Result<MultResult> {
        let handles: Vec<String> = beta.keys().cloned().collect();
        let mut alphabet = handles.clone();
        alphabet.push("z".into());
        let ob = fitting_bound(self.p, alphabet.len(), outer.size() + 2).max(outer.size());
        let key = (alphabet.clone(), ob);
        if !self.outer.borrow().contains_key(&key) {
            let fa = build(self.p, &alphabet, ob)?;
            self.outer.borrow_mut().insert(key.clone(), fa);
        }
        let cache = self.outer.borrow();
        let fo = &cache[&key];
        let oc = fo.class_of(outer)?;
        let members: Vec<Term> = fo
            .members(oc)
            .into_iter()
            .filter(|m| !m.letters().contains("z"))
            .collect();
        let mut evidence = Vec::new();
        let mut exhaustive = fo.is_closed(oc);
        if exhaustive {
            evidence.push(format!(
                "outer class of {outer} is closed with {} members",
                fo.class_size(oc)
            ));
        }
        for (h, &gc) in beta {
            if self.fg.is_closed(gc) {
                evidence.push(format!(
                    "class of {} is closed; {} classes over the source rename into it",
                    self.fg.representative(gc),
                    self.kappa.get(&gc).map_or(0, Vec::len)
                ));
            } else {
                exhaustive = false;
                evidence.push(format!("class bound to {h} is not closed"));
            }
        }
        let mut open = false;
        for m in &members {
            let occ: Vec<String> = m.leaves().iter().filter_map(|l| match l {
                Term::Letter(h) => Some(h.clone()),
                _ => None,
            }).collect();
            let choices: Vec<&[ClassId]> = occ
                .iter()
                .map(|h| self.kappa.get(&beta[h]).map(Vec::as_slice).unwrap_or(&[]))
                .collect();
            if choices.iter().any(|c| c.is_empty()) {
                continue;
            }
            let mut idx = vec![0usize; occ.len()];
            loop {
                let mut pos = 0usize;
                let marked = mark_occurrences(m, &mut pos);
                let value = eval_classes(self.fs, &marked, &|name| {
                    let i: usize = name[1..].parse().unwrap();
                    choices[i][idx[i]]
                });
                match value {
                    Some(v) if v == t => return Ok(MultResult::Found),
                    Some(v) => match definitely_different(self.fs, v, t, self.sep) {
                        Some(ev) => evidence.push(ev),
                        None => open = true,
                    },
                    None => open = true,
                }
                let mut k = occ.len();
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < choices[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    if k == 0 {
                        k = usize::MAX;
                        break;
                    }
                }
                if k == usize::MAX || occ.is_empty() {
                    break;
                }
            }
        }
        if exhaustive && !open {
            Ok(MultResult::Refuted(evidence))
        } else {
            Ok(MultResult::Open)
        }
    }

    fn witness(&self, outer: &Term, beta: &BTreeMap<String, ClassId>, t: ClassId, ev: Vec<String>) -> CheckOutcome {
        let binding: BTreeMap<String, Term> = beta
            .iter()
            .map(|(h, &c)| (h.clone(), self.fg.representative(c)))
            .collect();
        let tt = self.fs.representative(t);
        let parts: Vec<String> = binding.iter().map(|(h, s)| format!("{h}={s}")).collect();
        let mut terms = vec![("outer".into(), outer.clone())];
        terms.extend(binding.iter().map(|(h, s)| (h.clone(), s.clone())));
        terms.push(("t".into(), tt.clone()));
        CheckOutcome::Refuted(Witness {
            summary: format!(
                "{outer} with {} flattens to the image of {tt} along {}, but no two-layer preimage over the source does",
                parts.join(", "),
                self.f
            ),
            terms,
            evidence: ev,
        })
    }
}

/// Replaces the i-th letter occurrence (left to right) by `#i`.
fn mark_occurrences(t: &Term, pos: &mut usize) -> Term {
    match t {
        Term::Letter(_) => {
            let name = format!("#{pos}");
            *pos += 1;
            Term::Letter(name)
        }
        Term::App(op, kids) => Term::App(op.clone(), kids.iter().map(|k| mark_occurrences(k, pos)).collect()),
        Term::Var(v) => Term::Var(v.clone()),
    }
}

/// Bounded check that the naturality square of the multiplication at `f`
/// is a weak pullback. Probes are checked first; then outer terms of size at
/// most `outer_size` over `handles` handles, bound injectively to Γ-classes,
/// are swept against every Σ-class over their flattening.
pub fn check_mult_cartesian(
    p: &Presentation,
    f: &LetterMap,
    epi_only: bool,
    bounds: &MultBounds,
    probes: &[MultProbe],
) -> Result<CheckOutcome> {
    require_epi(f, epi_only)?;
    let tb = bounds.term_bound;
    let fs = build(p, &f.source, tb)?;
    let fg = build(p, &f.target, tb)?;
    let sep = ModelSeparator::new(p, 3, 64);
    let img = rename_classes(&fs, f, &fg)?;
    let mut kappa: HashMap<ClassId, Vec<ClassId>> = HashMap::new();
    for n in 0..fs.num_nodes() as NodeId {
        if let Some(g) = img[n as usize] {
            let c = fs.node_class(n);
            let v = kappa.entry(g).or_default();
            if !v.contains(&c) {
                v.push(c);
            }
        }
    }
    let ctx = MultContext {
        f,
        fs: &fs,
        fg: &fg,
        kappa,
        sep: &sep,
        p,
        outer: Default::default(),
    };
    let mut out_bounds = Bounds::new();
    out_bounds.insert("term_bound".into(), tb);
    out_bounds.insert("outer_size".into(), bounds.outer_size);
    out_bounds.insert("handles".into(), bounds.handles);

    for probe in probes {
        let mut beta = BTreeMap::new();
        for (h, s) in &probe.binding {
            beta.insert(h.clone(), fg.class_of(s)?);
        }
        let flat = flatten(&probe.outer, &probe.binding)?;
        let t = fs.class_of(&probe.t)?;
        if fg.class_of(&flat)? != fg.class_of(&rename(f, &probe.t)?)? {
            return Err(PropsError::Invalid(format!(
                "probe {} does not flatten to the image of {}",
                probe.outer, probe.t
            )));
        }
        match ctx.search(&probe.outer, &beta, t)? {
            MultResult::Found => {}
            MultResult::Refuted(ev) => return Ok(ctx.witness(&probe.outer, &beta, t, ev)),
            MultResult::Open => {
                out_bounds.insert("open_probes".into(), 1);
                return Ok(CheckOutcome::Unknown(out_bounds));
            }
        }
    }

    // Σ-classes grouped by their image class
    let mut by_image: HashMap<ClassId, Vec<ClassId>> = HashMap::new();
    for c in fs.classes() {
        if fs.representative_size(c) <= tb {
            if let Some(g) = img[fs.class_root(c) as usize] {
                by_image.entry(g).or_default().push(c);
            }
        }
    }
    let handles = handle_names(bounds.handles);
    let ob = build(p, &handles, bounds.outer_size)?;
    let gamma: Vec<ClassId> = fg
        .classes()
        .filter(|&c| fg.representative_size(c) < tb)
        .collect();
    let mut instances = 0usize;
    let mut open = 0usize;
    for oc in ob.classes() {
        let outer = ob.representative(oc);
        let used: Vec<String> = outer.letters().into_iter().collect();
        if used.is_empty() || used.len() < handles.len() && used != handles[..used.len()] {
            continue;
        }
        let k = used.len();
        let mut idx = vec![0usize; k];
        'bind: loop {
            let distinct: BTreeSet<usize> = idx.iter().copied().collect();
            if distinct.len() == k && !gamma.is_empty() {
                let beta: BTreeMap<String, ClassId> =
                    used.iter().cloned().zip(idx.iter().map(|&i| gamma[i])).collect();
                if let Some(target) = eval_classes(&fg, &outer, &|h| beta[h]) {
                    for &t in by_image.get(&target).map(Vec::as_slice).unwrap_or(&[]) {
                        instances += 1;
                        match ctx.search(&outer, &beta, t)? {
                            MultResult::Found => {}
                            MultResult::Refuted(ev) => return Ok(ctx.witness(&outer, &beta, t, ev)),
                            MultResult::Open => open += 1,
                        }
                    }
                }
            }
            let mut pos = k;
            loop {
                if pos == 0 {
                    break 'bind;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < gamma.len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
    out_bounds.insert("instances".into(), instances);
    if open > 0 {
        out_bounds.insert("open".into(), open);
        return Ok(CheckOutcome::Unknown(out_bounds));
    }
    Ok(CheckOutcome::Verified(out_bounds))
}

/// Letter naming a nonempty subset, e.g. `{a|b}`.
pub fn subset_letter(members: &[String]) -> String {
    format!("{{{}}}", members.join("|"))
}

/// All nonempty subsets of `x` in size-then-lexicographic order.
pub fn nonempty_subsets(x: &[String]) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = (1u64..1 << x.len())
        .map(|m| {
            (0..x.len())
                .filter(|i| m >> i & 1 == 1)
                .map(|i| x[i].clone())
                .collect()
        })
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    out
}

/// λ over one alphabet: maps classes of terms over subset letters to sets of
/// classes over the base letters by choosing one member per leaf occurrence.
pub struct JacobsContext {
    pub base: BoundedFreeAlgebra,
    pub subsets: BoundedFreeAlgebra,
    /// Members of each subset letter, indexed by letter.
    letter_members: HashMap<String, Vec<String>>,
    /// Choice expansions of every node of `subsets`.
    expansions: Vec<BTreeSet<ClassId>>,
}

/// A computed value of λ; `complete` is set when the input class is closed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaValue {
    pub classes: BTreeSet<ClassId>,
    pub complete: bool,
}

impl JacobsContext {
    /// `subset_letters` maps each letter of the subset alphabet to its
    /// members in `base`.
    pub fn new(
        base: BoundedFreeAlgebra,
        subset_letters: &[(String, Vec<String>)],
        bound: usize,
    ) -> Result<Self> {
        let p = base.presentation().clone();
        let names: Vec<String> = subset_letters.iter().map(|(n, _)| n.clone()).collect();
        let subsets = build(&p, &names, bound)?;
        let letter_members: HashMap<String, Vec<String>> = subset_letters.iter().cloned().collect();
        let mut expansions: Vec<BTreeSet<ClassId>> = Vec::with_capacity(subsets.num_nodes());
        for n in 0..subsets.num_nodes() as NodeId {
            let set = match subsets.node_shallow(n) {
                Shallow::Letter(l) => letter_members[l]
                    .iter()
                    .filter_map(|m| base.letter_class(m))
                    .collect(),
                Shallow::App(op, kids) => {
                    let sets: Vec<&BTreeSet<ClassId>> =
                        kids.iter().map(|&k| &expansions[k as usize]).collect();
                    let mut out = BTreeSet::new();
                    product_apply(&base, op, &sets, &mut Vec::new(), &mut out);
                    out
                }
            };
            expansions.push(set);
        }
        Ok(JacobsContext {
            base,
            subsets,
            letter_members,
            expansions,
        })
    }

    pub fn members_of(&self, letter: &str) -> Option<&[String]> {
        self.letter_members.get(letter).map(Vec::as_slice)
    }

    pub fn lambda_class(&self, c: ClassId) -> LambdaValue {
        let mut classes = BTreeSet::new();
        for &n in self.subsets.class_node_ids(c) {
            classes.extend(self.expansions[n as usize].iter().copied());
        }
        LambdaValue {
            classes,
            complete: self.subsets.is_closed(c),
        }
    }

    pub fn lambda(&self, t: &Term) -> Result<LambdaValue> {
        Ok(self.lambda_class(self.subsets.class_of(t)?))
    }
}

fn product_apply(
    fa: &BoundedFreeAlgebra,
    op: &str,
    sets: &[&BTreeSet<ClassId>],
    args: &mut Vec<ClassId>,
    out: &mut BTreeSet<ClassId>,
) {
    if args.len() == sets.len() {
        if let Some(c) = fa.apply_op(op, args) {
            out.insert(c);
        }
        return;
    }
    for &c in sets[args.len()] {
        args.push(c);
        product_apply(fa, op, sets, args, out);
        args.pop();
    }
}

/// λ_X(t) for `t` over subset letters of X: classes over X of the choice
/// expansions of every member of the class of `t` within `bound`.
pub fn eval_jacobs_law(
    p: &Presentation,
    x: &[String],
    t: &Term,
    bound: usize,
) -> Result<(BoundedFreeAlgebra, LambdaValue)> {
    let mut subset_letters = Vec::new();
    for l in t.letters() {
        let inner = l
            .strip_prefix('{')
            .and_then(|s| s.strip_suffix('}'))
            .ok_or_else(|| PropsError::Invalid(format!("`{l}` is not a subset letter")))?;
        let members: Vec<String> = inner.split('|').map(String::from).collect();
        if members.iter().any(|m| !x.contains(m)) || members.iter().any(String::is_empty) {
            return Err(PropsError::Invalid(format!("`{l}` is not a nonempty subset of {x:?}")));
        }
        subset_letters.push((l.clone(), members));
    }
    let base = build(p, x, bound)?;
    let ctx = JacobsContext::new(base, &subset_letters, bound)?;
    let v = ctx.lambda(t)?;
    Ok((ctx.base, v))
}

#[derive(Clone, Debug)]
pub struct DistLawBounds {
    /// Bound for free algebras over X and its subsets.
    pub bound: usize,
    /// Bound for the free algebra over subsets of subsets.
    pub nested_bound: usize,
    /// Inputs of axioms (a) and (c) and of monotonicity have a
    /// representative of at most this size.
    pub input_size: usize,
    /// Outer size for axiom (d).
    pub outer_size: usize,
}

impl Default for DistLawBounds {
    fn default() -> Self {
        DistLawBounds {
            bound: 4,
            nested_bound: 3,
            input_size: 2,
            outer_size: 1,
        }
    }
}

/// Per-axiom outcomes plus monotonicity.
#[derive(Clone, Debug)]
pub struct DistLawReport {
    pub axioms: Vec<(String, CheckOutcome)>,
    pub monotone: CheckOutcome,
}

impl DistLawReport {
    pub fn all_verified(&self) -> bool {
        self.axioms.iter().all(|(_, o)| o.is_verified()) && self.monotone.is_verified()
    }
}

struct Tally {
    name: String,
    instances: usize,
    open: usize,
    refuted: Option<Witness>,
    bounds: Bounds,
}

impl Tally {
    fn new(name: &str, bounds: &Bounds) -> Self {
        Tally {
            name: name.into(),
            instances: 0,
            open: 0,
            refuted: None,
            bounds: bounds.clone(),
        }
    }

    /// Compares two computed sets; a difference is definitive when the side
    /// missing an element is complete and the element is definitively
    /// distinct from all of its members.
    #[allow(clippy::too_many_arguments)]
    fn compare(
        &mut self,
        fa: &BoundedFreeAlgebra,
        sep: &ModelSeparator,
        input: &str,
        lhs: &LambdaValue,
        rhs: &LambdaValue,
        lname: &str,
        rname: &str,
    ) {
        self.instances += 1;
        if lhs.classes == rhs.classes || self.refuted.is_some() {
            return;
        }
        for (extra_side, other_side, en, on) in [(lhs, rhs, lname, rname), (rhs, lhs, rname, lname)] {
            if !other_side.complete {
                continue;
            }
            for &e in extra_side.classes.difference(&other_side.classes) {
                let mut evidence = Vec::new();
                let all = other_side.classes.iter().all(|&o| match definitely_different(fa, e, o, sep) {
                    Some(ev) => {
                        evidence.push(ev);
                        true
                    }
                    None => false,
                });
                if all {
                    let et = fa.representative(e);
                    let shown: Vec<String> =
                        other_side.classes.iter().map(|&o| fa.representative(o).to_string()).collect();
                    evidence.insert(0, format!("{on} is computed exactly: {{{}}}", shown.join(", ")));
                    self.refuted = Some(Witness {
                        summary: format!(
                            "axiom {} fails at {input}: {et} is in the {en} but not in the {on}",
                            self.name
                        ),
                        terms: vec![("element".into(), et)],
                        evidence,
                    });
                    return;
                }
            }
        }
        self.open += 1;
    }

    fn finish(mut self) -> (String, CheckOutcome) {
        let outcome = match self.refuted {
            Some(w) => CheckOutcome::Refuted(w),
            None => {
                self.bounds.insert("instances".into(), self.instances);
                if self.open > 0 {
                    self.bounds.insert("open".into(), self.open);
                    CheckOutcome::Unknown(self.bounds)
                } else {
                    CheckOutcome::Verified(self.bounds)
                }
            }
        };
        (self.name, outcome)
    }
}

/// Checks axioms (a) to (d) of a distributive law of T over nonempty
/// powerset for the Jacobs law λ on the set `x`, and monotonicity of λ
/// along every pair `f ≤ g : x → P⁺x`.
pub fn check_distributive_law_axioms(
    p: &Presentation,
    x: &[String],
    bounds: &DistLawBounds,
) -> Result<DistLawReport> {
    let b = bounds.bound;
    let sep = ModelSeparator::new(p, 3, 64);
    let subsets = nonempty_subsets(x);
    let s1: Vec<(String, Vec<String>)> = subsets.iter().map(|s| (subset_letter(s), s.clone())).collect();
    let s1_names: Vec<String> = s1.iter().map(|(n, _)| n.clone()).collect();
    let base = build(p, x, b)?;
    let lam = JacobsContext::new(base, &s1, b)?;
    // subsets of subsets, as letters over the subset alphabet
    let s2: Vec<(String, Vec<String>)> = nonempty_subsets(&s1_names)
        .into_iter()
        .map(|s| (subset_letter(&s), s))
        .collect();
    let nb = fitting_bound(p, s2.len(), bounds.nested_bound);
    let s1_base = build(p, &s1_names, nb)?;
    let lam2 = JacobsContext::new(s1_base, &s2, nb)?;

    let mut bnd = Bounds::new();
    bnd.insert("bound".into(), b);
    bnd.insert("letters".into(), x.len());
    bnd.insert("input_size".into(), bounds.input_size);
    let fx = &lam.base;
    let exact = |classes: BTreeSet<ClassId>| LambdaValue {
        classes,
        complete: true,
    };

    // (a) singleton leaves
    let mut ta = Tally::new("(a)", &bnd);
    let singleton = LetterMap::from_parts(
        x.to_vec(),
        s1_names.clone(),
        x.iter().map(|a| (a.clone(), subset_letter(std::slice::from_ref(a)))).collect(),
    )?;
    for c in fx.classes() {
        if fx.representative_size(c) > bounds.input_size {
            continue;
        }
        let t = fx.representative(c);
        let lhs = lam.lambda(&rename(&singleton, &t)?)?;
        ta.compare(fx, &sep, &t.to_string(), &lhs, &exact([c].into()), "left side", "right side");
    }

    // (b) a subset seen as a unit
    let mut tb = Tally::new("(b)", &bnd);
    for (name, members) in &s1 {
        let lhs = lam.lambda(&Term::letter(name))?;
        let rhs = exact(members.iter().filter_map(|m| fx.letter_class(m)).collect());
        tb.compare(fx, &sep, name, &lhs, &rhs, "left side", "right side");
    }

    // (c) union of subsets against λ applied twice
    let mut tc = Tally::new("(c)", &bnd);
    let union_map = LetterMap::from_parts(
        s2.iter().map(|(n, _)| n.clone()).collect(),
        s1_names.clone(),
        s2.iter()
            .map(|(n, ms)| {
                let mut u: BTreeSet<String> = BTreeSet::new();
                for m in ms {
                    u.extend(lam.members_of(m).unwrap().iter().cloned());
                }
                let u: Vec<String> = x.iter().filter(|a| u.contains(*a)).cloned().collect();
                (n.clone(), subset_letter(&u))
            })
            .collect(),
    )?;
    for c in lam2.subsets.classes() {
        if lam2.subsets.representative_size(c) > bounds.input_size.min(nb) {
            continue;
        }
        let t = lam2.subsets.representative(c);
        let Ok(lhs) = lam.lambda(&rename(&union_map, &t)?) else {
            continue;
        };
        let inner = lam2.lambda_class(c);
        let mut rhs = LambdaValue {
            classes: BTreeSet::new(),
            complete: inner.complete,
        };
        for u in &inner.classes {
            let ut = lam2.base.representative(*u);
            match lam.lambda(&ut) {
                Ok(v) => {
                    rhs.classes.extend(v.classes);
                    rhs.complete &= v.complete;
                }
                Err(_) => rhs.complete = false,
            }
        }
        tc.compare(fx, &sep, &t.to_string(), &lhs, &rhs, "left side", "right side");
    }

    // (d) flattening against λ on both layers
    let mut td = Tally::new("(d)", &bnd);
    let handles = handle_names(2);
    let fo = build(p, &handles, bounds.outer_size + 2)?;
    let small: Vec<ClassId> = lam
        .subsets
        .classes()
        .filter(|&c| lam.subsets.representative_size(c) <= 1)
        .collect();
    for oc in fo.classes() {
        if fo.representative_size(oc) > bounds.outer_size {
            continue;
        }
        let outer = fo.representative(oc);
        let used: Vec<String> = outer.letters().into_iter().collect();
        if used.is_empty() || used[0] != "h1" {
            continue;
        }
        let k = used.len();
        let mut idx = vec![0usize; k];
        'bind: loop {
            let binding: BTreeMap<String, Term> = used
                .iter()
                .cloned()
                .zip(idx.iter().map(|&i| lam.subsets.representative(small[i])))
                .collect();
            let flat = flatten(&outer, &binding)?;
            if let Ok(lhs) = lam.lambda(&flat) {
                // handles with equal λ-values are the same letter of T(P(TX))
                let values: Vec<LambdaValue> = used
                    .iter()
                    .map(|h| lam.lambda(&binding[h]))
                    .collect::<Result<_>>()?;
                let mut canon: BTreeMap<String, String> = BTreeMap::new();
                for (i, h) in used.iter().enumerate() {
                    let first = (0..i).find(|&j| values[j].classes == values[i].classes).unwrap_or(i);
                    canon.insert(h.clone(), used[first].clone());
                }
                let merged = outer.map_letters(&|h| Term::letter(&canon[h]));
                let mc = fo.class_of(&merged)?;
                let mut rhs = LambdaValue {
                    classes: BTreeSet::new(),
                    complete: fo.is_closed(mc) && values.iter().all(|v| v.complete),
                };
                for m in fo.members(mc) {
                    let mut pos = 0usize;
                    let marked = mark_occurrences(&m, &mut pos);
                    let occ: Vec<usize> = m
                        .leaves()
                        .iter()
                        .filter_map(|l| match l {
                            Term::Letter(h) => used.iter().position(|u| u == h),
                            _ => None,
                        })
                        .collect();
                    let sets: Vec<Vec<ClassId>> =
                        occ.iter().map(|&i| values[i].classes.iter().copied().collect()).collect();
                    let mut choice = vec![0usize; occ.len()];
                    if sets.iter().any(Vec::is_empty) {
                        continue;
                    }
                    loop {
                        let v = eval_classes(fx, &marked, &|name| {
                            let i: usize = name[1..].parse().unwrap();
                            sets[i][choice[i]]
                        });
                        match v {
                            Some(v) => {
                                rhs.classes.insert(v);
                            }
                            None => rhs.complete = false,
                        }
                        let mut q = occ.len();
                        let mut done = true;
                        while q > 0 {
                            q -= 1;
                            choice[q] += 1;
                            if choice[q] < sets[q].len() {
                                done = false;
                                break;
                            }
                            choice[q] = 0;
                        }
                        if done {
                            break;
                        }
                    }
                }
                let shown: Vec<String> = binding.iter().map(|(h, s)| format!("{h}={s}")).collect();
                td.compare(
                    fx,
                    &sep,
                    &format!("{outer} with {}", shown.join(", ")),
                    &lhs,
                    &rhs,
                    "left side",
                    "right side",
                );
            }
            let mut pos = k;
            loop {
                if pos == 0 {
                    break 'bind;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < small.len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }

    // monotonicity along f ≤ g
    let mut tm = Tally::new("monotonicity", &bnd);
    let choices: Vec<Vec<(usize, usize)>> = x
        .iter()
        .map(|_| {
            let mut v = Vec::new();
            for (i, a) in subsets.iter().enumerate() {
                for (j, b) in subsets.iter().enumerate() {
                    if a.iter().all(|m| b.contains(m)) {
                        v.push((i, j));
                    }
                }
            }
            v
        })
        .collect();
    let mut idx = vec![0usize; x.len()];
    loop {
        let pick: Vec<(usize, usize)> = idx.iter().zip(&choices).map(|(&i, c)| c[i]).collect();
        let fmap = |side: usize| -> Result<LetterMap> {
            Ok(LetterMap::from_parts(
                x.to_vec(),
                s1_names.clone(),
                x.iter()
                    .zip(&pick)
                    .map(|(a, &(i, j))| (a.clone(), s1_names[if side == 0 { i } else { j }].clone()))
                    .collect(),
            )?)
        };
        let (fm, gm) = (fmap(0)?, fmap(1)?);
        for c in fx.classes() {
            if fx.representative_size(c) > bounds.input_size {
                continue;
            }
            let t = fx.representative(c);
            let lf = lam.lambda(&rename(&fm, &t)?)?;
            let lg = lam.lambda(&rename(&gm, &t)?)?;
            tm.instances += 1;
            if !lf.classes.is_subset(&lg.classes) && tm.refuted.is_none() {
                let before = tm.instances;
                tm.compare(fx, &sep, &format!("{t} along {fm} and {gm}"), &lf, &lg, "smaller side", "larger side");
                tm.instances = before;
            }
        }
        let mut pos = x.len();
        let mut done = true;
        while pos > 0 {
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < choices[pos].len() {
                done = false;
                break;
            }
            idx[pos] = 0;
        }
        if done {
            break;
        }
    }

    Ok(DistLawReport {
        axioms: vec![ta.finish(), tb.finish(), tc.finish(), td.finish()],
        monotone: tm.finish().1,
    })
}

/// Substitutes `a`/`b` for `x`, `y`, `z` in a ternary term.
fn instantiate(t: &Term, x: &str, y: &str, z: &str) -> Term {
    match t {
        Term::Var(v) => Term::letter(match v.as_str() {
            "x" => x,
            "y" => y,
            _ => z,
        }),
        Term::App(op, kids) => Term::App(op.clone(), kids.iter().map(|k| instantiate(k, x, y, z)).collect()),
        Term::Letter(l) => Term::letter(l),
    }
}

/// True when `p(a,a,b)` and `p(b,a,a)` both equal `b` in `fa` over `{a,b}`.
pub fn verify_malcev_term(fa: &BoundedFreeAlgebra, term: &Term) -> Result<bool> {
    let b = fa.class_of(&Term::letter("b"))?;
    let l = fa.class_of(&instantiate(term, "a", "a", "b"))?;
    let r = fa.class_of(&instantiate(term, "b", "a", "a"))?;
    Ok(l == b && r == b)
}

/// Breadth-first search over ternary terms by depth, deduplicated by the
/// pair of classes `(p(a,a,b), p(b,a,a))` in the free algebra on `{a,b}`.
/// Returns the first term reaching `(b,b)`.
pub fn find_malcev_term(p: &Presentation, depth: usize, free_bound: usize) -> Result<Option<Term>> {
    let ab = vec!["a".to_string(), "b".to_string()];
    let fa = build(p, &ab, free_bound)?;
    let (ca, cb) = (fa.letter_class("a").unwrap(), fa.letter_class("b").unwrap());
    let target = (cb, cb);
    let mut seen: HashMap<(ClassId, ClassId), Term> = HashMap::new();
    let mut order: Vec<(ClassId, ClassId)> = Vec::new();
    for (v, pair) in [("x", (ca, cb)), ("y", (ca, ca)), ("z", (cb, ca))] {
        if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(pair) {
            e.insert(Term::var(v));
            order.push(pair);
        }
    }
    if let Some(t) = seen.get(&target) {
        return Ok(Some(t.clone()));
    }
    for _ in 0..depth {
        let known = order.clone();
        let mut fresh = Vec::new();
        for (op, arity) in p.signature.ops() {
            let mut idx = vec![0usize; *arity];
            loop {
                let args: Vec<(ClassId, ClassId)> = idx.iter().map(|&i| known[i]).collect();
                let l: Option<Vec<ClassId>> = Some(args.iter().map(|a| a.0).collect());
                let r: Option<Vec<ClassId>> = Some(args.iter().map(|a| a.1).collect());
                if let (Some(vl), Some(vr)) = (
                    l.and_then(|l| fa.apply_op(op, &l)),
                    r.and_then(|r| fa.apply_op(op, &r)),
                ) {
                    let pair = (vl, vr);
                    if !seen.contains_key(&pair) {
                        let t = Term::App(op.clone(), args.iter().map(|a| seen[a].clone()).collect());
                        if pair == target {
                            return Ok(Some(t));
                        }
                        fresh.push((pair, t));
                    }
                }
                let mut pos = *arity;
                let mut done = true;
                while pos > 0 {
                    pos -= 1;
                    idx[pos] += 1;
                    if idx[pos] < known.len() {
                        done = false;
                        break;
                    }
                    idx[pos] = 0;
                }
                if done {
                    break;
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        for (pair, t) in fresh {
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(pair) {
                e.insert(t);
                order.push(pair);
            }
        }
    }
    Ok(None)
}

/// A finite model and elements `a, b` such that the subalgebra of `A²`
/// generated by `(a,b)`, `(a,a)` and `(b,a)` misses `(b,b)`: then no term
/// of any depth is a Mal'cev term.
pub fn malcev_obstruction(p: &Presentation, max_size: usize) -> Option<String> {
    let sep = ModelSeparator::new(p, max_size, 256);
    for (mi, m) in sep.models.iter().enumerate() {
        let n = m.size as u32;
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let prod = crate::finite_algebra::product(m, m).ok()?;
                let (_, embed) = prod.subalgebra(&[a * n + b, a * n + a, b * n + a]);
                if !embed.contains(&(b * n + b)) {
                    return Some(format!(
                        "model #{mi} of size {n}: the pairs generated from ({a},{b}), ({a},{a}), ({b},{a}) never reach ({b},{b})"
                    ));
                }
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Finiteness {
    Finite(usize),
    /// Class counts per bound in the schedule.
    Unknown(Vec<(usize, usize)>),
}

/// Builds the free algebra on `generators` letters at each bound of the
/// schedule and stops at the first saturated one.
pub fn detect_local_finiteness(
    p: &Presentation,
    generators: usize,
    schedule: &[usize],
) -> Result<Finiteness> {
    if generators == 0 {
        return Err(PropsError::Invalid("at least one generator is needed".into()));
    }
    let alpha = letters(generators);
    let mut trace = Vec::new();
    for &b in schedule {
        if universe_size(p, generators, b) > BuildOptions::default().max_nodes as u128 {
            break;
        }
        let fa = build(p, &alpha, b)?;
        if fa.saturated() {
            return Ok(Finiteness::Finite(fa.num_classes()));
        }
        trace.push((b, fa.num_classes()));
    }
    Ok(Finiteness::Unknown(trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::parse_presentation;

    fn thy(src: &str) -> Presentation {
        parse_presentation(src).unwrap()
    }

    fn monoid() -> Presentation {
        thy("ops: dot/2, e/0\neq: (dot (dot ?x ?y) ?z) = (dot ?x (dot ?y ?z))\neq: (dot e ?x) = ?x\neq: (dot ?x e) = ?x")
    }

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn jacobs_law_on_words() {
        let p = monoid();
        let t = p.parse_term("(dot {a|b} {c})").unwrap();
        let (fx, v) = eval_jacobs_law(&p, &s(&["a", "b", "c"]), &t, 3).unwrap();
        let got: BTreeSet<String> = v.classes.iter().map(|&c| fx.representative(c).to_string()).collect();
        assert_eq!(got, ["(dot a c)".to_string(), "(dot b c)".to_string()].into());
    }

    #[test]
    fn unit_is_cartesian_for_monoid() {
        let f = LetterMap::parse("a->c,b->c", None).unwrap();
        let out = check_unit_cartesian(&monoid(), &f, true, 3).unwrap();
        assert!(out.is_verified(), "{out}");
    }

    #[test]
    fn semilattice_unit_refuted() {
        let p = thy("ops: join/2\neq: (join (join ?x ?y) ?z) = (join ?x (join ?y ?z))\neq: (join ?x ?y) = (join ?y ?x)\neq: (join ?x ?x) = ?x");
        let f = LetterMap::parse("a->c,b->c", None).unwrap();
        let out = check_unit_cartesian(&p, &f, true, 3).unwrap();
        assert_eq!(out.term("t").unwrap().to_string(), "(join a b)");
    }

    #[test]
    fn free_monoid_has_no_malcev_term() {
        let p = monoid();
        assert_eq!(find_malcev_term(&p, 3, 5).unwrap(), None);
        assert!(malcev_obstruction(&p, 3).is_some());
    }

    #[test]
    fn one_letter_monoid_is_not_locally_finite() {
        match detect_local_finiteness(&monoid(), 1, &[2, 3, 4]).unwrap() {
            Finiteness::Unknown(trace) => {
                assert!(trace.windows(2).all(|w| w[0].1 < w[1].1), "{trace:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn span_pullback_letters() {
        let span = SpanInstance::parse("X: a b\nY: c d\nZ: e\nf: a->e, b->e\ng: c->e, d->e").unwrap();
        assert_eq!(span.pullback, s(&["a.c", "a.d", "b.c", "b.d"]));
    }
}

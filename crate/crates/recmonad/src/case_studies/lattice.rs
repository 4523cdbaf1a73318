//! Free lattices: Whitman's order, canonical forms, and direct images of
//! languages recognized by finite lattices.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::finite_algebra::{product, FiniteAlgebra};
use crate::monad_props::{Bounds, CheckOutcome, Witness};
use crate::presentation::{LetterMap, Term};
use crate::recognition::{RecognitionError, RecognizedLanguage};

use super::fixtures;

type Result<T> = std::result::Result<T, RecognitionError>;

/// A lattice term with flattened, sorted children: no join directly under
/// a join, no meet directly under a meet.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LatticeTerm {
    Gen(String),
    Join(Vec<LatticeTerm>),
    Meet(Vec<LatticeTerm>),
}

use LatticeTerm::{Gen, Join, Meet};

impl LatticeTerm {
    pub fn gen(x: &str) -> Self {
        Gen(x.to_string())
    }

    pub fn join(items: Vec<LatticeTerm>) -> Self {
        Self::combine(true, items)
    }

    pub fn meet(items: Vec<LatticeTerm>) -> Self {
        Self::combine(false, items)
    }

    fn combine(is_join: bool, items: Vec<LatticeTerm>) -> Self {
        let mut flat = Vec::new();
        for t in items {
            match t {
                Join(ks) if is_join => flat.extend(ks),
                Meet(ks) if !is_join => flat.extend(ks),
                t => flat.push(t),
            }
        }
        flat.sort();
        match flat.len() {
            1 => flat.pop().unwrap(),
            _ if is_join => Join(flat),
            _ => Meet(flat),
        }
    }

    /// Number of binary operations in any binary bracketing.
    pub fn size(&self) -> usize {
        match self {
            Gen(_) => 0,
            Join(ks) | Meet(ks) => ks.len() - 1 + ks.iter().map(|k| k.size()).sum::<usize>(),
        }
    }

    pub fn generators(&self) -> BTreeSet<String> {
        match self {
            Gen(x) => BTreeSet::from([x.clone()]),
            Join(ks) | Meet(ks) => ks.iter().flat_map(|k| k.generators()).collect(),
        }
    }

    /// Reads a term over `join/2`, `meet/2` and letters.
    pub fn from_term(t: &Term) -> Option<Self> {
        match t {
            Term::Letter(x) => Some(Gen(x.clone())),
            Term::App(op, kids) if kids.len() == 2 && (op == "join" || op == "meet") => {
                let ks = vec![Self::from_term(&kids[0])?, Self::from_term(&kids[1])?];
                Some(if op == "join" { Self::join(ks) } else { Self::meet(ks) })
            }
            _ => None,
        }
    }

    /// Right-nested binary term.
    pub fn to_term(&self) -> Term {
        match self {
            Gen(x) => Term::letter(x),
            Join(ks) | Meet(ks) => {
                let op = if matches!(self, Join(_)) { "join" } else { "meet" };
                let (last, init) = ks.split_last().unwrap();
                init.iter()
                    .rev()
                    .fold(last.to_term(), |acc, k| Term::app2(op, k.to_term(), acc))
            }
        }
    }

    pub fn rename(&self, f: &LetterMap) -> Option<Self> {
        Some(match self {
            Gen(x) => Gen(f.apply(x)?.to_string()),
            Join(ks) => Self::join(ks.iter().map(|k| k.rename(f)).collect::<Option<_>>()?),
            Meet(ks) => Self::meet(ks.iter().map(|k| k.rename(f)).collect::<Option<_>>()?),
        })
    }

    /// Evaluates in a finite lattice given by its join and meet tables.
    pub fn eval(&self, a: &FiniteAlgebra, h0: &BTreeMap<String, u32>) -> Option<u32> {
        match self {
            Gen(x) => h0.get(x).copied(),
            Join(ks) | Meet(ks) => {
                let op = if matches!(self, Join(_)) { "join" } else { "meet" };
                let mut vals = ks.iter().map(|k| k.eval(a, h0));
                let first = vals.next()??;
                vals.try_fold(first, |acc, v| a.apply_named(op, &[acc, v?]).ok())
            }
        }
    }
}

impl fmt::Display for LatticeTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gen(x) => write!(f, "{x}"),
            Join(ks) | Meet(ks) => {
                let sep = if matches!(self, Join(_)) { " ∨ " } else { " ∧ " };
                let parts: Vec<String> = ks.iter().map(|k| k.to_string()).collect();
                write!(f, "({})", parts.join(sep))
            }
        }
    }
}

/// Decides `s ≤ t` in the free lattice. Joins on the left and meets on the
/// right split into all parts; otherwise `s ≤ t` holds iff the generators
/// coincide, some meetand of `s` is below `t`, or `s` is below some joinand
/// of `t` (Whitman's condition for meet-below-join).
pub fn whitman_leq(s: &LatticeTerm, t: &LatticeTerm) -> bool {
    match (s, t) {
        (Join(ss), _) => ss.iter().all(|x| whitman_leq(x, t)),
        (_, Meet(ts)) => ts.iter().all(|y| whitman_leq(s, y)),
        (Gen(x), Gen(y)) => x == y,
        _ => {
            let left = match s {
                Meet(ss) => ss.iter().any(|x| whitman_leq(x, t)),
                _ => false,
            };
            left || match t {
                Join(ts) => ts.iter().any(|y| whitman_leq(s, y)),
                _ => false,
            }
        }
    }
}

pub fn whitman_eq(s: &LatticeTerm, t: &LatticeTerm) -> bool {
    whitman_leq(s, t) && whitman_leq(t, s)
}

/// Canonical form: children canonical, no joinand below another, and no
/// meetand of a joinand below the whole join; dually for meets. Removes
/// redundant parts only, so every generator of the result occurs in every
/// term denoting the same element.
pub fn canonical_form(t: &LatticeTerm) -> LatticeTerm {
    match t {
        Gen(_) => t.clone(),
        Join(ks) => reduce(true, ks.iter().map(canonical_form).collect()),
        Meet(ks) => reduce(false, ks.iter().map(canonical_form).collect()),
    }
}

fn reduce(is_join: bool, items: Vec<LatticeTerm>) -> LatticeTerm {
    let below = |x: &LatticeTerm, y: &LatticeTerm| {
        if is_join {
            whitman_leq(x, y)
        } else {
            whitman_leq(y, x)
        }
    };
    let mut items = match LatticeTerm::combine(is_join, items) {
        Join(ks) if is_join => ks,
        Meet(ks) if !is_join => ks,
        single => return single,
    };
    loop {
        let mut i = 0;
        while i < items.len() {
            let redundant = (0..items.len()).any(|j| j != i && below(&items[i], &items[j]));
            if redundant {
                items.remove(i);
            } else {
                i += 1;
            }
        }
        if items.len() == 1 {
            return items.pop().unwrap();
        }
        let whole = LatticeTerm::combine(is_join, items.clone());
        let replacement = items.iter().enumerate().find_map(|(i, x)| {
            let parts = match (is_join, x) {
                (true, Meet(ps)) | (false, Join(ps)) => ps,
                _ => return None,
            };
            parts.iter().find(|p| below(p, &whole)).map(|p| (i, p.clone()))
        });
        match replacement {
            Some((i, p)) => {
                items.remove(i);
                items.push(p);
                items = match LatticeTerm::combine(is_join, items) {
                    Join(ks) if is_join => ks,
                    Meet(ks) if !is_join => ks,
                    single => return single,
                };
            }
            None => return whole,
        }
    }
}

/// Distinct free-lattice elements over `alphabet` presentable with at most
/// `max_size` operations, in canonical form, with their least size.
pub fn lattice_elements(alphabet: &[String], max_size: usize) -> Vec<(LatticeTerm, usize)> {
    let mut seen: HashMap<LatticeTerm, usize> = HashMap::new();
    let mut levels: Vec<Vec<LatticeTerm>> = vec![alphabet.iter().map(|x| Gen(x.clone())).collect()];
    for g in &levels[0] {
        seen.insert(g.clone(), 0);
    }
    for k in 1..=max_size {
        let mut level = Vec::new();
        for i in 0..k {
            let j = k - 1 - i;
            if i > j {
                break;
            }
            for (xi, x) in levels[i].iter().enumerate() {
                let start = if i == j { xi } else { 0 };
                for y in &levels[j][start..] {
                    for t in [
                        LatticeTerm::join(vec![x.clone(), y.clone()]),
                        LatticeTerm::meet(vec![x.clone(), y.clone()]),
                    ] {
                        let c = canonical_form(&t);
                        if !seen.contains_key(&c) {
                            seen.insert(c.clone(), k);
                            level.push(c);
                        }
                    }
                }
            }
        }
        levels.push(level);
    }
    let mut out: Vec<(LatticeTerm, usize)> = seen.into_iter().collect();
    out.sort_by(|a, b| (a.1, &a.0).cmp(&(b.1, &b.0)));
    out
}

/// The lattice theory view of a recognizer, with `x ≤ y` iff `x ∨ y = y`.
fn as_lattice(a: &FiniteAlgebra) -> Result<FiniteAlgebra> {
    let p = fixtures::theory("lattice").expect("built-in lattice theory");
    let mut ops = Vec::new();
    for name in ["join", "meet"] {
        let i = a
            .op_index(name)
            .ok_or_else(|| RecognitionError::Precondition(format!("recognizer has no `{name}` operation")))?;
        ops.push(a.ops[i].clone());
    }
    let l = FiniteAlgebra::from_parts(p, a.size, ops, a.names.clone());
    if let Err(v) = l.check_satisfies() {
        return Err(crate::finite_algebra::AlgebraError::FailsEquations(Box::new(v)).into());
    }
    Ok(l)
}

fn leq(a: &FiniteAlgebra, x: u32, y: u32) -> bool {
    a.apply_named("join", &[x, y]).unwrap() == y
}

/// The image recognizer together with the data it was built from.
#[derive(Clone, Debug)]
pub struct LatticeImage {
    /// Over `A × A`: the first coordinate evaluates with `k∨`, the second
    /// with `k∧`.
    pub language: RecognizedLanguage,
    /// `y ↦ ⋁ h₀(f⁻¹(y))`.
    pub join_assignment: BTreeMap<String, u32>,
    /// `y ↦ ⋀ h₀(f⁻¹(y))`.
    pub meet_assignment: BTreeMap<String, u32>,
    /// Per accepting point `a`: its up-set and down-set.
    pub points: Vec<(u32, BTreeSet<u32>, BTreeSet<u32>)>,
}

/// For each accepting point `a`, the image of `h⁻¹(a)` is the set of terms
/// whose join-of-preimages value lies above `a` and whose
/// meet-of-preimages value lies below `a`; the image is the union over
/// `S`, recognized in `A × A`.
pub fn lattice_direct_image(l: &RecognizedLanguage, f: &LetterMap) -> Result<LatticeImage> {
    if !f.surjective {
        return Err(RecognitionError::NotSurjective(f.target.clone()));
    }
    let a = as_lattice(&l.algebra)?;
    let n = a.size as u32;
    let fold = |op: &str, y: &str| -> Result<u32> {
        let mut vals = f.preimage(y).into_iter().map(|x| {
            l.assignment
                .get(x)
                .copied()
                .ok_or_else(|| RecognitionError::Unmapped(x.to_string()))
        });
        let first = vals.next().expect("surjective")?;
        vals.try_fold(first, |acc, v| Ok(a.apply_named(op, &[acc, v?])?))
    };
    let mut join_assignment = BTreeMap::new();
    let mut meet_assignment = BTreeMap::new();
    for y in &f.target {
        join_assignment.insert(y.clone(), fold("join", y)?);
        meet_assignment.insert(y.clone(), fold("meet", y)?);
    }
    let points: Vec<(u32, BTreeSet<u32>, BTreeSet<u32>)> = l
        .accept
        .iter()
        .map(|&p| {
            let up = (0..n).filter(|&u| leq(&a, p, u)).collect();
            let down = (0..n).filter(|&v| leq(&a, v, p)).collect();
            (p, up, down)
        })
        .collect();
    let algebra = product(&a, &a)?;
    let assignment = f
        .target
        .iter()
        .map(|y| (y.clone(), join_assignment[y] * n + meet_assignment[y]))
        .collect();
    let accept = (0..n * n)
        .filter(|v| {
            points
                .iter()
                .any(|(_, up, down)| up.contains(&(v / n)) && down.contains(&(v % n)))
        })
        .collect();
    Ok(LatticeImage {
        language: RecognizedLanguage::new(algebra, assignment, accept)?,
        join_assignment,
        meet_assignment,
        points,
    })
}

/// Canonical forms of `Tf(u)` over every source element `u` of size at
/// most `source_size` accepted by `l`.
pub fn lattice_image_bruteforce(
    l: &RecognizedLanguage,
    f: &LetterMap,
    source_size: usize,
) -> Result<BTreeSet<LatticeTerm>> {
    let a = as_lattice(&l.algebra)?;
    let mut out = BTreeSet::new();
    for (u, _) in lattice_elements(&f.source, source_size) {
        let v = u
            .eval(&a, &l.assignment)
            .ok_or_else(|| RecognitionError::Unmapped(format!("{u}")))?;
        if l.accept.contains(&v) {
            let r = u.rename(f).ok_or_else(|| RecognitionError::Unmapped(format!("{u}")))?;
            out.insert(canonical_form(&r));
        }
    }
    Ok(out)
}

/// Compares the construction with the brute-force image on every target
/// element of size at most `bound`, allowing preimages of size up to
/// `bound + margin`.
pub fn lattice_cross_check(
    l: &RecognizedLanguage,
    f: &LetterMap,
    image: &LatticeImage,
    bound: usize,
    margin: usize,
) -> Result<CheckOutcome> {
    let brute = lattice_image_bruteforce(l, f, bound + margin)?;
    let mut checked = 0;
    for (r, _) in lattice_elements(&f.target, bound) {
        checked += 1;
        let t = r.to_term();
        let cand = image.language.member(&t)?;
        if cand != brute.contains(&r) {
            let side = if cand {
                "accepted by the construction but without a preimage within the bound"
            } else {
                "in the brute-force image but rejected by the construction"
            };
            return Ok(CheckOutcome::Refuted(Witness {
                summary: format!("{t} is {side}"),
                terms: vec![("term".into(), t)],
                evidence: vec![format!("bound {bound} margin {margin}")],
            }));
        }
    }
    let bounds = Bounds::from([
        ("bound".to_string(), bound),
        ("margin".to_string(), margin),
        ("classes".to_string(), checked),
    ]);
    Ok(CheckOutcome::Verified(bounds))
}

/// `t₁ = p∧q`, `t₂ = p∨q` and `t = (t₁∨s)∧t₂`.
pub fn chain_example() -> (LatticeTerm, LatticeTerm, LatticeTerm, LatticeTerm) {
    let (p, q, s) = (LatticeTerm::gen("p"), LatticeTerm::gen("q"), LatticeTerm::gen("s"));
    let t1 = LatticeTerm::meet(vec![p.clone(), q.clone()]);
    let t2 = LatticeTerm::join(vec![p, q]);
    let t = LatticeTerm::meet(vec![LatticeTerm::join(vec![t1.clone(), s.clone()]), t2.clone()]);
    (t1, t, t2, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_studies::fixtures::two_element_lattice;

    fn g(x: &str) -> LatticeTerm {
        LatticeTerm::gen(x)
    }

    #[test]
    fn whitman_examples() {
        let pq = LatticeTerm::meet(vec![g("p"), g("q")]);
        let pr = LatticeTerm::join(vec![g("p"), g("r")]);
        assert!(whitman_leq(&pq, &pr));
        assert!(!whitman_leq(&g("p"), &g("q")));
    }

    #[test]
    fn chain() {
        let (t1, t, t2, s) = chain_example();
        assert!(whitman_leq(&t1, &t) && !whitman_leq(&t, &t1));
        assert!(whitman_leq(&t, &t2) && !whitman_leq(&t2, &t));
        for x in [&t1, &t2] {
            assert!(!whitman_leq(&s, x) && !whitman_leq(x, &s));
        }
        let cf = canonical_form(&t);
        assert!(cf.generators().contains("s"));
        assert_eq!(canonical_form(&cf), cf);
    }

    #[test]
    fn canonical_examples() {
        let t = LatticeTerm::join(vec![g("p"), LatticeTerm::meet(vec![g("p"), g("q")])]);
        assert_eq!(canonical_form(&t), g("p"));
        let pq = LatticeTerm::meet(vec![g("p"), g("q")]);
        let pqr = LatticeTerm::meet(vec![g("p"), g("q"), g("r")]);
        assert_eq!(canonical_form(&LatticeTerm::join(vec![pq.clone(), pqr])), pq);
    }

    #[test]
    fn free_lattice_on_two_generators_has_four_elements() {
        let els = lattice_elements(&["a".to_string(), "b".to_string()], 5);
        assert_eq!(els.len(), 4);
    }

    #[test]
    fn two_element_collapse() {
        let a = two_element_lattice();
        let l = RecognizedLanguage::new(
            a,
            BTreeMap::from([("a".into(), 0), ("b".into(), 1)]),
            BTreeSet::from([1]),
        )
        .unwrap();
        let f = LetterMap::new(&["a", "b"], &["c"], &[("a", "c"), ("b", "c")]).unwrap();
        let img = lattice_direct_image(&l, &f).unwrap();
        assert!(img.language.member(&Term::letter("c")).unwrap());
        assert!(lattice_cross_check(&l, &f, &img, 3, 2).unwrap().is_verified());
    }
}

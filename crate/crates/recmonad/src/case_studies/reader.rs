//! The reader monad on eventually-constant sequences: rectangular
//! languages, their direct images, and the finite algebra `Σ^I`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::presentation::LetterMap;
use crate::recognition::RecognitionError;

type Result<T> = std::result::Result<T, RecognitionError>;

/// The sequence `prefix · tail^ω`, positions counted from 1. Trailing
/// prefix entries equal to the tail are absorbed, so equal sequences have
/// equal representations.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventuallyConstant<T> {
    prefix: Vec<T>,
    tail: T,
}

pub type EventuallyConstantWord = EventuallyConstant<String>;

impl<T: Clone + PartialEq> EventuallyConstant<T> {
    pub fn new(mut prefix: Vec<T>, tail: T) -> Self {
        while prefix.last() == Some(&tail) {
            prefix.pop();
        }
        EventuallyConstant { prefix, tail }
    }

    /// The constant sequence, the unit of the monad.
    pub fn constant(x: T) -> Self {
        Self::new(Vec::new(), x)
    }

    pub fn prefix(&self) -> &[T] {
        &self.prefix
    }

    pub fn tail(&self) -> &T {
        &self.tail
    }

    /// Entry at position `n ≥ 1`.
    pub fn at(&self, n: usize) -> &T {
        self.prefix.get(n - 1).unwrap_or(&self.tail)
    }

    /// Pointwise map (the functor action).
    pub fn map<U: Clone + PartialEq>(&self, f: impl Fn(&T) -> U) -> EventuallyConstant<U> {
        EventuallyConstant::new(self.prefix.iter().map(&f).collect(), f(&self.tail))
    }
}

impl<T: Clone + PartialEq> EventuallyConstant<EventuallyConstant<T>> {
    /// The diagonal: entry `n` of entry `n`. Beyond both the outer prefix
    /// and the tail's prefix the diagonal is the tail's tail.
    pub fn flatten(&self) -> EventuallyConstant<T> {
        let len = self.prefix.len().max(self.tail.prefix.len());
        let prefix = (1..=len).map(|n| self.at(n).at(n).clone()).collect();
        EventuallyConstant::new(prefix, self.tail.tail.clone())
    }
}

impl fmt::Display for EventuallyConstantWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})^ω", self.prefix.concat(), self.tail)
    }
}

/// `Z₁ × Z₂ × ⋯` with `Zₙ` the full alphabet outside the constrained
/// positions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RectangularLanguage {
    pub constrained: BTreeMap<usize, BTreeSet<String>>,
}

impl RectangularLanguage {
    pub fn new(constrained: BTreeMap<usize, BTreeSet<String>>) -> Self {
        RectangularLanguage { constrained }
    }

    pub fn member(&self, w: &EventuallyConstantWord) -> bool {
        self.constrained.iter().all(|(&n, z)| z.contains(w.at(n)))
    }

    pub fn is_empty(&self) -> bool {
        self.constrained.values().any(|z| z.is_empty())
    }

    pub fn positions(&self) -> Vec<usize> {
        self.constrained.keys().copied().collect()
    }
}

/// Applies `f` to every constrained set; unconstrained positions stay full
/// because `f` is surjective.
pub fn reader_direct_image(
    langs: &[RectangularLanguage],
    f: &LetterMap,
) -> Result<Vec<RectangularLanguage>> {
    if !f.surjective {
        return Err(RecognitionError::NotSurjective(f.target.clone()));
    }
    langs
        .iter()
        .map(|l| {
            let constrained = l
                .constrained
                .iter()
                .map(|(&n, z)| {
                    let image = z
                        .iter()
                        .map(|x| {
                            f.apply(x)
                                .map(str::to_string)
                                .ok_or_else(|| RecognitionError::Unmapped(x.clone()))
                        })
                        .collect::<Result<_>>()?;
                    Ok((n, image))
                })
                .collect::<Result<_>>()?;
            Ok(RectangularLanguage { constrained })
        })
        .collect()
}

/// Membership in a finite union.
pub fn union_member(langs: &[RectangularLanguage], w: &EventuallyConstantWord) -> bool {
    langs.iter().any(|l| l.member(w))
}

/// Every word over `alphabet` whose prefix has exactly `len` entries
/// followed by any tail letter; up to normalization these are all words
/// whose value at positions `> len` is constant.
pub fn words_with_prefix(alphabet: &[String], len: usize) -> Vec<EventuallyConstantWord> {
    let mut prefixes: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..len {
        prefixes = prefixes
            .into_iter()
            .flat_map(|p| {
                alphabet.iter().map(move |x| {
                    let mut q = p.clone();
                    q.push(x.clone());
                    q
                })
            })
            .collect();
    }
    let mut out: Vec<EventuallyConstantWord> = prefixes
        .iter()
        .flat_map(|p| alphabet.iter().map(|t| EventuallyConstant::new(p.clone(), t.clone())))
        .collect();
    out.sort();
    out.dedup();
    out
}

/// The exact image of a finite union, restricted to words that are
/// constant beyond the last constrained position: every such word
/// over the source is renamed and kept if it lies in the union.
pub fn reader_image_bruteforce(
    langs: &[RectangularLanguage],
    f: &LetterMap,
) -> Result<BTreeSet<EventuallyConstantWord>> {
    let len = horizon(langs);
    let mut out = BTreeSet::new();
    for w in words_with_prefix(&f.source, len) {
        if union_member(langs, &w) {
            if let Some(x) = w.prefix().iter().chain([w.tail()]).find(|x| f.apply(x).is_none()) {
                return Err(RecognitionError::Unmapped(x.clone()));
            }
            let r = w.map(|x| f.apply(x).unwrap().to_string());
            out.insert(r);
        }
    }
    Ok(out)
}

/// The largest constrained position, or 0.
pub fn horizon(langs: &[RectangularLanguage]) -> usize {
    langs
        .iter()
        .flat_map(|l| l.constrained.keys())
        .max()
        .map_or(0, |&n| n)
}

/// The finite reader algebra `Σ^I` for a nonempty rectangular language:
/// an element is a tuple of letters indexed by the constrained positions,
/// a sequence of elements acts diagonally, and a word `w` is sent to
/// `(w_n)_{n ∈ I}`.
#[derive(Clone, Debug)]
pub struct ReaderRecognizer {
    pub alphabet: Vec<String>,
    pub positions: Vec<usize>,
    /// Per position, the indices of the allowed letters.
    accept: Vec<BTreeSet<usize>>,
}

impl ReaderRecognizer {
    pub fn new(l: &RectangularLanguage, alphabet: &[String]) -> Result<Self> {
        if l.is_empty() {
            return Err(RecognitionError::Precondition("a constrained set is empty".into()));
        }
        let accept = l
            .constrained
            .values()
            .map(|z| {
                z.iter()
                    .map(|x| {
                        alphabet
                            .iter()
                            .position(|y| y == x)
                            .ok_or_else(|| RecognitionError::Unmapped(x.clone()))
                    })
                    .collect::<Result<BTreeSet<usize>>>()
            })
            .collect::<Result<_>>()?;
        Ok(ReaderRecognizer {
            alphabet: alphabet.to_vec(),
            positions: l.positions(),
            accept,
        })
    }

    /// `|Σ|^|I|`.
    pub fn carrier_size(&self) -> usize {
        self.alphabet.len().pow(self.positions.len() as u32)
    }

    /// Element as a tuple of letter indices, one per constrained position.
    pub fn decode(&self, e: usize) -> Vec<usize> {
        let k = self.alphabet.len();
        let mut e = e;
        let mut out = vec![0; self.positions.len()];
        for slot in out.iter_mut().rev() {
            *slot = e % k;
            e /= k;
        }
        out
    }

    pub fn encode(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &x| acc * self.alphabet.len() + x)
    }

    /// The structure map: position `i` of the result is position `i` of
    /// the `n_i`-th element.
    pub fn act(&self, seq: &EventuallyConstant<usize>) -> usize {
        let tuple: Vec<usize> = self
            .positions
            .iter()
            .enumerate()
            .map(|(i, &n)| self.decode(*seq.at(n))[i])
            .collect();
        self.encode(&tuple)
    }

    /// The unit sends a letter to the tuple repeating it.
    pub fn letter(&self, x: &str) -> Result<usize> {
        let i = self
            .alphabet
            .iter()
            .position(|y| y == x)
            .ok_or_else(|| RecognitionError::Unmapped(x.to_string()))?;
        Ok(self.encode(&vec![i; self.positions.len()]))
    }

    /// `h(w) = α(T h₀ (w))`.
    pub fn hom(&self, w: &EventuallyConstantWord) -> Result<usize> {
        let letters = EventuallyConstant::new(
            w.prefix().iter().map(|x| self.letter(x)).collect::<Result<_>>()?,
            self.letter(w.tail())?,
        );
        Ok(self.act(&letters))
    }

    pub fn accepts(&self, e: usize) -> bool {
        self.decode(e)
            .iter()
            .zip(&self.accept)
            .all(|(x, z)| z.contains(x))
    }

    pub fn member(&self, w: &EventuallyConstantWord) -> Result<bool> {
        Ok(self.accepts(self.hom(w)?))
    }

    /// `α(η(a)) = a`.
    pub fn unit_law(&self, e: usize) -> bool {
        self.act(&EventuallyConstant::constant(e)) == e
    }

    /// `α(μ(W)) = α(Tα(W))`.
    pub fn associativity_law(&self, w: &EventuallyConstant<EventuallyConstant<usize>>) -> bool {
        self.act(&w.flatten()) == self.act(&w.map(|s| self.act(s)))
    }
}

/// Totals of an image comparison; `failure` describes the first mismatch.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReaderCheck {
    pub instances: usize,
    pub words: usize,
    pub failure: Option<String>,
}

fn letters(k: usize, base: u8) -> Vec<String> {
    (0..k as u8).map(|i| ((base + i) as char).to_string()).collect()
}

/// Every map from `source` onto `target`.
fn surjections(source: &[String], target: &[String]) -> Vec<LetterMap> {
    let k = target.len();
    let mut out = Vec::new();
    for code in 0..k.pow(source.len() as u32) {
        let pairs: Vec<(&str, &str)> = source
            .iter()
            .enumerate()
            .map(|(i, x)| (x.as_str(), target[code / k.pow(i as u32) % k].as_str()))
            .collect();
        let src: Vec<&str> = source.iter().map(String::as_str).collect();
        let tgt: Vec<&str> = target.iter().map(String::as_str).collect();
        if let Ok(f) = LetterMap::new(&src, &tgt, &pairs) {
            if f.surjective {
                out.push(f);
            }
        }
    }
    out
}

fn subsets(alphabet: &[String]) -> Vec<BTreeSet<String>> {
    (0..1usize << alphabet.len())
        .map(|m| {
            alphabet
                .iter()
                .enumerate()
                .filter(|(i, _)| m >> i & 1 == 1)
                .map(|(_, x)| x.clone())
                .collect()
        })
        .collect()
}

/// Every rectangular language over `alphabet` constraining a subset of
/// `1..=max_position`, each constrained position to any subset.
fn rectangular_languages(alphabet: &[String], max_position: usize) -> Vec<RectangularLanguage> {
    let sets = subsets(alphabet);
    let mut out = vec![RectangularLanguage::default()];
    for n in 1..=max_position {
        let mut next = Vec::new();
        for l in &out {
            next.push(l.clone());
            for z in &sets {
                let mut c = l.constrained.clone();
                c.insert(n, z.clone());
                next.push(RectangularLanguage::new(c));
            }
        }
        out = next;
    }
    out
}

/// Compares the image construction with the brute-force image, and the
/// recognizer with direct membership, for every alphabet of at most
/// `max_alphabet` letters, every rectangular language constraining at
/// most `max_constrained` positions among `1..=max_position`, and every
/// surjection onto a smaller or equal alphabet. Every word constant
/// beyond the horizon is tested.
pub fn exhaustive_reader_check(
    max_alphabet: usize,
    max_position: usize,
    max_constrained: usize,
) -> Result<ReaderCheck> {
    let mut out = ReaderCheck::default();
    for k in 1..=max_alphabet {
        let sigma = letters(k, b'a');
        let langs = rectangular_languages(&sigma, max_position);
        for l in langs.into_iter().filter(|l| l.constrained.len() <= max_constrained) {
            if !l.is_empty() {
                let r = ReaderRecognizer::new(&l, &sigma)?;
                for w in words_with_prefix(&sigma, max_position + 1) {
                    out.words += 1;
                    if r.member(&w)? != l.member(&w) && out.failure.is_none() {
                        out.failure = Some(format!("recognizer disagrees on {w} for {:?}", l.constrained));
                    }
                }
            }
            for j in 1..=k {
                for f in surjections(&sigma, &letters(j, b'x')) {
                    out.instances += 1;
                    let langs = [l.clone()];
                    let image = reader_direct_image(&langs, &f)?;
                    let brute = reader_image_bruteforce(&langs, &f)?;
                    for w in words_with_prefix(&f.target, horizon(&langs)) {
                        out.words += 1;
                        if union_member(&image, &w) != brute.contains(&w) && out.failure.is_none() {
                            out.failure = Some(format!("image disagrees on {w} for {:?}", l.constrained));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `count` random words, each against a random rectangular language over
/// `{a,b,c}` and a random surjection onto `{x,y}`: recognizer membership
/// is compared with direct membership, and image membership of the
/// renamed word with a search over all its preimages.
pub fn random_reader_check(count: usize, seed: u64) -> Result<ReaderCheck> {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(seed);
    let sigma = letters(3, b'a');
    let maps = surjections(&sigma, &letters(2, b'x'));
    let mut out = ReaderCheck::default();
    for _ in 0..count {
        let mut c = BTreeMap::new();
        for n in 1..=4 {
            if rng.gen_bool(0.5) {
                let z: BTreeSet<String> = sigma.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
                if !z.is_empty() {
                    c.insert(n, z);
                }
            }
        }
        let l = RectangularLanguage::new(c);
        let len = rng.gen_range(0..=5);
        let prefix: Vec<String> = (0..len).map(|_| sigma[rng.gen_range(0..3)].clone()).collect();
        let w = EventuallyConstant::new(prefix, sigma[rng.gen_range(0..3)].clone());
        let f = &maps[rng.gen_range(0..maps.len())];
        out.instances += 1;
        out.words += 1;
        if ReaderRecognizer::new(&l, &sigma)?.member(&w)? != l.member(&w) && out.failure.is_none() {
            out.failure = Some(format!("recognizer disagrees on {w} for {:?}", l.constrained));
        }
        let v = w.map(|x| f.apply(x).expect("total map").to_string());
        let langs = [l.clone()];
        let image = reader_direct_image(&langs, f)?;
        let reach = horizon(&langs).max(v.prefix().len());
        let found = words_with_prefix(&sigma, reach)
            .iter()
            .any(|u| l.member(u) && u.map(|x| f.apply(x).expect("total map").to_string()) == v);
        if union_member(&image, &v) != found && out.failure.is_none() {
            out.failure = Some(format!("image disagrees on {v} for {:?}", l.constrained));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|x| x.to_string()).collect()
    }

    fn ab() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    #[test]
    fn normalization_absorbs_tail() {
        let w = EventuallyConstant::new(vec!["a".to_string(), "b".into(), "b".into()], "b".to_string());
        assert_eq!(w, EventuallyConstant::new(vec!["a".to_string()], "b".to_string()));
        assert_eq!(w.at(1), "a");
        assert_eq!(w.at(7), "b");
    }

    #[test]
    fn image_examples() {
        let f = LetterMap::new(&["a", "b"], &["c", "d"], &[("a", "c"), ("b", "d")]).unwrap();
        let l = RectangularLanguage::new(BTreeMap::from([(1, s(&["a"]))]));
        let img = reader_direct_image(&[l], &f).unwrap();
        assert_eq!(img, vec![RectangularLanguage::new(BTreeMap::from([(1, s(&["c"]))]))]);
        assert_eq!(
            reader_direct_image(&[RectangularLanguage::default()], &f).unwrap(),
            vec![RectangularLanguage::default()]
        );
        let g = LetterMap::new(&["a", "b"], &["c", "d"], &[("a", "c"), ("b", "c")]).unwrap();
        let l = RectangularLanguage::new(BTreeMap::from([(1, s(&["a"])), (3, s(&["a", "b"]))]));
        assert!(matches!(reader_direct_image(&[l], &g), Err(RecognitionError::NotSurjective(_))));
    }

    #[test]
    fn recognizer_examples() {
        let l = RectangularLanguage::new(BTreeMap::from([(1, s(&["a"])), (2, s(&["a", "b"]))]));
        assert_eq!(ReaderRecognizer::new(&l, &ab()).unwrap().carrier_size(), 4);
        let full = ReaderRecognizer::new(&RectangularLanguage::default(), &ab()).unwrap();
        assert_eq!(full.carrier_size(), 1);
        let w = EventuallyConstant::new(vec!["b".to_string()], "a".to_string());
        assert!(full.member(&w).unwrap());
        let l = RectangularLanguage::new(BTreeMap::from([(1, s(&["a"]))]));
        assert!(!ReaderRecognizer::new(&l, &ab()).unwrap().member(&w).unwrap());
    }

    #[test]
    fn flatten_is_diagonal() {
        let rows = EventuallyConstant::new(
            vec![
                EventuallyConstant::new(vec![1, 2, 3], 4),
                EventuallyConstant::new(vec![5, 6], 7),
            ],
            EventuallyConstant::new(vec![8, 9, 10, 11], 12),
        );
        let d = rows.flatten();
        assert_eq!((1..=6).map(|n| *d.at(n)).collect::<Vec<_>>(), vec![1, 6, 10, 11, 12, 12]);
    }

    #[test]
    fn small_exhaustive_check() {
        let r = exhaustive_reader_check(2, 2, 2).unwrap();
        assert_eq!(r.failure, None);
        assert!(r.instances > 0);
    }

    #[test]
    fn random_check_is_reproducible() {
        let a = random_reader_check(50, 7).unwrap();
        assert_eq!(a, random_reader_check(50, 7).unwrap());
        assert_eq!(a.failure, None);
    }
}

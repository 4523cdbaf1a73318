//! Direct images for the theory `x·(y·(y·z)) = x·(y·z)` through the
//! algebra of pairs of nonempty subsets, one for left sons and one for
//! right sons.

use std::collections::{BTreeMap, BTreeSet};

use crate::finite_algebra::{search_models, AlgebraError, FiniteAlgebra, OpTable};
use crate::monad_props::CheckOutcome;
use crate::presentation::{LetterMap, Term};
use crate::recognition::{cross_check, CrossCheck, LanguageSpec, RecognitionError, RecognizedLanguage};

use super::fixtures;

type Result<T> = std::result::Result<T, RecognitionError>;

/// Pair `(α_L, α_R)` of nonempty subsets, as bit masks, encoded as
/// `(α_L - 1) * (2^n - 1) + (α_R - 1)`.
fn encode(n: usize, l: u64, r: u64) -> u32 {
    let m = (1u64 << n) - 1;
    ((l - 1) * m + (r - 1)) as u32
}

fn decode(n: usize, e: u32) -> (u64, u64) {
    let m = (1u64 << n) - 1;
    (e as u64 / m + 1, e as u64 % m + 1)
}

fn elements(mask: u64) -> impl Iterator<Item = u32> {
    (0..64u32).filter(move |i| mask >> i & 1 == 1)
}

fn show(a: &FiniteAlgebra, mask: u64) -> String {
    let names: Vec<String> = elements(mask).map(|x| a.name(x)).collect();
    format!("{{{}}}", names.join("|"))
}

/// `(α_L, α_R)·(β_L, β_R) = ({a·b}, {a₁·(a₂·(⋯(aₙ·b)))})` with every
/// `a, aᵢ ∈ α_L`, `b ∈ β_R`, `n ≥ 1`.
pub fn powerset_squared(a: &FiniteAlgebra) -> Result<FiniteAlgebra> {
    let p = fixtures::theory("xyyz").expect("built-in theory");
    if a.presentation != p {
        return Err(RecognitionError::Precondition(
            "the recognizer must be an algebra for x·(y·(y·z)) = x·(y·z)".into(),
        ));
    }
    let n = a.size;
    let m = (1usize << n) - 1;
    let size = m * m;
    if n > 6 {
        return Err(RecognitionError::Budget((size as u128).pow(2)));
    }
    let dot = |x: u32, y: u32| a.apply(0, &[x, y]);
    let mut table = vec![0u32; size * size];
    for al in 1..=m as u64 {
        for br in 1..=m as u64 {
            let mut first = 0u64;
            for x in elements(al) {
                for y in elements(br) {
                    first |= 1 << dot(x, y);
                }
            }
            let mut second = first;
            loop {
                let mut next = second;
                for x in elements(al) {
                    for y in elements(second) {
                        next |= 1 << dot(x, y);
                    }
                }
                if next == second {
                    break;
                }
                second = next;
            }
            for ar in 1..=m as u64 {
                for bl in 1..=m as u64 {
                    table[encode(n, al, ar) as usize * size + encode(n, bl, br) as usize] =
                        encode(n, first, second);
                }
            }
        }
    }
    let names = (0..size as u32)
        .map(|e| {
            let (l, r) = decode(n, e);
            format!("({},{})", show(a, l), show(a, r))
        })
        .collect();
    let ops = vec![OpTable {
        name: "dot".into(),
        arity: 2,
        table,
    }];
    Ok(FiniteAlgebra::from_parts(p, size, ops, Some(names)))
}

/// The image recognizer: `Ā`, letters sent to `(h₀(f⁻¹(y)), h₀(f⁻¹(y)))`,
/// accepting the pairs whose left component meets `S`.
#[derive(Clone, Debug)]
pub struct PowersetSquaredImage {
    pub language: RecognizedLanguage,
    pub cross_check: CheckOutcome,
}

pub fn powerset_squared_image(
    l: &RecognizedLanguage,
    f: &LetterMap,
    cc: &CrossCheck,
) -> Result<PowersetSquaredImage> {
    if !f.surjective {
        return Err(RecognitionError::NotSurjective(f.target.clone()));
    }
    let a = &l.algebra;
    let bar = powerset_squared(a)?;
    if let Err(v) = bar.check_satisfies() {
        return Err(AlgebraError::FailsEquations(Box::new(v)).into());
    }
    let n = a.size;
    let mut assignment = BTreeMap::new();
    for y in &f.target {
        let mut mask = 0u64;
        for x in f.preimage(y) {
            let v = *l
                .assignment
                .get(x)
                .ok_or_else(|| RecognitionError::Unmapped(x.to_string()))?;
            mask |= 1 << v;
        }
        assignment.insert(y.clone(), encode(n, mask, mask));
    }
    let accept: BTreeSet<u32> = (0..bar.size as u32)
        .filter(|&e| elements(decode(n, e).0).any(|x| l.accept.contains(&x)))
        .collect();
    let language = RecognizedLanguage {
        algebra: bar,
        assignment,
        accept,
    };
    let outcome = cross_check(&LanguageSpec::Recognized(l), f, &l.algebra.presentation, &language, cc)?;
    Ok(PowersetSquaredImage {
        language,
        cross_check: outcome,
    })
}

/// The mixed term `b·(a₁·(a₂·c))` and its image `b·(a·(a·c))`.
pub fn witness_terms() -> (Term, Term) {
    let dot = |x: Term, y: Term| Term::app2("dot", x, y);
    let l = Term::letter;
    (
        dot(l("b"), dot(l("a1"), dot(l("a2"), l("c")))),
        dot(l("b"), dot(l("a"), dot(l("a"), l("c")))),
    )
}

/// First model of size at most 3 with an assignment of `a₁, a₂, b, c`
/// separating `b·(a₁·(a₂·c))` from both `b·(a₁·c)` and `b·(a₂·c)`; the
/// language is the preimage of the value of the mixed term. Also returns
/// `f: a₁,a₂ ↦ a`.
pub fn witness_language() -> Result<(RecognizedLanguage, LetterMap)> {
    let p = fixtures::theory("xyyz").expect("built-in theory");
    let (r, _) = witness_terms();
    let dot = |x: Term, y: Term| Term::app2("dot", x, y);
    let l = Term::letter;
    let pure = [dot(l("b"), dot(l("a1"), l("c"))), dot(l("b"), dot(l("a2"), l("c")))];
    let letters = ["a1", "a2", "b", "c"];
    for size in 1..=3 {
        for a in search_models(&p, size)? {
            let n = size as u32;
            for code in 0..n.pow(4) {
                let h0: BTreeMap<String, u32> = letters
                    .iter()
                    .enumerate()
                    .map(|(i, x)| (x.to_string(), code / n.pow(i as u32) % n))
                    .collect();
                let v = a.eval(&r, &h0)?;
                if pure.iter().all(|t| a.eval(t, &h0).map(|w| w != v).unwrap_or(false)) {
                    let f = LetterMap::new(
                        &letters,
                        &["a", "b", "c"],
                        &[("a1", "a"), ("a2", "a"), ("b", "b"), ("c", "c")],
                    )?;
                    return Ok((RecognizedLanguage::new(a, h0, BTreeSet::from([v]))?, f));
                }
            }
        }
    }
    Err(RecognitionError::Precondition("no separating model of size at most 3".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_point() -> FiniteAlgebra {
        FiniteAlgebra::new(
            fixtures::theory("xyyz").unwrap(),
            1,
            vec![OpTable {
                name: "dot".into(),
                arity: 2,
                table: vec![0],
            }],
            None,
        )
        .unwrap()
    }

    #[test]
    fn trivial_algebra_gives_trivial_pairs() {
        let bar = powerset_squared(&one_point()).unwrap();
        assert_eq!(bar.size, 1);
        let l = RecognizedLanguage::new(
            one_point(),
            [("a".to_string(), 0), ("b".to_string(), 0)].into(),
            BTreeSet::from([0]),
        )
        .unwrap();
        let f = LetterMap::new(&["a", "b"], &["c"], &[("a", "c"), ("b", "c")]).unwrap();
        let img = powerset_squared_image(&l, &f, &CrossCheck::new(3)).unwrap();
        assert!(img.language.member(&Term::letter("c")).unwrap());
        assert!(img.cross_check.is_verified());
    }

    #[test]
    fn mixed_preimage_reaches_image() {
        let (l, f) = witness_language().unwrap();
        let (r, t) = witness_terms();
        assert!(l.member(&r).unwrap());
        let cc = CrossCheck {
            margin: 2,
            max_universe: 250_000,
            ..CrossCheck::new(3)
        };
        let img = powerset_squared_image(&l, &f, &cc).unwrap();
        assert!(img.language.member(&t).unwrap());
        assert!(img.cross_check.is_verified(), "{:?}", img.cross_check);
    }

    #[test]
    fn identity_map_keeps_language() {
        let (l, _) = witness_language().unwrap();
        let id = LetterMap::identity(&l.alphabet());
        let img = powerset_squared_image(&l, &id, &CrossCheck::new(3)).unwrap();
        assert!(img.cross_check.is_verified(), "{:?}", img.cross_check);
    }
}

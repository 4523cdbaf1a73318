//! Words modulo `xxx = xx`: square-free words, rewrite steps in both
//! directions, and bounded membership in the closure of `Γ*0Γ*0`.

use std::collections::{HashMap, VecDeque};

/// Words are byte strings; letters are single ASCII characters.
pub type Word = Vec<u8>;

pub fn is_square_free(w: &[u8]) -> bool {
    (1..=w.len() / 2).all(|len| (0..=w.len() - 2 * len).all(|i| w[i..i + len] != w[i + len..i + 2 * len]))
}

/// All square-free words of exactly `length` over `alphabet`, in
/// lexicographic order of the alphabet.
pub fn squarefree_words(alphabet: &[u8], length: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(length);
    extend_square_free(alphabet, length, &mut cur, &mut out);
    out
}

fn extend_square_free(alphabet: &[u8], length: usize, cur: &mut Word, out: &mut Vec<Word>) {
    if cur.len() == length {
        out.push(cur.clone());
        return;
    }
    for &x in alphabet {
        cur.push(x);
        // Only squares ending at the new letter can be new.
        let n = cur.len();
        let fresh = (1..=n / 2).all(|len| cur[n - 2 * len..n - len] != cur[n - len..]);
        if fresh {
            extend_square_free(alphabet, length, cur, out);
        }
        cur.pop();
    }
}

/// Words one step of `xxx → xx` (shrinking) or `xx → xxx` (growing) away.
pub fn rewrite_neighbors(w: &[u8]) -> Vec<Word> {
    let mut out = Vec::new();
    for len in 1..=w.len() / 2 {
        for i in 0..=w.len() - 2 * len {
            if w[i..i + len] != w[i + len..i + 2 * len] {
                continue;
            }
            let mut grown = w[..i + 2 * len].to_vec();
            grown.extend_from_slice(&w[i..i + len]);
            grown.extend_from_slice(&w[i + 2 * len..]);
            out.push(grown);
            if i + 3 * len <= w.len() && w[i..i + len] == w[i + 2 * len..i + 3 * len] {
                let mut shrunk = w[..i + 2 * len].to_vec();
                shrunk.extend_from_slice(&w[i + 3 * len..]);
                out.push(shrunk);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Membership in `Γ*0Γ*0` with `Γ = {a,b,c}`.
pub fn in_base(w: &[u8]) -> bool {
    w.iter().filter(|&&x| x == b'0').count() == 2
        && w.last() == Some(&b'0')
        && w.iter().all(|x| b"abc0".contains(x))
}

/// Membership in `Γ*0Γ*1`.
pub fn in_source(w: &[u8]) -> bool {
    w.iter().filter(|&&x| x == b'0').count() == 1
        && w.iter().filter(|&&x| x == b'1').count() == 1
        && w.last() == Some(&b'1')
        && w.iter().all(|x| b"abc01".contains(x))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BurnsideVerdict {
    /// A rewrite path from the input to a base word, both ends included.
    Member(Vec<Word>),
    /// `definitive` holds when the input is square-free, so its class is
    /// the input alone; otherwise the search only covered words up to the
    /// length budget.
    NonMember { definitive: bool, explored: usize },
}

/// Breadth-first search over rewrite steps from `w`, visiting words no
/// longer than `length_budget`, for a word accepted by `base`.
pub fn burnside_member(w: &[u8], base: &dyn Fn(&[u8]) -> bool, length_budget: usize) -> BurnsideVerdict {
    let mut parent: HashMap<Word, Option<Word>> = HashMap::from([(w.to_vec(), None)]);
    let mut queue = VecDeque::from([w.to_vec()]);
    while let Some(u) = queue.pop_front() {
        if base(&u) {
            let mut trace = vec![u.clone()];
            let mut cur = u;
            while let Some(Some(p)) = parent.get(&cur) {
                trace.push(p.clone());
                cur = p.clone();
            }
            trace.reverse();
            return BurnsideVerdict::Member(trace);
        }
        for v in rewrite_neighbors(&u) {
            if v.len() <= length_budget && !parent.contains_key(&v) {
                parent.insert(v.clone(), Some(u.clone()));
                queue.push_back(v);
            }
        }
    }
    BurnsideVerdict::NonMember {
        definitive: is_square_free(w),
        explored: parent.len(),
    }
}

/// Checks that one rewrite step never leaves `Γ*0Γ*1`, for every word of
/// the language up to `max_len`; returns the number of words checked and
/// the first escaping step, if any.
pub fn check_source_closed(max_len: usize) -> (usize, Option<(Word, Word)>) {
    let mut checked = 0;
    for len in 2..=max_len {
        // u 0 v 1 with |u| + |v| = len - 2
        for split in 0..=len - 2 {
            for u in all_words(b"abc", split) {
                for v in all_words(b"abc", len - 2 - split) {
                    let mut w = u.clone();
                    w.push(b'0');
                    w.extend_from_slice(&v);
                    w.push(b'1');
                    checked += 1;
                    if let Some(bad) = rewrite_neighbors(&w).into_iter().find(|x| !in_source(x)) {
                        return (checked, Some((w, bad)));
                    }
                }
            }
        }
    }
    (checked, None)
}

fn all_words(alphabet: &[u8], len: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                alphabet.iter().map(move |&x| {
                    let mut w = w.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

/// `v0w0v0`.
pub fn v0w0v0(v: &[u8], w: &[u8]) -> Word {
    let mut out = Vec::new();
    for part in [v, w, v] {
        out.extend_from_slice(part);
        out.push(b'0');
    }
    out
}

/// Over square-free `v ≠ w` up to `max_len`, the first pair for which
/// `v0w0v0` has a square; `same_length` restricts to `|v| = |w|`.
pub fn v0w0v0_counterexample(max_len: usize, same_length: bool) -> Option<(Word, Word)> {
    let words: Vec<Word> = (1..=max_len).flat_map(|n| squarefree_words(b"abc", n)).collect();
    for v in &words {
        for w in &words {
            if v == w || (same_length && v.len() != w.len()) {
                continue;
            }
            if !is_square_free(&v0w0v0(v, w)) {
                return Some((v.clone(), w.clone()));
            }
        }
    }
    None
}

pub fn show(w: &[u8]) -> String {
    String::from_utf8_lossy(w).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_free_counts() {
        assert_eq!(squarefree_words(b"abc", 1).len(), 3);
        assert_eq!(squarefree_words(b"abc", 3).len(), 12);
        assert!(!squarefree_words(b"abc", 20).is_empty());
        for w in squarefree_words(b"abc", 8) {
            assert!(is_square_free(&w));
        }
    }

    #[test]
    fn square_free_enumeration_matches_filter() {
        for n in 0..7 {
            let brute: Vec<Word> = all_words(b"abc", n).into_iter().filter(|w| is_square_free(w)).collect();
            assert_eq!(squarefree_words(b"abc", n), brute);
        }
    }

    #[test]
    fn membership_examples() {
        assert!(matches!(burnside_member(b"a0a0", &in_base, 8), BurnsideVerdict::Member(t) if t.len() == 1));
        match burnside_member(b"a0a0a0", &in_base, 8) {
            BurnsideVerdict::Member(t) => assert_eq!(t, vec![b"a0a0a0".to_vec(), b"a0a0".to_vec()]),
            v => panic!("{v:?}"),
        }
        assert_eq!(
            burnside_member(b"ab0ba0ab0", &in_base, 12),
            BurnsideVerdict::NonMember { definitive: true, explored: 1 }
        );
    }

    #[test]
    fn neighbors_are_symmetric() {
        for w in [b"aab0".to_vec(), b"abab".to_vec(), b"aaaa".to_vec()] {
            for v in rewrite_neighbors(&w) {
                assert!(rewrite_neighbors(&v).contains(&w));
            }
        }
    }

    #[test]
    fn unequal_lengths_break_square_freeness() {
        assert_eq!(v0w0v0_counterexample(3, false), Some((b"a".to_vec(), b"ba".to_vec())));
        assert_eq!(v0w0v0_counterexample(5, true), None);
    }
}

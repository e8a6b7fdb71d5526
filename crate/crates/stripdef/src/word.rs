//! Free-group words over a finite generating set.
//!
//! A word is a string of nonzero integers: letter +k is the k-th generator
//! (1-based), -k its inverse. Conjugacy classes of a free group are in
//! bijection with cyclically reduced words up to rotation; representatives
//! are chosen as the lexicographically least rotation, and classes are
//! deduplicated under inversion (a geodesic and its reverse have the same
//! length).

use crate::isometry::Isometry;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Reduced word in a free group; letters are nonzero, +-(index + 1).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Word(pub Vec<i32>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    pub fn generator(index: usize) -> Self {
        Word(vec![index as i32 + 1])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Free reduction: cancel adjacent inverse pairs.
    pub fn reduced(letters: &[i32]) -> Self {
        let mut out: Vec<i32> = Vec::with_capacity(letters.len());
        for &l in letters {
            assert!(l != 0, "0 is not a letter");
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word::reduced(&v)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&l| -l).collect())
    }

    /// Cyclic reduction: strip matching first/last inverse pairs.
    pub fn cyclically_reduced(&self) -> Word {
        let w = Word::reduced(&self.0);
        let mut v = w.0;
        while v.len() >= 2 && v[0] == -v[v.len() - 1] {
            v.remove(0);
            v.pop();
        }
        Word(v)
    }

    /// Canonical conjugacy-class representative: the lexicographically least
    /// among all rotations of the cyclic reduction and of its inverse, with
    /// letters ordered g1 < g1^{-1} < g2 < g2^{-1} < ...
    pub fn conjugacy_rep(&self) -> Word {
        fn key(w: &[i32]) -> Vec<(u32, bool)> {
            w.iter().map(|&l| (l.unsigned_abs(), l < 0)).collect()
        }
        let c = self.cyclically_reduced();
        if c.is_empty() {
            return c;
        }
        let mut best: Option<Vec<i32>> = None;
        for cand in [&c, &c.inverse()] {
            let n = cand.0.len();
            for r in 0..n {
                let rot: Vec<i32> = cand.0[r..].iter().chain(&cand.0[..r]).copied().collect();
                if best.as_ref().is_none_or(|b| key(&rot) < key(b)) {
                    best = Some(rot);
                }
            }
        }
        Word(best.unwrap())
    }

    /// Holonomy evaluation: generator i maps to `gens[i]`.
    pub fn evaluate(&self, gens: &[Isometry]) -> Isometry {
        let mut acc = Isometry::identity();
        for &l in &self.0 {
            let g = gens[(l.unsigned_abs() as usize) - 1];
            acc = acc * if l > 0 { g } else { g.inverse() };
        }
        acc
    }
}

/// All reduced words of length 1..=max_len over `rank` generators.
pub fn reduced_words(rank: usize, max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<i32>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for g in 1..=rank as i32 {
                for l in [g, -g] {
                    if w.last() != Some(&-l) {
                        let mut v = w.clone();
                        v.push(l);
                        next.push(v);
                    }
                }
            }
        }
        out.extend(next.iter().cloned().map(Word));
        frontier = next;
    }
    out
}

/// One canonical representative per nontrivial conjugacy class with
/// cyclically reduced length <= max_len, deduplicated under inversion;
/// sorted (length, then lexicographic).
pub fn conjugacy_classes(rank: usize, max_len: usize) -> Vec<Word> {
    let mut set = BTreeSet::new();
    for w in reduced_words(rank, max_len) {
        let c = w.conjugacy_rep();
        if c.len() == w.len() && !c.is_empty() {
            set.insert(c);
        }
    }
    let mut v: Vec<Word> = set.into_iter().collect();
    v.sort_by(|a, b| a.len().cmp(&b.len()).then(a.0.cmp(&b.0)));
    v
}

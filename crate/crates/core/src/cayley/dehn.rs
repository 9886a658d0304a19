//! Dehn's algorithm for presentations satisfying the metric small
//! cancellation condition C'(1/6).

use std::collections::HashMap;

use super::word::{free_reduce, inverse, Letter, Word};
use super::GroupError;

/// Relators closed under cyclic permutation and inversion, indexed by a
/// prefix of just over half their length.
#[derive(Clone, Debug)]
pub struct Dehn {
    relators: Vec<Word>,
    by_prefix: HashMap<Word, Vec<usize>>,
    prefix_lengths: Vec<usize>,
}

impl Dehn {
    pub fn new(relators: &[Word]) -> Result<Self, GroupError> {
        let mut all: Vec<Word> = Vec::new();
        for r in relators {
            let r = free_reduce(r);
            if r.is_empty() || r.first() == r.last().map(|&l| l ^ 1).as_ref() {
                return Err(GroupError::NotCyclicallyReduced(super::word::format_word(&r)));
            }
            let rotations_repeat = (1..r.len()).any(|i| r[i..].iter().chain(&r[..i]).eq(r.iter()));
            if rotations_repeat {
                return Err(GroupError::NotSmallCancellation(super::word::format_word(&r)));
            }
            for w in [r.clone(), inverse(&r)] {
                for i in 0..w.len() {
                    let mut c = w[i..].to_vec();
                    c.extend_from_slice(&w[..i]);
                    if !all.contains(&c) {
                        all.push(c);
                    }
                }
            }
        }
        if let Some((piece, len)) = longest_piece(&all) {
            if 6 * piece.len() >= len {
                return Err(GroupError::NotSmallCancellation(super::word::format_word(&piece)));
            }
        }
        let mut by_prefix: HashMap<Word, Vec<usize>> = HashMap::new();
        let mut prefix_lengths = Vec::new();
        for (i, r) in all.iter().enumerate() {
            let k = r.len() / 2 + 1;
            by_prefix.entry(r[..k].to_vec()).or_default().push(i);
            if !prefix_lengths.contains(&k) {
                prefix_lengths.push(k);
            }
        }
        prefix_lengths.sort_unstable();
        Ok(Dehn {
            relators: all,
            by_prefix,
            prefix_lengths,
        })
    }

    /// Applies Dehn reductions until none applies. For a C'(1/6)
    /// presentation the result is empty iff the word is trivial.
    pub fn reduce(&self, w: &[Letter]) -> Word {
        let mut w = free_reduce(w);
        'outer: loop {
            for i in 0..w.len() {
                for &k in &self.prefix_lengths {
                    if i + k > w.len() {
                        continue;
                    }
                    let Some(cands) = self.by_prefix.get(&w[i..i + k]) else {
                        continue;
                    };
                    if let Some(&ri) = cands.first() {
                        let r = &self.relators[ri];
                        let mut m = k;
                        while m < r.len() && i + m < w.len() && w[i + m] == r[m] {
                            m += 1;
                        }
                        // w[i..i+m] = r[..m] and r[..m] r[m..] = 1.
                        let replacement = inverse(&r[m..]);
                        let mut next = w[..i].to_vec();
                        next.extend_from_slice(&replacement);
                        next.extend_from_slice(&w[i + m..]);
                        w = free_reduce(&next);
                        continue 'outer;
                    }
                }
            }
            return w;
        }
    }

    pub fn is_identity(&self, w: &[Letter]) -> bool {
        self.reduce(w).is_empty()
    }

    /// Whether `u` and `v` represent the same element.
    pub fn equal(&self, u: &[Letter], v: &[Letter]) -> bool {
        let mut w = u.to_vec();
        w.extend(inverse(v));
        self.is_identity(&w)
    }
}

/// Longest common prefix between distinct cyclic relator words, with the
/// length of the shorter relator involved.
fn longest_piece(all: &[Word]) -> Option<(Word, usize)> {
    let mut best: Option<(Word, usize)> = None;
    for (i, a) in all.iter().enumerate() {
        for b in &all[i + 1..] {
            let p = a.iter().zip(b).take_while(|(x, y)| x == y).count();
            let len = a.len().min(b.len());
            let better = match &best {
                None => p > 0,
                Some((w, l)) => p * l > w.len() * len,
            };
            if better {
                best = Some((a[..p].to_vec(), len));
            }
        }
    }
    best
}

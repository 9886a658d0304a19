//! Length-nonincreasing string rewriting with free cancellation built in.

use super::word::{format_word, free_reduce, inverse_letter, shortlex_less, Letter, Word};
use super::GroupError;

#[derive(Clone, Debug, PartialEq)]
pub struct RewritingSystem {
    pub generators: usize,
    pub rules: Vec<(Word, Word)>,
}

impl RewritingSystem {
    /// Validates that every rule strictly decreases in shortlex order.
    pub fn new(generators: usize, rules: Vec<(Word, Word)>) -> Result<Self, GroupError> {
        for (l, r) in &rules {
            if l.is_empty() || !shortlex_less(r, l) {
                return Err(GroupError::RuleNotReducing(format_word(l), format_word(r)));
            }
        }
        Ok(RewritingSystem { generators, rules })
    }

    /// Rules including the free cancellations `xX -> e`.
    fn all_rules(&self) -> Vec<(Word, Word)> {
        let mut all = self.rules.clone();
        for l in 0..(2 * self.generators) as Letter {
            all.push((vec![l, inverse_letter(l)], Vec::new()));
        }
        all
    }

    /// Irreducible form reached by leftmost rewriting.
    pub fn normal_form(&self, w: &[Letter]) -> Word {
        let mut w = free_reduce(w);
        loop {
            let mut hit = None;
            'scan: for i in 0..w.len() {
                for (l, r) in &self.rules {
                    if w[i..].starts_with(l) {
                        hit = Some((i, l.len(), r.clone()));
                        break 'scan;
                    }
                }
            }
            match hit {
                None => return w,
                Some((i, len, r)) => {
                    let mut next = w[..i].to_vec();
                    next.extend_from_slice(&r);
                    next.extend_from_slice(&w[i + len..]);
                    w = free_reduce(&next);
                }
            }
        }
    }

    /// Resolves every critical pair (overlaps and inclusions of left-hand
    /// sides) whose overlap word has length at most `max_len`.
    pub fn check_confluence(&self, max_len: usize) -> Result<(), GroupError> {
        let all = self.all_rules();
        for (i, (l1, r1)) in all.iter().enumerate() {
            for (j, (l2, r2)) in all.iter().enumerate() {
                // Proper overlaps: suffix of l1 equals prefix of l2.
                for k in 1..l1.len().min(l2.len()) {
                    if l1[l1.len() - k..] != l2[..k] {
                        continue;
                    }
                    let mut word = l1.clone();
                    word.extend_from_slice(&l2[k..]);
                    if word.len() > max_len {
                        continue;
                    }
                    let mut a = r1.clone();
                    a.extend_from_slice(&l2[k..]);
                    let mut b = l1[..l1.len() - k].to_vec();
                    b.extend_from_slice(r2);
                    self.join(&word, &a, &b)?;
                }
                // Inclusions: l2 occurs inside l1.
                if i != j && l2.len() <= l1.len() && l1.len() <= max_len {
                    for p in 0..=l1.len() - l2.len() {
                        if l1[p..p + l2.len()] == l2[..] {
                            let mut b = l1[..p].to_vec();
                            b.extend_from_slice(r2);
                            b.extend_from_slice(&l1[p + l2.len()..]);
                            self.join(l1, r1, &b)?;
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn join(&self, word: &[Letter], a: &[Letter], b: &[Letter]) -> Result<(), GroupError> {
        let (na, nb) = (self.normal_form(a), self.normal_form(b));
        if na != nb {
            return Err(GroupError::NotConfluent {
                word: format_word(word),
                left: format_word(&na),
                right: format_word(&nb),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::word::parse_word;
    use super::*;

    fn rule(l: &str, r: &str) -> (Word, Word) {
        (parse_word(l, 2).unwrap(), parse_word(r, 2).unwrap())
    }

    #[test]
    fn abelian_rules_are_confluent() {
        let sys = RewritingSystem::new(
            2,
            vec![rule("ba", "ab"), rule("bA", "Ab"), rule("Ba", "aB"), rule("BA", "AB")],
        )
        .unwrap();
        sys.check_confluence(8).unwrap();
        assert_eq!(format_word(&sys.normal_form(&parse_word("babA", 2).unwrap())), "bb");
    }

    #[test]
    fn detects_non_confluence() {
        // aa -> e together with ab -> e: the overlap aab reduces to b and to a.
        let sys = RewritingSystem::new(2, vec![rule("aa", ""), rule("ab", "")]).unwrap();
        assert!(matches!(
            sys.check_confluence(6),
            Err(GroupError::NotConfluent { .. })
        ));
    }

    #[test]
    fn rejects_increasing_rules() {
        assert!(RewritingSystem::new(2, vec![rule("ab", "ba")]).is_err());
        assert!(RewritingSystem::new(2, vec![rule("a", "bb")]).is_err());
    }
}

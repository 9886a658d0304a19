//! Letters and words over a generator alphabet with formal inverses.
//!
//! Generator `i` is written as the `i`-th lowercase letter of the alphabet
//! with `e` skipped (so `e` can denote the identity), its inverse as the
//! uppercase letter. A letter is encoded as `2 * generator + inverse_bit`.

use super::GroupError;

pub type Letter = u16;
pub type Word = Vec<Letter>;

const NAMES: &[u8; 25] = b"abcdfghijklmnopqrstuvwxyz";

pub const MAX_GENERATORS: usize = NAMES.len();

pub fn letter(generator: usize, inverse: bool) -> Letter {
    (generator * 2 + inverse as usize) as Letter
}

pub fn generator_of(l: Letter) -> usize {
    (l >> 1) as usize
}

pub fn inverse_letter(l: Letter) -> Letter {
    l ^ 1
}

pub fn inverse(w: &[Letter]) -> Word {
    w.iter().rev().map(|&l| inverse_letter(l)).collect()
}

pub fn letter_char(l: Letter) -> char {
    let c = NAMES[generator_of(l)] as char;
    if l & 1 == 1 {
        c.to_ascii_uppercase()
    } else {
        c
    }
}

/// Text form of a word; the empty word is `e`.
pub fn format_word(w: &[Letter]) -> String {
    if w.is_empty() {
        "e".to_string()
    } else {
        w.iter().map(|&l| letter_char(l)).collect()
    }
}

/// Parses a word over the first `generators` letters; `e` and the empty
/// string denote the identity. `^n` powers are not supported.
pub fn parse_word(text: &str, generators: usize) -> Result<Word, GroupError> {
    let t = text.trim();
    if t.is_empty() || t == "e" || t == "1" {
        return Ok(Vec::new());
    }
    t.chars()
        .map(|c| {
            let g = generator_index(c).filter(|&g| g < generators).ok_or(GroupError::UnknownLetter(c))?;
            Ok(letter(g, c.is_ascii_uppercase()))
        })
        .collect()
}

/// Generator index named by `c` in either case.
pub fn generator_index(c: char) -> Option<usize> {
    let lower = c.to_ascii_lowercase() as u8;
    NAMES.iter().position(|&n| n == lower)
}

/// Cancels adjacent inverse pairs.
pub fn free_reduce(w: &[Letter]) -> Word {
    let mut out: Word = Vec::with_capacity(w.len());
    for &l in w {
        if out.last() == Some(&inverse_letter(l)) {
            out.pop();
        } else {
            out.push(l);
        }
    }
    out
}

/// Shortlex order: shorter first, then lexicographic by letter code.
pub fn shortlex_less(a: &[Letter], b: &[Letter]) -> bool {
    (a.len(), a) < (b.len(), b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let w = parse_word("abAB", 2).unwrap();
        assert_eq!(w, vec![0, 2, 1, 3]);
        assert_eq!(format_word(&w), "abAB");
        assert_eq!(format_word(&inverse(&w)), "baBA");
        assert_eq!(format_word(&[]), "e");
        assert!(parse_word("c", 2).is_err());
        assert_eq!(format_word(&[letter(4, false)]), "f");
        assert!(parse_word("e", 6).unwrap().is_empty());
    }

    #[test]
    fn reduction() {
        let w = parse_word("abBAa", 2).unwrap();
        assert_eq!(format_word(&free_reduce(&w)), "a");
    }
}

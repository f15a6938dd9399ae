//! Reduced words in a free group of rank `n` and the prefix sets used to
//! decompose it.
//!
//! A letter is a nonzero `i32`: `+i` is the generator `x_i`, `-i` its
//! inverse. Generators are numbered from 1.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub type Letter = i32;

/// Sort key for letters: by generator index, then `+1` before `-1`.
fn letter_key(l: Letter) -> (u32, bool) {
    (l.unsigned_abs(), l < 0)
}

fn cmp_letters(a: &[Letter], b: &[Letter]) -> Ordering {
    a.iter()
        .map(|&l| letter_key(l))
        .cmp(b.iter().map(|&l| letter_key(l)))
}

fn check_rank(n: usize) -> Result<()> {
    if n < 2 {
        return Err(invalid(format!("rank must be at least 2, got {n}")));
    }
    if n > i32::MAX as usize {
        return Err(invalid("rank too large"));
    }
    Ok(())
}

/// All letters of rank `n` in canonical order.
pub fn alphabet(n: usize) -> Vec<Letter> {
    (1..=n as Letter).flat_map(|i| [i, -i]).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Word {
    rank: usize,
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity(rank: usize) -> Self {
        Word {
            rank,
            letters: Vec::new(),
        }
    }

    /// Freely reduces `raw`.
    pub fn reduce(rank: usize, raw: &[Letter]) -> Result<Self> {
        let mut letters: Vec<Letter> = Vec::with_capacity(raw.len());
        for &l in raw {
            if l == 0 || l.unsigned_abs() as usize > rank {
                return Err(invalid(format!("letter {l} out of range for rank {rank}")));
            }
            if letters.last() == Some(&-l) {
                letters.pop();
            } else {
                letters.push(l);
            }
        }
        Ok(Word { rank, letters })
    }

    /// Builds a word from letters already known to be reduced and in range.
    pub(crate) fn from_reduced(rank: usize, letters: Vec<Letter>) -> Self {
        debug_assert!(letters.windows(2).all(|p| p[0] != -p[1]));
        Word { rank, letters }
    }

    pub fn generator(rank: usize, letter: Letter) -> Result<Self> {
        Word::reduce(rank, &[letter])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Self {
        Word {
            rank: self.rank,
            letters: self.letters.iter().rev().map(|l| -l).collect(),
        }
    }

    pub fn multiply(&self, other: &Word) -> Result<Self> {
        if self.rank != other.rank {
            return Err(invalid(format!("rank mismatch: {} vs {}", self.rank, other.rank)));
        }
        let mut cancel = 0;
        while cancel < self.len().min(other.len())
            && self.letters[self.len() - 1 - cancel] == -other.letters[cancel]
        {
            cancel += 1;
        }
        let mut letters = Vec::with_capacity(self.len() + other.len() - 2 * cancel);
        letters.extend_from_slice(&self.letters[..self.len() - cancel]);
        letters.extend_from_slice(&other.letters[cancel..]);
        Ok(Word {
            rank: self.rank,
            letters,
        })
    }

    /// True iff `prefix` is an initial segment of this (reduced) word.
    pub fn starts_with(&self, prefix: &Word) -> bool {
        self.rank == prefix.rank && self.letters.starts_with(&prefix.letters)
    }

    /// Parses the textual form produced by `Display`, e.g. `x1.x2^-1.x3`.
    /// The identity is written `1`.
    pub fn parse(rank: usize, text: &str) -> Result<Self> {
        let text = text.trim();
        if text == "1" {
            return Ok(Word::identity(rank));
        }
        if text.is_empty() {
            return Err(invalid("empty word"));
        }
        let mut raw = Vec::new();
        for tok in text.split('.') {
            let body = tok
                .strip_prefix('x')
                .ok_or_else(|| invalid(format!("letter `{tok}` must start with `x`")))?;
            let (idx, exp) = match body.split_once('^') {
                Some((i, e)) => (i, e),
                None => (body, "1"),
            };
            let idx: u32 = idx
                .parse()
                .map_err(|_| invalid(format!("bad generator index in `{tok}`")))?;
            let sign = match exp {
                "1" | "+1" => 1,
                "-1" => -1,
                _ => return Err(invalid(format!("exponent must be 1 or -1 in `{tok}`"))),
            };
            if idx == 0 || idx > i32::MAX as u32 {
                return Err(invalid(format!("bad generator index in `{tok}`")));
            }
            raw.push(sign * idx as i32);
        }
        let w = Word::reduce(rank, &raw)?;
        if w.len() != raw.len() {
            return Err(invalid(format!("`{text}` is not reduced")));
        }
        Ok(w)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("1");
        }
        for (k, &l) in self.letters.iter().enumerate() {
            if k > 0 {
                f.write_str(".")?;
            }
            if l > 0 {
                write!(f, "x{l}")?;
            } else {
                write!(f, "x{}^-1", -l)?;
            }
        }
        Ok(())
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank
            .cmp(&other.rank)
            .then_with(|| cmp_letters(&self.letters, &other.letters))
    }
}

/// The five shapes of elements of the prefix set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PsiType {
    /// `x_i^{2t}`
    T1,
    /// `x_i^t x_j^{2s}`
    T2,
    /// `x_i^t x_j^s x_i^t`
    T3,
    /// `x_i^t x_j^s x_i^{-t}`
    T4,
    /// `x_i^t x_j^s x_k^p`, indices pairwise distinct
    T5,
}

impl PsiType {
    pub const ALL: [PsiType; 5] = [PsiType::T1, PsiType::T2, PsiType::T3, PsiType::T4, PsiType::T5];

    pub fn of(letters: &[Letter]) -> Option<PsiType> {
        match *letters {
            [a, b] if a == b => Some(PsiType::T1),
            [a, b, c] if a.abs() != b.abs() && b != -c => {
                if b == c {
                    Some(PsiType::T2)
                } else if c == a {
                    Some(PsiType::T3)
                } else if c == -a {
                    Some(PsiType::T4)
                } else if c.abs() != b.abs() {
                    Some(PsiType::T5)
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Closed-form count of this type among the prefix set of rank `n`.
    pub fn count(self, n: usize) -> usize {
        match self {
            PsiType::T1 => 2 * n,
            PsiType::T2 | PsiType::T3 | PsiType::T4 => 4 * n * (n - 1),
            PsiType::T5 => 8 * n * (n - 1) * (n.saturating_sub(2)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PsiElement {
    pub word: Word,
    pub kind: PsiType,
}

/// Total size of the prefix set, `2n + 4n(n-1) + 8n(n-1)^2`.
pub fn psi_count(n: usize) -> usize {
    2 * n + 4 * n * (n - 1) + 8 * n * (n - 1) * (n - 1)
}

/// The prefix set of rank `n` in canonical order, with a lookup table.
#[derive(Debug, Clone)]
pub struct Psi {
    rank: usize,
    elements: Vec<PsiElement>,
    lookup: HashMap<Vec<Letter>, usize>,
}

impl Psi {
    pub fn new(n: usize) -> Result<Self> {
        let elements = enumerate_psi(n)?;
        let lookup = elements
            .iter()
            .enumerate()
            .map(|(k, e)| (e.word.letters.clone(), k))
            .collect();
        Ok(Psi {
            rank: n,
            elements,
            lookup,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[PsiElement] {
        &self.elements
    }

    pub fn get(&self, idx: usize) -> &PsiElement {
        &self.elements[idx]
    }

    pub fn kind(&self, idx: usize) -> PsiType {
        self.elements[idx].kind
    }

    pub fn index_of_letters(&self, letters: &[Letter]) -> Option<usize> {
        self.lookup.get(letters).copied()
    }

    pub fn index_of(&self, w: &Word) -> Option<usize> {
        if w.rank != self.rank {
            return None;
        }
        self.index_of_letters(&w.letters)
    }

    /// The unique element of the prefix set that `letters` starts with, if
    /// any. Every reduced word of length at least 3 has one.
    pub fn prefix_class_of_letters(&self, letters: &[Letter]) -> Option<usize> {
        match letters {
            [a, b, ..] if a == b => self.index_of_letters(&letters[..2]),
            [_, _, _, ..] => self.index_of_letters(&letters[..3]),
            _ => None,
        }
    }

    pub fn prefix_class(&self, w: &Word) -> Option<usize> {
        if w.rank != self.rank {
            return None;
        }
        self.prefix_class_of_letters(&w.letters)
    }

    /// Indices of all elements starting with the given letters.
    pub fn starting_with(&self, prefix: &[Letter]) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| self.elements[k].word.letters.starts_with(prefix))
            .collect()
    }

    pub fn type_counts(&self) -> [usize; 5] {
        let mut counts = [0; 5];
        for e in &self.elements {
            counts[e.kind.index()] += 1;
        }
        counts
    }
}

/// Enumerates `x_i^{2t}`, `x_i^t x_j^{2s}` and `x_i^t x_j^s x_k^p`
/// (`i != j`, `j != k`) in canonical lexicographic order.
pub fn enumerate_psi(n: usize) -> Result<Vec<PsiElement>> {
    check_rank(n)?;
    let gens = alphabet(n);
    let mut words: Vec<Vec<Letter>> = Vec::with_capacity(psi_count(n));
    for &a in &gens {
        words.push(vec![a, a]);
        for &b in gens.iter().filter(|b| b.abs() != a.abs()) {
            for &c in gens.iter().filter(|&&c| c != -b) {
                // covers x_j^{2s} (c == b) and every third letter with k != j
                words.push(vec![a, b, c]);
            }
        }
    }
    words.sort_by(|x, y| cmp_letters(x, y));
    words
        .into_iter()
        .map(|letters| {
            let kind = PsiType::of(&letters)
                .ok_or_else(|| Error::Internal(format!("unclassifiable prefix {letters:?}")))?;
            Ok(PsiElement {
                word: Word::from_reduced(n, letters),
                kind,
            })
        })
        .collect()
}

/// Number of reduced words of length at most `max_len`.
pub fn ball_count(n: usize, max_len: usize) -> u128 {
    let k = 2 * n as u128 - 1;
    let mut total = 1u128;
    let mut layer = 2 * n as u128;
    for _ in 0..max_len {
        total += layer;
        layer *= k;
    }
    total
}

/// Reduced words of length exactly `len`, in canonical order.
pub fn enumerate_sphere(n: usize, len: usize) -> Result<Vec<Word>> {
    check_rank(n)?;
    let gens = alphabet(n);
    let mut layer: Vec<Vec<Letter>> = vec![Vec::new()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(layer.len() * (2 * n - 1) + 1);
        for w in &layer {
            for &g in &gens {
                if w.last() != Some(&-g) {
                    let mut v = w.clone();
                    v.push(g);
                    next.push(v);
                }
            }
        }
        layer = next;
    }
    Ok(layer.into_iter().map(|l| Word::from_reduced(n, l)).collect())
}

/// All reduced words of length at most `max_len`, shortest first.
pub fn enumerate_ball(n: usize, max_len: usize) -> Result<Vec<Word>> {
    check_rank(n)?;
    let mut out = Vec::new();
    for len in 0..=max_len {
        out.extend(enumerate_sphere(n, len)?);
    }
    Ok(out)
}

/// The elements `1`, `x_i^t`, `x_i^t x_j^s x_i^{-t}` used as left
/// multipliers in relations, without the identity.
pub fn gamma_star(n: usize) -> Result<Vec<Word>> {
    check_rank(n)?;
    let gens = alphabet(n);
    let mut out: Vec<Word> = gens.iter().map(|&g| Word::from_reduced(n, vec![g])).collect();
    for &a in &gens {
        for &b in gens.iter().filter(|b| b.abs() != a.abs()) {
            out.push(Word::from_reduced(n, vec![a, b, -a]));
        }
    }
    Ok(out)
}

/// Ball truncation used when none is given.
pub fn default_ball_length(n: usize) -> usize {
    match n {
        0..=2 => 6,
        3 => 5,
        _ => 4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(n: usize, l: &[Letter]) -> Word {
        Word::reduce(n, l).unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert!(w(3, &[1, -1]).is_identity());
        assert_eq!(w(3, &[1, 2, -2, 3]).letters(), &[1, 3]);
        assert_eq!(w(3, &[1, 2, 3]).letters(), &[1, 2, 3]);
        assert!(Word::reduce(2, &[3]).is_err());
        assert!(Word::reduce(2, &[0]).is_err());
    }

    #[test]
    fn multiply_examples() {
        let n = 3;
        assert_eq!(w(n, &[-1]).multiply(&w(n, &[1, 2, 3])).unwrap(), w(n, &[2, 3]));
        let x = w(n, &[2, -3, 1]);
        assert_eq!(Word::identity(n).multiply(&x).unwrap(), x);
        assert!(w(n, &[1, 2]).multiply(&w(n, &[-2, -1])).unwrap().is_identity());
        assert!(w(2, &[1]).multiply(&w(3, &[1])).is_err());
    }

    #[test]
    fn psi_counts_small() {
        let p = Psi::new(2).unwrap();
        assert_eq!(p.len(), 28);
        assert_eq!(p.type_counts(), [4, 8, 8, 8, 0]);
        let p3 = Psi::new(3).unwrap();
        assert_eq!(p3.len(), 126);
        assert_eq!(p3.type_counts()[4], 48);
        let conj = p.index_of(&w(2, &[1, 2, -1])).unwrap();
        assert_eq!(p.kind(conj), PsiType::T4);
        assert!(enumerate_psi(1).is_err());
    }

    #[test]
    fn psi_order_is_canonical() {
        let p = Psi::new(2).unwrap();
        let words: Vec<String> = p.elements().iter().take(3).map(|e| e.word.to_string()).collect();
        assert_eq!(words, ["x1.x1", "x1.x2.x1", "x1.x2.x1^-1"]);
        assert!(p.elements().windows(2).all(|e| e[0].word < e[1].word));
    }

    #[test]
    fn ball_examples() {
        assert_eq!(enumerate_ball(2, 1).unwrap().len(), 5);
        assert_eq!(enumerate_ball(2, 2).unwrap().len(), 17);
        assert_eq!(enumerate_ball(3, 3).unwrap().len(), 187);
        assert_eq!(ball_count(3, 3), 187);
    }

    #[test]
    fn starts_with_examples() {
        assert!(w(3, &[1, 2, 3, 1]).starts_with(&w(3, &[1, 2])));
        assert!(!w(3, &[2, 3]).starts_with(&w(3, &[1, 2])));
    }

    #[test]
    fn parse_and_display() {
        let x = w(3, &[1, -2, 3]);
        assert_eq!(x.to_string(), "x1.x2^-1.x3");
        assert_eq!(Word::parse(3, "x1.x2^-1.x3").unwrap(), x);
        assert_eq!(Word::parse(3, "1").unwrap(), Word::identity(3));
        assert!(Word::parse(3, "x1.x1^-1").is_err());
        assert!(Word::parse(3, "x4").is_err());
        assert!(Word::parse(3, "y1").is_err());
        assert!(Word::parse(3, "x1^2").is_err());
        assert!(Word::parse(3, "").is_err());
    }

    #[test]
    fn gamma_star_size() {
        // 2n generators and inverses plus 4n(n-1) conjugates
        assert_eq!(gamma_star(2).unwrap().len(), 4 + 8);
        assert_eq!(gamma_star(3).unwrap().len(), 6 + 24);
    }
}

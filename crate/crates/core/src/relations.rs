//! Relations `(gamma, psi, Psi_r)` between prefix classes, the collections
//! G and F built from them, and bounded brute-force verification of the
//! set identity `gamma J_psi = Gamma - (dots ∪ J_{Psi_r})`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::freegroup::{alphabet, enumerate_sphere, Letter, Psi, PsiElement, PsiType, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Family {
    R1a,
    R1b,
    R2a,
    R2b,
    R3a,
    R3b,
    R4a,
    R4b,
    R5a,
    R5b,
}

impl Family {
    pub const ALL: [Family; 10] = [
        Family::R1a,
        Family::R1b,
        Family::R2a,
        Family::R2b,
        Family::R3a,
        Family::R3b,
        Family::R4a,
        Family::R4b,
        Family::R5a,
        Family::R5b,
    ];

    /// The families making up the collection F.
    pub const F: [Family; 5] = [Family::R1a, Family::R2b, Family::R3a, Family::R4b, Family::R5a];

    pub fn in_f(self) -> bool {
        Family::F.contains(&self)
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::R1a => "1a",
            Family::R1b => "1b",
            Family::R2a => "2a",
            Family::R2b => "2b",
            Family::R3a => "3a",
            Family::R3b => "3b",
            Family::R4a => "4a",
            Family::R4b => "4b",
            Family::R5a => "5a",
            Family::R5b => "5b",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Number of relations of this family in G at rank `n`.
    pub fn expected_count(self, n: usize) -> usize {
        match self {
            Family::R1a => 2 * n,
            Family::R5a | Family::R5b => 8 * n * (n - 1) * n.saturating_sub(2),
            _ => 4 * n * (n - 1),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| invalid(format!("unknown family `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Relation {
    pub family: Family,
    pub gamma: Word,
    pub psi: PsiElement,
    /// Index of `psi` in the canonical prefix-set order.
    pub psi_index: usize,
    /// Sorted indices into the canonical prefix-set order.
    pub psi_set: Vec<usize>,
    /// Elements of `{1} ∪ Ξ ∪ Ξ^{-1}` excluded from the image.
    pub dot_set: Vec<Word>,
}

impl Relation {
    pub fn rank(&self) -> usize {
        self.gamma.rank()
    }

    pub fn psi_in_set(&self) -> bool {
        self.psi_set.binary_search(&self.psi_index).is_ok()
    }

    /// Per-type counts of `Psi_r`.
    pub fn type_counts(&self, psi: &Psi) -> [usize; 5] {
        let mut counts = [0; 5];
        for &k in &self.psi_set {
            counts[psi.kind(k).index()] += 1;
        }
        counts
    }
}

/// `{1} ∪ Ξ ∪ Ξ^{-1}` in canonical order.
pub fn gamma_one(n: usize) -> Vec<Word> {
    std::iter::once(Word::identity(n))
        .chain(alphabet(n).into_iter().map(|g| Word::from_reduced(n, vec![g])))
        .collect()
}

fn dot_set_for(family: Family, n: usize, first: Letter) -> Vec<Word> {
    let all = gamma_one(n);
    match family {
        Family::R1a => all.into_iter().filter(|w| w.letters() != [first]).collect(),
        Family::R4b => vec![Word::from_reduced(n, vec![first])],
        _ => all,
    }
}

fn complement_of(psi: &Psi, removed: &[usize]) -> Vec<usize> {
    let mut keep = vec![true; psi.len()];
    for &k in removed {
        keep[k] = false;
    }
    (0..psi.len()).filter(|&k| keep[k]).collect()
}

fn make(psi: &Psi, family: Family, gamma: Vec<Letter>, psi_index: usize, psi_set: Vec<usize>) -> Relation {
    let n = psi.rank();
    let elem = psi.get(psi_index).clone();
    let first = elem.word.letters()[0];
    Relation {
        family,
        gamma: Word::from_reduced(n, gamma),
        psi: elem,
        psi_index,
        psi_set,
        dot_set: dot_set_for(family, n, first),
    }
}

/// Both relations (`a` and `b` variants, or the 1b fan) attached to one
/// prefix-set element, in family order.
fn relations_for(psi: &Psi, k: usize) -> Vec<Relation> {
    let n = psi.rank();
    let letters = psi.get(k).word.letters().to_vec();
    let a = letters[0];
    let b = letters[1];
    let without_starts = |prefix: &[Letter]| complement_of(psi, &psi.starting_with(prefix));
    let conj = vec![a, -b, -a];
    match psi.kind(k) {
        PsiType::T1 => {
            let mut out = vec![make(psi, Family::R1a, vec![-a], k, without_starts(&[a]))];
            for c in alphabet(n).into_iter().filter(|c| c.abs() != a.abs()) {
                let drop = psi.index_of_letters(&[a, c, a]).expect("type-3 element");
                out.push(make(
                    psi,
                    Family::R1b,
                    vec![a, c, -a],
                    k,
                    complement_of(psi, &[drop]),
                ));
            }
            out
        }
        PsiType::T2 => vec![
            make(psi, Family::R2a, vec![-a], k, without_starts(&[b, b])),
            make(psi, Family::R2b, conj, k, without_starts(&[a, b])),
        ],
        PsiType::T3 => {
            let drop = psi.index_of_letters(&[a, a]).expect("type-1 element");
            vec![
                make(psi, Family::R3a, vec![-a], k, without_starts(&[b, a])),
                make(psi, Family::R3b, conj, k, complement_of(psi, &[drop])),
            ]
        }
        PsiType::T4 => vec![
            make(psi, Family::R4a, vec![-a], k, without_starts(&[b, -a])),
            make(psi, Family::R4b, conj, k, psi.starting_with(&[a])),
        ],
        PsiType::T5 => {
            let c = letters[2];
            vec![
                make(psi, Family::R5a, vec![-a], k, without_starts(&[b, c])),
                make(psi, Family::R5b, conj, k, without_starts(&[a, c])),
            ]
        }
    }
}

/// The collection G for the prefix set `psi`, sorted by family and then by
/// `psi` and `gamma` in canonical order.
pub fn build_g_from(psi: &Psi) -> Vec<Relation> {
    let mut out: Vec<Relation> = (0..psi.len()).flat_map(|k| relations_for(psi, k)).collect();
    out.sort_by(|x, y| (x.family, x.psi_index, &x.gamma).cmp(&(y.family, y.psi_index, &y.gamma)));
    out
}

pub fn build_f_from(psi: &Psi) -> Vec<Relation> {
    build_g_from(psi)
        .into_iter()
        .filter(|r| r.family.in_f())
        .collect()
}

pub fn build_g(n: usize) -> Result<Vec<Relation>> {
    Ok(build_g_from(&Psi::new(n)?))
}

pub fn build_f(n: usize) -> Result<Vec<Relation>> {
    Ok(build_f_from(&Psi::new(n)?))
}

/// `|G|` as the sum of the per-family counts.
pub fn g_count_rows(n: usize) -> usize {
    Family::ALL.iter().map(|f| f.expected_count(n)).sum()
}

/// `|G|` as `2|Psi| + 2n(2n-3)`.
pub fn g_count_bottom_row(n: usize) -> usize {
    2 * crate::freegroup::psi_count(n) + 2 * n * (2 * n - 3)
}

/// Expected per-type counts of `Psi_r` for an F relation.
pub fn expected_f_type_counts(family: Family, n: usize) -> Option<[usize; 5]> {
    let full = [
        PsiType::T1.count(n),
        PsiType::T2.count(n),
        PsiType::T3.count(n),
        PsiType::T4.count(n),
        PsiType::T5.count(n),
    ];
    // elements starting with a fixed letter
    let first_letter = [
        1,
        2 * (n - 1),
        2 * (n - 1),
        2 * (n - 1),
        4 * (n - 1) * n.saturating_sub(2),
    ];
    // elements starting with a fixed pair of distinct generators
    let first_pair = [0, 1, 1, 1, 2 * n.saturating_sub(2)];
    let minus = |drop: [usize; 5]| {
        let mut out = full;
        for (o, d) in out.iter_mut().zip(drop) {
            *o -= d;
        }
        out
    };
    match family {
        Family::R1a => Some(minus(first_letter)),
        Family::R2b | Family::R3a | Family::R5a => Some(minus(first_pair)),
        Family::R4b => Some(first_letter),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountCheck {
    pub name: String,
    pub expected: usize,
    pub actual: usize,
}

impl CountCheck {
    pub fn passed(&self) -> bool {
        self.expected == self.actual
    }
}

/// Compares the constructed prefix set and collections against the closed
/// count formulas. The bottom-row formula for `|G|` is reported alongside
/// the per-row sum, which is the one compared against the construction.
pub fn count_checks(n: usize) -> Result<Vec<CountCheck>> {
    let psi = Psi::new(n)?;
    let g = build_g_from(&psi);
    let mut out = Vec::new();
    let mut push = |name: String, expected: usize, actual: usize| {
        out.push(CountCheck {
            name,
            expected,
            actual,
        })
    };
    push(format!("n={n} |Psi|"), crate::freegroup::psi_count(n), psi.len());
    let types = psi.type_counts();
    for t in PsiType::ALL {
        push(format!("n={n} |Psi| {t:?}"), t.count(n), types[t.index()]);
    }
    for fam in Family::ALL {
        let actual = g.iter().filter(|r| r.family == fam).count();
        push(format!("n={n} |G| family {fam}"), fam.expected_count(n), actual);
    }
    push(format!("n={n} |G| rows"), g_count_rows(n), g.len());
    push(
        format!("n={n} |G| bottom row"),
        g_count_bottom_row(n),
        g_count_rows(n),
    );
    let f_len = g.iter().filter(|r| r.family.in_f()).count();
    push(format!("n={n} |F| = |Psi|"), psi.len(), f_len);
    for fam in Family::F {
        let expected = expected_f_type_counts(fam, n).expect("F family");
        let bad = g
            .iter()
            .filter(|r| r.family == fam && r.type_counts(&psi) != expected)
            .count();
        push(format!("n={n} F {fam} Psi_r type counts mismatches"), 0, bad);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub family: String,
    pub gamma: String,
    pub psi: String,
    /// Longest word length actually enumerated.
    pub depth: usize,
    pub checked_forward: usize,
    pub checked_backward: usize,
    /// `w ∈ J_psi` with `gamma w` landing in the dot set or `J_{Psi_r}`.
    pub forward_violations: usize,
    /// `v ∉ dots ∪ J_{Psi_r}` whose preimage does not start with `psi`.
    pub backward_violations: usize,
    pub dot_violations: usize,
    /// First few offending words, for diagnostics.
    pub examples: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.forward_violations == 0 && self.backward_violations == 0 && self.dot_violations == 0
    }

    fn note(&mut self, msg: String) {
        if self.examples.len() < 5 {
            self.examples.push(msg);
        }
    }
}

/// Smallest ball radius accepted by [`verify_relation`].
pub const MIN_VERIFY_LENGTH: usize = 4;

/// Checks the relation identity on all words of length between
/// `|gamma| + 3` and `max(l, |gamma| + 3)`, where every word involved has a
/// well-defined prefix class, plus the dot set exactly.
///
/// Words shorter than `|gamma| + 3` are skipped: a product such as
/// `x_i x_j` belongs to no prefix class, so the identity only holds for
/// the cylinder sets these words define, not for the words themselves.
pub fn verify_relation(psi: &Psi, r: &Relation, l: usize) -> Result<VerificationReport> {
    let n = psi.rank();
    if r.rank() != n {
        return Err(invalid("relation rank differs from prefix-set rank"));
    }
    if l < MIN_VERIFY_LENGTH {
        return Err(invalid(format!(
            "ball length {l} below minimum {MIN_VERIFY_LENGTH}"
        )));
    }
    let lo = r.gamma.len() + 3;
    let depth = l.max(lo);
    let mut in_set = vec![false; psi.len()];
    for &k in &r.psi_set {
        in_set[k] = true;
    }
    let gamma_inv = r.gamma.inverse();
    let mut rep = VerificationReport {
        family: r.family.to_string(),
        gamma: r.gamma.to_string(),
        psi: r.psi.word.to_string(),
        depth,
        ..Default::default()
    };

    for len in lo..=depth {
        for v in enumerate_sphere(n, len)? {
            let class = psi
                .prefix_class(&v)
                .ok_or_else(|| Error::Internal(format!("no prefix class for {v}")))?;
            // forward: v plays the role of w in J_psi
            if class == r.psi_index {
                rep.checked_forward += 1;
                let image = r.gamma.multiply(&v)?;
                let hit = match psi.prefix_class(&image) {
                    Some(c) => in_set[c],
                    None => r.dot_set.contains(&image),
                };
                if hit {
                    rep.forward_violations += 1;
                    rep.note(format!("forward: {v} -> {image}"));
                }
            }
            // backward: v in the complement must come from J_psi
            if !in_set[class] {
                rep.checked_backward += 1;
                let pre = gamma_inv.multiply(&v)?;
                if psi.prefix_class(&pre) != Some(r.psi_index) {
                    rep.backward_violations += 1;
                    rep.note(format!("backward: {v} <- {pre}"));
                }
            }
        }
    }

    // Γ₁ splits exactly into the dot set and the part of the image.
    for d in gamma_one(n) {
        let pre = gamma_inv.multiply(&d)?;
        let from_psi = pre.starts_with(&r.psi.word);
        if from_psi == r.dot_set.contains(&d) {
            rep.dot_violations += 1;
            rep.note(format!("dot: {d}"));
        }
    }
    Ok(rep)
}

/// Copy of `r` with one element of `Psi_r` removed; used as a negative
/// control for [`verify_relation`].
pub fn drop_psi_member(r: &Relation, position: usize) -> Result<Relation> {
    if position >= r.psi_set.len() {
        return Err(invalid("position outside Psi_r"));
    }
    let mut out = r.clone();
    out.psi_set.remove(position);
    Ok(out)
}

/// The 4b relations whose sets `Psi_r` partition the prefix set: those
/// with `psi = x_i^t y x_i^{-t}` for `y = x_{j0}^{s0}` and every `x_i^t`
/// other than `y^{±1}`, together with `psi = y^e x y^{-e}` for both signs
/// `e`, where `x = x_{i0}^{t0}`.
pub fn partition_t(psi: &Psi, i0: usize, t0: i32, j0: usize, s0: i32) -> Result<Vec<Relation>> {
    let n = psi.rank();
    let ok_idx = |i: usize| (1..=n).contains(&i);
    if !ok_idx(i0) || !ok_idx(j0) || i0 == j0 || t0.abs() != 1 || s0.abs() != 1 {
        return Err(invalid(format!(
            "bad partition indices (i0={i0}, t0={t0}, j0={j0}, s0={s0}) for rank {n}"
        )));
    }
    let x = t0 * i0 as i32;
    let y = s0 * j0 as i32;
    let mut wanted: Vec<Vec<Letter>> = alphabet(n)
        .into_iter()
        .filter(|c| c.abs() != y.abs())
        .map(|c| vec![c, y, -c])
        .collect();
    wanted.push(vec![y, x, -y]);
    wanted.push(vec![-y, x, y]);
    wanted
        .iter()
        .map(|letters| {
            let k = psi
                .index_of_letters(letters)
                .ok_or_else(|| Error::Internal(format!("{letters:?} not in prefix set")))?;
            relations_for(psi, k)
                .into_iter()
                .find(|r| r.family == Family::R4b)
                .ok_or_else(|| Error::Internal("missing 4b relation".into()))
        })
        .collect()
}

/// Serializes relations as `family | gamma | psi | count | members`, one
/// per line, after a `# rank n` header.
pub fn write_relations(psi: &Psi, rels: &[Relation]) -> String {
    let mut out = format!(
        "# rank {}\n# family | gamma | psi | count | members\n",
        psi.rank()
    );
    for r in rels {
        let members: Vec<String> = r.psi_set.iter().map(|&k| psi.get(k).word.to_string()).collect();
        out.push_str(&format!(
            "{} | {} | {} | {} | {}\n",
            r.family,
            r.gamma,
            r.psi.word,
            r.psi_set.len(),
            members.join(",")
        ));
    }
    out
}

fn parse_line(psi: &Psi, line: &str) -> std::result::Result<Relation, String> {
    let n = psi.rank();
    let fields: Vec<&str> = line.split('|').map(str::trim).collect();
    let [family, gamma, psi_word, count, members] = fields[..] else {
        return Err(format!("expected 5 fields, found {}", fields.len()));
    };
    let family: Family = family.parse().map_err(|e: Error| e.to_string())?;
    let gamma = Word::parse(n, gamma).map_err(|e| e.to_string())?;
    let psi_word = Word::parse(n, psi_word).map_err(|e| e.to_string())?;
    let psi_index = psi
        .index_of(&psi_word)
        .ok_or_else(|| format!("`{psi_word}` is not in the prefix set"))?;
    let count: usize = count.parse().map_err(|_| format!("bad count `{count}`"))?;
    let mut psi_set = Vec::new();
    if !members.is_empty() {
        for m in members.split(',') {
            let w = Word::parse(n, m).map_err(|e| e.to_string())?;
            psi_set.push(
                psi.index_of(&w)
                    .ok_or_else(|| format!("`{w}` is not in the prefix set"))?,
            );
        }
    }
    psi_set.sort_unstable();
    let before = psi_set.len();
    psi_set.dedup();
    if psi_set.len() != before {
        return Err("duplicate members".into());
    }
    if psi_set.len() != count {
        return Err(format!("count {count} but {} members", psi_set.len()));
    }
    let is_gamma_star = match gamma.letters() {
        [_] => true,
        [a, b, c] => *c == -*a && a.abs() != b.abs(),
        _ => false,
    };
    if !is_gamma_star {
        return Err(format!("`{gamma}` is not a valid left multiplier"));
    }
    let first = psi_word.letters()[0];
    Ok(Relation {
        family,
        gamma,
        psi: psi.get(psi_index).clone(),
        psi_index,
        psi_set,
        dot_set: dot_set_for(family, n, first),
    })
}

/// Parses the output of [`write_relations`]. The dot set is not part of the
/// format; it is reconstructed from the family.
pub fn parse_relations(text: &str) -> Result<(Psi, Vec<Relation>)> {
    let mut psi: Option<Psi> = None;
    let mut rels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let perr = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(rank) = comment.trim().strip_prefix("rank ") {
                if psi.is_some() {
                    return Err(perr("duplicate rank header".into()));
                }
                let n: usize = rank
                    .trim()
                    .parse()
                    .map_err(|_| perr(format!("bad rank `{rank}`")))?;
                if n > 64 {
                    return Err(perr(format!("rank {n} too large")));
                }
                psi = Some(Psi::new(n).map_err(|e| perr(e.to_string()))?);
            }
            continue;
        }
        let p = psi
            .as_ref()
            .ok_or_else(|| perr("relation before rank header".into()))?;
        rels.push(parse_line(p, line).map_err(perr)?);
    }
    let psi = psi.ok_or_else(|| Error::Parse {
        line: 0,
        message: "missing rank header".into(),
    })?;
    Ok((psi, rels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn find<'a>(rels: &'a [Relation], fam: Family, psi: &[Letter]) -> &'a Relation {
        rels.iter()
            .find(|r| r.family == fam && r.psi.word.letters() == psi)
            .unwrap()
    }

    #[test]
    fn g_counts_n2_n3() {
        let g = build_g(2).unwrap();
        assert_eq!(g.len(), 60);
        let fams: Vec<usize> = Family::ALL
            .iter()
            .map(|f| g.iter().filter(|r| r.family == *f).count())
            .collect();
        assert_eq!(fams, [4, 8, 8, 8, 8, 8, 8, 8, 0, 0]);
        assert_eq!(build_g(3).unwrap().len(), 270);
        assert!(build_g(1).is_err());
    }

    #[test]
    fn f_sizes_n2() {
        let f = build_f(2).unwrap();
        assert_eq!(f.len(), 28);
        for r in &f {
            match r.family {
                Family::R4b => assert_eq!(r.psi_set.len(), 7),
                Family::R1a => assert_eq!(r.psi_set.len(), 21),
                _ => {}
            }
            assert_eq!(
                r.psi_in_set(),
                matches!(r.family, Family::R3a | Family::R4b | Family::R5a)
            );
        }
    }

    #[test]
    fn worked_example_is_5a() {
        let psi = Psi::new(3).unwrap();
        let g = build_g_from(&psi);
        let r = find(&g, Family::R5a, &[1, 2, 3]);
        assert_eq!(r.gamma.letters(), &[-1]);
        let removed: Vec<String> = (0..psi.len())
            .filter(|k| !r.psi_set.contains(k))
            .map(|k| psi.get(k).word.to_string())
            .collect();
        assert_eq!(
            removed,
            ["x2.x3.x1", "x2.x3.x1^-1", "x2.x3.x2", "x2.x3.x2^-1", "x2.x3.x3"]
        );
    }

    #[test]
    fn every_relation_verifies_n2() {
        let psi = Psi::new(2).unwrap();
        for r in build_g_from(&psi) {
            let rep = verify_relation(&psi, &r, 6).unwrap();
            assert!(rep.passed(), "{rep:?}");
        }
    }

    #[test]
    fn dropped_member_is_detected() {
        let psi = Psi::new(2).unwrap();
        let g = build_g_from(&psi);
        for r in g.iter().take(6) {
            let bad = drop_psi_member(r, 0).unwrap();
            let rep = verify_relation(&psi, &bad, 6).unwrap();
            assert!(rep.backward_violations > 0);
        }
    }

    #[test]
    fn short_ball_rejected() {
        let psi = Psi::new(2).unwrap();
        let g = build_g_from(&psi);
        assert!(verify_relation(&psi, &g[0], 3).is_err());
    }

    #[test]
    fn partition_covers_psi() {
        for n in [2, 3] {
            let psi = Psi::new(n).unwrap();
            let t = partition_t(&psi, 1, 1, 2, 1).unwrap();
            assert_eq!(t.len(), 2 * n);
            let mut seen = vec![0; psi.len()];
            for r in &t {
                for &k in &r.psi_set {
                    seen[k] += 1;
                }
            }
            assert!(seen.iter().all(|&c| c == 1));
        }
        let psi = Psi::new(2).unwrap();
        assert!(partition_t(&psi, 1, 1, 1, 1).is_err());
        assert!(partition_t(&psi, 1, 1, 3, 1).is_err());
    }

    #[test]
    fn count_checks_pass() {
        for n in 2..=5 {
            for c in count_checks(n).unwrap() {
                assert!(c.passed(), "{c:?}");
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let psi = Psi::new(2).unwrap();
        let g = build_g_from(&psi);
        let text = write_relations(&psi, &g);
        let (p2, back) = parse_relations(&text).unwrap();
        assert_eq!(p2.rank(), 2);
        assert_eq!(back, g);
    }

    #[test]
    fn parse_errors_carry_line() {
        let err = parse_relations("# rank 2\n1a | x1 | x1.x1 | 2 | x1.x1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(parse_relations("1a | x1 | x1.x1 | 0 | \n").is_err());
        assert!(parse_relations("# rank 2\n9z | x1 | x1.x1 | 0 | \n").is_err());
    }
}

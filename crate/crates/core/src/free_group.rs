//! Reduced words of the free group, automorphisms given by generator images,
//! the interpretation morphism from tree colors to group words, and
//! cancellation probes.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::symbolic::{newton, Letter, Substitution, Word};

/// A generator or its inverse. Used both for group words and for tree path
/// words, where `inverse` marks an edge traversed against its orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SignedLetter {
    pub base: Letter,
    pub inverse: bool,
}

impl SignedLetter {
    pub fn pos(base: Letter) -> Self {
        SignedLetter { base, inverse: false }
    }

    pub fn neg(base: Letter) -> Self {
        SignedLetter { base, inverse: true }
    }

    pub fn inv(self) -> Self {
        SignedLetter { base: self.base, inverse: !self.inverse }
    }

    pub fn cancels(self, other: SignedLetter) -> bool {
        self.base == other.base && self.inverse != other.inverse
    }
}

impl fmt::Display for SignedLetter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.base, if self.inverse { "⁻" } else { "" })
    }
}

/// Unreduced sequence of signed letters, e.g. the colors read along a tree
/// path.
pub type PathWord = Vec<SignedLetter>;

/// Writes `1.2⁻.3`; the empty sequence is `ε`.
pub fn signed_to_string(w: &[SignedLetter]) -> String {
    if w.is_empty() {
        return "ε".into();
    }
    w.iter().map(ToString::to_string).collect::<Vec<_>>().join(".")
}

/// Parses dot-separated letters, each optionally suffixed by `⁻`, `-` or
/// `^-1` for an inverse. `ε` or the empty string is the empty word. Letters
/// `a`, `b`, `c`, ... stand for `1`, `2`, `3`, ...
pub fn parse_signed(s: &str) -> Result<PathWord> {
    let s = s.trim();
    if s.is_empty() || s == "ε" {
        return Ok(Vec::new());
    }
    s.split('.')
        .map(|tok| {
            let (body, inverse) = if let Some(b) = tok.strip_suffix("^-1") {
                (b, true)
            } else if let Some(b) = tok.strip_suffix('⁻') {
                (b, true)
            } else if let Some(b) = tok.strip_suffix('-') {
                (b, true)
            } else {
                (tok, false)
            };
            let base = match body.as_bytes() {
                [c @ b'a'..=b'z'] => c - b'a' + 1,
                _ => body.parse::<Letter>().map_err(|e| Error::Parse(format!("{tok}: {e}")))?,
            };
            if base == 0 {
                return Err(Error::Parse(format!("{tok}: letters start at 1")));
            }
            Ok(SignedLetter { base, inverse })
        })
        .collect()
}

/// Freely reduced word: no letter is adjacent to its inverse.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupWord(Vec<SignedLetter>);

impl GroupWord {
    pub fn identity() -> Self {
        GroupWord(Vec::new())
    }

    pub fn reduce(raw: impl IntoIterator<Item = SignedLetter>) -> Self {
        let mut stack: Vec<SignedLetter> = Vec::new();
        for x in raw {
            if stack.last().is_some_and(|&y| y.cancels(x)) {
                stack.pop();
            } else {
                stack.push(x);
            }
        }
        GroupWord(stack)
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(GroupWord::reduce(parse_signed(s)?))
    }

    pub fn from_positive(w: &[Letter]) -> Self {
        GroupWord(w.iter().map(|&a| SignedLetter::pos(a)).collect())
    }

    /// `u^{-1}` for a positive word `u`.
    pub fn inverse_of_positive(u: &[Letter]) -> Self {
        GroupWord(u.iter().rev().map(|&a| SignedLetter::neg(a)).collect())
    }

    pub fn letters(&self) -> &[SignedLetter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        GroupWord(self.0.iter().rev().map(|x| x.inv()).collect())
    }

    pub fn mul(&self, other: &GroupWord) -> Self {
        self.mul_flagged(other).0
    }

    /// Product and whether any letters cancelled at the junction.
    pub fn mul_flagged(&self, other: &GroupWord) -> (Self, bool) {
        let raw = self.len() + other.len();
        let w = GroupWord::reduce(self.0.iter().chain(other.0.iter()).copied());
        let cancelled = w.len() < raw;
        (w, cancelled)
    }

    /// The positive word `u` when this word is `u^{-1}`.
    pub fn as_inverse_of_positive(&self) -> Option<Word> {
        self.0.iter().rev().map(|x| x.inverse.then_some(x.base)).collect()
    }

    pub fn as_positive(&self) -> Option<Word> {
        self.0.iter().map(|x| (!x.inverse).then_some(x.base)).collect()
    }

    /// All suffixes, shortest first, including the empty word and `self`.
    pub fn suffixes(&self) -> Vec<GroupWord> {
        (0..=self.len()).rev().map(|i| GroupWord(self.0[i..].to_vec())).collect()
    }

    pub fn starts_with(&self, prefix: &GroupWord) -> bool {
        self.0.starts_with(&prefix.0)
    }

    pub fn ends_with(&self, suffix: &GroupWord) -> bool {
        self.0.ends_with(&suffix.0)
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&signed_to_string(&self.0))
    }
}

impl Serialize for GroupWord {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Endomorphism of the free group on `1..=d` given by generator images.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Automorphism {
    d: usize,
    images: Vec<GroupWord>,
}

impl Automorphism {
    pub fn new(d: usize, images: Vec<GroupWord>) -> Result<Self> {
        if images.len() != d {
            return Err(Error::Parse(format!("{} images for rank {d}", images.len())));
        }
        for img in &images {
            for x in img.letters() {
                if x.base == 0 || x.base as usize > d {
                    return Err(Error::LetterOutOfRange { letter: x.base as usize, size: d });
                }
            }
        }
        Ok(Automorphism { d, images })
    }

    pub fn from_substitution(sub: &Substitution) -> Self {
        let images = sub.images().iter().map(|w| GroupWord::from_positive(w)).collect();
        Automorphism { d: sub.d(), images }
    }

    /// `σ` of the family, acting on the free group.
    pub fn family(d: usize) -> Result<Self> {
        Ok(Automorphism::from_substitution(&Substitution::family(d)?))
    }

    /// `σ^{-1}`: `1 -> d`, `2 -> d^{-1} 1`, `k -> k-1` for `3 <= k <= d`.
    pub fn family_inverse(d: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::Dimension(d));
        }
        let dl = d as Letter;
        let images = (1..=dl)
            .map(|k| match k {
                1 => GroupWord::from_positive(&[dl]),
                2 => GroupWord(vec![SignedLetter::neg(dl), SignedLetter::pos(1)]),
                k => GroupWord::from_positive(&[k - 1]),
            })
            .collect();
        Automorphism::new(d, images)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn image(&self, a: Letter) -> &GroupWord {
        &self.images[a as usize - 1]
    }

    /// Image of `w` and whether reduction cancelled anything.
    pub fn apply(&self, w: &GroupWord) -> Result<(GroupWord, bool)> {
        let mut raw = Vec::new();
        for x in w.letters() {
            if x.base == 0 || x.base as usize > self.d {
                return Err(Error::LetterOutOfRange { letter: x.base as usize, size: self.d });
            }
            let img = self.image(x.base);
            if x.inverse {
                raw.extend(img.letters().iter().rev().map(|y| y.inv()));
            } else {
                raw.extend_from_slice(img.letters());
            }
        }
        let raw_len = raw.len();
        let out = GroupWord::reduce(raw);
        let cancelled = out.len() < raw_len;
        Ok((out, cancelled))
    }

    pub fn apply_n(&self, w: &GroupWord, n: usize) -> Result<GroupWord> {
        let mut cur = w.clone();
        for _ in 0..n {
            cur = self.apply(&cur)?.0;
        }
        Ok(cur)
    }

    /// `i, j` entry counts occurrences of `i` and `i^{-1}` in the image of `j`.
    pub fn matrix(&self) -> crate::symbolic::IncidenceMatrix {
        let mut m = crate::symbolic::IncidenceMatrix::zeros(self.d);
        for (j, img) in self.images.iter().enumerate() {
            for x in img.letters() {
                m.entries[x.base as usize - 1][j] += 1;
            }
        }
        m
    }

    /// Both composites fix every generator.
    pub fn is_inverse_of(&self, other: &Automorphism) -> bool {
        self.d == other.d
            && (1..=self.d as Letter).all(|a| {
                let g = GroupWord::from_positive(&[a]);
                let one = other.apply(self.image(a)).map(|r| r.0 == g).unwrap_or(false);
                let two = self.apply(other.image(a)).map(|r| r.0 == g).unwrap_or(false);
                one && two
            })
    }
}

pub fn apply_auto(phi: &Automorphism, w: &GroupWord) -> Result<(GroupWord, bool)> {
    phi.apply(w)
}

/// `k -> k` for `k <= d`, `d+k -> σ^k(1)`, inverse letters to inverses.
pub fn p_star(d: usize, tw: &[SignedLetter]) -> Result<GroupWord> {
    let sub = Substitution::family(d)?;
    let mut raw = Vec::with_capacity(tw.len());
    for x in tw {
        let b = x.base as usize;
        if b == 0 || b > 2 * d - 2 {
            return Err(Error::LetterOutOfRange { letter: b, size: 2 * d - 2 });
        }
        let img: Vec<SignedLetter> = if b <= d {
            vec![SignedLetter::pos(x.base)]
        } else {
            sub.power_of_one(b - d).into_iter().map(SignedLetter::pos).collect()
        };
        if x.inverse {
            raw.extend(img.iter().rev().map(|y| y.inv()));
        } else {
            raw.extend(img);
        }
    }
    Ok(GroupWord::reduce(raw))
}

/// Signed letter counts `|w|_j - |w|_{j^{-1}}` for `j = 1..=d`.
pub fn abelianize(w: &GroupWord, d: usize) -> Result<Vec<i64>> {
    let mut v = vec![0i64; d];
    for x in w.letters() {
        let b = x.base as usize;
        if b == 0 || b > d {
            return Err(Error::LetterOutOfRange { letter: b, size: d });
        }
        v[b - 1] += if x.inverse { -1 } else { 1 };
    }
    Ok(v)
}

/// Root of `x^d = x + 1` above 1: the growth rate of `σ^{-1}`.
pub fn family_eta(d: usize) -> f64 {
    newton(|x| x.powi(d as i32) - x - 1.0, |x| d as f64 * x.powi(d as i32 - 1) - 1.0)
}

/// Left eigenvector `[1, η^{d-1}, ..., η]` of the matrix of `σ^{-1}`.
pub fn v_sigma_inverse(d: usize) -> Vec<f64> {
    let eta = family_eta(d);
    (1..=d).map(|k| if k == 1 { 1.0 } else { eta.powi((d - k + 1) as i32) }).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedTrace {
    pub seed: GroupWord,
    /// Steps `n` (1-based) at which applying the map to the previous reduced
    /// image cancelled letters.
    pub cancelled_at: Vec<usize>,
    pub lengths: Vec<usize>,
}

pub fn cancellation_report(phi: &Automorphism, seeds: &[GroupWord], depth: usize) -> Result<Vec<SeedTrace>> {
    seeds
        .iter()
        .map(|seed| {
            let mut cur = seed.clone();
            let mut cancelled_at = Vec::new();
            let mut lengths = Vec::with_capacity(depth);
            for n in 1..=depth {
                let (next, cancelled) = phi.apply(&cur)?;
                if cancelled {
                    cancelled_at.push(n);
                }
                lengths.push(next.len());
                cur = next;
            }
            Ok(SeedTrace { seed: seed.clone(), cancelled_at, lengths })
        })
        .collect()
}

/// Inverse of the Tribonacci substitution on `a, b, c` (written `1, 2, 3`):
/// `a -> c`, `b -> c^{-1} a`, `c -> c^{-1} b`.
pub fn tribonacci_inverse() -> Automorphism {
    let images = ["c", "c-.a", "c-.b"].iter().map(|s| GroupWord::parse(s).expect("literal")).collect();
    Automorphism { d: 3, images }
}

/// `a -> c^{-1} a`, `b -> c`, `c -> a^{-1} a^{-1} b`: the word `ac` cancels
/// under every iterate.
pub fn nielsen_example() -> Automorphism {
    let images = ["c-.a", "c", "a-.a-.b"].iter().map(|s| GroupWord::parse(s).expect("literal")).collect();
    Automorphism { d: 3, images }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(s: &str) -> GroupWord {
        GroupWord::parse(s).unwrap()
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(g("1.1-"), GroupWord::identity());
        assert_eq!(g("3-.3.2"), g("2"));
        assert_eq!(g("1.2.2-.1-.3"), g("3"));
    }

    #[test]
    fn display_roundtrip() {
        let w = g("1.2⁻.3");
        assert_eq!(w.to_string(), "1.2⁻.3");
        assert_eq!(GroupWord::parse(&w.to_string()).unwrap(), w);
        assert_eq!(GroupWord::identity().to_string(), "ε");
        assert_eq!(g("a.c^-1"), g("1.3-"));
    }

    #[test]
    fn inverse_family_examples() {
        let inv = Automorphism::family_inverse(3).unwrap();
        assert_eq!(inv.apply(&g("2")).unwrap(), (g("3-.1"), false));
        assert_eq!(inv.apply(&g("1.2")).unwrap(), (g("1"), true));
        let sig = Automorphism::family(3).unwrap();
        for k in 1..=3u8 {
            let img = inv.apply(&g(&k.to_string())).unwrap().0;
            assert_eq!(sig.apply(&img).unwrap().0, g(&k.to_string()));
        }
        assert!(sig.is_inverse_of(&inv));
    }

    #[test]
    fn p_star_examples() {
        assert_eq!(p_star(3, &parse_signed("4").unwrap()).unwrap(), g("1.2"));
        assert_eq!(p_star(3, &parse_signed("3-").unwrap()).unwrap(), g("3-"));
        assert_eq!(p_star(4, &parse_signed("6").unwrap()).unwrap(), g("1.2.3"));
        assert!(p_star(3, &parse_signed("5").unwrap()).is_err());
    }

    #[test]
    fn abelianize_examples() {
        assert_eq!(abelianize(&g("1.2.3.1"), 3).unwrap(), vec![2, 1, 1]);
        assert_eq!(abelianize(&GroupWord::identity(), 3).unwrap(), vec![0, 0, 0]);
        assert_eq!(abelianize(&g("1-.2"), 3).unwrap(), vec![-1, 1, 0]);
    }

    #[test]
    fn inverse_matrix_eigen_data() {
        for d in 3..=6 {
            let eta = family_eta(d);
            assert!((eta.powi(d as i32) - eta - 1.0).abs() < 1e-12);
            let m = Automorphism::family_inverse(d).unwrap().matrix();
            let v = v_sigma_inverse(d);
            for j in 0..d {
                let vm: f64 = (0..d).map(|i| v[i] * m.entries[i][j] as f64).sum();
                assert!((vm - eta * v[j]).abs() < 1e-9, "d={d} j={j}");
            }
            let p = crate::symbolic::perron(&m).unwrap();
            assert!((p.eigenvalue - eta).abs() < 1e-12);
        }
    }

    #[test]
    fn tribonacci_cancels_at_step_two() {
        let r = cancellation_report(&tribonacci_inverse(), &[g("c")], 2).unwrap();
        assert_eq!(r[0].cancelled_at, vec![2]);
        let phi = tribonacci_inverse();
        let step1 = phi.apply(&g("c")).unwrap().0;
        assert_eq!(step1, g("c-.b"));
    }

    #[test]
    fn nielsen_cancels_every_step() {
        let phi = nielsen_example();
        assert_eq!(phi.apply(&g("a.c")).unwrap(), (g("c-.a-.b"), true));
        let r = cancellation_report(&phi, &[g("a.c")], 10).unwrap();
        assert_eq!(r[0].cancelled_at, (1..=10).collect::<Vec<_>>());
    }
}

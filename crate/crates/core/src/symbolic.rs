//! Words over `1..=d`, the substitution family `1 -> 12, k -> k+1, d -> 1`,
//! factor languages of its fixed point, and cylinder frequencies.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

pub type Letter = u8;
pub type Word = Vec<Letter>;

/// Renders a word as concatenated digits, or dot-separated when some letter
/// needs two digits. The empty word renders as `ε`.
pub fn word_to_string(w: &[Letter]) -> String {
    if w.is_empty() {
        return "ε".to_string();
    }
    if w.iter().all(|&a| a < 10) {
        w.iter().map(|a| char::from(b'0' + a)).collect()
    } else {
        w.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(".")
    }
}

/// Inverse of [`word_to_string`].
pub fn parse_word(s: &str) -> Result<Word> {
    let s = s.trim();
    if s.is_empty() || s == "ε" {
        return Ok(Vec::new());
    }
    if s.contains('.') {
        return s
            .split('.')
            .map(|p| p.parse::<Letter>().map_err(|e| Error::Parse(format!("{p}: {e}"))))
            .collect();
    }
    s.chars()
        .map(|c| {
            c.to_digit(10)
                .map(|v| v as Letter)
                .ok_or_else(|| Error::Parse(format!("bad letter {c:?}")))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    d: usize,
    images: Vec<Word>,
}

impl Substitution {
    /// Images are listed for letters `1..=d` in order. Every image must be
    /// nonempty and some letter must have unbounded iterated image length.
    pub fn new(d: usize, images: Vec<Word>) -> Result<Self> {
        if images.len() != d {
            return Err(Error::Parse(format!("{} images for {d} letters", images.len())));
        }
        for (i, img) in images.iter().enumerate() {
            if img.is_empty() {
                return Err(Error::EmptyImage(i + 1));
            }
            for &a in img {
                check_letter(a, d)?;
            }
        }
        let sub = Substitution { d, images };
        if !sub.has_growth() {
            return Err(Error::NoGrowth);
        }
        Ok(sub)
    }

    /// `1 -> 12`, `k -> k+1` for `2 <= k <= d-1`, `d -> 1`.
    pub fn family(d: usize) -> Result<Self> {
        if d < 3 {
            return Err(Error::Dimension(d));
        }
        let images = (1..=d)
            .map(|k| match k {
                1 => vec![1, 2],
                k if k == d => vec![1],
                k => vec![(k + 1) as Letter],
            })
            .collect();
        Substitution::new(d, images)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn image(&self, a: Letter) -> &[Letter] {
        &self.images[a as usize - 1]
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn is_family(&self) -> bool {
        Substitution::family(self.d).map(|f| f == *self).unwrap_or(false)
    }

    pub fn apply(&self, w: &[Letter]) -> Result<Word> {
        for &a in w {
            check_letter(a, self.d)?;
        }
        Ok(self.apply_valid(w))
    }

    pub(crate) fn apply_valid(&self, w: &[Letter]) -> Word {
        let mut out = Vec::with_capacity(w.len() * 2);
        for &a in w {
            out.extend_from_slice(self.image(a));
        }
        out
    }

    pub fn iterate(&self, w: &[Letter], n: usize) -> Result<Word> {
        for &a in w {
            check_letter(a, self.d)?;
        }
        let mut cur = w.to_vec();
        for _ in 0..n {
            cur = self.apply_valid(&cur);
        }
        Ok(cur)
    }

    /// `σ^n(1)`.
    pub fn power_of_one(&self, n: usize) -> Word {
        let mut w = vec![1];
        for _ in 0..n {
            w = self.apply_valid(&w);
        }
        w
    }

    /// Lengths `|σ^n(1)|` for `n = 0..=max_n`.
    pub fn power_lengths(&self, max_n: usize) -> Vec<u64> {
        let mut counts = vec![0u64; self.d];
        counts[0] = 1;
        let mut out = vec![1];
        for _ in 0..max_n {
            let mut next = vec![0u64; self.d];
            for (b, &c) in counts.iter().enumerate() {
                for &a in &self.images[b] {
                    next[a as usize - 1] += c;
                }
            }
            counts = next;
            out.push(counts.iter().sum());
        }
        out
    }

    /// First `len` letters of the fixed point `ω = lim σ^n(1)`.
    pub fn fixed_point_prefix(&self, len: usize) -> Result<Word> {
        let first = self.image(1);
        if first[0] != 1 || first.len() < 2 {
            return Err(Error::NotProlongable);
        }
        let mut w = vec![1];
        while w.len() < len {
            w = self.apply_valid(&w);
        }
        w.truncate(len);
        Ok(w)
    }

    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        let mut m = IncidenceMatrix::zeros(self.d);
        for (j, img) in self.images.iter().enumerate() {
            for &a in img {
                m.entries[a as usize - 1][j] += 1;
            }
        }
        m
    }

    /// A letter grows without bound iff it reaches a cycle of the
    /// occurrence graph passing through a letter with image length >= 2.
    fn has_growth(&self) -> bool {
        let d = self.d;
        let reach = |from: usize| -> Vec<bool> {
            let mut seen = vec![false; d];
            let mut stack: Vec<usize> = self.images[from].iter().map(|&a| a as usize - 1).collect();
            while let Some(v) = stack.pop() {
                if !seen[v] {
                    seen[v] = true;
                    stack.extend(self.images[v].iter().map(|&a| a as usize - 1));
                }
            }
            seen
        };
        (0..d).any(|b| self.images[b].len() >= 2 && reach(b)[b])
    }
}

fn check_letter(a: Letter, d: usize) -> Result<()> {
    if a == 0 || a as usize > d {
        return Err(Error::LetterOutOfRange { letter: a as usize, size: d });
    }
    Ok(())
}

pub fn substitution_family(d: usize) -> Result<Substitution> {
    Substitution::family(d)
}

/// Square nonnegative integer matrix; entry `(i, j)` counts letter `i+1` in
/// the image of letter `j+1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceMatrix {
    pub entries: Vec<Vec<u64>>,
}

impl IncidenceMatrix {
    pub fn zeros(n: usize) -> Self {
        IncidenceMatrix { entries: vec![vec![0; n]; n] }
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Self {
        IncidenceMatrix { entries: rows }
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        (0..self.size()).map(|j| self.entries.iter().map(|r| r[j]).sum()).collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        let n = self.size();
        DMatrix::from_fn(n, n, |i, j| self.entries[i][j] as f64)
    }

    /// Some power is strictly positive; powers up to Wielandt's bound
    /// `(n-1)^2 + 1` suffice.
    pub fn is_primitive(&self) -> bool {
        let n = self.size();
        let pattern: Vec<Vec<bool>> = self.entries.iter().map(|r| r.iter().map(|&x| x > 0).collect()).collect();
        let mut p = pattern.clone();
        for _ in 0..((n - 1) * (n - 1) + 1) {
            if p.iter().all(|r| r.iter().all(|&x| x)) {
                return true;
            }
            p = (0..n)
                .map(|i| (0..n).map(|j| (0..n).any(|k| p[i][k] && pattern[k][j])).collect())
                .collect();
        }
        p.iter().all(|r| r.iter().all(|&x| x))
    }

    /// All eigenvalues as `(re, im)` pairs, sorted by modulus then argument.
    pub fn eigenvalues(&self) -> Vec<(f64, f64)> {
        let ev = self.to_dmatrix().complex_eigenvalues();
        let mut out: Vec<(f64, f64)> = ev.iter().map(|c| (c.re, c.im)).collect();
        out.sort_by(|a, b| {
            let ma = a.0.hypot(a.1);
            let mb = b.0.hypot(b.1);
            ma.total_cmp(&mb).then(a.1.atan2(a.0).total_cmp(&b.1.atan2(b.0)))
        });
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Perron {
    pub eigenvalue: f64,
    /// Normalized so that `left · right = 1`.
    pub left: Vec<f64>,
    /// Normalized to sum 1.
    pub right: Vec<f64>,
}

/// Dominant eigenvalue and positive eigenvectors of a primitive matrix, by
/// power iteration.
pub fn perron(m: &IncidenceMatrix) -> Result<Perron> {
    if m.size() == 0 || !m.is_primitive() {
        return Err(Error::NotPrimitive);
    }
    let a = m.to_dmatrix();
    let right = power_iterate(&a);
    let left = power_iterate(&a.transpose());
    let av = &a * nalgebra::DVector::from_vec(right.clone());
    let eigenvalue = av.iter().sum::<f64>();
    let dot: f64 = left.iter().zip(&right).map(|(x, y)| x * y).sum();
    Ok(Perron { eigenvalue, left: left.iter().map(|x| x / dot).collect(), right })
}

fn power_iterate(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    // Shifting by the identity keeps the dominant eigenvector and removes
    // any peripheral eigenvalue of equal modulus.
    let shifted = a + DMatrix::identity(n, n);
    let mut v = nalgebra::DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..20_000 {
        let mut w = &shifted * &v;
        let s: f64 = w.iter().sum();
        w /= s;
        let delta = (&w - &v).amax();
        v = w;
        if delta < 1e-16 {
            break;
        }
    }
    v.iter().copied().collect()
}

/// Root of `x^d = x^(d-1) + 1` above 1, by Newton's method.
pub fn family_lambda(d: usize) -> f64 {
    newton(|x| x.powi(d as i32) - x.powi(d as i32 - 1) - 1.0, |x| {
        d as f64 * x.powi(d as i32 - 1) - (d as f64 - 1.0) * x.powi(d as i32 - 2)
    })
}

pub(crate) fn newton(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> f64 {
    let mut x = 1.5;
    for _ in 0..200 {
        let step = f(x) / df(x);
        x -= step;
        if step.abs() < 1e-17 {
            break;
        }
    }
    x
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageTable {
    pub n: usize,
    #[serde(with = "word_list")]
    pub factors: Vec<Word>,
    #[serde(with = "word_list")]
    pub left_special: Vec<Word>,
    #[serde(with = "word_list")]
    pub right_special: Vec<Word>,
    #[serde(with = "word_list")]
    pub bispecial: Vec<Word>,
}

mod word_list {
    use super::{parse_word, word_to_string, Word};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(ws: &[Word], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(ws.iter().map(|w| word_to_string(w)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Word>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter().map(|s| parse_word(s).map_err(serde::de::Error::custom)).collect()
    }
}

const STABILIZATION_LIMIT: usize = 1 << 26;

/// All factors of `ω` with lengths `lens`, collected from `σ^N(1)` once the
/// sets agree for two consecutive `N`.
fn stable_factor_sets(sub: &Substitution, lens: &[usize]) -> Result<Vec<BTreeSet<Word>>> {
    let collect = |w: &[Letter]| -> Vec<BTreeSet<Word>> {
        lens.iter()
            .map(|&n| if n == 0 { std::iter::once(Vec::new()).collect() } else { w.windows(n).map(<[Letter]>::to_vec).collect() })
            .collect()
    };
    if sub.image(1)[0] != 1 || sub.image(1).len() < 2 {
        return Err(Error::NotProlongable);
    }
    let need = lens.iter().copied().max().unwrap_or(0);
    let mut w = vec![1];
    while w.len() < need {
        w = sub.apply_valid(&w);
    }
    let mut prev = collect(&w);
    loop {
        w = sub.apply_valid(&w);
        if w.len() > STABILIZATION_LIMIT {
            return Err(Error::NoStabilization(STABILIZATION_LIMIT));
        }
        let cur = collect(&w);
        if cur == prev {
            return Ok(cur);
        }
        prev = cur;
    }
}

pub fn language(sub: &Substitution, n: usize) -> Result<LanguageTable> {
    let mut sets = stable_factor_sets(sub, &[n, n + 1])?;
    let ext = sets.pop().unwrap_or_default();
    let factors = sets.pop().unwrap_or_default();
    let mut left: BTreeMap<&[Letter], BTreeSet<Letter>> = BTreeMap::new();
    let mut right: BTreeMap<&[Letter], BTreeSet<Letter>> = BTreeMap::new();
    for f in &ext {
        left.entry(&f[1..]).or_default().insert(f[0]);
        right.entry(&f[..n]).or_default().insert(f[n]);
    }
    let special = |m: &BTreeMap<&[Letter], BTreeSet<Letter>>| -> Vec<Word> {
        m.iter().filter(|(_, s)| s.len() >= 2).map(|(w, _)| w.to_vec()).collect()
    };
    let left_special = special(&left);
    let right_special = special(&right);
    let rs: BTreeSet<&Word> = right_special.iter().collect();
    let bispecial = left_special.iter().filter(|w| rs.contains(w)).cloned().collect();
    Ok(LanguageTable { n, factors: factors.into_iter().collect(), left_special, right_special, bispecial })
}

/// Bispecial factors up to `max_len`, generated from `1` by
/// `v -> σ(v)` followed by `1` when `v` ends with `d-1`. Sorted by length.
pub fn bispecial_by_generation(sub: &Substitution, max_len: usize) -> Result<Vec<Word>> {
    if !sub.is_family() {
        return Err(Error::NotFamily);
    }
    let d = sub.d() as Letter;
    let mut out = Vec::new();
    let mut v: Word = vec![1];
    while v.len() <= max_len {
        let ends = v.last() == Some(&(d - 1));
        let mut next = sub.apply_valid(&v);
        if ends {
            next.push(1);
        }
        out.push(v);
        v = next;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CylinderMeasure {
    pub value: f64,
    /// False when `u` is not a factor of `ω`; `value` is then 0.
    pub is_factor: bool,
}

fn count_occurrences(prefix: &[Letter], u: &[Letter]) -> u64 {
    if u.is_empty() || prefix.len() < u.len() {
        return 0;
    }
    let windows = prefix.len() - u.len() + 1;
    par::map_chunks(windows, 1 << 16, |r| r.filter(|&i| &prefix[i..i + u.len()] == u).count() as u64)
        .into_iter()
        .sum()
}

/// Sliding-window frequency of `u` in the first `prefix_len` letters of `ω`.
pub fn cylinder_measure(sub: &Substitution, u: &[Letter], prefix_len: usize) -> Result<CylinderMeasure> {
    for &a in u {
        check_letter(a, sub.d())?;
    }
    let is_factor = u.is_empty() || language(sub, u.len())?.factors.binary_search(&u.to_vec()).is_ok();
    if !is_factor {
        return Ok(CylinderMeasure { value: 0.0, is_factor });
    }
    if u.is_empty() {
        return Ok(CylinderMeasure { value: 1.0, is_factor });
    }
    let prefix = sub.fixed_point_prefix(prefix_len)?;
    let windows = prefix.len().saturating_sub(u.len()) + 1;
    let value = count_occurrences(&prefix, u) as f64 / windows as f64;
    Ok(CylinderMeasure { value, is_factor })
}

/// Frequencies of every length-`m` window of `prefix`.
pub fn window_frequencies(prefix: &[Letter], m: usize) -> BTreeMap<Word, f64> {
    if m == 0 || prefix.len() < m {
        return BTreeMap::new();
    }
    let windows = prefix.len() - m + 1;
    let partial = par::map_chunks(windows, 1 << 16, |r| {
        let mut counts: BTreeMap<&[Letter], u64> = BTreeMap::new();
        for i in r {
            *counts.entry(&prefix[i..i + m]).or_default() += 1;
        }
        counts
    });
    let mut total: BTreeMap<Word, u64> = BTreeMap::new();
    for part in partial {
        for (w, c) in part {
            *total.entry(w.to_vec()).or_default() += c;
        }
    }
    total.into_iter().map(|(w, c)| (w, c as f64 / windows as f64)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct SnappedCylinder {
    #[serde(serialize_with = "ser_word")]
    pub word: Word,
    pub estimate: f64,
    /// Exponent `j` with `λ^-j` closest to the estimate.
    pub exponent: u32,
}

fn ser_word<S: serde::Serializer>(w: &Word, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&word_to_string(w))
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureSpectrum {
    pub m: usize,
    pub cylinders: Vec<SnappedCylinder>,
    /// Distinct snapped exponents `j`; the measure values are `λ^-j`.
    pub exponents: BTreeSet<u32>,
    pub class_count: usize,
}

/// Estimated cylinder measures of length `m`, each snapped to the nearest
/// `λ^-j` with `j <= 40`.
pub fn measure_spectrum(sub: &Substitution, m: usize, prefix_len: usize, tol: f64) -> Result<MeasureSpectrum> {
    let lambda = perron(&sub.incidence_matrix())?.eigenvalue;
    let prefix = sub.fixed_point_prefix(prefix_len)?;
    let freqs = window_frequencies(&prefix, m);
    let mut cylinders = Vec::with_capacity(freqs.len());
    for (word, estimate) in freqs {
        let (exponent, dist) = (0..=40u32)
            .map(|j| (j, (estimate - lambda.powi(-(j as i32))).abs()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, f64::INFINITY));
        if dist > tol {
            return Err(Error::SnapFailure { word: word_to_string(&word), estimate, tol });
        }
        cylinders.push(SnappedCylinder { word, estimate, exponent });
    }
    let exponents: BTreeSet<u32> = cylinders.iter().map(|c| c.exponent).collect();
    Ok(MeasureSpectrum { m, class_count: exponents.len(), cylinders, exponents })
}

/// `d` for `m = 1`, `2d-2` when a bispecial of length `m-1` exists, `2d-1`
/// otherwise.
pub fn expected_class_count(sub: &Substitution, m: usize) -> Result<usize> {
    let d = sub.d();
    if m <= 1 {
        return Ok(d);
    }
    let has = bispecial_by_generation(sub, m - 1)?.iter().any(|w| w.len() == m - 1);
    Ok(if has { 2 * d - 2 } else { 2 * d - 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        parse_word(s).unwrap()
    }

    #[test]
    fn family_images() {
        let s = Substitution::family(3).unwrap();
        assert_eq!(s.images(), &[w("12"), w("3"), w("1")]);
        let s = Substitution::family(4).unwrap();
        assert_eq!(s.images(), &[w("12"), w("3"), w("4"), w("1")]);
        assert!(matches!(Substitution::family(2), Err(Error::Dimension(2))));
    }

    #[test]
    fn apply_examples() {
        let s = Substitution::family(3).unwrap();
        assert_eq!(s.apply(&w("123")).unwrap(), w("1231"));
        assert_eq!(s.apply(&[]).unwrap(), Word::new());
        assert_eq!(s.power_of_one(4), w("123112"));
        assert_eq!(s.power_of_one(5), w("123112123"));
        assert!(s.apply(&[4]).is_err());
    }

    #[test]
    fn fixed_point_examples() {
        let s = Substitution::family(3).unwrap();
        assert_eq!(s.fixed_point_prefix(6).unwrap(), w("123112"));
        assert_eq!(s.fixed_point_prefix(0).unwrap(), Word::new());
        assert_eq!(s.fixed_point_prefix(9).unwrap(), w("123112123"));
    }

    #[test]
    fn power_lengths_match_words() {
        let s = Substitution::family(4).unwrap();
        let lens = s.power_lengths(15);
        for (n, &l) in lens.iter().enumerate() {
            assert_eq!(s.power_of_one(n).len() as u64, l);
        }
    }

    #[test]
    fn growth_check_rejects_permutations() {
        assert!(matches!(Substitution::new(3, vec![w("2"), w("3"), w("1")]), Err(Error::NoGrowth)));
        assert!(Substitution::new(2, vec![w("12"), w("2")]).is_ok());
        assert!(matches!(Substitution::new(3, vec![w("12"), Word::new(), w("1")]), Err(Error::EmptyImage(2))));
    }

    #[test]
    fn language_examples() {
        let s = Substitution::family(3).unwrap();
        let t1 = language(&s, 1).unwrap();
        assert_eq!(t1.factors, vec![w("1"), w("2"), w("3")]);
        assert_eq!(t1.left_special, vec![w("1")]);
        assert_eq!(t1.bispecial, vec![w("1")]);
        let t2 = language(&s, 2).unwrap();
        assert_eq!(t2.factors, vec![w("11"), w("12"), w("21"), w("23"), w("31")]);
        assert_eq!(language(&s, 4).unwrap().bispecial, vec![w("1231")]);
    }

    #[test]
    fn generation_examples() {
        let s3 = Substitution::family(3).unwrap();
        let lens: Vec<usize> = bispecial_by_generation(&s3, 10).unwrap().iter().map(Vec::len).collect();
        assert_eq!(lens, vec![1, 2, 4, 6, 10]);
        let s4 = Substitution::family(4).unwrap();
        assert_eq!(bispecial_by_generation(&s4, 3).unwrap(), vec![w("1"), w("12"), w("123")]);
        assert!(bispecial_by_generation(&s3, 0).unwrap().is_empty());
    }

    #[test]
    fn perron_examples() {
        let p = perron(&Substitution::family(3).unwrap().incidence_matrix()).unwrap();
        assert!((p.eigenvalue - 1.465571).abs() < 1e-6);
        let l = p.eigenvalue;
        assert!((l.powi(3) - l.powi(2) - 1.0).abs() < 1e-12);
        let one = perron(&IncidenceMatrix::from_rows(vec![vec![1]])).unwrap();
        assert!((one.eigenvalue - 1.0).abs() < 1e-15);
        let p4 = perron(&Substitution::family(4).unwrap().incidence_matrix()).unwrap();
        assert!((p4.eigenvalue - 1.380278).abs() < 1e-6);
        assert!(perron(&IncidenceMatrix::from_rows(vec![vec![0, 1], vec![1, 0]])).is_err());
    }

    #[test]
    fn perron_agrees_with_newton() {
        for d in 3..=8 {
            let p = perron(&Substitution::family(d).unwrap().incidence_matrix()).unwrap();
            assert!((p.eigenvalue - family_lambda(d)).abs() < 1e-12, "d={d}");
        }
    }

    #[test]
    fn incidence_columns_are_image_lengths() {
        let s = Substitution::family(5).unwrap();
        let m = s.incidence_matrix();
        assert_eq!(m.column_sums(), vec![2, 1, 1, 1, 1]);
        assert!(m.is_primitive());
    }

    #[test]
    fn cylinder_measure_flags_non_factors() {
        let s = Substitution::family(3).unwrap();
        let c = cylinder_measure(&s, &w("22"), 1000).unwrap();
        assert_eq!(c, CylinderMeasure { value: 0.0, is_factor: false });
    }

    #[test]
    fn word_string_roundtrip() {
        assert_eq!(word_to_string(&[]), "ε");
        assert_eq!(word_to_string(&[1, 12, 3]), "1.12.3");
        assert_eq!(parse_word("1.12.3").unwrap(), vec![1, 12, 3]);
        assert_eq!(parse_word("1231").unwrap(), w("1231"));
    }
}

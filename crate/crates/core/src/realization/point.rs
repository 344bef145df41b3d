//! Points of the free product of `d` copies of the real line, written as
//! reduced alternating syllables `x_{c_0}^{t_0} x_{c_1}^{t_1} …`.

use std::fmt;

use serde::ser::SerializeSeq;
use serde::Serialize;

use super::alg::AlgLength;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Syllable {
    /// Copy index `0..d`.
    pub copy: u8,
    /// Signed, never zero.
    pub len: AlgLength,
}

/// Reduced writing: consecutive syllables lie in distinct copies and no
/// syllable has length zero. The origin is the empty writing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreePoint {
    d: usize,
    syllables: Vec<Syllable>,
}

impl FreePoint {
    pub fn origin(d: usize) -> Self {
        FreePoint { d, syllables: Vec::new() }
    }

    pub fn single(copy: u8, len: AlgLength) -> Self {
        let d = len.d();
        FreePoint::origin(d).mul(&FreePoint { d, syllables: vec![Syllable { copy, len }] })
    }

    pub fn from_syllables(d: usize, syllables: Vec<(u8, AlgLength)>) -> Self {
        syllables.into_iter().fold(FreePoint::origin(d), |p, (c, l)| p.mul(&FreePoint::single(c, l)))
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }

    pub fn is_origin(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn inverse(&self) -> Self {
        let syllables = self
            .syllables
            .iter()
            .rev()
            .map(|s| Syllable { copy: s.copy, len: -s.len.clone() })
            .collect();
        FreePoint { d: self.d, syllables }
    }

    /// Group product, merging syllables of equal copy at the junction.
    pub fn mul(&self, other: &FreePoint) -> Self {
        let mut out = self.syllables.clone();
        let mut rest = other.syllables.iter().filter(|s| !s.len.is_zero()).peekable();
        while let (Some(last), Some(next)) = (out.last(), rest.peek()) {
            if last.copy != next.copy {
                break;
            }
            let merged = &last.len + &next.len;
            let copy = last.copy;
            out.pop();
            rest.next();
            if !merged.is_zero() {
                out.push(Syllable { copy, len: merged });
                break;
            }
        }
        out.extend(rest.cloned());
        FreePoint { d: self.d, syllables: out }
    }

    /// `Σ |t_i|`, the distance to the origin.
    pub fn norm(&self) -> AlgLength {
        self.syllables.iter().fold(AlgLength::zero(self.d), |acc, s| &acc + &s.len.abs())
    }

    /// Copy and sign of the first syllable: the direction in which the
    /// geodesic from the origin leaves it.
    pub fn first_direction(&self) -> Option<(u8, bool)> {
        self.syllables.first().map(|s| (s.copy, s.len.signum() > 0))
    }

    /// Canonical key: copies with scale-0 coefficients.
    pub fn key(&self) -> Vec<(u8, Vec<i64>)> {
        self.syllables.iter().map(|s| (s.copy, s.len.normalized())).collect()
    }

    /// Planar picture for plotting: syllable `j^t` moves by `t` along angle
    /// `π j / d`. Not an isometry.
    pub fn layout(&self) -> (f64, f64) {
        let mut x = 0.0;
        let mut y = 0.0;
        for s in &self.syllables {
            let theta = std::f64::consts::PI * s.copy as f64 / self.d as f64;
            let t = s.len.value();
            x += t * theta.cos();
            y += t * theta.sin();
        }
        (x, y)
    }
}

/// `d(p, q) = |p^{-1} q|`.
pub fn point_distance(p: &FreePoint, q: &FreePoint) -> AlgLength {
    p.inverse().mul(q).norm()
}

impl fmt::Display for FreePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.syllables.is_empty() {
            return f.write_str("O");
        }
        let parts: Vec<String> = self.syllables.iter().map(|s| format!("{}^[{}]", s.copy, s.len)).collect();
        f.write_str(&parts.join("·"))
    }
}

/// List of `[copy, coeffs…, scale]`.
impl Serialize for FreePoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.syllables.len()))?;
        for syl in &self.syllables {
            let mut row: Vec<i64> = vec![syl.copy as i64];
            row.extend_from_slice(syl.len.coeffs());
            row.push(syl.len.scale() as i64);
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

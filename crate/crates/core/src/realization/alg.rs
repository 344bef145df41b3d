//! Exact arithmetic in `Z[η]`, `η^d = η + 1`, with an `η^{-e}` scale.

use std::cmp::Ordering;
use std::fmt;
use std::sync::OnceLock;

use serde::ser::SerializeSeq;
use serde::Serialize;

use crate::free_group::family_eta;

const MAX_D: usize = 64;

/// Double-precision `η` for alphabet size `d`, cached.
pub fn eta(d: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let t = TABLE.get_or_init(|| (0..=MAX_D).map(|k| if k >= 2 { family_eta(k) } else { f64::NAN }).collect());
    t[d]
}

/// `η^{-scale} · Σ coeffs[i] η^i` with `coeffs.len() == d`.
///
/// Equality is exact: both sides are brought to a common scale by
/// multiplying with nonnegative powers of `η`, which only ever adds and
/// shifts coefficients. Signs and orderings of nonzero elements use the
/// double-precision value.
#[derive(Clone, Debug)]
pub struct AlgLength {
    coeffs: Vec<i64>,
    scale: i32,
}

impl AlgLength {
    pub fn zero(d: usize) -> Self {
        AlgLength { coeffs: vec![0; d], scale: 0 }
    }

    pub fn from_int(d: usize, n: i64) -> Self {
        let mut coeffs = vec![0; d];
        coeffs[0] = n;
        AlgLength { coeffs, scale: 0 }
    }

    pub fn one(d: usize) -> Self {
        AlgLength::from_int(d, 1)
    }

    /// `η^k` for any integer `k`.
    pub fn eta_pow(d: usize, k: i32) -> Self {
        AlgLength { coeffs: AlgLength::one(d).coeffs, scale: -k }
    }

    pub fn from_parts(coeffs: Vec<i64>, scale: i32) -> Self {
        AlgLength { coeffs, scale }
    }

    pub fn d(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn scale(&self) -> i32 {
        self.scale
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn value(&self) -> f64 {
        let e = eta(self.d());
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * e + c as f64;
        }
        acc * e.powi(-self.scale)
    }

    pub fn signum(&self) -> i32 {
        if self.is_zero() {
            0
        } else if self.value() > 0.0 {
            1
        } else {
            -1
        }
    }

    pub fn abs(&self) -> Self {
        if self.signum() < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Multiplies the coefficient vector by `η` in place.
    fn shift_up(coeffs: &mut [i64]) {
        let d = coeffs.len();
        let top = coeffs[d - 1];
        for i in (1..d).rev() {
            coeffs[i] = coeffs[i - 1];
        }
        coeffs[0] = top;
        coeffs[1] += top;
    }

    /// Same element written with scale `target >= self.scale`.
    fn at_scale(&self, target: i32) -> Vec<i64> {
        debug_assert!(target >= self.scale);
        let mut c = self.coeffs.clone();
        for _ in self.scale..target {
            AlgLength::shift_up(&mut c);
        }
        c
    }

    /// Same element at scale 0, using `η^{-1} = η^{d-1} - 1` when the scale
    /// is positive. Canonical: two elements are equal iff these agree.
    pub fn normalized(&self) -> Vec<i64> {
        if self.scale <= 0 {
            return self.at_scale(0);
        }
        let d = self.d();
        let mut c = self.coeffs.clone();
        for _ in 0..self.scale {
            // c · η^{-1} = c · (η^{d-1} - 1)
            let mut next = vec![0i64; 2 * d];
            for (i, &x) in c.iter().enumerate() {
                next[i + d - 1] += x;
                next[i] -= x;
            }
            c = reduce_poly(next, d);
        }
        c
    }

    pub fn mul_eta_pow(&self, k: i32) -> Self {
        AlgLength { coeffs: self.coeffs.clone(), scale: self.scale - k }
    }

    /// Twice the element; used where halving would leave `Z[η]`.
    pub fn double(&self) -> Self {
        AlgLength { coeffs: self.coeffs.iter().map(|c| 2 * c).collect(), scale: self.scale }
    }
}

/// Reduces a polynomial in `η` modulo `η^d - η - 1` to degree `< d`.
fn reduce_poly(mut c: Vec<i64>, d: usize) -> Vec<i64> {
    for k in (d..c.len()).rev() {
        let x = c[k];
        if x != 0 {
            c[k - d] += x;
            c[k - d + 1] += x;
            c[k] = 0;
        }
    }
    c.truncate(d);
    c
}

impl std::ops::Add for &AlgLength {
    type Output = AlgLength;

    fn add(self, rhs: &AlgLength) -> AlgLength {
        let scale = self.scale.max(rhs.scale);
        let a = self.at_scale(scale);
        let b = rhs.at_scale(scale);
        AlgLength { coeffs: a.iter().zip(&b).map(|(x, y)| x + y).collect(), scale }
    }
}

impl std::ops::Add for AlgLength {
    type Output = AlgLength;

    fn add(self, rhs: AlgLength) -> AlgLength {
        &self + &rhs
    }
}

impl std::ops::Neg for AlgLength {
    type Output = AlgLength;

    fn neg(self) -> AlgLength {
        AlgLength { coeffs: self.coeffs.iter().map(|c| -c).collect(), scale: self.scale }
    }
}

impl std::ops::Sub for &AlgLength {
    type Output = AlgLength;

    fn sub(self, rhs: &AlgLength) -> AlgLength {
        self + &(-rhs.clone())
    }
}

impl std::ops::Sub for AlgLength {
    type Output = AlgLength;

    fn sub(self, rhs: AlgLength) -> AlgLength {
        &self - &rhs
    }
}

impl std::ops::Mul for &AlgLength {
    type Output = AlgLength;

    fn mul(self, rhs: &AlgLength) -> AlgLength {
        let d = self.d();
        let mut prod = vec![0i64; 2 * d];
        for (i, &x) in self.coeffs.iter().enumerate() {
            for (j, &y) in rhs.coeffs.iter().enumerate() {
                prod[i + j] += x * y;
            }
        }
        AlgLength { coeffs: reduce_poly(prod, d), scale: self.scale + rhs.scale }
    }
}

impl PartialEq for AlgLength {
    fn eq(&self, other: &Self) -> bool {
        let scale = self.scale.max(other.scale);
        self.d() == other.d() && self.at_scale(scale) == other.at_scale(scale)
    }
}

impl Eq for AlgLength {}

impl PartialOrd for AlgLength {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(match (self - other).signum() {
            0 => Ordering::Equal,
            s if s > 0 => Ordering::Greater,
            _ => Ordering::Less,
        })
    }
}

impl fmt::Display for AlgLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, c)| match i {
                0 => c.to_string(),
                1 => format!("{c}η"),
                _ => format!("{c}η^{i}"),
            })
            .collect();
        let body = if terms.is_empty() { "0".to_string() } else { terms.join("+") };
        if self.scale == 0 {
            f.write_str(&body)
        } else {
            write!(f, "({body})η^{}", -self.scale)
        }
    }
}

/// `[coeffs…, scale]`.
impl Serialize for AlgLength {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.coeffs.len() + 1))?;
        for c in &self.coeffs {
            seq.serialize_element(c)?;
        }
        seq.serialize_element(&(self.scale as i64))?;
        seq.end()
    }
}

/// Edge-length weights `V_t`: `1` for color 1, `η^{d-k+1}` for `2 <= k <= d`,
/// `η^{-(k-d)}` for `k > d`.
pub fn v_t(d: usize, k: u8) -> AlgLength {
    let k = k as i32;
    let d = d as i32;
    let exp = match k {
        1 => 0,
        k if k <= d => d - k + 1,
        k => -(k - d),
    };
    AlgLength::eta_pow(d as usize, exp)
}

/// `V_{σ^{-1}}(k)` for letters `1..=d`: `1`, then `η^{d-k+1}`.
pub fn v_sigma_inverse_exact(d: usize, k: u8) -> AlgLength {
    debug_assert!(k >= 1 && k as usize <= d);
    v_t(d, k)
}

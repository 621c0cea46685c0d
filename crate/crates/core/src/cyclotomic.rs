//! Exact arithmetic in `Z[ζ_m]` for `m` an odd prime or `m = 4`.
//!
//! For odd prime `m` the canonical basis is `ζ⁰, …, ζ^{m−2}`; the last power
//! is eliminated through `1 + ζ + … + ζ^{m−1} = 0`. For `m = 4` the basis is
//! `1, ζ` with `ζ² = −1`. Canonical forms are unique, so structural equality
//! is value equality.

use alloc::{format, vec, vec::Vec};
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::galois::{is_prime, FieldElement, FieldSpec};

/// Root order used for characteristic `p`: `p` itself, or `4` when `p = 2`.
pub fn order_for(p: u32) -> u32 {
    if p == 2 {
        4
    } else {
        p
    }
}

/// The prime whose powers are the natural norms in `Z[ζ_m]`.
pub fn prime_for(m: u32) -> u32 {
    if m == 4 {
        2
    } else {
        m
    }
}

pub(crate) fn check_order(m: u32) -> Result<()> {
    if m == 4 || (m % 2 == 1 && is_prime(m as u64)) {
        Ok(())
    } else {
        Err(invalid(format!("unsupported root order {m} (need an odd prime or 4)")))
    }
}

/// Length of the canonical coefficient vector.
pub(crate) fn width_for(m: u32) -> usize {
    if m == 4 {
        2
    } else {
        m as usize - 1
    }
}

/// A cyclotomic integer in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawCycInt")]
pub struct CycInt {
    m: u32,
    coeffs: Vec<i64>,
}

#[derive(Deserialize)]
struct RawCycInt {
    m: u32,
    coeffs: Vec<i64>,
}

impl TryFrom<RawCycInt> for CycInt {
    type Error = Error;

    fn try_from(raw: RawCycInt) -> Result<Self> {
        CycInt::from_coeffs(raw.m, raw.coeffs)
    }
}

fn to_i64(x: i128) -> Result<i64> {
    i64::try_from(x).map_err(|_| Error::Overflow)
}

impl CycInt {
    /// Wraps an already canonical coefficient vector.
    pub fn from_coeffs(m: u32, coeffs: Vec<i64>) -> Result<Self> {
        check_order(m)?;
        if coeffs.len() != width_for(m) {
            return Err(invalid(format!(
                "order {m} needs {} coefficients, got {}",
                width_for(m),
                coeffs.len()
            )));
        }
        Ok(CycInt { m, coeffs })
    }

    pub(crate) fn from_canonical_unchecked(m: u32, coeffs: Vec<i64>) -> Self {
        debug_assert_eq!(coeffs.len(), width_for(m));
        CycInt { m, coeffs }
    }

    /// Reduces a vector `v` meaning `Σ vₑ ζᵉ` (length `m`) to canonical form.
    pub fn from_cyclic(m: u32, v: &[i64]) -> Result<Self> {
        check_order(m)?;
        if v.len() != m as usize {
            return Err(invalid(format!("cyclic form for order {m} needs {m} entries")));
        }
        let coeffs = if m == 4 {
            vec![v[0].checked_sub(v[2]).ok_or(Error::Overflow)?, v[1].checked_sub(v[3]).ok_or(Error::Overflow)?]
        } else {
            let last = v[m as usize - 1];
            v[..m as usize - 1]
                .iter()
                .map(|&x| x.checked_sub(last).ok_or(Error::Overflow))
                .collect::<Result<_>>()?
        };
        Ok(CycInt { m, coeffs })
    }

    /// The representation on `ζ⁰, …, ζ^{m−1}` with a zero top coefficient.
    pub fn to_cyclic(&self) -> Vec<i64> {
        let mut v = vec![0i64; self.m as usize];
        v[..self.coeffs.len()].copy_from_slice(&self.coeffs);
        v
    }

    pub fn zero(m: u32) -> Result<Self> {
        check_order(m)?;
        Ok(CycInt { m, coeffs: vec![0; width_for(m)] })
    }

    pub fn from_int(m: u32, k: i64) -> Result<Self> {
        let mut z = Self::zero(m)?;
        z.coeffs[0] = k;
        Ok(z)
    }

    pub fn one(m: u32) -> Result<Self> {
        Self::from_int(m, 1)
    }

    /// `ζ_mᵉ` in canonical form; `e` is reduced mod `m`.
    pub fn root_of_unity(m: u32, e: i64) -> Result<Self> {
        check_order(m)?;
        let e = e.rem_euclid(m as i64) as usize;
        let mut v = vec![0i64; m as usize];
        v[e] = 1;
        Self::from_cyclic(m, &v)
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// The integer value if `self` lies in `Z`.
    pub fn as_integer(&self) -> Option<i64> {
        self.coeffs[1..].iter().all(|&c| c == 0).then_some(self.coeffs[0])
    }

    fn same_order(&self, other: &CycInt) -> Result<()> {
        if self.m == other.m {
            Ok(())
        } else {
            Err(invalid(format!("root order mismatch: {} vs {}", self.m, other.m)))
        }
    }

    pub fn add(&self, other: &CycInt) -> Result<CycInt> {
        self.same_order(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| a.checked_add(b).ok_or(Error::Overflow))
            .collect::<Result<_>>()?;
        Ok(CycInt { m: self.m, coeffs })
    }

    pub fn sub(&self, other: &CycInt) -> Result<CycInt> {
        self.add(&other.neg()?)
    }

    pub fn neg(&self) -> Result<CycInt> {
        let coeffs =
            self.coeffs.iter().map(|&a| a.checked_neg().ok_or(Error::Overflow)).collect::<Result<_>>()?;
        Ok(CycInt { m: self.m, coeffs })
    }

    pub fn scale(&self, k: i64) -> Result<CycInt> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|&a| a.checked_mul(k).ok_or(Error::Overflow))
            .collect::<Result<_>>()?;
        Ok(CycInt { m: self.m, coeffs })
    }

    pub fn mul(&self, other: &CycInt) -> Result<CycInt> {
        self.same_order(other)?;
        let m = self.m as usize;
        if m == 4 {
            let (a, b) = (self.coeffs[0] as i128, self.coeffs[1] as i128);
            let (c, d) = (other.coeffs[0] as i128, other.coeffs[1] as i128);
            return Ok(CycInt { m: 4, coeffs: vec![to_i64(a * c - b * d)?, to_i64(a * d + b * c)?] });
        }
        let mut acc = vec![0i128; m];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                let k = (i + j) % m;
                acc[k] += a as i128 * b as i128;
            }
        }
        let last = acc[m - 1];
        let coeffs = acc[..m - 1].iter().map(|&x| to_i64(x - last)).collect::<Result<_>>()?;
        Ok(CycInt { m: self.m, coeffs })
    }

    /// Complex conjugation `ζ ↦ ζ^{m−1}`.
    pub fn conj(&self) -> CycInt {
        let m = self.m as usize;
        if m == 4 {
            return CycInt { m: 4, coeffs: vec![self.coeffs[0], -self.coeffs[1]] };
        }
        let mut v = vec![0i64; m];
        for (e, &c) in self.coeffs.iter().enumerate() {
            v[(m - e) % m] = c;
        }
        let last = v[m - 1];
        CycInt { m: self.m, coeffs: v[..m - 1].iter().map(|&x| x - last).collect() }
    }

    /// `self · conj(self)`, always a nonnegative real cyclotomic integer.
    pub fn norm_sq(&self) -> Result<CycInt> {
        self.mul(&self.conj())
    }

    /// True iff `|self|² = pᵏ` exactly, with `p` the prime of the root order.
    pub fn norm_check(&self, k: u32) -> bool {
        let target = match (prime_for(self.m) as i64).checked_pow(k) {
            Some(t) => t,
            None => return false,
        };
        matches!(self.norm_sq().map(|n| n.as_integer()), Ok(Some(v)) if v == target)
    }

    /// `Some(order)` if `self` is a root of unity.
    pub fn root_order(&self) -> Option<u32> {
        let m = self.m as i64;
        for e in 0..m {
            let z = CycInt::root_of_unity(self.m, e).ok()?;
            let base = if e == 0 { 1 } else { self.m / gcd(e as u32, self.m) };
            if *self == z {
                return Some(base);
            }
            if self.m != 4 && z.neg().ok()? == *self {
                return Some(lcm(base, 2));
            }
        }
        None
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lcm(a: u32, b: u32) -> u32 {
    a / gcd(a, b) * b
}

impl fmt::Display for CycInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let sign = if c < 0 { "-" } else if first { "" } else { "+" };
            let mag = c.unsigned_abs();
            f.write_str(sign)?;
            match (e, mag) {
                (0, k) => write!(f, "{k}")?,
                (1, 1) => f.write_str("z")?,
                (1, k) => write!(f, "{k}z")?,
                (e, 1) => write!(f, "z^{e}")?,
                (e, k) => write!(f, "{k}z^{e}")?,
            }
            first = false;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// The additive character `χ(θ) = exp(2πi·tr θ / p)`.
///
/// For odd `p` this is `ζ_p^{tr θ}`; for `p = 2` it is `ζ₄^{2 tr θ} = ±1`.
pub fn char_value(spec: &FieldSpec, theta: &FieldElement) -> Result<CycInt> {
    let tr = spec.trace(theta)?.value() as i64;
    let m = order_for(spec.p());
    let e = if spec.p() == 2 { 2 * tr } else { tr };
    CycInt::root_of_unity(m, e)
}

/// `Σ_{x ∈ F_p} ζ_p^{x²}` for odd `p`; equals `√p` when `p ≡ 1 (mod 4)`
/// and `i√p` when `p ≡ 3 (mod 4)`.
pub fn quadratic_gauss_sum(p: u32) -> Result<CycInt> {
    if p == 2 {
        return Err(Error::Unsupported("quadratic Gauss sum needs odd p".into()));
    }
    check_order(p)?;
    let mut v = vec![0i64; p as usize];
    for x in 0..p as u64 {
        v[(x * x % p as u64) as usize] += 1;
    }
    CycInt::from_cyclic(p, &v)
}

/// `p^{−t/2} · value`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScaledValue {
    pub t: u32,
    pub value: CycInt,
}

impl ScaledValue {
    pub fn new(value: CycInt, t: u32) -> Self {
        ScaledValue { t, value }
    }

    pub fn p(&self) -> u32 {
        prime_for(self.value.m)
    }

    pub fn mul(&self, other: &ScaledValue) -> Result<ScaledValue> {
        Ok(ScaledValue { t: self.t + other.t, value: self.value.mul(&other.value)? })
    }

    pub fn conj(&self) -> ScaledValue {
        ScaledValue { t: self.t, value: self.value.conj() }
    }

    /// Lowers `t` by two while every coefficient is divisible by `p`.
    pub fn normalized(&self) -> ScaledValue {
        let p = self.p() as i64;
        let mut out = self.clone();
        while out.t >= 2 && !out.value.is_zero() && out.value.coeffs.iter().all(|&c| c % p == 0) {
            out.value.coeffs.iter_mut().for_each(|c| *c /= p);
            out.t -= 2;
        }
        if out.value.is_zero() {
            out.t = 0;
        }
        out
    }

    /// True iff `|self| = 1`.
    pub fn is_unimodular(&self) -> bool {
        self.value.norm_check(self.t)
    }

    /// Exact equality of the represented complex numbers.
    pub fn scaled_eq(&self, other: &ScaledValue) -> Result<bool> {
        self.value.same_order(&other.value)?;
        let (lo, hi) = if self.t <= other.t { (self, other) } else { (other, self) };
        let gap = hi.t - lo.t;
        let p = lo.p();
        let lifted = lo.value.scale((p as i64).checked_pow(gap / 2).ok_or(Error::Overflow)?)?;
        if gap % 2 == 0 {
            return Ok(lifted == hi.value);
        }
        if p % 4 == 1 {
            let root = quadratic_gauss_sum(p)?;
            Ok(lifted.mul(&root)? == hi.value)
        } else {
            // √p lies outside Q(ζ_m) here, so only zero can match.
            Ok(lo.value.is_zero() && hi.value.is_zero())
        }
    }

    /// `Some(order)` if `self` is a root of unity of order dividing `2m` or
    /// a primitive 8th root (`p = 2`, odd `t`).
    pub fn root_order(&self) -> Option<u32> {
        let s = self.normalized();
        if s.t == 0 {
            return s.value.root_order();
        }
        if s.value.m == 4 && s.t == 1 && s.value.norm_check(1) {
            // (±1 ± i)/√2
            return Some(8);
        }
        None
    }
}

impl fmt::Display for ScaledValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.t == 0 {
            write!(f, "{}", self.value)
        } else {
            write!(f, "({})*{}^(-{}/2)", self.value, self.p(), self.t)
        }
    }
}

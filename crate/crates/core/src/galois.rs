//! Arithmetic in `F_p` and `GF(p^n) = F_p[α]/(f)`.
//!
//! Elements are coefficient vectors `(c₀, …, c_{n−1})` for
//! `θ = Σ cᵢ αⁱ`. The basis ordering used everywhere downstream puts `c₀`
//! in the most significant position, so for `GF(p²)` the computational
//! basis reads `|0⟩, |α⟩, |2α⟩, …, |1⟩, |1+α⟩, …`.

use alloc::{format, vec, vec::Vec};
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{internal, invalid, Error, Result};

/// Largest `d = pⁿ` accepted unless a larger guard is requested explicitly.
pub const DEFAULT_SIZE_GUARD: u64 = 1024;

/// Deterministic primality test by trial division.
pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    if p < 4 {
        return true;
    }
    if p % 2 == 0 || p % 3 == 0 {
        return false;
    }
    let mut k = 5u64;
    while k.saturating_mul(k) <= p {
        if p % k == 0 || p % (k + 2) == 0 {
            return false;
        }
        k += 6;
    }
    true
}

/// Distinct prime factors in increasing order.
pub(crate) fn prime_factors(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut q = 2u64;
    while q.saturating_mul(q) <= m {
        if m % q == 0 {
            out.push(q);
            while m % q == 0 {
                m /= q;
            }
        }
        q += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

#[inline]
fn mulmod(a: u32, b: u32, p: u32) -> u32 {
    ((a as u64 * b as u64) % p as u64) as u32
}

fn powmod(mut base: u32, mut e: u64, p: u32) -> u32 {
    let mut acc = 1 % p;
    base %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, base, p);
        }
        base = mulmod(base, base, p);
        e >>= 1;
    }
    acc
}

/// Inverse in `F_p` of a nonzero residue.
fn inv_residue(a: u32, p: u32) -> u32 {
    powmod(a, p as u64 - 2, p)
}

/// Dense polynomials over `F_p`, little-endian, with no trailing zeros.
mod poly {
    use super::{inv_residue, mulmod, powmod};
    use alloc::{vec, vec::Vec};

    pub(super) fn trim(a: &mut Vec<u32>) {
        while a.last() == Some(&0) {
            a.pop();
        }
    }

    pub(super) fn sub(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let mut out = vec![0; a.len().max(b.len())];
        for (i, slot) in out.iter_mut().enumerate() {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            *slot = (x + p - y) % p;
        }
        trim(&mut out);
        out
    }

    pub(super) fn mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        if a.is_empty() || b.is_empty() {
            return Vec::new();
        }
        let mut out = vec![0u32; a.len() + b.len() - 1];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + mulmod(x, y, p)) % p;
            }
        }
        trim(&mut out);
        out
    }

    /// Quotient and remainder; `f` must be nonzero.
    pub(super) fn divrem(a: &[u32], f: &[u32], p: u32) -> (Vec<u32>, Vec<u32>) {
        let mut r = a.to_vec();
        trim(&mut r);
        let df = f.len() - 1;
        let lead_inv = inv_residue(f[df], p);
        if r.len() < f.len() {
            return (Vec::new(), r);
        }
        let mut q = vec![0u32; r.len() - df];
        while r.len() >= f.len() {
            let shift = r.len() - f.len();
            let c = mulmod(*r.last().unwrap(), lead_inv, p);
            q[shift] = c;
            for (i, &fi) in f.iter().enumerate() {
                let t = mulmod(c, fi, p);
                r[shift + i] = (r[shift + i] + p - t) % p;
            }
            trim(&mut r);
        }
        trim(&mut q);
        (q, r)
    }

    pub(super) fn rem(a: &[u32], f: &[u32], p: u32) -> Vec<u32> {
        divrem(a, f, p).1
    }

    pub(super) fn make_monic(a: &mut [u32], p: u32) {
        if let Some(&lead) = a.last() {
            let inv = inv_residue(lead, p);
            for c in a.iter_mut() {
                *c = mulmod(*c, inv, p);
            }
        }
    }

    pub(super) fn gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let mut x = a.to_vec();
        let mut y = b.to_vec();
        trim(&mut x);
        trim(&mut y);
        while !y.is_empty() {
            let r = rem(&x, &y, p);
            x = y;
            y = r;
        }
        make_monic(&mut x, p);
        x
    }

    /// `base^e mod f`.
    pub(super) fn pow_mod(base: &[u32], mut e: u64, f: &[u32], p: u32) -> Vec<u32> {
        let mut acc = rem(&[1], f, p);
        let mut b = rem(base, f, p);
        while e > 0 {
            if e & 1 == 1 {
                acc = rem(&mul(&acc, &b, p), f, p);
            }
            b = rem(&mul(&b, &b, p), f, p);
            e >>= 1;
        }
        acc
    }

    /// Rabin's irreducibility test for a polynomial of degree `n ≥ 1`.
    pub(super) fn is_irreducible(f: &[u32], p: u32) -> bool {
        let n = f.len() - 1;
        if n == 0 {
            return false;
        }
        if n == 1 {
            return true;
        }
        let x = rem(&[0, 1], f, p);
        // frob[k] = x^{p^(k+1)} mod f
        let mut frob = Vec::with_capacity(n);
        let mut h = x.clone();
        for _ in 0..n {
            h = pow_mod(&h, p as u64, f, p);
            frob.push(h.clone());
        }
        if frob[n - 1] != x {
            return false;
        }
        for r in super::prime_factors(n as u64) {
            let k = n / r as usize;
            let g = gcd(&sub(&frob[k - 1], &x, p), f, p);
            if g.len() != 1 {
                return false;
            }
        }
        true
    }

    #[allow(dead_code)]
    pub(super) fn eval(a: &[u32], x: u32, p: u32) -> u32 {
        a.iter().rev().fold(0, |acc, &c| (mulmod(acc, x, p) + c) % p)
    }

    #[allow(dead_code)]
    pub(super) fn powmod_scalar(a: u32, e: u64, p: u32) -> u32 {
        powmod(a, e, p)
    }
}

/// A residue modulo `p`, always in `[0, p − 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PrimeResidue(u32);

impl PrimeResidue {
    pub fn new(value: u64, p: u32) -> Self {
        PrimeResidue((value % p as u64) as u32)
    }

    pub fn value(self) -> u32 {
        self.0
    }
}

impl fmt::Display for PrimeResidue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An element `Σ cᵢ αⁱ` of `GF(pⁿ)`.
///
/// Elements do not carry their field; every operation goes through the
/// [`FieldSpec`] that validates membership (length `n`, residues `< p`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElement {
    coeffs: Vec<u32>,
}

impl FieldElement {
    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                f.write_str("+")?;
            }
            first = false;
            match (i, c) {
                (0, c) => write!(f, "{c}")?,
                (1, 1) => f.write_str("a")?,
                (1, c) => write!(f, "{c}a")?,
                (i, 1) => write!(f, "a^{i}")?,
                (i, c) => write!(f, "{c}a^{i}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// The field `GF(pⁿ)` defined by a monic irreducible
/// `xⁿ + c_{n−1}x^{n−1} + … + c₀`, stored as `poly = (c₀, …, c_{n−1})`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawFieldSpec", into = "RawFieldSpec")]
pub struct FieldSpec {
    p: u32,
    n: u32,
    poly: Vec<u32>,
    d: u64,
}

#[derive(Serialize, Deserialize)]
struct RawFieldSpec {
    p: u32,
    n: u32,
    poly: Vec<u32>,
}

impl TryFrom<RawFieldSpec> for FieldSpec {
    type Error = Error;

    fn try_from(raw: RawFieldSpec) -> Result<Self> {
        // The size guard is a policy of the caller, not of the file format.
        FieldSpec::with_guard(raw.p, raw.n, raw.poly, u64::MAX)
    }
}

impl From<FieldSpec> for RawFieldSpec {
    fn from(spec: FieldSpec) -> Self {
        RawFieldSpec { p: spec.p, n: spec.n, poly: spec.poly }
    }
}

fn checked_dimension(p: u32, n: u32, guard: u64) -> Result<u64> {
    if !is_prime(p as u64) {
        return Err(invalid(format!("p must be prime (got {p})")));
    }
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    let d = (p as u64)
        .checked_pow(n)
        .ok_or(Error::SizeLimit { requested: u64::MAX, limit: guard })?;
    if d > guard {
        return Err(Error::SizeLimit { requested: d, limit: guard });
    }
    Ok(d)
}

/// The lexicographically smallest monic irreducible of degree `n` over
/// `F_p` (ordering on `(c₀, …, c_{n−1})`), under the default size guard.
pub fn find_irreducible(p: u32, n: u32) -> Result<FieldSpec> {
    find_irreducible_with_guard(p, n, DEFAULT_SIZE_GUARD)
}

pub fn find_irreducible_with_guard(p: u32, n: u32, guard: u64) -> Result<FieldSpec> {
    let d = checked_dimension(p, n, guard)?;
    // Candidates in lexicographic order are exactly the base-p digit
    // expansions of 0, 1, 2, … with c₀ most significant.
    for idx in 0..d {
        let poly = digits_msb_first(idx, p, n);
        let mut f = poly.clone();
        f.push(1);
        if poly::is_irreducible(&f, p) {
            return Ok(FieldSpec { p, n, poly, d });
        }
    }
    Err(internal(format!("no irreducible polynomial of degree {n} over F_{p}")))
}

fn digits_msb_first(mut idx: u64, p: u32, n: u32) -> Vec<u32> {
    let mut out = vec![0u32; n as usize];
    for slot in out.iter_mut().rev() {
        *slot = (idx % p as u64) as u32;
        idx /= p as u64;
    }
    out
}

impl FieldSpec {
    /// Validates `p`, the polynomial and the default size guard.
    pub fn new(p: u32, n: u32, poly: Vec<u32>) -> Result<Self> {
        Self::with_guard(p, n, poly, DEFAULT_SIZE_GUARD)
    }

    pub fn with_guard(p: u32, n: u32, poly: Vec<u32>, guard: u64) -> Result<Self> {
        let d = checked_dimension(p, n, guard)?;
        if poly.len() != n as usize {
            return Err(invalid(format!(
                "polynomial needs {n} coefficients, got {}",
                poly.len()
            )));
        }
        if let Some(&c) = poly.iter().find(|&&c| c >= p) {
            return Err(invalid(format!("coefficient {c} is not a residue mod {p}")));
        }
        let mut f = poly.clone();
        f.push(1);
        if !poly::is_irreducible(&f, p) {
            return Err(invalid(format!("polynomial {poly:?} is reducible over F_{p}")));
        }
        Ok(FieldSpec { p, n, poly, d })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn poly(&self) -> &[u32] {
        &self.poly
    }

    /// Field size `d = pⁿ`.
    pub fn d(&self) -> usize {
        self.d as usize
    }

    fn width(&self) -> usize {
        self.n as usize
    }

    pub fn check(&self, a: &FieldElement) -> Result<()> {
        if a.coeffs.len() != self.width() {
            return Err(invalid(format!(
                "element has {} coefficients, field GF({}^{}) needs {}",
                a.coeffs.len(),
                self.p,
                self.n,
                self.n
            )));
        }
        if a.coeffs.iter().any(|&c| c >= self.p) {
            return Err(invalid(format!("element coefficient out of range mod {}", self.p)));
        }
        Ok(())
    }

    /// Builds an element from coefficients `(c₀, …, c_{n−1})`.
    pub fn element(&self, coeffs: &[u32]) -> Result<FieldElement> {
        let e = FieldElement { coeffs: coeffs.to_vec() };
        self.check(&e)?;
        Ok(e)
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement { coeffs: vec![0; self.width()] }
    }

    pub fn one(&self) -> FieldElement {
        self.from_residue(1)
    }

    /// The constant `r mod p` embedded in the field.
    pub fn from_residue(&self, r: u64) -> FieldElement {
        let mut coeffs = vec![0; self.width()];
        coeffs[0] = (r % self.p as u64) as u32;
        FieldElement { coeffs }
    }

    /// `αⁱ` for `i < n`: the i-th coordinate basis vector.
    pub fn basis(&self, i: usize) -> FieldElement {
        let mut coeffs = vec![0; self.width()];
        coeffs[i] = 1;
        FieldElement { coeffs }
    }

    /// The root `α` of the defining polynomial.
    pub fn alpha(&self) -> FieldElement {
        if self.n == 1 {
            self.from_residue(((self.p - self.poly[0]) % self.p) as u64)
        } else {
            self.basis(1)
        }
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> Result<FieldElement> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.add_unchecked(a, b))
    }

    fn add_unchecked(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let p = self.p;
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(&x, &y)| (x + y) % p).collect();
        FieldElement { coeffs }
    }

    pub fn neg(&self, a: &FieldElement) -> Result<FieldElement> {
        self.check(a)?;
        let p = self.p;
        Ok(FieldElement { coeffs: a.coeffs.iter().map(|&x| (p - x) % p).collect() })
    }

    pub fn sub(&self, a: &FieldElement, b: &FieldElement) -> Result<FieldElement> {
        let nb = self.neg(b)?;
        self.add(a, &nb)
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> Result<FieldElement> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul_unchecked(a, b))
    }

    fn mul_unchecked(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        let p = self.p;
        let n = self.width();
        let mut prod = vec![0u32; 2 * n - 1];
        for (i, &x) in a.coeffs.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.coeffs.iter().enumerate() {
                prod[i + j] = (prod[i + j] + mulmod(x, y, p)) % p;
            }
        }
        // αⁿ = −(c₀ + c₁α + … + c_{n−1}α^{n−1})
        for k in (n..2 * n - 1).rev() {
            let c = prod[k];
            if c == 0 {
                continue;
            }
            prod[k] = 0;
            for (i, &pi) in self.poly.iter().enumerate() {
                let t = mulmod(c, pi, p);
                prod[k - n + i] = (prod[k - n + i] + p - t) % p;
            }
        }
        prod.truncate(n);
        FieldElement { coeffs: prod }
    }

    pub fn pow(&self, a: &FieldElement, mut e: u64) -> Result<FieldElement> {
        self.check(a)?;
        let mut acc = self.one();
        let mut base = a.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_unchecked(&acc, &base);
            }
            base = self.mul_unchecked(&base, &base);
            e >>= 1;
        }
        Ok(acc)
    }

    /// The Frobenius map `θ ↦ θᵖ`.
    pub fn frobenius(&self, a: &FieldElement) -> Result<FieldElement> {
        self.pow(a, self.p as u64)
    }

    /// Multiplicative inverse: exhaustive search for `d ≤ 4096`, extended
    /// Euclid on polynomials above.
    pub fn inv(&self, a: &FieldElement) -> Result<FieldElement> {
        if self.d <= 4096 {
            self.inv_exhaustive(a)
        } else {
            self.inv_euclid(a)
        }
    }

    pub fn inv_exhaustive(&self, a: &FieldElement) -> Result<FieldElement> {
        self.check(a)?;
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let one = self.one();
        self.elements()
            .find(|b| self.mul_unchecked(a, b) == one)
            .ok_or_else(|| internal("element without inverse; defining polynomial is reducible"))
    }

    pub fn inv_euclid(&self, a: &FieldElement) -> Result<FieldElement> {
        self.check(a)?;
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let p = self.p;
        let mut f = self.poly.clone();
        f.push(1);
        // Invariant: s_i · a ≡ r_i (mod f).
        let mut r0 = f;
        let mut r1 = a.coeffs.clone();
        poly::trim(&mut r1);
        let mut s0: Vec<u32> = Vec::new();
        let mut s1: Vec<u32> = vec![1];
        while r1.len() > 1 {
            let (q, r) = poly::divrem(&r0, &r1, p);
            let s = poly::sub(&s0, &poly::mul(&q, &s1, p), p);
            r0 = core::mem::replace(&mut r1, r);
            s0 = core::mem::replace(&mut s1, s);
        }
        if r1.is_empty() {
            return Err(internal("gcd with the modulus is not a unit"));
        }
        let c = inv_residue(r1[0], p);
        let mut coeffs = vec![0u32; self.width()];
        for (i, &si) in s1.iter().enumerate() {
            coeffs[i] = mulmod(si, c, p);
        }
        Ok(FieldElement { coeffs })
    }

    /// `tr θ = θ + θᵖ + … + θ^{p^{n−1}}`, computed by repeated Frobenius.
    pub fn trace(&self, a: &FieldElement) -> Result<PrimeResidue> {
        self.check(a)?;
        let mut acc = a.clone();
        let mut x = a.clone();
        for _ in 1..self.n {
            x = self.frobenius(&x)?;
            acc = self.add_unchecked(&acc, &x);
        }
        if acc.coeffs[1..].iter().any(|&c| c != 0) {
            return Err(internal("trace left the prime subfield"));
        }
        Ok(PrimeResidue(acc.coeffs[0]))
    }

    /// Position of `a` in the computational basis: `Σ cᵢ p^{n−1−i}`.
    pub fn index_of(&self, a: &FieldElement) -> Result<usize> {
        self.check(a)?;
        Ok(a.coeffs.iter().fold(0usize, |acc, &c| acc * self.p as usize + c as usize))
    }

    pub fn element_at(&self, i: usize) -> Result<FieldElement> {
        if i as u64 >= self.d {
            return Err(invalid(format!("index {i} out of range for d = {}", self.d)));
        }
        Ok(FieldElement { coeffs: digits_msb_first(i as u64, self.p, self.n) })
    }

    /// All elements in index order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.d).map(move |i| FieldElement { coeffs: digits_msb_first(i, self.p, self.n) })
    }

    /// The unique `θ` with `tr(θ·θ′) = Σ kᵢ cᵢ(θ′)` for every `θ′`.
    ///
    /// Solves the `n × n` system `Σⱼ xⱼ tr(α^{i+j}) = kᵢ` over `F_p`.
    pub fn solve_trace_dual(&self, form: &[PrimeResidue]) -> Result<FieldElement> {
        let n = self.width();
        if form.len() != n {
            return Err(invalid(format!("linear form needs {n} values, got {}", form.len())));
        }
        let p = self.p;
        if form.iter().any(|k| k.0 >= p) {
            return Err(invalid("linear form value is not a residue"));
        }
        let basis: Vec<FieldElement> = (0..n).map(|i| self.basis(i)).collect();
        // Augmented matrix [T | k] with T_ij = tr(αⁱ αʲ).
        let mut rows: Vec<Vec<u32>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::with_capacity(n + 1);
            for b in &basis {
                row.push(self.trace(&self.mul_unchecked(&basis[i], b))?.0);
            }
            row.push(form[i].0);
            rows.push(row);
        }
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| rows[r][col] != 0)
                .ok_or_else(|| internal("trace form is degenerate; polynomial not irreducible"))?;
            rows.swap(col, pivot);
            let inv = inv_residue(rows[col][col], p);
            for v in rows[col].iter_mut() {
                *v = mulmod(*v, inv, p);
            }
            for r in 0..n {
                if r != col && rows[r][col] != 0 {
                    let factor = rows[r][col];
                    let pivot_row = rows[col].clone();
                    for (v, &x) in rows[r].iter_mut().zip(&pivot_row) {
                        *v = (*v + p - mulmod(factor, x, p)) % p;
                    }
                }
            }
        }
        Ok(FieldElement { coeffs: rows.iter().map(|row| row[n]).collect() })
    }

    /// The quadratic character `η(a) = a^{(q−1)/2} ∈ {±1}` for odd `p`.
    pub fn quadratic_character(&self, a: &FieldElement) -> Result<i8> {
        if self.p == 2 {
            return Err(Error::Unsupported("quadratic character needs odd p".into()));
        }
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let r = self.pow(a, (self.d - 1) / 2)?;
        if r == self.one() {
            Ok(1)
        } else if r == self.neg(&self.one())? {
            Ok(-1)
        } else {
            Err(internal("Euler criterion gave neither 1 nor -1"))
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({}^{}) x^{}", self.p, self.n, self.n)?;
        for (i, &c) in self.poly.iter().enumerate().rev() {
            if c != 0 {
                match i {
                    0 => write!(f, " + {c}")?,
                    1 => write!(f, " + {c}x")?,
                    _ => write!(f, " + {c}x^{i}")?,
                }
            }
        }
        Ok(())
    }
}

/// Index-based lookup tables for the inner loops of the matrix builders.
///
/// Elements are referred to by [`FieldSpec::index_of`]. Multiplication goes
/// through discrete log/exp tables for a primitive element; addition is
/// digitwise.
#[derive(Debug, Clone)]
pub struct FieldTables {
    p: u32,
    n: usize,
    d: usize,
    digits: Vec<u32>,
    place: Vec<usize>,
    log: Vec<u32>,
    exp: Vec<u32>,
    trace: Vec<u32>,
}

impl FieldTables {
    pub fn new(spec: &FieldSpec) -> Result<Self> {
        let d = spec.d();
        let n = spec.width();
        let p = spec.p;
        let mut digits = Vec::with_capacity(d * n);
        let mut trace = Vec::with_capacity(d);
        for e in spec.elements() {
            digits.extend_from_slice(&e.coeffs);
        }
        let place: Vec<usize> = (0..n).map(|i| (p as usize).pow((n - 1 - i) as u32)).collect();

        // Traces are F_p-linear, so the basis traces determine all of them.
        let basis_tr: Vec<u32> =
            (0..n).map(|i| spec.trace(&spec.basis(i)).map(|r| r.0)).collect::<Result<_>>()?;
        for i in 0..d {
            let t = digits[i * n..(i + 1) * n]
                .iter()
                .zip(&basis_tr)
                .fold(0u64, |acc, (&c, &t)| acc + c as u64 * t as u64);
            trace.push((t % p as u64) as u32);
        }

        let generator = find_generator(spec)?;
        let mut exp = vec![0u32; d - 1];
        let mut log = vec![u32::MAX; d];
        let mut x = spec.one();
        for (k, slot) in exp.iter_mut().enumerate() {
            let idx = spec.index_of(&x)?;
            *slot = idx as u32;
            log[idx] = k as u32;
            x = spec.mul_unchecked(&x, &generator);
        }
        if x != spec.one() {
            return Err(internal("generator order mismatch"));
        }
        Ok(FieldTables { p, n, d, digits, place, log, exp, trace })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn digits(&self, a: usize) -> &[u32] {
        &self.digits[a * self.n..(a + 1) * self.n]
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let p = self.p;
        let (da, db) = (self.digits(a), self.digits(b));
        (0..self.n).map(|i| ((da[i] + db[i]) % p) as usize * self.place[i]).sum()
    }

    pub fn neg(&self, a: usize) -> usize {
        let p = self.p;
        let da = self.digits(a);
        (0..self.n).map(|i| ((p - da[i]) % p) as usize * self.place[i]).sum()
    }

    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        if a == 0 || b == 0 {
            return 0;
        }
        let k = (self.log[a] as usize + self.log[b] as usize) % (self.d - 1);
        self.exp[k] as usize
    }

    /// Inverse of a nonzero index; `0` maps to `0`.
    pub fn inv(&self, a: usize) -> usize {
        if a == 0 {
            return 0;
        }
        let k = (self.d - 1 - self.log[a] as usize) % (self.d - 1);
        self.exp[k] as usize
    }

    pub fn trace(&self, a: usize) -> u32 {
        self.trace[a]
    }

    /// Index of the constant `r mod p`.
    pub fn residue(&self, r: u32) -> usize {
        (r % self.p) as usize * self.place[0]
    }
}

/// Smallest element (in index order) generating the multiplicative group.
fn find_generator(spec: &FieldSpec) -> Result<FieldElement> {
    let order = spec.d - 1;
    if order == 1 {
        return Ok(spec.one());
    }
    let factors = prime_factors(order);
    for g in spec.elements().skip(1) {
        let ok = factors.iter().all(|&q| spec.pow(&g, order / q).map(|x| x != spec.one()).unwrap_or(false));
        if ok {
            return Ok(g);
        }
    }
    Err(internal("multiplicative group has no generator"))
}

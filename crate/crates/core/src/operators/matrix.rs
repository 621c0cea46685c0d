//! Dense exact matrices over `Z[ζ_m]` with a symbolic `p^{−t/2}` scale.

use alloc::{format, vec, vec::Vec};

use serde::de::Error as _;
use serde::ser::{SerializeSeq, SerializeStruct};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cyclotomic::{check_order, order_for, quadratic_gauss_sum, width_for, CycInt, ScaledValue};
use crate::error::{invalid, Error, Result};
use crate::par;

/// Largest number of stored integer coefficients (`d²·width`) per matrix.
pub const MAX_MATRIX_WORDS: u64 = 1 << 27;

/// Structural hint carried by a matrix. Fast paths rely on it, so
/// constructors validate it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Dense,
    Permutation,
    Diagonal,
}

/// A `d × d` matrix `p^{−t/2} · E` with `E` over `Z[ζ_m]`.
///
/// Entries are stored row-major as canonical coefficient vectors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactMatrix {
    p: u32,
    m: u32,
    w: usize,
    dim: usize,
    t: u32,
    tag: Structure,
    data: Vec<i64>,
}

/// Cyclic (length `m`) vectors, the working form for products.
pub(crate) struct CyclicBuf {
    pub(crate) m: usize,
    pub(crate) data: Vec<i64>,
}

impl CyclicBuf {
    pub(crate) fn zeros(m: usize, len: usize) -> Self {
        CyclicBuf { m, data: vec![0; m * len] }
    }

    pub(crate) fn get(&self, i: usize) -> &[i64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub(crate) fn get_mut(&mut self, i: usize) -> &mut [i64] {
        &mut self.data[i * self.m..(i + 1) * self.m]
    }
}

/// `out += ζ^r · v` for cyclic vectors of equal length.
#[inline]
pub(crate) fn rotate_add(out: &mut [i64], v: &[i64], r: usize) {
    let m = v.len();
    let r = r % m;
    let (head, tail) = v.split_at(m - r);
    for (o, &x) in out[r..].iter_mut().zip(head) {
        *o += x;
    }
    for (o, &x) in out[..r].iter_mut().zip(tail) {
        *o += x;
    }
}

/// Writes the canonical form of cyclic vector `v` into `out`.
#[inline]
pub(crate) fn canonicalize(m: usize, v: &[i64], out: &mut [i64]) {
    if m == 4 {
        out[0] = v[0] - v[2];
        out[1] = v[1] - v[3];
    } else {
        let last = v[m - 1];
        for (o, &x) in out.iter_mut().zip(&v[..m - 1]) {
            *o = x - last;
        }
    }
}

/// Sparse term lists `(exponent, coefficient)` for every entry, using for
/// odd `m` the shift by the most frequent cyclic coefficient (valid since
/// `Σ ζᵉ = 0`) to keep lists short.
struct Terms {
    start: Vec<u32>,
    exps: Vec<u32>,
    coefs: Vec<i64>,
    max_l1: i128,
}

impl Terms {
    fn new(a: &ExactMatrix) -> Self {
        let m = a.m as usize;
        let n_entries = a.dim * a.dim;
        let mut start = Vec::with_capacity(n_entries + 1);
        let mut exps = Vec::new();
        let mut coefs = Vec::new();
        let mut max_l1 = 0i128;
        let mut cyc = vec![0i64; m];
        let mut sorted = vec![0i64; m];
        for idx in 0..n_entries {
            start.push(exps.len() as u32);
            let e = a.entry_raw(idx);
            cyc[..a.w].copy_from_slice(e);
            cyc[a.w..].iter_mut().for_each(|x| *x = 0);
            let shift = if m == 4 || e.iter().all(|&x| x == 0) {
                0
            } else {
                sorted.copy_from_slice(&cyc);
                sorted.sort_unstable();
                let (mut best, mut best_len, mut run) = (0i64, 0usize, 0usize);
                for k in 0..m {
                    run = if k > 0 && sorted[k] == sorted[k - 1] { run + 1 } else { 1 };
                    if run > best_len || (run == best_len && sorted[k] == 0) {
                        best = sorted[k];
                        best_len = run;
                    }
                }
                best
            };
            let mut l1 = 0i128;
            for (k, &x) in cyc.iter().enumerate() {
                let c = x - shift;
                if c != 0 {
                    exps.push(k as u32);
                    coefs.push(c);
                    l1 += (c as i128).abs();
                }
            }
            max_l1 = max_l1.max(l1);
        }
        start.push(exps.len() as u32);
        Terms { start, exps, coefs, max_l1 }
    }

    #[inline]
    fn range(&self, idx: usize) -> core::ops::Range<usize> {
        self.start[idx] as usize..self.start[idx + 1] as usize
    }
}

fn matrix_words(dim: usize, w: usize) -> Result<()> {
    let words = (dim as u64).saturating_mul(dim as u64).saturating_mul(w as u64);
    if words > MAX_MATRIX_WORDS {
        return Err(Error::SizeLimit { requested: dim as u64, limit: MAX_MATRIX_WORDS });
    }
    Ok(())
}

/// `log_p(dim)` if `dim` is a power of `p`.
pub(crate) fn log_p(dim: usize, p: u32) -> Option<u32> {
    let mut k = 0;
    let mut x = 1usize;
    while x < dim {
        x = x.checked_mul(p as usize)?;
        k += 1;
    }
    (x == dim).then_some(k)
}

impl ExactMatrix {
    fn blank(p: u32, dim: usize, t: u32, tag: Structure) -> Result<Self> {
        let m = order_for(p);
        check_order(m)?;
        let w = width_for(m);
        matrix_words(dim, w)?;
        Ok(ExactMatrix { p, m, w, dim, t, tag, data: vec![0; dim * dim * w] })
    }

    pub fn zeros(p: u32, dim: usize) -> Result<Self> {
        Self::blank(p, dim, 0, Structure::Dense)
    }

    pub fn identity(p: u32, dim: usize) -> Result<Self> {
        let perm: Vec<usize> = (0..dim).collect();
        Self::permutation(p, &perm)
    }

    /// The permutation matrix sending basis vector `k` to `sigma[k]`.
    pub fn permutation(p: u32, sigma: &[usize]) -> Result<Self> {
        let dim = sigma.len();
        let mut seen = vec![false; dim];
        for &s in sigma {
            if s >= dim || core::mem::replace(&mut seen[s], true) {
                return Err(invalid("not a permutation"));
            }
        }
        let mut a = Self::blank(p, dim, 0, Structure::Permutation)?;
        for (k, &s) in sigma.iter().enumerate() {
            let off = (s * dim + k) * a.w;
            a.data[off] = 1;
        }
        Ok(a)
    }

    pub fn diagonal(diag: &[CycInt], t: u32) -> Result<Self> {
        let dim = diag.len();
        let first = diag.first().ok_or_else(|| invalid("empty diagonal"))?;
        let p = crate::cyclotomic::prime_for(first.m());
        let mut a = Self::blank(p, dim, t, Structure::Diagonal)?;
        for (i, e) in diag.iter().enumerate() {
            a.set_entry(i, i, e)?;
        }
        Ok(a)
    }

    /// Builds a matrix from row-major entries and validates the tag.
    pub fn from_entries(p: u32, dim: usize, t: u32, entries: &[CycInt], tag: Structure) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(invalid(format!("expected {} entries, got {}", dim * dim, entries.len())));
        }
        let mut a = Self::blank(p, dim, t, tag)?;
        for (idx, e) in entries.iter().enumerate() {
            a.set_entry(idx / dim, idx % dim, e)?;
        }
        a.validate_tag()?;
        Ok(a)
    }

    /// Reinterprets the entries at scale `t` (dense and diagonal only).
    pub(crate) fn with_scale(mut self, t: u32) -> Self {
        debug_assert!(self.tag != Structure::Permutation || t == 0);
        self.t = t;
        self
    }

    /// Same matrix, tag relaxed to dense.
    pub fn into_dense(mut self) -> Self {
        self.tag = Structure::Dense;
        self
    }

    pub(crate) fn set_entry(&mut self, r: usize, c: usize, e: &CycInt) -> Result<()> {
        if e.m() != self.m {
            return Err(invalid(format!(
                "entry ({r}, {c}) has root order {}, expected {}",
                e.m(),
                self.m
            )));
        }
        let off = (r * self.dim + c) * self.w;
        self.data[off..off + self.w].copy_from_slice(e.coeffs());
        Ok(())
    }

    pub(crate) fn set_raw(&mut self, r: usize, c: usize, coeffs: &[i64]) {
        let off = (r * self.dim + c) * self.w;
        self.data[off..off + self.w].copy_from_slice(coeffs);
    }

    fn validate_tag(&self) -> Result<()> {
        let d = self.dim;
        match self.tag {
            Structure::Dense => Ok(()),
            Structure::Diagonal => {
                for r in 0..d {
                    for c in 0..d {
                        if r != c && !self.is_zero_at(r, c) {
                            return Err(invalid(format!(
                                "diagonal-tagged matrix has nonzero entry ({r}, {c})"
                            )));
                        }
                    }
                }
                Ok(())
            }
            Structure::Permutation => {
                if self.t != 0 {
                    return Err(invalid("permutation-tagged matrix must have t = 0"));
                }
                let mut col_hits = vec![0usize; d];
                for r in 0..d {
                    let mut row_hits = 0;
                    for (c, hits) in col_hits.iter_mut().enumerate() {
                        let e = self.entry_raw(r * d + c);
                        if e.iter().all(|&x| x == 0) {
                            continue;
                        }
                        if e[0] != 1 || e[1..].iter().any(|&x| x != 0) {
                            return Err(invalid(format!(
                                "permutation-tagged matrix has entry ({r}, {c}) other than 0 or 1"
                            )));
                        }
                        row_hits += 1;
                        *hits += 1;
                    }
                    if row_hits != 1 {
                        return Err(invalid(format!("permutation-tagged matrix row {r} has {row_hits} ones")));
                    }
                }
                if let Some(c) = col_hits.iter().position(|&h| h != 1) {
                    return Err(invalid(format!("permutation-tagged matrix column {c} is not a unit vector")));
                }
                Ok(())
            }
        }
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Root order of the entries.
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `log_p(dim)` when the dimension is a power of `p`.
    pub fn n(&self) -> Option<u32> {
        log_p(self.dim, self.p)
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn tag(&self) -> Structure {
        self.tag
    }

    #[inline]
    pub(crate) fn entry_raw(&self, idx: usize) -> &[i64] {
        &self.data[idx * self.w..(idx + 1) * self.w]
    }

    #[inline]
    pub(crate) fn at(&self, r: usize, c: usize) -> &[i64] {
        self.entry_raw(r * self.dim + c)
    }

    fn is_zero_at(&self, r: usize, c: usize) -> bool {
        self.at(r, c).iter().all(|&x| x == 0)
    }

    /// Unscaled entry `E_{r,c}`.
    pub fn entry(&self, r: usize, c: usize) -> CycInt {
        CycInt::from_canonical_unchecked(self.m, self.at(r, c).to_vec())
    }

    /// The true entry `p^{−t/2} E_{r,c}`.
    pub fn entry_scaled(&self, r: usize, c: usize) -> ScaledValue {
        ScaledValue::new(self.entry(r, c), self.t)
    }

    fn conformable(&self, other: &ExactMatrix) -> Result<()> {
        if self.p != other.p {
            return Err(invalid(format!("characteristic mismatch: {} vs {}", self.p, other.p)));
        }
        if self.dim != other.dim {
            return Err(invalid(format!("dimension mismatch: {} vs {}", self.dim, other.dim)));
        }
        Ok(())
    }

    /// For a permutation-tagged matrix, `sigma[c]` is the row of the 1 in
    /// column `c`.
    fn perm_targets(&self) -> Vec<usize> {
        let mut sigma = vec![0usize; self.dim];
        for r in 0..self.dim {
            for (c, s) in sigma.iter_mut().enumerate() {
                if self.at(r, c)[0] == 1 {
                    *s = r;
                }
            }
        }
        sigma
    }

    /// Exact product; scale exponents add.
    pub fn mul(&self, other: &ExactMatrix) -> Result<ExactMatrix> {
        self.conformable(other)?;
        let d = self.dim;
        let t = self.t + other.t;
        match (self.tag, other.tag) {
            (Structure::Permutation, _) => {
                // (P B)[σ(c)] = B[c]
                let sigma = self.perm_targets();
                let mut out = Self::blank(self.p, d, t, other.tag)?;
                let row = d * self.w;
                for (c, &r) in sigma.iter().enumerate() {
                    out.data[r * row..(r + 1) * row].copy_from_slice(&other.data[c * row..(c + 1) * row]);
                }
                if other.tag == Structure::Diagonal {
                    out.tag = Structure::Dense;
                }
                Ok(out)
            }
            (_, Structure::Permutation) => {
                // (A P)[:, c] = A[:, σ(c)]
                let sigma = other.perm_targets();
                let mut out = Self::blank(self.p, d, t, self.tag)?;
                for r in 0..d {
                    for (c, &s) in sigma.iter().enumerate() {
                        out.set_raw(r, c, self.at(r, s));
                    }
                }
                if self.tag == Structure::Diagonal {
                    out.tag = Structure::Dense;
                }
                Ok(out)
            }
            (Structure::Diagonal, _) => {
                let mut out = Self::blank(self.p, d, t, other.tag)?;
                for r in 0..d {
                    let s = self.entry(r, r);
                    for c in 0..d {
                        if other.is_zero_at(r, c) {
                            continue;
                        }
                        let v = s.mul(&other.entry(r, c))?;
                        out.set_raw(r, c, v.coeffs());
                    }
                }
                Ok(out)
            }
            (_, Structure::Diagonal) => {
                let mut out = Self::blank(self.p, d, t, self.tag)?;
                for c in 0..d {
                    let s = other.entry(c, c);
                    for r in 0..d {
                        if self.is_zero_at(r, c) {
                            continue;
                        }
                        let v = self.entry(r, c).mul(&s)?;
                        out.set_raw(r, c, v.coeffs());
                    }
                }
                Ok(out)
            }
            _ => self.mul_dense(other),
        }
    }

    /// Tag-agnostic product; the reference for the structured fast paths.
    pub fn mul_dense(&self, other: &ExactMatrix) -> Result<ExactMatrix> {
        self.conformable(other)?;
        let d = self.dim;
        let m = self.m as usize;
        let w = self.w;
        let ta = Terms::new(self);
        let tb = Terms::new(other);
        if (d as i128) * ta.max_l1 * tb.max_l1 >= (i64::MAX / 2) as i128 {
            return Err(Error::Overflow);
        }
        let rows: Vec<Vec<i64>> = par::map_indices(d, |i| {
            let mut acc = vec![0i64; d * m];
            for j in 0..d {
                for a in ta.range(i * d + j) {
                    let (ea, ca) = (ta.exps[a] as usize, ta.coefs[a]);
                    for k in 0..d {
                        let slot = &mut acc[k * m..(k + 1) * m];
                        for b in tb.range(j * d + k) {
                            let mut e = ea + tb.exps[b] as usize;
                            if e >= m {
                                e -= m;
                            }
                            slot[e] += ca * tb.coefs[b];
                        }
                    }
                }
            }
            let mut row = vec![0i64; d * w];
            for k in 0..d {
                canonicalize(m, &acc[k * m..(k + 1) * m], &mut row[k * w..(k + 1) * w]);
            }
            row
        });
        let mut out = Self::blank(self.p, d, self.t + other.t, Structure::Dense)?;
        for (i, row) in rows.into_iter().enumerate() {
            out.data[i * d * w..(i + 1) * d * w].copy_from_slice(&row);
        }
        Ok(out)
    }

    /// Conjugate transpose; `t` and the tag are preserved.
    pub fn adjoint(&self) -> ExactMatrix {
        let d = self.dim;
        let mut out = self.clone();
        for r in 0..d {
            for c in 0..d {
                let v = self.entry(r, c).conj();
                out.set_raw(c, r, v.coeffs());
            }
        }
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor(&self, other: &ExactMatrix) -> Result<ExactMatrix> {
        if self.p != other.p {
            return Err(invalid("characteristic mismatch in tensor product"));
        }
        let (da, db) = (self.dim, other.dim);
        let tag = match (self.tag, other.tag) {
            (Structure::Permutation, Structure::Permutation) => Structure::Permutation,
            (Structure::Diagonal, Structure::Diagonal) => Structure::Diagonal,
            _ => Structure::Dense,
        };
        let dim = da.checked_mul(db).ok_or(Error::Overflow)?;
        let mut out = Self::blank(self.p, dim, self.t + other.t, tag)?;
        for r1 in 0..da {
            for c1 in 0..da {
                if self.is_zero_at(r1, c1) {
                    continue;
                }
                let a = self.entry(r1, c1);
                for r2 in 0..db {
                    for c2 in 0..db {
                        if other.is_zero_at(r2, c2) {
                            continue;
                        }
                        let v = a.mul(&other.entry(r2, c2))?;
                        out.set_raw(r1 * db + r2, c1 * db + c2, v.coeffs());
                    }
                }
            }
        }
        Ok(out)
    }

    /// Multiplies every entry by a scaled cyclotomic integer.
    pub fn scalar_mul(&self, s: &ScaledValue) -> Result<ExactMatrix> {
        if s.value.m() != self.m {
            return Err(invalid("root order mismatch in scalar multiplication"));
        }
        let tag = if self.tag == Structure::Diagonal { Structure::Diagonal } else { Structure::Dense };
        let mut out = Self::blank(self.p, self.dim, self.t + s.t, tag)?;
        for r in 0..self.dim {
            for c in 0..self.dim {
                if self.is_zero_at(r, c) {
                    continue;
                }
                let v = self.entry(r, c).mul(&s.value)?;
                out.set_raw(r, c, v.coeffs());
            }
        }
        Ok(out)
    }

    /// Entries of `self` rewritten at the larger scale `t`.
    fn lifted_to(&self, t: u32) -> Result<ExactMatrix> {
        if t < self.t {
            return Err(invalid("cannot lower a scale exponent by lifting"));
        }
        let gap = t - self.t;
        let k = (self.p as i64).checked_pow(gap / 2).ok_or(Error::Overflow)?;
        let mut out = self.clone();
        out.t = t;
        if gap % 2 == 1 {
            if self.p % 4 != 1 {
                return Err(invalid(format!("scales differ by an odd power of sqrt({}), which is not in the ring", self.p)));
            }
            let root = quadratic_gauss_sum(self.p)?.scale(k)?;
            out = self.scalar_mul(&ScaledValue::new(root, 0))?;
            out.tag = if self.tag == Structure::Permutation { Structure::Dense } else { self.tag };
            out.t = t;
            return Ok(out);
        }
        if k != 1 {
            for x in out.data.iter_mut() {
                *x = x.checked_mul(k).ok_or(Error::Overflow)?;
            }
            if out.tag == Structure::Permutation {
                out.tag = Structure::Dense;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &ExactMatrix) -> Result<ExactMatrix> {
        self.conformable(other)?;
        let t = self.t.max(other.t);
        let a = self.lifted_to(t)?;
        let b = other.lifted_to(t)?;
        let tag = if a.tag == Structure::Diagonal && b.tag == Structure::Diagonal {
            Structure::Diagonal
        } else {
            Structure::Dense
        };
        let mut out = a;
        out.tag = tag;
        for (x, &y) in out.data.iter_mut().zip(&b.data) {
            *x = x.checked_add(y).ok_or(Error::Overflow)?;
        }
        Ok(out)
    }

    /// Exact equality of the represented complex matrices.
    pub fn equals(&self, other: &ExactMatrix) -> Result<bool> {
        self.conformable(other)?;
        let (lo, hi) = if self.t <= other.t { (self, other) } else { (other, self) };
        if (hi.t - lo.t) % 2 == 1 && self.p % 4 != 1 {
            let zero = |a: &ExactMatrix| a.data.iter().all(|&x| x == 0);
            return Ok(zero(lo) && zero(hi));
        }
        let lifted = lo.lifted_to(hi.t)?;
        Ok(lifted.data == hi.data)
    }

    /// `Some(c)` with `self = c · other` and `c` a unit-modulus scalar, or
    /// `None` when the matrices are not proportional by such a phase.
    pub fn phase_relative_to(&self, other: &ExactMatrix) -> Result<Option<ScaledValue>> {
        self.conformable(other)?;
        let d = self.dim;
        // Pivot: first nonzero entry of `other`.
        let pivot = (0..d * d).find(|&i| other.entry_raw(i).iter().any(|&x| x != 0));
        let Some(pv) = pivot else {
            return Ok(None);
        };
        let a_p = CycInt::from_canonical_unchecked(self.m, self.entry_raw(pv).to_vec());
        let b_p = CycInt::from_canonical_unchecked(self.m, other.entry_raw(pv).to_vec());
        if a_p.is_zero() {
            return Ok(None);
        }
        // self = c·other with c = a_p / b_p  ⟺  self·b_p = other·a_p entrywise
        for i in 0..d * d {
            let a = CycInt::from_canonical_unchecked(self.m, self.entry_raw(i).to_vec());
            let b = CycInt::from_canonical_unchecked(self.m, other.entry_raw(i).to_vec());
            if a.is_zero() != b.is_zero() {
                return Ok(None);
            }
            if a.is_zero() {
                continue;
            }
            if a.mul(&b_p)? != b.mul(&a_p)? {
                return Ok(None);
            }
        }
        // c = a_p·conj(b_p) / |b_p|²; |c| = 1 iff |a_p|² p^{−tA} = |b_p|² p^{−tB}
        let na = a_p.norm_sq()?.as_integer().ok_or_else(|| invalid("non-real norm"))?;
        let nb = b_p.norm_sq()?.as_integer().ok_or_else(|| invalid("non-real norm"))?;
        let pa = (self.p as i128).pow(other.t);
        let pb = (self.p as i128).pow(self.t);
        if na as i128 * pa != nb as i128 * pb {
            return Ok(None);
        }
        // c = p^{(tB − tA)/2} · a_p·conj(b_p) / nb
        let mut value = a_p.mul(&b_p.conj())?;
        let mut t = self.t as i64 - other.t as i64;
        let mut nbr = nb;
        let p = self.p as i64;
        while nbr % p == 0 && nbr > 1 {
            nbr /= p;
            t += 2;
        }
        if nbr != 1 {
            if value.coeffs().iter().all(|&x| x % nbr == 0) {
                value = CycInt::from_canonical_unchecked(self.m, value.coeffs().iter().map(|&x| x / nbr).collect());
            } else {
                return Ok(None);
            }
        }
        while t < 0 {
            value = value.scale(p)?;
            t += 2;
        }
        Ok(Some(ScaledValue::new(value, t as u32).normalized()))
    }

    /// Lowers `t` by two while every coefficient is divisible by `p`.
    pub fn normalize_scale(&mut self) {
        let p = self.p as i64;
        if self.tag == Structure::Permutation || self.data.iter().all(|&x| x == 0) {
            return;
        }
        while self.t >= 2 && self.data.iter().all(|&x| x % p == 0) {
            self.data.iter_mut().for_each(|x| *x /= p);
            self.t -= 2;
        }
    }

    pub(crate) fn to_cyclic(&self) -> CyclicBuf {
        let m = self.m as usize;
        let mut buf = CyclicBuf::zeros(m, self.dim * self.dim);
        for i in 0..self.dim * self.dim {
            buf.get_mut(i)[..self.w].copy_from_slice(self.entry_raw(i));
        }
        buf
    }

    pub(crate) fn from_cyclic(p: u32, dim: usize, t: u32, buf: &CyclicBuf) -> Result<ExactMatrix> {
        let mut out = Self::blank(p, dim, t, Structure::Dense)?;
        let (m, w) = (out.m as usize, out.w);
        for i in 0..dim * dim {
            canonicalize(m, buf.get(i), &mut out.data[i * w..(i + 1) * w]);
        }
        Ok(out)
    }

    /// `F · self · F*` with `F = F_p^{⊗n}`, by mode products in cyclic form.
    pub fn fourier_sandwich(&self) -> Result<ExactMatrix> {
        let n = self.n().ok_or_else(|| invalid("dimension is not a power of p"))?;
        let d = self.dim;
        let max = self.data.iter().map(|x| x.unsigned_abs()).max().unwrap_or(0) as u128;
        if max * (d as u128) * (d as u128) * 2 >= i64::MAX as u128 {
            return Err(Error::Overflow);
        }
        let mut buf = self.to_cyclic();
        fourier_modes(&mut buf, self.p, n, d, false);
        transpose(&mut buf, d);
        fourier_modes(&mut buf, self.p, n, d, true);
        transpose(&mut buf, d);
        let mut out = Self::from_cyclic(self.p, d, self.t + 2 * n, &buf)?;
        out.normalize_scale();
        Ok(out)
    }

    // ---- structure predicates -------------------------------------------

    /// `A_{j,k} = A_{0,(k−j) mod d}`.
    pub fn is_circulant(&self) -> bool {
        let d = self.dim;
        (0..d).all(|j| (0..d).all(|k| self.at(j, k) == self.at(0, (k + d - j) % d)))
    }

    /// Block-circulant with circulant blocks at every level of the
    /// `p`-adic block decomposition.
    ///
    /// Unwinding the recursion, this says `A_{j,k}` depends only on the
    /// digitwise difference `k − j` (mod `p`, digit by digit).
    pub fn is_block_circulant(&self) -> bool {
        let Some(n) = self.n() else {
            return false;
        };
        let d = self.dim;
        let p = self.p as usize;
        let mut diff = vec![0usize; d * d];
        // digitwise difference table via the digit expansion
        let digits: Vec<Vec<usize>> = (0..d)
            .map(|mut x| {
                let mut v = vec![0usize; n as usize];
                for slot in v.iter_mut().rev() {
                    *slot = x % p;
                    x /= p;
                }
                v
            })
            .collect();
        for j in 0..d {
            for k in 0..d {
                diff[j * d + k] = digits[j]
                    .iter()
                    .zip(&digits[k])
                    .fold(0usize, |acc, (&a, &b)| acc * p + (b + p - a) % p);
            }
        }
        (0..d).all(|j| (0..d).all(|k| self.at(j, k) == self.at(0, diff[j * d + k])))
    }

    pub fn is_diagonal(&self) -> bool {
        let d = self.dim;
        (0..d).all(|r| (0..d).all(|c| r == c || self.is_zero_at(r, c)))
    }

    /// `E·E* = p^t·I`.
    pub fn is_unitary(&self) -> bool {
        match self.tag {
            Structure::Permutation => return true,
            Structure::Diagonal => {
                return (0..self.dim).all(|i| self.entry(i, i).norm_check(self.t));
            }
            Structure::Dense => {}
        }
        if self.is_block_circulant() {
            return self.block_spectrum().is_ok_and(|s| s.iter().all(|e| e.norm_check(self.t)));
        }
        self.is_unitary_dense()
    }

    /// Unitarity through an explicit product, regardless of structure.
    pub fn is_unitary_dense(&self) -> bool {
        let Ok(prod) = self.mul_dense(&self.adjoint()) else {
            return false;
        };
        let Some(target) = (self.p as i64).checked_pow(self.t) else {
            return false;
        };
        let d = self.dim;
        (0..d).all(|r| {
            (0..d).all(|c| {
                let e = prod.at(r, c);
                let want = if r == c { target } else { 0 };
                e[0] == want && e[1..].iter().all(|&x| x == 0)
            })
        })
    }

    /// Unitary with every entry of modulus `d^{−1/2}`.
    pub fn is_hadamard(&self) -> bool {
        let Some(n) = self.n() else {
            return false;
        };
        if self.t < n {
            return false;
        }
        let k = self.t - n;
        let d = self.dim;
        let entries_ok = if self.is_block_circulant() {
            (0..d).all(|c| self.entry(0, c).norm_check(k))
        } else {
            (0..d * d).all(|i| CycInt::from_canonical_unchecked(self.m, self.entry_raw(i).to_vec()).norm_check(k))
        };
        entries_ok && self.is_unitary()
    }

    /// Eigenvalues `Σ_ψ g(ψ) ω^{j·ψ}` of a block-circulant matrix with first
    /// column `g`; these are the diagonal of `F A F*` (unscaled, same `t`).
    pub fn block_spectrum(&self) -> Result<Vec<CycInt>> {
        let n = self.n().ok_or_else(|| invalid("dimension is not a power of p"))?;
        let d = self.dim;
        let m = self.m as usize;
        let mut buf = CyclicBuf::zeros(m, d);
        for r in 0..d {
            buf.get_mut(r)[..self.w].copy_from_slice(self.at(r, 0));
        }
        fourier_modes(&mut buf, self.p, n, 1, false);
        (0..d)
            .map(|j| {
                let mut c = vec![0i64; self.w];
                canonicalize(m, buf.get(j), &mut c);
                CycInt::from_coeffs(self.m, c)
            })
            .collect()
    }
}

/// Applies `F_p` (unscaled, `ω^{±jk}`) along every digit of the row index
/// of a `d × cols` array of cyclic vectors.
pub(crate) fn fourier_modes(buf: &mut CyclicBuf, p: u32, n: u32, cols: usize, inverse: bool) {
    let m = buf.m;
    let p = p as usize;
    let step = m / p;
    let d = p.pow(n);
    let mut fiber = vec![0i64; p * m];
    let mut out = vec![0i64; p * m];
    for digit in 0..n as usize {
        let stride = p.pow(n - 1 - digit as u32);
        for base in 0..d {
            if (base / stride) % p != 0 {
                continue;
            }
            for c in 0..cols {
                for a in 0..p {
                    let idx = (base + a * stride) * cols + c;
                    fiber[a * m..(a + 1) * m].copy_from_slice(buf.get(idx));
                }
                out.iter_mut().for_each(|x| *x = 0);
                for b in 0..p {
                    let slot = &mut out[b * m..(b + 1) * m];
                    for a in 0..p {
                        let e = (a * b) % p;
                        let e = if inverse { (p - e) % p } else { e };
                        rotate_add(slot, &fiber[a * m..(a + 1) * m], e * step);
                    }
                }
                for b in 0..p {
                    let idx = (base + b * stride) * cols + c;
                    buf.get_mut(idx).copy_from_slice(&out[b * m..(b + 1) * m]);
                }
            }
        }
    }
}

fn transpose(buf: &mut CyclicBuf, d: usize) {
    let m = buf.m;
    for r in 0..d {
        for c in r + 1..d {
            for e in 0..m {
                buf.data.swap((r * d + c) * m + e, (c * d + r) * m + e);
            }
        }
    }
}

// ---- serde ---------------------------------------------------------------

struct EntryRef<'a> {
    m: u32,
    coeffs: &'a [i64],
}

impl Serialize for EntryRef<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("CycInt", 2)?;
        st.serialize_field("m", &self.m)?;
        st.serialize_field("coeffs", self.coeffs)?;
        st.end()
    }
}

struct RowRef<'a>(&'a ExactMatrix, usize);

impl Serialize for RowRef<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        let a = self.0;
        let mut seq = s.serialize_seq(Some(a.dim))?;
        for c in 0..a.dim {
            seq.serialize_element(&EntryRef { m: a.m, coeffs: a.at(self.1, c) })?;
        }
        seq.end()
    }
}

struct RowsRef<'a>(&'a ExactMatrix);

impl Serialize for RowsRef<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.0.dim))?;
        for r in 0..self.0.dim {
            seq.serialize_element(&RowRef(self.0, r))?;
        }
        seq.end()
    }
}

impl Serialize for ExactMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ExactMatrix", 5)?;
        st.serialize_field("p", &self.p)?;
        st.serialize_field("n", &self.n())?;
        st.serialize_field("t", &self.t)?;
        st.serialize_field("entries", &RowsRef(self))?;
        st.serialize_field("tag", &self.tag)?;
        st.end()
    }
}

#[derive(Deserialize)]
struct RawMatrix {
    p: u32,
    n: u32,
    t: u32,
    entries: Vec<Vec<CycInt>>,
    tag: Structure,
}

impl<'de> Deserialize<'de> for ExactMatrix {
    fn deserialize<D: Deserializer<'de>>(de: D) -> core::result::Result<Self, D::Error> {
        let raw = RawMatrix::deserialize(de)?;
        ExactMatrix::from_raw(raw).map_err(D::Error::custom)
    }
}

impl ExactMatrix {
    fn from_raw(raw: RawMatrix) -> Result<Self> {
        if !crate::galois::is_prime(raw.p as u64) {
            return Err(invalid(format!("p must be prime (got {})", raw.p)));
        }
        let dim = (raw.p as usize)
            .checked_pow(raw.n)
            .ok_or(Error::SizeLimit { requested: u64::MAX, limit: MAX_MATRIX_WORDS })?;
        if raw.entries.len() != dim {
            return Err(invalid(format!("expected {dim} rows, got {}", raw.entries.len())));
        }
        let m = order_for(raw.p);
        matrix_words(dim, width_for(m))?;
        let mut a = Self::blank(raw.p, dim, raw.t, raw.tag)?;
        for (r, row) in raw.entries.iter().enumerate() {
            if row.len() != dim {
                return Err(invalid(format!("row {r} has {} entries, expected {dim}", row.len())));
            }
            for (c, e) in row.iter().enumerate() {
                a.set_entry(r, c, e)?;
            }
        }
        a.validate_tag()?;
        Ok(a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(m: u32, e: i64) -> CycInt {
        CycInt::root_of_unity(m, e).unwrap()
    }

    fn f_p(p: u32) -> ExactMatrix {
        let m = order_for(p);
        let step = (m / p) as i64;
        let d = p as usize;
        let entries: Vec<CycInt> =
            (0..d * d).map(|i| z(m, step * ((i / d) * (i % d)) as i64)).collect();
        ExactMatrix::from_entries(p, d, 1, &entries, Structure::Dense).unwrap()
    }

    fn random_matrix(p: u32, d: usize, seed: &[i64]) -> ExactMatrix {
        let m = order_for(p);
        let w = width_for(m);
        let entries: Vec<CycInt> = (0..d * d)
            .map(|i| {
                let c: Vec<i64> = (0..w).map(|k| seed[(i * w + k) % seed.len()] % 5).collect();
                CycInt::from_coeffs(m, c).unwrap()
            })
            .collect();
        ExactMatrix::from_entries(p, d, 0, &entries, Structure::Dense).unwrap()
    }

    /// Entry-by-entry triple loop with `CycInt` arithmetic.
    fn naive_mul(a: &ExactMatrix, b: &ExactMatrix) -> ExactMatrix {
        let d = a.dim();
        let mut out = ExactMatrix::zeros(a.p(), d).unwrap();
        out.t = a.t + b.t;
        for i in 0..d {
            for k in 0..d {
                let mut acc = CycInt::zero(a.m()).unwrap();
                for j in 0..d {
                    acc = acc.add(&a.entry(i, j).mul(&b.entry(j, k)).unwrap()).unwrap();
                }
                out.set_entry(i, k, &acc).unwrap();
            }
        }
        out
    }

    #[test]
    fn dft_is_unitary() {
        for p in [2u32, 3, 5, 7] {
            let f = f_p(p);
            let prod = f.mul(&f.adjoint()).unwrap();
            let mut id = ExactMatrix::identity(p, p as usize).unwrap();
            assert!(prod.equals(&id).unwrap());
            assert!(f.is_unitary() && f.is_unitary_dense() && f.is_hadamard());
            id.normalize_scale();
            assert!(!id.is_hadamard());
        }
    }

    #[test]
    fn adjoint_tensor_identity() {
        let f = f_p(3);
        assert_eq!(f.adjoint().adjoint(), f);
        let i2 = ExactMatrix::identity(2, 2).unwrap();
        let i4 = i2.tensor(&i2).unwrap();
        assert_eq!(i4, ExactMatrix::identity(2, 4).unwrap());
        assert_eq!(i4.tag(), Structure::Permutation);
    }

    #[test]
    fn tag_validation() {
        let m = 3;
        let one = CycInt::one(m).unwrap();
        let zero = CycInt::zero(m).unwrap();
        let two = CycInt::from_int(m, 2).unwrap();
        let ok = [one.clone(), zero.clone(), zero.clone(), one.clone()];
        assert!(ExactMatrix::from_entries(3, 2, 0, &ok, Structure::Permutation).is_ok());
        let bad = [two.clone(), zero.clone(), zero.clone(), one.clone()];
        assert!(ExactMatrix::from_entries(3, 2, 0, &bad, Structure::Permutation).is_err());
        assert!(ExactMatrix::from_entries(3, 2, 0, &bad, Structure::Diagonal).is_ok());
        let off = [one.clone(), one.clone(), zero.clone(), one.clone()];
        assert!(ExactMatrix::from_entries(3, 2, 0, &off, Structure::Diagonal).is_err());
        assert!(ExactMatrix::from_entries(3, 2, 1, &ok, Structure::Permutation).is_err());
    }

    #[test]
    fn scaled_equality_aligns_exponents() {
        let mut a = ExactMatrix::identity(3, 3).unwrap().into_dense();
        let three = ScaledValue::new(CycInt::from_int(3, 3).unwrap(), 2);
        let b = a.scalar_mul(&three).unwrap();
        assert!(a.equals(&b).unwrap());
        a.normalize_scale();
        let mut c = b.clone();
        c.normalize_scale();
        assert_eq!(c.t(), 0);
        let half = ScaledValue::new(CycInt::one(3).unwrap(), 1);
        assert!(!a.equals(&a.scalar_mul(&half).unwrap()).unwrap());
        // √5 · 5^{-1/2} = 1
        let g = ScaledValue::new(quadratic_gauss_sum(5).unwrap(), 1);
        let i5 = ExactMatrix::identity(5, 5).unwrap();
        assert!(i5.scalar_mul(&g).unwrap().equals(&i5).unwrap());
    }

    #[test]
    fn phase_detection() {
        let f = f_p(5);
        let c = ScaledValue::new(z(5, 2), 0);
        let g = f.scalar_mul(&c).unwrap();
        let got = g.phase_relative_to(&f).unwrap().unwrap();
        assert!(got.scaled_eq(&c).unwrap());
        assert!(f.phase_relative_to(&ExactMatrix::identity(5, 5).unwrap()).unwrap().is_none());
        let twice = f.scalar_mul(&ScaledValue::new(CycInt::from_int(5, 2).unwrap(), 0)).unwrap();
        assert!(twice.phase_relative_to(&f).unwrap().is_none());
        // 8th-root phase at p = 2
        let f2 = f_p(2);
        let e8 = ScaledValue::new(CycInt::from_coeffs(4, vec![1, 1]).unwrap(), 1);
        let ph = f2.scalar_mul(&e8).unwrap().phase_relative_to(&f2).unwrap().unwrap();
        assert_eq!(ph.root_order(), Some(8));
    }

    #[test]
    fn fast_paths_match_dense() {
        let p = 3;
        let a = random_matrix(p, 9, &[3, -1, 4, 1, -5, 9, 2, -6, 5, 3, 5]);
        let perm = ExactMatrix::permutation(p, &[2, 0, 1, 5, 3, 4, 8, 6, 7]).unwrap();
        let diag = ExactMatrix::diagonal(&(0..9).map(|k| z(3, k)).collect::<Vec<_>>(), 0).unwrap();
        for (x, y) in [(&perm, &a), (&a, &perm), (&diag, &a), (&a, &diag), (&perm, &diag), (&diag, &perm)] {
            let fast = x.mul(y).unwrap();
            let slow = x.clone().into_dense().mul_dense(&y.clone().into_dense()).unwrap();
            assert!(fast.equals(&slow).unwrap(), "{:?} {:?}", x.tag(), y.tag());
            assert_eq!(fast.clone().into_dense(), slow);
        }
    }

    #[test]
    fn fourier_sandwich_matches_products() {
        for (p, n) in [(2u32, 3u32), (3, 2), (5, 1)] {
            let mut f = f_p(p);
            for _ in 1..n {
                f = f.tensor(&f_p(p)).unwrap();
            }
            let d = f.dim();
            let seed: Vec<i64> = (0..97).map(|k| (k * 37 % 11) - 5).collect();
            let a = random_matrix(p, d, &seed);
            let mut direct = f.mul(&a).unwrap().mul(&f.adjoint()).unwrap();
            direct.normalize_scale();
            let fast = a.fourier_sandwich().unwrap();
            assert!(fast.equals(&direct).unwrap(), "p={p} n={n}");
        }
    }

    #[test]
    fn block_circulant_predicate() {
        // C ⊗ C' with circulant factors
        let c1: Vec<CycInt> = (0..3).map(|k| CycInt::from_int(3, k + 1).unwrap()).collect();
        let c2: Vec<CycInt> = (0..3).map(|k| z(3, k * 2)).collect();
        let circ = |a: &[CycInt]| {
            let d = a.len();
            let e: Vec<CycInt> = (0..d * d).map(|i| a[(i % d + d - i / d) % d].clone()).collect();
            ExactMatrix::from_entries(3, d, 0, &e, Structure::Dense).unwrap()
        };
        let (a, b) = (circ(&c1), circ(&c2));
        assert!(a.is_circulant() && b.is_circulant());
        let ab = a.tensor(&b).unwrap();
        assert!(ab.is_block_circulant());
        assert!(!ab.is_circulant());
        let r = random_matrix(3, 9, &[1, 2, 3, 4, 5, 6, 7]);
        assert!(!r.is_block_circulant());
        assert!(ab.fourier_sandwich().unwrap().is_diagonal());
    }

    #[test]
    fn serde_round_trip() {
        let f = f_p(3);
        let json = serde_json::to_string(&f).unwrap();
        assert!(json.starts_with(r#"{"p":3,"n":1,"t":1,"entries":[[{"m":3,"coeffs":[1,0]}"#));
        let back: ExactMatrix = serde_json::from_str(&json).unwrap();
        assert_eq!(back, f);
        let bad = json.replace(r#""tag":"dense""#, r#""tag":"diagonal""#);
        assert!(serde_json::from_str::<ExactMatrix>(&bad).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let a = ExactMatrix::identity(3, 3).unwrap();
        let b = ExactMatrix::identity(3, 9).unwrap();
        assert!(matches!(a.mul(&b), Err(Error::InvalidInput(_))));
        let c = ExactMatrix::identity(5, 3).unwrap();
        assert!(a.equals(&c).is_err());
    }

    proptest! {
        #[test]
        fn dense_product_matches_naive(seed in proptest::collection::vec(-40i64..40, 30..60), p_idx in 0usize..3) {
            let p = [2u32, 3, 5][p_idx];
            let d = [4usize, 3, 5][p_idx];
            let a = random_matrix(p, d, &seed);
            let b = random_matrix(p, d, &seed[7..]);
            prop_assert_eq!(a.mul_dense(&b).unwrap(), naive_mul(&a, &b));
        }

        #[test]
        fn unitarity_paths_agree(seed in proptest::collection::vec(-2i64..3, 9..20)) {
            // block-circulant candidates: spectrum-based vs explicit product
            let m = 3;
            let g: Vec<CycInt> = (0..9).map(|k| CycInt::from_coeffs(m, vec![seed[k % seed.len()], seed[(k + 3) % seed.len()]]).unwrap()).collect();
            let mut e = Vec::new();
            for j in 0..9usize {
                for k in 0..9usize {
                    let dj = (j / 3, j % 3);
                    let dk = (k / 3, k % 3);
                    let diff = ((dj.0 + 3 - dk.0) % 3) * 3 + (dj.1 + 3 - dk.1) % 3;
                    e.push(g[diff].clone());
                }
            }
            let a = ExactMatrix::from_entries(3, 9, 2, &e, Structure::Dense).unwrap();
            prop_assert!(a.is_block_circulant());
            prop_assert_eq!(a.is_unitary(), a.is_unitary_dense());
        }
    }
}

//! Circulant matrices at block level and their DFT spectra.

use alloc::{format, vec, vec::Vec};

use super::matrix::{canonicalize, rotate_add, ExactMatrix, Structure};
use crate::cyclotomic::{order_for, prime_for, CycInt};
use crate::error::{invalid, Result};

fn common_order(a: &[CycInt]) -> Result<u32> {
    let m = a.first().ok_or_else(|| invalid("empty sequence"))?.m();
    if a.iter().any(|x| x.m() != m) {
        return Err(invalid("entries have different root orders"));
    }
    Ok(m)
}

/// `circ(a₀, …, a_{d−1})`: `C_{j,k} = a_{(k−j) mod d}`, so row `j` is `a`
/// rotated right by `j`.
pub fn build_circulant(a: &[CycInt]) -> Result<ExactMatrix> {
    let m = common_order(a)?;
    let d = a.len();
    let entries: Vec<CycInt> = (0..d * d).map(|i| a[(i % d + d - i / d) % d].clone()).collect();
    ExactMatrix::from_entries(prime_for(m), d, 0, &entries, Structure::Dense)
}

/// `ã_j = Σ_k a_k ω^{−jk}`, the diagonal of `F_p C F_p*` for `C = circ(a)`.
pub fn circulant_spectrum(a: &[CycInt]) -> Result<Vec<CycInt>> {
    let m = common_order(a)?;
    let p = prime_for(m);
    if a.len() != p as usize {
        return Err(invalid(format!(
            "spectrum formula needs length p = {p}, got {}",
            a.len()
        )));
    }
    let mu = m as usize;
    let step = mu / p as usize;
    let pu = p as usize;
    (0..pu)
        .map(|j| {
            let mut acc = vec![0i64; mu];
            for (k, ak) in a.iter().enumerate() {
                let e = (pu - (j * k) % pu) % pu;
                rotate_add(&mut acc, &ak.to_cyclic(), e * step);
            }
            let mut c = vec![0i64; a[0].coeffs().len()];
            canonicalize(mu, &acc, &mut c);
            CycInt::from_coeffs(m, c)
        })
        .collect()
}

/// The block-level shift `X = circ(0, …, 0, 1)`, `X|k⟩ = |k+1⟩`.
pub fn build_x(p: u32) -> Result<ExactMatrix> {
    let sigma: Vec<usize> = (0..p as usize).map(|k| (k + 1) % p as usize).collect();
    ExactMatrix::permutation(p, &sigma)
}

/// The block-level phase `Z = diag(1, ω, …, ω^{p−1})`.
pub fn build_z(p: u32) -> Result<ExactMatrix> {
    let m = order_for(p);
    let step = (m / p) as i64;
    let diag: Vec<CycInt> =
        (0..p as i64).map(|k| CycInt::root_of_unity(m, k * step)).collect::<Result<_>>()?;
    ExactMatrix::diagonal(&diag, 0)
}

/// The unitary DFT `F_p` with entries `ω^{jk}` at scale `t = 1`.
pub fn build_fp(p: u32) -> Result<ExactMatrix> {
    let m = order_for(p);
    let step = (m / p) as i64;
    let d = p as usize;
    let entries: Vec<CycInt> = (0..d * d)
        .map(|i| CycInt::root_of_unity(m, step * ((i / d) * (i % d)) as i64))
        .collect::<Result<_>>()?;
    ExactMatrix::from_entries(p, d, 1, &entries, Structure::Dense)
}

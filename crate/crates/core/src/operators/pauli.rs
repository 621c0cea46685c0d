//! The Fourier matrix `F = F_p^{⊗n}` and the generalized Pauli operators
//! `X_θ`, `Z_θ` indexed by field elements.

use alloc::{format, vec, vec::Vec};

use serde::{Deserialize, Serialize};

use super::matrix::ExactMatrix;
use crate::cyclotomic::{char_value, order_for, CycInt, ScaledValue};
use crate::error::{internal, Result};
use crate::galois::{FieldElement, FieldSpec, FieldTables, PrimeResidue};

/// The label of `Z_θ X_θ′`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OperatorLabel {
    pub zpart: FieldElement,
    pub xpart: FieldElement,
}

/// Exponent of `ω` in the root order of the field: `χ(θ) = ζ_m^{step·tr θ}`.
pub(crate) fn omega_step(p: u32) -> u32 {
    order_for(p) / p
}

/// `F` with entries `ω^{Σ jᵢkᵢ}` over the base-`p` digits of the indices,
/// at scale `t = n`.
pub fn build_f(spec: &FieldSpec) -> Result<ExactMatrix> {
    let tables = FieldTables::new(spec)?;
    let d = spec.d();
    let p = spec.p();
    let m = order_for(p);
    let step = omega_step(p) as u64;
    let roots: Vec<CycInt> = (0..p as u64).map(|e| CycInt::root_of_unity(m, (e * step) as i64)).collect::<Result<_>>()?;
    let mut out = ExactMatrix::zeros(p, d)?;
    for j in 0..d {
        let dj = tables.digits(j);
        for k in 0..d {
            let dot = dj.iter().zip(tables.digits(k)).fold(0u64, |acc, (&a, &b)| acc + a as u64 * b as u64);
            out.set_entry(j, k, &roots[(dot % p as u64) as usize])?;
        }
    }
    Ok(out.with_scale(spec.n()))
}

/// `X_θ|θ′⟩ = |θ + θ′⟩`.
pub fn build_x_theta(spec: &FieldSpec, theta: &FieldElement) -> Result<ExactMatrix> {
    let tables = FieldTables::new(spec)?;
    let a = spec.index_of(theta)?;
    let sigma: Vec<usize> = (0..spec.d()).map(|k| tables.add(a, k)).collect();
    ExactMatrix::permutation(spec.p(), &sigma)
}

/// `Z_θ|θ′⟩ = χ(θθ′)|θ′⟩` (diagonal action).
pub fn build_z_theta(spec: &FieldSpec, theta: &FieldElement) -> Result<ExactMatrix> {
    let tables = FieldTables::new(spec)?;
    let a = spec.index_of(theta)?;
    let m = order_for(spec.p());
    let step = omega_step(spec.p()) as i64;
    let diag: Vec<CycInt> = (0..spec.d())
        .map(|k| CycInt::root_of_unity(m, step * tables.trace(tables.mul(a, k)) as i64))
        .collect::<Result<_>>()?;
    ExactMatrix::diagonal(&diag, 0)
}

/// `χ(θθ′)`, after asserting `Z_θ X_θ′ = χ(θθ′) X_θ′ Z_θ` as matrices.
pub fn commutation_phase(spec: &FieldSpec, theta: &FieldElement, theta_prime: &FieldElement) -> Result<CycInt> {
    let phase = char_value(spec, &spec.mul(theta, theta_prime)?)?;
    let z = build_z_theta(spec, theta)?;
    let x = build_x_theta(spec, theta_prime)?;
    let lhs = z.mul(&x)?;
    let rhs = x.mul(&z)?.scalar_mul(&ScaledValue::new(phase.clone(), 0))?;
    if !lhs.equals(&rhs)? {
        return Err(internal(format!("commutation rule fails for θ = {theta}, θ' = {theta_prime}")));
    }
    Ok(phase)
}

/// The `θ` with `F X_θ′ F* = Z_θ`: the trace dual of the digit form of `θ′`.
pub fn fourier_conjugate_x(spec: &FieldSpec, theta_prime: &FieldElement) -> Result<FieldElement> {
    let theta = fourier_dual(spec, theta_prime)?;
    let x = build_x_theta(spec, theta_prime)?;
    let conj = x.fourier_sandwich()?;
    if !conj.equals(&build_z_theta(spec, &theta)?)? {
        return Err(internal(format!("F X F* is not Z for θ' = {theta_prime}")));
    }
    Ok(theta)
}

/// The trace-dual map without the matrix assertion.
pub(crate) fn fourier_dual(spec: &FieldSpec, theta_prime: &FieldElement) -> Result<FieldElement> {
    spec.check(theta_prime)?;
    let form: Vec<PrimeResidue> =
        theta_prime.coeffs().iter().map(|&c| PrimeResidue::new(c as u64, spec.p())).collect();
    spec.solve_trace_dual(&form)
}

/// A monomial operator: column `k` maps to `ζ_m^{phase[k]} |perm[k]⟩`.
///
/// Every `Z_a X_b` has this shape, so products and commutation checks cost
/// `O(d)` instead of a matrix product.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PauliOp {
    m: u32,
    perm: Vec<u32>,
    phase: Vec<u32>,
}

impl PauliOp {
    /// `Z_a X_b`: `|φ⟩ ↦ χ(a(φ+b)) |φ+b⟩`.
    pub fn from_label(tables: &FieldTables, a: usize, b: usize) -> Self {
        let p = tables.p();
        let m = order_for(p);
        let step = omega_step(p);
        let d = tables.d();
        let mut perm = Vec::with_capacity(d);
        let mut phase = Vec::with_capacity(d);
        for phi in 0..d {
            let target = tables.add(phi, b);
            perm.push(target as u32);
            phase.push(step * tables.trace(tables.mul(a, target)) % m);
        }
        PauliOp { m, perm, phase }
    }

    /// `self · other`.
    pub fn compose(&self, other: &PauliOp) -> PauliOp {
        let d = self.perm.len();
        let mut perm = vec![0u32; d];
        let mut phase = vec![0u32; d];
        for k in 0..d {
            let mid = other.perm[k] as usize;
            perm[k] = self.perm[mid];
            phase[k] = (other.phase[k] + self.phase[mid]) % self.m;
        }
        PauliOp { m: self.m, perm, phase }
    }

    pub fn commutes_with(&self, other: &PauliOp) -> bool {
        self.compose(other) == other.compose(self)
    }

    pub fn to_matrix(&self, p: u32) -> Result<ExactMatrix> {
        let d = self.perm.len();
        let mut out = ExactMatrix::zeros(p, d)?;
        for k in 0..d {
            out.set_entry(self.perm[k] as usize, k, &CycInt::root_of_unity(self.m, self.phase[k] as i64)?)?;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galois::find_irreducible;
    use crate::operators::circulant::{build_fp, build_x, build_z};

    fn gf(p: u32, n: u32) -> FieldSpec {
        find_irreducible(p, n).unwrap()
    }

    fn el(s: &FieldSpec, c: &[u32]) -> FieldElement {
        s.element(c).unwrap()
    }

    fn kron_power(a: &ExactMatrix, n: u32) -> ExactMatrix {
        (1..n).fold(a.clone(), |acc, _| acc.tensor(a).unwrap())
    }

    fn pow(a: &ExactMatrix, k: u32) -> ExactMatrix {
        (0..k).fold(ExactMatrix::identity(a.p(), a.dim()).unwrap(), |acc, _| acc.mul(a).unwrap())
    }

    #[test]
    fn fourier_examples() {
        let f2 = build_f(&gf(2, 1)).unwrap();
        assert_eq!(f2.t(), 1);
        let minus = CycInt::from_int(4, -1).unwrap();
        assert_eq!(f2.entry(1, 1), minus);
        let f4 = build_f(&gf(2, 2)).unwrap();
        assert!(f4.equals(&kron_power(&build_fp(2).unwrap(), 2)).unwrap());
        assert!(f4.is_hadamard());
        for (p, n) in [(3, 2), (2, 3), (5, 2), (3, 3)] {
            let f = build_f(&gf(p, n)).unwrap();
            assert!(f.equals(&kron_power(&build_fp(p).unwrap(), n)).unwrap());
            let id = ExactMatrix::identity(p, f.dim()).unwrap();
            assert!(f.mul(&f.adjoint()).unwrap().equals(&id).unwrap());
        }
    }

    #[test]
    fn shift_examples() {
        let s = gf(3, 2);
        let x0 = build_x_theta(&s, &s.zero()).unwrap();
        assert!(x0.equals(&ExactMatrix::identity(3, 9).unwrap()).unwrap());
        let id3 = ExactMatrix::identity(3, 3).unwrap();
        let x = build_x(3).unwrap();
        assert!(build_x_theta(&s, &s.alpha()).unwrap().equals(&id3.tensor(&x).unwrap()).unwrap());
        assert!(build_x_theta(&s, &s.one()).unwrap().equals(&x.tensor(&id3).unwrap()).unwrap());
        // X_{mα+n} = Xⁿ ⊗ Xᵐ
        for c0 in 0..3 {
            for c1 in 0..3 {
                let xt = build_x_theta(&s, &el(&s, &[c0, c1])).unwrap();
                assert!(xt.equals(&pow(&x, c0).tensor(&pow(&x, c1)).unwrap()).unwrap());
            }
        }
    }

    #[test]
    fn phase_examples() {
        let s = gf(3, 1);
        let z1 = build_z_theta(&s, &s.one()).unwrap();
        assert!(z1.equals(&build_z(3).unwrap()).unwrap());
        let s9 = gf(3, 2);
        let z0 = build_z_theta(&s9, &s9.zero()).unwrap();
        assert!(z0.equals(&ExactMatrix::identity(3, 9).unwrap()).unwrap());
        // Z_θ lies in {Z^{k₀} ⊗ Z^{k₁}}
        let zb = build_z(3).unwrap();
        for theta in s9.elements() {
            let zt = build_z_theta(&s9, &theta).unwrap();
            let found = (0..3).any(|a| (0..3).any(|b| zt.equals(&pow(&zb, a).tensor(&pow(&zb, b)).unwrap()).unwrap()));
            assert!(found);
        }
    }

    #[test]
    fn chain_rules() {
        for s in [gf(2, 2), gf(3, 2), gf(2, 3), gf(5, 1)] {
            for a in s.elements() {
                for b in s.elements() {
                    let ab = s.add(&a, &b).unwrap();
                    let xs = build_x_theta(&s, &a).unwrap().mul(&build_x_theta(&s, &b).unwrap()).unwrap();
                    assert!(xs.equals(&build_x_theta(&s, &ab).unwrap()).unwrap());
                    let zs = build_z_theta(&s, &a).unwrap().mul(&build_z_theta(&s, &b).unwrap()).unwrap();
                    assert!(zs.equals(&build_z_theta(&s, &ab).unwrap()).unwrap());
                }
            }
        }
    }

    #[test]
    fn commutation_examples() {
        let s = gf(5, 1);
        assert_eq!(commutation_phase(&s, &s.zero(), &s.one()).unwrap(), CycInt::one(5).unwrap());
        assert_eq!(commutation_phase(&s, &s.one(), &s.one()).unwrap(), CycInt::root_of_unity(5, 1).unwrap());
        let s9 = gf(3, 2);
        let a = s9.alpha();
        assert_eq!(commutation_phase(&s9, &a, &a).unwrap(), CycInt::root_of_unity(3, 1).unwrap());
        for x in s9.elements() {
            for y in s9.elements() {
                commutation_phase(&s9, &x, &y).unwrap();
            }
        }
    }

    #[test]
    fn fourier_conjugation_examples() {
        let s = gf(3, 2);
        assert!(fourier_conjugate_x(&s, &s.zero()).unwrap().is_zero());
        let s7 = gf(7, 1);
        for k in 0..7 {
            let e = s7.from_residue(k);
            assert_eq!(fourier_conjugate_x(&s7, &e).unwrap(), e);
        }
        // GF(9): exhaustive search over candidates for the matrix identity
        let conj = build_x_theta(&s, &s.alpha()).unwrap().fourier_sandwich().unwrap();
        let hits: Vec<FieldElement> =
            s.elements().filter(|t| conj.equals(&build_z_theta(&s, t).unwrap()).unwrap()).collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(fourier_conjugate_x(&s, &s.alpha()).unwrap(), hits[0]);
        for s in [gf(2, 3), gf(5, 2), gf(3, 3)] {
            for t in s.elements() {
                fourier_conjugate_x(&s, &t).unwrap();
            }
        }
    }

    #[test]
    fn monomials_match_matrices() {
        for s in [gf(2, 2), gf(3, 2), gf(2, 3)] {
            let tables = FieldTables::new(&s).unwrap();
            for a in 0..s.d() {
                for b in 0..s.d() {
                    let op = PauliOp::from_label(&tables, a, b);
                    let za = build_z_theta(&s, &s.element_at(a).unwrap()).unwrap();
                    let xb = build_x_theta(&s, &s.element_at(b).unwrap()).unwrap();
                    assert!(op.to_matrix(s.p()).unwrap().equals(&za.mul(&xb).unwrap()).unwrap());
                }
            }
            let ops: Vec<PauliOp> = (0..s.d()).map(|a| PauliOp::from_label(&tables, a, (a * 3 + 1) % s.d())).collect();
            for x in &ops {
                for y in &ops {
                    let prod = x.to_matrix(s.p()).unwrap().mul(&y.to_matrix(s.p()).unwrap()).unwrap();
                    assert!(x.compose(y).to_matrix(s.p()).unwrap().equals(&prod).unwrap());
                }
            }
        }
    }
}

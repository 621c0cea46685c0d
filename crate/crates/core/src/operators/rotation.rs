//! The rotation operators `R_θ = Σ_ψ λ^{(θ)}_ψ X_ψ` and their eigenphase
//! tables `μ_{θ,θ′}`.
//!
//! `R_θ` diagonalizes the commuting class `{Z_θ′ X_{θθ′}}`:
//! `(Z_θ′ X_{θθ′}) R_θ = μ_{θ,θ′} R_θ Z_θ′`. For odd `p` the table is
//! `μ_{θ,θ′} = χ(2⁻¹θθ′²)`. For `p = 2` it is the solution of
//! `μ_{θ′+θ″} = μ_{θ′} μ_{θ″} χ(θθ′θ″)` over fourth roots of unity selected
//! by a deterministic branch rule.

use alloc::{format, string::String, vec, vec::Vec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::matrix::{canonicalize, rotate_add, ExactMatrix};
use super::pauli::omega_step;
use crate::cyclotomic::{order_for, width_for, CycInt, ScaledValue};
use crate::error::{internal, invalid, Error, Result};
use crate::galois::{FieldElement, FieldSpec, FieldTables};

/// Largest `d` for which the eigen-relation is checked for every `θ′`.
pub const EXHAUSTIVE_EIGEN_LIMIT: usize = 81;

/// `μ_{θ,θ′}` for all `θ′`, indexed by `index_of(θ′)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MuTable {
    pub theta: FieldElement,
    pub values: Vec<CycInt>,
}

/// Shared tables for building every `R_θ` of one field.
#[derive(Debug, Clone)]
pub struct Rotations {
    spec: FieldSpec,
    tables: FieldTables,
    m: u32,
    /// `p = 2`: branch index per `θ` (bit `n−1−i` flips the value at `αⁱ`).
    branches: Vec<usize>,
    /// odd `p`: index of `2⁻¹`, squares, and `conj(G)` in cyclic form.
    half: usize,
    square: Vec<bool>,
    gauss_conj: Vec<i64>,
}

impl Rotations {
    pub fn new(spec: &FieldSpec) -> Result<Self> {
        let tables = FieldTables::new(spec)?;
        let d = spec.d();
        let p = spec.p();
        let m = order_for(p);
        let mut rot = Rotations {
            spec: spec.clone(),
            tables,
            m,
            branches: vec![0; d],
            half: 0,
            square: Vec::new(),
            gauss_conj: Vec::new(),
        };
        if p == 2 {
            if spec.n() == 2 {
                rot.branches = rot.joint_branches_gf4()?;
            }
        } else {
            let t = &rot.tables;
            rot.half = t.inv(t.residue(2));
            let mut square = vec![false; d];
            let mut gauss = vec![0i64; m as usize];
            for x in 0..d {
                let x2 = t.mul(x, x);
                square[x2] = true;
                gauss[t.trace(x2) as usize] += 1;
            }
            let mu = m as usize;
            rot.gauss_conj = (0..mu).map(|e| gauss[(mu - e) % mu]).collect();
            rot.square = square;
        }
        Ok(rot)
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn tables(&self) -> &FieldTables {
        &self.tables
    }

    /// Exponents `e` with `μ_{θ,θ′} = ζ_m^e`, indexed by `θ′`.
    pub fn mu_exponents(&self, theta: usize) -> Result<Vec<u32>> {
        if theta == 0 || theta >= self.spec.d() {
            return Err(invalid("μ is defined for θ ≠ 0 only"));
        }
        if self.spec.p() == 2 {
            return self.p2_exponents(theta, self.branches[theta]);
        }
        let t = &self.tables;
        let c = t.mul(self.half, theta);
        Ok((0..self.spec.d()).map(|x| t.trace(t.mul(c, t.mul(x, x)))).collect())
    }

    pub fn mu(&self, theta: usize) -> Result<MuTable> {
        let exps = self.mu_exponents(theta)?;
        let values = exps.iter().map(|&e| CycInt::root_of_unity(self.m, e as i64)).collect::<Result<_>>()?;
        Ok(MuTable { theta: self.spec.element_at(theta)?, values })
    }

    /// The `Z₄` solution of `q(x+y) = q(x) + q(y) + 2 tr(θxy)` whose basis
    /// values are `tr(θb²) + 2·bit`, extended in index order and then
    /// checked on every pair.
    fn p2_exponents(&self, theta: usize, choice: usize) -> Result<Vec<u32>> {
        let t = &self.tables;
        let d = self.spec.d();
        let n = self.spec.n() as usize;
        let mut q = vec![u32::MAX; d];
        q[0] = 0;
        for i in 0..n {
            let b = 1usize << (n - 1 - i);
            let bit = ((choice >> (n - 1 - i)) & 1) as u32;
            q[b] = (t.trace(t.mul(theta, t.mul(b, b))) + 2 * bit) % 4;
        }
        for x in 1..d {
            if q[x] != u32::MAX {
                continue;
            }
            let b = 1usize << (usize::BITS - 1 - x.leading_zeros());
            let y = x ^ b;
            q[x] = (q[y] + q[b] + 2 * t.trace(t.mul(theta, t.mul(y, b)))) % 4;
        }
        for x in 0..d {
            for y in 0..d {
                let lhs = q[x ^ y];
                let rhs = (q[x] + q[y] + 2 * t.trace(t.mul(theta, t.mul(x, y)))) % 4;
                if lhs != rhs {
                    return Err(internal(format!("no consistent μ table for θ = {theta}")));
                }
            }
        }
        Ok(q)
    }

    /// Branches for `GF(4)`: `θ` in index order, each `θ`'s choices in
    /// lexicographic order; the first joint choice satisfying the six
    /// relations among `R_α, R_1, R_{α+1}` up to a fourth-root phase.
    fn joint_branches_gf4(&self) -> Result<Vec<usize>> {
        let mut cand: Vec<Vec<ExactMatrix>> = vec![Vec::new(); 4];
        for (theta, slot) in cand.iter_mut().enumerate().skip(1) {
            for choice in 0..4 {
                let q = self.p2_exponents(theta, choice)?;
                slot.push(self.assemble_p2(theta, &q)?);
            }
        }
        let x: Vec<ExactMatrix> =
            (0..4).map(|b| ExactMatrix::permutation(2, &(0..4).map(|k| k ^ b).collect::<Vec<_>>())).collect::<Result<_>>()?;
        for k1 in 0..4 {
            for k2 in 0..4 {
                for k3 in 0..4 {
                    let r = [ExactMatrix::identity(2, 4)?, cand[1][k1].clone(), cand[2][k2].clone(), cand[3][k3].clone()];
                    if gf4_relations(&r, &x)?.iter().all(|c| c.holds) {
                        return Ok(vec![0, k1, k2, k3]);
                    }
                }
            }
        }
        Err(internal("no branch choice satisfies the GF(4) relations"))
    }

    fn place(&self, lambda: &[i64], t: u32) -> Result<ExactMatrix> {
        let d = self.spec.d();
        let w = width_for(self.m);
        let mut out = ExactMatrix::zeros(self.spec.p(), d)?;
        for psi in 0..d {
            let v = &lambda[psi * w..(psi + 1) * w];
            for phi in 0..d {
                out.set_raw(self.tables.add(psi, phi), phi, v);
            }
        }
        Ok(out.with_scale(t))
    }

    fn assemble_p2(&self, theta: usize, q: &[u32]) -> Result<ExactMatrix> {
        let d = self.spec.d();
        let w = width_for(self.m);
        let inv = self.tables.inv(theta);
        let mut lambda = vec![0i64; d * w];
        for psi in 0..d {
            let e = q[self.tables.mul(inv, psi)];
            let z = CycInt::root_of_unity(4, e as i64)?;
            lambda[psi * w..(psi + 1) * w].copy_from_slice(z.coeffs());
        }
        self.place(&lambda, self.spec.n())
    }

    /// Generating vector `λ_ψ` (canonical, `d × width`) and its scale.
    fn lambda(&self, theta: usize, phased: bool) -> Result<(Vec<i64>, u32)> {
        let d = self.spec.d();
        let n = self.spec.n();
        let m = self.m as usize;
        let w = width_for(self.m);
        let t = &self.tables;
        let mut lambda = vec![0i64; d * w];
        if self.spec.p() == 2 {
            let q = self.mu_exponents(theta)?;
            let inv = t.inv(theta);
            for psi in 0..d {
                let z = CycInt::root_of_unity(4, q[t.mul(inv, psi)] as i64)?;
                lambda[psi * w..(psi + 1) * w].copy_from_slice(z.coeffs());
            }
            return Ok((lambda, n));
        }
        // χ(2⁻¹θ⁻¹ψ²)
        let c = t.mul(self.half, t.inv(theta));
        let exps: Vec<usize> = (0..d).map(|psi| t.trace(t.mul(c, t.mul(psi, psi))) as usize).collect();
        if !phased {
            for (psi, &e) in exps.iter().enumerate() {
                let z = CycInt::root_of_unity(self.m, e as i64)?;
                lambda[psi * w..(psi + 1) * w].copy_from_slice(z.coeffs());
            }
            return Ok((lambda, n));
        }
        // η(2θ)·conj(G)·χ(2⁻¹θ⁻¹ψ²) at scale 2n
        let sign: i64 = if self.square[t.mul(t.residue(2), theta)] { 1 } else { -1 };
        let mut cyc = vec![0i64; m];
        for (psi, &e) in exps.iter().enumerate() {
            cyc.iter_mut().for_each(|x| *x = 0);
            rotate_add(&mut cyc, &self.gauss_conj, e);
            cyc.iter_mut().for_each(|x| *x *= sign);
            canonicalize(m, &cyc, &mut lambda[psi * w..(psi + 1) * w]);
        }
        let mut scale = 2 * n;
        let p = self.spec.p() as i64;
        while scale >= 2 && lambda.iter().all(|&x| x % p == 0) {
            lambda.iter_mut().for_each(|x| *x /= p);
            scale -= 2;
        }
        Ok((lambda, scale))
    }

    /// `R_θ`; for odd `p` the coefficients carry the global phase
    /// `η(2θ)·conj(G)/√q` that makes `θ ↦ R_θ` an exact homomorphism.
    pub fn r(&self, theta: usize) -> Result<ExactMatrix> {
        self.build(theta, true)
    }

    /// `R_θ` with the literal coefficients `q^{−1/2} χ(2⁻¹θ⁻¹ψ²)`.
    pub fn r_unphased(&self, theta: usize) -> Result<ExactMatrix> {
        self.build(theta, false)
    }

    fn build(&self, theta: usize, phased: bool) -> Result<ExactMatrix> {
        let d = self.spec.d();
        if theta >= d {
            return Err(invalid(format!("θ index {theta} out of range")));
        }
        if theta == 0 {
            return ExactMatrix::identity(self.spec.p(), d);
        }
        let (lambda, t) = self.lambda(theta, phased)?;
        let r = self.place(&lambda, t)?;
        if !r.is_block_circulant() {
            return Err(internal(format!("R_{theta} is not block-circulant")));
        }
        if !r.is_hadamard() {
            return Err(internal(format!("R_{theta} is not a unitary Hadamard matrix")));
        }
        self.check_eigen_relation(theta, &lambda)?;
        Ok(r)
    }

    /// `(Z_θ′ X_{θθ′}) R_θ = μ_{θ,θ′} R_θ Z_θ′`, reduced through
    /// `R_{r,c} = λ(φ_r − φ_c)` to `χ(θ′ψ) λ(ψ − θθ′) = μ_{θ,θ′} λ(ψ)`.
    fn check_eigen_relation(&self, theta: usize, lambda: &[i64]) -> Result<()> {
        let d = self.spec.d();
        let m = self.m as usize;
        let w = width_for(self.m);
        let t = &self.tables;
        let step = omega_step(self.spec.p()) as usize;
        let mu = self.mu_exponents(theta)?;
        let cyc: Vec<Vec<i64>> = (0..d)
            .map(|psi| {
                let mut v = vec![0i64; m];
                v[..w].copy_from_slice(&lambda[psi * w..(psi + 1) * w]);
                v
            })
            .collect();
        let primes: Vec<usize> = if d <= EXHAUSTIVE_EIGEN_LIMIT {
            (0..d).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(theta as u64);
            let mut v: Vec<usize> = (0..16.min(d)).collect();
            v.extend((0..16).map(|_| rng.random_range(0..d)));
            v
        };
        let (mut lhs, mut rhs) = (vec![0i64; m], vec![0i64; m]);
        let (mut cl, mut cr) = (vec![0i64; w], vec![0i64; w]);
        for tp in primes {
            let b = t.mul(theta, tp);
            for psi in 0..d {
                lhs.iter_mut().for_each(|x| *x = 0);
                rhs.iter_mut().for_each(|x| *x = 0);
                rotate_add(&mut lhs, &cyc[t.sub(psi, b)], step * t.trace(t.mul(tp, psi)) as usize);
                rotate_add(&mut rhs, &cyc[psi], mu[tp] as usize);
                canonicalize(m, &lhs, &mut cl);
                canonicalize(m, &rhs, &mut cr);
                if cl != cr {
                    return Err(internal(format!("R_{theta} fails the eigen-relation at θ' = {tp}")));
                }
            }
        }
        Ok(())
    }
}

/// `μ_{θ,·}` for `θ ≠ 0`.
pub fn build_mu(spec: &FieldSpec, theta: &FieldElement) -> Result<MuTable> {
    Rotations::new(spec)?.mu(spec.index_of(theta)?)
}

/// `R_θ`, with its structure, unitarity, Hadamard property and eigen-relation
/// asserted.
pub fn build_r(spec: &FieldSpec, theta: &FieldElement) -> Result<ExactMatrix> {
    Rotations::new(spec)?.r(spec.index_of(theta)?)
}

/// `R_θ` with the literal `λ` coefficients (no global phase correction).
pub fn build_r_unphased(spec: &FieldSpec, theta: &FieldElement) -> Result<ExactMatrix> {
    Rotations::new(spec)?.r_unphased(spec.index_of(theta)?)
}

/// One relation of the form `lhs = c · rhs`, `c` a root of unity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RelationCheck {
    pub name: String,
    pub holds: bool,
    pub phase: Option<ScaledValue>,
    pub phase_order: Option<u32>,
}

/// `R_θ* R_θ′ = c · R_{θ′−θ} X_θ″`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClosureCheck {
    pub theta: usize,
    pub theta_prime: usize,
    pub theta_dd: Option<usize>,
    pub phase_order: Option<u32>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModifiedGroupLaw {
    /// The six `GF(4)` relations (empty unless `n = 2`).
    pub relations: Vec<RelationCheck>,
    pub closure: Vec<ClosureCheck>,
    /// Largest phase order seen in the closure relations.
    pub max_phase_order: u32,
    pub pass: bool,
}

/// Largest phase order accepted in the closure relation.
pub const CLOSURE_PHASE_ORDER: u32 = 8;

fn relation(name: &str, lhs: &ExactMatrix, rhs: &ExactMatrix, max_order: u32) -> Result<RelationCheck> {
    let phase = lhs.phase_relative_to(rhs)?;
    let order = phase.as_ref().and_then(|c| c.root_order());
    Ok(RelationCheck {
        name: name.into(),
        holds: order.is_some_and(|o| max_order % o == 0),
        phase,
        phase_order: order,
    })
}

/// The relations among `R_α, R_1, R_{α+1}` in `GF(4)`; `r` and `x` are
/// indexed by element index (`α ↦ 1`, `1 ↦ 2`, `α+1 ↦ 3`).
fn gf4_relations(r: &[ExactMatrix], x: &[ExactMatrix]) -> Result<Vec<RelationCheck>> {
    let (a, o, a1) = (1, 2, 3);
    let rr = |i: usize, j: usize| r[i].mul(&r[j]);
    let rx = |i: usize, j: usize| r[i].mul(&x[j]);
    Ok(vec![
        relation("R_a R_(a+1) = R_1", &rr(a, a1)?, &r[o], 4)?,
        relation("R_(a+1) R_a = R_1", &rr(a1, a)?, &r[o], 4)?,
        relation("R_a R_1 = R_(a+1) X_(a+1)", &rr(a, o)?, &rx(a1, a1)?, 4)?,
        relation("R_(a+1) R_1 = R_a X_a", &rr(a1, o)?, &rx(a, a)?, 4)?,
        relation("R_a^2 = X_(a+1)", &rr(a, a)?, &x[a1], 4)?,
        relation("R_(a+1)^2 = X_a", &rr(a1, a1)?, &x[a], 4)?,
        relation("R_1^2 = X_1", &rr(o, o)?, &x[o], 4)?,
    ])
}

/// Checks the characteristic-2 relations without failing: for `n = 2` the
/// six `GF(4)` relations up to a fourth-root phase, and for every pair the
/// closure `R_θ* R_θ′ = c·R_{θ′−θ} X_θ″` with `c` a root of unity of order
/// dividing 8.
pub fn check_modified_group_law(rot: &Rotations) -> Result<ModifiedGroupLaw> {
    let spec = rot.spec();
    if spec.p() != 2 {
        return Err(invalid("the modified group law concerns p = 2"));
    }
    let d = spec.d();
    let r: Vec<ExactMatrix> = (0..d).map(|th| rot.r(th)).collect::<Result<_>>()?;
    let x: Vec<ExactMatrix> = (0..d)
        .map(|b| ExactMatrix::permutation(2, &(0..d).map(|k| rot.tables().add(k, b)).collect::<Vec<_>>()))
        .collect::<Result<_>>()?;
    let relations = if spec.n() == 2 { gf4_relations(&r, &x)? } else { Vec::new() };
    let adj: Vec<ExactMatrix> = r.iter().map(|m| m.adjoint()).collect();
    let closure: Vec<Result<ClosureCheck>> = crate::par::map_indices(d * d, |pair| {
        let (th, tp) = (pair / d, pair % d);
        let diff = rot.tables().sub(tp, th);
        let prod = adj[th].mul(&r[tp])?;
        let rest = adj[diff].mul(&prod)?;
        // rest should be c·X_θ″ with θ″ read off column 0
        let row = (0..d).find(|&i| !rest.entry(i, 0).is_zero());
        let (theta_dd, order) = match row {
            Some(dd) => {
                let phase = rest.phase_relative_to(&x[dd])?;
                (Some(dd), phase.and_then(|c| c.root_order()))
            }
            None => (None, None),
        };
        Ok(ClosureCheck {
            theta: th,
            theta_prime: tp,
            theta_dd,
            phase_order: order,
            holds: order.is_some_and(|o| CLOSURE_PHASE_ORDER % o == 0),
        })
    });
    let closure: Vec<ClosureCheck> = closure.into_iter().collect::<Result<_>>()?;
    let max_phase_order = closure.iter().filter_map(|c| c.phase_order).max().unwrap_or(1);
    let pass = relations.iter().all(|c| c.holds) && closure.iter().all(|c| c.holds);
    Ok(ModifiedGroupLaw { relations, closure, max_phase_order, pass })
}

/// As [`check_modified_group_law`], failing with the first broken relation.
pub fn verify_modified_group_law(spec: &FieldSpec) -> Result<ModifiedGroupLaw> {
    let report = check_modified_group_law(&Rotations::new(spec)?)?;
    if let Some(bad) = report.relations.iter().find(|c| !c.holds) {
        return Err(Error::VerificationFailure(format!("relation {} fails", bad.name)));
    }
    if let Some(bad) = report.closure.iter().find(|c| !c.holds) {
        return Err(Error::VerificationFailure(format!(
            "closure fails for θ = {}, θ' = {}",
            bad.theta, bad.theta_prime
        )));
    }
    Ok(report)
}

//! Quadratic Weil sums `Σ_x χ(θx² + θ′x)` over `GF(pⁿ)`, `p` odd.

use alloc::{format, vec, vec::Vec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cyclotomic::{order_for, CycInt, ScaledValue};
use crate::error::{invalid, Error, Result};
use crate::galois::{FieldElement, FieldSpec, FieldTables, PrimeResidue};
use crate::operators::{build_f, ExactMatrix, Rotations};
use crate::par;

/// Largest `d` for which the default sampling covers the whole grid.
pub const EXHAUSTIVE_WEIL_LIMIT: usize = 81;

/// Pairs drawn by the default sampling above the limit.
pub const DEFAULT_WEIL_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeilQuery {
    spec: FieldSpec,
    theta: FieldElement,
    theta_prime: FieldElement,
}

impl WeilQuery {
    pub fn new(spec: &FieldSpec, theta: FieldElement, theta_prime: FieldElement) -> Result<Self> {
        if spec.p() == 2 {
            return Err(Error::Unsupported("quadratic Weil sums need odd characteristic".into()));
        }
        spec.check(&theta)?;
        spec.check(&theta_prime)?;
        if theta.is_zero() {
            return Err(invalid("the quadratic coefficient must be nonzero"));
        }
        Ok(WeilQuery { spec: spec.clone(), theta, theta_prime })
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn theta(&self) -> &FieldElement {
        &self.theta
    }

    pub fn theta_prime(&self) -> &FieldElement {
        &self.theta_prime
    }
}

/// `Σ_x χ(θx² + θ′x)` as an element of `Z[ζ_p]`.
pub fn weil_sum(q: &WeilQuery) -> Result<CycInt> {
    let tables = FieldTables::new(&q.spec)?;
    sum_indexed(&tables, q.spec.index_of(&q.theta)?, q.spec.index_of(&q.theta_prime)?)
}

fn sum_indexed(t: &FieldTables, a: usize, b: usize) -> Result<CycInt> {
    let mut hist = vec![0i64; t.p() as usize];
    for x in 0..t.d() {
        let e = t.add(t.mul(a, t.mul(x, x)), t.mul(b, x));
        hist[t.trace(e) as usize] += 1;
    }
    CycInt::from_cyclic(order_for(t.p()), &hist)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    All,
    Random { count: usize, seed: u64 },
}

impl Sampling {
    pub fn default_for(d: usize, seed: u64) -> Sampling {
        if d <= EXHAUSTIVE_WEIL_LIMIT {
            Sampling::All
        } else {
            Sampling::Random { count: DEFAULT_WEIL_SAMPLES, seed }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeilRow {
    pub theta_index: usize,
    pub theta_prime_index: usize,
    pub sum: CycInt,
    /// `|Σ|²` when it is a rational integer.
    pub norm_sq: Option<i64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeilReport {
    pub field: FieldSpec,
    pub sampling: Sampling,
    /// The expected `|Σ|² = pⁿ`.
    pub target: i64,
    pub rows: Vec<WeilRow>,
    pub pass: bool,
}

/// Evaluates the selected `(θ ≠ 0, θ′)` pairs and checks `|Σ|² = pⁿ`.
///
/// Returns the full report when every row passes, otherwise a
/// verification failure naming the first bad pair.
pub fn verify_weil_sums(spec: &FieldSpec, sampling: Sampling) -> Result<WeilReport> {
    let report = evaluate_weil_sums(spec, sampling)?;
    if let Some(bad) = report.rows.iter().find(|r| !r.pass) {
        return Err(Error::VerificationFailure(format!(
            "|Σ|² ≠ {} for θ = {}, θ' = {}",
            report.target, bad.theta_index, bad.theta_prime_index
        )));
    }
    Ok(report)
}

/// As [`verify_weil_sums`] but always returns the report.
pub fn evaluate_weil_sums(spec: &FieldSpec, sampling: Sampling) -> Result<WeilReport> {
    if spec.p() == 2 {
        return Err(Error::Unsupported("quadratic Weil sums need odd characteristic".into()));
    }
    let tables = FieldTables::new(spec)?;
    let d = spec.d();
    let pairs: Vec<(usize, usize)> = match sampling {
        Sampling::All => (1..d).flat_map(|a| (0..d).map(move |b| (a, b))).collect(),
        Sampling::Random { count, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| (rng.random_range(1..d), rng.random_range(0..d))).collect()
        }
    };
    let target = (spec.p() as i64).pow(spec.n());
    let rows: Vec<Result<WeilRow>> = par::map_indices(pairs.len(), |i| {
        let (a, b) = pairs[i];
        let sum = sum_indexed(&tables, a, b)?;
        let norm_sq = sum.norm_sq()?.as_integer();
        Ok(WeilRow { theta_index: a, theta_prime_index: b, pass: norm_sq == Some(target), sum, norm_sq })
    });
    let rows: Vec<WeilRow> = rows.into_iter().collect::<Result<_>>()?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(WeilReport { field: spec.clone(), sampling, target, rows, pass })
}

/// Checks `(F·R̃_θ̂)_{j,0} = p^{−n}·Σ_x χ(θ₁x² + κ_j x)` with `θ₁ = (2θ̂)⁻¹`,
/// `R̃` the unphased rotation and `κ_j` the trace dual of row `j` of `F`.
/// Returns the number of entries compared.
pub fn cross_check_fourier(spec: &FieldSpec) -> Result<usize> {
    if spec.p() == 2 {
        return Err(Error::Unsupported("quadratic Weil sums need odd characteristic".into()));
    }
    let tables = FieldTables::new(spec)?;
    let rot = Rotations::new(spec)?;
    let f = build_f(spec)?;
    let d = spec.d();
    let n = spec.n();
    let kappa: Vec<usize> = (0..d)
        .map(|j| {
            let form: Vec<PrimeResidue> =
                tables.digits(j).iter().map(|&c| PrimeResidue::new(c as u64, spec.p())).collect();
            spec.index_of(&spec.solve_trace_dual(&form)?)
        })
        .collect::<Result<_>>()?;
    let two = tables.residue(2);
    let mut checked = 0;
    for hat in 1..d {
        let prod: ExactMatrix = f.mul(&rot.r_unphased(hat)?)?;
        let theta1 = tables.inv(tables.mul(two, hat));
        for (j, &k) in kappa.iter().enumerate() {
            let want = ScaledValue::new(sum_indexed(&tables, theta1, k)?, 2 * n);
            if !prod.entry_scaled(j, 0).scaled_eq(&want)? {
                return Err(Error::VerificationFailure(format!(
                    "F·R_θ entry ({j}, 0) differs from the Weil sum for θ index {hat}"
                )));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

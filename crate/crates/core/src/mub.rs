//! The `d + 1` bases `{F, R_θ}` and their exact verification.

use alloc::{format, string::String, vec, vec::Vec};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cyclotomic::{CycInt, ScaledValue};
use crate::error::{invalid, Error, Result};
use crate::galois::{FieldSpec, FieldTables, PrimeResidue};
use crate::operators::{build_f, commuting_classes, ExactMatrix, Rotations};
use crate::par;

/// Largest `d` verified pairwise by default.
pub const FULL_MODE_LIMIT: usize = 49;

/// Minimum number of pairs checked densely in structural mode.
pub const MIN_SPOT_CHECKS: usize = 10;

/// `F` followed by `R_θ` in index order (`R_0` is the identity).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMubSet")]
pub struct MubSet {
    #[serde(rename = "field")]
    spec: FieldSpec,
    bases: Vec<ExactMatrix>,
}

#[derive(Deserialize)]
struct RawMubSet {
    field: FieldSpec,
    bases: Vec<ExactMatrix>,
}

impl TryFrom<RawMubSet> for MubSet {
    type Error = Error;

    fn try_from(raw: RawMubSet) -> Result<Self> {
        MubSet::new(raw.field, raw.bases)
    }
}

impl MubSet {
    /// Checks the count and shape of the bases; unitarity is left to
    /// [`verify_mub_set`].
    pub fn new(spec: FieldSpec, bases: Vec<ExactMatrix>) -> Result<Self> {
        let d = spec.d();
        if bases.len() != d + 1 {
            return Err(invalid(format!("expected {} bases, got {}", d + 1, bases.len())));
        }
        for (k, b) in bases.iter().enumerate() {
            if b.dim() != d || b.p() != spec.p() {
                return Err(invalid(format!("basis {k} is not a {d}×{d} matrix over p = {}", spec.p())));
            }
        }
        Ok(MubSet { spec, bases })
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn bases(&self) -> &[ExactMatrix] {
        &self.bases
    }

    pub fn into_bases(self) -> Vec<ExactMatrix> {
        self.bases
    }
}

/// Builds `{F, R_θ}`; every member is asserted unitary by its builder.
pub fn build_mub_set(spec: &FieldSpec) -> Result<MubSet> {
    let rot = Rotations::new(spec)?;
    let mut bases = Vec::with_capacity(spec.d() + 1);
    bases.push(build_f(spec)?);
    let rs: Vec<Result<ExactMatrix>> = par::map_indices(spec.d(), |th| rot.r(th));
    for r in rs {
        bases.push(r?);
    }
    MubSet::new(spec.clone(), bases)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Every pair of bases checked by an exact product.
    Full,
    /// Group law and diagonalization in the Fourier domain plus spot checks.
    Structural,
}

impl Mode {
    pub fn default_for(d: usize) -> Mode {
        if d <= FULL_MODE_LIMIT {
            Mode::Full
        } else {
            Mode::Structural
        }
    }
}

/// An entry of `A*B` whose modulus is not `d^{−1/2}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub row: usize,
    pub col: usize,
    pub entry: ScaledValue,
    pub norm_sq: ScaledValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCheck {
    pub pass: bool,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairResult {
    pub a: usize,
    pub b: usize,
    pub pass: bool,
    pub witness: Option<Witness>,
}

/// A basis `B` with `(B*B)_{row,col} ≠ δ_{row,col}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitarityFailure {
    pub basis: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    /// `R_θ* R_θ′ = R_{θ′−θ}` (odd `p`).
    GroupLaw,
    /// `R_θ* R_θ′ = c·R_{θ′−θ} X_θ″` (`p = 2`).
    ModifiedClosure,
}

/// First pair `(θ, θ′)` and Fourier index `j` where the law fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LawFailure {
    pub theta: usize,
    pub theta_prime: usize,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub classes: usize,
    pub class_size: usize,
    pub total_labels: usize,
    pub pairs_checked: u64,
    pub exhaustive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralReport {
    pub reduction: Reduction,
    /// Basis 0 equals the canonical `F` (required by the reduction).
    pub fourier_matches: bool,
    /// Number of `R_θ` with `F R_θ F*` diagonal and unimodular.
    pub diagonalized: usize,
    pub diagonal_failure: Option<usize>,
    pub law_pairs: usize,
    pub law_failure: Option<LawFailure>,
    /// Largest order of the closure phase `c` (1 under the group law).
    pub max_phase_order: u32,
    /// First `R_θ` (`θ ≠ 0`) with an entry of the wrong modulus.
    pub hadamard_failure: Option<PairResult>,
    pub partition: PartitionSummary,
    pub seed: u64,
    pub spot_checks: Vec<PairResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MubReport {
    pub field: FieldSpec,
    pub d: usize,
    pub bases: usize,
    pub mode: Mode,
    pub pass: bool,
    pub non_unitary: Vec<UnitarityFailure>,
    pub pairs_total: usize,
    pub pairs_passed: usize,
    pub pairs: Vec<PairResult>,
    pub structural: Option<StructuralReport>,
    /// Wall-clock time, filled in by callers that have a clock.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

impl MubReport {
    /// First failed pair, if any.
    pub fn first_failure(&self) -> Option<&PairResult> {
        self.pairs
            .iter()
            .chain(self.structural.iter().flat_map(|s| s.spot_checks.iter().chain(s.hadamard_failure.iter())))
            .find(|r| !r.pass)
    }
}

/// `A*B` entry test: every `|(A*B)_{jk}|² = 1/d`. Both inputs must be unitary.
pub fn verify_unbiased_pair(a: &ExactMatrix, b: &ExactMatrix) -> Result<PairCheck> {
    if a.dim() != b.dim() || a.p() != b.p() {
        return Err(invalid("matrices are not conformable"));
    }
    if !a.is_unitary() || !b.is_unitary() {
        return Err(invalid("verify_unbiased_pair needs unitary inputs"));
    }
    pair_check(a, b)
}

fn pair_check(a: &ExactMatrix, b: &ExactMatrix) -> Result<PairCheck> {
    let n = a.n().ok_or_else(|| invalid("dimension is not a power of p"))?;
    let prod = a.adjoint().mul(b)?;
    let witness = hadamard_witness(&prod, n)?;
    Ok(PairCheck { pass: witness.is_none(), witness })
}

/// First entry of modulus other than `d^{−1/2}`, preferring zero entries.
fn hadamard_witness(m: &ExactMatrix, n: u32) -> Result<Option<Witness>> {
    let d = m.dim();
    let p = m.p() as i128;
    let t = m.t();
    let target = p.checked_pow(t).ok_or(Error::Overflow)?;
    let scale = p.pow(n);
    let mut first_bad = None;
    for i in 0..d * d {
        let e = CycInt::from_canonical_unchecked(m.m(), m.entry_raw(i).to_vec());
        if e.is_zero() {
            first_bad = Some(i);
            break;
        }
        let ok = matches!(e.norm_sq()?.as_integer(), Some(v) if v as i128 * scale == target);
        if !ok && first_bad.is_none() {
            first_bad = Some(i);
        }
    }
    let Some(i) = first_bad else {
        return Ok(None);
    };
    let (row, col) = (i / d, i % d);
    let entry = m.entry_scaled(row, col);
    let norm_sq = ScaledValue::new(entry.value.norm_sq()?, 2 * t).normalized();
    Ok(Some(Witness { row, col, entry, norm_sq }))
}

fn unitarity_failure(k: usize, b: &ExactMatrix) -> Result<Option<UnitarityFailure>> {
    if b.is_unitary() {
        return Ok(None);
    }
    let gram = b.adjoint().mul_dense(b)?;
    let target = CycInt::from_int(b.m(), (b.p() as i64).checked_pow(b.t()).ok_or(Error::Overflow)?)?;
    let d = b.dim();
    for i in 0..d * d {
        let (row, col) = (i / d, i % d);
        let want = if row == col { target.clone() } else { CycInt::zero(b.m())? };
        if gram.entry(row, col) != want {
            return Ok(Some(UnitarityFailure { basis: k, row, col }));
        }
    }
    Ok(Some(UnitarityFailure { basis: k, row: 0, col: 0 }))
}

fn all_pairs(count: usize) -> Vec<(usize, usize)> {
    (0..count).flat_map(|a| (a + 1..count).map(move |b| (a, b))).collect()
}

fn run_pairs(bases: &[ExactMatrix], pairs: &[(usize, usize)]) -> Result<Vec<PairResult>> {
    let results: Vec<Result<PairResult>> = par::map_indices(pairs.len(), |i| {
        let (a, b) = pairs[i];
        let c = pair_check(&bases[a], &bases[b])?;
        Ok(PairResult { a, b, pass: c.pass, witness: c.witness })
    });
    results.into_iter().collect()
}

/// Verifies mutual unbiasedness. `seed` drives the structural spot checks
/// and the sampled partition check.
pub fn verify_mub_set(set: &MubSet, mode: Mode, seed: u64) -> Result<MubReport> {
    let spec = set.spec();
    let d = spec.d();
    let count = set.bases.len();
    let mut report = MubReport {
        field: spec.clone(),
        d,
        bases: count,
        mode,
        pass: false,
        non_unitary: Vec::new(),
        pairs_total: count * (count - 1) / 2,
        pairs_passed: 0,
        pairs: Vec::new(),
        structural: None,
        timing_ms: None,
    };
    match mode {
        Mode::Full => {
            let fails: Vec<Result<Option<UnitarityFailure>>> =
                par::map_indices(count, |k| unitarity_failure(k, &set.bases[k]));
            for f in fails {
                report.non_unitary.extend(f?);
            }
            report.pairs = run_pairs(&set.bases, &all_pairs(count))?;
            report.pairs_passed = report.pairs.iter().filter(|r| r.pass).count();
            report.pass = report.non_unitary.is_empty() && report.pairs_passed == report.pairs_total;
        }
        Mode::Structural => {
            let s = structural(set, seed)?;
            let spot_ok = s.spot_checks.iter().all(|r| r.pass);
            report.pass = s.fourier_matches
                && s.diagonal_failure.is_none()
                && s.law_failure.is_none()
                && s.hadamard_failure.is_none()
                && spot_ok;
            report.pairs_passed = if report.pass { report.pairs_total } else { 0 };
            report.structural = Some(s);
        }
    }
    Ok(report)
}

/// `R_θ = F* D_θ F`, so the law and unbiasedness reduce to the diagonals:
/// `D_θ` unimodular certifies `R_θ` unitary and every `(F, R_θ)` pair, the
/// law on the `D_θ` makes every `(R_θ, R_θ′)` pair a multiple of some
/// `R_{θ′−θ}` (times a shift), which is Hadamard when each `R_θ` is.
fn structural(set: &MubSet, seed: u64) -> Result<StructuralReport> {
    let spec = set.spec();
    let d = spec.d();
    let n = spec.n();
    let bases = &set.bases;
    let tables = FieldTables::new(spec)?;
    let reduction = if spec.p() == 2 { Reduction::ModifiedClosure } else { Reduction::GroupLaw };
    let f = build_f(spec)?;
    let fourier_matches = bases[0].equals(&f)?;

    let diags: Vec<Result<Option<Vec<ScaledValue>>>> = par::map_indices(d, |th| {
        let dm = bases[th + 1].fourier_sandwich()?;
        if !dm.is_diagonal() {
            return Ok(None);
        }
        let v: Vec<ScaledValue> = (0..d).map(|j| dm.entry_scaled(j, j)).collect();
        Ok(v.iter().all(|x| x.is_unimodular()).then_some(v))
    });
    let diags: Vec<Option<Vec<ScaledValue>>> = diags.into_iter().collect::<Result<_>>()?;
    let diagonal_failure = diags.iter().position(|x| x.is_none());
    let diagonalized = diags.iter().filter(|x| x.is_some()).count();

    let (mut law_failure, mut max_phase_order) = (None, 1);
    if diagonal_failure.is_none() {
        let diags: Vec<Vec<ScaledValue>> = diags.into_iter().map(|x| x.unwrap_or_default()).collect();
        let rows: Vec<Result<(Option<LawFailure>, u32)>> =
            par::map_indices(d, |th| law_row(spec, &tables, &diags, th));
        for row in rows {
            let (fail, order) = row?;
            max_phase_order = max_phase_order.max(order);
            if law_failure.is_none() {
                law_failure = fail;
            }
        }
    }

    let had: Vec<Result<Option<PairResult>>> = par::map_indices(d - 1, |k| {
        let w = hadamard_witness(&bases[k + 2], n)?;
        // R_0 = I, so (1, k) records the entry of I*·R_θ
        Ok(w.map(|w| PairResult { a: 1, b: k + 2, pass: false, witness: Some(w) }))
    });
    let mut hadamard_failure = None;
    for h in had {
        if let (None, Some(f)) = (&hadamard_failure, h?) {
            hadamard_failure = Some(f);
        }
    }

    let part = commuting_classes_summary(spec, seed)?;
    let count = bases.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = all_pairs(count);
    let k = MIN_SPOT_CHECKS.min(pairs.len());
    for i in 0..k {
        let j = rng.random_range(i..pairs.len());
        pairs.swap(i, j);
    }
    pairs.truncate(k);
    pairs.sort_unstable();
    let spot_checks = run_pairs(bases, &pairs)?;

    Ok(StructuralReport {
        reduction,
        fourier_matches,
        diagonalized,
        diagonal_failure,
        law_pairs: d * d,
        law_failure,
        max_phase_order,
        hadamard_failure,
        partition: part,
        seed,
        spot_checks,
    })
}

/// Checks `conj(δ_θ)·δ_θ′·conj(δ_{θ′−θ}) = c·χ(κ·j)` over `j` for every `θ′`,
/// with `c = 1, κ = 0` for odd `p` and `c` of order dividing 8 for `p = 2`.
fn law_row(
    spec: &FieldSpec,
    tables: &FieldTables,
    diags: &[Vec<ScaledValue>],
    th: usize,
) -> Result<(Option<LawFailure>, u32)> {
    let d = spec.d();
    let m = diags[0][0].value.m();
    let one = ScaledValue::new(CycInt::one(m)?, 0);
    let minus_one = ScaledValue::new(CycInt::from_int(m, -1)?, 0);
    let mut max_order = 1;
    for tp in 0..d {
        let diff = tables.sub(tp, th);
        let ratio = |j: usize| -> Result<ScaledValue> {
            Ok(diags[th][j].conj().mul(&diags[tp][j])?.mul(&diags[diff][j].conj())?.normalized())
        };
        let fail = |j: usize, order: u32| Ok((Some(LawFailure { theta: th, theta_prime: tp, index: j }), order));
        if spec.p() != 2 {
            for j in 0..d {
                if !ratio(j)?.scaled_eq(&one)? {
                    return fail(j, max_order);
                }
            }
            continue;
        }
        let c = ratio(0)?;
        let Some(order) = c.root_order().filter(|o| 8 % o == 0) else {
            return fail(0, max_order);
        };
        max_order = max_order.max(order);
        // s_j = ratio_j · conj(c) must be the character (−1)^{tr(κj)}
        let mut sign = vec![0u32; d];
        for (j, s) in sign.iter_mut().enumerate() {
            let v = ratio(j)?.mul(&c.conj())?;
            *s = if v.scaled_eq(&one)? {
                0
            } else if v.scaled_eq(&minus_one)? {
                1
            } else {
                return fail(j, max_order);
            };
        }
        let n = spec.n() as usize;
        let form: Vec<PrimeResidue> = (0..n).map(|i| PrimeResidue::new(sign[1 << (n - 1 - i)] as u64, 2)).collect();
        let kappa = spec.index_of(&spec.solve_trace_dual(&form)?)?;
        if let Some(j) = (0..d).find(|&j| tables.trace(tables.mul(kappa, j)) != sign[j]) {
            return fail(j, max_order);
        }
    }
    Ok((None, max_order))
}

fn commuting_classes_summary(spec: &FieldSpec, seed: u64) -> Result<PartitionSummary> {
    let part = if seed == 0 {
        commuting_classes(spec)?
    } else {
        crate::operators::commuting_classes_with(spec, crate::operators::EXHAUSTIVE_CLASS_LIMIT, seed)?
    };
    Ok(PartitionSummary {
        classes: part.classes.len(),
        class_size: spec.d() - 1,
        total_labels: part.total_labels,
        pairs_checked: part.pairs_checked,
        exhaustive: part.exhaustive,
    })
}

/// Short human-readable verdict.
pub fn summary_line(report: &MubReport) -> String {
    let verdict = if report.pass { "PASS" } else { "FAIL" };
    match report.mode {
        Mode::Full => format!(
            "{verdict}: d = {}, {} bases, {}/{} pairs unbiased",
            report.d, report.bases, report.pairs_passed, report.pairs_total
        ),
        Mode::Structural => format!("{verdict}: d = {}, {} bases, structural verification", report.d, report.bases),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::galois::find_irreducible;

    fn gf(p: u32, n: u32) -> FieldSpec {
        find_irreducible(p, n).unwrap()
    }

    #[test]
    fn basis_counts() {
        for (p, n, count) in [(2, 1, 3), (2, 2, 5), (3, 2, 10)] {
            assert_eq!(build_mub_set(&gf(p, n)).unwrap().bases().len(), count);
        }
    }

    #[test]
    fn identity_pair_witness() {
        let id = ExactMatrix::identity(3, 9).unwrap();
        let c = verify_unbiased_pair(&id, &id).unwrap();
        assert!(!c.pass);
        let w = c.witness.unwrap();
        assert_eq!((w.row, w.col), (0, 1));
        assert!(w.norm_sq.value.is_zero());
    }

    #[test]
    fn fourier_identity_pair() {
        let s = gf(3, 2);
        let f = build_f(&s).unwrap();
        let id = ExactMatrix::identity(3, 9).unwrap();
        assert!(verify_unbiased_pair(&f, &id).unwrap().pass);
    }

    #[test]
    fn non_unitary_rejected() {
        let z = ExactMatrix::zeros(3, 3).unwrap();
        let id = ExactMatrix::identity(3, 3).unwrap();
        assert!(matches!(verify_unbiased_pair(&z, &id), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn full_small_fields() {
        for (p, n, pairs) in [(2, 1, 3), (2, 2, 10), (3, 1, 6), (3, 2, 45)] {
            let set = build_mub_set(&gf(p, n)).unwrap();
            let r = verify_mub_set(&set, Mode::Full, 0).unwrap();
            assert!(r.pass, "{p}^{n}");
            assert_eq!((r.pairs_total, r.pairs_passed), (pairs, pairs));
        }
    }

    #[test]
    fn structural_agrees_with_full() {
        for (p, n) in [(2, 2), (3, 2), (2, 3), (5, 1)] {
            let set = build_mub_set(&gf(p, n)).unwrap();
            let full = verify_mub_set(&set, Mode::Full, 1).unwrap();
            let st = verify_mub_set(&set, Mode::Structural, 1).unwrap();
            assert!(full.pass && st.pass, "{p}^{n}");
            let s = st.structural.unwrap();
            assert!(s.spot_checks.len() >= MIN_SPOT_CHECKS.min(full.pairs_total));
            let want = if p == 2 { Reduction::ModifiedClosure } else { Reduction::GroupLaw };
            assert_eq!(s.reduction, want);
            if p == 2 && n == 3 {
                assert_eq!(s.max_phase_order, 8);
            }
        }
    }

    #[test]
    fn duplicated_basis_fails_both_modes() {
        let set = build_mub_set(&gf(3, 2)).unwrap();
        let mut bases = set.clone().into_bases();
        bases[3] = bases[2].clone();
        let bad = MubSet::new(set.spec().clone(), bases).unwrap();
        assert!(!verify_mub_set(&bad, Mode::Structural, 0).unwrap().pass);
        assert!(!verify_mub_set(&bad, Mode::Full, 0).unwrap().pass);
    }

    #[test]
    fn unphased_rotations_break_only_the_group_law() {
        let s = gf(3, 1);
        let rot = Rotations::new(&s).unwrap();
        let mut bases = vec![build_f(&s).unwrap()];
        bases.extend((0..3).map(|t| rot.r_unphased(t).unwrap()));
        let set = MubSet::new(s, bases).unwrap();
        assert!(verify_mub_set(&set, Mode::Full, 0).unwrap().pass);
        let st = verify_mub_set(&set, Mode::Structural, 0).unwrap();
        assert!(!st.pass);
        assert!(st.structural.unwrap().law_failure.is_some());
    }

    #[test]
    fn shape_validation() {
        let s = gf(2, 2);
        let set = build_mub_set(&s).unwrap();
        let mut bases = set.into_bases();
        bases.pop();
        assert!(MubSet::new(s.clone(), bases.clone()).is_err());
        bases.push(ExactMatrix::identity(2, 2).unwrap());
        assert!(MubSet::new(s, bases).is_err());
    }

    #[test]
    fn report_round_trips() {
        let set = build_mub_set(&gf(2, 2)).unwrap();
        let r = verify_mub_set(&set, Mode::Structural, 3).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        let back: MubReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert_eq!(verify_mub_set(&set, Mode::Structural, 3).unwrap(), r);
    }
}

//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Every mathematical check is an exact integer identity (tolerance zero);
//! the only numeric tolerances are the wall-clock budgets below.

use std::time::{Duration, Instant};

use mubcirc::format::{read_mub_set, to_json};
use mubcirc_core::cyclotomic::{char_value, quadratic_gauss_sum, CycInt, ScaledValue};
use mubcirc_core::galois::is_prime;
use mubcirc_core::operators::{
    build_f, build_mu, build_x_theta, build_z_theta, commuting_classes, verify_modified_group_law, Rotations,
};
use mubcirc_core::weil::{verify_weil_sums, Sampling};
use mubcirc_core::{build_mub_set, find_irreducible, verify_mub_set, ExactMatrix, FieldSpec, Mode, MubReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

/// Exact checks: `|⟨u, v⟩|²·d` must equal 1 as an integer identity.
const EXACT_TOLERANCE: i64 = 0;
const FULL_BUDGET: Duration = Duration::from_secs(60);
const STRUCTURAL_BUDGET: Duration = Duration::from_secs(120);
const MUTATIONS: usize = 20;
const MUTATION_SEED: u64 = 0x5eed;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn gf(p: u32, n: u32) -> FieldSpec {
    find_irreducible(p, n).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn prime_powers_upto(limit: u32) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for p in 2..=limit {
        if !is_prime(p as u64) {
            continue;
        }
        let mut n = 1;
        while p.pow(n) <= limit {
            out.push((p, n));
            n += 1;
        }
    }
    out.sort_by_key(|&(p, n)| p.pow(n));
    out
}

fn criterion_1() -> Outcome {
    let mut notes = Vec::new();
    for (p, n) in [(2, 2), (3, 2), (2, 3), (5, 2), (3, 3), (7, 2)] {
        let s = gf(p, n);
        let d = s.d();
        let start = Instant::now();
        let set = build_mub_set(&s).map_err(|e| format!("d={d}: {e}"))?;
        let r = verify_mub_set(&set, Mode::Full, 0).map_err(|e| format!("d={d}: {e}"))?;
        let took = start.elapsed();
        ensure(set.bases().len() == d + 1, || format!("d={d}: {} bases", set.bases().len()))?;
        ensure(r.pass && r.pairs_passed == r.pairs_total, || format!("d={d}: {}/{} pairs", r.pairs_passed, r.pairs_total))?;
        ensure(took <= FULL_BUDGET, || format!("d={d}: {took:.1?} over budget"))?;
        notes.push(format!("d={d} {}/{} {:.1?}", r.pairs_passed, r.pairs_total, took));
    }
    let s = gf(5, 3);
    let start = Instant::now();
    let set = build_mub_set(&s).map_err(|e| e.to_string())?;
    let r = verify_mub_set(&set, Mode::Structural, 0).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(set.bases().len() == 126 && r.pass, || "d=125 structural failed".into())?;
    ensure(took <= STRUCTURAL_BUDGET, || format!("d=125: {took:.1?} over budget"))?;
    notes.push(format!("d=125 structural {took:.1?}"));
    Ok(notes.join(", "))
}

fn criterion_2() -> Outcome {
    let mut rows = 0;
    for p in [3, 5, 7] {
        for n in [1, 2] {
            let s = gf(p, n);
            let d = s.d();
            let r = verify_weil_sums(&s, Sampling::All).map_err(|e| format!("{p}^{n}: {e}"))?;
            ensure(r.rows.len() == (d - 1) * d, || format!("{p}^{n}: {} rows", r.rows.len()))?;
            ensure(r.rows.iter().all(|x| x.norm_sq == Some(r.target)), || format!("{p}^{n}: bad norm"))?;
            rows += r.rows.len();
        }
        let g = quadratic_gauss_sum(p).unwrap();
        ensure(g.norm_sq().unwrap().as_integer() == Some(p as i64), || format!("|G_{p}|² ≠ {p}"))?;
    }
    Ok(format!("{rows} sums with |Σ|² = pⁿ, |G|² = p for p = 3, 5, 7"))
}

fn criterion_3() -> Outcome {
    let mut pairs = 0;
    for (p, n) in [(3, 2), (5, 2), (3, 3)] {
        let s = gf(p, n);
        let rot = Rotations::new(&s).unwrap();
        let r: Vec<ExactMatrix> = (0..s.d()).map(|t| rot.r(t)).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
        for a in 0..s.d() {
            for b in 0..s.d() {
                let sum = rot.tables().add(a, b);
                let lhs = r[a].mul(&r[b]).map_err(|e| e.to_string())?;
                ensure(lhs.equals(&r[sum]).unwrap(), || format!("d={}: R_{a} R_{b} ≠ R_{sum}", s.d()))?;
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} exact products over d = 9, 25, 27"))
}

fn criterion_4() -> Outcome {
    let r4 = verify_modified_group_law(&gf(2, 2)).map_err(|e| e.to_string())?;
    ensure(r4.relations.iter().all(|c| c.holds && c.phase_order.is_some_and(|o| 4 % o == 0)), || {
        "GF(4) relation outside the 4th-root phase freedom".into()
    })?;
    ensure(r4.closure.len() == 16 && r4.closure.iter().all(|c| c.holds), || "d=4 closure".into())?;
    let r8 = verify_modified_group_law(&gf(2, 3)).map_err(|e| e.to_string())?;
    ensure(r8.closure.len() == 64 && r8.closure.iter().all(|c| c.holds), || "d=8 closure".into())?;
    Ok(format!(
        "{} relations at d=4 (phase order ≤ {}), closure 16/16 at d=4 and 64/64 at d=8 (phase order ≤ {})",
        r4.relations.len(),
        r4.relations.iter().filter_map(|c| c.phase_order).max().unwrap_or(1),
        r8.max_phase_order
    ))
}

fn criterion_5() -> Outcome {
    let mut count = 0;
    let specs = prime_powers_upto(81);
    for &(p, n) in &specs {
        let s = gf(p, n);
        let rot = Rotations::new(&s).unwrap();
        for th in 0..s.d() {
            let r = rot.r(th).map_err(|e| format!("d={}: {e}", s.d()))?;
            if th != 0 {
                ensure(r.is_block_circulant(), || format!("d={} θ={th}: not block-circulant", s.d()))?;
                ensure(r.is_hadamard(), || format!("d={} θ={th}: not unitary Hadamard", s.d()))?;
            }
            let dm = r.fourier_sandwich().map_err(|e| e.to_string())?;
            ensure(dm.is_diagonal(), || format!("d={} θ={th}: F R F* not diagonal", s.d()))?;
            ensure((0..s.d()).all(|j| dm.entry_scaled(j, j).is_unimodular()), || {
                format!("d={} θ={th}: diagonal not unimodular", s.d())
            })?;
            count += 1;
        }
    }
    Ok(format!("{count} rotations over {} fields with d ≤ 81", specs.len()))
}

fn criterion_6() -> Outcome {
    let specs = prime_powers_upto(81);
    let mut pairs = 0;
    for &(p, n) in &specs {
        let s = gf(p, n);
        let d = s.d();
        let part = commuting_classes(&s).map_err(|e| format!("d={d}: {e}"))?;
        ensure(part.exhaustive && part.total_labels == d * d, || format!("d={d}: coverage"))?;
        ensure(part.classes.len() == d && part.classes.iter().all(|c| c.labels.len() == d - 1), || {
            format!("d={d}: class sizes")
        })?;
        ensure(part.f0.len() == d - 1, || format!("d={d}: F0 size"))?;
        let expect = ((d + 1) * (d - 1) * (d - 2) / 2) as u64;
        ensure(part.pairs_checked == expect, || format!("d={d}: {} pairs checked", part.pairs_checked))?;
        pairs += part.pairs_checked;
    }
    Ok(format!("{} fields tiled exactly, {pairs} commuting pairs", specs.len()))
}

/// `Σ_ψ λ_ψ X_ψ` by dense sums, with `λ` from field arithmetic (odd `p`,
/// unphased) or from the μ-table (`p = 2`).
fn brute_rotation(s: &FieldSpec, th: usize) -> ExactMatrix {
    let theta = s.element_at(th).unwrap();
    let mut acc = ExactMatrix::zeros(s.p(), s.d()).unwrap();
    let inv = s.inv(&theta).unwrap();
    let mu = (s.p() == 2).then(|| build_mu(s, &theta).unwrap());
    for psi in s.elements() {
        let lam = match &mu {
            Some(mu) => mu.values[s.index_of(&s.mul(&inv, &psi).unwrap()).unwrap()].clone(),
            None => {
                let c = s.mul(&s.inv(&s.from_residue(2)).unwrap(), &inv).unwrap();
                char_value(s, &s.mul(&c, &s.mul(&psi, &psi).unwrap()).unwrap()).unwrap()
            }
        };
        let x = build_x_theta(s, &psi).unwrap().into_dense();
        acc = acc.add(&x.scalar_mul(&ScaledValue::new(lam, 0)).unwrap()).unwrap();
    }
    acc.scalar_mul(&ScaledValue::new(CycInt::one(acc.m()).unwrap(), s.n())).unwrap()
}

/// `η(2θ)·conj(G)/√q` with `G = Σ_x χ(x²)`.
fn global_phase(s: &FieldSpec, th: usize) -> ScaledValue {
    let theta = s.element_at(th).unwrap();
    let mut g = CycInt::zero(s.p()).unwrap();
    for x in s.elements() {
        g = g.add(&char_value(s, &s.mul(&x, &x).unwrap()).unwrap()).unwrap();
    }
    let eta = s.quadratic_character(&s.mul(&s.from_residue(2), &theta).unwrap()).unwrap();
    ScaledValue::new(g.conj().scale(eta as i64).unwrap(), s.n())
}

fn criterion_7() -> Outcome {
    let mut checks = 0;
    for (p, n) in [(2, 2), (2, 3), (3, 2)] {
        let s = gf(p, n);
        let d = s.d();
        let rot = Rotations::new(&s).unwrap();
        let f = build_f(&s).unwrap();
        for th in 1..d {
            let r = rot.r(th).unwrap();
            let brute = brute_rotation(&s, th);
            if p == 2 {
                ensure(r.equals(&brute).unwrap(), || format!("d={d} θ={th}: R differs from Σ λ X"))?;
            } else {
                let ru = rot.r_unphased(th).unwrap();
                ensure(ru.equals(&brute).unwrap(), || format!("d={d} θ={th}: R̃ differs from Σ λ X"))?;
                let phased = brute.scalar_mul(&global_phase(&s, th)).unwrap();
                ensure(r.equals(&phased).unwrap(), || format!("d={d} θ={th}: phase mismatch"))?;
            }
            checks += 1;
            let theta = s.element_at(th).unwrap();
            let x = build_x_theta(&s, &theta).unwrap();
            let z = build_z_theta(&s, &theta).unwrap();
            let rd = r.clone().into_dense();
            let (xd, zd) = (x.clone().into_dense(), z.clone().into_dense());
            for (fast, slow) in [
                (x.mul(&r), xd.mul_dense(&rd)),
                (r.mul(&x), rd.mul_dense(&xd)),
                (z.mul(&r), zd.mul_dense(&rd)),
                (r.mul(&z), rd.mul_dense(&zd)),
                (x.mul(&z), xd.mul_dense(&zd)),
                (z.mul(&x), zd.mul_dense(&xd)),
            ] {
                ensure(fast.unwrap().equals(&slow.unwrap()).unwrap(), || format!("d={d} θ={th}: structured product"))?;
                checks += 1;
            }
            let dense = f.mul_dense(&rd).unwrap().mul_dense(&f.adjoint()).unwrap();
            let sandwich = r.fourier_sandwich().unwrap();
            ensure(sandwich.equals(&dense).unwrap(), || format!("d={d} θ={th}: Fourier sandwich"))?;
            let spectrum = r.block_spectrum().unwrap();
            ensure(
                (0..d).all(|j| sandwich.entry_scaled(j, j).scaled_eq(&ScaledValue::new(spectrum[j].clone(), r.t())).unwrap()),
                || format!("d={d} θ={th}: block spectrum"),
            )?;
            ensure(r.is_unitary() && rd.is_unitary_dense(), || format!("d={d} θ={th}: unitarity paths"))?;
            checks += 3;
        }
    }
    Ok(format!("{checks} fast/dense agreements on d = 4, 8, 9"))
}

/// Checks that every failure in `r` points at basis `k`, column `c`.
fn witness_is_correct(r: &MubReport, k: usize, c: usize) -> bool {
    let unitary_ok = r.non_unitary.len() == 1
        && r.non_unitary[0].basis == k
        && (r.non_unitary[0].row == c || r.non_unitary[0].col == c);
    let failing: Vec<_> = r.pairs.iter().filter(|p| !p.pass).collect();
    let pairs_ok = !failing.is_empty()
        && failing.iter().all(|p| match &p.witness {
            Some(w) => (p.a == k && w.row == c) || (p.b == k && w.col == c),
            None => false,
        });
    unitary_ok && pairs_ok
}

fn criterion_8() -> Outcome {
    let s = gf(3, 2);
    let d = s.d();
    let set = build_mub_set(&s).unwrap();
    let doc: Value = serde_json::from_str(&to_json(&set).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(MUTATION_SEED);
    // basis 1 is R_0 = I, whose zero entries make a sign flip a no-op
    let targets: Vec<usize> = (0..=d).filter(|&k| k != 1).collect();
    for i in 0..MUTATIONS {
        let k = targets[rng.random_range(0..targets.len())];
        let (row, col) = (rng.random_range(0..d), rng.random_range(0..d));
        let mut bad = doc.clone();
        for c in bad["bases"][k]["entries"][row][col]["coeffs"].as_array_mut().unwrap() {
            *c = Value::from(-c.as_i64().unwrap());
        }
        let mutated = read_mub_set(&bad.to_string()).map_err(|e| format!("mutation {i}: {e}"))?;
        let r = verify_mub_set(&mutated, Mode::Full, 0).unwrap();
        ensure(!r.pass, || format!("mutation {i} (basis {k}, entry ({row}, {col})) passed"))?;
        ensure(witness_is_correct(&r, k, col), || format!("mutation {i}: wrong witness"))?;
    }
    Ok(format!("{MUTATIONS}/{MUTATIONS} sign flips at d = 9 rejected with correct witnesses"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("MUB count and pairwise unbiasedness", criterion_1),
        ("Weil sum magnitudes", criterion_2),
        ("group law R_θ R_θ' = R_{θ+θ'}", criterion_3),
        ("modified group law, p = 2", criterion_4),
        ("block-circulant Hadamard R_θ, diagonalized by F", criterion_5),
        ("commuting class partition", criterion_6),
        ("structured paths agree with dense oracles", criterion_7),
        ("mutation sensitivity", criterion_8),
    ];
    println!(
        "acceptance: tolerance {EXACT_TOLERANCE} (exact), budgets {}s full / {}s structural",
        FULL_BUDGET.as_secs(),
        STRUCTURAL_BUDGET.as_secs()
    );
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {} PASS {name}: {detail} [{took:.1?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {why} [{took:.1?}]", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

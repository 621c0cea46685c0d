use mubcirc_core::cyclotomic::{char_value, CycInt, ScaledValue};
use mubcirc_core::operators::{build_f, build_x_theta, Rotations};
use mubcirc_core::weil::{weil_sum, WeilQuery};
use mubcirc_core::{find_irreducible, ExactMatrix, FieldSpec};
use proptest::prelude::*;

const ODD: [(u32, u32); 4] = [(3, 2), (5, 2), (7, 1), (3, 3)];
const ALL: [(u32, u32); 6] = [(2, 2), (2, 3), (3, 2), (5, 1), (2, 4), (3, 3)];

fn gf((p, n): (u32, u32)) -> FieldSpec {
    find_irreducible(p, n).unwrap()
}

/// `Σ_ψ λ_ψ X_ψ` with `λ_ψ = q^{−1/2} χ(2⁻¹θ⁻¹ψ²)` from field arithmetic and
/// dense sums, independent of the index tables.
fn brute_unphased(s: &FieldSpec, theta: usize) -> ExactMatrix {
    let th = s.element_at(theta).unwrap();
    let c = s.inv(&s.mul(&s.from_residue(2), &th).unwrap()).unwrap();
    let mut acc = ExactMatrix::zeros(s.p(), s.d()).unwrap();
    for psi in s.elements() {
        let lam = char_value(s, &s.mul(&c, &s.mul(&psi, &psi).unwrap()).unwrap()).unwrap();
        let x = build_x_theta(s, &psi).unwrap().into_dense();
        acc = acc.add(&x.scalar_mul(&ScaledValue::new(lam, 0)).unwrap()).unwrap();
    }
    acc.scalar_mul(&ScaledValue::new(CycInt::one(acc.m()).unwrap(), s.n())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn group_law(f in 0usize..ODD.len(), a in 0usize..1000, b in 0usize..1000) {
        let s = gf(ODD[f]);
        let rot = Rotations::new(&s).unwrap();
        let (a, b) = (a % s.d(), b % s.d());
        let sum = s.index_of(&s.add(&s.element_at(a).unwrap(), &s.element_at(b).unwrap()).unwrap()).unwrap();
        let lhs = rot.r(a).unwrap().mul_dense(&rot.r(b).unwrap()).unwrap();
        prop_assert!(lhs.equals(&rot.r(sum).unwrap()).unwrap());
    }

    #[test]
    fn unphased_matches_closed_form(f in 0usize..ODD.len(), th in 1usize..1000) {
        let s = gf(ODD[f]);
        let th = 1 + th % (s.d() - 1);
        let rot = Rotations::new(&s).unwrap();
        prop_assert!(rot.r_unphased(th).unwrap().equals(&brute_unphased(&s, th)).unwrap());
    }

    #[test]
    fn rotations_are_unitary_and_diagonalized(f in 0usize..ALL.len(), th in 0usize..1000) {
        let s = gf(ALL[f]);
        let th = th % s.d();
        let r = Rotations::new(&s).unwrap().r(th).unwrap();
        prop_assert!(r.is_unitary_dense());
        let fm = build_f(&s).unwrap();
        let dense = fm.mul_dense(&r).unwrap().mul_dense(&fm.adjoint()).unwrap();
        let fast = r.fourier_sandwich().unwrap();
        prop_assert!(dense.equals(&fast).unwrap());
        prop_assert!(fast.is_diagonal());
        for j in 0..s.d() {
            prop_assert!(fast.entry_scaled(j, j).is_unimodular());
        }
    }

    #[test]
    fn weil_magnitude_numerically(f in 0usize..ODD.len(), a in 1usize..1000, b in 0usize..1000) {
        let s = gf(ODD[f]);
        let a = 1 + a % (s.d() - 1);
        let b = b % s.d();
        let q = WeilQuery::new(&s, s.element_at(a).unwrap(), s.element_at(b).unwrap()).unwrap();
        let sum = weil_sum(&q).unwrap();
        let m = sum.m() as f64;
        let (re, im) = sum.coeffs().iter().enumerate().fold((0.0, 0.0), |(re, im), (k, &c)| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / m;
            (re + c as f64 * t.cos(), im + c as f64 * t.sin())
        });
        prop_assert!((re * re + im * im - s.d() as f64).abs() < 1e-9);
        prop_assert!(sum.norm_check(s.n()));
    }
}

#[test]
fn matrices_survive_json() {
    let s = gf((3, 2));
    let r = Rotations::new(&s).unwrap().r(4).unwrap();
    let back: ExactMatrix = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(back, r);
}

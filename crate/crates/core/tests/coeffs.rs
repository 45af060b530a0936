mod common;

use proptest::prelude::*;
use stratint::coeffs::{default_quad_points, fourier_coefficient, kernel_eval, kernel_norm_sq};
use stratint::{Basis, BasisKind, CoefficientTable, Interval, MultiIndex, WeightSpec};

// Entries [j1, j2] for ψ1 = e^s, ψ2 = cos s on [0, 1]; computed with the
// composite reference quadrature in common/ (400 cells) and frozen.
const FROZEN: [([usize; 2], f64, f64); 9] = [
    ([0, 0], 5.3655362873945511e-1, 5.3655362873945511e-1),
    ([0, 1], 2.9201290589329482e-1, -2.3739559554760759e-1),
    ([0, 2], -3.0612236881942038e-2, -2.9066349230477583e-2),
    ([1, 0], -2.4416191318379313e-1, 1.9078870426276920e-1),
    ([1, 1], 7.6574611833233483e-2, 6.3772247287575967e-2),
    ([1, 2], 1.7838933426924680e-1, -2.1991541511523544e-1),
    ([2, 0], -5.3054096368786711e-2, -5.1252184019334880e-2),
    ([2, 1], -1.6335589811174925e-1, 2.1096724893198771e-1),
    ([2, 2], 2.7008194209967633e-2, 2.8698652707150864e-2),
];

fn smooth_weights() -> Vec<WeightSpec> {
    vec![WeightSpec::tabulated("exp", f64::exp), WeightSpec::tabulated("cos", f64::cos)]
}

#[test]
fn frozen_reference_values() {
    let u = Interval::unit();
    let leg = CoefficientTable::compute(&Basis::legendre(u), &smooth_weights(), &[2, 2], Some(64)).unwrap();
    let trig = CoefficientTable::compute(&Basis::trigonometric(u), &smooth_weights(), &[2, 2], Some(64)).unwrap();
    for (j, l, t) in FROZEN {
        assert!((leg.get(&j).unwrap() - l).abs() < 1e-12, "legendre {j:?}");
        assert!((trig.get(&j).unwrap() - t).abs() < 1e-12, "trig {j:?}");
    }
}

#[test]
fn reference_quadrature_agrees_off_the_frozen_set() {
    // a few more entries on a shifted interval, recomputed live
    let iv = Interval::new(0.5, 2.0).unwrap();
    let w = smooth_weights();
    for kind in [BasisKind::Legendre, BasisKind::Trigonometric] {
        let b = Basis::new(kind, iv);
        let table = CoefficientTable::compute(&b, &w, &[6, 6], Some(64)).unwrap();
        for j in [[0, 5], [3, 3], [6, 1], [4, 6]] {
            let f1 = |s: f64| w[0].eval(s) * b.phi(j[0], s.clamp(iv.start, iv.end)).unwrap();
            let f2 = |s: f64| w[1].eval(s) * b.phi(j[1], s.clamp(iv.start, iv.end)).unwrap();
            let want = common::double(iv.start, iv.end, 200, &f1, &f2);
            assert!((table.get(&j).unwrap() - want).abs() < 1e-12, "{kind:?} {j:?}");
        }
    }
}

#[test]
fn kernel_examples() {
    let u = Interval::unit();
    let ones = [WeightSpec::one(), WeightSpec::one()];
    assert_eq!(kernel_eval(&u, &ones, &[0.2, 0.7]).unwrap(), 1.0);
    assert_eq!(kernel_eval(&u, &ones, &[0.7, 0.2]).unwrap(), 0.0);
    assert_eq!(kernel_eval(&u, &ones, &[0.4, 0.4]).unwrap(), 0.0);
    let lin = [WeightSpec::tabulated("s", |s| s), WeightSpec::one()];
    assert_eq!(kernel_eval(&u, &lin, &[0.5, 0.8]).unwrap(), 0.5);
    assert!(kernel_eval(&u, &ones, &[0.5, 1.5]).is_err());
}

#[test]
fn kernel_norm_scales_quadratically() {
    for (len, want) in [(1.0, 0.5), (2.0, 2.0), (0.25, 0.03125)] {
        let iv = Interval::new(3.0, 3.0 + len).unwrap();
        let v = kernel_norm_sq(&iv, &[WeightSpec::one(), WeightSpec::one()], 8).unwrap();
        assert!((v - want).abs() < 1e-14, "len {len}: {v}");
    }
}

fn weight(iv: &Interval, code: u8) -> WeightSpec {
    match code {
        0 => WeightSpec::one(),
        1 => WeightSpec::Constant(-2.5),
        c => WeightSpec::monomial(iv, (c - 1) as u32),
    }
}

fn interval() -> impl Strategy<Value = Interval> {
    (-3.0f64..3.0, 0.1f64..3.0).prop_map(|(t, len)| Interval::new(t, t + len).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn symmetry_identity(iv in interval(), code in 0u8..5, trig in any::<bool>()) {
        let kind = if trig { BasisKind::Trigonometric } else { BasisKind::Legendre };
        let b = Basis::new(kind, iv);
        let w = weight(&iv, code);
        let p = 30;
        let table = CoefficientTable::compute(&b, &[w.clone(), w.clone()], &[p, p], None).unwrap();
        let single = CoefficientTable::compute(&b, &[w], &[p], None).unwrap();
        let scale = table.values().iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
        for j1 in 0..=p {
            for j2 in 0..=p {
                let lhs = table.get(&[j1, j2]).unwrap() + table.get(&[j2, j1]).unwrap();
                let rhs = single.get(&[j1]).unwrap() * single.get(&[j2]).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-10 * scale.max(1.0), "({j1},{j2}): {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn unit_weights_scale_with_interval_length(iv in interval(), trig in any::<bool>()) {
        let kind = if trig { BasisKind::Trigonometric } else { BasisKind::Legendre };
        let ones = [WeightSpec::one(), WeightSpec::one()];
        let here = CoefficientTable::compute(&Basis::new(kind, iv), &ones, &[8, 8], None).unwrap();
        let unit = CoefficientTable::compute(&Basis::new(kind, Interval::unit()), &ones, &[8, 8], None).unwrap();
        let len = iv.length();
        for (a, b) in here.values().iter().zip(unit.values()) {
            prop_assert!((a - len * b).abs() < 1e-13 * len.max(1.0));
        }
    }

    #[test]
    fn parseval_partial_sums_increase_to_the_kernel_norm(iv in interval(), c1 in 0u8..5, c2 in 0u8..5) {
        let w = [weight(&iv, c1), weight(&iv, c2)];
        let b = Basis::legendre(iv);
        let full = CoefficientTable::compute(&b, &w, &[24, 24], None).unwrap();
        let norm = kernel_norm_sq(&iv, &w, 32).unwrap();
        let mut last = 0.0;
        for p in 0..=24 {
            let s = full.truncated(&[p, p]).unwrap().sum_squares();
            prop_assert!(s >= last - 1e-14 * norm, "p={p}");
            prop_assert!(s <= norm * (1.0 + 1e-12), "p={p}: {s} > {norm}");
            last = s;
        }
    }

    #[test]
    fn polynomial_cases_are_exact(iv in interval(), c1 in 0u8..5, c2 in 0u8..5, p in 0usize..20) {
        let w = [weight(&iv, c1), weight(&iv, c2)];
        let b = Basis::legendre(iv);
        let n = default_quad_points(&[p, p], &w);
        let base = CoefficientTable::compute(&b, &w, &[p, p], Some(n)).unwrap();
        let fine = CoefficientTable::compute(&b, &w, &[p, p], Some(2 * n)).unwrap();
        let scale = base.values().iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for (x, y) in base.values().iter().zip(fine.values()) {
            prop_assert!((x - y).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn single_coefficients_match_table(j1 in 0usize..6, j2 in 0usize..6, j3 in 0usize..6) {
        let u = Interval::unit();
        let b = Basis::legendre(u);
        let w = vec![WeightSpec::monomial(&u, 1), WeightSpec::one(), WeightSpec::monomial(&u, 2)];
        let table = CoefficientTable::compute(&b, &w, &[5, 5, 5], Some(24)).unwrap();
        let idx = MultiIndex::new(vec![j1, j2, j3]).unwrap();
        prop_assert_eq!(fourier_coefficient(&b, &w, &idx, 24).unwrap(), table.get(&[j1, j2, j3]).unwrap());
    }
}

#[test]
fn triple_constant_leading_coefficient() {
    // ∫∫∫ over the simplex, normalised by φ_0³
    for len in [1.0, 2.0, 0.5] {
        let iv = Interval::new(-1.0, -1.0 + len).unwrap();
        let w = vec![WeightSpec::one(); 3];
        let c = fourier_coefficient(&Basis::legendre(iv), &w, &MultiIndex::new(vec![0, 0, 0]).unwrap(), 8).unwrap();
        assert!((c - len.powf(1.5) / 6.0).abs() < 1e-14);
    }
}

#[test]
fn size_limit_is_enforced() {
    let u = Interval::unit();
    let w = vec![WeightSpec::one(); 4];
    assert!(CoefficientTable::compute(&Basis::legendre(u), &w, &[60, 60, 60, 60], None).is_err());
    assert!(MultiIndex::new(vec![0; 5]).is_err());
}

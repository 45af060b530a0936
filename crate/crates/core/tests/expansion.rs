use proptest::prelude::*;
use stratint::coeffs::{half_product_integral, kernel_norm_sq};
use stratint::expansion::{ito_truncated, mse_k2_exact, strat_truncated_k2};
use stratint::{Basis, BasisKind, CoefficientTable, GaussianPool, Interval, NoiseSelector, WeightSpec};

fn sel(v: &[usize]) -> NoiseSelector {
    NoiseSelector::new(v.to_vec()).unwrap()
}

#[test]
fn pool_entries_are_standard_normal() {
    let (mut n, mut sum, mut sq) = (0usize, 0.0, 0.0);
    for seed in 0..1000u64 {
        let pool = GaussianPool::sample(seed, 4, 249).unwrap();
        for &z in pool.entries() {
            n += 1;
            sum += z;
            sq += z * z;
        }
    }
    assert_eq!(n, 1_000_000);
    let mean = sum / n as f64;
    let var = sq / n as f64 - mean * mean;
    assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
    assert!((var - 1.0).abs() < 0.01, "variance {var}");
}

proptest! {
    #[test]
    fn pool_entries_are_addressable(seed in any::<u64>(), m in 1usize..4, p in 0usize..40, extra in 1usize..20) {
        let small = GaussianPool::sample(seed, m, p).unwrap();
        let big = GaussianPool::sample(seed, m + 1, p + extra).unwrap();
        for i in 1..=m {
            prop_assert_eq!(small.row(i), &big.row(i)[..=p]);
        }
        prop_assert_eq!(small, GaussianPool::sample(seed, m, p).unwrap());
    }
}

fn weights(code: u8, iv: &Interval) -> [WeightSpec; 2] {
    match code {
        0 => [WeightSpec::one(), WeightSpec::one()],
        1 => [WeightSpec::monomial(iv, 1), WeightSpec::one()],
        2 => [WeightSpec::one(), WeightSpec::monomial(iv, 2)],
        _ => [WeightSpec::tabulated("exp", f64::exp), WeightSpec::tabulated("cos", f64::cos)],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bridge_is_the_trace_sum(seed in any::<u64>(), code in 0u8..4, p1 in 0usize..12, p2 in 0usize..12, trig in any::<bool>()) {
        let iv = Interval::new(0.25, 1.75).unwrap();
        let kind = if trig { BasisKind::Trigonometric } else { BasisKind::Legendre };
        let table = CoefficientTable::compute(&Basis::new(kind, iv), &weights(code, &iv), &[p1, p2], Some(48)).unwrap();
        let pool = GaussianPool::sample(seed, 2, 12).unwrap();
        let s = sel(&[2, 2]);
        let diff = strat_truncated_k2(&table, &pool, &s).unwrap().value - ito_truncated(&table, &pool, &s).unwrap().value;
        let trace = table.trace_sum(p1.min(p2)).unwrap();
        prop_assert!((diff - trace).abs() < 1e-12, "{diff} vs {trace}");
        // distinct components: no correction
        let s = sel(&[1, 2]);
        prop_assert_eq!(
            strat_truncated_k2(&table, &pool, &s).unwrap().value,
            ito_truncated(&table, &pool, &s).unwrap().value
        );
    }

    #[test]
    fn swapped_pair_multiplies_out(seed in any::<u64>(), code in 0u8..4, i1 in 1usize..3, i2 in 1usize..3) {
        // J*[ψ1 ψ2]^(i1 i2) + J*[ψ2 ψ1]^(i2 i1) = J[ψ1]^(i1) J[ψ2]^(i2), term by term
        let iv = Interval::unit();
        let b = Basis::legendre(iv);
        let [w1, w2] = weights(code, &iv);
        let p = 15;
        let fwd = CoefficientTable::compute(&b, &[w1.clone(), w2.clone()], &[p, p], Some(48)).unwrap();
        let rev = CoefficientTable::compute(&b, &[w2.clone(), w1.clone()], &[p, p], Some(48)).unwrap();
        let c1 = CoefficientTable::compute(&b, &[w1], &[p], Some(48)).unwrap();
        let c2 = CoefficientTable::compute(&b, &[w2], &[p], Some(48)).unwrap();
        let pool = GaussianPool::sample(seed, 2, p).unwrap();
        let lhs = strat_truncated_k2(&fwd, &pool, &sel(&[i1, i2])).unwrap().value
            + strat_truncated_k2(&rev, &pool, &sel(&[i2, i1])).unwrap().value;
        let rhs = ito_truncated(&c1, &pool, &sel(&[i1])).unwrap().value
            * ito_truncated(&c2, &pool, &sel(&[i2])).unwrap().value;
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }
}

#[test]
fn distinct_components_mean_and_second_moment() {
    let iv = Interval::unit();
    let w = weights(3, &iv);
    let table = CoefficientTable::compute(&Basis::legendre(iv), &w, &[8, 8], Some(48)).unwrap();
    let s = sel(&[1, 2]);
    let n = 100_000;
    let (mut sum, mut sq, mut quad) = (0.0, 0.0, 0.0);
    for seed in 0..n as u64 {
        let pool = GaussianPool::sample(seed, 2, 8).unwrap();
        let v = strat_truncated_k2(&table, &pool, &s).unwrap().value;
        sum += v;
        sq += v * v;
        quad += v * v * v * v;
    }
    let n = n as f64;
    let mean = sum / n;
    let m2 = sq / n;
    let sd = (m2 - mean * mean).sqrt();
    assert!(mean.abs() < 4.0 * sd / n.sqrt(), "mean {mean}");
    let se2 = ((quad / n - m2 * m2) / n).sqrt();
    let want = table.sum_squares();
    assert!((m2 - want).abs() < 3.0 * se2, "E[J²] {m2} vs {want} (se {se2})");
}

#[test]
fn truncation_error_scales_with_length_squared() {
    let iv = Interval::new(0.0, 2.0).unwrap();
    let ones = [WeightSpec::one(), WeightSpec::one()];
    let table = CoefficientTable::compute(&Basis::legendre(iv), &ones, &[1, 1], None).unwrap();
    let norm = kernel_norm_sq(&iv, &ones, 8).unwrap();
    let mse = mse_k2_exact(&table, norm, &sel(&[1, 2])).unwrap();
    assert!((mse - 1.0 / 3.0).abs() < 1e-14, "{mse}");
    assert!(mse_k2_exact(&table, norm, &sel(&[1, 1])).is_err());
}

#[test]
fn trace_limit_for_smooth_weights() {
    // with ψ1 ≠ ψ2 the trace approaches ½∫ψ1ψ2 only at rate 1/p
    let iv = Interval::unit();
    let w = weights(3, &iv);
    let table = CoefficientTable::compute(&Basis::legendre(iv), &w, &[60, 60], Some(96)).unwrap();
    let target = half_product_integral(&iv, &w[0], &w[1], 64).unwrap();
    let err = |p: usize| (table.trace_sum(p).unwrap() - target).abs();
    let scaled: Vec<f64> = [10, 20, 40, 60].iter().map(|&p| p as f64 * err(p)).collect();
    assert!(err(60) < err(40) && err(40) < err(20) && err(20) < err(10));
    assert!(scaled.windows(2).all(|v| (v[1] / v[0] - 1.0).abs() < 0.1), "p·err {scaled:?}");

    // ψ1 = s, ψ2 = 1: deviation at p = 50, checked against an independent numpy evaluation
    let w = [WeightSpec::tabulated("s", |s| s), WeightSpec::one()];
    let table = CoefficientTable::compute(&Basis::legendre(iv), &w, &[50, 50], Some(80)).unwrap();
    let dev = table.trace_sum(50).unwrap() - 0.25;
    assert!((dev - -1.2256079977e-3).abs() < 1e-11, "{dev:e}");

    // equal weights converge far faster
    let w = [WeightSpec::tabulated("s", |s| s), WeightSpec::tabulated("s", |s| s)];
    let table = CoefficientTable::compute(&Basis::legendre(iv), &w, &[50, 50], Some(80)).unwrap();
    assert!((table.trace_sum(50).unwrap() - 1.0 / 6.0).abs() < 1e-12);
}

#[test]
fn time_component_gives_riemann_integral() {
    for (a, b) in [(0.0, 1.0), (2.0, 5.5)] {
        let iv = Interval::new(a, b).unwrap();
        let table = CoefficientTable::compute(&Basis::legendre(iv), &[WeightSpec::one()], &[4], None).unwrap();
        let pool = GaussianPool::sample(1, 1, 4).unwrap();
        let v = ito_truncated(&table, &pool, &sel(&[0])).unwrap().value;
        assert!((v - (b - a)).abs() < 1e-13);
    }
}

#[test]
fn selector_and_pool_errors() {
    assert!(NoiseSelector::new(vec![]).is_err());
    assert!(GaussianPool::sample(0, 0, 3).is_err());
    let iv = Interval::unit();
    let ones = [WeightSpec::one(), WeightSpec::one()];
    let table = CoefficientTable::compute(&Basis::legendre(iv), &ones, &[6, 6], None).unwrap();
    let small = GaussianPool::sample(0, 2, 3).unwrap();
    assert!(strat_truncated_k2(&table, &small, &sel(&[1, 2])).is_err());
    let pool = GaussianPool::sample(0, 2, 6).unwrap();
    assert!(strat_truncated_k2(&table, &pool, &sel(&[1, 3])).is_err());
    assert!(strat_truncated_k2(&table, &pool, &sel(&[0, 1])).is_err());
    assert!(ito_truncated(&table, &pool, &sel(&[1])).is_err());
}

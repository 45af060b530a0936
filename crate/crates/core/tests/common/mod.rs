//! Reference implementations that share no code with the library.
#![allow(dead_code)]

use std::f64::consts::PI;

/// `P_n(x) = Σ_k C(n,k)² ((x-1)/2)^{n-k} ((x+1)/2)^k`.
pub fn legendre_explicit(n: usize, x: f64) -> f64 {
    let (a, b) = ((x - 1.0) / 2.0, (x + 1.0) / 2.0);
    let mut binom = 1.0;
    let mut s = 0.0;
    for k in 0..=n {
        s += binom * binom * a.powi((n - k) as i32) * b.powi(k as i32);
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    s
}

/// Sum of absolute terms of the explicit formula; bounds its rounding error.
pub fn legendre_explicit_abs(n: usize, x: f64) -> f64 {
    let (a, b) = (((x - 1.0) / 2.0).abs(), ((x + 1.0) / 2.0).abs());
    let mut binom = 1.0;
    let mut s = 0.0;
    for k in 0..=n {
        s += binom * binom * a.powi((n - k) as i32) * b.powi(k as i32);
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    s
}

pub fn phi_legendre(j: usize, t: f64, end: f64, s: f64) -> f64 {
    let x = (2.0 * s - t - end) / (end - t);
    ((2 * j + 1) as f64 / (end - t)).sqrt() * legendre_explicit(j, x)
}

pub fn phi_trig(j: usize, t: f64, end: f64, s: f64) -> f64 {
    let len = end - t;
    if j == 0 {
        return 1.0 / len.sqrt();
    }
    let r = j.div_ceil(2) as f64;
    let arg = 2.0 * PI * r * (s - t) / len;
    (2.0 / len).sqrt() * if j % 2 == 1 { arg.sin() } else { arg.cos() }
}

// 5-point Gauss nodes/weights on [-1, 1], hard-coded
const G5_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const G5_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

fn gauss5(a: f64, b: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    G5_X.iter().zip(G5_W).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// `∫_t^T f(s) ds` on `cells` uniform cells.
pub fn single(t: f64, end: f64, cells: usize, f: &dyn Fn(f64) -> f64) -> f64 {
    let h = (end - t) / cells as f64;
    (0..cells).map(|c| gauss5(t + c as f64 * h, t + (c + 1) as f64 * h, f)).sum()
}

/// `∫_t^T f2(s2) ∫_t^{s2} f1(s1) ds1 ds2` on `cells` uniform cells.
pub fn double(t: f64, end: f64, cells: usize, f1: &dyn Fn(f64) -> f64, f2: &dyn Fn(f64) -> f64) -> f64 {
    let h = (end - t) / cells as f64;
    let mut before = 0.0;
    let mut total = 0.0;
    for c in 0..cells {
        let a = t + c as f64 * h;
        let b = a + h;
        total += gauss5(a, b, &|s2| f2(s2) * (before + gauss5(a, s2, f1)));
        before += gauss5(a, b, f1);
    }
    total
}

//! Legendre polynomials, orthonormal bases on `[t, T]` and Gauss–Legendre
//! quadrature.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const X_TOL: f64 = 1e-12;

/// Time interval `[t, T]` with `T > t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "interval endpoints must be finite, got [{start}, {end}]"
            )));
        }
        if end <= start {
            return Err(Error::InvalidArgument(format!(
                "interval end must exceed start, got [{start}, {end}]"
            )));
        }
        Ok(Self { start, end })
    }

    /// `[0, 1]`.
    pub fn unit() -> Self {
        Self { start: 0.0, end: 1.0 }
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub(crate) fn check_contains(&self, s: f64) -> Result<()> {
        let slack = X_TOL * self.length();
        if s.is_nan() || s < self.start - slack || s > self.end + slack {
            return Err(Error::Domain(format!(
                "time {s} outside [{}, {}]",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Legendre,
    Trigonometric,
}

/// A complete orthonormal system `{φ_j}` on an interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub kind: BasisKind,
    pub interval: Interval,
}

impl Basis {
    pub fn new(kind: BasisKind, interval: Interval) -> Self {
        Self { kind, interval }
    }

    pub fn legendre(interval: Interval) -> Self {
        Self::new(BasisKind::Legendre, interval)
    }

    pub fn trigonometric(interval: Interval) -> Self {
        Self::new(BasisKind::Trigonometric, interval)
    }

    /// `φ_j(s)`, checked.
    pub fn phi(&self, j: usize, s: f64) -> Result<f64> {
        self.interval.check_contains(s)?;
        let mut buf = vec![0.0; j + 1];
        self.phi_upto(s, &mut buf);
        Ok(buf[j])
    }

    /// Fills `out[j] = φ_j(s)` for `j < out.len()`. No domain check.
    ///
    /// Legendre kind: `φ_j(s) = sqrt((2j+1)/(T-t)) P_j(2(s - (T+t)/2)/(T-t))`.
    /// Trigonometric kind: `φ_0 = 1/sqrt(T-t)`, odd indices carry
    /// `sin(2πr(s-t)/(T-t))` and even indices `cos(...)`, `r = ceil(j/2)`,
    /// both scaled by `sqrt(2/(T-t))`.
    pub fn phi_upto(&self, s: f64, out: &mut [f64]) {
        if out.is_empty() {
            return;
        }
        let len = self.interval.length();
        match self.kind {
            BasisKind::Legendre => {
                let x = ((s - 0.5 * (self.interval.start + self.interval.end)) * 2.0 / len)
                    .clamp(-1.0, 1.0);
                legendre_fill(x, out);
                for (j, v) in out.iter_mut().enumerate() {
                    *v *= ((2 * j + 1) as f64 / len).sqrt();
                }
            }
            BasisKind::Trigonometric => {
                out[0] = 1.0 / len.sqrt();
                let amp = (2.0 / len).sqrt();
                let theta = 2.0 * PI * (s - self.interval.start) / len;
                for j in 1..out.len() {
                    let r = j.div_ceil(2) as f64;
                    out[j] = if j % 2 == 1 {
                        amp * (r * theta).sin()
                    } else {
                        amp * (r * theta).cos()
                    };
                }
            }
        }
    }

    /// `∫_t^T φ_j(s) ds`: `sqrt(T-t)` for `j = 0` and zero otherwise, for
    /// both kinds.
    pub fn integral(&self, j: usize) -> f64 {
        if j == 0 {
            self.interval.length().sqrt()
        } else {
            0.0
        }
    }

    /// Composite panel count for an `n`-point rule over the whole interval.
    /// Trigonometric integrands up to index `n - 16` oscillate at most
    /// `n / 2` times, so `n / 8` panels keep each panel under four periods.
    pub(crate) fn panels_for(&self, quad_points: usize) -> usize {
        match self.kind {
            BasisKind::Legendre => 1,
            BasisKind::Trigonometric => (quad_points / 8).max(1),
        }
    }
}

fn check_x(x: f64) -> Result<()> {
    if x.is_nan() || x.abs() > 1.0 + X_TOL {
        return Err(Error::Domain(format!("Legendre argument {x} outside [-1, 1]")));
    }
    Ok(())
}

/// `out[j] = P_j(x)` by the three-term recurrence.
fn legendre_fill(x: f64, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = 1.0;
    if n == 1 {
        return;
    }
    out[1] = x;
    for j in 1..n - 1 {
        let jf = j as f64;
        out[j + 1] = ((2.0 * jf + 1.0) * x * out[j] - jf * out[j - 1]) / (jf + 1.0);
    }
}

/// `(P_{j-1}(x), P_j(x))` with `P_{-1} = 0`.
fn legendre_two(j: usize, x: f64) -> (f64, f64) {
    let (mut prev, mut cur) = (0.0, 1.0);
    for i in 0..j {
        let fi = i as f64;
        let next = ((2.0 * fi + 1.0) * x * cur - fi * prev) / (fi + 1.0);
        prev = cur;
        cur = next;
    }
    (prev, cur)
}

/// Legendre polynomial `P_j(x)`.
pub fn legendre_eval(j: usize, x: f64) -> Result<f64> {
    check_x(x)?;
    Ok(legendre_two(j, x).1)
}

/// `(P_j(x), P_{j+1}(x))` from one recurrence pass.
pub fn legendre_pair(j: usize, x: f64) -> Result<(f64, f64)> {
    check_x(x)?;
    let (a, b) = legendre_two(j + 1, x);
    Ok((a, b))
}

/// `P'_j(x)`. Interior points use `j (P_{j-1} - x P_j) / (1 - x²)`; the
/// endpoints use `P'_j(±1) = (±1)^{j+1} j(j+1)/2`.
pub fn legendre_derivative(j: usize, x: f64) -> Result<f64> {
    check_x(x)?;
    if j == 0 {
        return Ok(0.0);
    }
    let edge = (j * (j + 1)) as f64 / 2.0;
    if x >= 1.0 {
        return Ok(edge);
    }
    if x <= -1.0 {
        return Ok(if j % 2 == 1 { edge } else { -edge });
    }
    let (pm1, p) = legendre_two(j, x);
    Ok(j as f64 * (pm1 - x * p) / (1.0 - x * x))
}

/// Nodes and weights of a Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `∫_a^b f`.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Composite rule over `panels` equal sub-intervals of `[a, b]`.
    pub fn integrate_panels(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: impl FnMut(f64) -> f64,
    ) -> f64 {
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * width;
                self.integrate(lo, lo + width, &mut f)
            })
            .sum()
    }

    /// Mapped `(node, weight)` pairs of the composite rule on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64, panels: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let panels = panels.max(1);
        let width = (b - a) / panels as f64;
        let half = 0.5 * width;
        (0..panels).flat_map(move |k| {
            let mid = a + (k as f64 + 0.5) * width;
            self.nodes
                .iter()
                .zip(&self.weights)
                .map(move |(x, w)| (mid + half * x, w * half))
        })
    }
}

/// `n`-point Gauss–Legendre rule, `1 <= n <= 512`.
///
/// Nodes come from Newton iteration on `P_n` seeded with
/// `cos(π(i - 1/4)/(n + 1/2))`; the rule is symmetrised by construction.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if !(1..=512).contains(&n) {
        return Err(Error::InvalidArgument(format!(
            "quadrature point count must be in 1..=512, got {n}"
        )));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (pm1, p) = legendre_two(n, x);
            dp = nf * (pm1 - x * p) / (1.0 - x * x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (pm1, p) = legendre_two(n, x);
                dp = nf * (pm1 - x * p) / (1.0 - x * x);
                break;
            }
        }
        if !x.is_finite() || !dp.is_finite() {
            return Err(Error::Numerical(format!("Newton iteration failed for n = {n}")));
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x_i descends from near +1
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

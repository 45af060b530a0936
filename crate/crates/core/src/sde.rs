//! Strong one-step schemes for Itô SDEs
//!
//! ```text
//! dx = a(x, τ) dτ + B(x, τ) dW,   x ∈ R^n,  W ∈ R^m
//! ```
//!
//! and a strong-order harness. Derivatives of `a` and `B` are taken by
//! central differences, so problems only supply function values.
//!
//! Integrals used per step of size `h` (all Itô):
//!
//! * `ΔW_j`;
//! * `I_(j1 j2)`: exact `(ΔW² - h)/2` on the diagonal, the truncated
//!   [`Tag::I00`] expansion otherwise;
//! * `I_(j 0) = h ΔW_j + I_(1)^{(j)}` and `I_(0 j) = -I_(1)^{(j)}`;
//! * `I_(j1 j2 j3)`: exact for `m = 1`, truncated Itô expansion otherwise.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{Basis, Interval};
use crate::catalog::{catalog_eval, IntegralId, Tag};
use crate::coeffs::{CoefficientTable, WeightSpec};
use crate::expansion::{ito_truncated, GaussianPool, NoiseSelector};
use crate::oracle::{path_seed, PhiTable, WienerPath};
use crate::report::{f17, fmt17, vec_f17};
use crate::rng::{derive_seed, domain};
use crate::{Error, Result};

/// `a(τ, x)` written into `out` (length `n`).
pub type DriftFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;
/// `B(τ, x)` written row-major into `out` (length `n·m`, entry `[r·m + j]`).
pub type DiffusionFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;
/// Exact `x(T)` given `W_T - W_t` per component.
pub type ExactFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct SdeProblem {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub interval: Interval,
    pub x0: Vec<f64>,
    pub drift: DriftFn,
    pub diffusion: DiffusionFn,
    pub exact: Option<ExactFn>,
}

impl std::fmt::Debug for SdeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SdeProblem")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("m", &self.m)
            .field("interval", &self.interval)
            .field("x0", &self.x0)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl SdeProblem {
    /// Scalar `dx = μx dτ + σx dW` with its closed-form solution.
    pub fn gbm(mu: f64, sigma: f64, x0: f64, interval: Interval) -> Self {
        let len = interval.length();
        Self {
            name: "gbm".into(),
            n: 1,
            m: 1,
            interval,
            x0: vec![x0],
            drift: Arc::new(move |_, x, out| out[0] = mu * x[0]),
            diffusion: Arc::new(move |_, x, out| out[0] = sigma * x[0]),
            exact: Some(Arc::new(move |w| vec![x0 * ((mu - 0.5 * sigma * sigma) * len + sigma * w[0]).exp()])),
        }
    }

    /// Linear `dx = A x dτ + Σ_j B_j x dW_j` with square matrices.
    pub fn bilinear(a: Vec<Vec<f64>>, b: Vec<Vec<Vec<f64>>>, x0: Vec<f64>, interval: Interval) -> Result<Self> {
        let n = x0.len();
        let square = |mat: &Vec<Vec<f64>>| mat.len() == n && mat.iter().all(|r| r.len() == n);
        if n == 0 || b.is_empty() || !square(&a) || !b.iter().all(square) {
            return Err(Error::DimensionMismatch("bilinear problem needs n×n matrices matching x0".into()));
        }
        let m = b.len();
        let drift: DriftFn = Arc::new(move |_, x, out| {
            for (o, row) in out.iter_mut().zip(&a) {
                *o = row.iter().zip(x).map(|(r, v)| r * v).sum();
            }
        });
        let diffusion: DiffusionFn = Arc::new(move |_, x, out| {
            for (j, bj) in b.iter().enumerate() {
                for (r, row) in bj.iter().enumerate() {
                    out[r * m + j] = row.iter().zip(x).map(|(c, v)| c * v).sum();
                }
            }
        });
        Ok(Self { name: "bilinear".into(), n, m, interval, x0, drift, diffusion, exact: None })
    }

    /// Two-component system with non-commuting noise matrices.
    pub fn bilinear_example(interval: Interval) -> Self {
        Self::bilinear(
            vec![vec![-0.5, 0.0], vec![0.0, -0.5]],
            vec![vec![vec![0.0, 1.0], vec![0.0, 0.0]], vec![vec![0.0, 0.0], vec![1.0, 0.0]]],
            vec![1.0, 1.0],
            interval,
        )
        .expect("valid example")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum Scheme {
    EulerMaruyama,
    Milstein,
    Taylor15,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::EulerMaruyama => "euler",
            Scheme::Milstein => "milstein",
            Scheme::Taylor15 => "taylor15",
        }
    }

    fn needs_series(self, m: usize) -> bool {
        m > 1 && self != Scheme::EulerMaruyama
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euler" | "euler-maruyama" | "eulermaruyama" | "em" => Ok(Scheme::EulerMaruyama),
            "milstein" => Ok(Scheme::Milstein),
            "taylor15" | "taylor1.5" => Ok(Scheme::Taylor15),
            _ => Err(Error::InvalidArgument(format!("unknown scheme '{s}'"))),
        }
    }
}

/// Where per-step randomness comes from.
#[derive(Debug, Clone, Copy)]
pub enum NoiseSource<'a> {
    /// Increments summed from a fine path; `ζ_j` extracted from the fine
    /// increments inside each step.
    Path(&'a WienerPath),
    /// Fresh pool per step keyed by `(seed, path, step)`; `ΔW = sqrt(h) ζ_0`.
    Keyed { seed: u64, path: u64 },
}

/// Per-step integrals.
struct StepNoise {
    dw: Vec<f64>,
    pool: GaussianPool,
}

struct Stepper<'a> {
    problem: &'a SdeProblem,
    scheme: Scheme,
    h: f64,
    n_steps: usize,
    q: usize,
    p_pool: usize,
    noise: NoiseSource<'a>,
    phi: Option<PhiTable>,
    fine_per_step: usize,
    step_interval: Interval,
    triple: Option<CoefficientTable>,
}

const FD_FIRST: f64 = 1e-6;
const FD_SECOND: f64 = 1e-4;

fn scale(x: &[f64]) -> f64 {
    1.0 + x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn axpy(x: &[f64], c: f64, v: &[f64]) -> Vec<f64> {
    x.iter().zip(v).map(|(a, b)| a + c * b).collect()
}

/// `D f(x)[v]` by central differences.
fn directional(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], v: &[f64], rel: f64) -> Vec<f64> {
    let nv = norm_inf(v);
    if nv == 0.0 {
        return vec![0.0; f(x).len()];
    }
    let eps = rel * scale(x) / nv;
    let (fp, fm) = (f(&axpy(x, eps, v)), f(&axpy(x, -eps, v)));
    fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * eps)).collect()
}

/// `D² f(x)[v, v]` by central differences.
fn second_directional(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], v: &[f64]) -> Vec<f64> {
    let nv = norm_inf(v);
    let f0 = f(x);
    if nv == 0.0 {
        return vec![0.0; f0.len()];
    }
    let eps = FD_SECOND * scale(x) / nv;
    let (fp, fm) = (f(&axpy(x, eps, v)), f(&axpy(x, -eps, v)));
    fp.iter().zip(&fm).zip(&f0).map(|((a, b), c)| (a - 2.0 * c + b) / (eps * eps)).collect()
}

impl<'a> Stepper<'a> {
    fn new(problem: &'a SdeProblem, scheme: Scheme, h: f64, noise: NoiseSource<'a>, q: Option<usize>) -> Result<Self> {
        let len = problem.interval.length();
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidArgument(format!("step size {h} must be positive")));
        }
        let n_steps = (len / h).round() as usize;
        if n_steps == 0 || ((n_steps as f64) * h - len).abs() > 1e-9 * len {
            return Err(Error::InvalidArgument(format!("h = {h} does not divide T - t = {len}")));
        }
        if problem.x0.len() != problem.n {
            return Err(Error::DimensionMismatch("x0 length differs from n".into()));
        }
        let m = problem.m;
        let q = match (q, scheme.needs_series(m)) {
            (Some(q), _) => q,
            (None, false) => 0,
            (None, true) => {
                return Err(Error::InvalidArgument(format!(
                    "{} with m = {m} needs a truncation order q",
                    scheme.name()
                )))
            }
        };
        // ζ indices the scheme reads
        let p_pool = match scheme {
            Scheme::EulerMaruyama => 0,
            Scheme::Milstein if m == 1 => 0,
            Scheme::Milstein => Tag::I00.max_index(q),
            Scheme::Taylor15 if m == 1 => Tag::I1.max_index(q),
            Scheme::Taylor15 => Tag::I00.max_index(q).max(Tag::I1.max_index(q)),
        };
        let step_interval = Interval::new(0.0, h)?;
        let triple = if scheme == Scheme::Taylor15 && m > 1 {
            Some(CoefficientTable::compute(
                &Basis::legendre(step_interval),
                &[WeightSpec::one(), WeightSpec::one(), WeightSpec::one()],
                &[q, q, q],
                None,
            )?)
        } else {
            None
        };
        let p_pool = if triple.is_some() { p_pool.max(q) } else { p_pool };
        let (phi, fine_per_step) = match noise {
            NoiseSource::Path(path) => {
                if path.interval() != problem.interval {
                    return Err(Error::DimensionMismatch("path interval differs from the problem".into()));
                }
                if path.m() < m {
                    return Err(Error::DimensionMismatch(format!("path has {} components, need {m}", path.m())));
                }
                if path.n_steps() % n_steps != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "{n_steps} steps do not nest in a {}-step path",
                        path.n_steps()
                    )));
                }
                let r = path.n_steps() / n_steps;
                let phi = (p_pool > 0).then(|| PhiTable::new(&Basis::legendre(step_interval), r, p_pool));
                (phi, r)
            }
            NoiseSource::Keyed { .. } => (None, 0),
        };
        Ok(Self { problem, scheme, h, n_steps, q, p_pool, noise, phi, fine_per_step, step_interval, triple })
    }

    fn step_noise(&self, step: usize) -> Result<StepNoise> {
        let m = self.problem.m;
        match self.noise {
            NoiseSource::Path(path) => {
                let r = self.fine_per_step;
                let segs: Vec<&[f64]> = (1..=m).map(|i| &path.increments(i)[step * r..(step + 1) * r]).collect();
                let dw = segs.iter().map(|s| s.iter().sum()).collect();
                let pool = match &self.phi {
                    Some(phi) => phi.pool_from_increments(&segs)?,
                    None => {
                        let z0 = segs.iter().map(|s| vec![s.iter().sum::<f64>() / self.h.sqrt()]).collect();
                        GaussianPool::from_rows(z0)?
                    }
                };
                Ok(StepNoise { dw, pool })
            }
            NoiseSource::Keyed { seed, path } => {
                let key = derive_seed(derive_seed(seed, domain::PATH, path), domain::STEP, step as u64);
                let pool = GaussianPool::sample(key, m, self.p_pool)?;
                let dw = (1..=m).map(|i| self.h.sqrt() * pool.zeta(i, 0)).collect();
                Ok(StepNoise { dw, pool })
            }
        }
    }

    fn drift(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.problem.n];
        (self.problem.drift)(t, x, &mut out);
        out
    }

    fn diffusion(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.problem.n * self.problem.m];
        (self.problem.diffusion)(t, x, &mut out);
        out
    }

    fn column(&self, t: f64, x: &[f64], j: usize) -> Vec<f64> {
        let b = self.diffusion(t, x);
        let m = self.problem.m;
        (0..self.problem.n).map(|r| b[r * m + j]).collect()
    }

    /// `I_(j1 j2)`, Itô.
    fn double(&self, nz: &StepNoise, j1: usize, j2: usize) -> Result<f64> {
        if j1 == j2 {
            return Ok(0.5 * (nz.dw[j1] * nz.dw[j1] - self.h));
        }
        let id = IntegralId::new(Tag::I00, vec![j1 + 1, j2 + 1])?;
        catalog_eval(&id, &self.step_interval, &nz.pool, self.q)
    }

    /// `I_(1)^{(j)} = ∫ (τ_n - s) dW_s^{(j)}` over the step.
    fn weighted(&self, nz: &StepNoise, j: usize) -> Result<f64> {
        let id = IntegralId::new(Tag::I1, vec![j + 1])?;
        catalog_eval(&id, &self.step_interval, &nz.pool, self.q)
    }

    fn triple(&self, nz: &StepNoise, j: [usize; 3]) -> Result<f64> {
        match &self.triple {
            None => {
                let w = nz.dw[j[0]];
                Ok(0.5 * (w * w / 3.0 - self.h) * w)
            }
            Some(table) => {
                let sel = NoiseSelector::new(j.iter().map(|v| v + 1).collect())?;
                Ok(ito_truncated(table, &nz.pool, &sel)?.value)
            }
        }
    }

    fn step(&self, t: f64, x: &[f64], nz: &StepNoise) -> Result<Vec<f64>> {
        let (n, m, h) = (self.problem.n, self.problem.m, self.h);
        let a = self.drift(t, x);
        let b = self.diffusion(t, x);
        let mut next: Vec<f64> = (0..n)
            .map(|r| x[r] + a[r] * h + (0..m).map(|j| b[r * m + j] * nz.dw[j]).sum::<f64>())
            .collect();
        if self.scheme == Scheme::EulerMaruyama {
            return Ok(next);
        }
        let cols: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|r| b[r * m + j]).collect()).collect();
        for j2 in 0..m {
            let f = |y: &[f64]| self.column(t, y, j2);
            for (j1, c1) in cols.iter().enumerate() {
                let i = self.double(nz, j1, j2)?;
                if i == 0.0 {
                    continue;
                }
                let l = directional(&f, x, c1, FD_FIRST);
                next.iter_mut().zip(&l).for_each(|(v, d)| *v += d * i);
            }
        }
        if self.scheme == Scheme::Milstein {
            return Ok(next);
        }

        let fa = |y: &[f64]| self.drift(t, y);
        for (j, cj) in cols.iter().enumerate() {
            let i1 = self.weighted(nz, j)?;
            let (i_j0, i_0j) = (h * nz.dw[j] + i1, -i1);
            let lja = directional(&fa, x, cj, FD_FIRST);
            let fb = |y: &[f64]| self.column(t, y, j);
            let l0b = self.l0(&fb, |s, y| self.column(s, y, j), t, x, &a, &cols);
            for r in 0..n {
                next[r] += lja[r] * i_j0 + l0b[r] * i_0j;
            }
        }
        let l0a = self.l0(&fa, |s, y| self.drift(s, y), t, x, &a, &cols);
        next.iter_mut().zip(&l0a).for_each(|(v, d)| *v += 0.5 * d * h * h);

        for j3 in 0..m {
            for j2 in 0..m {
                let inner = |y: &[f64]| {
                    let c2 = self.column(t, y, j2);
                    directional(&|z: &[f64]| self.column(t, z, j3), y, &c2, FD_SECOND)
                };
                for (j1, c1) in cols.iter().enumerate() {
                    if m == 1 && (j1, j2, j3) != (0, 0, 0) {
                        continue;
                    }
                    let i = self.triple(nz, [j1, j2, j3])?;
                    let l = directional(&inner, x, c1, FD_SECOND);
                    next.iter_mut().zip(&l).for_each(|(v, d)| *v += d * i);
                }
            }
        }
        Ok(next)
    }

    /// `L^0 f = ∂_τ f + D f[a] + ½ Σ_j D² f[b^j, b^j]`.
    fn l0(
        &self,
        f: &dyn Fn(&[f64]) -> Vec<f64>,
        ft: impl Fn(f64, &[f64]) -> Vec<f64>,
        t: f64,
        x: &[f64],
        a: &[f64],
        cols: &[Vec<f64>],
    ) -> Vec<f64> {
        let dt = FD_FIRST * (1.0 + t.abs());
        let (fp, fm) = (ft(t + dt, x), ft(t - dt, x));
        let mut out: Vec<f64> = fp.iter().zip(&fm).map(|(p, q)| (p - q) / (2.0 * dt)).collect();
        let da = directional(f, x, a, FD_FIRST);
        out.iter_mut().zip(&da).for_each(|(o, d)| *o += d);
        for c in cols {
            let d2 = second_directional(f, x, c);
            out.iter_mut().zip(&d2).for_each(|(o, d)| *o += 0.5 * d);
        }
        out
    }

    fn run(&self) -> Result<Vec<f64>> {
        let mut x = self.problem.x0.clone();
        for s in 0..self.n_steps {
            let t = self.problem.interval.start + s as f64 * self.h;
            let nz = self.step_noise(s)?;
            x = self.step(t, &x, &nz)?;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("{} produced a non-finite state", self.scheme.name())));
        }
        Ok(x)
    }
}

/// One trajectory endpoint with step `h`. `q` is required when the scheme
/// needs series integrals (`m > 1`, Milstein or Taylor 1.5) and ignored by
/// components that are exact.
pub fn integrate(problem: &SdeProblem, scheme: Scheme, h: f64, noise: NoiseSource<'_>, q: Option<usize>) -> Result<Vec<f64>> {
    Stepper::new(problem, scheme, h, noise, q)?.run()
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub problem: String,
    pub scheme: Scheme,
    pub q: Option<usize>,
    #[serde(with = "vec_f17")]
    pub steps: Vec<f64>,
    #[serde(with = "vec_f17")]
    pub errors: Vec<f64>,
    #[serde(with = "vec_f17")]
    pub std_errs: Vec<f64>,
    #[serde(with = "f17")]
    pub slope: f64,
    pub n_paths: usize,
    pub fine_steps: usize,
    pub reference: String,
}

impl ConvergenceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,rms_error,std_err\n");
        for ((h, e), se) in self.steps.iter().zip(&self.errors).zip(&self.std_errs) {
            s.push_str(&format!("{},{},{}\n", fmt17(*h), fmt17(*e), fmt17(*se)));
        }
        s
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn step_counts(len: f64, steps: &[f64]) -> Result<Vec<usize>> {
    if steps.len() < 3 {
        return Err(Error::InvalidArgument("strong order needs at least three step sizes".into()));
    }
    let counts = steps
        .iter()
        .map(|&h| {
            let n = (len / h).round();
            if !(h > 0.0) || n < 1.0 || (n * h - len).abs() > 1e-9 * len {
                Err(Error::InvalidArgument(format!("h = {h} does not divide T - t = {len}")))
            } else {
                Ok(n as usize)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if counts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("step sizes must be strictly decreasing".into()));
    }
    if counts.iter().any(|&c| c % counts[0] != 0) {
        return Err(Error::InvalidArgument("step sizes are not integer refinements of the coarsest".into()));
    }
    Ok(counts)
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

/// Fine-path refinement below the finest step when an exact solution
/// exists, and for the Euler reference otherwise.
pub const FINE_FACTOR_EXACT: usize = 16;
pub const FINE_FACTOR_REFERENCE: usize = 64;

/// RMS endpoint error per step size. Every scheme run and the reference
/// consume one fine path per `(seed, path index)`.
pub fn strong_order(
    problem: &SdeProblem,
    scheme: Scheme,
    steps: &[f64],
    n_paths: usize,
    seed: u64,
    q: Option<usize>,
) -> Result<ConvergenceReport> {
    let factor = if problem.exact.is_some() { FINE_FACTOR_EXACT } else { FINE_FACTOR_REFERENCE };
    let counts = step_counts(problem.interval.length(), steps)?;
    let fine = counts.iter().fold(1, |a, &c| lcm(a, c)) * factor;
    strong_order_with_fine(problem, scheme, steps, n_paths, seed, q, fine)
}

/// [`strong_order`] with an explicit fine-path step count.
pub fn strong_order_with_fine(
    problem: &SdeProblem,
    scheme: Scheme,
    steps: &[f64],
    n_paths: usize,
    seed: u64,
    q: Option<usize>,
    fine_steps: usize,
) -> Result<ConvergenceReport> {
    let len = problem.interval.length();
    let counts = step_counts(len, steps)?;
    if n_paths < 2 {
        return Err(Error::InvalidArgument("strong order needs n_paths >= 2".into()));
    }
    if counts.iter().any(|&c| !fine_steps.is_multiple_of(c)) {
        return Err(Error::InvalidArgument(format!("fine path of {fine_steps} steps does not nest all step sizes")));
    }
    // validate arguments once before fanning out
    Stepper::new(problem, scheme, steps[0], NoiseSource::Keyed { seed, path: 0 }, q)?;

    let per_path: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|p| -> Result<Vec<f64>> {
            let path = WienerPath::simulate(path_seed(seed, p), problem.m, fine_steps, problem.interval)?;
            let reference = match &problem.exact {
                Some(f) => f(&(1..=problem.m).map(|i| path.total(i)).collect::<Vec<_>>()),
                None => integrate(problem, Scheme::EulerMaruyama, len / fine_steps as f64, NoiseSource::Path(&path), None)?,
            };
            counts
                .iter()
                .map(|&c| {
                    let x = integrate(problem, scheme, len / c as f64, NoiseSource::Path(&path), q)?;
                    Ok(x.iter().zip(&reference).map(|(a, b)| (a - b).powi(2)).sum())
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let n = n_paths as f64;
    let mut errors = Vec::with_capacity(counts.len());
    let mut std_errs = Vec::with_capacity(counts.len());
    for c in 0..counts.len() {
        let (mut s1, mut s2) = (0.0, 0.0);
        for row in &per_path {
            s1 += row[c];
            s2 += row[c] * row[c];
        }
        let mean = s1 / n;
        let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
        let rms = mean.sqrt();
        errors.push(rms);
        // delta method for sqrt of the mean
        std_errs.push(if rms > 0.0 { (var / n).sqrt() / (2.0 * rms) } else { 0.0 });
    }
    if errors.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Numerical("zero or non-finite strong error; slope undefined".into()));
    }
    let hs: Vec<f64> = counts.iter().map(|&c| len / c as f64).collect();
    Ok(ConvergenceReport {
        problem: problem.name.clone(),
        scheme,
        q,
        slope: loglog_slope(&hs, &errors),
        steps: hs,
        errors,
        std_errs,
        n_paths,
        fine_steps,
        reference: if problem.exact.is_some() { "exact".into() } else { "fine-euler".into() },
    })
}

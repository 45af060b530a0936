//! Brute-force reference values from discretised Wiener paths.
//!
//! A [`WienerPath`] holds `m × N` increments on a uniform partition. Iterated
//! Itô integrals are approximated by left-point iterated sums, Stratonovich
//! values by adding the exact `k = 2` correction, and the expansion inputs
//! `ζ_j^{(i)}` by left-point sums of `φ_j` against the same increments.
//! Paths with different `N` are unrelated draws; there is no refinement.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{Basis, BasisKind, Interval};
use crate::catalog::{catalog_eval, IntegralId};
use crate::coeffs::{half_product_integral, CoefficientTable, WeightSpec};
use crate::expansion::{ito_truncated, strat_truncated_k2, strat_truncated_k34, ExpansionKind, GaussianPool, NoiseSelector};
use crate::report::f17;
use crate::rng::{derive_seed, domain, NormalStream};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    interval: Interval,
    seed: u64,
    m: usize,
    n_steps: usize,
    dw: Vec<f64>,
}

impl WienerPath {
    /// Increment `(i, l)` is draw `l` of stream `i` under `seed`.
    pub fn simulate(seed: u64, m: usize, n_steps: usize, interval: Interval) -> Result<Self> {
        if n_steps == 0 || m == 0 {
            return Err(Error::InvalidArgument("path needs m >= 1 and N >= 1".into()));
        }
        let sd = (interval.length() / n_steps as f64).sqrt();
        let mut dw = vec![0.0; m * n_steps];
        for (i, row) in dw.chunks_mut(n_steps).enumerate() {
            NormalStream::new(seed, domain::PATH, (i + 1) as u64).fill(row);
            row.iter_mut().for_each(|x| *x *= sd);
        }
        Ok(Self { interval, seed, m, n_steps, dw })
    }

    /// Path from explicit increments; `rows[i - 1]` belongs to component `i`.
    pub fn from_increments(interval: Interval, rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        let n_steps = rows.first().map_or(0, Vec::len);
        if m == 0 || n_steps == 0 || rows.iter().any(|r| r.len() != n_steps) {
            return Err(Error::DimensionMismatch("increment rows must be non-empty and equally long".into()));
        }
        Ok(Self { interval, seed: 0, m, n_steps, dw: rows.concat() })
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step(&self) -> f64 {
        self.interval.length() / self.n_steps as f64
    }

    /// Left end of step `l`.
    pub fn node(&self, l: usize) -> f64 {
        self.interval.start + l as f64 * self.step()
    }

    /// Increments of component `i >= 1`.
    pub fn increments(&self, i: usize) -> &[f64] {
        assert!(i >= 1 && i <= self.m, "component {i} out of range");
        &self.dw[(i - 1) * self.n_steps..i * self.n_steps]
    }

    /// `W_T - W_t` for component `i`.
    pub fn total(&self, i: usize) -> f64 {
        self.increments(i).iter().sum()
    }

    /// Sum of `r` consecutive increments: the path seen on a grid `r` times
    /// coarser.
    pub fn coarsen(&self, r: usize) -> Result<Self> {
        if r == 0 || !self.n_steps.is_multiple_of(r) {
            return Err(Error::InvalidArgument(format!("{r} does not divide N = {}", self.n_steps)));
        }
        let dw = self.dw.chunks(r).map(|c| c.iter().sum()).collect();
        Ok(Self { n_steps: self.n_steps / r, dw, ..self.clone() })
    }

    fn check_component(&self, i: usize) -> Result<()> {
        if i > self.m {
            return Err(Error::DimensionMismatch(format!("component {i} exceeds path m = {}", self.m)));
        }
        Ok(())
    }
}

/// `φ_j(τ_l)` at the left nodes of an `N`-step partition, `j <= p_max`.
#[derive(Debug, Clone)]
pub struct PhiTable {
    basis: Basis,
    n_steps: usize,
    p_max: usize,
    vals: Vec<f64>,
}

impl PhiTable {
    pub fn new(basis: &Basis, n_steps: usize, p_max: usize) -> Self {
        let iv = basis.interval;
        let h = iv.length() / n_steps as f64;
        let w = p_max + 1;
        let mut vals = vec![0.0; n_steps * w];
        for (l, row) in vals.chunks_mut(w).enumerate() {
            basis.phi_upto(iv.start + l as f64 * h, row);
        }
        Self { basis: *basis, n_steps, p_max, vals }
    }

    pub fn p_max(&self) -> usize {
        self.p_max
    }

    /// All `ζ_j^{(i)}`, `j <= p_max`, extracted from `path`.
    pub fn pool(&self, path: &WienerPath) -> Result<GaussianPool> {
        if path.interval != self.basis.interval {
            return Err(Error::DimensionMismatch("path interval differs from the φ table".into()));
        }
        let rows: Vec<&[f64]> = (1..=path.m).map(|i| path.increments(i)).collect();
        self.pool_from_increments(&rows)
    }

    /// Same as [`PhiTable::pool`] for raw increment rows laid on this
    /// table's partition.
    pub fn pool_from_increments(&self, increments: &[&[f64]]) -> Result<GaussianPool> {
        if increments.iter().any(|r| r.len() != self.n_steps) {
            return Err(Error::DimensionMismatch("increments do not match the φ table partition".into()));
        }
        let w = self.p_max + 1;
        let rows = increments
            .iter()
            .map(|inc| {
                let mut acc = vec![0.0; w];
                for (phi, &d) in self.vals.chunks(w).zip(inc.iter()) {
                    acc.iter_mut().zip(phi).for_each(|(a, p)| *a += p * d);
                }
                acc
            })
            .collect();
        GaussianPool::from_rows(rows)
    }
}

/// `Σ_l φ_j(τ_l) ΔW_l^{(i)}`.
pub fn zeta_from_path(path: &WienerPath, basis: &Basis, j: usize, i: usize) -> Result<f64> {
    if i == 0 {
        return Err(Error::InvalidArgument("ζ extraction needs a noise component >= 1".into()));
    }
    path.check_component(i)?;
    if basis.interval != path.interval {
        return Err(Error::DimensionMismatch("basis and path intervals differ".into()));
    }
    let mut acc = 0.0;
    for (l, &d) in path.increments(i).iter().enumerate() {
        acc += basis.phi(j, path.node(l))? * d;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleEstimate {
    pub value: f64,
    pub n_steps: usize,
    pub kind: ExpansionKind,
}

/// Weight values at the left nodes, one row per level.
struct DiscreteKernel {
    w: Vec<Vec<f64>>,
}

impl DiscreteKernel {
    fn new(path: &WienerPath, weights: &[WeightSpec]) -> Self {
        let w = weights
            .iter()
            .map(|ws| (0..path.n_steps).map(|l| ws.eval(path.node(l))).collect())
            .collect();
        Self { w }
    }

    fn ito(&self, path: &WienerPath, sel: &[usize]) -> f64 {
        let n = path.n_steps;
        let dt = path.step();
        // prev[l]: previous level summed over steps strictly before l
        let mut prev = vec![1.0; n];
        let mut acc = 0.0;
        for (w, &i) in self.w.iter().zip(sel) {
            acc = 0.0;
            for l in 0..n {
                let d = if i == 0 { dt } else { path.dw[(i - 1) * n + l] };
                let before = acc;
                acc += w[l] * d * prev[l];
                prev[l] = before;
            }
        }
        acc
    }
}

fn check_sel(path: &WienerPath, weights: &[WeightSpec], sel: &NoiseSelector) -> Result<()> {
    if weights.len() != sel.k() {
        return Err(Error::DimensionMismatch(format!("{} weights for k = {}", weights.len(), sel.k())));
    }
    sel.indices().iter().try_for_each(|&i| path.check_component(i))
}

/// Left-point iterated sum
/// `Σ_{l_k} ψ_k(τ_{l_k}) ΔW_{l_k}^{(i_k)} Σ_{l_{k-1} < l_k} ... ψ_1(τ_{l_1}) ΔW_{l_1}^{(i_1)}`,
/// with `Δ` in place of `ΔW` for `i = 0`.
pub fn ito_discrete(path: &WienerPath, weights: &[WeightSpec], sel: &NoiseSelector) -> Result<OracleEstimate> {
    check_sel(path, weights, sel)?;
    let value = DiscreteKernel::new(path, weights).ito(path, sel.indices());
    Ok(OracleEstimate { value, n_steps: path.n_steps, kind: ExpansionKind::Ito })
}

/// Stratonovich value for `k <= 2`: adds `½ ∫ψ_1ψ_2` when `i_1 = i_2 ≠ 0`.
pub fn strat_from_ito(
    ito: OracleEstimate,
    interval: &Interval,
    weights: &[WeightSpec],
    sel: &NoiseSelector,
) -> Result<OracleEstimate> {
    if ito.kind != ExpansionKind::Ito {
        return Err(Error::InvalidArgument("strat_from_ito expects an Itô estimate".into()));
    }
    let value = ito.value + strat_correction(interval, weights, sel)?;
    Ok(OracleEstimate { value, kind: ExpansionKind::Stratonovich, ..ito })
}

fn strat_correction(interval: &Interval, weights: &[WeightSpec], sel: &NoiseSelector) -> Result<f64> {
    match sel.indices() {
        [_] => Ok(0.0),
        [a, b] if a == b && *a != 0 => half_product_integral(interval, &weights[0], &weights[1], 64),
        [_, _] => Ok(0.0),
        _ => Err(Error::Unsupported("Stratonovich oracle conversion is implemented for k <= 2".into())),
    }
}

/// What the Monte Carlo driver compares: an expansion and its oracle.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum IntegralSpec {
    /// Legendre closed form of a catalog integral (Stratonovich).
    Catalog { id: IntegralId },
    /// Generic truncated expansion with `p_l = q` for every level.
    Series { basis: BasisKind, weights: Vec<WeightSpec>, indices: Vec<usize>, kind: ExpansionKind },
}

impl IntegralSpec {
    fn indices(&self) -> &[usize] {
        match self {
            IntegralSpec::Catalog { id } => &id.indices,
            IntegralSpec::Series { indices, .. } => indices,
        }
    }

    fn kind(&self) -> ExpansionKind {
        match self {
            IntegralSpec::Catalog { .. } => ExpansionKind::Stratonovich,
            IntegralSpec::Series { kind, .. } => *kind,
        }
    }

    fn weights(&self, interval: &Interval) -> Vec<WeightSpec> {
        match self {
            IntegralSpec::Catalog { id } => id.tag.weights(interval),
            IntegralSpec::Series { weights, .. } => weights.clone(),
        }
    }

    fn basis_kind(&self) -> BasisKind {
        match self {
            IntegralSpec::Catalog { .. } => BasisKind::Legendre,
            IntegralSpec::Series { basis, .. } => *basis,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct McConfig {
    pub seed: u64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub interval: Interval,
    pub q: usize,
    pub spec: IntegralSpec,
}

#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    pub config: McConfig,
    pub n_paths: usize,
    #[serde(with = "f17")]
    pub mean_sq_diff: f64,
    #[serde(with = "f17")]
    pub std_err: f64,
    pub runtime_seconds: f64,
}

impl McReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Seed of path `p` under a run seed.
pub fn path_seed(seed: u64, p: usize) -> u64 {
    derive_seed(seed, domain::PATH, p as u64)
}

/// Expansion evaluator for one truncation order.
enum Evaluator {
    Catalog(IntegralId, usize),
    Series(CoefficientTable, NoiseSelector, ExpansionKind),
}

impl Evaluator {
    fn new(spec: &IntegralSpec, interval: &Interval, q: usize) -> Result<(Self, usize)> {
        match spec {
            IntegralSpec::Catalog { id } => Ok((Evaluator::Catalog(id.clone(), q), id.tag.max_index(q))),
            IntegralSpec::Series { basis, weights, indices, kind } => {
                let sel = NoiseSelector::new(indices.clone())?;
                let table =
                    CoefficientTable::compute(&Basis::new(*basis, *interval), weights, &vec![q; sel.k()], None)?;
                Ok((Evaluator::Series(table, sel, *kind), q))
            }
        }
    }

    fn eval(&self, interval: &Interval, pool: &GaussianPool) -> Result<f64> {
        match self {
            Evaluator::Catalog(id, q) => catalog_eval(id, interval, pool, *q),
            Evaluator::Series(table, sel, kind) => {
                let strat = *kind == ExpansionKind::Stratonovich;
                let v = match sel.k() {
                    2 if strat && !sel.indices().contains(&0) => strat_truncated_k2(table, pool, sel)?,
                    3 | 4 if strat => strat_truncated_k34(table, pool, sel)?,
                    _ => ito_truncated(table, pool, sel)?,
                };
                Ok(v.value)
            }
        }
    }
}

/// Mean square difference between the truncated expansion and the
/// discretised oracle, on the same paths.
pub fn mc_mean_square_diff(config: &McConfig) -> Result<McReport> {
    Ok(mc_sweep(config, &[config.q])?.remove(0))
}

/// [`mc_mean_square_diff`] for several truncation orders on one set of
/// paths; `config.q` is ignored. Paths run in parallel, sums are reduced in
/// path order so results do not depend on the thread count.
pub fn mc_sweep(config: &McConfig, qs: &[usize]) -> Result<Vec<McReport>> {
    let start = Instant::now();
    if config.n_paths < 2 || config.n_steps == 0 {
        return Err(Error::InvalidArgument("Monte Carlo needs n_paths >= 2 and N >= 1".into()));
    }
    if qs.is_empty() {
        return Err(Error::InvalidArgument("no truncation orders given".into()));
    }
    let iv = config.interval;
    let spec = &config.spec;
    let sel = NoiseSelector::new(spec.indices().to_vec())?;
    let weights = spec.weights(&iv);
    if weights.len() != sel.k() {
        return Err(Error::DimensionMismatch(format!("{} weights for k = {}", weights.len(), sel.k())));
    }
    let m = sel.indices().iter().copied().max().unwrap_or(0).max(1);
    let evals = qs.iter().map(|&q| Evaluator::new(spec, &iv, q)).collect::<Result<Vec<_>>>()?;
    let p_max = evals.iter().map(|e| e.1).max().unwrap_or(0);
    let phi = PhiTable::new(&Basis::new(spec.basis_kind(), iv), config.n_steps, p_max);
    let correction = match spec.kind() {
        ExpansionKind::Ito => 0.0,
        ExpansionKind::Stratonovich => strat_correction(&iv, &weights, &sel)?,
    };

    let per_path: Vec<Vec<f64>> = (0..config.n_paths)
        .into_par_iter()
        .map(|p| -> Result<Vec<f64>> {
            let path = WienerPath::simulate(path_seed(config.seed, p), m, config.n_steps, iv)?;
            let kernel = DiscreteKernel::new(&path, &weights);
            let oracle = kernel.ito(&path, sel.indices()) + correction;
            let pool = phi.pool(&path)?;
            evals
                .iter()
                .map(|(e, _)| {
                    let d = e.eval(&iv, &pool)? - oracle;
                    Ok(d * d)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let n = config.n_paths as f64;
    let elapsed = start.elapsed().as_secs_f64();
    Ok(qs
        .iter()
        .enumerate()
        .map(|(c, &q)| {
            let (mut s1, mut s2) = (0.0, 0.0);
            for row in &per_path {
                s1 += row[c];
                s2 += row[c] * row[c];
            }
            let mean = s1 / n;
            let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
            McReport {
                config: McConfig { q, ..config.clone() },
                n_paths: config.n_paths,
                mean_sq_diff: mean,
                std_err: (var / n).sqrt(),
                runtime_seconds: elapsed,
            }
        })
        .collect())
}

/// Monte Carlo `E[J²]` of the discretised oracle alone, as `(mean, std_err)`.
pub fn mc_oracle_second_moment(
    seed: u64,
    n_paths: usize,
    n_steps: usize,
    interval: Interval,
    weights: &[WeightSpec],
    sel: &NoiseSelector,
    kind: ExpansionKind,
) -> Result<(f64, f64)> {
    if n_paths < 2 {
        return Err(Error::InvalidArgument("Monte Carlo needs n_paths >= 2".into()));
    }
    if weights.len() != sel.k() {
        return Err(Error::DimensionMismatch(format!("{} weights for k = {}", weights.len(), sel.k())));
    }
    let correction = match kind {
        ExpansionKind::Ito => 0.0,
        ExpansionKind::Stratonovich => strat_correction(&interval, weights, sel)?,
    };
    let m = sel.indices().iter().copied().max().unwrap_or(0).max(1);
    let squares: Vec<f64> = (0..n_paths)
        .into_par_iter()
        .map(|p| -> Result<f64> {
            let path = WienerPath::simulate(path_seed(seed, p), m, n_steps, interval)?;
            let v = DiscreteKernel::new(&path, weights).ito(&path, sel.indices()) + correction;
            Ok(v * v)
        })
        .collect::<Result<_>>()?;
    let n = n_paths as f64;
    let mean = squares.iter().sum::<f64>() / n;
    let var = squares.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

//! Truncated expansions of iterated Itô and Stratonovich integrals.
//!
//! For noise component `i >= 1`, `ζ_j^{(i)}` is drawn from a
//! [`GaussianPool`]. The time component `i = 0` (`w_τ^{(0)} = τ`) uses the
//! deterministic value `ζ_j^{(0)} = ∫_t^T φ_j(s) ds`, which is `sqrt(T-t)`
//! for `j = 0` and zero otherwise.

use serde::{Deserialize, Serialize};

use crate::coeffs::CoefficientTable;
use crate::rng::{domain, NormalStream};
use crate::{Error, Result};

/// `ζ_j^{(i)}` for `i = 1..=m`, `j = 0..=p_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPool {
    seed: Option<u64>,
    m: usize,
    p_max: usize,
    z: Vec<f64>,
}

impl GaussianPool {
    /// Deterministic pool: entry `(i, j)` is the `j`-th draw of stream `i`
    /// under `seed`, so any entry can be regenerated on its own.
    pub fn sample(seed: u64, m: usize, p_max: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("pool needs m >= 1".into()));
        }
        let width = p_max + 1;
        let mut z = vec![0.0; m * width];
        for (i, row) in z.chunks_mut(width).enumerate() {
            NormalStream::new(seed, domain::POOL, (i + 1) as u64).fill(row);
        }
        Ok(Self { seed: Some(seed), m, p_max, z })
    }

    /// Pool from explicit rows; `rows[i - 1][j] = ζ_j^{(i)}`.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m == 0 || rows[0].is_empty() {
            return Err(Error::InvalidArgument("pool needs at least one non-empty row".into()));
        }
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::DimensionMismatch("pool rows differ in length".into()));
        }
        Ok(Self { seed: None, m, p_max: width - 1, z: rows.concat() })
    }

    /// All-zero pool.
    pub fn zeros(m: usize, p_max: usize) -> Self {
        Self { seed: None, m, p_max, z: vec![0.0; m * (p_max + 1)] }
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p_max(&self) -> usize {
        self.p_max
    }

    /// `ζ_j^{(i)}`, `1 <= i <= m`.
    pub fn zeta(&self, i: usize, j: usize) -> f64 {
        assert!(i >= 1 && i <= self.m && j <= self.p_max, "pool index ({i}, {j}) out of range");
        self.z[(i - 1) * (self.p_max + 1) + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        assert!(i >= 1 && i <= self.m, "pool row {i} out of range");
        let w = self.p_max + 1;
        &self.z[(i - 1) * w..i * w]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i >= 1 && i <= self.m && j <= self.p_max, "pool index ({i}, {j}) out of range");
        self.z[(i - 1) * (self.p_max + 1) + j] = v;
    }

    /// Raw entries, row-major.
    pub fn entries(&self) -> &[f64] {
        &self.z
    }
}

/// Noise components `(i_1, ..., i_k)`; `0` selects the time component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoiseSelector(Vec<usize>);

impl NoiseSelector {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() || indices.len() > 4 {
            return Err(Error::Unsupported(format!("multiplicity {} (supported 1..=4)", indices.len())));
        }
        Ok(Self(indices))
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpansionKind {
    Ito,
    Stratonovich,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionValue {
    pub value: f64,
    pub k: usize,
    pub indices: Vec<usize>,
    pub orders: Vec<usize>,
    pub kind: ExpansionKind,
}

/// `ζ` rows aligned with the selector: `rows[l][j] = ζ_j^{(i_l)}`.
fn zeta_rows(table: &CoefficientTable, pool: &GaussianPool, sel: &NoiseSelector) -> Result<Vec<Vec<f64>>> {
    if table.k() != sel.k() {
        return Err(Error::DimensionMismatch(format!(
            "table multiplicity {} vs selector multiplicity {}",
            table.k(),
            sel.k()
        )));
    }
    let basis = table.basis();
    sel.indices()
        .iter()
        .zip(table.orders())
        .map(|(&i, &p)| {
            if i == 0 {
                return Ok((0..=p).map(|j| basis.integral(j)).collect());
            }
            if i > pool.m() {
                return Err(Error::DimensionMismatch(format!("noise index {i} exceeds pool m = {}", pool.m())));
            }
            if p > pool.p_max() {
                return Err(Error::DimensionMismatch(format!(
                    "table order {p} exceeds pool p_max = {}",
                    pool.p_max()
                )));
            }
            Ok(pool.row(i)[..=p].to_vec())
        })
        .collect()
}

/// A partial matching of `{0, ..., k-1}` with its sign `(-1)^{#pairs}`.
struct Matching {
    pairs: Vec<(usize, usize)>,
    free: Vec<usize>,
    sign: f64,
}

fn matchings(k: usize) -> Vec<Matching> {
    fn rec(rest: &[usize], pairs: &mut Vec<(usize, usize)>, free: &mut Vec<usize>, out: &mut Vec<Matching>) {
        let Some((&first, tail)) = rest.split_first() else {
            let sign = if pairs.len().is_multiple_of(2) { 1.0 } else { -1.0 };
            out.push(Matching { pairs: pairs.clone(), free: free.clone(), sign });
            return;
        };
        free.push(first);
        rec(tail, pairs, free, out);
        free.pop();
        for (pos, &other) in tail.iter().enumerate() {
            let mut remaining = tail.to_vec();
            remaining.remove(pos);
            pairs.push((first, other));
            rec(&remaining, pairs, free, out);
            pairs.pop();
        }
    }
    let all: Vec<usize> = (0..k).collect();
    let mut out = Vec::new();
    rec(&all, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

/// Calls `f(j, c)` for every `[j_1, ..., j_k]` in the table box.
fn for_each_entry(table: &CoefficientTable, mut f: impl FnMut(&[usize], f64)) {
    let orders = table.orders();
    let mut j = vec![0usize; table.k()];
    for &c in table.values() {
        f(&j, c);
        for l in (0..j.len()).rev() {
            if j[l] < orders[l] {
                j[l] += 1;
                break;
            }
            j[l] = 0;
        }
    }
}

/// `Σ C_{j_k...j_1} Π_l ζ_{j_l}^{(i_l)}`.
fn plain_sum(table: &CoefficientTable, rows: &[Vec<f64>]) -> f64 {
    if table.k() == 2 {
        let (r1, r2) = (&rows[0], &rows[1]);
        let w = r2.len();
        return table
            .values()
            .chunks(w)
            .zip(r1)
            .map(|(row, z1)| z1 * row.iter().zip(r2).map(|(c, z2)| c * z2).sum::<f64>())
            .sum();
    }
    let mut acc = 0.0;
    for_each_entry(table, |j, c| {
        if c != 0.0 {
            acc += c * j.iter().enumerate().map(|(l, &jl)| rows[l][jl]).product::<f64>();
        }
    });
    acc
}

/// Truncated Itô expansion for `k = 1..=4`.
///
/// Each product `Π ζ` is replaced by its Wick-ordered version: for every
/// pair `(a, b)` with `i_a = i_b ≠ 0` and `j_a = j_b`, the pair is
/// contracted to 1 with sign `-1` per contracted pair. For `k = 2, 3, 4`
/// this expands to the one, three, and six-plus-three indicator terms of
/// the classical formulas.
pub fn ito_truncated(table: &CoefficientTable, pool: &GaussianPool, sel: &NoiseSelector) -> Result<ExpansionValue> {
    let rows = zeta_rows(table, pool, sel)?;
    let idx = sel.indices();
    let ms: Vec<Matching> = matchings(sel.k())
        .into_iter()
        .filter(|m| m.pairs.iter().all(|&(a, b)| idx[a] == idx[b] && idx[a] != 0))
        .collect();
    let value = if ms.len() == 1 {
        plain_sum(table, &rows)
    } else {
        let mut acc = 0.0;
        for_each_entry(table, |j, c| {
            if c == 0.0 {
                return;
            }
            let mut term = 0.0;
            for m in &ms {
                if m.pairs.iter().all(|&(a, b)| j[a] == j[b]) {
                    term += m.sign * m.free.iter().map(|&l| rows[l][j[l]]).product::<f64>();
                }
            }
            acc += c * term;
        });
        acc
    };
    finish(value, table, sel, ExpansionKind::Ito)
}

fn finish(value: f64, table: &CoefficientTable, sel: &NoiseSelector, kind: ExpansionKind) -> Result<ExpansionValue> {
    if !value.is_finite() {
        return Err(Error::Numerical("non-finite expansion value".into()));
    }
    Ok(ExpansionValue {
        value,
        k: table.k(),
        indices: sel.indices().to_vec(),
        orders: table.orders().to_vec(),
        kind,
    })
}

/// Truncated Stratonovich expansion for `k = 2`: the plain double sum
/// `Σ C_{j_2 j_1} ζ_{j_1}^{(i_1)} ζ_{j_2}^{(i_2)}`, `i_1, i_2 >= 1`.
pub fn strat_truncated_k2(table: &CoefficientTable, pool: &GaussianPool, sel: &NoiseSelector) -> Result<ExpansionValue> {
    if table.k() != 2 || sel.k() != 2 {
        return Err(Error::DimensionMismatch("strat_truncated_k2 needs k = 2".into()));
    }
    if sel.indices().contains(&0) {
        return Err(Error::InvalidArgument("Stratonovich k = 2 expansion needs noise indices >= 1".into()));
    }
    let rows = zeta_rows(table, pool, sel)?;
    finish(plain_sum(table, &rows), table, sel, ExpansionKind::Stratonovich)
}

/// Truncated Stratonovich expansion for `k = 3, 4` with constant weights
/// and a common truncation order.
pub fn strat_truncated_k34(table: &CoefficientTable, pool: &GaussianPool, sel: &NoiseSelector) -> Result<ExpansionValue> {
    let k = table.k();
    if !(3..=4).contains(&k) || sel.k() != k {
        return Err(Error::DimensionMismatch("strat_truncated_k34 needs k = 3 or 4".into()));
    }
    if !table.weights().iter().all(|w| w.is_constant()) {
        return Err(Error::InvalidArgument("Stratonovich k = 3, 4 expansion needs constant weights".into()));
    }
    let p = table.orders()[0];
    if table.orders().iter().any(|&q| q != p) {
        return Err(Error::InvalidArgument(format!(
            "Stratonovich k = 3, 4 expansion needs equal truncation orders, got {:?}",
            table.orders()
        )));
    }
    if k == 3 && sel.indices().contains(&0) {
        return Err(Error::InvalidArgument("Stratonovich k = 3 expansion needs noise indices >= 1".into()));
    }
    let rows = zeta_rows(table, pool, sel)?;
    finish(plain_sum(table, &rows), table, sel, ExpansionKind::Stratonovich)
}

/// Exact mean-square truncation error for `k = 2`, `i_1 ≠ i_2`:
/// `‖K‖² - Σ C²` over the table.
pub fn mse_k2_exact(table: &CoefficientTable, kernel_norm: f64, sel: &NoiseSelector) -> Result<f64> {
    if table.k() != 2 || sel.k() != 2 {
        return Err(Error::DimensionMismatch("mse_k2_exact needs k = 2".into()));
    }
    let idx = sel.indices();
    if idx[0] == idx[1] {
        return Err(Error::InvalidArgument(
            "mse_k2_exact needs i_1 != i_2; estimate the diagonal case by Monte Carlo".into(),
        ));
    }
    Ok(kernel_norm - table.sum_squares())
}

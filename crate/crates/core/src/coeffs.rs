//! The ordered kernel `K(t_1, ..., t_k)` and its Fourier coefficients.
//!
//! Index convention: a [`CoefficientTable`] stores `C_{j_k...j_1}` at array
//! position `[j_1, ..., j_k]` (row-major, `j_1` slowest). The coefficient
//! subscript runs from the outermost integration variable to the innermost,
//! while the array index follows the integration order. So for `k = 2`,
//! `table.get(&[j1, j2])` is the coefficient that multiplies
//! `ζ_{j1}^{(i_1)} ζ_{j2}^{(i_2)}`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::basis::{gauss_legendre, Basis, BasisKind, Interval, QuadratureRule};
use crate::report::sig17;
use crate::{Error, Result};

/// Upper bound on the number of entries in a dense table.
pub const MAX_TABLE_ENTRIES: usize = 10_000_000;
/// Highest supported multiplicity.
pub const MAX_MULTIPLICITY: usize = 4;

/// Caller-supplied weight function.
#[derive(Clone)]
pub struct Tabulated {
    pub label: String,
    func: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Tabulated {
    pub fn new(label: impl Into<String>, func: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { label: label.into(), func: Arc::new(func) }
    }
}

impl fmt::Debug for Tabulated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tabulated({})", self.label)
    }
}

/// One weight function `ψ_l` on `[t, T]`.
#[derive(Debug, Clone)]
pub enum WeightSpec {
    Constant(f64),
    /// `(base_time - τ)^exponent`.
    Monomial { base_time: f64, exponent: u32 },
    Tabulated(Tabulated),
}

impl WeightSpec {
    pub fn one() -> Self {
        WeightSpec::Constant(1.0)
    }

    /// `(t - τ)^q` anchored at the start of `interval`.
    pub fn monomial(interval: &Interval, exponent: u32) -> Self {
        WeightSpec::Monomial { base_time: interval.start, exponent }
    }

    pub fn tabulated(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        WeightSpec::Tabulated(Tabulated::new(label, f))
    }

    pub fn eval(&self, tau: f64) -> f64 {
        match self {
            WeightSpec::Constant(c) => *c,
            WeightSpec::Monomial { base_time, exponent } => (base_time - tau).powi(*exponent as i32),
            WeightSpec::Tabulated(t) => (t.func)(tau),
        }
    }

    /// Polynomial degree, when known.
    pub fn degree(&self) -> Option<u32> {
        match self {
            WeightSpec::Constant(_) => Some(0),
            WeightSpec::Monomial { exponent, .. } => Some(*exponent),
            WeightSpec::Tabulated(_) => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, WeightSpec::Constant(_))
    }
}

impl Serialize for WeightSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        match self {
            WeightSpec::Tabulated(t) => {
                let mut map = s.serialize_map(Some(2))?;
                map.serialize_entry("form", "tabulated")?;
                map.serialize_entry("label", &t.label)?;
                map.end()
            }
            other => WeightJson::from_spec(other).map_err(serde::ser::Error::custom)?.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for WeightSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        WeightJson::deserialize(d).map(WeightJson::into_spec)
    }
}

/// Indices `(j_1, ..., j_k)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(j: Vec<usize>) -> Result<Self> {
        if j.is_empty() || j.len() > MAX_MULTIPLICITY {
            return Err(Error::Unsupported(format!("multiplicity {} (supported 1..=4)", j.len())));
        }
        Ok(Self(j))
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }
}

/// `K(t_1, ..., t_k)`: the weight product on the strictly ordered simplex,
/// zero elsewhere.
pub fn kernel_eval(interval: &Interval, weights: &[WeightSpec], times: &[f64]) -> Result<f64> {
    if weights.len() != times.len() || weights.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for {} times",
            weights.len(),
            times.len()
        )));
    }
    for &s in times {
        interval.check_contains(s)?;
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Ok(0.0);
    }
    Ok(weights.iter().zip(times).map(|(w, &s)| w.eval(s)).product())
}

/// Default rule size: exact for Legendre bases with polynomial weights.
pub fn default_quad_points(orders: &[usize], weights: &[WeightSpec]) -> usize {
    let p_max = orders.iter().copied().max().unwrap_or(0);
    let deg: usize = weights.iter().map(|w| w.degree().unwrap_or(0) as usize).sum();
    let exact = (orders.iter().sum::<usize>() + deg + orders.len()).div_ceil(2) + 2;
    (p_max + 16).max(exact).min(512)
}

/// Fills one level's basis values at a node.
type Level<'a> = Box<dyn Fn(f64, &mut [f64]) + Sync + 'a>;

/// Iterated integrals `∫_t^T f_k(s_k) ∫_t^{s_k} ... ∫_t^{s_2} f_1(s_1) ds_1...ds_k`
/// where each `f_l` is vector valued; the result is the tensor product laid
/// out row-major with level 1 slowest.
///
/// The running inner integral at each outer node is re-integrated with a
/// fresh mapped rule over `[t, node]`, so polynomial integrands are exact
/// whenever the rule is large enough for their degree.
struct NestedQuadrature<'a> {
    rule: QuadratureRule,
    interval: Interval,
    panels: usize,
    levels: Vec<Level<'a>>,
    widths: Vec<usize>,
}

impl NestedQuadrature<'_> {
    fn run(&self) -> Result<Vec<f64>> {
        let out = self.level(self.levels.len(), self.interval.end);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite coefficient from quadrature".into()));
        }
        Ok(out)
    }

    fn level(&self, level: usize, upper: f64) -> Vec<f64> {
        if level == 0 {
            return vec![1.0];
        }
        let inner_len: usize = self.widths[..level - 1].iter().product();
        let width = self.widths[level - 1];
        let mut acc = vec![0.0; inner_len * width];
        let mut f = vec![0.0; width];
        let frac = (upper - self.interval.start) / self.interval.length();
        let panels = ((self.panels as f64 * frac).ceil() as usize).max(1);
        for (u, w) in self.rule.mapped(self.interval.start, upper, panels) {
            let inner = self.level(level - 1, u);
            (self.levels[level - 1])(u, &mut f);
            for (a, &ia) in inner.iter().enumerate() {
                let wa = w * ia;
                let row = &mut acc[a * width..(a + 1) * width];
                for (r, &fb) in row.iter_mut().zip(&f) {
                    *r += wa * fb;
                }
            }
        }
        acc
    }
}

fn check_weights(k: usize, weights: &[WeightSpec]) -> Result<()> {
    if k == 0 || k > MAX_MULTIPLICITY {
        return Err(Error::Unsupported(format!("multiplicity {k} (supported 1..=4)")));
    }
    if weights.len() != k {
        return Err(Error::DimensionMismatch(format!("{} weights for multiplicity {k}", weights.len())));
    }
    Ok(())
}

fn check_quad(quad_points: usize) -> Result<QuadratureRule> {
    if quad_points < 2 {
        return Err(Error::InvalidArgument(format!("quad_points must be >= 2, got {quad_points}")));
    }
    gauss_legendre(quad_points)
}

/// Shared engine for a single coefficient and for full tables: level `l`
/// produces `ψ_l(s) φ_j(s)` for `j` in `lo[l]..=hi[l]`.
fn compute(
    basis: &Basis,
    weights: &[WeightSpec],
    lo: &[usize],
    hi: &[usize],
    quad_points: usize,
) -> Result<Vec<f64>> {
    let rule = check_quad(quad_points)?;
    let levels: Vec<Level<'static>> = (0..weights.len())
        .map(|l| {
            let w = weights[l].clone();
            let (a, b) = (lo[l], hi[l]);
            let basis = *basis;
            Box::new(move |s: f64, out: &mut [f64]| {
                let mut phis = vec![0.0; b + 1];
                basis.phi_upto(s, &mut phis);
                let ws = w.eval(s);
                for (o, p) in out.iter_mut().zip(&phis[a..=b]) {
                    *o = ws * p;
                }
            }) as Level<'static>
        })
        .collect();
    let nq = NestedQuadrature {
        rule,
        interval: basis.interval,
        panels: basis.panels_for(quad_points),
        levels,
        widths: lo.iter().zip(hi).map(|(a, b)| b - a + 1).collect(),
    };
    nq.run()
}

/// A single Fourier coefficient `C_{j_k...j_1}`.
pub fn fourier_coefficient(
    basis: &Basis,
    weights: &[WeightSpec],
    idx: &MultiIndex,
    quad_points: usize,
) -> Result<f64> {
    check_weights(idx.k(), weights)?;
    let j = idx.indices();
    Ok(compute(basis, weights, j, j, quad_points)?[0])
}

/// Dense table of Fourier coefficients over the index box
/// `[0, p_1] × ... × [0, p_k]`.
#[derive(Debug, Clone)]
pub struct CoefficientTable {
    k: usize,
    orders: Vec<usize>,
    basis: Basis,
    weights: Vec<WeightSpec>,
    quad_points: usize,
    values: Vec<f64>,
}

impl CoefficientTable {
    pub fn compute(
        basis: &Basis,
        weights: &[WeightSpec],
        orders: &[usize],
        quad_points: Option<usize>,
    ) -> Result<Self> {
        let k = orders.len();
        check_weights(k, weights)?;
        let size = orders
            .iter()
            .try_fold(1usize, |acc, &p| acc.checked_mul(p + 1))
            .filter(|&n| n <= MAX_TABLE_ENTRIES)
            .ok_or_else(|| Error::SizeLimit(format!("table with orders {orders:?} exceeds {MAX_TABLE_ENTRIES} entries")))?;
        let quad_points = quad_points.unwrap_or_else(|| default_quad_points(orders, weights));
        let lo = vec![0; k];
        let values = compute(basis, weights, &lo, orders, quad_points)?;
        debug_assert_eq!(values.len(), size);
        Ok(Self {
            k,
            orders: orders.to_vec(),
            basis: *basis,
            weights: weights.to_vec(),
            quad_points,
            values,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn weights(&self) -> &[WeightSpec] {
        &self.weights
    }

    pub fn quad_points(&self) -> usize {
        self.quad_points
    }

    /// Row-major values, `j_1` slowest.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shape(&self) -> Vec<usize> {
        self.orders.iter().map(|p| p + 1).collect()
    }

    fn offset(&self, j: &[usize]) -> Option<usize> {
        if j.len() != self.k {
            return None;
        }
        let mut off = 0;
        for (&jl, &pl) in j.iter().zip(&self.orders) {
            if jl > pl {
                return None;
            }
            off = off * (pl + 1) + jl;
        }
        Some(off)
    }

    /// Entry at `[j_1, ..., j_k]`, i.e. `C_{j_k...j_1}`.
    pub fn get(&self, j: &[usize]) -> Option<f64> {
        self.offset(j).map(|o| self.values[o])
    }

    /// Decodes a flat offset into `[j_1, ..., j_k]`.
    pub fn index_of(&self, mut offset: usize) -> Vec<usize> {
        let mut j = vec![0; self.k];
        for l in (0..self.k).rev() {
            let w = self.orders[l] + 1;
            j[l] = offset % w;
            offset /= w;
        }
        j
    }

    /// Copy with entries outside `keep` set to zero.
    pub fn masked(&self, mut keep: impl FnMut(&[usize]) -> bool) -> Self {
        let mut out = self.clone();
        for (o, v) in out.values.iter_mut().enumerate() {
            if !keep(&self.index_of(o)) {
                *v = 0.0;
            }
        }
        out
    }

    /// Copy with all orders reduced to `orders` (each must not exceed the
    /// current one).
    pub fn truncated(&self, orders: &[usize]) -> Result<Self> {
        if orders.len() != self.k || orders.iter().zip(&self.orders).any(|(a, b)| a > b) {
            return Err(Error::InvalidArgument(format!(
                "cannot truncate orders {:?} to {orders:?}",
                self.orders
            )));
        }
        let mut values = Vec::with_capacity(orders.iter().map(|p| p + 1).product());
        let mut j = vec![0usize; self.k];
        loop {
            values.push(self.get(&j).expect("index inside the original box"));
            let mut l = self.k;
            loop {
                if l == 0 {
                    return Ok(Self { orders: orders.to_vec(), values, ..self.clone() });
                }
                l -= 1;
                if j[l] < orders[l] {
                    j[l] += 1;
                    break;
                }
                j[l] = 0;
            }
        }
    }

    /// `Σ_{j=0}^{p} C_{jj}` for `k = 2`.
    pub fn trace_sum(&self, p: usize) -> Result<f64> {
        if self.k != 2 {
            return Err(Error::InvalidArgument(format!("trace_sum needs k = 2, table has k = {}", self.k)));
        }
        if p > self.orders[0] || p > self.orders[1] {
            return Err(Error::InvalidArgument(format!(
                "trace order {p} exceeds table orders {:?}",
                self.orders
            )));
        }
        Ok((0..=p).map(|j| self.values[j * (self.orders[1] + 1) + j]).sum())
    }

    /// `Σ C²` over the whole table.
    pub fn sum_squares(&self) -> f64 {
        self.values.iter().map(|c| c * c).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        let weights = self
            .weights
            .iter()
            .map(WeightJson::from_spec)
            .collect::<Result<Vec<_>>>()?;
        let values = self.values.iter().map(|&v| sig17(v)).collect::<Result<Vec<_>>>()?;
        let doc = TableJsonOut {
            k: self.k,
            interval: self.basis.interval,
            basis: self.basis.kind,
            weights,
            p: self.orders.clone(),
            quad_points: self.quad_points,
            values,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: TableJsonIn = serde_json::from_str(s)?;
        let interval = Interval::new(doc.interval.start, doc.interval.end)?;
        if doc.p.len() != doc.k || doc.weights.len() != doc.k {
            return Err(Error::Serialization("k does not match p/weights lengths".into()));
        }
        let size: usize = doc.p.iter().map(|p| p + 1).product();
        if doc.values.len() != size {
            return Err(Error::Serialization(format!("expected {size} values, found {}", doc.values.len())));
        }
        Ok(Self {
            k: doc.k,
            orders: doc.p,
            basis: Basis::new(doc.basis, interval),
            weights: doc.weights.into_iter().map(WeightJson::into_spec).collect(),
            quad_points: doc.quad_points,
            values: doc.values,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
enum WeightJson {
    Constant { value: f64 },
    Monomial { base_time: f64, exponent: u32 },
}

impl WeightJson {
    fn from_spec(w: &WeightSpec) -> Result<Self> {
        match w {
            WeightSpec::Constant(v) => Ok(WeightJson::Constant { value: *v }),
            WeightSpec::Monomial { base_time, exponent } => {
                Ok(WeightJson::Monomial { base_time: *base_time, exponent: *exponent })
            }
            WeightSpec::Tabulated(t) => Err(Error::Serialization(format!(
                "tabulated weight '{}' cannot be exported",
                t.label
            ))),
        }
    }

    fn into_spec(self) -> WeightSpec {
        match self {
            WeightJson::Constant { value } => WeightSpec::Constant(value),
            WeightJson::Monomial { base_time, exponent } => WeightSpec::Monomial { base_time, exponent },
        }
    }
}

#[derive(Serialize)]
struct TableJsonOut {
    k: usize,
    interval: Interval,
    basis: BasisKind,
    weights: Vec<WeightJson>,
    p: Vec<usize>,
    quad_points: usize,
    values: Vec<Box<RawValue>>,
}

#[derive(Deserialize)]
struct TableJsonIn {
    k: usize,
    interval: Interval,
    basis: BasisKind,
    weights: Vec<WeightJson>,
    p: Vec<usize>,
    quad_points: usize,
    values: Vec<f64>,
}

/// `∫_t^T ψ_2²(t_2) ∫_t^{t_2} ψ_1²(t_1) dt_1 dt_2`, the squared `L²` norm of
/// the `k = 2` kernel.
pub fn kernel_norm_sq(interval: &Interval, weights: &[WeightSpec], quad_points: usize) -> Result<f64> {
    check_weights(2, weights)?;
    if weights.len() != 2 {
        return Err(Error::DimensionMismatch("kernel_norm_sq takes two weights".into()));
    }
    let rule = check_quad(quad_points)?;
    let levels: Vec<Level<'static>> = weights
        .iter()
        .cloned()
        .map(|w| {
            Box::new(move |s: f64, out: &mut [f64]| {
                let v = w.eval(s);
                out[0] = v * v;
            }) as Level<'static>
        })
        .collect();
    let nq = NestedQuadrature { rule, interval: *interval, panels: 1, levels, widths: vec![1, 1] };
    let v = nq.run()?[0];
    Ok(v)
}

/// `½ ∫_t^T ψ_1 ψ_2 ds`, the limit of the trace sum.
pub fn half_product_integral(
    interval: &Interval,
    w1: &WeightSpec,
    w2: &WeightSpec,
    quad_points: usize,
) -> Result<f64> {
    let rule = check_quad(quad_points)?;
    let v = 0.5 * rule.integrate(interval.start, interval.end, |s| w1.eval(s) * w2.eval(s));
    if !v.is_finite() {
        return Err(Error::Numerical("non-finite weight product integral".into()));
    }
    Ok(v)
}

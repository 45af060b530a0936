//! Closed-form truncated expansions of the standard Stratonovich integrals
//!
//! ```text
//! I_(l1)^(i1)       = ∫_t^T (t - s)^l1 dW_s^(i1)
//! I_(l1 l2)^(i1 i2) = ∫_t^T (t - t2)^l2 ∫_t^t2 (t - t1)^l1 dW_t1^(i1) dW_t2^(i2)
//! ```
//!
//! in the Legendre basis, plus trigonometric-basis variants of `I_(1)`,
//! `I_(2)` and `I_(10)` that carry explicit tail variables `ξ_q`, `μ_q`.
//!
//! Every formula is written once as a term emitter ([`Terms`]): evaluation
//! multiplies emitted terms by pool values, the second moment aggregates
//! their coefficients, and [`bilinear_form`] exposes the emitted index set
//! for cross-checks against quadrature tables.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::basis::{Basis, Interval};
use crate::coeffs::{CoefficientTable, WeightSpec};
use crate::expansion::{ito_truncated, strat_truncated_k2, GaussianPool, NoiseSelector};
use crate::rng::{domain, keyed_normal};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tag {
    I0,
    I1,
    I2,
    I3,
    I00,
    I01,
    I10,
    I02,
    I20,
    I11,
}

impl Tag {
    pub const ALL: [Tag; 10] = [
        Tag::I0,
        Tag::I1,
        Tag::I2,
        Tag::I3,
        Tag::I00,
        Tag::I01,
        Tag::I10,
        Tag::I02,
        Tag::I20,
        Tag::I11,
    ];

    pub fn arity(self) -> usize {
        match self {
            Tag::I0 | Tag::I1 | Tag::I2 | Tag::I3 => 1,
            _ => 2,
        }
    }

    /// Monomial exponents `(l_1, ..., l_k)`, innermost first.
    pub fn exponents(self) -> Vec<u32> {
        match self {
            Tag::I0 => vec![0],
            Tag::I1 => vec![1],
            Tag::I2 => vec![2],
            Tag::I3 => vec![3],
            Tag::I00 => vec![0, 0],
            Tag::I01 => vec![0, 1],
            Tag::I10 => vec![1, 0],
            Tag::I02 => vec![0, 2],
            Tag::I20 => vec![2, 0],
            Tag::I11 => vec![1, 1],
        }
    }

    /// Weight functions `ψ_l(τ) = (t - τ)^{l}` matching the tag.
    pub fn weights(self, interval: &Interval) -> Vec<WeightSpec> {
        self.exponents().into_iter().map(|e| WeightSpec::monomial(interval, e)).collect()
    }

    /// Highest `ζ` index consumed at truncation `q`.
    pub fn max_index(self, q: usize) -> usize {
        match self {
            Tag::I0 => 0,
            Tag::I1 => 1,
            Tag::I2 => 2,
            Tag::I3 => 3,
            Tag::I00 => q,
            Tag::I01 | Tag::I10 => q + 2,
            Tag::I02 | Tag::I20 | Tag::I11 => q + 3,
        }
    }

    /// Highest `ζ` index consumed by the trigonometric variant at order `q`.
    pub fn trig_max_index(self, q: usize) -> Option<usize> {
        match self {
            Tag::I1 | Tag::I2 | Tag::I10 => Some(2 * q),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tag::I0 => "I0",
            Tag::I1 => "I1",
            Tag::I2 => "I2",
            Tag::I3 => "I3",
            Tag::I00 => "I00",
            Tag::I01 => "I01",
            Tag::I10 => "I10",
            Tag::I02 => "I02",
            Tag::I20 => "I20",
            Tag::I11 => "I11",
        }
    }
}

impl std::str::FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Tag::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown integral tag '{s}'")))
    }
}

/// Tag plus noise components `i_1` (and `i_2`), each `>= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegralId {
    pub tag: Tag,
    pub indices: Vec<usize>,
}

impl IntegralId {
    pub fn new(tag: Tag, indices: Vec<usize>) -> Result<Self> {
        if indices.len() != tag.arity() {
            return Err(Error::InvalidArgument(format!(
                "{} takes {} noise indices, got {}",
                tag.name(),
                tag.arity(),
                indices.len()
            )));
        }
        if indices.contains(&0) {
            return Err(Error::InvalidArgument("catalog integrals need noise indices >= 1".into()));
        }
        Ok(Self { tag, indices })
    }

    fn same_components(&self) -> bool {
        self.indices.len() == 2 && self.indices[0] == self.indices[1]
    }
}

/// Tail variables of the trigonometric expansions at order `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTail {
    pub q: usize,
    /// `π²/6 - Σ_{r<=q} 1/r²`
    pub alpha_q: f64,
    /// `π⁴/90 - Σ_{r<=q} 1/r⁴`
    pub beta_q: f64,
    /// `ξ_q^{(i)}`, index `i - 1`.
    pub xi: Vec<f64>,
    /// `μ_q^{(i)}`, index `i - 1`.
    pub mu: Vec<f64>,
}

impl TrigTail {
    pub fn alpha(q: usize) -> f64 {
        // sum small terms first
        PI * PI / 6.0 - (1..=q).rev().map(|r| 1.0 / (r as f64).powi(2)).sum::<f64>()
    }

    pub fn beta(q: usize) -> f64 {
        PI.powi(4) / 90.0 - (1..=q).rev().map(|r| 1.0 / (r as f64).powi(4)).sum::<f64>()
    }

    /// Tails drawn from keys `(seed, "xi"/"mu", i, q)`, independent of any
    /// pool drawn under the same seed.
    pub fn sample(seed: u64, m: usize, q: usize) -> Self {
        let xi = (1..=m).map(|i| keyed_normal(seed, domain::XI, i as u64, q as u64)).collect();
        let mu = (1..=m).map(|i| keyed_normal(seed, domain::MU, i as u64, q as u64)).collect();
        Self::with_values(q, xi, mu)
    }

    pub fn with_values(q: usize, xi: Vec<f64>, mu: Vec<f64>) -> Self {
        Self { q, alpha_q: Self::alpha(q), beta_q: Self::beta(q), xi, mu }
    }

    pub fn zeros(m: usize, q: usize) -> Self {
        Self::with_values(q, vec![0.0; m], vec![0.0; m])
    }
}

/// Slot `0` refers to `i_1`, slot `1` to `i_2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Zeta(u8, usize),
    Xi(u8),
    Mu(u8),
}

impl Var {
    fn with_slot(self, slot: u8) -> Self {
        match self {
            Var::Zeta(_, j) => Var::Zeta(slot, j),
            Var::Xi(_) => Var::Xi(slot),
            Var::Mu(_) => Var::Mu(slot),
        }
    }
}

/// Receiver of the terms of a printed formula.
pub trait Terms {
    fn linear(&mut self, c: f64, v: Var);
    fn bilinear(&mut self, c: f64, a: Var, b: Var);
}

const Z1: u8 = 0;
const Z2: u8 = 1;

fn z(slot: u8, j: usize) -> Var {
    Var::Zeta(slot, j)
}

/// `1 / ((2i - 1)(2i + 3))` in signed arithmetic (`i = 0` gives `-1/3`).
fn diag_den(i: usize) -> f64 {
    let i = i as i64;
    ((2 * i - 1) * (2 * i + 3)) as f64
}

fn emit_i0(h: f64, s: f64, out: &mut dyn Terms) {
    out.linear(s * h.sqrt(), z(Z1, 0));
}

fn emit_i1(h: f64, s: f64, out: &mut dyn Terms) {
    let c = -s * h.powf(1.5) / 2.0;
    out.linear(c, z(Z1, 0));
    out.linear(c / 3f64.sqrt(), z(Z1, 1));
}

fn emit_i2(h: f64, s: f64, out: &mut dyn Terms) {
    let c = s * h.powf(2.5) / 3.0;
    out.linear(c, z(Z1, 0));
    out.linear(c * 3f64.sqrt() / 2.0, z(Z1, 1));
    out.linear(c / (2.0 * 5f64.sqrt()), z(Z1, 2));
}

fn emit_i3(h: f64, s: f64, out: &mut dyn Terms) {
    let c = -s * h.powf(3.5) / 4.0;
    out.linear(c, z(Z1, 0));
    out.linear(c * 3.0 * 3f64.sqrt() / 5.0, z(Z1, 1));
    out.linear(c / 5f64.sqrt(), z(Z1, 2));
    out.linear(c / (5.0 * 7f64.sqrt()), z(Z1, 3));
}

fn emit_i00(h: f64, q: usize, s: f64, out: &mut dyn Terms) {
    let c = s * h / 2.0;
    out.bilinear(c, z(Z1, 0), z(Z2, 0));
    for i in 1..=q {
        let a = c / ((4 * i * i - 1) as f64).sqrt();
        out.bilinear(a, z(Z1, i - 1), z(Z2, i));
        out.bilinear(-a, z(Z1, i), z(Z2, i - 1));
    }
}

fn emit_i01(h: f64, q: usize, q00: usize, s: f64, out: &mut dyn Terms) {
    emit_i00(h, q00, -s * h / 2.0, out);
    let c = -s * h * h / 4.0;
    out.bilinear(c / 3f64.sqrt(), z(Z1, 0), z(Z2, 1));
    for i in 0..=q {
        let fi = i as f64;
        let den = ((2.0 * fi + 1.0) * (2.0 * fi + 5.0)).sqrt() * (2.0 * fi + 3.0);
        out.bilinear(c * (fi + 2.0) / den, z(Z1, i), z(Z2, i + 2));
        out.bilinear(-c * (fi + 1.0) / den, z(Z1, i + 2), z(Z2, i));
        out.bilinear(-c / diag_den(i), z(Z1, i), z(Z2, i));
    }
}

fn emit_i10(h: f64, q: usize, q00: usize, s: f64, out: &mut dyn Terms) {
    emit_i00(h, q00, -s * h / 2.0, out);
    let c = -s * h * h / 4.0;
    out.bilinear(c / 3f64.sqrt(), z(Z1, 1), z(Z2, 0));
    for i in 0..=q {
        let fi = i as f64;
        let den = ((2.0 * fi + 1.0) * (2.0 * fi + 5.0)).sqrt() * (2.0 * fi + 3.0);
        out.bilinear(c * (fi + 1.0) / den, z(Z1, i), z(Z2, i + 2));
        out.bilinear(-c * (fi + 2.0) / den, z(Z1, i + 2), z(Z2, i));
        out.bilinear(c / diag_den(i), z(Z1, i), z(Z2, i));
    }
}

/// Shared tail of `I_(02)` and `I_(20)`; `swap` exchanges the roles that
/// distinguish the two printed formulas.
fn emit_second_order_pair(h: f64, q: usize, s: f64, swap: bool, out: &mut dyn Terms) {
    let c = s * h.powi(3) / 8.0;
    if swap {
        out.bilinear(c * 2.0 / (3.0 * 5f64.sqrt()), z(Z1, 2), z(Z2, 0));
    } else {
        out.bilinear(c * 2.0 / (3.0 * 5f64.sqrt()), z(Z1, 0), z(Z2, 2));
    }
    out.bilinear(c / 3.0, z(Z1, 0), z(Z2, 0));
    for i in 0..=q {
        let fi = i as f64;
        let ii = i as i64;
        let den3 = ((2.0 * fi + 1.0) * (2.0 * fi + 7.0)).sqrt() * (2.0 * fi + 3.0) * (2.0 * fi + 5.0);
        let den1 = ((2.0 * fi + 1.0) * (2.0 * fi + 3.0)).sqrt() * ((2 * ii - 1) * (2 * ii + 5)) as f64;
        let (a3, b3) = ((fi + 2.0) * (fi + 3.0), (fi + 1.0) * (fi + 2.0));
        let (a1, b1) = ((ii * ii + ii - 3) as f64, (ii * ii + 3 * ii - 1) as f64);
        let (a3, b3, a1, b1) = if swap { (b3, a3, b1, a1) } else { (a3, b3, a1, b1) };
        // ζ_{i+3}^{(i2)} ζ_i^{(i1)} and ζ_i^{(i2)} ζ_{i+3}^{(i1)}
        out.bilinear(c * a3 / den3, z(Z1, i), z(Z2, i + 3));
        out.bilinear(-c * b3 / den3, z(Z1, i + 3), z(Z2, i));
        out.bilinear(c * a1 / den1, z(Z1, i), z(Z2, i + 1));
        out.bilinear(-c * b1 / den1, z(Z1, i + 1), z(Z2, i));
    }
}

// Every nested I_(00) runs to q + 1 so that each emitted coefficient is
// complete: the (i, i+1) terms below reach index q + 1.
fn emit_i02(h: f64, q: usize, s: f64, out: &mut dyn Terms) {
    emit_i00(h, q + 1, -s * h * h / 4.0, out);
    emit_i01(h, q, q + 1, -s * h, out);
    emit_second_order_pair(h, q, s, false, out);
}

fn emit_i20(h: f64, q: usize, s: f64, out: &mut dyn Terms) {
    emit_i00(h, q + 1, -s * h * h / 4.0, out);
    emit_i10(h, q, q + 1, -s * h, out);
    emit_second_order_pair(h, q, s, true, out);
}

fn emit_i11(h: f64, q: usize, s: f64, out: &mut dyn Terms) {
    emit_i00(h, q + 1, -s * h * h / 4.0, out);
    emit_i10(h, q, q + 1, -s * h / 2.0, out);
    emit_i01(h, q, q + 1, -s * h / 2.0, out);
    let c = s * h.powi(3) / 8.0;
    out.bilinear(c / 3.0, z(Z1, 1), z(Z2, 1));
    for i in 0..=q {
        let fi = i as f64;
        let ii = i as i64;
        let den3 = ((2.0 * fi + 1.0) * (2.0 * fi + 7.0)).sqrt() * (2.0 * fi + 3.0) * (2.0 * fi + 5.0);
        let den1 = ((2.0 * fi + 1.0) * (2.0 * fi + 3.0)).sqrt() * ((2 * ii - 1) * (2 * ii + 5)) as f64;
        let a3 = c * (fi + 1.0) * (fi + 3.0) / den3;
        let a1 = c * (fi + 1.0) * (fi + 1.0) / den1;
        out.bilinear(a3, z(Z1, i), z(Z2, i + 3));
        out.bilinear(-a3, z(Z1, i + 3), z(Z2, i));
        out.bilinear(a1, z(Z1, i), z(Z2, i + 1));
        out.bilinear(-a1, z(Z1, i + 1), z(Z2, i));
    }
}

fn emit_legendre(tag: Tag, h: f64, q: usize, out: &mut dyn Terms) {
    match tag {
        Tag::I0 => emit_i0(h, 1.0, out),
        Tag::I1 => emit_i1(h, 1.0, out),
        Tag::I2 => emit_i2(h, 1.0, out),
        Tag::I3 => emit_i3(h, 1.0, out),
        Tag::I00 => emit_i00(h, q, 1.0, out),
        Tag::I01 => emit_i01(h, q, q, 1.0, out),
        Tag::I10 => emit_i10(h, q, q, 1.0, out),
        Tag::I02 => emit_i02(h, q, 1.0, out),
        Tag::I20 => emit_i20(h, q, 1.0, out),
        Tag::I11 => emit_i11(h, q, 1.0, out),
    }
}

fn emit_trig_i1(h: f64, q: usize, out: &mut dyn Terms) {
    let c = -h.powf(1.5) / 2.0;
    out.linear(c, z(Z1, 0));
    let d = -c * 2f64.sqrt() / PI;
    for r in 1..=q {
        out.linear(d / r as f64, z(Z1, 2 * r - 1));
    }
    out.linear(d * TrigTail::alpha(q).sqrt(), Var::Xi(Z1));
}

fn emit_trig_i2(h: f64, q: usize, out: &mut dyn Terms) {
    let c = h.powf(2.5);
    out.linear(c / 3.0, z(Z1, 0));
    let e = c / (2f64.sqrt() * PI * PI);
    let f = -c / (2f64.sqrt() * PI);
    for r in 1..=q {
        let rf = r as f64;
        out.linear(e / (rf * rf), z(Z1, 2 * r));
        out.linear(f / rf, z(Z1, 2 * r - 1));
    }
    out.linear(e * TrigTail::beta(q).sqrt(), Var::Mu(Z1));
    out.linear(f * TrigTail::alpha(q).sqrt(), Var::Xi(Z1));
}

fn emit_trig_i10(h: f64, q: usize, out: &mut dyn Terms) {
    let c = -h * h;
    let (sa, sb) = (TrigTail::alpha(q).sqrt(), TrigTail::beta(q).sqrt());
    let s2 = 2f64.sqrt();
    out.bilinear(c / 6.0, z(Z1, 0), z(Z2, 0));
    out.bilinear(-c * sa / (2.0 * s2 * PI), z(Z1, 0), Var::Xi(Z2));
    let m = c * sb / (2.0 * s2 * PI * PI);
    out.bilinear(m, z(Z1, 0), Var::Mu(Z2));
    out.bilinear(-2.0 * m, Var::Mu(Z1), z(Z2, 0));
    for r in 1..=q {
        let rf = r as f64;
        let g = c / (2.0 * s2);
        out.bilinear(-g / (PI * rf), z(Z1, 0), z(Z2, 2 * r - 1));
        let k = g / (PI * PI * rf * rf);
        out.bilinear(k, z(Z1, 0), z(Z2, 2 * r));
        out.bilinear(-2.0 * k, z(Z1, 2 * r), z(Z2, 0));
    }
    for r in 1..=q {
        for l in 1..=q {
            if r == l {
                continue;
            }
            let (rf, lf) = (r as f64, l as f64);
            let g = -c / (2.0 * PI * PI * (rf * rf - lf * lf));
            out.bilinear(g, z(Z1, 2 * r), z(Z2, 2 * l));
            out.bilinear(g * lf / rf, z(Z1, 2 * r - 1), z(Z2, 2 * l - 1));
        }
    }
    for r in 1..=q {
        let rf = r as f64;
        let a = c / (4.0 * PI * rf);
        out.bilinear(a, z(Z1, 2 * r), z(Z2, 2 * r - 1));
        out.bilinear(-a, z(Z1, 2 * r - 1), z(Z2, 2 * r));
        let b = c / (8.0 * PI * PI * rf * rf);
        out.bilinear(3.0 * b, z(Z1, 2 * r - 1), z(Z2, 2 * r - 1));
        out.bilinear(b, z(Z1, 2 * r), z(Z2, 2 * r));
    }
}

fn emit_trig(tag: Tag, h: f64, q: usize, out: &mut dyn Terms) -> Result<()> {
    match tag {
        Tag::I1 => emit_trig_i1(h, q, out),
        Tag::I2 => emit_trig_i2(h, q, out),
        Tag::I10 => emit_trig_i10(h, q, out),
        other => {
            return Err(Error::Unsupported(format!(
                "no trigonometric variant of {}",
                other.name()
            )))
        }
    }
    Ok(())
}

struct Evaluator<'a> {
    rows: [&'a [f64]; 2],
    tails: Option<[(f64, f64); 2]>,
    value: f64,
}

impl Evaluator<'_> {
    fn get(&self, v: Var) -> f64 {
        match v {
            Var::Zeta(s, j) => self.rows[s as usize][j],
            Var::Xi(s) => self.tails.map_or(0.0, |t| t[s as usize].0),
            Var::Mu(s) => self.tails.map_or(0.0, |t| t[s as usize].1),
        }
    }
}

impl Terms for Evaluator<'_> {
    fn linear(&mut self, c: f64, v: Var) {
        self.value += c * self.get(v);
    }

    fn bilinear(&mut self, c: f64, a: Var, b: Var) {
        self.value += c * self.get(a) * self.get(b);
    }
}

/// Aggregated coefficients of the emitted terms.
#[derive(Default)]
struct Collector {
    linear: BTreeMap<Var, f64>,
    bilinear: BTreeMap<(Var, Var), f64>,
}

impl Terms for Collector {
    fn linear(&mut self, c: f64, v: Var) {
        *self.linear.entry(v).or_insert(0.0) += c;
    }

    fn bilinear(&mut self, c: f64, a: Var, b: Var) {
        *self.bilinear.entry((a, b)).or_insert(0.0) += c;
    }
}

impl Collector {
    /// `E[X²]`. Distinct slots are independent; with `same` both slots
    /// refer to one component and Isserlis' theorem applies.
    fn second_moment(&self, same: bool) -> f64 {
        let lin: f64 = self.linear.values().map(|c| c * c).sum();
        if !same {
            return lin + self.bilinear.values().map(|c| c * c).sum::<f64>();
        }
        let mut merged: BTreeMap<(Var, Var), f64> = BTreeMap::new();
        for (&(a, b), &c) in &self.bilinear {
            *merged.entry((a.with_slot(0), b.with_slot(0))).or_insert(0.0) += c;
        }
        let trace: f64 = merged.iter().filter(|((a, b), _)| a == b).map(|(_, c)| c).sum();
        let mut sq = 0.0;
        let mut cross = 0.0;
        for (&(a, b), &c) in &merged {
            sq += c * c;
            cross += c * merged.get(&(b, a)).copied().unwrap_or(0.0);
        }
        lin + trace * trace + sq + cross
    }
}

fn rows_for<'a>(id: &IntegralId, pool: &'a GaussianPool, needed: usize) -> Result<[&'a [f64]; 2]> {
    if needed > pool.p_max() {
        return Err(Error::InvalidArgument(format!(
            "{} needs pool p_max >= {needed}, pool has {}",
            id.tag.name(),
            pool.p_max()
        )));
    }
    for &i in &id.indices {
        if i > pool.m() {
            return Err(Error::DimensionMismatch(format!("noise index {i} exceeds pool m = {}", pool.m())));
        }
    }
    let r1 = pool.row(id.indices[0]);
    let r2 = pool.row(*id.indices.last().expect("non-empty indices"));
    Ok([r1, r2])
}

/// Legendre-basis closed form truncated at `q`.
///
/// Nested formulas (`I_(01)` uses `I_(00)` and so on) share the pool and use
/// order `q`, except that inside `I_(02)`, `I_(20)`, `I_(11)` every nested
/// `I_(00)` runs to `q + 1`. With that choice each truncated formula is exactly a
/// partial sum of the double Legendre series of its kernel. The one exception
/// is `I_(01)`, `I_(10)` at `q = 0`, where the nested `I_(00)` has no cross term
/// and the entry coupling `ζ_0`, `ζ_1` is off by `(T-t)²/(4√3)`.
pub fn catalog_eval(id: &IntegralId, interval: &Interval, pool: &GaussianPool, q: usize) -> Result<f64> {
    let rows = rows_for(id, pool, id.tag.max_index(q))?;
    let mut ev = Evaluator { rows, tails: None, value: 0.0 };
    emit_legendre(id.tag, interval.length(), q, &mut ev);
    Ok(ev.value)
}

/// Trigonometric-basis closed form for `I1`, `I2`, `I10`, including the
/// `sqrt(α_q) ξ_q` and `sqrt(β_q) μ_q` tail terms.
pub fn catalog_eval_trig(
    id: &IntegralId,
    interval: &Interval,
    pool: &GaussianPool,
    tail: &TrigTail,
    q: usize,
) -> Result<f64> {
    let needed = id
        .tag
        .trig_max_index(q)
        .ok_or_else(|| Error::Unsupported(format!("no trigonometric variant of {}", id.tag.name())))?;
    if tail.q != q {
        return Err(Error::InvalidArgument(format!("tail order {} differs from q = {q}", tail.q)));
    }
    let rows = rows_for(id, pool, needed)?;
    let last = *id.indices.last().expect("non-empty indices");
    if tail.xi.len() < last.max(id.indices[0]) || tail.mu.len() < last.max(id.indices[0]) {
        return Err(Error::DimensionMismatch("tail variables shorter than the noise index".into()));
    }
    let t = |i: usize| (tail.xi[i - 1], tail.mu[i - 1]);
    let mut ev = Evaluator { rows, tails: Some([t(id.indices[0]), t(last)]), value: 0.0 };
    emit_trig(id.tag, interval.length(), q, &mut ev)?;
    Ok(ev.value)
}

/// Exact second moment of the truncated Legendre formula.
pub fn catalog_second_moment(id: &IntegralId, interval: &Interval, q: usize) -> Result<f64> {
    let mut c = Collector::default();
    emit_legendre(id.tag, interval.length(), q, &mut c);
    Ok(c.second_moment(id.same_components()))
}

/// Exact second moment of the truncated trigonometric formula, tails
/// included.
pub fn catalog_second_moment_trig(id: &IntegralId, interval: &Interval, q: usize) -> Result<f64> {
    let mut c = Collector::default();
    emit_trig(id.tag, interval.length(), q, &mut c)?;
    Ok(c.second_moment(id.same_components()))
}

/// Coefficients of the truncated Legendre formula as a bilinear form:
/// `(j_1, j_2) -> M` with value `Σ M ζ_{j_1}^{(i_1)} ζ_{j_2}^{(i_2)}`. For
/// single-integral tags the second index is always `0` and `M` multiplies
/// `ζ_{j_1}` alone.
pub fn bilinear_form(tag: Tag, interval: &Interval, q: usize) -> BTreeMap<(usize, usize), f64> {
    let mut c = Collector::default();
    emit_legendre(tag, interval.length(), q, &mut c);
    let mut out = BTreeMap::new();
    for (v, m) in c.linear {
        if let Var::Zeta(_, j) = v {
            *out.entry((j, 0)).or_insert(0.0) += m;
        }
    }
    for ((a, b), m) in c.bilinear {
        if let (Var::Zeta(sa, ja), Var::Zeta(sb, jb)) = (a, b) {
            debug_assert!(sa == 0 && sb == 1);
            *out.entry((ja, jb)).or_insert(0.0) += m;
        }
    }
    out
}

/// Largest `|closed form - generic expansion|` over `pools`, where the generic
/// side is the quadrature table with the tag's monomial weights, restricted
/// to the closed form's index set. Each pool needs `p_max >= max_index(q)`.
pub fn table_residual(id: &IntegralId, interval: &Interval, q: usize, pools: &[GaussianPool]) -> Result<f64> {
    let tag = id.tag;
    let p = tag.max_index(q);
    let form = bilinear_form(tag, interval, q);
    let table = CoefficientTable::compute(&Basis::legendre(*interval), &tag.weights(interval), &vec![p; tag.arity()], None)?;
    let table = if tag.arity() == 1 {
        table.masked(|j| form.contains_key(&(j[0], 0)))
    } else {
        table.masked(|j| form.contains_key(&(j[0], j[1])))
    };
    let sel = NoiseSelector::new(id.indices.clone())?;
    let mut worst: f64 = 0.0;
    for pool in pools {
        let closed = catalog_eval(id, interval, pool, q)?;
        let generic = if tag.arity() == 1 {
            ito_truncated(&table, pool, &sel)?
        } else {
            strat_truncated_k2(&table, pool, &sel)?
        };
        worst = worst.max((closed - generic.value).abs());
    }
    Ok(worst)
}

/// Exact `E[I²]` of the untruncated integral when `i_1 ≠ i_2` (or for
/// single integrals): `∫ψ²` or `∫ψ_2² ∫ψ_1²`.
pub fn exact_second_moment(tag: Tag, interval: &Interval) -> f64 {
    let h = interval.length();
    let e = tag.exponents();
    match e.as_slice() {
        [l] => h.powi(2 * *l as i32 + 1) / (2 * l + 1) as f64,
        [l1, l2] => {
            let a = 2 * l1 + 1;
            let b = 2 * l2 + a + 1;
            h.powi(b as i32) / (a as f64 * b as f64)
        }
        _ => unreachable!("catalog tags have arity 1 or 2"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn id(tag: Tag, i: &[usize]) -> IntegralId {
        IntegralId::new(tag, i.to_vec()).unwrap()
    }

    fn pool(z0: f64, rest: &[(usize, f64)], p: usize) -> GaussianPool {
        let mut pl = GaussianPool::zeros(2, p);
        for i in 1..=2 {
            pl.set(i, 0, z0);
            for &(j, v) in rest {
                pl.set(i, j, v);
            }
        }
        pl
    }

    #[test]
    fn single_examples() {
        let four = Interval::new(0.0, 4.0).unwrap();
        assert_abs_diff_eq!(catalog_eval(&id(Tag::I0, &[1]), &four, &pool(1.0, &[], 3), 0).unwrap(), 2.0);
        let u = Interval::unit();
        assert_abs_diff_eq!(catalog_eval(&id(Tag::I1, &[1]), &u, &pool(1.0, &[], 3), 1).unwrap(), -0.5);
        assert_abs_diff_eq!(
            catalog_eval(&id(Tag::I2, &[1]), &u, &pool(1.0, &[], 3), 0).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn i00_same_component_collapses() {
        let u = Interval::unit();
        for seed in 0..10 {
            let pl = GaussianPool::sample(seed, 1, 12).unwrap();
            for q in [0, 3, 11] {
                let v = catalog_eval(&id(Tag::I00, &[1, 1]), &u, &pl, q).unwrap();
                assert_abs_diff_eq!(v, 0.5 * pl.zeta(1, 0).powi(2), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn i1_is_exact_in_q() {
        let u = Interval::new(0.2, 1.7).unwrap();
        let pl = GaussianPool::sample(9, 1, 40).unwrap();
        let v0 = catalog_eval(&id(Tag::I1, &[1]), &u, &pl, 0).unwrap();
        for q in 1..30 {
            assert_eq!(catalog_eval(&id(Tag::I1, &[1]), &u, &pl, q).unwrap(), v0);
        }
    }

    #[test]
    fn errors() {
        assert!(IntegralId::new(Tag::I00, vec![1]).is_err());
        assert!(IntegralId::new(Tag::I1, vec![0]).is_err());
        assert!("I7".parse::<Tag>().is_err());
        assert_eq!("i10".parse::<Tag>().unwrap(), Tag::I10);
        let u = Interval::unit();
        let small = GaussianPool::zeros(2, 5);
        assert!(catalog_eval(&id(Tag::I02, &[1, 2]), &u, &small, 3).is_err());
        assert!(catalog_eval(&id(Tag::I02, &[1, 2]), &u, &small, 2).is_ok());
        assert!(catalog_eval(&id(Tag::I00, &[1, 3]), &u, &small, 2).is_err());
        let tail = TrigTail::zeros(2, 2);
        assert!(catalog_eval_trig(&id(Tag::I00, &[1, 2]), &u, &small, &tail, 2).is_err());
        assert!(catalog_eval_trig(&id(Tag::I10, &[1, 2]), &u, &small, &tail, 3).is_err());
    }

    #[test]
    fn trig_examples() {
        let u = Interval::unit();
        let pl = pool(1.0, &[(2, 0.7), (4, -0.3)], 8);
        let v = catalog_eval_trig(&id(Tag::I1, &[1]), &u, &pl, &TrigTail::zeros(1, 4), 4).unwrap();
        assert_abs_diff_eq!(v, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(TrigTail::alpha(1), PI * PI / 6.0 - 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(TrigTail::alpha(1), 0.6449341, epsilon = 1e-7);
        let zero = GaussianPool::zeros(2, 10);
        let v = catalog_eval_trig(&id(Tag::I10, &[1, 2]), &u, &zero, &TrigTail::zeros(2, 5), 5).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn tail_constants_decrease() {
        let mut prev = (f64::INFINITY, f64::INFINITY);
        for q in 0..200 {
            let (a, b) = (TrigTail::alpha(q), TrigTail::beta(q));
            assert!(a > 0.0 && b > 0.0 && a < prev.0 && b < prev.1, "q={q}");
            prev = (a, b);
        }
    }

    #[test]
    fn second_moment_examples() {
        let h = 1.7;
        let iv = Interval::new(0.0, h).unwrap();
        assert_abs_diff_eq!(catalog_second_moment(&id(Tag::I0, &[1]), &iv, 0).unwrap(), h, epsilon = 1e-14);
        for tag in [Tag::I1, Tag::I2, Tag::I3] {
            let m = catalog_second_moment(&id(tag, &[1]), &iv, 4).unwrap();
            assert_abs_diff_eq!(m, exact_second_moment(tag, &iv), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(
            catalog_second_moment(&id(Tag::I1, &[1]), &iv, 3).unwrap(),
            h.powi(3) / 3.0,
            epsilon = 1e-13
        );
        for q in [0, 1, 5, 20] {
            let want = h * h / 4.0 * (1.0 + (1..=q).map(|i| 2.0 / (4.0 * (i * i) as f64 - 1.0)).sum::<f64>());
            let got = catalog_second_moment(&id(Tag::I00, &[1, 2]), &iv, q).unwrap();
            assert_abs_diff_eq!(got, want, epsilon = 1e-13);
        }
        // same component: (h/2)² E[ζ⁴] = 3 h²/4
        let got = catalog_second_moment(&id(Tag::I00, &[2, 2]), &iv, 7).unwrap();
        assert_abs_diff_eq!(got, 3.0 * h * h / 4.0, epsilon = 1e-13);
    }

    #[test]
    fn trig_single_second_moments_are_exact() {
        let iv = Interval::new(0.0, 0.8).unwrap();
        for q in [1, 4, 30] {
            for tag in [Tag::I1, Tag::I2] {
                let m = catalog_second_moment_trig(&id(tag, &[1]), &iv, q).unwrap();
                assert_abs_diff_eq!(m, exact_second_moment(tag, &iv), epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn second_moment_matches_sampling_for_same_component() {
        let u = Interval::unit();
        let tag = Tag::I10;
        let q = 3;
        let exact = catalog_second_moment(&id(tag, &[1, 1]), &u, q).unwrap();
        let n = 100_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for seed in 0..n {
            let pl = GaussianPool::sample(seed, 1, tag.max_index(q)).unwrap();
            let v = catalog_eval(&id(tag, &[1, 1]), &u, &pl, q).unwrap();
            s1 += v * v;
            s2 += v.powi(4);
        }
        let mean = s1 / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - exact).abs() < 4.0 * se, "mean {mean} exact {exact} se {se}");
    }
}

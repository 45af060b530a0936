//! Flags and config-file records. Every field is optional so that a flag can
//! override the same key from `--config`; defaults are applied afterwards.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(name = "stratint", version, about = "Fourier-Legendre expansions of iterated stochastic integrals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fourier coefficient table of a multiple kernel.
    Coeffs(Flags<CoeffsArgs>),
    /// Mean-square distance between an expansion and the path oracle.
    Validate(Flags<ValidateArgs>),
    /// Strong convergence order of a one-step scheme.
    Converge(Flags<ConvergeArgs>),
    /// Evaluate a closed-form catalog integral.
    Catalog(Flags<CatalogArgs>),
}

#[derive(Args, Debug)]
pub struct Flags<T: Args> {
    /// JSON file with default values for any of the flags below.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub args: T,
}

/// Keeps `self` where set and fills the rest from `other`.
pub trait Overlay {
    fn overlay(self, other: Self) -> Self;
}

macro_rules! overlay {
    ($ty:ty { $($field:ident),* $(,)? }) => {
        impl Overlay for $ty {
            fn overlay(self, other: Self) -> Self {
                Self { $($field: self.$field.or(other.$field)),* }
            }
        }
    };
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoeffsArgs {
    /// Multiplicity; defaults to the number of orders given.
    #[arg(long)]
    pub k: Option<usize>,
    /// Truncation order per level.
    #[arg(long, num_args = 1..=4)]
    pub p: Option<Vec<usize>>,
    /// Weights, innermost first: a number, `c:<value>` or `m:<exponent>` for (t - τ)^exponent.
    #[arg(long, num_args = 1..=4, allow_negative_numbers = true)]
    pub weights: Option<Vec<String>>,
    #[arg(long, num_args = 2, value_names = ["T0", "T1"], allow_negative_numbers = true)]
    pub interval: Option<Vec<f64>>,
    /// legendre or trig.
    #[arg(long)]
    pub basis: Option<String>,
    #[arg(long)]
    pub quad_points: Option<usize>,
    /// json or csv.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
overlay!(CoeffsArgs { k, p, weights, interval, basis, quad_points, format, out });

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateArgs {
    /// Catalog tag (Legendre closed form); omit to validate a generic series.
    #[arg(long)]
    pub tag: Option<String>,
    /// Noise components `i_1 .. i_k`; 0 selects the time component for series.
    #[arg(long, num_args = 1..=4)]
    pub indices: Option<Vec<usize>>,
    #[arg(long, num_args = 1..=4, allow_negative_numbers = true)]
    pub weights: Option<Vec<String>>,
    #[arg(long)]
    pub basis: Option<String>,
    /// ito or strat (series only).
    #[arg(long)]
    pub kind: Option<String>,
    /// One or more truncation orders, all run on the same paths.
    #[arg(long, num_args = 1..)]
    pub q: Option<Vec<usize>>,
    #[arg(long)]
    pub n_paths: Option<usize>,
    /// Fine steps per path.
    #[arg(long)]
    pub n_steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, num_args = 2, value_names = ["T0", "T1"], allow_negative_numbers = true)]
    pub interval: Option<Vec<f64>>,
    /// Pass when every mean square difference is below this value.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
overlay!(ValidateArgs { tag, indices, weights, basis, kind, q, n_paths, n_steps, seed, interval, threshold, format, out });

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeArgs {
    /// gbm or bilinear.
    #[arg(long)]
    pub problem: Option<String>,
    /// euler, milstein or taylor15.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Step sizes; each must divide the interval length.
    #[arg(long, num_args = 1.., conflicts_with = "levels")]
    pub steps: Option<Vec<f64>>,
    /// Dyadic levels: `--levels 4 8` means h = 2^-4 .. 2^-8.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub levels: Option<Vec<u32>>,
    #[arg(long)]
    pub n_paths: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Truncation order of the series integrals (m > 1).
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub x0: Option<f64>,
    #[arg(long, num_args = 2, value_names = ["T0", "T1"], allow_negative_numbers = true)]
    pub interval: Option<Vec<f64>>,
    /// Fine path steps; defaults to a multiple of every step count.
    #[arg(long)]
    pub fine_steps: Option<usize>,
    /// Fail unless the fitted slope lies in [LO, HI].
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true)]
    pub expect: Option<Vec<f64>>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
overlay!(ConvergeArgs {
    problem, scheme, steps, levels, n_paths, seed, q, mu, sigma, x0, interval, fine_steps, expect, format, out,
});

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogArgs {
    #[arg(long)]
    pub tag: Option<String>,
    #[arg(long, num_args = 1..=2)]
    pub indices: Option<Vec<usize>>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, num_args = 2, value_names = ["T0", "T1"], allow_negative_numbers = true)]
    pub interval: Option<Vec<f64>>,
    /// Trigonometric variant (I1, I2, I10).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub trig: Option<bool>,
    /// Cross-check the Legendre closed form against quadrature tables.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub check: Option<bool>,
    /// Pools used by --check.
    #[arg(long)]
    pub check_pools: Option<usize>,
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
overlay!(CatalogArgs { tag, indices, q, seed, interval, trig, check, check_pools, format, out });

use std::path::PathBuf;

use serde::Serialize;
use serde_json::value::RawValue;

use stratint::catalog::{
    catalog_eval, catalog_eval_trig, catalog_second_moment, catalog_second_moment_trig, table_residual,
};
use stratint::coeffs::half_product_integral;
use stratint::oracle::mc_sweep;
use stratint::report::{f17, fmt17, sig17};
use stratint::rng::derive_seed;
use stratint::sde::{strong_order, strong_order_with_fine};
use stratint::{
    Basis, BasisKind, CoefficientTable, ExpansionKind, GaussianPool, IntegralId, IntegralSpec, Interval, McConfig,
    McReport, Scheme, SdeProblem, Tag, TrigTail, WeightSpec,
};

use crate::args::{CatalogArgs, CoeffsArgs, ConvergeArgs, ValidateArgs};
use crate::{emit, usage, Failure};

const CHECK_TOLERANCE: f64 = 1e-10;
const CHECK_DOMAIN: u64 = 0x6368_6563_6b;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

fn format(raw: Option<String>, default: Format) -> Result<Format, Failure> {
    match raw.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None => Ok(default),
        Some("json") => Ok(Format::Json),
        Some("csv") => Ok(Format::Csv),
        Some(other) => Err(usage(format!("unknown format '{other}' (json or csv)"))),
    }
}

fn interval(raw: Option<Vec<f64>>) -> Result<Interval, Failure> {
    match raw.as_deref() {
        None => Ok(Interval::unit()),
        Some([a, b]) => Ok(Interval::new(*a, *b)?),
        Some(v) => Err(usage(format!("interval takes two values, got {}", v.len()))),
    }
}

fn basis_kind(raw: Option<String>) -> Result<BasisKind, Failure> {
    match raw.as_deref().map(str::to_ascii_lowercase).as_deref() {
        None | Some("legendre") => Ok(BasisKind::Legendre),
        Some("trig") | Some("trigonometric") => Ok(BasisKind::Trigonometric),
        Some(other) => Err(usage(format!("unknown basis '{other}' (legendre or trig)"))),
    }
}

/// `1.5` or `c:1.5` is a constant, `m:2` is `(t - τ)²` anchored at the
/// interval start.
fn weight(token: &str, iv: &Interval) -> Result<WeightSpec, Failure> {
    let bad = || usage(format!("bad weight '{token}' (number, c:<value> or m:<exponent>)"));
    if let Some(e) = token.strip_prefix("m:") {
        return Ok(WeightSpec::monomial(iv, e.parse().map_err(|_| bad())?));
    }
    let v: f64 = token.strip_prefix("c:").unwrap_or(token).parse().map_err(|_| bad())?;
    if !v.is_finite() {
        return Err(bad());
    }
    Ok(WeightSpec::Constant(v))
}

fn weights(raw: Option<Vec<String>>, k: usize, iv: &Interval) -> Result<Vec<WeightSpec>, Failure> {
    let tokens = raw.unwrap_or_else(|| vec!["1".into(); k]);
    if tokens.len() != k {
        return Err(usage(format!("{} weights for k = {k}", tokens.len())));
    }
    tokens.iter().map(|t| weight(t, iv)).collect()
}

fn tag(raw: &str) -> Result<Tag, Failure> {
    Ok(raw.parse::<Tag>()?)
}

fn default_indices(arity: usize) -> Vec<usize> {
    (1..=arity).collect()
}

fn raw(v: f64) -> Result<Box<RawValue>, Failure> {
    Ok(sig17(v)?)
}

fn json<T: Serialize>(v: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::Run(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_header<T: Serialize>(config: &T) -> Result<String, Failure> {
    let c = serde_json::to_string(config).map_err(|e| Failure::Run(e.to_string()))?;
    Ok(format!("# config {c}\n"))
}

#[derive(Serialize)]
struct CoeffsConfig {
    command: &'static str,
    k: usize,
    p: Vec<usize>,
    weights: Vec<WeightSpec>,
    interval: Interval,
    basis: BasisKind,
    quad_points: Option<usize>,
    format: Format,
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Trace {
    p: usize,
    #[serde(with = "f17")]
    partial_sum: f64,
    #[serde(with = "f17")]
    target: f64,
}

pub fn coeffs(a: CoeffsArgs) -> Result<bool, Failure> {
    let p = a.p.ok_or_else(|| usage("coeffs needs --p"))?;
    let k = a.k.unwrap_or(p.len());
    if k != p.len() {
        return Err(usage(format!("--k {k} but {} orders given", p.len())));
    }
    let iv = interval(a.interval)?;
    let cfg = CoeffsConfig {
        command: "coeffs",
        k,
        weights: weights(a.weights, k, &iv)?,
        p,
        interval: iv,
        basis: basis_kind(a.basis)?,
        quad_points: a.quad_points,
        format: format(a.format, Format::Json)?,
        out: a.out,
    };
    let table = CoefficientTable::compute(&Basis::new(cfg.basis, iv), &cfg.weights, &cfg.p, cfg.quad_points)?;
    let trace = if k == 2 {
        let p = cfg.p[0].min(cfg.p[1]);
        let t = Trace {
            p,
            partial_sum: table.trace_sum(p)?,
            target: half_product_integral(&iv, &cfg.weights[0], &cfg.weights[1], 64)?,
        };
        eprintln!("trace_sum p={p}: {} target {}", fmt17(t.partial_sum), fmt17(t.target));
        Some(t)
    } else {
        None
    };

    let text = match cfg.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                config: &'a CoeffsConfig,
                trace: Option<Trace>,
                table: Box<RawValue>,
            }
            let table = RawValue::from_string(table.to_json()?).map_err(|e| Failure::Run(e.to_string()))?;
            json(&Out { config: &cfg, trace, table })?
        }
        Format::Csv => {
            let mut s = csv_header(&cfg)?;
            let cols: Vec<String> = (1..=k).map(|l| format!("j{l}")).collect();
            s.push_str(&format!("{},value\n", cols.join(",")));
            for (o, v) in table.values().iter().enumerate() {
                let j: Vec<String> = table.index_of(o).iter().map(usize::to_string).collect();
                s.push_str(&format!("{},{}\n", j.join(","), fmt17(*v)));
            }
            s
        }
    };
    emit(cfg.out.as_deref(), &text)?;
    Ok(true)
}

#[derive(Serialize)]
struct ValidateConfig {
    command: &'static str,
    spec: IntegralSpec,
    q: Vec<usize>,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    interval: Interval,
    threshold: f64,
    format: Format,
    out: Option<PathBuf>,
}

pub fn validate(a: ValidateArgs) -> Result<bool, Failure> {
    let iv = interval(a.interval)?;
    let spec = match a.tag {
        Some(t) => {
            let t = tag(&t)?;
            if a.weights.is_some() || a.basis.is_some() || a.kind.is_some() {
                return Err(usage("--weights, --basis and --kind apply to series, not catalog tags"));
            }
            let indices = a.indices.unwrap_or_else(|| default_indices(t.arity()));
            IntegralSpec::Catalog { id: IntegralId::new(t, indices)? }
        }
        None => {
            let indices = a.indices.unwrap_or_else(|| vec![1, 2]);
            let kind = match a.kind.as_deref().map(str::to_ascii_lowercase).as_deref() {
                None | Some("ito") => ExpansionKind::Ito,
                Some("strat") | Some("stratonovich") => ExpansionKind::Stratonovich,
                Some(other) => return Err(usage(format!("unknown kind '{other}' (ito or strat)"))),
            };
            IntegralSpec::Series {
                basis: basis_kind(a.basis)?,
                weights: weights(a.weights, indices.len(), &iv)?,
                indices,
                kind,
            }
        }
    };
    let cfg = ValidateConfig {
        command: "validate",
        spec,
        q: a.q.unwrap_or_else(|| vec![10]),
        n_paths: a.n_paths.unwrap_or(1000),
        n_steps: a.n_steps.unwrap_or(10_000),
        seed: a.seed.unwrap_or(0),
        interval: iv,
        // the same-component oracle threshold, scaled by (T - t)²
        threshold: a.threshold.unwrap_or(5e-3 * iv.length().powi(2)),
        format: format(a.format, Format::Json)?,
        out: a.out,
    };
    if cfg.n_paths < 2 {
        return Err(usage("--n-paths must be at least 2"));
    }
    let mc = McConfig {
        seed: cfg.seed,
        n_paths: cfg.n_paths,
        n_steps: cfg.n_steps,
        interval: iv,
        q: cfg.q[0],
        spec: cfg.spec.clone(),
    };
    let reports = mc_sweep(&mc, &cfg.q)?;
    let pass = reports.iter().all(|r| r.mean_sq_diff < cfg.threshold);
    for r in &reports {
        eprintln!("q={}: mean_sq_diff {} ± {}", r.config.q, fmt17(r.mean_sq_diff), fmt17(r.std_err));
    }

    let text = match cfg.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                config: &'a ValidateConfig,
                pass: bool,
                reports: &'a [McReport],
            }
            json(&Out { config: &cfg, pass, reports: &reports })?
        }
        Format::Csv => {
            let mut s = csv_header(&cfg)?;
            s.push_str("q,mean_sq_diff,std_err\n");
            for r in &reports {
                s.push_str(&format!("{},{},{}\n", r.config.q, fmt17(r.mean_sq_diff), fmt17(r.std_err)));
            }
            s
        }
    };
    emit(cfg.out.as_deref(), &text)?;
    if !pass {
        eprintln!("mean square difference not below threshold {}", fmt17(cfg.threshold));
    }
    Ok(pass)
}

#[derive(Serialize)]
struct ConvergeConfig {
    command: &'static str,
    problem: String,
    scheme: Scheme,
    steps: Vec<f64>,
    n_paths: usize,
    seed: u64,
    q: Option<usize>,
    gbm: Option<[f64; 3]>,
    interval: Interval,
    fine_steps: Option<usize>,
    expect: Option<[f64; 2]>,
    format: Format,
    out: Option<PathBuf>,
}

pub fn converge(a: ConvergeArgs) -> Result<bool, Failure> {
    let iv = interval(a.interval)?;
    let problem_name = a.problem.unwrap_or_else(|| "gbm".into()).to_ascii_lowercase();
    let (problem, gbm) = match problem_name.as_str() {
        "gbm" => {
            let (mu, sigma, x0) = (a.mu.unwrap_or(1.5), a.sigma.unwrap_or(1.0), a.x0.unwrap_or(1.0));
            (SdeProblem::gbm(mu, sigma, x0, iv), Some([mu, sigma, x0]))
        }
        "bilinear" => {
            if a.mu.is_some() || a.sigma.is_some() || a.x0.is_some() {
                return Err(usage("--mu, --sigma and --x0 apply to the gbm problem"));
            }
            (SdeProblem::bilinear_example(iv), None)
        }
        other => return Err(usage(format!("unknown problem '{other}' (gbm or bilinear)"))),
    };
    let steps = match (a.steps, a.levels) {
        (Some(_), Some(_)) => return Err(usage("give --steps or --levels, not both")),
        (Some(s), None) => s,
        (None, levels) => {
            let l = levels.unwrap_or_else(|| vec![4, 8]);
            if l.len() != 2 || l[0] > l[1] {
                return Err(usage("--levels takes LO <= HI"));
            }
            (l[0]..=l[1]).map(|k| 2f64.powi(-(k as i32))).collect()
        }
    };
    let expect = match a.expect.as_deref() {
        None => None,
        Some([lo, hi]) if lo <= hi => Some([*lo, *hi]),
        Some(_) => return Err(usage("--expect takes LO <= HI")),
    };
    let cfg = ConvergeConfig {
        command: "converge",
        problem: problem_name,
        scheme: a.scheme.as_deref().unwrap_or("euler").parse()?,
        steps,
        n_paths: a.n_paths.unwrap_or(1000),
        seed: a.seed.unwrap_or(0),
        q: a.q,
        gbm,
        interval: iv,
        fine_steps: a.fine_steps,
        expect,
        format: format(a.format, Format::Csv)?,
        out: a.out,
    };
    let report = match cfg.fine_steps {
        Some(n) => strong_order_with_fine(&problem, cfg.scheme, &cfg.steps, cfg.n_paths, cfg.seed, cfg.q, n)?,
        None => strong_order(&problem, cfg.scheme, &cfg.steps, cfg.n_paths, cfg.seed, cfg.q)?,
    };
    eprintln!("{} {}: slope {:.4}", cfg.problem, cfg.scheme.name(), report.slope);

    let text = match cfg.format {
        Format::Csv => csv_header(&cfg)? + &report.to_csv(),
        Format::Json => {
            let r = RawValue::from_string(report.to_json()?).map_err(|e| Failure::Run(e.to_string()))?;
            #[derive(Serialize)]
            struct Out<'a> {
                config: &'a ConvergeConfig,
                report: Box<RawValue>,
            }
            json(&Out { config: &cfg, report: r })?
        }
    };
    emit(cfg.out.as_deref(), &text)?;
    let pass = cfg.expect.is_none_or(|[lo, hi]| report.slope >= lo && report.slope <= hi);
    if !pass {
        eprintln!("slope {:.4} outside the expected window", report.slope);
    }
    Ok(pass)
}

#[derive(Serialize)]
struct CatalogConfig {
    command: &'static str,
    id: IntegralId,
    q: usize,
    seed: u64,
    interval: Interval,
    trig: bool,
    check: bool,
    check_pools: usize,
    format: Format,
    out: Option<PathBuf>,
}

pub fn catalog(a: CatalogArgs) -> Result<bool, Failure> {
    let t = tag(a.tag.as_deref().ok_or_else(|| usage("catalog needs --tag"))?)?;
    let cfg = CatalogConfig {
        command: "catalog",
        id: IntegralId::new(t, a.indices.unwrap_or_else(|| default_indices(t.arity())))?,
        q: a.q.unwrap_or(10),
        seed: a.seed.unwrap_or(0),
        interval: interval(a.interval)?,
        trig: a.trig.unwrap_or(false),
        check: a.check.unwrap_or(false),
        check_pools: a.check_pools.unwrap_or(100),
        format: format(a.format, Format::Json)?,
        out: a.out,
    };
    if cfg.trig && cfg.check {
        return Err(usage("--check compares the Legendre closed form; drop --trig"));
    }
    let (id, iv, q) = (&cfg.id, &cfg.interval, cfg.q);
    let m = id.indices.iter().copied().max().unwrap_or(1);

    let mut rows: Vec<(&str, f64)> = Vec::new();
    if cfg.trig {
        let p = t.trig_max_index(q).ok_or_else(|| usage(format!("{} has no trigonometric variant", t.name())))?;
        let pool = GaussianPool::sample(cfg.seed, m, p)?;
        rows.push(("value", catalog_eval_trig(id, iv, &pool, &TrigTail::sample(cfg.seed, m, q), q)?));
        let trig = catalog_second_moment_trig(id, iv, q)?;
        let leg = catalog_second_moment(id, iv, q)?;
        rows.push(("second_moment", trig));
        rows.push(("legendre_second_moment", leg));
        rows.push(("relative_difference", (trig - leg).abs() / leg.abs()));
    } else {
        let pool = GaussianPool::sample(cfg.seed, m, t.max_index(q))?;
        rows.push(("value", catalog_eval(id, iv, &pool, q)?));
        rows.push(("second_moment", catalog_second_moment(id, iv, q)?));
    }
    let mut pass = true;
    if cfg.check {
        let pools = (0..cfg.check_pools as u64)
            .map(|k| GaussianPool::sample(derive_seed(cfg.seed, CHECK_DOMAIN, k), m, t.max_index(q)))
            .collect::<Result<Vec<_>, _>>()?;
        let r = table_residual(id, iv, q, &pools)?;
        rows.push(("residual", r));
        pass = r < CHECK_TOLERANCE;
        if !pass {
            eprintln!("table residual {} exceeds {CHECK_TOLERANCE:e}", fmt17(r));
        }
    }
    for (k, v) in &rows {
        eprintln!("{k}: {}", fmt17(*v));
    }

    let text = match cfg.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                config: &'a CatalogConfig,
                #[serde(flatten)]
                values: std::collections::BTreeMap<&'a str, Box<RawValue>>,
            }
            let values = rows.iter().map(|(k, v)| Ok((*k, raw(*v)?))).collect::<Result<_, Failure>>()?;
            json(&Out { config: &cfg, values })?
        }
        Format::Csv => {
            let mut s = csv_header(&cfg)?;
            s.push_str("quantity,value\n");
            for (k, v) in &rows {
                s.push_str(&format!("{k},{}\n", fmt17(*v)));
            }
            s
        }
    };
    emit(cfg.out.as_deref(), &text)?;
    Ok(pass)
}

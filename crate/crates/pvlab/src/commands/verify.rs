//! The five-part consistency suite behind `pvlab verify`.
//!
//! | item | check |
//! |------|-------|
//! | a | `L*` never increases along randomized nested contexts (Gaussian) |
//! | b | first-order chains: adding frames beyond `T-1` changes nothing (Gaussian and discrete) |
//! | c | high-order chains: pinned values by Schur complement and Monte Carlo; strict gaps on randomized chains |
//! | d | discrete enumeration: flip chain value, zero order-1 gaps, strict order-2 gaps |
//! | e | least-squares predictors on sampled chains agree with the oracle |

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use pvlab_core::discrete::{conditional_error_discrete, enumerate_joint, nested_context_report_discrete, DiscreteChainSpec};
use pvlab_core::gauss::{build_joint, optimal_predictor, sample_chain, nested_context_report, GaussianSource};
use pvlab_core::markov::ChainKind;
use pvlab_core::predictor::{compare_context_sizes, evaluate, Dataset, GaussianChain};
use pvlab_core::rng::{index_below, standard_normal, uniform_range};
use pvlab_core::{Context, NoiseSchedule, OracleReport, RngSpec, Tolerances};

use crate::config::VerifyConfig;
use crate::error::RunError;
use crate::format::fmt_g12;
use crate::output::OutputDir;

pub const VERIFY_CSV: &str = "verify.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub item: char,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Sweep = fn(&VerifyConfig, RngSpec) -> Result<(bool, String), RunError>;

const SWEEPS: [(char, &str, Sweep); 5] = [
    ('a', "gaussian monotonicity", monotonicity),
    ('b', "first-order equality", first_order_equality),
    ('c', "high-order strict gap", high_order_gap),
    ('d', "discrete enumeration", discrete_enumeration),
    ('e', "empirical k=1 vs k=2", empirical_comparison),
];

/// Runs every sweep; sweep `i` draws from stream `i` of the seed. An error
/// inside a sweep counts as a failure of that sweep.
pub fn run_sweeps(cfg: &VerifyConfig) -> Vec<SweepResult> {
    SWEEPS
        .par_iter()
        .enumerate()
        .map(|(i, (item, name, f))| {
            log::info!("sweep ({item}) {name}");
            let (passed, detail) = f(cfg, RngSpec::new(cfg.seed, i as u64)).unwrap_or_else(|e| (false, format!("error: {e}")));
            SweepResult { item: *item, name, passed, detail }
        })
        .collect()
}

pub fn render_table(results: &[SweepResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut s = String::new();
    for r in results {
        s += &format!("({}) {:<width$}  {}  {}\n", r.item, r.name, if r.passed { "PASS" } else { "FAIL" }, r.detail);
    }
    let n = results.iter().filter(|r| r.passed).count();
    s += &format!("{n}/{} PASS\n", results.len());
    s
}

pub fn verify(cfg: &VerifyConfig, out: &mut OutputDir) -> Result<(), RunError> {
    let results = run_sweeps(cfg);
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| RunError::Io(e.to_string());
    w.write_record(["item", "check", "result", "detail"]).map_err(io)?;
    for r in &results {
        w.write_record([r.item.to_string().as_str(), r.name, if r.passed { "PASS" } else { "FAIL" }, &r.detail]).map_err(io)?;
    }
    out.write(VERIFY_CSV, &w.into_inner().map_err(|e| RunError::Io(e.to_string()))?)?;
    let table = render_table(&results);
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(table.as_bytes()).and_then(|_| stdout.flush()).map_err(|e| RunError::Io(e.to_string()))?;
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| format!("({}) {}", r.item, r.name)).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(RunError::Assertion(format!("failed: {}", failed.join(", "))))
    }
}

/// A random Gaussian source of dimension `dim`: covariance `AAᵀ/d + 0.1 I`
/// with standard normal `A`, standard normal mean.
pub fn random_source(dim: usize, rng: RngSpec) -> Result<GaussianSource, RunError> {
    let mut s = rng.rng();
    let a = DMatrix::from_fn(dim, dim, |_, _| standard_normal(&mut s));
    let mut cov = &a * a.transpose() / dim as f64 + DMatrix::identity(dim, dim) * 0.1;
    cov = (&cov + cov.transpose()) * 0.5;
    let mean = DVector::from_fn(dim, |_, _| standard_normal(&mut s));
    Ok(GaussianSource::new(mean, cov)?)
}

/// Random chain with `min_frames..=max_frames` frames and betas drawn
/// uniformly from `betas`.
pub fn random_chain(
    high_order: Option<bool>,
    max_dim: usize,
    frames: (usize, usize),
    betas: (f64, f64),
    rng: RngSpec,
) -> Result<(GaussianSource, ChainKind), RunError> {
    let mut s = rng.rng();
    let dim = 1 + index_below(&mut s, max_dim);
    let t = frames.0 + index_below(&mut s, frames.1 - frames.0 + 1);
    let high = high_order.unwrap_or_else(|| index_below(&mut s, 2) == 1);
    let schedule = NoiseSchedule::new((1..t).map(|_| uniform_range(&mut s, betas.0, betas.1)).collect())?;
    let kind = if high { ChainKind::HighOrder(schedule) } else { ChainKind::FirstOrder(schedule) };
    Ok((random_source(dim, rng.child(0))?, kind))
}

/// Nested contexts adding the lags `1..T` in a random order, optionally
/// starting from lag 1.
pub fn random_nested(n_frames: usize, start_recent: bool, rng: RngSpec) -> Result<Vec<Context>, RunError> {
    let mut s = rng.rng();
    let mut lags: Vec<usize> = (1..n_frames).collect();
    let fixed = usize::from(start_recent);
    for i in (fixed + 1..lags.len()).rev() {
        let j = fixed + index_below(&mut s, i - fixed + 1);
        lags.swap(i, j);
    }
    (1..=lags.len()).map(|k| Ok(Context::new(lags[..k].to_vec())?)).collect()
}

fn max_abs_gap(r: &OracleReport) -> f64 {
    r.gaps().iter().fold(0.0, |m, g| m.max(g.abs()))
}

fn monotonicity(cfg: &VerifyConfig, rng: RngSpec) -> Result<(bool, String), RunError> {
    let tol = Tolerances::default();
    let reports = (0..cfg.monotone_configs)
        .into_par_iter()
        .map(|i| {
            let r = rng.child(i as u64);
            let (src, kind) = random_chain(None, cfg.max_dim, (2, cfg.max_frames), (0.01, 0.99), r)?;
            let joint = build_joint(&src, &kind, kind.n_frames())?;
            Ok(nested_context_report(&joint, &random_nested(kind.n_frames(), false, r.child(1))?, tol)?)
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let worst_rise = reports.iter().flat_map(|r| r.gaps()).fold(0.0f64, |m, g| m.max(-g)) + 0.0;
    let identity = reports.iter().map(OracleReport::max_identity_error).fold(0.0, f64::max);
    let violations = reports.iter().filter(|r| !r.is_monotone(tol.monotone)).count();
    Ok((
        violations == 0,
        format!("{} configs, {violations} violations, max rise {}, max identity error {}", reports.len(), fmt_g12(worst_rise), fmt_g12(identity)),
    ))
}

fn first_order_equality(cfg: &VerifyConfig, rng: RngSpec) -> Result<(bool, String), RunError> {
    let tol = Tolerances::default();
    let n = cfg.equality_configs;
    let gaussian = (0..n)
        .into_par_iter()
        .map(|i| {
            let r = rng.child(i as u64);
            let (src, kind) = random_chain(Some(false), cfg.max_dim, (3, cfg.max_frames), (0.01, 0.99), r)?;
            let joint = build_joint(&src, &kind, kind.n_frames())?;
            Ok(max_abs_gap(&nested_context_report(&joint, &random_nested(kind.n_frames(), true, r.child(1))?, tol)?))
        })
        .collect::<Result<Vec<f64>, RunError>>()?;
    let discrete = (0..n)
        .into_par_iter()
        .map(|i| {
            let r = rng.child((n + i) as u64);
            let mut s = r.rng();
            let t = 3 + index_below(&mut s, 3);
            let spec = match i % 3 {
                0 => DiscreteChainSpec::random(2 + index_below(&mut s, 2), &vec![1; t - 1], r.child(0))?,
                1 => DiscreteChainSpec::binary_flip_chain(t, uniform_range(&mut s, 0.01, 0.49))?,
                _ => DiscreteChainSpec::sign_quantized_first_order(1.0, &(1..t).map(|_| uniform_range(&mut s, 0.01, 0.99)).collect::<Vec<_>>())?,
            };
            let nested = random_nested(t, true, r.child(1))?;
            Ok(max_abs_gap(&nested_context_report_discrete(&spec, &spec.default_values(), &nested, tol)?))
        })
        .collect::<Result<Vec<f64>, RunError>>()?;
    let g = gaussian.iter().fold(0.0f64, |m, &x| m.max(x));
    let d = discrete.iter().fold(0.0f64, |m, &x| m.max(x));
    Ok((
        g < tol.equality && d < tol.equality,
        format!("{n} gaussian + {n} discrete chains, max |gap| {} / {}", fmt_g12(g), fmt_g12(d)),
    ))
}

/// Oracle and Monte-Carlo `L*` of the `d = 1`, `β = (0.5, 0.5)` high-order
/// chain for contexts `{T-1}` and `{T-1,T-2}`.
pub fn pinned_high_order(samples: usize, rng: RngSpec) -> Result<[(f64, f64); 2], RunError> {
    let src = GaussianSource::isotropic(1, 1.0)?;
    let kind = ChainKind::HighOrder(NoiseSchedule::new(vec![0.5, 0.5])?);
    let joint = build_joint(&src, &kind, 3)?;
    let draws = sample_chain(&src, &kind, samples, rng)?;
    let mut out = [(0.0, 0.0); 2];
    for (k, slot) in (1..=2).zip(out.iter_mut()) {
        let p = optimal_predictor(&joint, &Context::recent(k)?)?;
        let mc = evaluate(&p, &Dataset::last_frame(&draws, k)?)?.mse;
        *slot = (p.residual_error, mc);
    }
    Ok(out)
}

fn high_order_gap(cfg: &VerifyConfig, rng: RngSpec) -> Result<(bool, String), RunError> {
    let tol = Tolerances::default();
    let [(l1, m1), (l2, m2)] = pinned_high_order(cfg.monte_carlo_samples, rng.child(0))?;
    let exact_ok = (l1 - 0.5).abs() < 1e-12 && (l2 - 4.0 / 9.0).abs() < 1e-12 && (l1 - l2 - 1.0 / 18.0).abs() < 1e-12;
    let mc_ok = (m1 - l1).abs() < 0.01 * l1 && (m2 - l2).abs() < 0.01 * l2;
    let gaps = (0..cfg.strict_configs)
        .into_par_iter()
        .map(|i| {
            let r = rng.child(1 + i as u64);
            let (src, kind) = random_chain(Some(true), cfg.max_dim, (3, cfg.max_frames), (0.05, 0.95), r)?;
            let joint = build_joint(&src, &kind, kind.n_frames())?;
            let rep = nested_context_report(&joint, &[Context::recent(1)?, Context::recent(2)?], tol)?;
            Ok(rep.rows[1].gap_to_prev.unwrap())
        })
        .collect::<Result<Vec<f64>, RunError>>()?;
    let min_gap = gaps.iter().fold(f64::INFINITY, |m, &g| m.min(g));
    let strict_ok = gaps.iter().all(|&g| g > tol.strict_margin);
    Ok((
        exact_ok && mc_ok && strict_ok,
        format!(
            "L* {} / {} (MC {} / {}), {} random chains min gap {}",
            fmt_g12(l1),
            fmt_g12(l2),
            fmt_g12(m1),
            fmt_g12(m2),
            gaps.len(),
            fmt_g12(min_gap)
        ),
    ))
}

fn discrete_enumeration(cfg: &VerifyConfig, rng: RngSpec) -> Result<(bool, String), RunError> {
    let tol = Tolerances::default();
    let flip = DiscreteChainSpec::binary_flip_chain(3, 0.1)?;
    let l = conditional_error_discrete(&enumerate_joint(&flip)?, &flip.default_values(), &Context::recent(1)?)?;
    let flip_ok = (l - 0.09).abs() < 1e-12;

    let order_one = (0..cfg.equality_configs)
        .into_par_iter()
        .map(|i| {
            let spec = DiscreteChainSpec::random(2 + i % 2, &[1, 1, 1], rng.child(1 + i as u64))?;
            let nested: Vec<Context> = (1..4).map(Context::recent).collect::<Result<_, _>>()?;
            Ok(max_abs_gap(&nested_context_report_discrete(&spec, &spec.default_values(), &nested, tol)?))
        })
        .collect::<Result<Vec<f64>, RunError>>()?;
    let zero = order_one.iter().fold(0.0f64, |m, &g| m.max(g));

    let base = 1 + cfg.equality_configs as u64;
    let order_two = (0..cfg.discrete_specs)
        .into_par_iter()
        .map(|i| {
            let spec = DiscreteChainSpec::random(2, &[1, 2], rng.child(base + i as u64))?;
            let rep = nested_context_report_discrete(&spec, &spec.default_values(), &[Context::recent(1)?, Context::recent(2)?], tol)?;
            Ok(rep.rows[1].gap_to_prev.unwrap())
        })
        .collect::<Result<Vec<f64>, RunError>>()?;
    let nonneg = order_two.iter().all(|&g| g >= -tol.equality);
    let strict = order_two.iter().filter(|&&g| g > 1e-8).count();
    Ok((
        flip_ok && zero < tol.equality && nonneg && strict >= cfg.discrete_min_strict,
        format!(
            "flip L* {}, order-1 max |gap| {}, order-2 strict {strict}/{} (need {})",
            fmt_g12(l),
            fmt_g12(zero),
            order_two.len(),
            cfg.discrete_min_strict
        ),
    ))
}

fn empirical_comparison(cfg: &VerifyConfig, rng: RngSpec) -> Result<(bool, String), RunError> {
    let n = cfg.empirical_samples;
    let run = |high: bool, stream: u64| {
        let s = NoiseSchedule::new(vec![0.5, 0.5])?;
        let kind = if high { ChainKind::HighOrder(s) } else { ChainKind::FirstOrder(s) };
        let chain = GaussianChain::new(GaussianSource::isotropic(1, 1.0)?, kind);
        Ok::<_, RunError>(compare_context_sizes(&chain, 1, 2, n, n, 0.0, rng.child(stream))?)
    };
    let (first, high) = rayon::join(|| run(false, 0), || run(true, 1));
    let (first, high) = (first?, high?);
    let close = |c: &pvlab_core::predictor::ContextComparison| {
        (c.small.mse - c.oracle_small).abs() < 0.02 * c.oracle_small && (c.large.mse - c.oracle_large).abs() < 0.02 * c.oracle_large
    };
    let ok = close(&first) && close(&high) && high.strictly_improves() && first.indistinguishable();
    Ok((
        ok,
        format!(
            "first-order diff {} (±{}), high-order diff {} (±{}), mse {} {} {} {}",
            fmt_g12(first.difference),
            fmt_g12(first.slack()),
            fmt_g12(high.difference),
            fmt_g12(high.slack()),
            fmt_g12(first.small.mse),
            fmt_g12(first.large.mse),
            fmt_g12(high.small.mse),
            fmt_g12(high.large.mse)
        ),
    ))
}

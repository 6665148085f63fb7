use rayon::prelude::*;

use pvlab_core::discrete::{nested_context_report_discrete, DiscreteChainSpec};
use pvlab_core::gauss::{build_joint, nested_context_report};
use pvlab_core::{OracleReport, RngSpec, Tolerances};

use crate::config::{OracleChain, OracleConfig, OracleRun};
use crate::error::RunError;
use crate::format::write_oracle_csv;
use crate::output::OutputDir;

pub const ORACLE_CSV: &str = "oracle.csv";

/// Report for one configured run. Random discrete chains draw their kernels
/// from stream `index` of the seed.
pub fn oracle_report(run: &OracleRun, seed: u64, index: usize) -> Result<OracleReport, RunError> {
    let tol = Tolerances::default();
    Ok(match &run.chain {
        OracleChain::Gaussian(g) => {
            let kind = g.kind()?;
            let joint = build_joint(&g.source()?, &kind, kind.n_frames())?;
            nested_context_report(&joint, &run.contexts(kind.n_frames())?, tol)?
        }
        other => {
            let spec = match other {
                OracleChain::DiscreteFlip { n_frames, flip } => DiscreteChainSpec::binary_flip_chain(*n_frames, *flip)?,
                OracleChain::DiscreteRandom { alphabet, orders } => DiscreteChainSpec::random(*alphabet, orders, RngSpec::new(seed, index as u64))?,
                OracleChain::DiscreteSignQuantized { variance, betas } => DiscreteChainSpec::sign_quantized_first_order(*variance, betas)?,
                OracleChain::Gaussian(_) => unreachable!(),
            };
            nested_context_report_discrete(&spec, &spec.default_values(), &run.contexts(spec.n_frames())?, tol)?
        }
    })
}

/// Writes `oracle.csv` and fails if any `L*` increases along its chain.
pub fn oracle(cfg: &OracleConfig, out: &mut OutputDir) -> Result<(), RunError> {
    log::info!("computing {} oracle runs", cfg.runs.len());
    let reports = cfg
        .runs
        .par_iter()
        .enumerate()
        .map(|(i, run)| oracle_report(run, cfg.seed, i).map_err(|e| tag(i, e)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut buf = Vec::new();
    write_oracle_csv(&mut buf, &reports).map_err(|e| RunError::Io(e.to_string()))?;
    out.write(ORACLE_CSV, &buf)?;

    let tol = Tolerances::default().monotone;
    let mut violations = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        if let Some(row) = r.first_monotonicity_violation(tol) {
            let bad = &r.rows[row];
            violations.push(format!("run {i} ({}), context {}: L* rose by {:e}", r.chain_kind, bad.context, -bad.gap_to_prev.unwrap()));
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        for v in &violations {
            log::error!("{v}");
        }
        Err(RunError::Assertion(violations.join("; ")))
    }
}

fn tag(i: usize, e: RunError) -> RunError {
    match e {
        RunError::Assertion(m) => RunError::Assertion(format!("run {i}: {m}")),
        RunError::Config(m) => RunError::Config(format!("run {i}: {m}")),
        RunError::Io(m) => RunError::Io(format!("run {i}: {m}")),
    }
}

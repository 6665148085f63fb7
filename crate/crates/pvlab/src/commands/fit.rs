use rayon::prelude::*;

use pvlab_core::gauss::{build_joint, conditional_error, sample_chain};
use pvlab_core::predictor::{evaluate, fit_linear, fit_mlp, Dataset, EvalReport, EvalRow, Evaluation, TrainConfig};
use pvlab_core::{Context, RngSpec};

use crate::config::{FitConfig, FitExperiment, ModelConfig};
use crate::error::RunError;
use crate::format::write_eval_csv;
use crate::output::OutputDir;

pub const EVAL_CSV: &str = "eval.csv";

/// Rows for one experiment: training draws from `child(0)` and test draws
/// from `child(1)` of stream `index`, shared by all context sizes.
pub fn fit_experiment(exp: &FitExperiment, seed: u64, index: usize) -> Result<Vec<EvalRow>, RunError> {
    let source = exp.chain.source()?;
    let kind = exp.chain.kind()?;
    let t = kind.n_frames();
    let joint = build_joint(&source, &kind, t)?;
    let rng = RngSpec::new(seed, index as u64);
    let train = sample_chain(&source, &kind, exp.n_train, rng.child(0))?;
    let test = sample_chain(&source, &kind, exp.n_test, rng.child(1))?;
    exp.context_sizes
        .iter()
        .map(|&k| {
            let train_set = Dataset::last_frame(&train, k)?;
            let test_set = Dataset::last_frame(&test, k)?;
            let eval: Evaluation = match &exp.model {
                ModelConfig::Linear => evaluate(&fit_linear(&train_set, k, exp.ridge)?, &test_set)?,
                ModelConfig::Mlp { hidden, step_size, epochs, batch_size } => {
                    let cfg = TrainConfig { hidden: *hidden, step_size: *step_size, epochs: *epochs, batch_size: *batch_size, rng: rng.child(1 + k as u64) };
                    evaluate(&fit_mlp(&train_set, k, &cfg)?.model, &test_set)?
                }
            };
            Ok(EvalRow {
                chain_kind: kind.name().to_string(),
                n_frames: t,
                dim: source.dim(),
                k,
                n_train: exp.n_train,
                n_test: exp.n_test,
                mse: eval.mse,
                mse_std_error: eval.mse_std_error,
                oracle_lstar: Some(conditional_error(&joint, &Context::recent(k)?)?),
                psnr_db: eval.psnr_db,
                mean_gap: None,
                cov_frobenius_gap: None,
                teacher_forced: None,
                seed,
            })
        })
        .collect()
}

pub fn fit(cfg: &FitConfig, out: &mut OutputDir) -> Result<(), RunError> {
    log::info!("fitting {} experiments", cfg.experiments.len());
    let rows = cfg
        .experiments
        .par_iter()
        .enumerate()
        .map(|(i, e)| fit_experiment(e, cfg.seed, i))
        .collect::<Result<Vec<_>, _>>()?;
    let report = EvalReport { rows: rows.into_iter().flatten().collect() };
    let mut buf = Vec::new();
    write_eval_csv(&mut buf, &report).map_err(|e| RunError::Io(e.to_string()))?;
    out.write(EVAL_CSV, &buf)
}

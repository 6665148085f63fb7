use pvlab_core::gauss::{build_joint, conditional_error, sample_chain};
use pvlab_core::predictor::{
    autoregressive_generate, fit_shared_predictor, fit_step_predictors, oracle_step_predictors, EvalReport, EvalRow, GenConfig, Generation,
    ResidualStd, StepPredictors,
};
use pvlab_core::stats::psnr;
use pvlab_core::{Context, Frame, PseudoVideo, RngSpec, Shape};

use crate::config::{GenPredictor, GenerateConfig};
use crate::error::RunError;
use crate::format::write_eval_csv;
use crate::output::OutputDir;
use crate::tensor::encode_video;

pub const EVAL_CSV: &str = "eval.csv";

/// Runs the configured generation. Reference videos come from `child(1)`,
/// training chains from `child(0)` and sampling noise from `child(2)`.
pub fn run_generation(cfg: &GenerateConfig) -> Result<Generation, RunError> {
    let source = cfg.chain.source()?;
    let kind = cfg.chain.kind()?;
    let rng = RngSpec::new(cfg.seed, 0);
    let reference = sample_chain(&source, &kind, cfg.n_videos, rng.child(1))?;
    let residual = |stds: Vec<f64>| cfg.residual_std.map(ResidualStd::Uniform).unwrap_or(ResidualStd::PerStep(stds));
    let gen = |residual_std| GenConfig { context_window: cfg.context_window, n_videos: cfg.n_videos, residual_std, teacher_forced: cfg.teacher_forced };
    let noise = rng.child(2);
    Ok(match cfg.predictor {
        GenPredictor::Oracle => {
            let joint = build_joint(&source, &kind, kind.n_frames())?;
            let (preds, stds) = oracle_step_predictors(&joint, cfg.context_window)?;
            autoregressive_generate(StepPredictors::PerStep(&preds), &reference, &gen(residual(stds)), noise)?
        }
        GenPredictor::Linear => {
            let train = sample_chain(&source, &kind, cfg.n_train, rng.child(0))?;
            let (preds, stds) = fit_step_predictors(&train, cfg.context_window, cfg.ridge)?;
            autoregressive_generate(StepPredictors::PerStep(&preds), &reference, &gen(residual(stds)), noise)?
        }
        GenPredictor::LinearShared => {
            let train = sample_chain(&source, &kind, cfg.n_train, rng.child(0))?;
            let shared = fit_shared_predictor(&train, cfg.context_window, cfg.ridge)?;
            let (_, stds) = fit_step_predictors(&train, cfg.context_window, cfg.ridge)?;
            let std = cfg.residual_std.unwrap_or_else(|| (stds.iter().map(|s| s * s).sum::<f64>() / stds.len() as f64).sqrt());
            autoregressive_generate(StepPredictors::Shared(&shared), &reference, &gen(ResidualStd::Uniform(std)), noise)?
        }
    })
}

/// One generated video as a `T × 1 × d` tensor.
pub fn generated_video(g: &Generation, i: usize) -> Result<PseudoVideo, RunError> {
    let shape = Shape::new(1, g.dim, 1)?;
    let frames = g.video(i).chunks_exact(g.dim).map(|f| Frame::from_f64(shape, f)).collect::<Result<Vec<_>, _>>()?;
    Ok(PseudoVideo::new(frames)?)
}

pub fn generate(cfg: &GenerateConfig, out: &mut OutputDir) -> Result<(), RunError> {
    log::info!("generating {} videos (teacher_forced = {})", cfg.n_videos, cfg.teacher_forced);
    let g = run_generation(cfg)?;
    let kind = cfg.chain.kind()?;
    let joint = build_joint(&cfg.chain.source()?, &kind, kind.n_frames())?;
    let lstar = conditional_error(&joint, &Context::recent(cfg.context_window)?)?;
    let row = EvalRow {
        chain_kind: kind.name().to_string(),
        n_frames: g.n_frames,
        dim: g.dim,
        k: cfg.context_window,
        n_train: if cfg.predictor == GenPredictor::Oracle { 0 } else { cfg.n_train },
        n_test: cfg.n_videos,
        mse: g.last_frame_mse.mean,
        mse_std_error: g.last_frame_mse.std_error,
        oracle_lstar: Some(lstar),
        psnr_db: psnr(g.last_frame_mse.mean / g.dim as f64, 1.0),
        mean_gap: Some(g.mean_gap),
        cov_frobenius_gap: Some(g.cov_frobenius_gap),
        teacher_forced: Some(cfg.teacher_forced),
        seed: cfg.seed,
    };
    let mut buf = Vec::new();
    write_eval_csv(&mut buf, &EvalReport { rows: vec![row] }).map_err(|e| RunError::Io(e.to_string()))?;
    out.write(EVAL_CSV, &buf)?;
    for i in 0..cfg.save_videos.min(g.len()) {
        out.write(&format!("video_{i:04}.pvid"), &encode_video(&generated_video(&g, i)?))?;
    }
    Ok(())
}

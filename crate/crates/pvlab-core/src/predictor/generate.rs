//! Context-window autoregressive generation.
//!
//! Videos are generated left to right, from the most corrupted frame to the
//! clean one. Frame `p` is predicted from frames `p-C..p-1`. The first `C`
//! frames come from held-out ground-truth videos. In teacher-forced mode the
//! context is always ground truth; otherwise it is whatever was generated.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::{fit_linear, Dataset, LinearPredictor, Predictor};
use crate::error::{invalid, Result};
use crate::gauss::{optimal_step_predictor, AffinePredictor, ChainSamples, JointGaussian};
use crate::rng::{standard_normal, RngSpec};
use crate::stats::MeanEstimate;

#[derive(Debug, Clone, PartialEq)]
pub enum ResidualStd {
    Uniform(f64),
    /// One value per generated step, `T − C` in total.
    PerStep(Vec<f64>),
}

impl ResidualStd {
    fn at(&self, step: usize) -> f64 {
        match self {
            ResidualStd::Uniform(s) => *s,
            ResidualStd::PerStep(v) => v[step],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub context_window: usize,
    pub n_videos: usize,
    pub residual_std: ResidualStd,
    pub teacher_forced: bool,
}

pub enum StepPredictors<'a, P> {
    /// `T − C` predictors, one per generated frame position.
    PerStep(&'a [P]),
    Shared(&'a P),
}

impl<P> StepPredictors<'_, P> {
    fn get(&self, step: usize) -> &P {
        match self {
            StepPredictors::PerStep(v) => &v[step],
            StepPredictors::Shared(p) => p,
        }
    }
}

/// Generated videos (frame order, position 0 most corrupted) and last-frame
/// statistics against the reference set.
#[derive(Debug, Clone, PartialEq)]
pub struct Generation {
    pub n_frames: usize,
    pub dim: usize,
    pub videos: Vec<f64>,
    /// Squared error of each generated last frame against the reference
    /// video that seeded it.
    pub last_frame_mse: MeanEstimate,
    /// `‖mean(generated) − mean(reference)‖` over last frames.
    pub mean_gap: f64,
    /// `‖Cov(generated) − Cov(reference)‖_F` over last frames.
    pub cov_frobenius_gap: f64,
    pub generated_last_variance: f64,
}

impl Generation {
    pub fn len(&self) -> usize {
        self.videos.len() / (self.n_frames * self.dim)
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    /// All frames of video `i`, frame order.
    pub fn video(&self, i: usize) -> &[f64] {
        let w = self.n_frames * self.dim;
        &self.videos[i * w..(i + 1) * w]
    }

    pub fn last_frame(&self, i: usize) -> &[f64] {
        let v = self.video(i);
        &v[(self.n_frames - 1) * self.dim..]
    }
}

/// Lags of the context window for frame position `p`, oldest position
/// first (so lags descend).
pub fn window_lags(n_frames: usize, context_window: usize, position: usize) -> Vec<usize> {
    (position - context_window..position).map(|q| n_frames - 1 - q).collect()
}

/// Training pairs for generating frame position `p`.
pub fn step_dataset(samples: &ChainSamples, context_window: usize, position: usize) -> Result<Dataset> {
    let t = samples.n_frames();
    if context_window == 0 || position < context_window || position >= t {
        return invalid(format!("position {position} has no full {context_window}-frame window in a {t}-frame video"));
    }
    Dataset::from_chains(samples, t - 1 - position, &window_lags(t, context_window, position))
}

/// Conditional-mean predictor and residual std (`√(tr Σ_res / d)`) for every
/// generated position `C..T`.
pub fn oracle_step_predictors(joint: &JointGaussian, context_window: usize) -> Result<(Vec<AffinePredictor>, Vec<f64>)> {
    let t = joint.n_frames();
    if context_window == 0 || context_window >= t {
        return invalid(format!("context window must be in 1..{t}, got {context_window}"));
    }
    let mut preds = Vec::with_capacity(t - context_window);
    let mut stds = Vec::with_capacity(t - context_window);
    for p in context_window..t {
        let pred = optimal_step_predictor(joint, t - 1 - p, &window_lags(t, context_window, p))?;
        stds.push(libm::sqrt(pred.residual_error / joint.dim() as f64));
        preds.push(pred);
    }
    Ok((preds, stds))
}

/// Per-position linear predictors fitted on the first 80% of `train`, with
/// residual std measured on the remaining 20%.
pub fn fit_step_predictors(train: &ChainSamples, context_window: usize, ridge: f64) -> Result<(Vec<LinearPredictor>, Vec<f64>)> {
    let t = train.n_frames();
    if context_window == 0 || context_window >= t {
        return invalid(format!("context window must be in 1..{t}, got {context_window}"));
    }
    let mut preds = Vec::with_capacity(t - context_window);
    let mut stds = Vec::with_capacity(t - context_window);
    for p in context_window..t {
        let (fit_set, val_set) = step_dataset(train, context_window, p)?.split(0.8);
        let pred = fit_linear(&fit_set, context_window, ridge)?;
        let val = super::evaluate(&pred, if val_set.is_empty() { &fit_set } else { &val_set })?;
        stds.push(libm::sqrt(val.per_pixel_mse));
        preds.push(pred);
    }
    Ok((preds, stds))
}

/// One predictor for every position, fitted on all windows pooled.
pub fn fit_shared_predictor(train: &ChainSamples, context_window: usize, ridge: f64) -> Result<LinearPredictor> {
    let t = train.n_frames();
    if context_window == 0 || context_window >= t {
        return invalid(format!("context window must be in 1..{t}, got {context_window}"));
    }
    let d = train.dim();
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for p in context_window..t {
        let ds = step_dataset(train, context_window, p)?;
        for i in 0..ds.len() {
            inputs.extend_from_slice(ds.input(i));
            targets.extend_from_slice(ds.target(i));
        }
    }
    fit_linear(&Dataset::new(context_window * d, d, inputs, targets)?, context_window, ridge)
}

/// Generates `config.n_videos` videos seeded by the first videos of
/// `reference`. Noise of scale `residual_std` is added to each prediction
/// only when running free.
pub fn autoregressive_generate<P: Predictor>(
    predictors: StepPredictors<'_, P>,
    reference: &ChainSamples,
    config: &GenConfig,
    rng: RngSpec,
) -> Result<Generation> {
    let t = reference.n_frames();
    let d = reference.dim();
    let c = config.context_window;
    if c == 0 || c >= t {
        return invalid(format!("context window must be in 1..{t}, got {c}"));
    }
    let steps = t - c;
    if let StepPredictors::PerStep(v) = &predictors {
        if v.len() != steps {
            return invalid(format!("{steps} generated positions need {steps} predictors, got {}", v.len()));
        }
    }
    for s in 0..steps {
        let p = predictors.get(s);
        if p.input_dim() != c * d || p.output_dim() != d {
            return invalid(format!("predictor for step {s} maps {} -> {}, expected {} -> {d}", p.input_dim(), p.output_dim(), c * d));
        }
    }
    match &config.residual_std {
        ResidualStd::PerStep(v) if v.len() != steps => {
            return invalid(format!("{steps} generated positions need {steps} residual stds, got {}", v.len()));
        }
        r if (0..steps).any(|s| !(r.at(s) >= 0.0 && r.at(s).is_finite())) => {
            return invalid("residual std must be nonnegative");
        }
        _ => {}
    }
    if config.n_videos == 0 || config.n_videos > reference.len() {
        return invalid(format!("need 1..={} videos, got {}", reference.len(), config.n_videos));
    }

    let mut stream = rng.rng();
    let width = t * d;
    let mut videos = alloc::vec![0.0; config.n_videos * width];
    let mut input = alloc::vec![0.0; c * d];
    let mut out = alloc::vec![0.0; d];
    for (i, video) in videos.chunks_exact_mut(width).enumerate() {
        for p in 0..c {
            video[p * d..(p + 1) * d].copy_from_slice(reference.frame(i, t - 1 - p));
        }
        for s in 0..steps {
            let p = c + s;
            for (slot, q) in (p - c..p).enumerate() {
                let src = if config.teacher_forced { reference.frame(i, t - 1 - q) } else { &video[q * d..(q + 1) * d] };
                input[slot * d..(slot + 1) * d].copy_from_slice(src);
            }
            predictors.get(s).predict_into(&input, &mut out);
            if !config.teacher_forced {
                let sd = config.residual_std.at(s);
                for o in out.iter_mut() {
                    *o += sd * standard_normal(&mut stream);
                }
            }
            video[p * d..(p + 1) * d].copy_from_slice(&out);
        }
    }

    let last = |v: &[f64]| -> Vec<f64> { v[(t - 1) * d..].to_vec() };
    let generated: Vec<Vec<f64>> = videos.chunks_exact(width).map(last).collect();
    let truth: Vec<Vec<f64>> = (0..reference.len()).map(|i| reference.frame(i, 0).to_vec()).collect();
    let last_frame_mse = MeanEstimate::from_values(
        generated.iter().enumerate().map(|(i, g)| g.iter().zip(reference.frame(i, 0)).map(|(a, b)| (a - b) * (a - b)).sum()),
    );
    let (m_gen, c_gen) = moments(&generated, d);
    let (m_ref, c_ref) = moments(&truth, d);
    Ok(Generation {
        n_frames: t,
        dim: d,
        videos,
        last_frame_mse,
        mean_gap: (&m_gen - &m_ref).norm(),
        cov_frobenius_gap: (&c_gen - &c_ref).norm(),
        generated_last_variance: c_gen.trace() / d as f64,
    })
}

/// Sample mean and unbiased covariance.
fn moments(rows: &[Vec<f64>], d: usize) -> (DVector<f64>, DMatrix<f64>) {
    let n = rows.len();
    let mut mean = DVector::zeros(d);
    for r in rows {
        for j in 0..d {
            mean[j] += r[j];
        }
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for r in rows {
        for a in 0..d {
            for b in 0..d {
                cov[(a, b)] += (r[a] - mean[a]) * (r[b] - mean[b]);
            }
        }
    }
    if n > 1 {
        cov /= (n - 1) as f64;
    }
    (mean, cov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::{build_joint, conditional_error, sample_chain, GaussianSource};
    use crate::markov::ChainKind;
    use crate::{Context, NoiseSchedule};

    fn high_order_joint() -> (GaussianSource, ChainKind, JointGaussian) {
        let src = GaussianSource::isotropic(1, 1.0).unwrap();
        let kind = ChainKind::HighOrder(NoiseSchedule::new(alloc::vec![0.5, 0.5]).unwrap());
        let j = build_joint(&src, &kind, 3).unwrap();
        (src, kind, j)
    }

    #[test]
    fn window_lags_descend() {
        assert_eq!(window_lags(5, 2, 3), alloc::vec![3, 2]);
        assert_eq!(window_lags(3, 1, 2), alloc::vec![1]);
    }

    #[test]
    fn teacher_forced_oracle_reaches_lstar() {
        let (src, kind, j) = high_order_joint();
        let (preds, _) = oracle_step_predictors(&j, 2).unwrap();
        let reference = sample_chain(&src, &kind, 100_000, RngSpec::new(4, 0)).unwrap();
        let cfg = GenConfig { context_window: 2, n_videos: 100_000, residual_std: ResidualStd::Uniform(0.0), teacher_forced: true };
        let g = autoregressive_generate(StepPredictors::PerStep(&preds), &reference, &cfg, RngSpec::new(4, 1)).unwrap();
        let lstar = conditional_error(&j, &Context::recent(2).unwrap()).unwrap();
        assert!((g.last_frame_mse.mean - lstar).abs() < 0.02 * lstar, "{} vs {lstar}", g.last_frame_mse.mean);
    }

    /// Propagates the covariance of the free-running generated process by
    /// the affine recursion; independent of the joint it was derived from.
    fn free_running_last_variance(joint: &JointGaussian, preds: &[AffinePredictor], stds: &[f64], c: usize) -> f64 {
        let t = joint.n_frames();
        // positions 0..c start with the true joint of those frames
        let mut cov = DMatrix::<f64>::zeros(t, t);
        for a in 0..c {
            for b in 0..c {
                cov[(a, b)] = joint.cov()[(t - 1 - a, t - 1 - b)];
            }
        }
        for (s, p) in preds.iter().enumerate() {
            let pos = c + s;
            let w: Vec<(usize, f64)> = (pos - c..pos).enumerate().map(|(slot, q)| (q, p.gain[(0, slot)])).collect();
            for other in 0..pos {
                let v: f64 = w.iter().map(|&(q, g)| g * cov[(q, other)]).sum();
                cov[(pos, other)] = v;
                cov[(other, pos)] = v;
            }
            let mut v: f64 = w.iter().map(|&(q, g)| g * w.iter().map(|&(r, h)| h * cov[(q, r)]).sum::<f64>()).sum();
            v += stds[s] * stds[s];
            cov[(pos, pos)] = v;
        }
        cov[(t - 1, t - 1)]
    }

    #[test]
    fn free_running_preserves_last_frame_variance() {
        let (src, kind, j) = high_order_joint();
        let (preds, stds) = oracle_step_predictors(&j, 1).unwrap();
        let oracle_var = free_running_last_variance(&j, &preds, &stds, 1);
        assert!((oracle_var - 1.0).abs() < 1e-12, "propagated {oracle_var}");
        let reference = sample_chain(&src, &kind, 10_000, RngSpec::new(6, 0)).unwrap();
        let cfg = GenConfig { context_window: 1, n_videos: 10_000, residual_std: ResidualStd::PerStep(stds), teacher_forced: false };
        let g = autoregressive_generate(StepPredictors::PerStep(&preds), &reference, &cfg, RngSpec::new(6, 1)).unwrap();
        assert!((g.generated_last_variance - 1.0).abs() < 0.05, "{}", g.generated_last_variance);
    }

    #[test]
    fn copy_chain_reproduces_initial_frame() {
        let src = GaussianSource::isotropic(2, 1.0).unwrap();
        let kind = ChainKind::FirstOrder(NoiseSchedule::new(alloc::vec![0.0; 4]).unwrap());
        let reference = sample_chain(&src, &kind, 20, RngSpec::new(1, 0)).unwrap();
        let (preds, _) = fit_step_predictors(&sample_chain(&src, &kind, 500, RngSpec::new(2, 0)).unwrap(), 1, 0.0).unwrap();
        let cfg = GenConfig { context_window: 1, n_videos: 20, residual_std: ResidualStd::Uniform(0.0), teacher_forced: false };
        let g = autoregressive_generate(StepPredictors::PerStep(&preds), &reference, &cfg, RngSpec::new(1, 1)).unwrap();
        for i in 0..20 {
            let first = &g.video(i)[..2];
            for (a, b) in g.last_frame(i).iter().zip(first) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn shared_and_argument_errors() {
        let (src, kind, j) = high_order_joint();
        let train = sample_chain(&src, &kind, 2000, RngSpec::new(1, 0)).unwrap();
        let shared = fit_shared_predictor(&train, 1, 0.0).unwrap();
        let cfg = GenConfig { context_window: 1, n_videos: 10, residual_std: ResidualStd::Uniform(0.1), teacher_forced: false };
        let g = autoregressive_generate(StepPredictors::Shared(&shared), &train, &cfg, RngSpec::new(1, 1)).unwrap();
        assert_eq!(g.len(), 10);
        let (preds, _) = oracle_step_predictors(&j, 1).unwrap();
        assert!(autoregressive_generate(StepPredictors::PerStep(&preds[..1]), &train, &cfg, RngSpec::new(1, 1)).is_err());
        let bad = GenConfig { context_window: 3, ..cfg.clone() };
        assert!(autoregressive_generate(StepPredictors::PerStep(&preds), &train, &bad, RngSpec::new(1, 1)).is_err());
    }
}

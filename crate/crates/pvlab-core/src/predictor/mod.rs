//! Learned predictors of a frame from a context of earlier frames, their
//! evaluation, and context-window autoregressive generation.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::gauss::{AffinePredictor, ChainSamples};
use crate::stats::{psnr, MeanEstimate};

mod compare;
mod generate;
mod linear;
mod mlp;

pub use compare::{compare_context_sizes, ContextComparison, GaussianChain};
pub use generate::{
    autoregressive_generate, fit_shared_predictor, fit_step_predictors, oracle_step_predictors, step_dataset, window_lags,
    GenConfig, Generation, ResidualStd, StepPredictors,
};
pub use linear::{fit_linear, LinearPredictor};
pub use mlp::{fit_mlp, gradient_check, GradientCheck, MlpFit, MlpPredictor, TrainConfig};

/// Paired inputs (stacked context frames) and targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    input_dim: usize,
    output_dim: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(input_dim: usize, output_dim: usize, inputs: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if input_dim == 0 || output_dim == 0 {
            return invalid("dataset dimensions must be positive");
        }
        if !inputs.len().is_multiple_of(input_dim) || !targets.len().is_multiple_of(output_dim) || inputs.len() / input_dim != targets.len() / output_dim {
            return Err(Error::ShapeMismatch {
                expected: format!("matching sample counts for {input_dim}-d inputs and {output_dim}-d targets"),
                found: format!("{} input values, {} target values", inputs.len(), targets.len()),
            });
        }
        Ok(Self { input_dim, output_dim, inputs, targets })
    }

    /// Predict the frame at `target_lag` from the frames at `input_lags`,
    /// concatenated in the given order.
    pub fn from_chains(samples: &ChainSamples, target_lag: usize, input_lags: &[usize]) -> Result<Self> {
        let t = samples.n_frames();
        if target_lag >= t || input_lags.iter().any(|&l| l >= t) || input_lags.is_empty() {
            return invalid(format!("lags out of range for a {t}-frame chain"));
        }
        let d = samples.dim();
        let mut inputs = Vec::with_capacity(samples.len() * input_lags.len() * d);
        let mut targets = Vec::with_capacity(samples.len() * d);
        for i in 0..samples.len() {
            for &l in input_lags {
                inputs.extend_from_slice(samples.frame(i, l));
            }
            targets.extend_from_slice(samples.frame(i, target_lag));
        }
        Self::new(input_lags.len() * d, d, inputs, targets)
    }

    /// Predict `x_T` from `x_{T-1}, …, x_{T-k}`.
    pub fn last_frame(samples: &ChainSamples, k: usize) -> Result<Self> {
        let lags: Vec<usize> = (1..=k).collect();
        Self::from_chains(samples, 0, &lags)
    }

    pub fn len(&self) -> usize {
        self.targets.len() / self.output_dim
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.output_dim..(i + 1) * self.output_dim]
    }

    /// First `round(frac · n)` samples and the rest.
    pub fn split(&self, frac: f64) -> (Dataset, Dataset) {
        let cut = libm::round(self.len() as f64 * frac) as usize;
        let cut = cut.min(self.len());
        let (a_in, b_in) = self.inputs.split_at(cut * self.input_dim);
        let (a_t, b_t) = self.targets.split_at(cut * self.output_dim);
        (
            Dataset { input_dim: self.input_dim, output_dim: self.output_dim, inputs: a_in.to_vec(), targets: a_t.to_vec() },
            Dataset { input_dim: self.input_dim, output_dim: self.output_dim, inputs: b_in.to_vec(), targets: b_t.to_vec() },
        )
    }

    /// Samples reordered by `order`.
    pub fn select(&self, order: &[usize]) -> Dataset {
        let mut inputs = Vec::with_capacity(order.len() * self.input_dim);
        let mut targets = Vec::with_capacity(order.len() * self.output_dim);
        for &i in order {
            inputs.extend_from_slice(self.input(i));
            targets.extend_from_slice(self.target(i));
        }
        Dataset { input_dim: self.input_dim, output_dim: self.output_dim, inputs, targets }
    }
}

/// Anything mapping a stacked context to one frame.
pub trait Predictor {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn predict_into(&self, input: &[f64], out: &mut [f64]);

    fn predict(&self, input: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.output_dim()];
        self.predict_into(input, &mut out);
        out
    }
}

impl Predictor for AffinePredictor {
    fn input_dim(&self) -> usize {
        self.gain.ncols()
    }

    fn output_dim(&self) -> usize {
        self.gain.nrows()
    }

    fn predict_into(&self, input: &[f64], out: &mut [f64]) {
        AffinePredictor::predict_into(self, input, out)
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn output_dim(&self) -> usize {
        (**self).output_dim()
    }
    fn predict_into(&self, input: &[f64], out: &mut [f64]) {
        (**self).predict_into(input, out)
    }
}

/// Squared-error summary of a predictor on a dataset. The error of a sample
/// is the squared Euclidean distance summed over all target coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub n: usize,
    pub mse: f64,
    pub mse_std_error: f64,
    pub per_pixel_mse: f64,
    /// `+inf` when the error is exactly zero.
    pub psnr_db: f64,
}

/// Per-sample squared errors, in dataset order.
pub fn squared_errors<P: Predictor + ?Sized>(predictor: &P, data: &Dataset) -> Result<Vec<f64>> {
    if predictor.input_dim() != data.input_dim() || predictor.output_dim() != data.output_dim() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} -> {}", predictor.input_dim(), predictor.output_dim()),
            found: format!("{} -> {}", data.input_dim(), data.output_dim()),
        });
    }
    let mut out = alloc::vec![0.0; data.output_dim()];
    Ok((0..data.len())
        .map(|i| {
            predictor.predict_into(data.input(i), &mut out);
            out.iter().zip(data.target(i)).map(|(a, b)| (a - b) * (a - b)).sum()
        })
        .collect())
}

pub fn evaluate<P: Predictor + ?Sized>(predictor: &P, data: &Dataset) -> Result<Evaluation> {
    if data.is_empty() {
        return invalid("cannot evaluate on an empty dataset");
    }
    let errs = squared_errors(predictor, data)?;
    Ok(evaluation_from_errors(&errs, data.output_dim()))
}

pub(crate) fn evaluation_from_errors(errs: &[f64], dim: usize) -> Evaluation {
    let est = MeanEstimate::from_values(errs.iter().copied());
    let per_pixel = est.mean / dim as f64;
    Evaluation { n: est.n, mse: est.mean, mse_std_error: est.std_error, per_pixel_mse: per_pixel, psnr_db: psnr(per_pixel, 1.0) }
}

/// One row of an experiment report.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub chain_kind: String,
    pub n_frames: usize,
    pub dim: usize,
    /// Context size (or context window for generation).
    pub k: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub mse: f64,
    pub mse_std_error: f64,
    pub oracle_lstar: Option<f64>,
    pub psnr_db: f64,
    pub mean_gap: Option<f64>,
    pub cov_frobenius_gap: Option<f64>,
    pub teacher_forced: Option<bool>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    struct Identity(usize);

    impl Predictor for Identity {
        fn input_dim(&self) -> usize {
            self.0
        }
        fn output_dim(&self) -> usize {
            self.0
        }
        fn predict_into(&self, input: &[f64], out: &mut [f64]) {
            out.copy_from_slice(input);
        }
    }

    #[test]
    fn identity_on_duplicates_is_perfect() {
        let d = Dataset::new(2, 2, vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let e = evaluate(&Identity(2), &d).unwrap();
        assert_eq!(e.mse, 0.0);
        assert_eq!(e.psnr_db, f64::INFINITY);
    }

    #[test]
    fn psnr_of_known_error() {
        // every coordinate off by 0.1: per-pixel MSE 0.01 -> 20 dB
        let d = Dataset::new(2, 2, vec![0.0; 4], vec![0.1; 4]).unwrap();
        let e = evaluate(&Identity(2), &d).unwrap();
        assert!((e.per_pixel_mse - 0.01).abs() < 1e-15);
        assert!((e.mse - 0.02).abs() < 1e-15);
        assert!((e.psnr_db - 20.0).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let d = Dataset::new(2, 2, vec![0.0; 4], vec![0.1; 4]).unwrap();
        assert!(matches!(evaluate(&Identity(3), &d), Err(Error::ShapeMismatch { .. })));
        assert!(Dataset::new(2, 1, vec![0.0; 4], vec![0.0; 3]).is_err());
        let empty = Dataset::new(1, 1, vec![], vec![]).unwrap();
        assert!(evaluate(&Identity(1), &empty).is_err());
    }

    #[test]
    fn split_and_select() {
        let d = Dataset::new(1, 1, (0..10).map(f64::from).collect(), (0..10).map(f64::from).collect()).unwrap();
        let (a, b) = d.split(0.8);
        assert_eq!((a.len(), b.len()), (8, 2));
        assert_eq!(b.input(0), &[8.0]);
        let s = d.select(&[3, 1]);
        assert_eq!(s.target(0), &[3.0]);
        assert_eq!(s.len(), 2);
    }
}

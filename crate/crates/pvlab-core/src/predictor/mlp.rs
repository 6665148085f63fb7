//! One-hidden-layer tanh network trained by seeded mini-batch SGD.

use alloc::format;
use alloc::vec::Vec;

use super::{Dataset, Predictor};
use crate::error::{invalid, Error, Result};
use crate::rng::{index_below, uniform_range, RngSpec};

/// Parameters are stored flat: `w1 (m×p)`, `b1 (m)`, `w2 (d×m)`, `b2 (d)`,
/// matrices row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpPredictor {
    context_size: usize,
    input_dim: usize,
    hidden: usize,
    output_dim: usize,
    params: Vec<f64>,
}

impl MlpPredictor {
    /// Uniform `±1/√fan_in` initialization of weights and biases.
    pub fn init(context_size: usize, input_dim: usize, hidden: usize, output_dim: usize, rng: RngSpec) -> Result<Self> {
        if context_size == 0 || input_dim == 0 || hidden == 0 || output_dim == 0 {
            return invalid("MLP dimensions must be positive");
        }
        let mut stream = rng.rng();
        let mut params = Vec::with_capacity(hidden * (input_dim + 1) + output_dim * (hidden + 1));
        let a1 = 1.0 / libm::sqrt(input_dim as f64);
        let a2 = 1.0 / libm::sqrt(hidden as f64);
        params.extend((0..hidden * (input_dim + 1)).map(|_| uniform_range(&mut stream, -a1, a1)));
        params.extend((0..output_dim * (hidden + 1)).map(|_| uniform_range(&mut stream, -a2, a2)));
        Ok(Self { context_size, input_dim, hidden, output_dim, params })
    }

    pub fn context_size(&self) -> usize {
        self.context_size
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.input_dim;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.output_dim * self.hidden;
        (b1, w2, b2)
    }

    fn hidden_activations(&self, input: &[f64], act: &mut [f64]) {
        let (b1, _, _) = self.offsets();
        let p = self.input_dim;
        for (j, a) in act.iter_mut().enumerate() {
            let z = self.params[b1 + j] + (0..p).map(|i| self.params[j * p + i] * input[i]).sum::<f64>();
            *a = libm::tanh(z);
        }
    }

    fn output_from_hidden(&self, act: &[f64], out: &mut [f64]) {
        let (_, w2, b2) = self.offsets();
        let m = self.hidden;
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.params[b2 + r] + (0..m).map(|j| self.params[w2 + r * m + j] * act[j]).sum::<f64>();
        }
    }

    /// Mean over `indices` of the summed squared error.
    pub fn loss(&self, data: &Dataset, indices: &[usize]) -> f64 {
        let mut act = alloc::vec![0.0; self.hidden];
        let mut out = alloc::vec![0.0; self.output_dim];
        let total: f64 = indices
            .iter()
            .map(|&i| {
                self.hidden_activations(data.input(i), &mut act);
                self.output_from_hidden(&act, &mut out);
                out.iter().zip(data.target(i)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            })
            .sum();
        total / indices.len() as f64
    }

    /// Loss and its analytic gradient by backpropagation.
    pub fn loss_and_gradient(&self, data: &Dataset, indices: &[usize]) -> (f64, Vec<f64>) {
        let (b1, w2, b2) = self.offsets();
        let (p, m, d) = (self.input_dim, self.hidden, self.output_dim);
        let mut grad = alloc::vec![0.0; self.params.len()];
        let mut act = alloc::vec![0.0; m];
        let mut out = alloc::vec![0.0; d];
        let mut delta_out = alloc::vec![0.0; d];
        let scale = 2.0 / indices.len() as f64;
        let mut loss = 0.0;
        for &i in indices {
            let x = data.input(i);
            self.hidden_activations(x, &mut act);
            self.output_from_hidden(&act, &mut out);
            for (r, y) in data.target(i).iter().enumerate() {
                let e = out[r] - y;
                loss += e * e;
                delta_out[r] = scale * e;
            }
            for r in 0..d {
                grad[b2 + r] += delta_out[r];
                for j in 0..m {
                    grad[w2 + r * m + j] += delta_out[r] * act[j];
                }
            }
            for j in 0..m {
                let back: f64 = (0..d).map(|r| delta_out[r] * self.params[w2 + r * m + j]).sum();
                let dz = back * (1.0 - act[j] * act[j]);
                grad[b1 + j] += dz;
                for k in 0..p {
                    grad[j * p + k] += dz * x[k];
                }
            }
        }
        (loss / indices.len() as f64, grad)
    }
}

impl Predictor for MlpPredictor {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn predict_into(&self, input: &[f64], out: &mut [f64]) {
        let mut act = alloc::vec![0.0; self.hidden];
        self.hidden_activations(input, &mut act);
        self.output_from_hidden(&act, out);
    }
}

/// Result of comparing analytic gradients against central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    /// `(parameter index, analytic, numeric, relative error)`
    pub checked: Vec<(usize, f64, f64, f64)>,
    pub max_relative_error: f64,
}

impl GradientCheck {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_relative_error < tol
    }
}

/// Central differences with step `1e-5 · max(1, |θ_i|)` at `coords` random
/// parameters. The relative error is `|a − n| / max(|a|, |n|, 1e-6)`; the
/// floor keeps near-zero gradients from amplifying round-off.
pub fn gradient_check(model: &MlpPredictor, data: &Dataset, indices: &[usize], coords: usize, rng: RngSpec) -> GradientCheck {
    let (_, analytic) = model.loss_and_gradient(data, indices);
    let mut stream = rng.rng();
    let mut probe = model.clone();
    let mut checked = Vec::with_capacity(coords);
    for _ in 0..coords {
        let idx = index_below(&mut stream, model.params.len());
        let theta = model.params[idx];
        let h = 1e-5 * theta.abs().max(1.0);
        probe.params[idx] = theta + h;
        let up = probe.loss(data, indices);
        probe.params[idx] = theta - h;
        let down = probe.loss(data, indices);
        probe.params[idx] = theta;
        let numeric = (up - down) / (2.0 * h);
        let a = analytic[idx];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        checked.push((idx, a, numeric, rel));
    }
    let max_relative_error = checked.iter().map(|c| c.3).fold(0.0, f64::max);
    GradientCheck { checked, max_relative_error }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub hidden: usize,
    pub step_size: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub rng: RngSpec,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { hidden: 64, step_size: 0.05, epochs: 20, batch_size: 32, rng: RngSpec::new(0, 0) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpFit {
    pub model: MlpPredictor,
    /// Full training loss before the first epoch and after each epoch.
    pub loss_trace: Vec<f64>,
    pub gradient_check: GradientCheck,
}

const GRAD_CHECK_TOL: f64 = 1e-4;
const DIVERGENCE_FACTOR: f64 = 10.0;
const DIVERGENCE_PATIENCE: usize = 3;

/// Trains an MLP on `data`. The analytic gradient is checked against finite
/// differences at initialization before any update is made.
pub fn fit_mlp(data: &Dataset, context_size: usize, config: &TrainConfig) -> Result<MlpFit> {
    if data.is_empty() {
        return invalid("cannot train on an empty dataset");
    }
    if context_size == 0 || data.input_dim() != context_size * data.output_dim() {
        return invalid(format!("context size {context_size} does not match {}-d inputs", data.input_dim()));
    }
    if config.batch_size == 0 || !(config.step_size > 0.0 && config.step_size.is_finite()) {
        return invalid("batch size and step size must be positive");
    }
    let mut model = MlpPredictor::init(context_size, data.input_dim(), config.hidden, data.output_dim(), config.rng.child(0))?;

    let probe: Vec<usize> = (0..data.len().min(64)).collect();
    let check = gradient_check(&model, data, &probe, 10, config.rng.child(1));
    if !check.passed(GRAD_CHECK_TOL) {
        let worst = check.checked.iter().copied().fold((0, 0.0, 0.0, -1.0), |w, c| if c.3 > w.3 { c } else { w });
        return Err(Error::GradientCheck { index: worst.0, analytic: worst.1, numeric: worst.2, relative: worst.3 });
    }

    let all: Vec<usize> = (0..data.len()).collect();
    let initial = model.loss(data, &all);
    let mut trace = alloc::vec![initial];
    let mut order = all.clone();
    let mut shuffle = config.rng.child(2).rng();
    let mut bad_epochs = 0;
    for epoch in 0..config.epochs {
        for i in (1..order.len()).rev() {
            order.swap(i, index_below(&mut shuffle, i + 1));
        }
        for batch in order.chunks(config.batch_size) {
            let (_, grad) = model.loss_and_gradient(data, batch);
            for (p, g) in model.params.iter_mut().zip(&grad) {
                *p -= config.step_size * g;
            }
        }
        let loss = model.loss(data, &all);
        trace.push(loss);
        if !loss.is_finite() || loss > DIVERGENCE_FACTOR * initial {
            bad_epochs += 1;
            if bad_epochs >= DIVERGENCE_PATIENCE || !loss.is_finite() {
                return Err(Error::Divergence { epoch, trace });
            }
        } else {
            bad_epochs = 0;
        }
    }
    Ok(MlpFit { model, loss_trace: trace, gradient_check: check })
}

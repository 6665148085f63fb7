//! Per-step corruption parameters.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Result};

/// Noise weights `β_1..β_{T-1}`, counted from the clean end: `β_1` produces
/// `x_{T-1}` from `x_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    betas: Vec<f64>,
}

impl NoiseSchedule {
    /// Accepts weights in `[0, 1)`. A zero weight makes the step an exact
    /// copy, which the oracles use as the perfect-information case.
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return invalid("noise schedule needs at least one step");
        }
        if let Some((i, b)) = betas.iter().enumerate().find(|(_, b)| !(0.0..1.0).contains(*b)) {
            return invalid(format!("beta_{} = {b} outside [0, 1)", i + 1));
        }
        Ok(Self { betas })
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// `β_t` for `t` in `1..=steps()`.
    pub fn beta(&self, t: usize) -> f64 {
        self.betas[t - 1]
    }

    pub fn steps(&self) -> usize {
        self.betas.len()
    }

    pub fn n_frames(&self) -> usize {
        self.betas.len() + 1
    }
}

/// Linear schedule with `n_frames - 1` equally spaced weights from
/// `beta_start` to `beta_end`.
pub fn linear_beta_schedule(n_frames: usize, beta_start: f64, beta_end: f64) -> Result<NoiseSchedule> {
    if n_frames < 2 {
        return invalid(format!("linear schedule needs T >= 2, got {n_frames}"));
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        return invalid(format!(
            "linear schedule needs 0 < beta_start <= beta_end < 1, got [{beta_start}, {beta_end}]"
        ));
    }
    let steps = n_frames - 1;
    let betas = if steps == 1 {
        alloc::vec![beta_start]
    } else {
        let delta = (beta_end - beta_start) / (steps - 1) as f64;
        (0..steps)
            .map(|i| if i == steps - 1 { beta_end } else { beta_start + i as f64 * delta })
            .collect()
    };
    NoiseSchedule::new(betas)
}

/// Recursive Gaussian blur ladder: step `t` blurs with
/// `σ_t = sigma0 · exp(rate · t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlurSchedule {
    n_frames: usize,
    kernel_size: usize,
    sigma0: f64,
    rate: f64,
}

impl BlurSchedule {
    pub fn new(n_frames: usize, kernel_size: usize, sigma0: f64, rate: f64) -> Result<Self> {
        if n_frames < 2 {
            return invalid(format!("blur schedule needs T >= 2, got {n_frames}"));
        }
        if kernel_size < 3 || kernel_size.is_multiple_of(2) {
            return invalid(format!("kernel size must be odd and >= 3, got {kernel_size}"));
        }
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return invalid(format!("sigma0 must be positive, got {sigma0}"));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return invalid(format!("blur growth rate must be positive, got {rate}"));
        }
        Ok(Self { n_frames, kernel_size, sigma0, rate })
    }

    /// 8 frames, 11x11 kernel, σ growing at rate 0.05.
    pub fn eight_frame(sigma0: f64) -> Result<Self> {
        Self::new(8, 11, sigma0, 0.05)
    }

    /// 18 frames, 11x11 kernel, σ growing at rate 0.01.
    pub fn eighteen_frame(sigma0: f64) -> Result<Self> {
        Self::new(18, 11, sigma0, 0.01)
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn kernel_size(&self) -> usize {
        self.kernel_size
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn sigma(&self, t: usize) -> f64 {
        self.sigma0 * libm::exp(self.rate * t as f64)
    }

    /// `σ_1..σ_{T-1}`.
    pub fn sigmas(&self) -> Vec<f64> {
        (1..self.n_frames).map(|t| self.sigma(t)).collect()
    }
}

/// Heat-equation corruption times `t_1 < … < t_{T-1}` plus additive
/// observation noise `σ_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatSchedule {
    times: Vec<f64>,
    sigma_h: f64,
}

impl HeatSchedule {
    pub fn new(times: Vec<f64>, sigma_h: f64) -> Result<Self> {
        if times.is_empty() {
            return invalid("heat schedule needs at least one time");
        }
        if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return invalid("heat times must be finite and nonnegative");
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("heat times must be strictly increasing");
        }
        if !(sigma_h >= 0.0 && sigma_h.is_finite()) {
            return invalid(format!("sigma_h must be nonnegative, got {sigma_h}"));
        }
        Ok(Self { times, sigma_h })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn sigma_h(&self) -> f64 {
        self.sigma_h
    }

    pub fn n_frames(&self) -> usize {
        self.times.len() + 1
    }
}

//! First- and high-order Markov Gaussian noising.
//!
//! Both chains walk away from the clean frame. With `β_t` counted from the
//! clean end, step `t` produces `x_{T-t}`:
//!
//! * first order: `x_{T-t} = √(1-β_t) · x_{T-t+1} + √β_t · ε`
//! * high order:  `x_{T-t} = √(1-β_t) · mean(x_{T-t+1}, …, x_T) + √β_t · ε`

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::frame::{Frame, PseudoVideo};
use crate::rng::{standard_normal, RngSpec, StreamRng};
use crate::schedule::NoiseSchedule;

#[derive(Debug, Clone, PartialEq)]
pub enum ChainKind {
    FirstOrder(NoiseSchedule),
    HighOrder(NoiseSchedule),
}

impl ChainKind {
    pub fn schedule(&self) -> &NoiseSchedule {
        match self {
            ChainKind::FirstOrder(s) | ChainKind::HighOrder(s) => s,
        }
    }

    pub fn n_frames(&self) -> usize {
        self.schedule().n_frames()
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChainKind::FirstOrder(_) => "first_order",
            ChainKind::HighOrder(_) => "high_order",
        }
    }

    /// Lags that step `t` averages over, and the weight each receives.
    /// Frame lag `t` is `Σ weight · x_{lag} + √β_t · ε` over the returned lags.
    pub fn parents(&self, t: usize) -> (core::ops::Range<usize>, f64) {
        let keep = libm::sqrt(1.0 - self.schedule().beta(t));
        match self {
            ChainKind::FirstOrder(_) => (t - 1..t, keep),
            ChainKind::HighOrder(_) => (0..t, keep / t as f64),
        }
    }

    pub fn noise_std(&self, t: usize) -> f64 {
        libm::sqrt(self.schedule().beta(t))
    }
}

/// Runs the corruption recursion in place on lag-major stacked frames.
///
/// `stacked` holds `n_frames` blocks of `dim` values with block 0 = `x_T`
/// already filled. Noise is drawn step by step, coordinate by coordinate.
pub fn forward_chain(kind: &ChainKind, stacked: &mut [f64], dim: usize, rng: &mut StreamRng) {
    let n_frames = kind.n_frames();
    debug_assert_eq!(stacked.len(), n_frames * dim);
    for t in 1..n_frames {
        let (lags, weight) = kind.parents(t);
        let noise = kind.noise_std(t);
        let (done, rest) = stacked.split_at_mut(t * dim);
        for (i, out) in rest[..dim].iter_mut().enumerate() {
            let parent_sum: f64 = lags.clone().map(|l| done[l * dim + i]).sum();
            *out = weight * parent_sum + noise * standard_normal(rng);
        }
    }
}

fn markov_video(image: &Frame, kind: &ChainKind, rng: RngSpec) -> Result<PseudoVideo> {
    let dim = image.data().len();
    let n_frames = kind.n_frames();
    if n_frames < 2 {
        return invalid("Markov noising needs at least one corruption step");
    }
    let mut stacked = alloc::vec![0.0; n_frames * dim];
    stacked[..dim].copy_from_slice(&image.to_f64());
    forward_chain(kind, &mut stacked, dim, &mut rng.rng());
    let mut frames = Vec::with_capacity(n_frames);
    for lag in (1..n_frames).rev() {
        frames.push(Frame::from_f64(image.shape(), &stacked[lag * dim..(lag + 1) * dim])?);
    }
    frames.push(image.clone());
    PseudoVideo::new(frames)
}

/// First-order Markov noising of `image`, `T = schedule.n_frames()`.
pub fn first_order_markov_noise(image: &Frame, schedule: &NoiseSchedule, rng: RngSpec) -> Result<PseudoVideo> {
    markov_video(image, &ChainKind::FirstOrder(schedule.clone()), rng)
}

/// High-order Markov noising: each step perturbs the running mean of all
/// cleaner frames.
pub fn high_order_markov_noise(image: &Frame, schedule: &NoiseSchedule, rng: RngSpec) -> Result<PseudoVideo> {
    markov_video(image, &ChainKind::HighOrder(schedule.clone()), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Shape;
    use alloc::vec;

    fn scalar(v: f32) -> Frame {
        Frame::new(Shape::new(1, 1, 1).unwrap(), vec![v]).unwrap()
    }

    fn sched(b: &[f64]) -> NoiseSchedule {
        NoiseSchedule::new(b.to_vec()).unwrap()
    }

    #[test]
    fn vanishing_noise_copies_image() {
        let img = Frame::from_fn(Shape::new(3, 4, 3).unwrap(), |y, x, c| (y + x + c) as f32 * 0.1).unwrap();
        // √β·ε must stay below the 1e-6 tolerance, so β = 1e-14 rather than 1e-12
        let s = sched(&[1e-14; 5]);
        for v in [
            first_order_markov_noise(&img, &s, RngSpec::new(1, 0)).unwrap(),
            high_order_markov_noise(&img, &s, RngSpec::new(1, 0)).unwrap(),
        ] {
            assert_eq!(v.len(), 6);
            for f in v.frames() {
                for (a, b) in f.data().iter().zip(img.data()) {
                    assert!((a - b).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn high_order_noiseless_limit_is_running_mean() {
        let img = scalar(0.8);
        let s = sched(&[0.0, 0.0, 0.0]);
        let v = high_order_markov_noise(&img, &s, RngSpec::new(3, 0)).unwrap();
        for f in v.frames() {
            assert_eq!(f.data()[0], 0.8);
        }
    }

    #[test]
    fn last_frame_bitwise() {
        let img = Frame::from_fn(Shape::new(5, 5, 1).unwrap(), |y, x, _| (y * 5 + x) as f32 / 25.0 + 1e-7).unwrap();
        let s = sched(&[0.3, 0.2, 0.1]);
        assert_eq!(first_order_markov_noise(&img, &s, RngSpec::new(1, 2)).unwrap().target(), &img);
        assert_eq!(high_order_markov_noise(&img, &s, RngSpec::new(1, 2)).unwrap().target(), &img);
    }

    #[test]
    fn deterministic_per_spec() {
        let img = scalar(0.5);
        let s = sched(&[0.3, 0.2]);
        let a = first_order_markov_noise(&img, &s, RngSpec::new(1, 2)).unwrap();
        let b = first_order_markov_noise(&img, &s, RngSpec::new(1, 2)).unwrap();
        let c = first_order_markov_noise(&img, &s, RngSpec::new(1, 3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.frames()[0], c.frames()[0]);
        assert_ne!(a.frames()[1], c.frames()[1]);
    }

    #[test]
    fn first_step_agrees_between_orders() {
        // t = 1 averages a single frame, so both recursions draw the same noise
        let img = Frame::from_fn(Shape::new(4, 4, 1).unwrap(), |y, x, _| (y as f32 - x as f32) * 0.1).unwrap();
        let s = sched(&[0.4]);
        let a = first_order_markov_noise(&img, &s, RngSpec::new(9, 9)).unwrap();
        let b = high_order_markov_noise(&img, &s, RngSpec::new(9, 9)).unwrap();
        assert_eq!(a, b);
    }

    fn moments(n: u64, f: impl Fn(u64) -> f64) -> (f64, f64) {
        let xs: std::vec::Vec<f64> = (0..n).map(f).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        (m, v)
    }

    #[test]
    fn zero_image_is_mean_zero() {
        let s = sched(&[0.1, 0.3, 0.5]);
        for lag in 0..3 {
            let (m, _) = moments(10_000, |seed| {
                f64::from(first_order_markov_noise(&scalar(0.0), &s, RngSpec::new(seed, 0)).unwrap().frames()[lag].data()[0])
            });
            assert!(m.abs() < 4.0 / 100.0);
        }
    }

    #[test]
    fn first_order_variance_propagation() {
        // Var(x_{T-2}) = (1-β₂)·β₁ + β₂ = 0.75 with deterministic x_T
        let s = sched(&[0.5, 0.5]);
        let (_, v) = moments(10_000, |seed| {
            f64::from(first_order_markov_noise(&scalar(1.0), &s, RngSpec::new(seed, 0)).unwrap().frames()[0].data()[0])
        });
        assert!((v - 0.75).abs() < 0.05 * 0.75, "var {v}");
    }

    #[test]
    fn high_order_mean_propagation() {
        // E[x_{T-2}] = √0.5 · (√0.5 + 1) / 2
        let expected = libm::sqrt(0.5) * (libm::sqrt(0.5) + 1.0) / 2.0;
        assert!((expected - 0.6036).abs() < 1e-4);
        let s = sched(&[0.5, 0.5]);
        let (m, _) = moments(10_000, |seed| {
            f64::from(high_order_markov_noise(&scalar(1.0), &s, RngSpec::new(seed, 0)).unwrap().frames()[0].data()[0])
        });
        assert!((m - expected).abs() < 0.05 * expected, "mean {m}");
    }
}

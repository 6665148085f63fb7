//! Heat-equation evolution of images with insulated (Neumann) boundaries.
//!
//! Each channel is expanded in the orthonormal DCT-II basis, whose vectors
//! sample the Neumann Laplacian eigenfunctions `cos(π k (n + ½) / N)`.
//! Coefficient `(k_y, k_x)` decays by `exp(-t π² (k_y²/H² + k_x²/W²))`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::frame::{Frame, PseudoVideo, Shape};
use crate::rng::{standard_normal, RngSpec};
use crate::schedule::HeatSchedule;

/// Precomputed transform for one frame size.
#[derive(Debug, Clone)]
pub struct HeatOperator {
    shape: Shape,
    // row-major N×N orthonormal DCT-II matrices: basis[k * n + i]
    basis_y: Vec<f64>,
    basis_x: Vec<f64>,
}

fn dct_basis(n: usize) -> Vec<f64> {
    let mut m = Vec::with_capacity(n * n);
    for k in 0..n {
        let scale = if k == 0 { libm::sqrt(1.0 / n as f64) } else { libm::sqrt(2.0 / n as f64) };
        for i in 0..n {
            m.push(scale * libm::cos(PI * k as f64 * (i as f64 + 0.5) / n as f64));
        }
    }
    m
}

impl HeatOperator {
    pub fn new(shape: Shape) -> Self {
        Self { shape, basis_y: dct_basis(shape.height), basis_x: dct_basis(shape.width) }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Continuous Laplacian eigenvalue of mode `(ky, kx)`.
    pub fn eigenvalue(&self, ky: usize, kx: usize) -> f64 {
        let (h, w) = (self.shape.height as f64, self.shape.width as f64);
        PI * PI * ((ky * ky) as f64 / (h * h) + (kx * kx) as f64 / (w * w))
    }

    /// Multiplier applied to mode `(ky, kx)` after time `t`.
    pub fn attenuation(&self, ky: usize, kx: usize, t: f64) -> f64 {
        libm::exp(-t * self.eigenvalue(ky, kx))
    }

    /// Evolves `frame` for time `t`, computing in 64-bit.
    pub fn apply_f64(&self, frame: &Frame, t: f64) -> Result<Vec<f64>> {
        if !(t >= 0.0) {
            return invalid(format!("heat time must be nonnegative, got {t}"));
        }
        if frame.shape() != self.shape {
            return invalid(format!("heat operator built for {}, got frame {}", self.shape, frame.shape()));
        }
        let (h, w, ch) = (self.shape.height, self.shape.width, self.shape.channels);
        let mut out = alloc::vec![0.0; frame.data().len()];
        let mut plane = alloc::vec![0.0; h * w];
        let mut tmp = alloc::vec![0.0; h * w];
        for c in 0..ch {
            for (p, v) in plane.iter_mut().zip(frame.channel(c)) {
                *p = f64::from(v);
            }
            // forward: coeff = By · X · Bxᵀ
            mul_rows(&plane, &self.basis_x, h, w, &mut tmp);
            mul_cols(&self.basis_y, &tmp, h, w, &mut plane);
            for ky in 0..h {
                for kx in 0..w {
                    // the (0, 0) multiplier is exp(0) = 1, leaving DC untouched
                    plane[ky * w + kx] *= self.attenuation(ky, kx, t);
                }
            }
            // inverse: X = Byᵀ · coeff · Bx
            mul_rows_t(&plane, &self.basis_x, h, w, &mut tmp);
            mul_cols_t(&self.basis_y, &tmp, h, w, &mut plane);
            for (i, v) in plane.iter().enumerate() {
                out[i * ch + c] = *v;
            }
        }
        Ok(out)
    }

    pub fn apply(&self, frame: &Frame, t: f64) -> Result<Frame> {
        Frame::from_f64(self.shape, &self.apply_f64(frame, t)?)
    }
}

// out[y][k] = Σ_x a[y][x] · b[k][x]
fn mul_rows(a: &[f64], b: &[f64], h: usize, w: usize, out: &mut [f64]) {
    for y in 0..h {
        for k in 0..w {
            out[y * w + k] = (0..w).map(|x| a[y * w + x] * b[k * w + x]).sum();
        }
    }
}

// out[y][x] = Σ_k a[y][k] · b[k][x]
fn mul_rows_t(a: &[f64], b: &[f64], h: usize, w: usize, out: &mut [f64]) {
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = (0..w).map(|k| a[y * w + k] * b[k * w + x]).sum();
        }
    }
}

// out[k][x] = Σ_y b[k][y] · a[y][x]
fn mul_cols(b: &[f64], a: &[f64], h: usize, w: usize, out: &mut [f64]) {
    for k in 0..h {
        for x in 0..w {
            out[k * w + x] = (0..h).map(|y| b[k * h + y] * a[y * w + x]).sum();
        }
    }
}

// out[y][x] = Σ_k b[k][y] · a[k][x]
fn mul_cols_t(b: &[f64], a: &[f64], h: usize, w: usize, out: &mut [f64]) {
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = (0..h).map(|k| b[k * h + y] * a[k * w + x]).sum();
        }
    }
}

pub fn heat_operator_apply(frame: &Frame, t: f64) -> Result<Frame> {
    HeatOperator::new(frame.shape()).apply(frame, t)
}

/// Heat-equation pseudo video. Every corrupted frame is computed from the
/// clean image directly: `frames[T-1-t] = F(t_t) · image + σ_h · ε`.
pub fn make_heat_video(image: &Frame, schedule: &HeatSchedule, rng: RngSpec) -> Result<PseudoVideo> {
    let op = HeatOperator::new(image.shape());
    let mut stream = rng.rng();
    let mut frames = Vec::with_capacity(schedule.n_frames());
    frames.push(image.clone());
    for &t in schedule.times() {
        let mut values = op.apply_f64(image, t)?;
        if schedule.sigma_h() > 0.0 {
            for v in values.iter_mut() {
                *v += schedule.sigma_h() * standard_normal(&mut stream);
            }
        }
        frames.push(Frame::from_f64(image.shape(), &values)?);
    }
    frames.reverse();
    PseudoVideo::new(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::uniform01;
    use proptest::prelude::*;

    fn random_frame(h: usize, w: usize, c: usize, seed: u64) -> Frame {
        let mut rng = RngSpec::new(seed, 1).rng();
        Frame::from_fn(Shape::new(h, w, c).unwrap(), |_, _, _| uniform01(&mut rng) as f32).unwrap()
    }

    fn max_abs_diff(a: &Frame, b: &Frame) -> f64 {
        a.data().iter().zip(b.data()).map(|(x, y)| f64::from((x - y).abs())).fold(0.0, f64::max)
    }

    #[test]
    fn zero_time_is_identity() {
        let f = random_frame(9, 13, 3, 5);
        let out = heat_operator_apply(&f, 0.0).unwrap();
        assert!(max_abs_diff(&f, &out) <= 1e-5);
    }

    #[test]
    fn negative_time_rejected() {
        let f = random_frame(4, 4, 1, 5);
        assert!(heat_operator_apply(&f, -1.0).is_err());
    }

    #[test]
    fn long_time_reaches_channel_mean() {
        let f = random_frame(8, 6, 3, 6);
        let out = heat_operator_apply(&f, 1e6).unwrap();
        for c in 0..3 {
            let m = f.channel_mean(c);
            for v in out.channel(c) {
                assert!((f64::from(v) - m).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn cosine_eigenfunction_decays_at_predicted_rate() {
        let (h, w) = (8usize, 16usize);
        let shape = Shape::new(h, w, 1).unwrap();
        for k in 1..5usize {
            let img = Frame::from_fn(shape, |_, x, _| {
                libm::cos(PI * k as f64 * (x as f64 + 0.5) / w as f64) as f32
            })
            .unwrap();
            for t in [0.5, 2.0, 10.0] {
                let out = heat_operator_apply(&img, t).unwrap();
                // least-squares scale factor between output and input
                let num: f64 = out.data().iter().zip(img.data()).map(|(a, b)| f64::from(*a) * f64::from(*b)).sum();
                let den: f64 = img.data().iter().map(|b| f64::from(*b) * f64::from(*b)).sum();
                let expected = libm::exp(-t * PI * PI * (k * k) as f64 / (w * w) as f64);
                assert!(((num / den) - expected).abs() <= 1e-3 * expected, "k={k} t={t}");
            }
        }
    }

    #[test]
    fn attenuation_monotone() {
        let op = HeatOperator::new(Shape::new(8, 8, 1).unwrap());
        for k in 0..7 {
            assert!(op.attenuation(0, k + 1, 1.0) < op.attenuation(0, k, 1.0));
            assert!(op.attenuation(k + 1, 1, 2.0) < op.attenuation(k + 1, 1, 1.0));
        }
        assert_eq!(op.attenuation(0, 0, 123.0), 1.0);
    }

    #[test]
    fn heat_video_noiseless() {
        let img = random_frame(6, 6, 1, 3);
        let s = HeatSchedule::new(std::vec![0.5, 1.0, 4.0], 0.0).unwrap();
        let v = make_heat_video(&img, &s, RngSpec::new(1, 0)).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(v.target(), &img);
        for (i, &t) in s.times().iter().enumerate() {
            assert_eq!(v.frames()[3 - 1 - i], heat_operator_apply(&img, t).unwrap());
        }
        let s0 = HeatSchedule::new(std::vec![0.0], 0.0).unwrap();
        let v0 = make_heat_video(&img, &s0, RngSpec::new(1, 0)).unwrap();
        assert!(max_abs_diff(&v0.frames()[0], &img) <= 1e-5);
    }

    #[test]
    fn heat_video_noise_level() {
        // Monte-Carlo: residual std over 10⁴ seeds, one pixel each
        let img = random_frame(2, 2, 1, 8);
        let s = HeatSchedule::new(std::vec![1.0], 0.1).unwrap();
        let clean = heat_operator_apply(&img, 1.0).unwrap();
        let n = 10_000;
        let mut sq = 0.0;
        for seed in 0..n {
            let v = make_heat_video(&img, &s, RngSpec::new(seed, 0)).unwrap();
            let r = f64::from(v.frames()[0].data()[0] - clean.data()[0]);
            sq += r * r;
        }
        let std = libm::sqrt(sq / n as f64);
        assert!((std - 0.1).abs() < 0.003, "std {std}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn semigroup_and_dc(h in 1usize..10, w in 1usize..10, seed in any::<u64>(), t1 in 0.0f64..5.0, t2 in 0.0f64..5.0) {
            let f = random_frame(h, w, 1, seed);
            let op = HeatOperator::new(f.shape());
            let both = op.apply(&f, t1 + t2).unwrap();
            let seq = op.apply(&op.apply(&f, t1).unwrap(), t2).unwrap();
            prop_assert!(max_abs_diff(&both, &seq) <= 1e-4);
            prop_assert!((both.channel_mean(0) - f.channel_mean(0)).abs() < 1e-6);
        }
    }
}

//! Gaussian kernels and recursive blur pseudo videos with periodic
//! boundaries.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::frame::{Frame, PseudoVideo};
use crate::schedule::BlurSchedule;

const NORMALIZATION_TOL: f64 = 1e-9;

/// Square, odd-sized convolution kernel whose weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    size: usize,
    weights: Vec<f64>,
}

impl Kernel {
    /// Wraps row-major weights, rejecting even sizes and kernels that do not
    /// sum to one.
    pub fn from_weights(size: usize, weights: Vec<f64>) -> Result<Self> {
        if size == 0 || size.is_multiple_of(2) {
            return invalid(format!("kernel size must be odd, got {size}"));
        }
        if weights.len() != size * size {
            return invalid(format!("kernel of size {size} needs {} weights, got {}", size * size, weights.len()));
        }
        let sum: f64 = weights.iter().sum();
        if !sum.is_finite() || (sum - 1.0).abs() > NORMALIZATION_TOL {
            return invalid(format!("kernel weights sum to {sum}, expected 1"));
        }
        Ok(Self { size, weights })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `(dy, dx)` from the center.
    pub fn at(&self, dy: isize, dx: isize) -> f64 {
        let r = self.radius() as isize;
        self.weights[((dy + r) * self.size as isize + dx + r) as usize]
    }

    pub fn center(&self) -> f64 {
        self.at(0, 0)
    }
}

/// `size × size` kernel with entries proportional to
/// `exp(-(i² + j²) / (2σ²))`, divided by their computed sum.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Result<Kernel> {
    if size < 3 || size.is_multiple_of(2) {
        return invalid(format!("Gaussian kernel size must be odd and >= 3, got {size}"));
    }
    if !(sigma > 0.0) {
        return invalid(format!("Gaussian kernel sigma must be positive, got {sigma}"));
    }
    let r = (size / 2) as isize;
    let denom = 2.0 * sigma * sigma;
    let mut weights = Vec::with_capacity(size * size);
    for i in -r..=r {
        for j in -r..=r {
            weights.push(libm::exp(-((i * i + j * j) as f64) / denom));
        }
    }
    let sum: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= sum);
    Kernel::from_weights(size, weights)
}

/// Per-channel 2-D convolution with wrap-around boundaries. Kernels larger
/// than the frame simply wrap more than once.
pub fn blur_frame(frame: &Frame, kernel: &Kernel) -> Result<Frame> {
    let shape = frame.shape();
    let (h, w, ch) = (shape.height as isize, shape.width as isize, shape.channels);
    let r = kernel.radius() as isize;
    let src = frame.data();
    let mut out = Vec::with_capacity(src.len());
    let mut acc = alloc::vec![0.0f64; ch];
    for y in 0..h {
        for x in 0..w {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for dy in -r..=r {
                let sy = (y - dy).rem_euclid(h);
                for dx in -r..=r {
                    let sx = (x - dx).rem_euclid(w);
                    let k = kernel.at(dy, dx);
                    let base = (sy * w + sx) as usize * ch;
                    for (c, a) in acc.iter_mut().enumerate() {
                        *a += k * f64::from(src[base + c]);
                    }
                }
            }
            out.extend(acc.iter().map(|&a| a as f32));
        }
    }
    Frame::new(shape, out)
}

/// Recursive blur video: the last frame is `image`, and each earlier frame
/// blurs its successor with `σ_t`, so frame 0 is the blurriest.
pub fn make_blur_video(image: &Frame, schedule: &BlurSchedule) -> Result<PseudoVideo> {
    let mut frames = Vec::with_capacity(schedule.n_frames());
    frames.push(image.clone());
    for t in 1..schedule.n_frames() {
        let kernel = gaussian_kernel(schedule.kernel_size(), schedule.sigma(t))?;
        let next = blur_frame(&frames[t - 1], &kernel)?;
        frames.push(next);
    }
    frames.reverse();
    PseudoVideo::new(frames)
}

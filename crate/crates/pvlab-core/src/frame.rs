use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Height, width and channel count of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl Shape {
    pub fn new(height: usize, width: usize, channels: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return invalid(format!("frame dimensions must be positive, got {height}x{width}"));
        }
        if channels != 1 && channels != 3 {
            return invalid(format!("channels must be 1 or 3, got {channels}"));
        }
        height
            .checked_mul(width)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| Error::InvalidArgument(format!("frame {height}x{width}x{channels} overflows")))?;
        Ok(Self { height, width, channels })
    }

    /// Number of scalar values in a frame of this shape.
    pub fn len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pixels(&self) -> usize {
        self.height * self.width
    }
}

impl core::fmt::Display for Shape {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}x{}x{}", self.height, self.width, self.channels)
    }
}

/// A single image: row-major, channel-interleaved 32-bit values.
///
/// All values are finite. Images loaded from disk lie in `[0, 1]`;
/// corrupted frames may leave that range.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    shape: Shape,
    data: Vec<f32>,
}

impl Frame {
    pub fn new(shape: Shape, data: Vec<f32>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values for {shape}", shape.len()),
                found: format!("{} values", data.len()),
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return invalid(format!("non-finite value {} at index {i}", data[i]));
        }
        Ok(Self { shape, data })
    }

    pub fn filled(shape: Shape, value: f32) -> Result<Self> {
        Self::new(shape, alloc::vec![value; shape.len()])
    }

    /// Builds a frame from `f(y, x, c)`.
    pub fn from_fn(shape: Shape, mut f: impl FnMut(usize, usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(shape.len());
        for y in 0..shape.height {
            for x in 0..shape.width {
                for c in 0..shape.channels {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::new(shape, data)
    }

    /// Converts 64-bit values, checking finiteness after the narrowing cast.
    pub fn from_f64(shape: Shape, values: &[f64]) -> Result<Self> {
        Self::new(shape, values.iter().map(|&v| v as f32).collect())
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn height(&self) -> usize {
        self.shape.height
    }

    pub fn width(&self) -> usize {
        self.shape.width
    }

    pub fn channels(&self) -> usize {
        self.shape.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.shape.width + x) * self.shape.channels + c]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| f64::from(v)).collect()
    }

    /// Values of channel `c` in row-major order.
    pub fn channel(&self, c: usize) -> impl Iterator<Item = f32> + '_ {
        self.data.iter().skip(c).step_by(self.shape.channels).copied()
    }

    pub fn channel_mean(&self, c: usize) -> f64 {
        self.channel(c).map(f64::from).sum::<f64>() / self.shape.pixels() as f64
    }

    /// Population variance of channel `c`.
    pub fn channel_variance(&self, c: usize) -> f64 {
        let mean = self.channel_mean(c);
        self.channel(c)
            .map(|v| {
                let e = f64::from(v) - mean;
                e * e
            })
            .sum::<f64>()
            / self.shape.pixels() as f64
    }
}

/// Ordered frame sequence. `frames[0]` is the most corrupted frame and the
/// last frame is the original image.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoVideo {
    frames: Vec<Frame>,
}

impl PseudoVideo {
    pub fn new(frames: Vec<Frame>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return invalid("a pseudo video needs at least one frame");
        };
        let shape = first.shape();
        if let Some((i, f)) = frames.iter().enumerate().find(|(_, f)| f.shape() != shape) {
            return Err(Error::ShapeMismatch {
                expected: format!("{shape}"),
                found: format!("{} at frame {i}", f.shape()),
            });
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn shape(&self) -> Shape {
        self.frames[0].shape()
    }

    /// The clean frame (`x_T`).
    pub fn target(&self) -> &Frame {
        &self.frames[self.frames.len() - 1]
    }
}

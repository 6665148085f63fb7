//! Binary PGM (P5) and PPM (P6) images with maxval 255.

use std::fs;
use std::path::Path;

use pvlab_core::{Frame, Shape};

use crate::error::{FormatError, IoError};

/// Decodes a P5 or P6 image. Pixel `p` becomes `p / 255`.
pub fn decode_image(bytes: &[u8]) -> Result<Frame, FormatError> {
    let mut cur = Header { bytes, pos: 0 };
    let magic = cur.token()?;
    let channels = match magic.as_slice() {
        b"P5" => 1,
        b"P6" => 3,
        _ => return Err(FormatError::new(0, format!("unsupported magic {:?}", String::from_utf8_lossy(&magic)))),
    };
    let width = cur.number()?;
    let height = cur.number()?;
    cur.skip_space();
    let maxval_at = cur.pos;
    let maxval = cur.number()?;
    if maxval != 255 {
        return Err(FormatError::new(maxval_at, format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
        return Err(FormatError::new(cur.pos, "missing whitespace after header"));
    }
    let start = cur.pos + 1;
    let shape = Shape::new(height, width, channels).map_err(|e| FormatError::new(0, e.to_string()))?;
    let need = shape.len();
    if bytes.len() - start < need {
        return Err(FormatError::new(bytes.len(), format!("raster truncated: {} of {need} bytes", bytes.len() - start)));
    }
    let data = bytes[start..start + need].iter().map(|&p| f32::from(p) / 255.0).collect();
    Frame::new(shape, data).map_err(|e| FormatError::new(start, e.to_string()))
}

/// Encodes a frame as P5 (one channel) or P6 (three channels), clamping to
/// `[0, 1]` and rounding to the nearest level.
pub fn encode_image(frame: &Frame) -> Vec<u8> {
    let magic = if frame.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    out.extend(frame.data().iter().map(|&v| quantize(v)));
    out
}

pub fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn read_image(path: &Path) -> Result<Frame, IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::io(path, e))?;
    decode_image(&bytes).map_err(|e| IoError::format(path, e))
}

pub fn write_image(frame: &Frame, path: &Path) -> Result<(), IoError> {
    fs::write(path, encode_image(frame)).map_err(|e| IoError::io(path, e))
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<Vec<u8>, FormatError> {
        self.skip_space();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() && self.bytes[self.pos] != b'#' {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(FormatError::new(start, "unexpected end of header"));
        }
        Ok(self.bytes[start..self.pos].to_vec())
    }

    fn number(&mut self) -> Result<usize, FormatError> {
        self.skip_space();
        let at = self.pos;
        let tok = self.token()?;
        std::str::from_utf8(&tok)
            .ok()
            .filter(|s| s.bytes().all(|b| b.is_ascii_digit()))
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| FormatError::new(at, format!("expected a decimal number, found {:?}", String::from_utf8_lossy(&tok))))
    }
}

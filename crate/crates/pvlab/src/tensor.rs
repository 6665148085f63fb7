//! `.pvid` tensor files.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `PVID` |
//! | 4     | version (`1`) |
//! | 16    | `T`, `H`, `W`, `C` as `u32` |
//! | 4·T·H·W·C | `f32` payload, frame-major then row-major, channels innermost |

use std::fs;
use std::path::Path;

use pvlab_core::{Frame, PseudoVideo, Shape};

use crate::error::{FormatError, IoError};

pub const MAGIC: &[u8; 4] = b"PVID";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 24;

pub fn encode_video(video: &PseudoVideo) -> Vec<u8> {
    let shape = video.shape();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * video.len() * shape.len());
    out.extend_from_slice(MAGIC);
    for v in [VERSION, video.len() as u32, shape.height as u32, shape.width as u32, shape.channels as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for frame in video.frames() {
        for v in frame.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn decode_video(bytes: &[u8]) -> Result<PseudoVideo, FormatError> {
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::new(bytes.len(), format!("header truncated: {} of {HEADER_LEN} bytes", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(FormatError::new(0, format!("bad magic {:?}", String::from_utf8_lossy(&bytes[..4]))));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    if word(0) != VERSION {
        return Err(FormatError::new(4, format!("unsupported version {}", word(0))));
    }
    let dims = [word(1), word(2), word(3), word(4)];
    if let Some(i) = dims.iter().position(|&d| d == 0) {
        return Err(FormatError::new(8 + 4 * i, "zero dimension"));
    }
    let [t, h, w, c] = dims.map(|d| d as usize);
    if c != 1 && c != 3 {
        return Err(FormatError::new(20, format!("unsupported channel count {c}")));
    }
    let count = [t, h, w, c].iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
    let payload = count.and_then(|n| n.checked_mul(4)).ok_or_else(|| FormatError::new(8, "dimensions overflow"))?;
    let available = bytes.len() - HEADER_LEN;
    if available < payload {
        return Err(FormatError::new(bytes.len(), format!("payload truncated: {available} of {payload} bytes")));
    }
    if available > payload {
        return Err(FormatError::new(HEADER_LEN + payload, "trailing bytes after payload"));
    }
    let shape = Shape::new(h, w, c).map_err(|e| FormatError::new(12, e.to_string()))?;
    let frame_bytes = 4 * shape.len();
    let frames = bytes[HEADER_LEN..]
        .chunks_exact(frame_bytes)
        .enumerate()
        .map(|(i, chunk)| {
            let data = chunk.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect();
            Frame::new(shape, data).map_err(|e| FormatError::new(HEADER_LEN + i * frame_bytes, e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    PseudoVideo::new(frames).map_err(|e| FormatError::new(HEADER_LEN, e.to_string()))
}

pub fn write_video(video: &PseudoVideo, path: &Path) -> Result<(), IoError> {
    fs::write(path, encode_video(video)).map_err(|e| IoError::io(path, e))
}

pub fn read_video(path: &Path) -> Result<PseudoVideo, IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::io(path, e))?;
    decode_video(&bytes).map_err(|e| IoError::format(path, e))
}

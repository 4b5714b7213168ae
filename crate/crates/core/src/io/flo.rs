//! Middlebury `.flo`: magic float 202021.25, i32 width, i32 height, then
//! row-major interleaved f32 `(u, v)`, all little-endian.

use crate::error::{Error, Result};
use crate::flowfield::FlowField;

pub const FLO_MAGIC: f32 = 202021.25;

pub fn write_flo(field: &FlowField) -> Vec<u8> {
    let (w, h) = (field.width(), field.height());
    let mut out = Vec::with_capacity(12 + 8 * w * h);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    for (u, v) in field.u().iter().zip(field.v()) {
        out.extend_from_slice(&(*u as f32).to_le_bytes());
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn read_flo(bytes: &[u8]) -> Result<FlowField> {
    if bytes.len() < 12 {
        return Err(Error::Format("flo: truncated header".into()));
    }
    let word = |i: usize| [bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]];
    if f32::from_le_bytes(word(0)) != FLO_MAGIC {
        return Err(Error::Format("flo: bad magic".into()));
    }
    let (w, h) = (i32::from_le_bytes(word(4)), i32::from_le_bytes(word(8)));
    if w <= 0 || h <= 0 {
        return Err(Error::Format(format!("flo: invalid size {w}x{h}")));
    }
    let n = w as usize * h as usize;
    if bytes.len() != 12 + 8 * n {
        return Err(Error::Format(format!(
            "flo: expected {} bytes for {w}x{h}, found {}",
            12 + 8 * n,
            bytes.len()
        )));
    }
    let mut u = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for k in 0..n {
        u.push(f32::from_le_bytes(word(12 + 8 * k)) as f64);
        v.push(f32::from_le_bytes(word(16 + 8 * k)) as f64);
    }
    FlowField::new(w as usize, h as usize, u, v).map_err(|e| Error::Format(format!("flo: {e}")))
}

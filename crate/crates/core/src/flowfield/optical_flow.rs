//! Global-smoothness (Horn–Schunck style) dense optical flow.
//!
//! Spatial derivatives are central differences averaged over both frames,
//! the temporal derivative is the frame difference. The solver is a plain
//! Jacobi iteration started from zero, so every sweep only reads the
//! previous iterate and rows can be updated in parallel.

use rayon::prelude::*;

use super::{FlowField, Frame};
use crate::error::{Error, Result};

pub const DEFAULT_SMOOTHNESS: f64 = 1.0;
pub const DEFAULT_ITERATIONS: usize = 200;

pub fn estimate_optical_flow(
    prev: &Frame,
    next: &Frame,
    smoothness: f64,
    iterations: usize,
) -> Result<FlowField> {
    if prev.width() != next.width() || prev.height() != next.height() {
        return Err(Error::FrameSizeMismatch);
    }
    if !(smoothness.is_finite() && smoothness > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "smoothness {smoothness} must be positive"
        )));
    }
    if iterations == 0 {
        return Err(Error::InvalidArgument("iterations must be positive".into()));
    }
    let (w, h) = (prev.width(), prev.height());
    let alpha2 = smoothness * smoothness;

    let mut ix = vec![0.0; w * h];
    let mut iy = vec![0.0; w * h];
    let mut it = vec![0.0; w * h];
    for y in 0..h {
        let (ym, yp) = (y.saturating_sub(1), (y + 1).min(h - 1));
        for x in 0..w {
            let (xm, xp) = (x.saturating_sub(1), (x + 1).min(w - 1));
            let i = y * w + x;
            let dx = |f: &Frame| 0.5 * (f.get(xp, y) - f.get(xm, y));
            let dy = |f: &Frame| 0.5 * (f.get(x, yp) - f.get(x, ym));
            ix[i] = 0.5 * (dx(prev) + dx(next));
            iy[i] = 0.5 * (dy(prev) + dy(next));
            it[i] = next.get(x, y) - prev.get(x, y);
        }
    }

    let mut u = vec![0.0; w * h];
    let mut v = vec![0.0; w * h];
    let mut u_next = vec![0.0; w * h];
    let mut v_next = vec![0.0; w * h];
    for _ in 0..iterations {
        u_next
            .par_chunks_mut(w)
            .zip(v_next.par_chunks_mut(w))
            .enumerate()
            .for_each(|(y, (urow, vrow))| {
                for x in 0..w {
                    let ubar = neighbour_mean(&u, w, h, x, y);
                    let vbar = neighbour_mean(&v, w, h, x, y);
                    let i = y * w + x;
                    let k = (ix[i] * ubar + iy[i] * vbar + it[i])
                        / (alpha2 + ix[i] * ix[i] + iy[i] * iy[i]);
                    urow[x] = ubar - ix[i] * k;
                    vrow[x] = vbar - iy[i] * k;
                }
            });
        std::mem::swap(&mut u, &mut u_next);
        std::mem::swap(&mut v, &mut v_next);
    }
    FlowField::new(w, h, u, v)
}

/// Horn–Schunck Laplacian weights: 1/6 on edges, 1/12 on diagonals,
/// replicated borders.
#[inline]
fn neighbour_mean(f: &[f64], w: usize, h: usize, x: usize, y: usize) -> f64 {
    let (xm, xp) = (x.saturating_sub(1), (x + 1).min(w - 1));
    let (ym, yp) = (y.saturating_sub(1), (y + 1).min(h - 1));
    let at = |xx: usize, yy: usize| f[yy * w + xx];
    (at(xm, y) + at(xp, y) + at(x, ym) + at(x, yp)) / 6.0
        + (at(xm, ym) + at(xp, ym) + at(xm, yp) + at(xp, yp)) / 12.0
}

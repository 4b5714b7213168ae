//! Dense 2-D flow fields: estimation from frames, temporal averaging,
//! bilinear sampling and diagnostics.

mod optical_flow;
mod spectrum;

pub use optical_flow::{estimate_optical_flow, DEFAULT_ITERATIONS, DEFAULT_SMOOTHNESS};
pub use spectrum::{flow_spectrum, FlowSpectrum};

use crate::error::{Error, Result};
use crate::field::ScalarField;

/// Smallest frame side accepted; gradient stencils need room.
pub const MIN_FRAME_SIDE: usize = 8;

/// Grayscale frame with intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width < MIN_FRAME_SIDE || height < MIN_FRAME_SIDE {
            return Err(Error::InvalidFrame(format!(
                "{width}x{height} is smaller than {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidFrame(format!(
                "{} samples for a {width}x{height} frame",
                data.len()
            )));
        }
        if let Some(bad) = data
            .iter()
            .find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0)
        {
            return Err(Error::InvalidFrame(format!(
                "intensity {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Bilinear intensity lookup with edge clamping.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        bilinear(&self.data, self.width, self.height, x, y)
    }
}

/// Velocity field `(u, v)` in pixels per frame; `+x` rightward, `+y` downward.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::InvalidArgument(format!(
                "flow field {width}x{height} is too small"
            )));
        }
        if u.len() != width * height || v.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "component lengths {}/{} for a {width}x{height} field",
                u.len(),
                v.len()
            )));
        }
        if u.iter().chain(v.iter()).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("flow field"));
        }
        Ok(Self {
            width,
            height,
            u,
            v,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::constant(width, height, 0.0, 0.0)
    }

    pub fn constant(width: usize, height: usize, u: f64, v: f64) -> Result<Self> {
        Self::new(
            width,
            height,
            vec![u; width * height],
            vec![v; width * height],
        )
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> (f64, f64),
    ) -> Result<Self> {
        let mut u = Vec::with_capacity(width * height);
        let mut v = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(x, y);
                u.push(a);
                v.push(b);
            }
        }
        Self::new(width, height, u, v)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    pub fn same_shape(&self, other: &FlowField) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Bilinear sample at `(x, y)`; coordinates outside the lattice are
    /// clamped to the border first.
    pub fn sample(&self, x: f64, y: f64) -> (f64, f64) {
        (
            bilinear(&self.u, self.width, self.height, x, y),
            bilinear(&self.v, self.width, self.height, x, y),
        )
    }

    /// Rounds both components through `f32`, the `.flo` storage precision.
    pub fn quantized(&self) -> Self {
        let q = |c: &[f64]| c.iter().map(|&x| x as f32 as f64).collect();
        Self {
            width: self.width,
            height: self.height,
            u: q(&self.u),
            v: q(&self.v),
        }
    }
}

pub fn sample_bilinear(field: &FlowField, x: f64, y: f64) -> (f64, f64) {
    field.sample(x, y)
}

pub(crate) fn bilinear(data: &[f64], width: usize, height: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (width - 1) as f64);
    let y = y.clamp(0.0, (height - 1) as f64);
    let x0 = (x.floor() as usize).min(width - 2);
    let y0 = (y.floor() as usize).min(height - 2);
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let i = y0 * width + x0;
    let top = (1.0 - fx) * data[i] + fx * data[i + 1];
    let bottom = (1.0 - fx) * data[i + width] + fx * data[i + width + 1];
    (1.0 - fy) * top + fy * bottom
}

/// Per-pixel arithmetic mean of a non-empty sequence of fields.
pub fn average_flow(fields: &[FlowField]) -> Result<FlowField> {
    let first = fields.first().ok_or(Error::NothingToAverage)?;
    if let Some(bad) = fields.iter().find(|f| !f.same_shape(first)) {
        return Err(Error::DimensionMismatch(format!(
            "cannot average {}x{} with {}x{}",
            first.width, first.height, bad.width, bad.height
        )));
    }
    let n = fields.len() as f64;
    let len = first.width * first.height;
    let mut u = vec![0.0; len];
    let mut v = vec![0.0; len];
    for f in fields {
        for i in 0..len {
            u[i] += f.u[i];
            v[i] += f.v[i];
        }
    }
    u.iter_mut().chain(v.iter_mut()).for_each(|c| *c /= n);
    FlowField::new(first.width, first.height, u, v)
}

/// Trailing windowed means: output `k` averages `fields[k..k + window]`.
pub fn sliding_average(fields: &[FlowField], window: usize) -> Result<Vec<FlowField>> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be positive".into()));
    }
    if fields.len() < window {
        return average_flow(fields).map(|f| vec![f]);
    }
    fields.windows(window).map(average_flow).collect()
}

pub fn flow_magnitude(field: &FlowField) -> ScalarField {
    let values = field
        .u
        .iter()
        .zip(&field.v)
        .map(|(u, v)| u.hypot(*v))
        .collect();
    ScalarField::from_parts_unchecked(field.width, field.height, values, (0, 0))
}

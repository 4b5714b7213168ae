//! Particle advection through a velocity source with fixed-step RK4,
//! producing forward and backward flow maps.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flowfield::FlowField;

pub const DEFAULT_DURATION: f64 = 30.0;
pub const DEFAULT_STEP: f64 = 0.5;

/// Anything that yields a velocity `(u, v)` in px/frame at a position and time.
///
/// Positions handed to `velocity` are always inside `[0, width-1] x [0, height-1]`.
pub trait VelocitySource: Sync {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn velocity(&self, x: f64, y: f64, t: f64) -> (f64, f64);

    /// Time interval covered by the source, if it has one. Forward
    /// integration starts at its beginning, backward at its end.
    fn time_span(&self) -> Option<(f64, f64)> {
        None
    }

    fn clamp(&self, (x, y): (f64, f64)) -> (f64, f64) {
        (
            x.clamp(0.0, (self.width() - 1) as f64),
            y.clamp(0.0, (self.height() - 1) as f64),
        )
    }
}

/// A single (typically averaged) field, constant in time.
impl VelocitySource for FlowField {
    fn width(&self) -> usize {
        FlowField::width(self)
    }

    fn height(&self) -> usize {
        FlowField::height(self)
    }

    fn velocity(&self, x: f64, y: f64, _t: f64) -> (f64, f64) {
        self.sample(x, y)
    }
}

/// Per-frame fields; the field for time `t` is `fields[floor(t)]`, clamped
/// to the available range.
#[derive(Debug, Clone, Copy)]
pub struct FlowSequence<'a> {
    fields: &'a [FlowField],
}

impl<'a> FlowSequence<'a> {
    pub fn new(fields: &'a [FlowField]) -> Result<Self> {
        let first = fields.first().ok_or(Error::NothingToAverage)?;
        if fields.iter().any(|f| !f.same_shape(first)) {
            return Err(Error::DimensionMismatch(
                "flow sequence fields differ in size".into(),
            ));
        }
        Ok(Self { fields })
    }

    fn field_at(&self, t: f64) -> &FlowField {
        let last = self.fields.len() - 1;
        let idx = if t <= 0.0 {
            0
        } else {
            (t.floor() as usize).min(last)
        };
        &self.fields[idx]
    }
}

impl VelocitySource for FlowSequence<'_> {
    fn width(&self) -> usize {
        self.fields[0].width()
    }

    fn height(&self) -> usize {
        self.fields[0].height()
    }

    fn velocity(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        self.field_at(t).sample(x, y)
    }

    fn time_span(&self) -> Option<(f64, f64)> {
        Some((0.0, self.fields.len() as f64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Direction::Forward => 0,
            Direction::Backward => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Direction::Forward),
            1 => Some(Direction::Backward),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdvectionMode {
    /// One time-independent field.
    Steady,
    /// A per-frame sequence of fields.
    Unsteady,
}

/// Integration length and step. The length is snapped to the nearest
/// whole number of steps on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSpec {
    duration: f64,
    step: f64,
    steps: usize,
    pub direction: Direction,
    pub mode: AdvectionMode,
}

impl IntegrationSpec {
    pub fn new(
        duration: f64,
        step: f64,
        direction: Direction,
        mode: AdvectionMode,
    ) -> Result<Self> {
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "integration length {duration} must be positive"
            )));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "step {step} must be positive"
            )));
        }
        if step > duration {
            return Err(Error::InvalidArgument(format!(
                "step {step} exceeds integration length {duration}"
            )));
        }
        let steps = ((duration / step).round() as usize).max(1);
        Ok(Self {
            duration: steps as f64 * step,
            step,
            steps,
            direction,
            mode,
        })
    }

    pub fn steady(duration: f64, step: f64, direction: Direction) -> Result<Self> {
        Self::new(duration, step, direction, AdvectionMode::Steady)
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn with_direction(self, direction: Direction) -> Self {
        Self { direction, ..self }
    }
}

/// Regular lattice of seed positions `(origin + col*step_x, origin + row*step_y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleGrid {
    pub origin_x: f64,
    pub origin_y: f64,
    pub step_x: f64,
    pub step_y: f64,
    pub cols: usize,
    pub rows: usize,
}

impl ParticleGrid {
    pub fn new(
        origin_x: f64,
        origin_y: f64,
        step_x: f64,
        step_y: f64,
        cols: usize,
        rows: usize,
    ) -> Result<Self> {
        if cols < 3 || rows < 3 {
            return Err(Error::InvalidArgument(format!(
                "particle grid {cols}x{rows} needs at least 3x3 particles"
            )));
        }
        let ok = |s: f64| s.is_finite() && s > 0.0;
        if !ok(step_x) || !ok(step_y) || !origin_x.is_finite() || !origin_y.is_finite() {
            return Err(Error::InvalidArgument(
                "particle grid geometry must be finite with positive steps".into(),
            ));
        }
        Ok(Self {
            origin_x,
            origin_y,
            step_x,
            step_y,
            cols,
            rows,
        })
    }

    /// Grid anchored at (0, 0) with spacing `step` spanning a `width x height` domain.
    pub fn covering(width: usize, height: usize, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grid step {step} must be positive"
            )));
        }
        let count = |extent: usize| ((extent.saturating_sub(1)) as f64 / step).floor() as usize + 1;
        Self::new(0.0, 0.0, step, step, count(width), count(height))
    }

    #[inline]
    pub fn position(&self, col: usize, row: usize) -> (f64, f64) {
        (
            self.origin_x + col as f64 * self.step_x,
            self.origin_y + row as f64 * self.step_y,
        )
    }

    pub fn positions(&self) -> Vec<(f64, f64)> {
        (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| (r, c)))
            .map(|(r, c)| self.position(c, r))
            .collect()
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        let (x1, y1) = self.position(self.cols - 1, self.rows - 1);
        let (wmax, hmax) = ((width - 1) as f64, (height - 1) as f64);
        self.origin_x >= 0.0 && self.origin_y >= 0.0 && x1 <= wmax && y1 <= hmax
    }
}

/// Final particle positions after integrating for `duration` frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMap {
    grid: ParticleGrid,
    final_x: Vec<f64>,
    final_y: Vec<f64>,
    direction: Direction,
    duration: f64,
}

impl FlowMap {
    pub fn new(
        grid: ParticleGrid,
        final_x: Vec<f64>,
        final_y: Vec<f64>,
        direction: Direction,
        duration: f64,
    ) -> Result<Self> {
        let n = grid.cols * grid.rows;
        if final_x.len() != n || final_y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "flow map planes hold {}/{} values, grid has {n}",
                final_x.len(),
                final_y.len()
            )));
        }
        if final_x.iter().chain(&final_y).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("flow map"));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "flow map length {duration} must be positive"
            )));
        }
        Ok(Self {
            grid,
            final_x,
            final_y,
            direction,
            duration,
        })
    }

    /// The map that leaves every particle where it started.
    pub fn identity(grid: ParticleGrid, direction: Direction, duration: f64) -> Result<Self> {
        let (xs, ys) = grid.positions().into_iter().unzip();
        Self::new(grid, xs, ys, direction, duration)
    }

    pub fn grid(&self) -> &ParticleGrid {
        &self.grid
    }

    pub fn cols(&self) -> usize {
        self.grid.cols
    }

    pub fn rows(&self) -> usize {
        self.grid.rows
    }

    /// The x-flow map: final x coordinate per particle, row-major.
    pub fn final_x(&self) -> &[f64] {
        &self.final_x
    }

    /// The y-flow map.
    pub fn final_y(&self) -> &[f64] {
        &self.final_y
    }

    #[inline]
    pub fn final_position(&self, col: usize, row: usize) -> (f64, f64) {
        let i = row * self.grid.cols + col;
        (self.final_x[i], self.final_y[i])
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Rounds positions and length through `f32`, the FMAP storage precision.
    pub fn quantized(&self) -> Self {
        let q = |c: &[f64]| c.iter().map(|&x| x as f32 as f64).collect();
        Self {
            grid: self.grid,
            final_x: q(&self.final_x),
            final_y: q(&self.final_y),
            direction: self.direction,
            duration: self.duration as f32 as f64,
        }
    }
}

/// One classical RK4 step of `dx/dt = sign * V(x, t)`; the result is clamped
/// to the source's domain.
pub fn rk4_step<S: VelocitySource + ?Sized>(
    source: &S,
    pos: (f64, f64),
    t: f64,
    h: f64,
    direction: Direction,
) -> (f64, f64) {
    let s = direction.sign();
    let f = |p: (f64, f64), time: f64| {
        let (x, y) = source.clamp(p);
        let (u, v) = source.velocity(x, y, time);
        (s * u, s * v)
    };
    let half = 0.5 * h;
    let k1 = f(pos, t);
    let k2 = f((pos.0 + half * k1.0, pos.1 + half * k1.1), t + s * half);
    let k3 = f((pos.0 + half * k2.0, pos.1 + half * k2.1), t + s * half);
    let k4 = f((pos.0 + h * k3.0, pos.1 + h * k3.1), t + s * h);
    source.clamp((
        pos.0 + h * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0) / 6.0,
        pos.1 + h * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1) / 6.0,
    ))
}

fn start_time<S: VelocitySource + ?Sized>(source: &S, direction: Direction) -> f64 {
    match (source.time_span(), direction) {
        (Some((t0, _)), Direction::Forward) => t0,
        (Some((_, t1)), Direction::Backward) => t1,
        (None, _) => 0.0,
    }
}

/// Integrates every position in place for `spec.steps()` RK4 steps.
pub fn advect_positions<S: VelocitySource + ?Sized>(
    source: &S,
    positions: &mut [(f64, f64)],
    spec: &IntegrationSpec,
) {
    let t0 = start_time(source, spec.direction);
    let sign = spec.direction.sign();
    let h = spec.step;
    positions.par_iter_mut().for_each(|p| {
        let mut pos = source.clamp(*p);
        for k in 0..spec.steps {
            let t = t0 + sign * k as f64 * h;
            pos = rk4_step(source, pos, t, h, spec.direction);
        }
        *p = pos;
    });
}

pub fn advect_grid<S: VelocitySource + ?Sized>(
    source: &S,
    grid: &ParticleGrid,
    spec: &IntegrationSpec,
) -> Result<FlowMap> {
    if !grid.fits(source.width(), source.height()) {
        return Err(Error::GridExceedsField);
    }
    let mut positions = grid.positions();
    advect_positions(source, &mut positions, spec);
    let (xs, ys) = positions.into_iter().unzip();
    FlowMap::new(*grid, xs, ys, spec.direction, spec.duration)
}

/// Forward and time-reversed maps over the same grid.
pub fn advect_both<S: VelocitySource + ?Sized>(
    source: &S,
    grid: &ParticleGrid,
    duration: f64,
    step: f64,
    mode: AdvectionMode,
) -> Result<(FlowMap, FlowMap)> {
    let spec = IntegrationSpec::new(duration, step, Direction::Forward, mode)?;
    let forward = advect_grid(source, grid, &spec)?;
    let backward = advect_grid(source, grid, &spec.with_direction(Direction::Backward))?;
    Ok((forward, backward))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn saddle(n: usize, a: f64) -> FlowField {
        let c = (n - 1) as f64 / 2.0;
        FlowField::from_fn(n, n, |x, y| (a * (x as f64 - c), -a * (y as f64 - c))).unwrap()
    }

    #[test]
    fn spec_snaps_length_to_steps() {
        let s = IntegrationSpec::steady(10.2, 0.5, Direction::Forward).unwrap();
        assert_eq!(s.steps(), 20);
        assert_eq!(s.duration(), 10.0);
        assert!(IntegrationSpec::steady(1.0, 2.0, Direction::Forward).is_err());
        assert!(IntegrationSpec::steady(0.0, 0.5, Direction::Forward).is_err());
    }

    #[test]
    fn rk4_zero_and_constant() {
        let z = FlowField::zeros(16, 16).unwrap();
        assert_eq!(
            rk4_step(&z, (3.25, 7.5), 0.0, 1.0, Direction::Forward),
            (3.25, 7.5)
        );
        let c = FlowField::constant(16, 16, 1.0, 0.0).unwrap();
        assert_eq!(
            rk4_step(&c, (5.0, 5.0), 0.0, 1.0, Direction::Forward),
            (6.0, 5.0)
        );
        assert_eq!(
            rk4_step(&c, (5.0, 5.0), 0.0, 1.0, Direction::Backward),
            (4.0, 5.0)
        );
    }

    #[test]
    fn rk4_saddle_one_step_matches_exponential() {
        let a = 0.05;
        let f = saddle(64, a);
        let c = 31.5;
        for &(x, y) in &[(40.0, 20.0), (25.3, 37.9), (31.5, 31.5)] {
            let (px, py) = rk4_step(&f, (x, y), 0.0, 1.0, Direction::Forward);
            let ex = c + (x - c) * (a * 1.0f64).exp();
            let ey = c + (y - c) * (-a * 1.0f64).exp();
            assert!((px - ex).abs() < 1e-7 && (py - ey).abs() < 1e-7);
        }
    }

    #[test]
    fn grid_exceeding_field_is_rejected() {
        let f = FlowField::zeros(10, 10).unwrap();
        let g = ParticleGrid::new(0.0, 0.0, 1.0, 1.0, 11, 10).unwrap();
        let spec = IntegrationSpec::steady(2.0, 1.0, Direction::Forward).unwrap();
        assert!(matches!(
            advect_grid(&f, &g, &spec),
            Err(Error::GridExceedsField)
        ));
    }

    #[test]
    fn identity_map_for_zero_field() {
        let f = FlowField::zeros(12, 9).unwrap();
        let g = ParticleGrid::covering(12, 9, 1.0).unwrap();
        let (fw, bw) = advect_both(&f, &g, 5.0, 0.5, AdvectionMode::Steady).unwrap();
        let id = g.positions();
        for (i, &(x, y)) in id.iter().enumerate() {
            assert_eq!((fw.final_x()[i], fw.final_y()[i]), (x, y));
            assert_eq!((bw.final_x()[i], bw.final_y()[i]), (x, y));
        }
    }

    #[test]
    fn constant_translation_with_clamping() {
        let f = FlowField::constant(20, 8, 1.0, 0.0).unwrap();
        let g = ParticleGrid::covering(20, 8, 1.0).unwrap();
        let spec = IntegrationSpec::steady(10.0, 1.0, Direction::Forward).unwrap();
        let m = advect_grid(&f, &g, &spec).unwrap();
        for r in 0..8 {
            for c in 0..20 {
                let (x, y) = m.final_position(c, r);
                assert_eq!(x, (c as f64 + 10.0).min(19.0));
                assert_eq!(y, r as f64);
            }
        }
        let (fw, bw) = advect_both(&f, &g, 5.0, 0.5, AdvectionMode::Steady).unwrap();
        assert_eq!(fw.final_position(4, 2).0, 9.0);
        assert_eq!(bw.final_position(7, 2).0, 2.0);
        assert_eq!(bw.final_position(3, 2).0, 0.0);
    }

    #[test]
    fn unsteady_sequence_indexes_frames() {
        let fields = vec![
            FlowField::constant(16, 16, 1.0, 0.0).unwrap(),
            FlowField::constant(16, 16, 0.0, 1.0).unwrap(),
        ];
        let seq = FlowSequence::new(&fields).unwrap();
        let g = ParticleGrid::new(4.0, 4.0, 1.0, 1.0, 3, 3).unwrap();
        let spec =
            IntegrationSpec::new(2.0, 0.5, Direction::Forward, AdvectionMode::Unsteady).unwrap();
        let m = advect_grid(&seq, &g, &spec).unwrap();
        let (x, y) = m.final_position(0, 0);
        // half a frame of stage overlap at t = 1 blends the two fields
        assert!((x - 5.0).abs() < 0.2 && (y - 5.0).abs() < 0.2, "{x} {y}");
        let back = advect_grid(&seq, &g, &spec.with_direction(Direction::Backward)).unwrap();
        let (bx, by) = back.final_position(0, 0);
        assert!(
            (bx - 3.0).abs() < 0.2 && (by - 3.0).abs() < 0.2,
            "{bx} {by}"
        );
    }

    #[test]
    fn saddle_forward_and_backward_maps() {
        let a = 0.05;
        let f = saddle(64, a);
        let c = 31.5;
        let g = ParticleGrid::new(26.0, 20.0, 1.0, 1.0, 12, 24).unwrap();
        let (fw, bw) = advect_both(&f, &g, 10.0, 0.5, AdvectionMode::Steady).unwrap();
        let e = (a * 10.0f64).exp();
        for r in 0..g.rows {
            for col in 0..g.cols {
                let (x0, y0) = g.position(col, r);
                let (fx, fy) = fw.final_position(col, r);
                let (bx, by) = bw.final_position(col, r);
                assert!((fx - (c + (x0 - c) * e)).abs() < 1e-6);
                assert!((fy - (c + (y0 - c) / e)).abs() < 1e-6);
                assert!((bx - (c + (x0 - c) / e)).abs() < 1e-6);
                assert!((by - (c + (y0 - c) * e)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn composition_in_steady_mode() {
        let f = saddle(64, 0.02);
        let g = ParticleGrid::new(28.0, 20.0, 1.0, 1.0, 8, 20).unwrap();
        let s1 = IntegrationSpec::steady(4.0, 0.5, Direction::Forward).unwrap();
        let s2 = IntegrationSpec::steady(6.0, 0.5, Direction::Forward).unwrap();
        let s12 = IntegrationSpec::steady(10.0, 0.5, Direction::Forward).unwrap();
        let mut two = g.positions();
        advect_positions(&f, &mut two, &s1);
        advect_positions(&f, &mut two, &s2);
        let mut one = g.positions();
        advect_positions(&f, &mut one, &s12);
        for (a, b) in one.iter().zip(&two) {
            assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
        }
    }
}

//! Analytic velocity fields and rendered frame sequences with known
//! ground truth, used by tests, the acceptance suite and `crowdseg synth`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::advection::VelocitySource;
use crate::error::{Error, Result};
use crate::flowfield::{FlowField, Frame};

/// Width of the smooth transition at the counter-flow interface, px.
pub const COUNTER_FLOW_BLEND: f64 = 3.0;
/// Width of the radial taper at both annulus rims, px.
pub const ANNULUS_TAPER: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioKind {
    Uniform {
        u: f64,
        v: f64,
    },
    /// Rigid rotation `u = -omega (y - cy)`, `v = omega (x - cx)`.
    Rotation {
        omega: f64,
        center: (f64, f64),
    },
    /// `u = rate (x - cx)`, `v = -rate (y - cy)`.
    Saddle {
        rate: f64,
        center: (f64, f64),
    },
    /// Time-dependent double gyre on `[0,2] x [0,1]` stretched over the frame.
    DoubleGyre {
        amplitude: f64,
        epsilon: f64,
        omega: f64,
    },
    /// `+speed` along x on the top half, `-speed` on the bottom half.
    CounterFlow {
        speed: f64,
    },
    /// Anticlockwise (as displayed, y down) ring of constant speed.
    Annulus {
        speed: f64,
        inner: f64,
        outer: f64,
        center: (f64, f64),
    },
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Uniform { .. } => "uniform",
            ScenarioKind::Rotation { .. } => "rotation",
            ScenarioKind::Saddle { .. } => "saddle",
            ScenarioKind::DoubleGyre { .. } => "double_gyre",
            ScenarioKind::CounterFlow { .. } => "counter_flow",
            ScenarioKind::Annulus { .. } => "annulus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, width: usize, height: usize, frames: usize) -> Result<Self> {
        let spec = Self {
            kind,
            width,
            height,
            frames,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.width - 1) as f64 / 2.0,
            (self.height - 1) as f64 / 2.0,
        )
    }

    /// Standard benchmark double gyre: A = 0.1, eps = 0.25, omega = 2 pi / 10.
    pub fn double_gyre(width: usize, height: usize) -> Self {
        Self {
            kind: ScenarioKind::DoubleGyre {
                amplitude: 0.1,
                epsilon: 0.25,
                omega: 2.0 * PI / 10.0,
            },
            width,
            height,
            frames: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| {
            Err(Error::InvalidArgument(format!(
                "{} scenario: {msg}",
                self.kind.name()
            )))
        };
        if self.width < 8 || self.height < 8 {
            return bad(format!("size {}x{} below 8x8", self.width, self.height));
        }
        if self.frames == 0 {
            return bad("needs at least one frame".into());
        }
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self.kind {
            ScenarioKind::Uniform { u, v } if !finite(&[u, v]) => bad("non-finite velocity".into()),
            ScenarioKind::Rotation { omega, center }
            | ScenarioKind::Saddle {
                rate: omega,
                center,
            } if !finite(&[omega, center.0, center.1]) => bad("non-finite parameters".into()),
            ScenarioKind::DoubleGyre {
                amplitude,
                epsilon,
                omega,
            } if !finite(&[amplitude, epsilon, omega]) || !(0.0..0.5).contains(&epsilon) => {
                bad("needs finite parameters and 0 <= epsilon < 0.5".into())
            }
            ScenarioKind::CounterFlow { speed } if !speed.is_finite() => {
                bad("non-finite speed".into())
            }
            ScenarioKind::Annulus {
                speed,
                inner,
                outer,
                center,
            } => {
                let limit = self.width.min(self.height) as f64 / 2.0;
                if !finite(&[speed, inner, outer, center.0, center.1])
                    || inner < 0.0
                    || inner >= outer
                    || outer >= limit
                {
                    bad(format!("needs 0 <= inner < outer < {limit}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Analytic velocity at a continuous position and time.
    pub fn velocity(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        match self.kind {
            ScenarioKind::Uniform { u, v } => (u, v),
            ScenarioKind::Rotation { omega, center } => {
                (-omega * (y - center.1), omega * (x - center.0))
            }
            ScenarioKind::Saddle { rate, center } => {
                (rate * (x - center.0), -rate * (y - center.1))
            }
            ScenarioKind::DoubleGyre {
                amplitude,
                epsilon,
                omega,
            } => {
                let sx = (self.width - 1) as f64 / 2.0;
                let sy = (self.height - 1) as f64;
                let (xs, ys) = (x / sx, y / sy);
                let s = epsilon * (omega * t).sin();
                let f = s * xs * xs + (1.0 - 2.0 * s) * xs;
                let df = 2.0 * s * xs + 1.0 - 2.0 * s;
                let u = -PI * amplitude * (PI * f).sin() * (PI * ys).cos();
                let v = PI * amplitude * (PI * f).cos() * (PI * ys).sin() * df;
                (u * sx, v * sy)
            }
            ScenarioKind::CounterFlow { speed } => {
                let d = y - (self.height - 1) as f64 / 2.0;
                let half = COUNTER_FLOW_BLEND / 2.0;
                let g = if d <= -half {
                    1.0
                } else if d >= half {
                    -1.0
                } else {
                    -(PI * d / COUNTER_FLOW_BLEND).sin()
                };
                (speed * g, 0.0)
            }
            ScenarioKind::Annulus {
                speed,
                inner,
                outer,
                center,
            } => {
                let (dx, dy) = (x - center.0, y - center.1);
                let r = dx.hypot(dy);
                let ramp = |s: f64| 0.5 * (1.0 - (PI * s.clamp(0.0, 1.0)).cos());
                let profile = if r < inner - ANNULUS_TAPER || r > outer + ANNULUS_TAPER {
                    0.0
                } else if r < inner {
                    ramp((r - (inner - ANNULUS_TAPER)) / ANNULUS_TAPER)
                } else if r > outer {
                    ramp((outer + ANNULUS_TAPER - r) / ANNULUS_TAPER)
                } else {
                    1.0
                };
                if profile == 0.0 || r == 0.0 {
                    (0.0, 0.0)
                } else {
                    let s = speed * profile / r;
                    (s * dy, -s * dx)
                }
            }
        }
    }

    /// Ground-truth segment classes, row-major, when the scenario has them:
    /// counter flow 1 = top (moving right), 2 = bottom; annulus 1 = ring.
    pub fn ground_truth(&self) -> Option<Vec<u8>> {
        let (w, h) = (self.width, self.height);
        match self.kind {
            ScenarioKind::CounterFlow { .. } => {
                let mid = (h - 1) as f64 / 2.0;
                Some(
                    (0..w * h)
                        .map(|i| if ((i / w) as f64) < mid { 1 } else { 2 })
                        .collect(),
                )
            }
            ScenarioKind::Annulus {
                inner,
                outer,
                center,
                ..
            } => Some(
                (0..w * h)
                    .map(|i| {
                        let r = ((i % w) as f64 - center.0).hypot((i / w) as f64 - center.1);
                        u8::from(r >= inner && r <= outer)
                    })
                    .collect(),
            ),
            _ => None,
        }
    }
}

/// A scenario evaluated analytically (no lattice sampling).
impl VelocitySource for ScenarioSpec {
    fn width(&self) -> usize {
        self.width
    }

    fn height(&self) -> usize {
        self.height
    }

    fn velocity(&self, x: f64, y: f64, t: f64) -> (f64, f64) {
        ScenarioSpec::velocity(self, x, y, t)
    }
}

/// The scenario's field at pixel centres at time `t`.
pub fn gen_field(spec: &ScenarioSpec, t: f64) -> Result<FlowField> {
    spec.validate()?;
    FlowField::from_fn(spec.width, spec.height, |x, y| {
        spec.velocity(x as f64, y as f64, t)
    })
}

/// Band-limited random texture in (0, 1): a sum of plane waves with
/// wavelengths between 8 and 32 px pushed through a tanh.
pub fn texture(width: usize, height: usize, seed: u64) -> Result<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..32)
        .map(|_| {
            let theta = rng.gen_range(0.0..PI);
            let k = 2.0 * PI / rng.gen_range(8.0..32.0);
            (
                k * theta.cos(),
                k * theta.sin(),
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(0.5..1.0),
            )
        })
        .collect();
    let rms = (waves.iter().map(|w| w.3 * w.3).sum::<f64>() / 2.0).sqrt();
    Frame::from_fn(width, height, |x, y| {
        let z: f64 = waves
            .iter()
            .map(|&(kx, ky, phase, a)| a * (kx * x as f64 + ky * y as f64 + phase).cos())
            .sum();
        0.5 + 0.5 * (1.2 * z / rms).tanh()
    })
}

/// Renders `spec.frames` frames: a seeded texture, then each frame samples
/// its predecessor at `p - V(p, k)` (bilinear, edge-clamped).
pub fn gen_frames(spec: &ScenarioSpec, texture_seed: u64) -> Result<Vec<Frame>> {
    spec.validate()?;
    if spec.frames < 2 {
        return Err(Error::InvalidArgument(
            "frame synthesis needs at least 2 frames".into(),
        ));
    }
    let (w, h) = (spec.width, spec.height);
    let mut frames = vec![texture(w, h, texture_seed)?];
    for k in 0..spec.frames - 1 {
        let prev = &frames[k];
        let next = Frame::from_fn(w, h, |x, y| {
            let (u, v) = spec.velocity(x as f64, y as f64, k as f64);
            prev.sample(x as f64 - u, y as f64 - v)
        })?;
        frames.push(next);
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_and_rotation_center() {
        let s = ScenarioSpec::new(ScenarioKind::Uniform { u: 1.0, v: 0.0 }, 10, 9, 2).unwrap();
        let f = gen_field(&s, 0.0).unwrap();
        assert!(f.u().iter().all(|&u| u == 1.0) && f.v().iter().all(|&v| v == 0.0));

        let r = ScenarioSpec::new(
            ScenarioKind::Rotation {
                omega: 0.05,
                center: (8.0, 6.0),
            },
            17,
            13,
            2,
        )
        .unwrap();
        let f = gen_field(&r, 0.0).unwrap();
        assert_eq!(f.at(8, 6), (0.0, 0.0));
    }

    #[test]
    fn steady_double_gyre_is_mirror_symmetric() {
        let mut s = ScenarioSpec::double_gyre(64, 33);
        s.kind = ScenarioKind::DoubleGyre {
            amplitude: 0.1,
            epsilon: 0.0,
            omega: 0.3,
        };
        let f = gen_field(&s, 1.7).unwrap();
        for d in 0..16 {
            for x in 0..64 {
                let (a, _) = f.at(x, 16 + d);
                let (b, _) = f.at(x, 16 - d);
                assert!((a + b).abs() < 1e-12, "x={x} d={d}");
            }
        }
    }

    #[test]
    fn double_gyre_is_divergence_free() {
        let s = ScenarioSpec::double_gyre(256, 128);
        for t in [0.0, 2.5, 7.0] {
            let f = gen_field(&s, t).unwrap();
            for y in 1..127 {
                for x in 1..255 {
                    let du = (f.at(x + 1, y).0 - f.at(x - 1, y).0) / 2.0;
                    let dv = (f.at(x, y + 1).1 - f.at(x, y - 1).1) / 2.0;
                    assert!((du + dv).abs() < 1e-3);
                }
            }
        }
    }

    #[test]
    fn annulus_profile_and_mask() {
        let s = ScenarioSpec::new(
            ScenarioKind::Annulus {
                speed: 1.0,
                inner: 10.0,
                outer: 20.0,
                center: (31.5, 31.5),
            },
            64,
            64,
            2,
        )
        .unwrap();
        let (u, v) = s.velocity(31.5 + 15.0, 31.5, 0.0);
        assert!(u.abs() < 1e-12 && (v + 1.0).abs() < 1e-12);
        assert_eq!(s.velocity(31.5 + 5.0, 31.5, 0.0), (0.0, 0.0));
        assert_eq!(s.velocity(31.5 + 25.0, 31.5, 0.0), (0.0, 0.0));
        let mask = s.ground_truth().unwrap();
        assert_eq!(mask[31 * 64 + 31 + 15], 1);
        assert_eq!(mask[31 * 64 + 31], 0);
        assert!(ScenarioSpec::new(
            ScenarioKind::Annulus {
                speed: 1.0,
                inner: 20.0,
                outer: 10.0,
                center: (31.5, 31.5)
            },
            64,
            64,
            2
        )
        .is_err());
    }

    #[test]
    fn counter_flow_halves() {
        let s = ScenarioSpec::new(ScenarioKind::CounterFlow { speed: 1.0 }, 16, 32, 2).unwrap();
        assert_eq!(s.velocity(3.0, 2.0, 0.0), (1.0, 0.0));
        assert_eq!(s.velocity(3.0, 29.0, 0.0), (-1.0, 0.0));
        assert!(s.velocity(3.0, 15.5, 0.0).0.abs() < 1e-12);
    }

    #[test]
    fn static_scene_frames_are_identical() {
        let s = ScenarioSpec::new(ScenarioKind::Uniform { u: 0.0, v: 0.0 }, 20, 16, 4).unwrap();
        let frames = gen_frames(&s, 7).unwrap();
        assert!(frames.iter().all(|f| f == &frames[0]));
    }

    #[test]
    fn uniform_shift_moves_texture_one_pixel() {
        let s = ScenarioSpec::new(ScenarioKind::Uniform { u: 1.0, v: 0.0 }, 24, 16, 2).unwrap();
        let frames = gen_frames(&s, 3).unwrap();
        for y in 0..16 {
            for x in 1..24 {
                assert!((frames[1].get(x, y) - frames[0].get(x - 1, y)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn frames_are_deterministic() {
        let s = ScenarioSpec::new(ScenarioKind::CounterFlow { speed: 0.7 }, 20, 16, 3).unwrap();
        assert_eq!(gen_frames(&s, 11).unwrap(), gen_frames(&s, 11).unwrap());
        assert_ne!(
            gen_frames(&s, 11).unwrap()[0],
            gen_frames(&s, 12).unwrap()[0]
        );
    }
}

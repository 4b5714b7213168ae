//! Pipeline configuration: a flat `key = value` text file with `#`
//! comments. Unknown keys and out-of-range values are rejected with the
//! offending key named.

use std::fmt;
use std::path::Path;

use crate::advection::{AdvectionMode, DEFAULT_DURATION, DEFAULT_STEP};
use crate::error::{Error, Result};
use crate::flowfield::{DEFAULT_ITERATIONS, DEFAULT_SMOOTHNESS};
use crate::ftle::{DEFAULT_MARGIN, DEFAULT_SIGMA};
use crate::segmentation::{
    DEFAULT_MERGE_ANGLE_DEG, DEFAULT_MERGE_BAND, DEFAULT_MIN_AREA, DEFAULT_VACUUM_THRESHOLD,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowWindow {
    /// One mean over the whole sequence.
    All,
    /// Trailing means over `n` consecutive fields.
    Sliding(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CombineMode {
    Max,
    ForwardOnly,
    BackwardOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub flow_smoothness: f64,
    pub flow_iterations: usize,
    pub flow_window: FlowWindow,
    pub advect_duration: f64,
    pub advect_step: f64,
    pub advect_grid_step: f64,
    pub advect_mode: AdvectionMode,
    pub ftle_sigma: f64,
    pub ftle_margin: usize,
    pub ftle_combine: CombineMode,
    pub seg_min_area: usize,
    pub seg_vacuum_threshold: f64,
    pub seg_merge_angle_deg: f64,
    pub seg_merge_band: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            flow_smoothness: DEFAULT_SMOOTHNESS,
            flow_iterations: DEFAULT_ITERATIONS,
            flow_window: FlowWindow::All,
            advect_duration: DEFAULT_DURATION,
            advect_step: DEFAULT_STEP,
            advect_grid_step: 1.0,
            advect_mode: AdvectionMode::Steady,
            ftle_sigma: DEFAULT_SIGMA,
            ftle_margin: DEFAULT_MARGIN,
            ftle_combine: CombineMode::Max,
            seg_min_area: DEFAULT_MIN_AREA,
            seg_vacuum_threshold: DEFAULT_VACUUM_THRESHOLD,
            seg_merge_angle_deg: DEFAULT_MERGE_ANGLE_DEG,
            seg_merge_band: DEFAULT_MERGE_BAND,
        }
    }
}

pub const KEYS: [&str; 14] = [
    "flow.smoothness",
    "flow.iterations",
    "flow.window",
    "advect.T",
    "advect.h",
    "advect.gridStep",
    "advect.mode",
    "ftle.sigma",
    "ftle.margin",
    "ftle.combine",
    "seg.minArea",
    "seg.vacuumThreshold",
    "seg.mergeAngleDeg",
    "seg.mergeBand",
];

fn invalid(key: &str, value: &str, why: &str) -> Error {
    Error::Config(format!("{key} = {value}: {why}"))
}

fn real(key: &str, value: &str, ok: impl Fn(f64) -> bool, why: &str) -> Result<f64> {
    let v: f64 = value
        .parse()
        .map_err(|_| invalid(key, value, "not a number"))?;
    if v.is_finite() && ok(v) {
        Ok(v)
    } else {
        Err(invalid(key, value, why))
    }
}

fn integer(key: &str, value: &str, min: usize) -> Result<usize> {
    let v: usize = value
        .parse()
        .map_err(|_| invalid(key, value, "not a non-negative integer"))?;
    if v < min {
        return Err(invalid(key, value, &format!("must be at least {min}")));
    }
    Ok(v)
}

impl PipelineConfig {
    /// Sets one key from its text form, validating the value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "flow.smoothness" => {
                self.flow_smoothness = real(key, value, |v| v > 0.0, "must be positive")?
            }
            "flow.iterations" => self.flow_iterations = integer(key, value, 1)?,
            "flow.window" => {
                self.flow_window = if value == "all" {
                    FlowWindow::All
                } else if let Some(n) = value
                    .strip_prefix("sliding(")
                    .and_then(|r| r.strip_suffix(')'))
                {
                    FlowWindow::Sliding(integer(key, n, 1)?)
                } else {
                    return Err(invalid(key, value, "expected `all` or `sliding(n)`"));
                }
            }
            "advect.T" => self.advect_duration = real(key, value, |v| v > 0.0, "must be positive")?,
            "advect.h" => self.advect_step = real(key, value, |v| v > 0.0, "must be positive")?,
            "advect.gridStep" => {
                self.advect_grid_step = real(key, value, |v| v > 0.0, "must be positive")?
            }
            "advect.mode" => {
                self.advect_mode = match value {
                    "steady" => AdvectionMode::Steady,
                    "unsteady" => AdvectionMode::Unsteady,
                    _ => return Err(invalid(key, value, "expected `steady` or `unsteady`")),
                }
            }
            "ftle.sigma" => self.ftle_sigma = real(key, value, |v| v > 0.0, "must be positive")?,
            "ftle.margin" => self.ftle_margin = integer(key, value, 0)?,
            "ftle.combine" => {
                self.ftle_combine = match value {
                    "max" => CombineMode::Max,
                    "forward_only" => CombineMode::ForwardOnly,
                    "backward_only" => CombineMode::BackwardOnly,
                    _ => {
                        return Err(invalid(
                            key,
                            value,
                            "expected `max`, `forward_only` or `backward_only`",
                        ))
                    }
                }
            }
            "seg.minArea" => self.seg_min_area = integer(key, value, 1)?,
            "seg.vacuumThreshold" => {
                self.seg_vacuum_threshold = real(key, value, |v| v >= 0.0, "must be non-negative")?
            }
            "seg.mergeAngleDeg" => {
                self.seg_merge_angle_deg = real(
                    key,
                    value,
                    |v| (0.0..=180.0).contains(&v),
                    "must lie in [0, 180]",
                )?
            }
            "seg.mergeBand" => self.seg_merge_band = integer(key, value, 1)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Cross-key checks not expressible per key.
    pub fn validate(&self) -> Result<()> {
        if self.advect_step > self.advect_duration {
            return Err(Error::Config(format!(
                "advect.h = {} exceeds advect.T = {}",
                self.advect_step, self.advect_duration
            )));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines on top of the current values.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(key.trim(), value)?;
        }
        self.validate()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("cannot read config {}", path.display()), e))?;
        Self::parse(&text)
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "flow.smoothness" => self.flow_smoothness.to_string(),
            "flow.iterations" => self.flow_iterations.to_string(),
            "flow.window" => match self.flow_window {
                FlowWindow::All => "all".into(),
                FlowWindow::Sliding(n) => format!("sliding({n})"),
            },
            "advect.T" => self.advect_duration.to_string(),
            "advect.h" => self.advect_step.to_string(),
            "advect.gridStep" => self.advect_grid_step.to_string(),
            "advect.mode" => match self.advect_mode {
                AdvectionMode::Steady => "steady".into(),
                AdvectionMode::Unsteady => "unsteady".into(),
            },
            "ftle.sigma" => self.ftle_sigma.to_string(),
            "ftle.margin" => self.ftle_margin.to_string(),
            "ftle.combine" => match self.ftle_combine {
                CombineMode::Max => "max".into(),
                CombineMode::ForwardOnly => "forward_only".into(),
                CombineMode::BackwardOnly => "backward_only".into(),
            },
            "seg.minArea" => self.seg_min_area.to_string(),
            "seg.vacuumThreshold" => self.seg_vacuum_threshold.to_string(),
            "seg.mergeAngleDeg" => self.seg_merge_angle_deg.to_string(),
            "seg.mergeBand" => self.seg_merge_band.to_string(),
            _ => unreachable!("key list and match out of sync"),
        }
    }
}

impl fmt::Display for PipelineConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for key in KEYS {
            writeln!(f, "{key} = {}", self.value_of(key))?;
        }
        Ok(())
    }
}

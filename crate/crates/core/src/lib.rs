//! Crowd flow segmentation from video.
//!
//! Optical flow is averaged into a mean field, particles are advected
//! through it in both time directions, finite-time Lyapunov exponents are
//! computed from the resulting flow maps and the combined ridge field is
//! cut into coherent regions with a watershed followed by clean-up passes.

pub mod advection;
pub mod config;
pub mod error;
pub mod field;
pub mod flowfield;
pub mod ftle;
pub mod io;
pub mod pipeline;
pub mod segmentation;
pub mod synthetic;

pub use advection::{
    advect_both, advect_grid, AdvectionMode, Direction, FlowMap, FlowSequence, IntegrationSpec,
    ParticleGrid, VelocitySource,
};
pub use config::{CombineMode, FlowWindow, PipelineConfig};
pub use error::{Error, ErrorClass, Result};
pub use field::ScalarField;
pub use flowfield::{average_flow, estimate_optical_flow, FlowField, Frame};
pub use ftle::{combine_ftle, compute_ftle_field, gaussian_smooth, strip_boundary};
pub use segmentation::{watershed, LabelMap, SegmentStats};
pub use synthetic::{ScenarioKind, ScenarioSpec};

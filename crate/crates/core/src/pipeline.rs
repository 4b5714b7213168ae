//! End-to-end orchestration and the individual stages it is built from.
//!
//! Every stage output is rounded through f32, the precision of the on-disk
//! artefacts, so a run chained through files and an in-memory run see
//! exactly the same numbers.

use std::fs;
use std::path::{Path, PathBuf};

use crate::advection::{advect_both, AdvectionMode, FlowMap, FlowSequence, ParticleGrid};
use crate::config::{CombineMode, FlowWindow, PipelineConfig};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::flowfield::{
    average_flow, estimate_optical_flow, flow_magnitude, sliding_average, FlowField, Frame,
};
use crate::ftle::{combine_ftle, compute_ftle_field, gaussian_smooth, strip_boundary};
use crate::io;
use crate::segmentation::{
    merge_similar_segments, remove_small_segments, remove_vacuum_segments, segment_stats,
    watershed, LabelMap, SegmentStats,
};

/// Optical flow between each consecutive pair of frames.
pub fn flow_stage(frames: &[Frame], cfg: &PipelineConfig) -> Result<Vec<FlowField>> {
    if frames.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "optical flow needs at least 2 frames, got {}",
            frames.len()
        )));
    }
    frames
        .windows(2)
        .map(|pair| {
            estimate_optical_flow(&pair[0], &pair[1], cfg.flow_smoothness, cfg.flow_iterations)
                .map(|f| f.quantized())
        })
        .collect()
}

/// The fields the window setting produces: one overall mean, or the
/// trailing windowed means.
pub fn windowed_fields(fields: &[FlowField], cfg: &PipelineConfig) -> Result<Vec<FlowField>> {
    let out = match cfg.flow_window {
        FlowWindow::All => vec![average_flow(fields)?],
        FlowWindow::Sliding(n) => sliding_average(fields, n)?,
    };
    Ok(out.iter().map(FlowField::quantized).collect())
}

/// The single field used by steady advection and by segmentation: the
/// overall mean, or the first window when windowing is enabled.
pub fn mean_stage(fields: &[FlowField], cfg: &PipelineConfig) -> Result<FlowField> {
    Ok(windowed_fields(fields, cfg)?.swap_remove(0))
}

pub fn particle_grid(width: usize, height: usize, cfg: &PipelineConfig) -> Result<ParticleGrid> {
    ParticleGrid::covering(width, height, cfg.advect_grid_step)
}

/// Forward and backward flow maps. Steady mode advects through the mean
/// field; unsteady mode steps through the windowed means, or through the
/// raw per-frame fields when the window is `all`.
pub fn advect_stage(fields: &[FlowField], cfg: &PipelineConfig) -> Result<(FlowMap, FlowMap)> {
    let first = fields.first().ok_or(Error::NothingToAverage)?;
    let grid = particle_grid(first.width(), first.height(), cfg)?;
    let (fwd, bwd) = match cfg.advect_mode {
        AdvectionMode::Steady => {
            let mean = mean_stage(fields, cfg)?;
            advect_both(
                &mean,
                &grid,
                cfg.advect_duration,
                cfg.advect_step,
                AdvectionMode::Steady,
            )?
        }
        AdvectionMode::Unsteady => {
            let seq: Vec<FlowField> = match cfg.flow_window {
                FlowWindow::All => fields.to_vec(),
                FlowWindow::Sliding(_) => windowed_fields(fields, cfg)?,
            };
            let source = FlowSequence::new(&seq)?;
            advect_both(
                &source,
                &grid,
                cfg.advect_duration,
                cfg.advect_step,
                AdvectionMode::Unsteady,
            )?
        }
    };
    Ok((fwd.quantized(), bwd.quantized()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FtleStage {
    pub forward: ScalarField,
    pub backward: ScalarField,
    pub combined: ScalarField,
}

fn ftle_one(map: &FlowMap, cfg: &PipelineConfig) -> Result<ScalarField> {
    let raw = compute_ftle_field(map)?;
    let stripped = strip_boundary(&raw, cfg.ftle_margin)?;
    Ok(gaussian_smooth(&stripped, cfg.ftle_sigma)?.quantized())
}

/// FTLE of both maps, boundary-stripped and smoothed, plus their
/// combination.
pub fn ftle_stage(
    forward: &FlowMap,
    backward: &FlowMap,
    cfg: &PipelineConfig,
) -> Result<FtleStage> {
    let forward = ftle_one(forward, cfg)?;
    let backward = ftle_one(backward, cfg)?;
    let combined = match cfg.ftle_combine {
        CombineMode::Max => combine_ftle(&forward, &backward)?,
        CombineMode::ForwardOnly => forward.clone(),
        CombineMode::BackwardOnly => backward.clone(),
    };
    Ok(FtleStage {
        forward,
        backward,
        combined,
    })
}

/// Offset of a stage-3 field relative to the particle grid: one cell lost
/// to central differences plus the stripped margin.
pub fn ftle_offset(cfg: &PipelineConfig) -> (usize, usize) {
    (1 + cfg.ftle_margin, 1 + cfg.ftle_margin)
}

/// The mean flow sampled at the particle positions, so segmentation sees
/// velocities on the same lattice as the FTLE field.
pub fn flow_on_grid(mean: &FlowField, grid: &ParticleGrid) -> Result<FlowField> {
    if grid.cols == mean.width()
        && grid.rows == mean.height()
        && grid.step_x == 1.0
        && grid.step_y == 1.0
    {
        return Ok(mean.clone());
    }
    FlowField::from_fn(grid.cols, grid.rows, |c, r| {
        let (x, y) = grid.position(c, r);
        mean.sample(x, y)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentStage {
    /// Watershed labels before any post-processing.
    pub raw: LabelMap,
    pub labels: LabelMap,
    pub stats: Vec<SegmentStats>,
}

/// Watershed on `height` (whose offset locates it on the grid of
/// `grid_flow`) followed by small-segment removal, vacuum removal and
/// merging of similar neighbours.
pub fn segment_stage(
    height: &ScalarField,
    grid_flow: &FlowField,
    cfg: &PipelineConfig,
) -> Result<SegmentStage> {
    let raw = watershed(height)?;
    let kept = remove_small_segments(&raw, cfg.seg_min_area);
    let moving = remove_vacuum_segments(&kept, grid_flow, cfg.seg_vacuum_threshold)?;
    let labels = merge_similar_segments(
        &moving,
        grid_flow,
        cfg.seg_merge_angle_deg.to_radians(),
        cfg.seg_merge_band,
    )?;
    let stats = segment_stats(&labels, grid_flow)?;
    Ok(SegmentStage { raw, labels, stats })
}

/// Label of the grid point nearest to pixel `(x, y)`, 0 outside the map.
pub fn label_at_pixel(map: &LabelMap, grid: &ParticleGrid, x: usize, y: usize) -> u32 {
    let col = ((x as f64 - grid.origin_x) / grid.step_x).round();
    let row = ((y as f64 - grid.origin_y) / grid.step_y).round();
    let (ox, oy) = map.offset();
    if col < ox as f64 || row < oy as f64 {
        return 0;
    }
    let (c, r) = (col as usize - ox, row as usize - oy);
    if c < map.cols() && r < map.rows() {
        map.get(c, r)
    } else {
        0
    }
}

/// Overlay of the final segments on `base` (the first frame), or on the
/// normalised flow magnitude when no frame is available.
pub fn render_overlay(
    labels: &LabelMap,
    grid: &ParticleGrid,
    mean: &FlowField,
    base: Option<&Frame>,
) -> Result<Vec<u8>> {
    let (w, h) = (mean.width(), mean.height());
    let pixels: Vec<f64> = match base {
        Some(frame) => {
            if frame.width() != w || frame.height() != h {
                return Err(Error::FrameSizeMismatch);
            }
            frame.data().to_vec()
        }
        None => {
            let mag = flow_magnitude(mean);
            let top = mag.max();
            mag.values()
                .iter()
                .map(|&m| if top > 0.0 { m / top } else { 0.0 })
                .collect()
        }
    };
    io::render_overlay_png(w, h, &pixels, |x, y| label_at_pixel(labels, grid, x, y))
}

pub enum PipelineInput {
    Frames(Vec<Frame>),
    Flows(Vec<FlowField>),
}

impl PipelineInput {
    /// Loads frames from a directory (lexicographic order).
    pub fn from_frames_dir(dir: &Path) -> Result<Self> {
        Ok(Self::Frames(io::load_frames(dir)?))
    }

    pub fn from_flo_files(paths: &[PathBuf]) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::NothingToAverage);
        }
        let fields = paths
            .iter()
            .map(|p| io::read_flo(&io::read_file(p)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::Flows(fields))
    }
}

/// Everything the pipeline computes.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub fields: Vec<FlowField>,
    pub mean: FlowField,
    pub forward: FlowMap,
    pub backward: FlowMap,
    pub ftle: FtleStage,
    pub grid_flow: FlowField,
    pub segments: SegmentStage,
    pub overlay: Vec<u8>,
}

pub fn run_pipeline(input: &PipelineInput, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let (fields, first_frame) = match input {
        PipelineInput::Frames(frames) => (flow_stage(frames, cfg)?, frames.first()),
        PipelineInput::Flows(fields) => {
            if let Some(bad) = fields.iter().find(|f| !f.same_shape(&fields[0])) {
                return Err(Error::DimensionMismatch(format!(
                    "flow files differ in size ({}x{})",
                    bad.width(),
                    bad.height()
                )));
            }
            (fields.iter().map(FlowField::quantized).collect(), None)
        }
    };
    let mean = mean_stage(&fields, cfg)?;
    let (forward, backward) = advect_stage(&fields, cfg)?;
    let ftle = ftle_stage(&forward, &backward, cfg)?;
    let grid = *forward.grid();
    let grid_flow = flow_on_grid(&mean, &grid)?;
    let height = ftle.combined.clone().with_offset(ftle_offset(cfg));
    let segments = segment_stage(&height, &grid_flow, cfg)?;
    let overlay = render_overlay(&segments.labels, &grid, &mean, first_frame)?;
    Ok(PipelineOutput {
        fields,
        mean,
        forward,
        backward,
        ftle,
        grid_flow,
        segments,
        overlay,
    })
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("cannot create {}", dir.display()), e))
}

pub fn flow_file_name(index: usize) -> String {
    format!("flow_{index:04}.flo")
}

pub fn write_flow_artifacts(dir: &Path, fields: &[FlowField], mean: &FlowField) -> Result<()> {
    for (i, f) in fields.iter().enumerate() {
        io::write_file(&dir.join(flow_file_name(i)), &io::write_flo(f))?;
    }
    io::write_file(&dir.join("mean_flow.flo"), &io::write_flo(mean))
}

pub fn write_advect_artifacts(dir: &Path, forward: &FlowMap, backward: &FlowMap) -> Result<()> {
    io::write_file(&dir.join("forward.fmap"), &io::write_fmap(forward)?)?;
    io::write_file(&dir.join("backward.fmap"), &io::write_fmap(backward)?)
}

pub fn write_ftle_artifacts(dir: &Path, ftle: &FtleStage) -> Result<()> {
    for (name, field) in [
        ("ftle_forward", &ftle.forward),
        ("ftle_backward", &ftle.backward),
        ("ftle_combined", &ftle.combined),
    ] {
        io::write_file(&dir.join(format!("{name}.sfld")), &io::write_sfld(field)?)?;
        io::write_file(
            &dir.join(format!("{name}.png")),
            &io::render_scalar_png(field)?,
        )?;
    }
    Ok(())
}

pub fn write_segment_artifacts(dir: &Path, seg: &SegmentStage, overlay: &[u8]) -> Result<()> {
    io::write_file(&dir.join("labels.pgm"), &io::write_labels_pgm(&seg.labels)?)?;
    io::write_file(
        &dir.join("labels.png"),
        &io::render_labels_png(&seg.labels)?,
    )?;
    io::write_file(
        &dir.join("stats.jsonl"),
        &io::write_stats_jsonl(&seg.stats)?,
    )?;
    io::write_file(&dir.join("overlay.png"), overlay)
}

/// Writes every artefact of a run, plus the effective configuration.
pub fn write_pipeline_artifacts(
    dir: &Path,
    out: &PipelineOutput,
    cfg: &PipelineConfig,
) -> Result<()> {
    create_dir(dir)?;
    write_flow_artifacts(dir, &out.fields, &out.mean)?;
    write_advect_artifacts(dir, &out.forward, &out.backward)?;
    write_ftle_artifacts(dir, &out.ftle)?;
    write_segment_artifacts(dir, &out.segments, &out.overlay)?;
    io::write_file(&dir.join("config.txt"), cfg.to_string().as_bytes())
}

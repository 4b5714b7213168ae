//! C ABI over `crowdseg`.
//!
//! Every fallible call returns a [`CsStatus`]; on failure a message is
//! available from [`cs_last_error`] until the next call on the same thread.
//! Objects are opaque handles released with their `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use crowdseg::pipeline::{
    advect_stage, ftle_offset, ftle_stage, run_pipeline, segment_stage, write_pipeline_artifacts,
    PipelineInput,
};
use crowdseg::{io, Error, FlowField, LabelMap, PipelineConfig, ScalarField};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    Format = 5,
    Numeric = 6,
    Panic = 7,
}

pub struct CsFlowField(FlowField);
pub struct CsScalarField(ScalarField);
pub struct CsLabelMap(LabelMap);

/// Pipeline parameters; start from [`cs_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CsParams {
    pub flow_smoothness: f64,
    pub flow_iterations: u32,
    pub advect_duration: f64,
    pub advect_step: f64,
    pub advect_grid_step: f64,
    pub ftle_sigma: f64,
    pub ftle_margin: u32,
    pub seg_min_area: u32,
    pub seg_vacuum_threshold: f64,
    pub seg_merge_angle_deg: f64,
    pub seg_merge_band: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CsStatus {
    match e {
        Error::Config(_) => CsStatus::Config,
        Error::Io { .. } => CsStatus::Io,
        Error::Format(_) => CsStatus::Format,
        Error::InvalidArgument(_) | Error::DimensionMismatch(_) | Error::FrameSizeMismatch => {
            CsStatus::InvalidArgument
        }
        _ => CsStatus::Numeric,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CsStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            CsStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            CsStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn path_arg(p: *const c_char, what: &'static str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::InvalidArgument(format!("{what} is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn config_of(params: *const CsParams) -> Result<PipelineConfig, Fail> {
    let p = get(params, "params")?;
    let mut cfg = PipelineConfig::default();
    let pairs = [
        ("flow.smoothness", p.flow_smoothness.to_string()),
        ("flow.iterations", p.flow_iterations.to_string()),
        ("advect.T", p.advect_duration.to_string()),
        ("advect.h", p.advect_step.to_string()),
        ("advect.gridStep", p.advect_grid_step.to_string()),
        ("ftle.sigma", p.ftle_sigma.to_string()),
        ("ftle.margin", p.ftle_margin.to_string()),
        ("seg.minArea", p.seg_min_area.to_string()),
        ("seg.vacuumThreshold", p.seg_vacuum_threshold.to_string()),
        ("seg.mergeAngleDeg", p.seg_merge_angle_deg.to_string()),
        ("seg.mergeBand", p.seg_merge_band.to_string()),
    ];
    for (k, v) in pairs {
        cfg.set(k, &v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Message for the most recent failure on this thread, or NULL. Valid
/// until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn cs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn cs_params_default() -> CsParams {
    let d = PipelineConfig::default();
    CsParams {
        flow_smoothness: d.flow_smoothness,
        flow_iterations: d.flow_iterations as u32,
        advect_duration: d.advect_duration,
        advect_step: d.advect_step,
        advect_grid_step: d.advect_grid_step,
        ftle_sigma: d.ftle_sigma,
        ftle_margin: d.ftle_margin as u32,
        seg_min_area: d.seg_min_area as u32,
        seg_vacuum_threshold: d.seg_vacuum_threshold,
        seg_merge_angle_deg: d.seg_merge_angle_deg,
        seg_merge_band: d.seg_merge_band as u32,
    }
}

/// Copies `width * height` row-major components from `u` and `v`.
///
/// # Safety
/// `u` and `v` must each point to `width * height` readable doubles and
/// `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn cs_flow_field_new(
    width: usize,
    height: usize,
    u: *const f64,
    v: *const f64,
    out: *mut *mut CsFlowField,
) -> CsStatus {
    guard(|| {
        if u.is_null() || v.is_null() {
            return Err(Fail::Null("u/v"));
        }
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Error::InvalidArgument("field too large".into()))?;
        let u = std::slice::from_raw_parts(u, n).to_vec();
        let v = std::slice::from_raw_parts(v, n).to_vec();
        put(out, CsFlowField(FlowField::new(width, height, u, v)?))
    })
}

/// Reads a Middlebury `.flo` file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_flow_field_read_flo(
    path: *const c_char,
    out: *mut *mut CsFlowField,
) -> CsStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let field = io::read_flo(&io::read_file(&path)?)?;
        put(out, CsFlowField(field))
    })
}

/// # Safety
/// `field` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cs_flow_field_width(field: *const CsFlowField) -> usize {
    field.as_ref().map_or(0, |f| f.0.width())
}

/// # Safety
/// `field` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cs_flow_field_height(field: *const CsFlowField) -> usize {
    field.as_ref().map_or(0, |f| f.0.height())
}

/// # Safety
/// `field` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cs_flow_field_free(field: *mut CsFlowField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Combined, boundary-stripped and smoothed FTLE of a steady flow.
///
/// # Safety
/// `flow` and `params` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_compute_ftle(
    flow: *const CsFlowField,
    params: *const CsParams,
    out: *mut *mut CsScalarField,
) -> CsStatus {
    guard(|| {
        let flow = get(flow, "flow")?;
        let cfg = config_of(params)?;
        let (forward, backward) = advect_stage(std::slice::from_ref(&flow.0), &cfg)?;
        let ftle = ftle_stage(&forward, &backward, &cfg)?;
        put(
            out,
            CsScalarField(ftle.combined.with_offset(ftle_offset(&cfg))),
        )
    })
}

/// # Safety
/// `field` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cs_scalar_field_cols(field: *const CsScalarField) -> usize {
    field.as_ref().map_or(0, |f| f.0.cols())
}

/// # Safety
/// `field` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cs_scalar_field_rows(field: *const CsScalarField) -> usize {
    field.as_ref().map_or(0, |f| f.0.rows())
}

/// Copies the row-major values into `buf`, which holds `len` doubles.
///
/// # Safety
/// `field` must be valid and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cs_scalar_field_copy(
    field: *const CsScalarField,
    buf: *mut f64,
    len: usize,
) -> CsStatus {
    guard(|| {
        let field = get(field, "field")?;
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        let values = field.0.values();
        if len < values.len() {
            return Err(Error::InvalidArgument(format!(
                "buffer holds {len}, need {}",
                values.len()
            ))
            .into());
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// # Safety
/// `field` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cs_scalar_field_free(field: *mut CsScalarField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Full segmentation of a steady flow: advection, FTLE, watershed and
/// post-processing. Labels are on the FTLE grid.
///
/// # Safety
/// `flow` and `params` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_segment_flow(
    flow: *const CsFlowField,
    params: *const CsParams,
    out: *mut *mut CsLabelMap,
) -> CsStatus {
    guard(|| {
        let flow = get(flow, "flow")?;
        let cfg = config_of(params)?;
        let result = run_pipeline(&PipelineInput::Flows(vec![flow.0.clone()]), &cfg)?;
        put(out, CsLabelMap(result.segments.labels))
    })
}

/// Watershed and post-processing of a given height field, with `flow`
/// covering the field's offset region.
///
/// # Safety
/// All handles and `params` must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_segment_height(
    height: *const CsScalarField,
    flow: *const CsFlowField,
    params: *const CsParams,
    out: *mut *mut CsLabelMap,
) -> CsStatus {
    guard(|| {
        let height = get(height, "height")?;
        let flow = get(flow, "flow")?;
        let cfg = config_of(params)?;
        let seg = segment_stage(&height.0, &flow.0, &cfg)?;
        put(out, CsLabelMap(seg.labels))
    })
}

/// # Safety
/// `map` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cs_label_map_cols(map: *const CsLabelMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.cols())
}

/// # Safety
/// `map` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cs_label_map_rows(map: *const CsLabelMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.rows())
}

/// Number of segments.
///
/// # Safety
/// `map` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cs_label_map_count(map: *const CsLabelMap) -> u32 {
    map.as_ref().map_or(0, |m| m.0.count())
}

/// Position of the map's first cell on the particle grid.
///
/// # Safety
/// `map` must be valid; `col` and `row` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cs_label_map_offset(
    map: *const CsLabelMap,
    col: *mut usize,
    row: *mut usize,
) -> CsStatus {
    guard(|| {
        let map = get(map, "map")?;
        if col.is_null() || row.is_null() {
            return Err(Fail::Null("col/row"));
        }
        (*col, *row) = map.0.offset();
        Ok(())
    })
}

/// Copies the row-major labels into `buf`, which holds `len` values.
///
/// # Safety
/// `map` must be valid and `buf` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn cs_label_map_copy(
    map: *const CsLabelMap,
    buf: *mut u32,
    len: usize,
) -> CsStatus {
    guard(|| {
        let map = get(map, "map")?;
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        let labels = map.0.labels();
        if len < labels.len() {
            return Err(Error::InvalidArgument(format!(
                "buffer holds {len}, need {}",
                labels.len()
            ))
            .into());
        }
        ptr::copy_nonoverlapping(labels.as_ptr(), buf, labels.len());
        Ok(())
    })
}

/// # Safety
/// `map` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cs_label_map_free(map: *mut CsLabelMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Runs the whole pipeline on a directory of frames and writes every
/// artefact to `out_dir`. `segments`, if not NULL, receives the count.
///
/// # Safety
/// Paths must be NUL-terminated strings; `params` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cs_run_pipeline(
    frames_dir: *const c_char,
    out_dir: *const c_char,
    params: *const CsParams,
    segments: *mut u32,
) -> CsStatus {
    guard(|| {
        let frames = path_arg(frames_dir, "frames_dir")?;
        let out = path_arg(out_dir, "out_dir")?;
        let cfg = config_of(params)?;
        let result = run_pipeline(&PipelineInput::from_frames_dir(Path::new(&frames))?, &cfg)?;
        write_pipeline_artifacts(&out, &result, &cfg)?;
        if let Some(s) = segments.as_mut() {
            *s = result.segments.labels.count();
        }
        Ok(())
    })
}

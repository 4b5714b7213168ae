//! File formats: Middlebury `.flo`, PGM/PNG frames, FMAP flow maps, SFLD
//! scalar fields, 16-bit PGM label maps and JSON-lines segment stats.

mod artifacts;
mod flo;
mod pnm;
mod raster;

pub use artifacts::{
    read_fmap, read_labels_pgm, read_sfld, read_stats_jsonl, write_fmap, write_labels_pgm,
    write_sfld, write_stats_jsonl, FMAP_HEADER_LEN, SFLD_HEADER_LEN,
};
pub use flo::{read_flo, write_flo, FLO_MAGIC};
pub use pnm::{read_pgm, write_pgm16, write_pgm8, Pgm};
pub use raster::{
    read_png_gray, render_labels_png, render_overlay_png, render_scalar_png, write_png_gray8,
    write_png_rgb8, LABEL_PALETTE,
};

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::flowfield::Frame;

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(format!("cannot read {}", path.display()), e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(format!("cannot write {}", path.display()), e))
}

fn frame_from_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Frame> {
    Frame::new(
        width,
        height,
        bytes.iter().map(|&b| b as f64 / 255.0).collect(),
    )
}

/// Loads one 8-bit grayscale PGM (P5) or PNG frame.
pub fn load_frame(path: &Path) -> Result<Frame> {
    let bytes = read_file(path)?;
    let (w, h, pixels) = match extension(path).as_deref() {
        Some("pgm") => {
            let pgm = read_pgm(&bytes)?;
            if pgm.maxval != 255 {
                return Err(Error::Format(format!(
                    "{}: frames must be 8-bit (maxval 255), found {}",
                    path.display(),
                    pgm.maxval
                )));
            }
            (
                pgm.width,
                pgm.height,
                pgm.samples.iter().map(|&s| s as u8).collect(),
            )
        }
        Some("png") => read_png_gray(&bytes).map_err(|e| match e {
            Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
            other => other,
        })?,
        _ => {
            return Err(Error::Format(format!(
                "{}: unsupported frame format",
                path.display()
            )))
        }
    };
    frame_from_bytes(w, h, &pixels)
}

/// Frame files (`.pgm`/`.png`) in `dir`, in lexicographic filename order.
///
/// Unpadded numbering sorts as text: `frame10` comes before `frame2`.
pub fn list_frames(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries =
        fs::read_dir(dir).map_err(|e| Error::io(format!("cannot list {}", dir.display()), e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| Error::io(format!("cannot list {}", dir.display()), e))?
            .path();
        if path.is_file() && matches!(extension(&path).as_deref(), Some("pgm" | "png")) {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

/// Loads every frame in `dir`; all frames must share one size.
pub fn load_frames(dir: &Path) -> Result<Vec<Frame>> {
    let frames = list_frames(dir)?
        .iter()
        .map(|p| load_frame(p))
        .collect::<Result<Vec<_>>>()?;
    if let Some(first) = frames.first() {
        if frames
            .iter()
            .any(|f| f.width() != first.width() || f.height() != first.height())
        {
            return Err(Error::FrameSizeMismatch);
        }
    }
    Ok(frames)
}

/// Quantises a frame to 8 bits and writes it as P5.
pub fn save_frame_pgm(path: &Path, frame: &Frame) -> Result<()> {
    let bytes: Vec<u8> = frame
        .data()
        .iter()
        .map(|&v| (v * 255.0).round() as u8)
        .collect();
    write_file(path, &write_pgm8(frame.width(), frame.height(), &bytes))
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
}

//! Pipeline artefact formats.
//!
//! FMAP: `"FMAP"`, u16 cols, u16 rows, f32 T, u8 direction (0 forward,
//! 1 backward), 3 zero bytes, then the final-x and final-y planes as
//! row-major f32. SFLD: `"SFLD"`, u16 cols, u16 rows, 4 zero bytes, then
//! row-major f32. All little-endian.

use std::io::{BufRead, BufReader};

use super::pnm::{read_pgm, write_pgm16};
use crate::advection::{Direction, FlowMap, ParticleGrid};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::segmentation::{LabelMap, SegmentStats};

pub const FMAP_HEADER_LEN: usize = 16;
pub const SFLD_HEADER_LEN: usize = 12;

fn dim16(n: usize, what: &str) -> Result<[u8; 2]> {
    u16::try_from(n)
        .map(u16::to_le_bytes)
        .map_err(|_| Error::Format(format!("{what}: dimension {n} exceeds 65535")))
}

fn f32_plane(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect()
}

pub fn write_fmap(map: &FlowMap) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(FMAP_HEADER_LEN + 8 * map.cols() * map.rows());
    out.extend_from_slice(b"FMAP");
    out.extend_from_slice(&dim16(map.cols(), "fmap")?);
    out.extend_from_slice(&dim16(map.rows(), "fmap")?);
    out.extend_from_slice(&(map.duration() as f32).to_le_bytes());
    out.push(map.direction().code());
    out.extend_from_slice(&[0, 0, 0]);
    for plane in [map.final_x(), map.final_y()] {
        for &v in plane {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

/// Reads an FMAP. The format carries no grid geometry, so the caller
/// supplies the particle spacing; the origin is (0, 0).
pub fn read_fmap(bytes: &[u8], grid_step: f64) -> Result<FlowMap> {
    if bytes.len() < FMAP_HEADER_LEN || &bytes[0..4] != b"FMAP" {
        return Err(Error::Format("fmap: bad magic or truncated header".into()));
    }
    let cols = u16::from_le_bytes([bytes[4], bytes[5]]) as usize;
    let rows = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let duration = f32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as f64;
    let direction = Direction::from_code(bytes[12])
        .ok_or_else(|| Error::Format(format!("fmap: unknown direction {}", bytes[12])))?;
    let n = cols * rows;
    if bytes.len() != FMAP_HEADER_LEN + 8 * n {
        return Err(Error::Format(format!(
            "fmap: expected {} bytes for {cols}x{rows}, found {}",
            FMAP_HEADER_LEN + 8 * n,
            bytes.len()
        )));
    }
    let body = &bytes[FMAP_HEADER_LEN..];
    let grid = ParticleGrid::new(0.0, 0.0, grid_step, grid_step, cols, rows)
        .map_err(|e| Error::Format(format!("fmap: {e}")))?;
    FlowMap::new(
        grid,
        f32_plane(&body[..4 * n]),
        f32_plane(&body[4 * n..]),
        direction,
        duration,
    )
    .map_err(|e| Error::Format(format!("fmap: {e}")))
}

pub fn write_sfld(field: &ScalarField) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(SFLD_HEADER_LEN + 4 * field.values().len());
    out.extend_from_slice(b"SFLD");
    out.extend_from_slice(&dim16(field.cols(), "sfld")?);
    out.extend_from_slice(&dim16(field.rows(), "sfld")?);
    out.extend_from_slice(&[0, 0, 0, 0]);
    for &v in field.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    Ok(out)
}

/// Reads an SFLD; the offset is not stored and comes back as (0, 0).
pub fn read_sfld(bytes: &[u8]) -> Result<ScalarField> {
    if bytes.len() < SFLD_HEADER_LEN || &bytes[0..4] != b"SFLD" {
        return Err(Error::Format("sfld: bad magic or truncated header".into()));
    }
    let cols = u16::from_le_bytes([bytes[4], bytes[5]]) as usize;
    let rows = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    if bytes.len() != SFLD_HEADER_LEN + 4 * cols * rows {
        return Err(Error::Format(format!(
            "sfld: expected {} bytes for {cols}x{rows}, found {}",
            SFLD_HEADER_LEN + 4 * cols * rows,
            bytes.len()
        )));
    }
    ScalarField::new(cols, rows, f32_plane(&bytes[SFLD_HEADER_LEN..]))
        .map_err(|e| Error::Format(format!("sfld: {e}")))
}

pub fn write_labels_pgm(map: &LabelMap) -> Result<Vec<u8>> {
    if map.count() > u16::MAX as u32 {
        return Err(Error::Format(format!(
            "labels: {} segments exceed 16 bits",
            map.count()
        )));
    }
    let samples: Vec<u16> = map.labels().iter().map(|&l| l as u16).collect();
    Ok(write_pgm16(map.cols(), map.rows(), &samples))
}

pub fn read_labels_pgm(bytes: &[u8]) -> Result<LabelMap> {
    let pgm = read_pgm(bytes)?;
    LabelMap::new(
        pgm.width,
        pgm.height,
        pgm.samples.iter().map(|&s| s as u32).collect(),
    )
}

#[derive(serde::Serialize)]
struct StatsLine {
    label: u32,
    area: usize,
    #[serde(rename = "meanFlow")]
    mean_flow: [f64; 2],
    #[serde(rename = "meanMagnitude")]
    mean_magnitude: f64,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsLineIn {
    label: u32,
    area: usize,
    #[serde(rename = "meanFlow")]
    mean_flow: [f64; 2],
    #[serde(rename = "meanMagnitude")]
    mean_magnitude: f64,
}

/// One JSON object per segment: `label`, `area`, `meanFlow` `[u, v]`,
/// `meanMagnitude`.
pub fn write_stats_jsonl(stats: &[SegmentStats]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for s in stats {
        let line = StatsLine {
            label: s.label,
            area: s.area,
            mean_flow: [s.mean_flow.0, s.mean_flow.1],
            mean_magnitude: s.mean_magnitude,
        };
        serde_json::to_writer(&mut out, &line).map_err(|e| Error::Format(format!("stats: {e}")))?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn read_stats_jsonl(bytes: &[u8]) -> Result<Vec<SegmentStats>> {
    let mut stats = Vec::new();
    for line in BufReader::new(bytes).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: StatsLineIn =
            serde_json::from_str(&line).map_err(|e| Error::Format(format!("stats: {e}")))?;
        stats.push(SegmentStats {
            label: s.label,
            area: s.area,
            mean_flow: (s.mean_flow[0], s.mean_flow[1]),
            mean_magnitude: s.mean_magnitude,
            boundary_pixels: Vec::new(),
        });
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmap_header_layout() {
        let g = ParticleGrid::covering(4, 3, 1.0).unwrap();
        let m = FlowMap::identity(g, Direction::Backward, 30.0).unwrap();
        let b = write_fmap(&m).unwrap();
        assert_eq!(&b[0..4], b"FMAP");
        assert_eq!(&b[4..6], &4u16.to_le_bytes());
        assert_eq!(&b[6..8], &3u16.to_le_bytes());
        assert_eq!(&b[8..12], &30f32.to_le_bytes());
        assert_eq!(&b[12..16], &[1, 0, 0, 0]);
        assert_eq!(b.len(), 16 + 2 * 4 * 12);
        assert_eq!(read_fmap(&b, 1.0).unwrap(), m);
    }

    #[test]
    fn sfld_header_layout() {
        let f = ScalarField::from_fn(3, 5, |x, y| x as f64 * 0.25 - y as f64).unwrap();
        let b = write_sfld(&f).unwrap();
        assert_eq!(&b[0..12], &[b'S', b'F', b'L', b'D', 3, 0, 5, 0, 0, 0, 0, 0]);
        assert_eq!(read_sfld(&b).unwrap(), f);
        assert!(read_sfld(&b[..20]).is_err());
    }

    #[test]
    fn stats_lines() {
        let s = vec![SegmentStats {
            label: 1,
            area: 12,
            mean_flow: (0.5, -0.25),
            mean_magnitude: 0.75,
            boundary_pixels: vec![(0, 0)],
        }];
        let b = write_stats_jsonl(&s).unwrap();
        assert_eq!(
            String::from_utf8(b.clone()).unwrap(),
            "{\"label\":1,\"area\":12,\"meanFlow\":[0.5,-0.25],\"meanMagnitude\":0.75}\n"
        );
        let back = read_stats_jsonl(&b).unwrap();
        assert_eq!(back[0].mean_flow, (0.5, -0.25));
    }
}

//! Watershed segmentation of the FTLE height field and the post-processing
//! rules applied to its label matrix.

mod postprocess;
mod watershed;

pub use postprocess::{
    merge_similar_segments, remove_small_segments, remove_vacuum_segments, DEFAULT_MERGE_ANGLE_DEG,
    DEFAULT_MERGE_BAND, DEFAULT_MIN_AREA, DEFAULT_VACUUM_THRESHOLD,
};
pub use watershed::watershed;

use crate::error::{Error, Result};
use crate::flowfield::FlowField;

/// Label matrix. 0 marks watershed lines and discarded pixels; positive
/// labels are always the contiguous range `1..=count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    cols: usize,
    rows: usize,
    labels: Vec<u32>,
    offset: (usize, usize),
    count: u32,
}

impl LabelMap {
    /// Builds a map from raw labels, renumbering the distinct positive
    /// values to `1..=count` in ascending order.
    pub fn new(cols: usize, rows: usize, labels: Vec<u32>) -> Result<Self> {
        if cols == 0 || rows == 0 || labels.len() != cols * rows {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for a {cols}x{rows} map",
                labels.len()
            )));
        }
        Ok(Self::compacted(cols, rows, labels, (0, 0)))
    }

    pub(crate) fn compacted(
        cols: usize,
        rows: usize,
        mut labels: Vec<u32>,
        offset: (usize, usize),
    ) -> Self {
        let max = labels.iter().copied().max().unwrap_or(0) as usize;
        let mut remap = vec![0u32; max + 1];
        for &l in labels.iter().filter(|&&l| l != 0) {
            remap[l as usize] = 1;
        }
        let mut next = 0;
        for slot in remap.iter_mut().skip(1) {
            if *slot != 0 {
                next += 1;
                *slot = next;
            }
        }
        for l in labels.iter_mut() {
            *l = remap[*l as usize];
        }
        Self {
            cols,
            rows,
            labels,
            offset,
            count: next,
        }
    }

    pub fn with_offset(mut self, offset: (usize, usize)) -> Self {
        self.offset = offset;
        self
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn offset(&self) -> (usize, usize) {
        self.offset
    }

    pub fn count(&self) -> u32 {
        self.count
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> u32 {
        self.labels[row * self.cols + col]
    }

    pub fn areas(&self) -> Vec<usize> {
        let mut areas = vec![0usize; self.count as usize + 1];
        for &l in &self.labels {
            areas[l as usize] += 1;
        }
        areas
    }

    /// True when every positive label forms a single 4-connected region.
    pub fn labels_connected(&self) -> bool {
        let mut seen = vec![false; self.labels.len()];
        let mut visited_label = vec![false; self.count as usize + 1];
        let mut stack = Vec::new();
        for start in 0..self.labels.len() {
            let l = self.labels[start];
            if l == 0 || seen[start] {
                continue;
            }
            if visited_label[l as usize] {
                return false;
            }
            visited_label[l as usize] = true;
            seen[start] = true;
            stack.push(start);
            while let Some(i) = stack.pop() {
                for j in neighbours4(i, self.cols, self.rows) {
                    if !seen[j] && self.labels[j] == l {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        true
    }

    pub(crate) fn check_flow(&self, flow: &FlowField) -> Result<()> {
        let (ox, oy) = self.offset;
        if ox + self.cols > flow.width() || oy + self.rows > flow.height() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} label map at offset ({ox},{oy}) exceeds {}x{} flow field",
                self.cols,
                self.rows,
                flow.width(),
                flow.height()
            )));
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn flow_at(&self, flow: &FlowField, i: usize) -> (f64, f64) {
        flow.at(i % self.cols + self.offset.0, i / self.cols + self.offset.1)
    }
}

#[inline]
pub(crate) fn neighbours4(i: usize, cols: usize, rows: usize) -> impl Iterator<Item = usize> {
    let (c, r) = (i % cols, i / cols);
    let left = (c > 0).then(|| i - 1);
    let right = (c + 1 < cols).then(|| i + 1);
    let up = (r > 0).then(|| i - cols);
    let down = (r + 1 < rows).then(|| i + cols);
    [up, left, right, down].into_iter().flatten()
}

/// Per-segment aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentStats {
    pub label: u32,
    pub area: usize,
    pub mean_flow: (f64, f64),
    /// Mean of per-pixel magnitudes (not the magnitude of `mean_flow`).
    pub mean_magnitude: f64,
    /// Segment pixels (map coordinates) with a 4-neighbour outside the
    /// segment or on the map edge.
    pub boundary_pixels: Vec<(usize, usize)>,
}

pub fn segment_stats(map: &LabelMap, flow: &FlowField) -> Result<Vec<SegmentStats>> {
    map.check_flow(flow)?;
    let n = map.count as usize;
    let mut stats: Vec<SegmentStats> = (1..=n)
        .map(|l| SegmentStats {
            label: l as u32,
            area: 0,
            mean_flow: (0.0, 0.0),
            mean_magnitude: 0.0,
            boundary_pixels: Vec::new(),
        })
        .collect();
    for (i, &l) in map.labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        let s = &mut stats[l as usize - 1];
        let (u, v) = map.flow_at(flow, i);
        s.area += 1;
        s.mean_flow.0 += u;
        s.mean_flow.1 += v;
        s.mean_magnitude += u.hypot(v);
        let (c, r) = (i % map.cols, i / map.cols);
        let on_edge = c == 0 || r == 0 || c + 1 == map.cols || r + 1 == map.rows;
        if on_edge || neighbours4(i, map.cols, map.rows).any(|j| map.labels[j] != l) {
            s.boundary_pixels.push((c, r));
        }
    }
    for s in &mut stats {
        let a = s.area as f64;
        s.mean_flow.0 /= a;
        s.mean_flow.1 /= a;
        s.mean_magnitude /= a;
    }
    Ok(stats)
}

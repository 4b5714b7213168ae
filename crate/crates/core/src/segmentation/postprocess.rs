//! Post-processing of watershed labels: small-segment removal, vacuum
//! removal and merging of neighbours that move alike.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{neighbours4, segment_stats, LabelMap};
use crate::error::{Error, Result};
use crate::flowfield::FlowField;

pub const DEFAULT_MIN_AREA: usize = 150;
pub const DEFAULT_VACUUM_THRESHOLD: f64 = 0.05;
pub const DEFAULT_MERGE_ANGLE_DEG: f64 = 30.0;
pub const DEFAULT_MERGE_BAND: usize = 5;

/// Magnitudes at or below this are treated as directionless.
const MIN_DIRECTION_MAGNITUDE: f64 = 1e-6;

fn drop_labels(map: &LabelMap, drop: &[bool]) -> LabelMap {
    let labels = map
        .labels()
        .iter()
        .map(|&l| if drop[l as usize] { 0 } else { l })
        .collect();
    LabelMap::compacted(map.cols(), map.rows(), labels, map.offset())
}

/// Zeroes every segment with fewer than `min_area` pixels.
pub fn remove_small_segments(map: &LabelMap, min_area: usize) -> LabelMap {
    let areas = map.areas();
    let drop: Vec<bool> = areas
        .iter()
        .enumerate()
        .map(|(l, &a)| l > 0 && a < min_area)
        .collect();
    drop_labels(map, &drop)
}

/// Zeroes segments whose mean per-pixel flow magnitude is below `threshold`.
pub fn remove_vacuum_segments(
    map: &LabelMap,
    flow: &FlowField,
    threshold: f64,
) -> Result<LabelMap> {
    if !(threshold.is_finite() && threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "vacuum threshold {threshold} must be non-negative"
        )));
    }
    let stats = segment_stats(map, flow)?;
    let mut drop = vec![false; map.count() as usize + 1];
    for s in &stats {
        drop[s.label as usize] = s.mean_magnitude < threshold;
    }
    Ok(drop_labels(map, &drop))
}

/// Merges neighbouring segments whose mean flow directions near their shared
/// boundary differ by less than `angle_threshold` radians.
///
/// Two segments are neighbours when they touch directly or across a single
/// 0 pixel. Each side's direction is the mean unit flow vector over its
/// pixels within `band` steps of the shared boundary. Eligible pairs are
/// merged transitively, 0 pixels between merged segments are absorbed, and
/// the pass repeats until no eligible pair is left.
pub fn merge_similar_segments(
    map: &LabelMap,
    flow: &FlowField,
    angle_threshold: f64,
    band: usize,
) -> Result<LabelMap> {
    map.check_flow(flow)?;
    if band == 0 {
        return Err(Error::InvalidArgument("merge band must be positive".into()));
    }
    let mut current = map.clone();
    loop {
        let pairs = eligible_pairs(&current, flow, angle_threshold, band);
        if pairs.is_empty() {
            return Ok(current);
        }
        let mut sets = DisjointSet::new(current.count() as usize + 1);
        for (a, b) in pairs {
            sets.union(a as usize, b as usize);
        }
        current = apply_merge(&current, &mut sets);
    }
}

fn eligible_pairs(
    map: &LabelMap,
    flow: &FlowField,
    angle_threshold: f64,
    band: usize,
) -> Vec<(u32, u32)> {
    let (cols, rows) = (map.cols(), map.rows());
    let labels = map.labels();

    // seeds[(a, b)] = pixels of `a` on its boundary with `b`
    let mut seeds: BTreeMap<(u32, u32), BTreeSet<usize>> = BTreeMap::new();
    for (i, &a) in labels.iter().enumerate() {
        if a == 0 {
            continue;
        }
        for j in neighbours4(i, cols, rows) {
            let b = labels[j];
            if b != 0 {
                if b != a {
                    seeds.entry((a, b)).or_default().insert(i);
                }
                continue;
            }
            for k in neighbours4(j, cols, rows) {
                let b = labels[k];
                if b != 0 && b != a {
                    seeds.entry((a, b)).or_default().insert(i);
                }
            }
        }
    }

    let mut pairs = Vec::new();
    for (&(a, b), seeds_a) in &seeds {
        if a > b {
            continue;
        }
        let Some(seeds_b) = seeds.get(&(b, a)) else {
            continue;
        };
        let da = band_direction(map, flow, a, seeds_a, band);
        let db = band_direction(map, flow, b, seeds_b, band);
        if let (Some(da), Some(db)) = (da, db) {
            if angle_between(da, db) < angle_threshold {
                pairs.push((a, b));
            }
        }
    }
    pairs
}

/// Mean unit flow direction over the pixels of `label` within `band` BFS
/// steps (boundary pixels at step 0) of `seeds`.
fn band_direction(
    map: &LabelMap,
    flow: &FlowField,
    label: u32,
    seeds: &BTreeSet<usize>,
    band: usize,
) -> Option<f64> {
    let (cols, rows) = (map.cols(), map.rows());
    let labels = map.labels();
    let mut depth: BTreeMap<usize, usize> = seeds.iter().map(|&i| (i, 0)).collect();
    let mut queue: VecDeque<usize> = seeds.iter().copied().collect();
    let (mut sx, mut sy) = (0.0, 0.0);
    let mut contributing = 0usize;
    while let Some(i) = queue.pop_front() {
        let d = depth[&i];
        let (u, v) = map.flow_at(flow, i);
        let m = u.hypot(v);
        if m > MIN_DIRECTION_MAGNITUDE {
            sx += u / m;
            sy += v / m;
            contributing += 1;
        }
        if d + 1 >= band {
            continue;
        }
        for j in neighbours4(i, cols, rows) {
            if labels[j] == label && !depth.contains_key(&j) {
                depth.insert(j, d + 1);
                queue.push_back(j);
            }
        }
    }
    if contributing == 0 || sx.hypot(sy) <= MIN_DIRECTION_MAGNITUDE * contributing as f64 {
        return None;
    }
    Some(sy.atan2(sx))
}

fn angle_between(a: f64, b: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let d = (a - b).rem_euclid(tau);
    d.min(tau - d)
}

fn apply_merge(map: &LabelMap, sets: &mut DisjointSet) -> LabelMap {
    let (cols, rows) = (map.cols(), map.rows());
    let old = map.labels();
    let root: Vec<u32> = (0..=map.count() as usize)
        .map(|l| if l == 0 { 0 } else { sets.find(l) as u32 })
        .collect();
    let mut labels: Vec<u32> = old.iter().map(|&l| root[l as usize]).collect();
    // A ridge pixel joins a merged segment when two of its parts meet there,
    // even if an unrelated segment also touches it; otherwise the merged
    // segment could be left in two pieces.
    for (i, &l) in old.iter().enumerate() {
        if l != 0 {
            continue;
        }
        let mut parts: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
        for j in neighbours4(i, cols, rows) {
            if old[j] != 0 {
                parts
                    .entry(root[old[j] as usize])
                    .or_default()
                    .insert(old[j]);
            }
        }
        if let Some((&r, _)) = parts.iter().find(|(_, originals)| originals.len() >= 2) {
            labels[i] = r;
        }
    }
    split_detached(&mut labels, cols, rows);
    LabelMap::compacted(cols, rows, labels, map.offset())
}

/// Gives every extra 4-connected piece of a label a fresh label. Two merges
/// that cross at one ridge pixel cannot both claim it, and the one that
/// loses it stays in pieces.
fn split_detached(labels: &mut [u32], cols: usize, rows: usize) {
    let mut next = labels.iter().copied().max().unwrap_or(0);
    let mut claimed = vec![false; next as usize + 1];
    let mut seen = vec![false; labels.len()];
    let mut stack = Vec::new();
    for start in 0..labels.len() {
        let l = labels[start];
        if l == 0 || seen[start] {
            continue;
        }
        let target = if claimed[l as usize] {
            next += 1;
            next
        } else {
            claimed[l as usize] = true;
            l
        };
        seen[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            labels[i] = target;
            for j in neighbours4(i, cols, rows) {
                if !seen[j] && labels[j] == l {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
}

/// Union-find over segment labels with path compression and union by size.
struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    fn new(len: usize) -> Self {
        Self {
            parent: (0..len).collect(),
            size: vec![1; len],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
    }
}

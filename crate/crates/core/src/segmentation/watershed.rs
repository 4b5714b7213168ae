//! Flooding watershed from regional minima.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::{neighbours4, LabelMap};
use crate::error::{Error, Result};
use crate::field::ScalarField;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

const UNSEEN: u8 = 0;
const QUEUED: u8 = 1;
const DONE: u8 = 2;

/// Labels catchment basins of `height`, high values acting as ridges.
///
/// Regional minima (maximal 4-connected plateaus without a lower
/// neighbour) seed labels in row-major discovery order. Pixels are then
/// flooded in order of (height, queue insertion). A pixel joins the region
/// that first reaches it if it borders that region and no other, and is
/// otherwise 0. Line pixels still pass their region on, so lines follow
/// the divide instead of drifting along slopes. A line pixel that ends up
/// bordering one region is returned to it.
pub fn watershed(height: &ScalarField) -> Result<LabelMap> {
    let (cols, rows) = (height.cols(), height.rows());
    if cols < 3 || rows < 3 {
        return Err(Error::InvalidArgument(format!(
            "watershed needs at least 3x3, got {cols}x{rows}"
        )));
    }
    let h = height.values();
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("watershed height"));
    }
    let n = cols * rows;
    let mut labels = vec![0u32; n];
    let mut state = vec![UNSEEN; n];

    let mut plateau_seen = vec![false; n];
    let mut members = Vec::new();
    let mut stack = Vec::new();
    let mut next_label = 0u32;
    for start in 0..n {
        if plateau_seen[start] {
            continue;
        }
        let level = h[start];
        members.clear();
        plateau_seen[start] = true;
        stack.push(start);
        let mut is_minimum = true;
        while let Some(i) = stack.pop() {
            members.push(i);
            for j in neighbours4(i, cols, rows) {
                if h[j] < level {
                    is_minimum = false;
                } else if h[j] == level && !plateau_seen[j] {
                    plateau_seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if is_minimum {
            next_label += 1;
            for &i in &members {
                labels[i] = next_label;
                state[i] = DONE;
            }
        }
    }

    // Seeds enter the queue like any other pixel, so flooding is monotone
    // and a pixel is first reached from its lowest neighbour. It carries
    // that neighbour's region and passes it on even from a line, which
    // keeps labels on the path of steepest descent. A pixel takes the
    // region only when it touches a flooded pixel of it and of no other
    // region, so every region stays connected.
    let mut reach = labels.clone();
    let mut queue = BinaryHeap::new();
    let mut seq = 0u64;
    for i in 0..n {
        if labels[i] != 0 {
            state[i] = QUEUED;
            queue.push(Reverse((Key(h[i]), seq, i)));
            seq += 1;
        }
    }

    while let Some(Reverse((_, _, i))) = queue.pop() {
        let own = reach[i];
        state[i] = DONE;
        if labels[i] == 0 {
            let mut attached = false;
            let mut clash = false;
            for j in neighbours4(i, cols, rows) {
                if state[j] == DONE && labels[j] != 0 {
                    if labels[j] == own {
                        attached = true;
                    } else {
                        clash = true;
                    }
                }
            }
            if attached && !clash {
                labels[i] = own;
            }
        }
        for j in neighbours4(i, cols, rows) {
            if state[j] == UNSEEN {
                state[j] = QUEUED;
                reach[j] = own;
                queue.push(Reverse((Key(h[j]), seq, j)));
                seq += 1;
            }
        }
    }

    absorb_single_contact(&mut labels, cols, rows);
    Ok(LabelMap::compacted(cols, rows, labels, height.offset()))
}

/// Returns line pixels that border only one region to that region, until
/// every remaining line pixel separates two regions or touches none.
fn absorb_single_contact(labels: &mut [u32], cols: usize, rows: usize) {
    let mut pending: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 0).collect();
    while !pending.is_empty() {
        let mut next = Vec::new();
        for &i in &pending {
            if labels[i] != 0 {
                continue;
            }
            let mut only = 0u32;
            let mut several = false;
            for j in neighbours4(i, cols, rows) {
                match labels[j] {
                    0 => {}
                    l if only == 0 => only = l,
                    l if l != only => several = true,
                    _ => {}
                }
            }
            if only != 0 && !several {
                labels[i] = only;
                next.extend(neighbours4(i, cols, rows).filter(|&j| labels[j] == 0));
            }
        }
        next.sort_unstable();
        next.dedup();
        pending = next;
    }
}

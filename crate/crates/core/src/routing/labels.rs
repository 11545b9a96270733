//! Per-segment path enumeration.
//!
//! For a segment `f_h -> F_h -> f_{h+1}` and a candidate subset of `F_h`, a
//! Held-Karp style DP over `(visited subset, last stop)` keeps the exact
//! Pareto frontier of `(cost, duration)` for every subset. Every DP path is
//! elementary, so subtours cannot occur.

use serde::{Deserialize, Serialize};

use super::RouteError;
use crate::model::{Network, StopId};

/// Exact label enumeration is exponential in the candidate count.
pub const MAX_SEGMENT_CANDIDATES: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentLabel {
    pub segment: usize,
    /// Visited optional stops, sorted by id.
    pub visited: Vec<StopId>,
    /// Visiting order of `visited` between `f_h` and `f_{h+1}`.
    pub order: Vec<StopId>,
    pub cost: f64,
    pub duration: f64,
}

/// A label in candidate-local form: bit `i` of `mask` is `candidates[i]`.
#[derive(Clone, Debug)]
pub(crate) struct RawLabel {
    pub mask: u32,
    pub order: Vec<StopId>,
    pub cost: f64,
    pub duration: f64,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    cost: f64,
    duration: f64,
    prev_last: usize,
    prev_idx: usize,
}

const FROM_START: usize = usize::MAX;

fn dominated(front: &[Entry], cost: f64, duration: f64) -> bool {
    front.iter().any(|e| e.cost <= cost && e.duration <= duration)
}

fn pareto_insert(front: &mut Vec<Entry>, e: Entry) {
    if dominated(front, e.cost, e.duration) {
        return;
    }
    front.retain(|f| !(e.cost <= f.cost && e.duration <= f.duration));
    front.push(e);
}

/// Pareto-minimal `(cost, duration)` labels for every subset of `candidates`
/// that admits an elementary `f_h -> f_{h+1}` path.
pub fn segment_labels(network: &Network, h: usize, candidates: &[StopId]) -> Result<Vec<SegmentLabel>, RouteError> {
    let mut sorted: Vec<StopId> = candidates.to_vec();
    sorted.sort();
    sorted.dedup();
    let raw = raw_labels(network, h, &sorted)?;
    Ok(raw
        .into_iter()
        .map(|l| {
            let visited = (0..sorted.len()).filter(|&i| l.mask & (1 << i) != 0).map(|i| sorted[i]).collect();
            SegmentLabel { segment: h, visited, order: l.order, cost: l.cost, duration: l.duration }
        })
        .collect())
}

pub(crate) fn raw_labels(network: &Network, h: usize, candidates: &[StopId]) -> Result<Vec<RawLabel>, RouteError> {
    if h == 0 || h > network.n_segments() {
        return Err(RouteError::UnknownSegment { h });
    }
    for &c in candidates {
        if network.segment_of(c) != Some(h) {
            return Err(RouteError::NotInSegment { stop: c, h });
        }
    }
    let k = candidates.len();
    if k > MAX_SEGMENT_CANDIDATES {
        return Err(RouteError::SegmentTooLarge { h, candidates: k });
    }
    let start = network.compulsory(h);
    let end = network.compulsory(h + 1);
    let arc = |a: StopId, b: StopId| network.arc(a, b).map(|x| (x.cost, x.time_s));

    let n_masks = 1usize << k;
    let mut dp: Vec<Vec<Vec<Entry>>> = vec![vec![Vec::new(); k]; n_masks];
    for (v, &stop) in candidates.iter().enumerate() {
        if let Some((c, t)) = arc(start, stop) {
            dp[1 << v][v].push(Entry { cost: c, duration: t, prev_last: FROM_START, prev_idx: 0 });
        }
    }
    // Masks only grow, so dp[mask] is final before it is expanded and its
    // entry indices stay valid as back-pointers.
    let mut closed: Vec<Vec<Entry>> = vec![Vec::new(); n_masks];
    if let Some((c, t)) = arc(start, end) {
        closed[0].push(Entry { cost: c, duration: t, prev_last: FROM_START, prev_idx: 0 });
    }
    for mask in 1..n_masks {
        for last in 0..k {
            if mask & (1 << last) == 0 || dp[mask][last].is_empty() {
                continue;
            }
            let entries = dp[mask][last].clone();
            if let Some((c, t)) = arc(candidates[last], end) {
                for (idx, e) in entries.iter().enumerate() {
                    pareto_insert(
                        &mut closed[mask],
                        Entry { cost: e.cost + c, duration: e.duration + t, prev_last: last, prev_idx: idx },
                    );
                }
            }
            for next in 0..k {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let Some((c, t)) = arc(candidates[last], candidates[next]) else { continue };
                let target = mask | (1 << next);
                for (idx, e) in entries.iter().enumerate() {
                    pareto_insert(
                        &mut dp[target][next],
                        Entry { cost: e.cost + c, duration: e.duration + t, prev_last: last, prev_idx: idx },
                    );
                }
            }
        }
    }

    let mut labels = Vec::new();
    for (mask, front) in closed.iter().enumerate() {
        let mut front = front.clone();
        front.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.duration.total_cmp(&b.duration)));
        for e in front {
            let mut order = Vec::new();
            let (mut m, mut last, mut idx) = (mask, e.prev_last, e.prev_idx);
            while last != FROM_START {
                order.push(candidates[last]);
                let prev = dp[m][last][idx];
                m &= !(1 << last);
                last = prev.prev_last;
                idx = prev.prev_idx;
            }
            order.reverse();
            labels.push(RawLabel { mask: mask as u32, order, cost: e.cost, duration: e.duration });
        }
    }
    Ok(labels)
}

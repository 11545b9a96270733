use serde::{Deserialize, Serialize};

use super::line::{polyline_position, project, FixedLine, Point};
use super::{GenConfig, GenError};
use crate::model::{Arc, Network, Stop, StopId, StopKind, Window};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    /// Line-order indices of the original stops kept as compulsory.
    pub compulsory_line_stops: Vec<usize>,
    pub optional_candidates: usize,
    pub intersections_too_far: usize,
    pub merged: usize,
    pub over_segment_cap: usize,
}

/// Number of interior line stops made compulsory for `csf`.
pub fn interior_compulsory_count(csf: f64, line_stops: usize) -> usize {
    let interior = line_stops.saturating_sub(2);
    ((csf * interior as f64 - 1e-9).ceil().max(0.0) as usize).min(interior)
}

struct Cluster {
    at: Point,
    weight: f64,
}

/// Greedy merge: each point joins the first cluster whose centroid is within
/// `radius`, otherwise opens a new one; repeated until no two centroids are
/// within `radius` of each other.
fn merge(points: &[Point], radius: f64) -> (Vec<Point>, usize) {
    let mut clusters: Vec<Cluster> = points.iter().map(|&at| Cluster { at, weight: 1.0 }).collect();
    loop {
        let mut next: Vec<Cluster> = Vec::new();
        for c in clusters.iter() {
            match next.iter_mut().find(|n| n.at.dist(c.at) < radius) {
                Some(n) => {
                    let w = n.weight + c.weight;
                    n.at = Point::new(
                        (n.at.x_m * n.weight + c.at.x_m * c.weight) / w,
                        (n.at.y_m * n.weight + c.at.y_m * c.weight) / w,
                    );
                    n.weight = w;
                }
                None => next.push(Cluster { at: c.at, weight: c.weight }),
            }
        }
        let stable = next.len() == clusters.len();
        clusters = next;
        if stable {
            break;
        }
    }
    let merged = points.len() - clusters.len();
    (clusters.into_iter().map(|c| c.at).collect(), merged)
}

fn ceil_positive(v: f64) -> f64 {
    v.ceil().max(1.0)
}

/// Turns a fixed line into a demand-adaptive network: endpoints plus the
/// highest-volume interior stops become compulsory, the remaining stops and
/// nearby intersections become (merged) optional stops of the nearest
/// segment. Costs and times are whole numbers rounded up from Euclidean
/// distances, so they keep the triangle inequality.
pub fn derive_network(line: &FixedLine, config: &GenConfig) -> Result<(Network, NetworkStats), GenError> {
    let m = line.stops.len();
    if m < 2 {
        return Err(GenError::LineTooShort { stops: m });
    }
    let volumes = line.volumes();
    let mut ranked: Vec<usize> = (1..m - 1).collect();
    ranked.sort_by(|&a, &b| volumes[b].total_cmp(&volumes[a]).then(a.cmp(&b)));
    let k = interior_compulsory_count(config.csf, m);
    let mut chosen: Vec<usize> = ranked[..k].to_vec();
    chosen.push(0);
    chosen.push(m - 1);
    chosen.sort_unstable();

    let original = line.points();
    let chain: Vec<Point> = chosen.iter().map(|&i| original[i]).collect();

    let mut stats = NetworkStats { compulsory_line_stops: chosen.clone(), ..Default::default() };
    let mut candidates: Vec<(f64, Point)> = (0..m)
        .filter(|i| chosen.binary_search(i).is_err())
        .map(|i| (polyline_position(original[i], &original).1, original[i]))
        .collect();
    for &p in &line.intersections {
        let (d, pos) = polyline_position(p, &original);
        if d <= config.optional_candidate_radius_m {
            candidates.push((pos, p));
        } else {
            stats.intersections_too_far += 1;
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    stats.optional_candidates = candidates.len();
    let pts: Vec<Point> = candidates.iter().map(|c| c.1).collect();
    let (merged, n_merged) = merge(&pts, config.merge_radius_m);
    stats.merged = n_merged;

    // Segment by nearest chain leg; order within a segment by leg position.
    let n = chain.len() - 1;
    let mut per_segment: Vec<Vec<(f64, f64, Point)>> = vec![Vec::new(); n];
    for p in merged {
        let (h, d, t) = (0..n)
            .map(|h| {
                let (d, t) = project(p, chain[h], chain[h + 1]);
                (h, d, t)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .expect("chain has at least one leg");
        per_segment[h].push((d, t, p));
    }
    for seg in &mut per_segment {
        if seg.len() > config.max_optional_per_segment {
            seg.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            stats.over_segment_cap += seg.len() - config.max_optional_per_segment;
            seg.truncate(config.max_optional_per_segment);
        }
        seg.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.2.x_m.total_cmp(&b.2.x_m)));
    }

    let mut stops = Vec::new();
    let mut next_id = 0u32;
    let mut mk = |at: Point, kind, segment| {
        let s = Stop { id: StopId(next_id), x_m: at.x_m, y_m: at.y_m, kind, segment };
        next_id += 1;
        s
    };
    let mut compulsory_ids = Vec::with_capacity(n + 1);
    let mut optional_ids: Vec<Vec<StopId>> = vec![Vec::new(); n];
    for h in 0..=n {
        let f = mk(chain[h], StopKind::Compulsory, h + 1);
        compulsory_ids.push(f.id);
        stops.push(f);
        if h < n {
            for &(_, _, p) in &per_segment[h] {
                let s = mk(p, StopKind::Optional, h + 1);
                optional_ids[h].push(s.id);
                stops.push(s);
            }
        }
    }

    let at = |id: StopId| {
        let s = &stops[id.0 as usize];
        Point::new(s.x_m, s.y_m)
    };
    let cost = |a: StopId, b: StopId| ceil_positive(config.cost_per_m * at(a).dist(at(b)));
    let time = |a: StopId, b: StopId| ceil_positive(at(a).dist(at(b)) / config.speed_mps + config.service_s);

    let mut arcs = Vec::new();
    let mut windows = Vec::with_capacity(n + 1);
    let mut a_h = config.horizon_s + config.start_offset_s;
    for h in 0..n {
        let (f, g) = (compulsory_ids[h], compulsory_ids[h + 1]);
        let tails: Vec<StopId> = std::iter::once(f).chain(optional_ids[h].iter().copied()).collect();
        let heads: Vec<StopId> = optional_ids[h].iter().copied().chain(std::iter::once(g)).collect();
        for &i in &tails {
            for &j in &heads {
                if i != j {
                    arcs.push(Arc { from: i, to: j, cost: cost(i, j), time_s: time(i, j) });
                }
            }
        }
        // Slack scales with the detour of sweeping every optional stop in order.
        let direct = time(f, g);
        let sweep: f64 = tails.iter().zip(&heads).map(|(&i, &j)| time(i, j)).sum();
        let slack = (config.slack * (sweep - direct)).ceil();
        windows.push(Window { h: h + 1, a_s: a_h, b_s: a_h + config.window_width_s });
        a_h += direct + slack;
    }
    windows.push(Window { h: n + 1, a_s: a_h, b_s: a_h + config.window_width_s });

    Ok((Network::new(stops, arcs, windows), stats))
}

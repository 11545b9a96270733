use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::line::{FixedLine, OdMatrix, Point};
use super::GenConfig;
use crate::model::{sort_by_arrival, Network, Request, RequestId, StopId};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RequestStats {
    pub sampled: usize,
    pub dropped_empty: usize,
    pub dropped_order: usize,
    pub emitted: usize,
}

impl RequestStats {
    pub fn dropped(&self) -> usize {
        self.dropped_empty + self.dropped_order
    }
}

/// Uniform point in the disc of `radius` around `c`, by rejection from the
/// bounding square.
fn disc_point<R: Rng>(rng: &mut R, c: Point, radius: f64) -> Point {
    loop {
        let (dx, dy) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        if dx * dx + dy * dy <= 1.0 {
            return Point::new(c.x_m + dx * radius, c.y_m + dy * radius);
        }
    }
}

fn stops_within(network: &Network, p: Point, radius: f64, excluded: StopId) -> BTreeSet<StopId> {
    network
        .stops()
        .iter()
        .filter(|s| s.id != excluded && s.distance_to(p.x_m, p.y_m) <= radius)
        .map(|s| s.id)
        .collect()
}

fn optional_segment(network: &Network, s: StopId) -> Option<usize> {
    if network.is_compulsory(s) {
        None
    } else {
        network.segment_of(s)
    }
}

/// Keeps optional pickup stops up to some segment `split` and optional dropoff
/// stops after it, choosing among the splits that leave both sides non-empty
/// the one keeping the most stops (earliest on ties). Compulsory stops are
/// always kept. Returns false, leaving the sets untouched, when no split works.
fn trim_to_forward(network: &Network, pickup: &mut BTreeSet<StopId>, dropoff: &mut BTreeSet<StopId>) -> bool {
    let n = network.n_segments();
    let sides = |split: usize| {
        let p = pickup.iter().filter(|&&s| optional_segment(network, s).is_none_or(|h| h <= split)).count();
        let d = dropoff.iter().filter(|&&s| optional_segment(network, s).is_none_or(|h| h > split)).count();
        (p, d)
    };
    let best = (0..=n)
        .map(|split| (split, sides(split)))
        .filter(|&(_, (p, d))| p > 0 && d > 0)
        .max_by(|a, b| (a.1 .0 + a.1 .1).cmp(&(b.1 .0 + b.1 .1)).then(b.0.cmp(&a.0)));
    let Some((split, _)) = best else { return false };
    pickup.retain(|&s| optional_segment(network, s).is_none_or(|h| h <= split));
    dropoff.retain(|&s| optional_segment(network, s).is_none_or(|h| h > split));
    true
}

/// A passenger draw before stop mapping.
pub(crate) struct Trip {
    origin: Point,
    destination: Point,
    time_s: f64,
}

/// Draws trips unit by unit from the OD table. The random stream consumed is
/// the same for every network and walk radius, so sweeps over those settings
/// see the same passengers.
pub(crate) fn draw_trips<R: Rng>(line: &FixedLine, od: &OdMatrix, config: &GenConfig, rng: &mut R) -> Vec<Trip> {
    let m = od.len();
    let mut trips = Vec::new();
    for o in 0..m {
        for d in o + 1..m {
            let v = od.get(o, d);
            let frac = v - v.floor();
            let extra = rng.gen::<f64>() < frac;
            let units = v.floor() as usize + usize::from(extra);
            for _ in 0..units {
                let origin = disc_point(rng, line.stops[o].at, config.map_radius_m);
                let destination = disc_point(rng, line.stops[d].at, config.map_radius_m);
                let time_s = (rng.gen::<f64>() * config.horizon_s).floor();
                trips.push(Trip { origin, destination, time_s });
            }
        }
    }
    trips
}

/// Maps trips onto the network's stops within walking distance. Boarding at the
/// last compulsory stop or alighting at the first is never possible, so those
/// stops are left out, and optional stops are trimmed so every optional pickup
/// lies in an earlier segment than every optional dropoff. Ids follow arrival
/// order.
pub(crate) fn map_trips(trips: &[Trip], network: &Network, config: &GenConfig, first_id: u32) -> (Vec<Request>, RequestStats) {
    let mut stats = RequestStats { sampled: trips.len(), ..Default::default() };
    let mut kept = Vec::new();
    for (i, t) in trips.iter().enumerate() {
        let mut pickup = stops_within(network, t.origin, config.walk_radius_m, network.last_stop());
        let mut dropoff = stops_within(network, t.destination, config.walk_radius_m, network.first_stop());
        if pickup.is_empty() || dropoff.is_empty() {
            stats.dropped_empty += 1;
            continue;
        }
        if !trim_to_forward(network, &mut pickup, &mut dropoff) {
            stats.dropped_order += 1;
            continue;
        }
        kept.push((t.time_s, i, pickup, dropoff));
    }
    kept.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut requests: Vec<Request> = kept
        .into_iter()
        .enumerate()
        .map(|(k, (time, _, pickup, dropoff))| Request {
            id: RequestId(first_id + k as u32),
            pickup,
            dropoff,
            utility: config.utility,
            request_time_s: time,
        })
        .collect();
    sort_by_arrival(&mut requests);
    stats.emitted = requests.len();
    (requests, stats)
}

/// Samples a request stream: one trip per OD unit (fractional remainders by
/// Bernoulli draw), endpoints uniform in discs around the line stops, arrival
/// uniform over the horizon. Requests left with an empty stop set, before or
/// after trimming to segment order, are dropped and counted.
pub fn sample_requests<R: Rng>(
    line: &FixedLine,
    od: &OdMatrix,
    network: &Network,
    config: &GenConfig,
    rng: &mut R,
) -> (Vec<Request>, RequestStats) {
    let trips = draw_trips(line, od, config, rng);
    map_trips(&trips, network, config, 0)
}

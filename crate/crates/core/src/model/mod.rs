//! Domain types shared by the routing, policy, generation and simulation layers.
//!
//! A demand-adaptive line is a chain of compulsory stops `f_1 .. f_{n+1}`,
//! each with a time window, and between every consecutive pair `(f_h, f_{h+1})`
//! a *segment* holding optional stops that are only visited on request.
//! Segment and window indices `h` are 1-based throughout the public API, the
//! same convention as the instance documents.

mod io;
mod validate;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use io::{load_instance, save_instance, ModelError};
pub use validate::{validate, ValidationReport, Violation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StopId(pub u32);

impl fmt::Display for StopId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestId(pub u32);

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopKind {
    Compulsory,
    Optional,
}

/// A stop of the line. For a compulsory stop `segment` is its chain index `h`
/// (it is `f_h`); for an optional stop it is the segment it belongs to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub id: StopId,
    pub x_m: f64,
    pub y_m: f64,
    pub kind: StopKind,
    pub segment: usize,
}

impl Stop {
    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x_m - x).hypot(self.y_m - y)
    }
}

/// Directed arc. `time_s` includes the service time at the tail stop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub from: StopId,
    pub to: StopId,
    pub cost: f64,
    pub time_s: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub h: usize,
    pub a_s: f64,
    pub b_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct NetworkDoc {
    stops: Vec<Stop>,
    arcs: Vec<Arc>,
    windows: Vec<Window>,
}

/// The line graph: stops, arcs and compulsory-stop windows, plus lookup
/// indices derived at construction.
///
/// Construction never fails; structural problems are reported by
/// [`validate`]. Solvers assume a network that validates cleanly.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(from = "NetworkDoc", into = "NetworkDoc")]
pub struct Network {
    stops: Vec<Stop>,
    arcs: Vec<Arc>,
    windows: Vec<Window>,
    stop_index: HashMap<StopId, usize>,
    arc_index: HashMap<(StopId, StopId), usize>,
    /// `compulsory[h - 1]` is `f_h`.
    compulsory: Vec<StopId>,
    /// `optional[h - 1]` is `F_h`, in stop order.
    optional: Vec<Vec<StopId>>,
    window_index: HashMap<usize, usize>,
}

impl From<NetworkDoc> for Network {
    fn from(doc: NetworkDoc) -> Self {
        Network::new(doc.stops, doc.arcs, doc.windows)
    }
}

impl From<Network> for NetworkDoc {
    fn from(net: Network) -> Self {
        NetworkDoc { stops: net.stops, arcs: net.arcs, windows: net.windows }
    }
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.stops == other.stops && self.arcs == other.arcs && self.windows == other.windows
    }
}

impl Network {
    pub fn new(stops: Vec<Stop>, arcs: Vec<Arc>, windows: Vec<Window>) -> Self {
        let mut stop_index = HashMap::with_capacity(stops.len());
        for (i, s) in stops.iter().enumerate() {
            stop_index.entry(s.id).or_insert(i);
        }
        let mut arc_index = HashMap::with_capacity(arcs.len());
        for (i, a) in arcs.iter().enumerate() {
            arc_index.entry((a.from, a.to)).or_insert(i);
        }

        let mut chain: Vec<(usize, StopId)> = stops
            .iter()
            .filter(|s| s.kind == StopKind::Compulsory)
            .map(|s| (s.segment, s.id))
            .collect();
        chain.sort();
        chain.dedup_by_key(|(h, _)| *h);
        let compulsory: Vec<StopId> = chain.into_iter().map(|(_, id)| id).collect();

        let n_segments = compulsory.len().saturating_sub(1);
        let mut optional = vec![Vec::new(); n_segments];
        for s in stops.iter().filter(|s| s.kind == StopKind::Optional) {
            if s.segment >= 1 && s.segment <= n_segments {
                optional[s.segment - 1].push(s.id);
            }
        }

        let mut window_index = HashMap::with_capacity(windows.len());
        for (i, w) in windows.iter().enumerate() {
            window_index.entry(w.h).or_insert(i);
        }

        Network { stops, arcs, windows, stop_index, arc_index, compulsory, optional, window_index }
    }

    pub fn stops(&self) -> &[Stop] {
        &self.stops
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn windows(&self) -> &[Window] {
        &self.windows
    }

    pub fn stop(&self, id: StopId) -> Option<&Stop> {
        self.stop_index.get(&id).map(|&i| &self.stops[i])
    }

    pub fn arc(&self, from: StopId, to: StopId) -> Option<&Arc> {
        self.arc_index.get(&(from, to)).map(|&i| &self.arcs[i])
    }

    /// Number of segments `n`; the chain has `n + 1` compulsory stops.
    pub fn n_segments(&self) -> usize {
        self.optional.len()
    }

    pub fn compulsory_chain(&self) -> &[StopId] {
        &self.compulsory
    }

    /// `f_h` for `h` in `1..=n+1`.
    pub fn compulsory(&self, h: usize) -> StopId {
        self.compulsory[h - 1]
    }

    /// `F_h` for `h` in `1..=n`.
    pub fn optional(&self, h: usize) -> &[StopId] {
        &self.optional[h - 1]
    }

    pub fn first_stop(&self) -> StopId {
        self.compulsory[0]
    }

    pub fn last_stop(&self) -> StopId {
        *self.compulsory.last().expect("network has no compulsory stops")
    }

    pub fn window(&self, h: usize) -> Option<Window> {
        self.window_index.get(&h).map(|&i| self.windows[i])
    }

    pub fn is_compulsory(&self, id: StopId) -> bool {
        self.stop(id).is_some_and(|s| s.kind == StopKind::Compulsory)
    }

    /// Segment an optional stop belongs to, `None` for compulsory or unknown stops.
    pub fn segment_of(&self, id: StopId) -> Option<usize> {
        self.stop(id).filter(|s| s.kind == StopKind::Optional).map(|s| s.segment)
    }

    /// Cost of the compulsory-only route `f_1 -> f_2 -> ... -> f_{n+1}`.
    pub fn direct_cost(&self) -> f64 {
        (1..=self.n_segments())
            .map(|h| self.arc(self.compulsory(h), self.compulsory(h + 1)).map_or(f64::INFINITY, |a| a.cost))
            .sum()
    }

    /// Earliest departure times of the compulsory-only route, or the first `h`
    /// whose window cannot be met.
    pub fn direct_schedule(&self) -> Result<Vec<f64>, usize> {
        let mut times = Vec::with_capacity(self.compulsory.len());
        let first = self.window(1).ok_or(1usize)?;
        times.push(first.a_s);
        for h in 1..=self.n_segments() {
            let w = self.window(h + 1).ok_or(h + 1)?;
            let tau = self.arc(self.compulsory(h), self.compulsory(h + 1)).ok_or(h + 1)?.time_s;
            let arrival = times[h - 1] + tau;
            if arrival > w.b_s {
                return Err(h + 1);
            }
            times.push(arrival.max(w.a_s));
        }
        Ok(times)
    }
}

/// A passenger request: any stop of `pickup` may serve as boarding stop and
/// any stop of `dropoff` as alighting stop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: RequestId,
    pub pickup: BTreeSet<StopId>,
    pub dropoff: BTreeSet<StopId>,
    pub utility: f64,
    pub request_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub network: Network,
    pub requests: Vec<Request>,
    pub horizon_end_s: f64,
}

impl Instance {
    /// Sorts requests into arrival order (time, then id).
    pub fn sort_requests(&mut self) {
        sort_by_arrival(&mut self.requests);
    }
}

pub fn sort_by_arrival(requests: &mut [Request]) {
    requests.sort_by(|a, b| a.request_time_s.total_cmp(&b.request_time_s).then(a.id.cmp(&b.id)));
}

/// MDP state at decision epoch `theta`: accepted requests and the pending one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub accepted: Vec<Request>,
    pub pending: Request,
    pub decision_index: usize,
}

/// A route through all segments: visited optional stops per segment, compulsory
/// departure times `t_1 .. t_{n+1}` and the summed arc cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoutePlan {
    pub segments: Vec<Vec<StopId>>,
    pub departure_times: Vec<f64>,
    pub total_cost: f64,
}

impl RoutePlan {
    /// Full stop sequence `f_1, F_1 visits, f_2, ..., f_{n+1}`.
    pub fn stop_sequence(&self, network: &Network) -> Vec<StopId> {
        let mut seq = Vec::new();
        for (h, visits) in self.segments.iter().enumerate() {
            seq.push(network.compulsory(h + 1));
            seq.extend(visits.iter().copied());
        }
        seq.push(network.last_stop());
        seq
    }

    pub fn visits(&self, stop: StopId) -> bool {
        self.segments.iter().any(|s| s.contains(&stop))
    }
}

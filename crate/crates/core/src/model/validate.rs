use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Instance, Network, RequestId, StopId, StopKind};

/// A single violated invariant, naming the offending entity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateStop { stop: StopId },
    TooFewCompulsoryStops { count: usize },
    CompulsoryChainGap { h: usize },
    DuplicateCompulsory { h: usize },
    OptionalSegmentOutOfRange { stop: StopId, segment: usize },
    ArcUnknownStop { from: StopId, to: StopId },
    ArcSelfLoop { stop: StopId },
    DuplicateArc { from: StopId, to: StopId },
    ArcOutsideSegment { from: StopId, to: StopId },
    NonPositiveArcCost { from: StopId, to: StopId, cost: f64 },
    NonPositiveArcTime { from: StopId, to: StopId, time_s: f64 },
    MissingDirectArc { h: usize },
    MissingWindow { h: usize },
    DuplicateWindow { h: usize },
    UnknownWindow { h: usize },
    WindowOrder { h: usize, a_s: f64, b_s: f64 },
    ScheduleInfeasible { h: usize },
    EmptyPickup { request: RequestId },
    EmptyDropoff { request: RequestId },
    UnknownRequestStop { request: RequestId, stop: StopId },
    SegmentOrder { request: RequestId, pickup: StopId, dropoff: StopId },
    Unservable { request: RequestId },
    NonPositiveUtility { request: RequestId, utility: f64 },
    RequestTimeOutOfRange { request: RequestId, time_s: f64 },
    RequestsUnsorted { request: RequestId },
    DuplicateRequest { request: RequestId },
    HorizonNotBeforeStart { horizon_end_s: f64, a1_s: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DuplicateStop { stop } => write!(f, "stop ids unique: stop {stop} defined twice"),
            TooFewCompulsoryStops { count } => {
                write!(f, "at least two compulsory stops required, found {count}")
            }
            CompulsoryChainGap { h } => write!(f, "compulsory chain contiguous: no compulsory stop with h={h}"),
            DuplicateCompulsory { h } => write!(f, "compulsory chain contiguous: h={h} used twice"),
            OptionalSegmentOutOfRange { stop, segment } => {
                write!(f, "optional stop {stop} references segment {segment} outside the chain")
            }
            ArcUnknownStop { from, to } => write!(f, "arc ({from},{to}) references an unknown stop"),
            ArcSelfLoop { stop } => write!(f, "arc ({stop},{stop}) is a self loop"),
            DuplicateArc { from, to } => write!(f, "arc ({from},{to}) defined twice"),
            ArcOutsideSegment { from, to } => {
                write!(f, "arc ({from},{to}) does not lie within a single segment")
            }
            NonPositiveArcCost { from, to, cost } => {
                write!(f, "arc costs strictly positive: arc ({from},{to}) has cost {cost}")
            }
            NonPositiveArcTime { from, to, time_s } => {
                write!(f, "arc times strictly positive: arc ({from},{to}) has time {time_s}")
            }
            MissingDirectArc { h } => write!(f, "segment {h} lacks the direct compulsory arc"),
            MissingWindow { h } => write!(f, "compulsory stop h={h} has no time window"),
            DuplicateWindow { h } => write!(f, "time window h={h} defined twice"),
            UnknownWindow { h } => write!(f, "time window h={h} has no compulsory stop"),
            WindowOrder { h, a_s, b_s } => write!(f, "window order a_h <= b_h violated at h={h}: [{a_s}, {b_s}]"),
            ScheduleInfeasible { h } => {
                write!(f, "compulsory-only route cannot meet the window at h={h}")
            }
            EmptyPickup { request } => write!(f, "request {request} has no pickup stop"),
            EmptyDropoff { request } => write!(f, "request {request} has no dropoff stop"),
            UnknownRequestStop { request, stop } => {
                write!(f, "request {request} references unknown stop {stop}")
            }
            SegmentOrder { request, pickup, dropoff } => write!(
                f,
                "request {request}: optional pickup {pickup} must lie in an earlier segment than optional dropoff {dropoff}"
            ),
            Unservable { request } => write!(
                f,
                "request {request} can never be served (pickup only at the last stop or dropoff only at the first)"
            ),
            NonPositiveUtility { request, utility } => {
                write!(f, "request {request} utility must be positive, got {utility}")
            }
            RequestTimeOutOfRange { request, time_s } => {
                write!(f, "request {request} time {time_s} outside [0, horizon_end)")
            }
            RequestsUnsorted { request } => write!(f, "requests not in arrival order at request {request}"),
            DuplicateRequest { request } => write!(f, "request id {request} used twice"),
            HorizonNotBeforeStart { horizon_end_s, a1_s } => {
                write!(f, "horizon end {horizon_end_s} must precede route start a_1={a1_s}")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of an instance. Violations are data:
/// the report is empty iff the instance is well formed.
pub fn validate(instance: &Instance) -> ValidationReport {
    let mut out = Vec::new();
    let chain_ok = check_network(&instance.network, &mut out);
    if chain_ok {
        check_requests(instance, &mut out);
    }
    ValidationReport { violations: out }
}

/// Returns whether the compulsory chain is sound enough for request checks.
fn check_network(net: &Network, out: &mut Vec<Violation>) -> bool {
    let mut seen = HashSet::new();
    for s in net.stops() {
        if !seen.insert(s.id) {
            out.push(Violation::DuplicateStop { stop: s.id });
        }
    }

    let mut hs: Vec<usize> =
        net.stops().iter().filter(|s| s.kind == StopKind::Compulsory).map(|s| s.segment).collect();
    hs.sort_unstable();
    let count = hs.len();
    if count < 2 {
        out.push(Violation::TooFewCompulsoryStops { count });
        return false;
    }
    let mut chain_ok = true;
    for w in hs.windows(2) {
        if w[0] == w[1] {
            out.push(Violation::DuplicateCompulsory { h: w[0] });
            chain_ok = false;
        }
    }
    hs.dedup();
    for (i, &h) in hs.iter().enumerate() {
        if h != i + 1 {
            out.push(Violation::CompulsoryChainGap { h: i + 1 });
            chain_ok = false;
            break;
        }
    }
    if !chain_ok {
        return false;
    }
    let n = net.n_segments();

    for s in net.stops().iter().filter(|s| s.kind == StopKind::Optional) {
        if s.segment == 0 || s.segment > n {
            out.push(Violation::OptionalSegmentOutOfRange { stop: s.id, segment: s.segment });
        }
    }

    let mut arcs_seen = HashSet::new();
    for a in net.arcs() {
        if !arcs_seen.insert((a.from, a.to)) {
            out.push(Violation::DuplicateArc { from: a.from, to: a.to });
        }
        if a.from == a.to {
            out.push(Violation::ArcSelfLoop { stop: a.from });
            continue;
        }
        let (Some(from), Some(to)) = (net.stop(a.from), net.stop(a.to)) else {
            out.push(Violation::ArcUnknownStop { from: a.from, to: a.to });
            continue;
        };
        // Tail side of segment h is f_h or an optional stop of F_h; head side is
        // an optional stop of F_h or f_{h+1}.
        let tail_segment = from.segment;
        let head_segment = match to.kind {
            StopKind::Compulsory => to.segment.wrapping_sub(1),
            StopKind::Optional => to.segment,
        };
        let tail_ok = from.kind == StopKind::Optional || from.segment <= n;
        if !tail_ok || tail_segment != head_segment {
            out.push(Violation::ArcOutsideSegment { from: a.from, to: a.to });
        }
        if !(a.cost > 0.0) || !a.cost.is_finite() {
            out.push(Violation::NonPositiveArcCost { from: a.from, to: a.to, cost: a.cost });
        }
        if !(a.time_s > 0.0) || !a.time_s.is_finite() {
            out.push(Violation::NonPositiveArcTime { from: a.from, to: a.to, time_s: a.time_s });
        }
    }
    let mut direct_ok = true;
    for h in 1..=n {
        if net.arc(net.compulsory(h), net.compulsory(h + 1)).is_none() {
            out.push(Violation::MissingDirectArc { h });
            direct_ok = false;
        }
    }

    let mut windows_ok = true;
    let mut wseen = HashSet::new();
    for w in net.windows() {
        if !wseen.insert(w.h) {
            out.push(Violation::DuplicateWindow { h: w.h });
        }
        if w.h == 0 || w.h > n + 1 {
            out.push(Violation::UnknownWindow { h: w.h });
        }
        if !(w.a_s <= w.b_s) {
            out.push(Violation::WindowOrder { h: w.h, a_s: w.a_s, b_s: w.b_s });
            windows_ok = false;
        }
    }
    for h in 1..=n + 1 {
        if net.window(h).is_none() {
            out.push(Violation::MissingWindow { h });
            windows_ok = false;
        }
    }
    if direct_ok && windows_ok {
        if let Err(h) = net.direct_schedule() {
            out.push(Violation::ScheduleInfeasible { h });
        }
    }
    true
}

fn check_requests(instance: &Instance, out: &mut Vec<Violation>) {
    let net = &instance.network;
    let first = net.first_stop();
    let last = net.last_stop();

    if let Some(w) = net.window(1) {
        if !(instance.horizon_end_s < w.a_s) {
            out.push(Violation::HorizonNotBeforeStart { horizon_end_s: instance.horizon_end_s, a1_s: w.a_s });
        }
    }

    let mut ids = HashSet::new();
    let mut prev: Option<(f64, RequestId)> = None;
    for r in &instance.requests {
        if !ids.insert(r.id) {
            out.push(Violation::DuplicateRequest { request: r.id });
        }
        if let Some((t, id)) = prev {
            if r.request_time_s < t || (r.request_time_s == t && r.id < id) {
                out.push(Violation::RequestsUnsorted { request: r.id });
            }
        }
        prev = Some((r.request_time_s, r.id));

        if r.pickup.is_empty() {
            out.push(Violation::EmptyPickup { request: r.id });
        }
        if r.dropoff.is_empty() {
            out.push(Violation::EmptyDropoff { request: r.id });
        }
        let mut known = true;
        for &s in r.pickup.iter().chain(r.dropoff.iter()) {
            if net.stop(s).is_none() {
                out.push(Violation::UnknownRequestStop { request: r.id, stop: s });
                known = false;
            }
        }
        if known && !r.pickup.is_empty() && !r.dropoff.is_empty() {
            'pairs: for &p in &r.pickup {
                let Some(hp) = net.segment_of(p) else { continue };
                for &d in &r.dropoff {
                    let Some(hd) = net.segment_of(d) else { continue };
                    if hp >= hd {
                        out.push(Violation::SegmentOrder { request: r.id, pickup: p, dropoff: d });
                        break 'pairs;
                    }
                }
            }
        }
        let dead_pickup = !r.pickup.is_empty() && r.pickup.iter().all(|&s| s == last);
        let dead_dropoff = !r.dropoff.is_empty() && r.dropoff.iter().all(|&s| s == first);
        if known && (dead_pickup || dead_dropoff) {
            out.push(Violation::Unservable { request: r.id });
        }
        if !(r.utility > 0.0) || !r.utility.is_finite() {
            out.push(Violation::NonPositiveUtility { request: r.id, utility: r.utility });
        }
        if !(r.request_time_s >= 0.0 && r.request_time_s < instance.horizon_end_s) {
            out.push(Violation::RequestTimeOutOfRange { request: r.id, time_s: r.request_time_s });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Arc, Request, Stop, Window};
    use std::collections::BTreeSet;

    fn stop(id: u32, kind: StopKind, segment: usize) -> Stop {
        Stop { id: StopId(id), x_m: id as f64 * 100.0, y_m: 0.0, kind, segment }
    }

    fn arc(from: u32, to: u32, cost: f64) -> Arc {
        Arc { from: StopId(from), to: StopId(to), cost, time_s: 60.0 }
    }

    /// f1=0, v=1 (segment 1), f2=2, w=3 (segment 2), f3=4.
    fn instance() -> Instance {
        let stops = vec![
            stop(0, StopKind::Compulsory, 1),
            stop(1, StopKind::Optional, 1),
            stop(2, StopKind::Compulsory, 2),
            stop(3, StopKind::Optional, 2),
            stop(4, StopKind::Compulsory, 3),
        ];
        let arcs = vec![
            arc(0, 1, 10.0),
            arc(1, 2, 10.0),
            arc(0, 2, 15.0),
            arc(2, 3, 10.0),
            arc(3, 4, 10.0),
            arc(2, 4, 15.0),
        ];
        let windows = vec![
            Window { h: 1, a_s: 1000.0, b_s: 1100.0 },
            Window { h: 2, a_s: 1100.0, b_s: 1300.0 },
            Window { h: 3, a_s: 1200.0, b_s: 1500.0 },
        ];
        let requests = vec![Request {
            id: RequestId(0),
            pickup: BTreeSet::from([StopId(1)]),
            dropoff: BTreeSet::from([StopId(3)]),
            utility: 750.0,
            request_time_s: 10.0,
        }];
        Instance { network: Network::new(stops, arcs, windows), requests, horizon_end_s: 900.0 }
    }

    #[test]
    fn well_formed_instance_has_empty_report() {
        assert!(validate(&instance()).is_empty(), "{}", validate(&instance()));
    }

    #[test]
    fn window_order_violation_names_h() {
        let mut inst = instance();
        let mut windows = inst.network.windows().to_vec();
        windows[1] = Window { h: 2, a_s: 1400.0, b_s: 1300.0 };
        inst.network = Network::new(inst.network.stops().to_vec(), inst.network.arcs().to_vec(), windows);
        let report = validate(&inst);
        assert!(report.violations.contains(&Violation::WindowOrder { h: 2, a_s: 1400.0, b_s: 1300.0 }));
    }

    #[test]
    fn same_segment_pickup_and_dropoff_is_reported() {
        let mut inst = instance();
        inst.requests[0].dropoff = BTreeSet::from([StopId(1)]);
        let report = validate(&inst);
        assert!(report.violations.contains(&Violation::SegmentOrder {
            request: RequestId(0),
            pickup: StopId(1),
            dropoff: StopId(1)
        }));
    }

    #[test]
    fn negative_cost_and_cross_segment_arcs() {
        let mut inst = instance();
        let mut arcs = inst.network.arcs().to_vec();
        arcs[0].cost = -1.0;
        arcs.push(arc(1, 3, 5.0));
        inst.network = Network::new(inst.network.stops().to_vec(), arcs, inst.network.windows().to_vec());
        let msgs: Vec<String> = validate(&inst).violations.iter().map(|v| v.to_string()).collect();
        assert!(msgs.iter().any(|m| m.starts_with("arc costs strictly positive")));
        assert!(validate(&inst)
            .violations
            .contains(&Violation::ArcOutsideSegment { from: StopId(1), to: StopId(3) }));
    }

    #[test]
    fn arc_into_segment_start_is_outside_segment() {
        let mut inst = instance();
        let mut arcs = inst.network.arcs().to_vec();
        arcs.push(arc(1, 0, 5.0));
        inst.network = Network::new(inst.network.stops().to_vec(), arcs, inst.network.windows().to_vec());
        assert!(validate(&inst)
            .violations
            .contains(&Violation::ArcOutsideSegment { from: StopId(1), to: StopId(0) }));
    }

    #[test]
    fn propagated_schedule_is_checked() {
        // Each window is individually reachable from a_h, but the forced late
        // departure at h=2 makes h=3 unreachable.
        let mut inst = instance();
        let windows = vec![
            Window { h: 1, a_s: 1000.0, b_s: 1000.0 },
            Window { h: 2, a_s: 1000.0, b_s: 1100.0 },
            Window { h: 3, a_s: 1000.0, b_s: 1060.0 },
        ];
        inst.network = Network::new(inst.network.stops().to_vec(), inst.network.arcs().to_vec(), windows);
        assert!(validate(&inst).violations.contains(&Violation::ScheduleInfeasible { h: 3 }));
    }

    #[test]
    fn request_level_checks() {
        let mut inst = instance();
        inst.requests[0].utility = 0.0;
        inst.requests[0].request_time_s = 950.0;
        inst.requests.push(Request {
            id: RequestId(1),
            pickup: BTreeSet::new(),
            dropoff: BTreeSet::from([StopId(0)]),
            utility: 1.0,
            request_time_s: 5.0,
        });
        let v = validate(&inst).violations;
        assert!(v.contains(&Violation::NonPositiveUtility { request: RequestId(0), utility: 0.0 }));
        assert!(v.contains(&Violation::RequestTimeOutOfRange { request: RequestId(0), time_s: 950.0 }));
        assert!(v.contains(&Violation::EmptyPickup { request: RequestId(1) }));
        assert!(v.contains(&Violation::Unservable { request: RequestId(1) }));
        assert!(v.contains(&Violation::RequestsUnsorted { request: RequestId(1) }));
    }

    #[test]
    fn missing_compulsory_chain_stops_early() {
        let inst = Instance {
            network: Network::new(vec![stop(0, StopKind::Compulsory, 1)], vec![], vec![]),
            requests: vec![],
            horizon_end_s: 0.0,
        };
        assert_eq!(validate(&inst).violations, vec![Violation::TooFewCompulsoryStops { count: 1 }]);
    }
}

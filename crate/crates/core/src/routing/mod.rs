//! Exact solver for the full-information acceptance-and-routing problem.
//!
//! The engine is combinatorial: [`segment_labels`] enumerates elementary
//! segment paths, [`optimal_route`] stitches them into a minimum-cost route
//! that honours the compulsory windows, and [`full_info_solve`] runs a
//! depth-first branch-and-bound over acceptance decisions on top of it.
//! [`export_mps`] and [`subtour_cut_loop`] provide the equivalent
//! mixed-integer formulation for external solvers.

mod cuts;
mod labels;
mod mps;
mod route;
mod solve;

use thiserror::Error;

use crate::model::{Network, Request, RoutePlan, StopId};

pub use cuts::{subtour_cut_loop, CutLoopError, CutLoopOutcome, ExternalSolver, Incumbent};
pub use labels::{segment_labels, SegmentLabel, MAX_SEGMENT_CANDIDATES};
pub use mps::{export_mps, DasModel, Fixing};
pub(crate) use route::RouteContext;
pub use solve::{full_info_solve, full_info_solve_with, FullInfoSolution, SolveOptions};

/// Absolute tolerance for objective comparisons.
pub const EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum RouteError {
    #[error("no route serves the accepted requests within the time windows")]
    Infeasible,
    #[error("segment {h} does not exist")]
    UnknownSegment { h: usize },
    #[error("stop {stop} is not an optional stop of segment {h}")]
    NotInSegment { stop: StopId, h: usize },
    #[error("stop {stop} is not an optional stop of the network")]
    UnknownStop { stop: StopId },
    #[error("stop {stop} is outside the solver's candidate universe")]
    OutsideUniverse { stop: StopId },
    #[error("segment {h} has {candidates} candidate stops; exact enumeration supports at most {max}", max = MAX_SEGMENT_CANDIDATES)]
    SegmentTooLarge { h: usize, candidates: usize },
}

/// Minimum-cost route serving every request of `accepted`.
pub fn optimal_route(network: &Network, accepted: &[Request]) -> Result<RoutePlan, RouteError> {
    let ctx = RouteContext::new(network, accepted)?;
    let refs: Vec<&Request> = accepted.iter().collect();
    ctx.optimal_route(&refs)
}

/// Whether some route serves all of `accepted` within the windows.
pub fn is_feasible(network: &Network, accepted: &[Request]) -> bool {
    optimal_route(network, accepted).is_ok()
}

/// Whether `plan` boards `request` at one of its pickup stops and alights it
/// at one of its dropoff stops.
pub fn serves(network: &Network, plan: &RoutePlan, request: &Request) -> bool {
    let boards = request
        .pickup
        .iter()
        .any(|&s| (network.is_compulsory(s) && s != network.last_stop()) || plan.visits(s));
    let alights = request
        .dropoff
        .iter()
        .any(|&s| (network.is_compulsory(s) && s != network.first_stop()) || plan.visits(s));
    boards && alights
}

/// Literal predicate checks of a plan against the routing constraints:
/// coverage of accepted requests, arc existence and flow, chained departure
/// times, compulsory windows, elementary segments and the reported cost.
/// Returns one message per violated check.
pub fn verify_plan(network: &Network, plan: &RoutePlan, accepted: &[Request]) -> Vec<String> {
    let mut issues = Vec::new();
    let n = network.n_segments();
    if plan.segments.len() != n || plan.departure_times.len() != n + 1 {
        issues.push(format!(
            "plan shape: {} segments / {} times for a {n}-segment network",
            plan.segments.len(),
            plan.departure_times.len()
        ));
        return issues;
    }
    let mut cost = 0.0;
    for h in 1..=n {
        let visits = &plan.segments[h - 1];
        let mut seen = std::collections::HashSet::new();
        for &s in visits {
            if network.segment_of(s) != Some(h) {
                issues.push(format!("segment {h}: stop {s} is not in F_{h}"));
            }
            if !seen.insert(s) {
                issues.push(format!("segment {h}: stop {s} visited twice"));
            }
        }
        let mut path = vec![network.compulsory(h)];
        path.extend(visits.iter().copied());
        path.push(network.compulsory(h + 1));
        let mut duration = 0.0;
        for w in path.windows(2) {
            match network.arc(w[0], w[1]) {
                Some(a) => {
                    cost += a.cost;
                    duration += a.time_s;
                }
                None => issues.push(format!("segment {h}: missing arc ({}, {})", w[0], w[1])),
            }
        }
        let (t, t_next) = (plan.departure_times[h - 1], plan.departure_times[h]);
        if t + duration > t_next + EPS {
            issues.push(format!("segment {h}: departs {t} + {duration} > next departure {t_next}"));
        }
    }
    for h in 1..=n + 1 {
        let t = plan.departure_times[h - 1];
        match network.window(h) {
            Some(w) if t >= w.a_s - EPS && t <= w.b_s + EPS => {}
            Some(w) => issues.push(format!("window h={h}: t={t} outside [{}, {}]", w.a_s, w.b_s)),
            None => issues.push(format!("window h={h} missing")),
        }
    }
    if (cost - plan.total_cost).abs() > EPS {
        issues.push(format!("reported cost {} differs from arc sum {cost}", plan.total_cost));
    }
    for r in accepted {
        if !serves(network, plan, r) {
            issues.push(format!("request {} not served", r.id));
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Arc, RequestId, Stop, StopKind, Window};
    use std::collections::BTreeSet;

    /// f1=0 -> f2=2 with optional v=1 in segment 1, f2 -> f3=4 with optional w=3.
    fn network(b2: f64) -> Network {
        let stops = vec![
            Stop { id: StopId(0), x_m: 0.0, y_m: 0.0, kind: StopKind::Compulsory, segment: 1 },
            Stop { id: StopId(1), x_m: 0.0, y_m: 0.0, kind: StopKind::Optional, segment: 1 },
            Stop { id: StopId(2), x_m: 0.0, y_m: 0.0, kind: StopKind::Compulsory, segment: 2 },
            Stop { id: StopId(3), x_m: 0.0, y_m: 0.0, kind: StopKind::Optional, segment: 2 },
            Stop { id: StopId(4), x_m: 0.0, y_m: 0.0, kind: StopKind::Compulsory, segment: 3 },
        ];
        let a = |f: u32, t: u32, cost: f64, time_s: f64| Arc { from: StopId(f), to: StopId(t), cost, time_s };
        let arcs = vec![
            a(0, 2, 100.0, 100.0),
            a(0, 1, 150.0, 90.0),
            a(1, 2, 150.0, 90.0),
            a(2, 4, 100.0, 100.0),
            a(2, 3, 80.0, 60.0),
            a(3, 4, 80.0, 60.0),
        ];
        let windows = vec![
            Window { h: 1, a_s: 1000.0, b_s: 1000.0 },
            Window { h: 2, a_s: 1100.0, b_s: b2 },
            Window { h: 3, a_s: 1200.0, b_s: 1400.0 },
        ];
        Network::new(stops, arcs, windows)
    }

    fn request(id: u32, pickup: &[u32], dropoff: &[u32]) -> Request {
        Request {
            id: RequestId(id),
            pickup: pickup.iter().map(|&s| StopId(s)).collect::<BTreeSet<_>>(),
            dropoff: dropoff.iter().map(|&s| StopId(s)).collect(),
            utility: 750.0,
            request_time_s: id as f64,
        }
    }

    #[test]
    fn empty_acceptance_follows_compulsory_chain() {
        let net = network(1300.0);
        let plan = optimal_route(&net, &[]).unwrap();
        assert_eq!(plan.total_cost, net.direct_cost());
        assert_eq!(plan.departure_times, vec![1000.0, 1100.0, 1200.0]);
        assert!(plan.segments.iter().all(|s| s.is_empty()));
        assert!(is_feasible(&net, &[]));
    }

    #[test]
    fn single_detour_replaces_direct_arc() {
        let net = network(1300.0);
        let r = request(0, &[1], &[2]);
        let plan = optimal_route(&net, std::slice::from_ref(&r)).unwrap();
        assert_eq!(plan.total_cost, 200.0 - 100.0 + 150.0 + 150.0);
        assert_eq!(plan.segments[0], vec![StopId(1)]);
        // Arrives at f_2 at 1180 and departs immediately; f_3 reached at 1280.
        assert_eq!(plan.departure_times, vec![1000.0, 1180.0, 1280.0]);
        assert!(verify_plan(&net, &plan, &[r]).is_empty());
    }

    #[test]
    fn detour_longer_than_window_is_infeasible() {
        // The detour takes 180 s but only 1150 - 1000 = 150 s are available.
        let net = network(1150.0);
        let r = request(0, &[1], &[2]);
        assert!(!is_feasible(&net, &[r]));
    }

    #[test]
    fn late_departure_propagates_to_next_segment() {
        // Serving v forces departure from f_2 at 1180; with w added, f_3 is
        // reached at 1180 + 120 = 1300.
        let net = network(1300.0);
        let both = vec![request(0, &[1], &[3])];
        let plan = optimal_route(&net, &both).unwrap();
        assert_eq!(plan.departure_times[2], 1300.0);
        let mut tight = net.windows().to_vec();
        tight[2].b_s = 1290.0;
        let net2 = Network::new(net.stops().to_vec(), net.arcs().to_vec(), tight);
        assert!(!is_feasible(&net2, &both));
        assert!(is_feasible(&net2, &[request(1, &[1], &[4])]));
    }

    #[test]
    fn pickup_at_last_stop_is_unservable() {
        let net = network(1300.0);
        assert!(!is_feasible(&net, &[request(0, &[4], &[4])]));
        assert!(is_feasible(&net, &[request(0, &[2, 4], &[4])]));
    }

    #[test]
    fn alternative_stops_pick_cheapest() {
        // Pickup at v (segment 1) or w (segment 2); w is the cheaper detour.
        let net = network(1300.0);
        let plan = optimal_route(&net, &[request(0, &[1, 3], &[4])]).unwrap();
        assert_eq!(plan.segments, vec![vec![], vec![StopId(3)]]);
        assert_eq!(plan.total_cost, 100.0 + 160.0);
    }
}

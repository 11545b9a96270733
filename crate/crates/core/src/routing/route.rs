//! Minimum-cost route for a fixed set of accepted requests.
//!
//! Each accepted request contributes up to two *requirements*: a set of
//! optional stops of which at least one must be visited (pickup side and
//! dropoff side). Requirements met by a compulsory stop vanish. A DP over
//! segment boundaries tracks which still-open requirements are already met,
//! carrying a Pareto frontier of (accumulated cost, departure time).

use std::collections::{BTreeMap, BTreeSet};

use super::labels::{raw_labels, RawLabel};
use super::RouteError;
use crate::model::{Network, Request, RoutePlan, StopId};

/// Growable bitset over requirement indices; ordered so DP layers iterate
/// deterministically.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct Bits(Vec<u64>);

impl Bits {
    fn zeros(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64).max(1)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn or(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a | b).collect())
    }

    fn contains_all(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & b == *b)
    }

    fn and_not(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a &= !b;
        }
    }
}

/// Pickup side of a request may be served by any listed stop except the last
/// compulsory stop (it has no outgoing arc); the dropoff side by any except the
/// first. A side with a usable compulsory stop is always served.
pub(crate) enum Side {
    Free,
    Unservable,
    Needs(BTreeSet<StopId>),
}

pub(crate) fn pickup_side(network: &Network, r: &Request) -> Side {
    side(network, &r.pickup, network.last_stop())
}

pub(crate) fn dropoff_side(network: &Network, r: &Request) -> Side {
    side(network, &r.dropoff, network.first_stop())
}

fn side(network: &Network, stops: &BTreeSet<StopId>, excluded: StopId) -> Side {
    let usable: Vec<StopId> = stops.iter().copied().filter(|&s| s != excluded).collect();
    if usable.is_empty() {
        Side::Unservable
    } else if usable.iter().any(|&s| network.is_compulsory(s)) {
        Side::Free
    } else {
        Side::Needs(usable.into_iter().collect())
    }
}

struct SegmentTable {
    candidates: Vec<StopId>,
    labels: Vec<RawLabel>,
}

/// Route solver bound to one network and a universe of requests whose stops
/// may be visited. Segment labels are enumerated once for the whole universe
/// and reused by every [`RouteContext::optimal_route`] call.
pub(crate) struct RouteContext<'a> {
    network: &'a Network,
    segments: Vec<SegmentTable>,
}

#[derive(Clone, Copy)]
struct DpEntry {
    cost: f64,
    time: f64,
    node: usize,
}

fn pareto_insert(front: &mut Vec<DpEntry>, e: DpEntry) {
    if front.iter().any(|f| f.cost <= e.cost && f.time <= e.time) {
        return;
    }
    front.retain(|f| !(e.cost <= f.cost && e.time <= f.time));
    front.push(e);
}

impl<'a> RouteContext<'a> {
    pub fn new<'r>(network: &'a Network, universe: impl IntoIterator<Item = &'r Request>) -> Result<Self, RouteError> {
        let n = network.n_segments();
        let mut wanted: Vec<BTreeSet<StopId>> = vec![BTreeSet::new(); n];
        for r in universe {
            for sides in [pickup_side(network, r), dropoff_side(network, r)] {
                if let Side::Needs(stops) = sides {
                    for s in stops {
                        let h = network.segment_of(s).ok_or(RouteError::UnknownStop { stop: s })?;
                        wanted[h - 1].insert(s);
                    }
                }
            }
        }
        let mut segments = Vec::with_capacity(n);
        for (i, set) in wanted.into_iter().enumerate() {
            let candidates: Vec<StopId> = set.into_iter().collect();
            let labels = raw_labels(network, i + 1, &candidates)?;
            segments.push(SegmentTable { candidates, labels });
        }
        Ok(RouteContext { network, segments })
    }

    pub fn optimal_route(&self, accepted: &[&Request]) -> Result<RoutePlan, RouteError> {
        let net = self.network;
        let n = net.n_segments();

        // Requirements as sets of optional stops; a requirement implied by a
        // smaller one is redundant.
        let mut reqs: BTreeSet<BTreeSet<StopId>> = BTreeSet::new();
        for r in accepted {
            for sides in [pickup_side(net, r), dropoff_side(net, r)] {
                match sides {
                    Side::Free => {}
                    Side::Unservable => return Err(RouteError::Infeasible),
                    Side::Needs(stops) => {
                        reqs.insert(stops);
                    }
                }
            }
        }
        let reqs: Vec<BTreeSet<StopId>> = {
            let all: Vec<_> = reqs.into_iter().collect();
            all.iter()
                .enumerate()
                .filter(|(i, a)| !all.iter().enumerate().any(|(j, b)| j != *i && b.is_subset(a) && (b != *a || j < *i)))
                .map(|(_, a)| a.clone())
                .collect()
        };
        let n_req = reqs.len();

        // Per segment: requirement masks over local candidates, and which
        // requirements close (last hosting segment) here.
        let mut seg_req: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n];
        let mut last_seg = vec![0usize; n_req];
        for (j, stops) in reqs.iter().enumerate() {
            for &s in stops {
                let h = net.segment_of(s).ok_or(RouteError::UnknownStop { stop: s })?;
                let table = &self.segments[h - 1];
                let bit = table
                    .candidates
                    .binary_search(&s)
                    .map_err(|_| RouteError::OutsideUniverse { stop: s })?;
                match seg_req[h - 1].iter_mut().find(|(jj, _)| *jj == j) {
                    Some((_, m)) => *m |= 1 << bit,
                    None => seg_req[h - 1].push((j, 1 << bit)),
                }
                last_seg[j] = last_seg[j].max(h);
            }
        }
        let mut closing = vec![Bits::zeros(n_req); n];
        for (j, &h) in last_seg.iter().enumerate() {
            closing[h - 1].set(j);
        }

        let w1 = net.window(1).ok_or(RouteError::Infeasible)?;
        // Arena of (parent node, label index) for route reconstruction.
        let mut arena: Vec<(usize, usize)> = vec![(usize::MAX, usize::MAX)];
        let mut layer: BTreeMap<Bits, Vec<DpEntry>> = BTreeMap::new();
        layer.insert(Bits::zeros(n_req), vec![DpEntry { cost: 0.0, time: w1.a_s, node: 0 }]);

        for h in 1..=n {
            let table = &self.segments[h - 1];
            let allowed: u32 = seg_req[h - 1].iter().fold(0, |acc, (_, m)| acc | m);
            let usable = useful_labels(table, allowed, &seg_req[h - 1], n_req);
            let w = net.window(h + 1).ok_or(RouteError::Infeasible)?;
            let mut next: BTreeMap<Bits, Vec<DpEntry>> = BTreeMap::new();
            for (key, entries) in &layer {
                for (label_idx, hits) in &usable {
                    let label = &table.labels[*label_idx];
                    let mut new_key = key.or(hits);
                    if !new_key.contains_all(&closing[h - 1]) {
                        continue;
                    }
                    new_key.and_not(&closing[h - 1]);
                    for e in entries {
                        let arrival = e.time + label.duration;
                        if arrival > w.b_s {
                            continue;
                        }
                        let time = arrival.max(w.a_s);
                        arena.push((e.node, *label_idx));
                        let node = arena.len() - 1;
                        pareto_insert(
                            next.entry(new_key.clone()).or_default(),
                            DpEntry { cost: e.cost + label.cost, time, node },
                        );
                    }
                }
            }
            if next.is_empty() {
                return Err(RouteError::Infeasible);
            }
            layer = next;
        }

        let best = layer
            .values()
            .flatten()
            .min_by(|a, b| a.cost.total_cmp(&b.cost).then(a.time.total_cmp(&b.time)))
            .copied()
            .ok_or(RouteError::Infeasible)?;

        let mut picks = Vec::with_capacity(n);
        let mut node = best.node;
        while node != 0 {
            let (parent, label) = arena[node];
            picks.push(label);
            node = parent;
        }
        picks.reverse();

        let mut segments = Vec::with_capacity(n);
        let mut times = vec![w1.a_s];
        let mut total_cost = 0.0;
        for (h, &label_idx) in picks.iter().enumerate() {
            let label = &self.segments[h].labels[label_idx];
            segments.push(label.order.clone());
            total_cost += label.cost;
            let w = net.window(h + 2).ok_or(RouteError::Infeasible)?;
            times.push((times[h] + label.duration).max(w.a_s));
        }
        Ok(RoutePlan { segments, departure_times: times, total_cost })
    }
}

/// Labels usable under `allowed`, each with its requirement hits, minus
/// labels dominated by one with at least the same hits and no worse cost and
/// duration.
fn useful_labels(table: &SegmentTable, allowed: u32, seg_req: &[(usize, u32)], n_req: usize) -> Vec<(usize, Bits)> {
    let mut cands: Vec<(usize, Bits)> = table
        .labels
        .iter()
        .enumerate()
        .filter(|(_, l)| l.mask & !allowed == 0)
        .map(|(i, l)| {
            let mut hits = Bits::zeros(n_req);
            for &(j, m) in seg_req {
                if l.mask & m != 0 {
                    hits.set(j);
                }
            }
            (i, hits)
        })
        .collect();
    cands.sort_by(|(a, _), (b, _)| {
        let (la, lb) = (&table.labels[*a], &table.labels[*b]);
        la.cost.total_cmp(&lb.cost).then(la.duration.total_cmp(&lb.duration)).then(a.cmp(b))
    });
    let mut kept: Vec<(usize, Bits)> = Vec::new();
    for (i, hits) in cands {
        let l = &table.labels[i];
        let dominated = kept.iter().any(|(k, kh)| {
            let lk = &table.labels[*k];
            lk.cost <= l.cost && lk.duration <= l.duration && kh.contains_all(&hits)
        });
        if !dominated {
            kept.push((i, hits));
        }
    }
    kept
}

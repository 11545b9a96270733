//! Brute-force references for the das test suites.
//!
//! Everything here enumerates: paths by permutation, routes by Cartesian
//! product over segments, acceptance sets by bitmask. Nothing is shared with
//! the solvers in `das-core` beyond the data types.

use std::collections::{BTreeMap, BTreeSet};

use das_core::model::{Arc, Instance, Network, Request, RequestId, RoutePlan, Stop, StopId, StopKind, SystemState, Window};
use das_core::policies::{Scenario, ScenarioSet};
use das_core::sim::{ArrivalTree, Branch};
use rand::seq::SliceRandom;
use rand::Rng;

pub const EPS: f64 = 1e-9;

/// One elementary `f_h -> ... -> f_{h+1}` path.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub order: Vec<StopId>,
    pub cost: f64,
    pub duration: f64,
}

fn permutations(items: &[StopId]) -> Vec<Vec<StopId>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Every elementary path through segment `h` whose interior stops are drawn
/// from `candidates`, in every order, keeping those whose arcs all exist.
pub fn segment_paths(network: &Network, h: usize, candidates: &[StopId]) -> Vec<Path> {
    let (from, to) = (network.compulsory(h), network.compulsory(h + 1));
    let mut out = Vec::new();
    for mask in 0u32..(1 << candidates.len()) {
        let subset: Vec<StopId> = (0..candidates.len()).filter(|i| mask >> i & 1 == 1).map(|i| candidates[i]).collect();
        for order in permutations(&subset) {
            let mut seq = vec![from];
            seq.extend(&order);
            seq.push(to);
            let arcs: Option<Vec<&Arc>> = seq.windows(2).map(|w| network.arc(w[0], w[1])).collect();
            if let Some(arcs) = arcs {
                out.push(Path {
                    order,
                    cost: arcs.iter().map(|a| a.cost).sum(),
                    duration: arcs.iter().map(|a| a.time_s).sum(),
                });
            }
        }
    }
    out
}

/// Pareto-minimal `(cost, duration)` pairs per visited subset (sorted ids).
pub fn segment_frontier(network: &Network, h: usize, candidates: &[StopId]) -> BTreeMap<Vec<StopId>, Vec<(f64, f64)>> {
    let mut by_subset: BTreeMap<Vec<StopId>, Vec<(f64, f64)>> = BTreeMap::new();
    for p in segment_paths(network, h, candidates) {
        let mut key = p.order.clone();
        key.sort();
        by_subset.entry(key).or_default().push((p.cost, p.duration));
    }
    for points in by_subset.values_mut() {
        let all = points.clone();
        points.retain(|&(c, d)| !all.iter().any(|&(c2, d2)| c2 <= c && d2 <= d && (c2 < c || d2 < d)));
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        points.dedup();
    }
    by_subset
}

/// Departure times at every compulsory stop when the vehicle waits for each
/// window to open, or `None` when some window closes first.
pub fn schedule(network: &Network, durations: &[f64]) -> Option<Vec<f64>> {
    let w1 = network.window(1)?;
    let mut t = vec![w1.a_s];
    for (h, d) in durations.iter().enumerate() {
        let w = network.window(h + 2)?;
        let arrival = t[h] + d;
        if arrival > w.b_s {
            return None;
        }
        t.push(arrival.max(w.a_s));
    }
    Some(t)
}

/// Whether the stop sequence boards `r` at a pickup stop and alights it at a
/// later dropoff stop.
pub fn sequence_serves(sequence: &[StopId], r: &Request) -> bool {
    sequence.iter().enumerate().any(|(i, s)| r.pickup.contains(s) && sequence[i + 1..].iter().any(|d| r.dropoff.contains(d)))
}

fn full_sequence(network: &Network, paths: &[&Path]) -> Vec<StopId> {
    let mut seq = Vec::new();
    for (h, p) in paths.iter().enumerate() {
        seq.push(network.compulsory(h + 1));
        seq.extend(&p.order);
    }
    seq.push(network.last_stop());
    seq
}

/// Cheapest route serving all of `accepted`, by enumerating every path of
/// every segment over all of its optional stops. Equal costs keep the first
/// route found.
pub fn brute_route(network: &Network, accepted: &[Request]) -> Option<RoutePlan> {
    let n = network.n_segments();
    let per_segment: Vec<Vec<Path>> = (1..=n).map(|h| segment_paths(network, h, network.optional(h))).collect();
    let mut best: Option<RoutePlan> = None;
    let mut idx = vec![0usize; n];
    if per_segment.iter().any(Vec::is_empty) {
        return None;
    }
    loop {
        let paths: Vec<&Path> = idx.iter().enumerate().map(|(h, &i)| &per_segment[h][i]).collect();
        let cost: f64 = paths.iter().map(|p| p.cost).sum();
        if best.as_ref().is_none_or(|b| cost < b.total_cost - EPS) {
            let seq = full_sequence(network, &paths);
            if accepted.iter().all(|r| sequence_serves(&seq, r)) {
                let durations: Vec<f64> = paths.iter().map(|p| p.duration).collect();
                if let Some(times) = schedule(network, &durations) {
                    best = Some(RoutePlan {
                        segments: paths.iter().map(|p| p.order.clone()).collect(),
                        departure_times: times,
                        total_cost: cost,
                    });
                }
            }
        }
        // Odometer increment.
        let mut h = 0;
        loop {
            if h == n {
                return best;
            }
            idx[h] += 1;
            if idx[h] < per_segment[h].len() {
                break;
            }
            idx[h] = 0;
            h += 1;
        }
    }
}

pub fn brute_feasible(network: &Network, accepted: &[Request]) -> bool {
    brute_route(network, accepted).is_some()
}

/// Result of an exhaustive acceptance search.
#[derive(Clone, Debug, PartialEq)]
pub struct BruteSolution {
    pub accepted: Vec<RequestId>,
    pub objective: f64,
    pub route_cost: f64,
}

/// Tie order on equal objective: avoid `prefer_reject`, then fewer
/// acceptances, then the smaller sorted id list.
fn better(a: &BruteSolution, b: &BruteSolution, prefer_reject: Option<RequestId>) -> bool {
    if a.objective > b.objective + EPS {
        return true;
    }
    if a.objective < b.objective - EPS {
        return false;
    }
    let holds = |s: &BruteSolution| prefer_reject.is_some_and(|p| s.accepted.contains(&p));
    (holds(a), a.accepted.len(), &a.accepted) < (holds(b), b.accepted.len(), &b.accepted)
}

/// Best acceptance set over all `2^|requests|` subsets that agree with
/// `fixed`, each priced by [`brute_route`].
pub fn brute_full_info_with(
    network: &Network,
    requests: &[Request],
    fixed: &BTreeMap<RequestId, bool>,
    prefer_reject: Option<RequestId>,
) -> Option<BruteSolution> {
    let mut best: Option<BruteSolution> = None;
    for mask in 0u64..(1 << requests.len()) {
        let chosen: Vec<Request> =
            (0..requests.len()).filter(|i| mask >> i & 1 == 1).map(|i| requests[i].clone()).collect();
        let agrees = requests.iter().enumerate().all(|(i, r)| fixed.get(&r.id).is_none_or(|&y| y == (mask >> i & 1 == 1)));
        if !agrees {
            continue;
        }
        let Some(route) = brute_route(network, &chosen) else { continue };
        let mut ids: Vec<RequestId> = chosen.iter().map(|r| r.id).collect();
        ids.sort();
        let cand = BruteSolution {
            objective: chosen.iter().map(|r| r.utility).sum::<f64>() - route.total_cost,
            route_cost: route.total_cost,
            accepted: ids,
        };
        if best.as_ref().is_none_or(|b| better(&cand, b, prefer_reject)) {
            best = Some(cand);
        }
    }
    best
}

pub fn brute_full_info(network: &Network, requests: &[Request]) -> BruteSolution {
    brute_full_info_with(network, requests, &BTreeMap::new(), None).expect("rejecting everything is feasible")
}

/// Scenario value with the accepted set pinned and the pending request pinned
/// to `accept`; `None` stands for minus infinity.
pub fn brute_q(network: &Network, state: &SystemState, accept: bool, scenario: &Scenario) -> Option<f64> {
    let mut fixed: BTreeMap<RequestId, bool> = state.accepted.iter().map(|r| (r.id, true)).collect();
    fixed.insert(state.pending.id, accept);
    brute_full_info_with(network, &scenario.requests, &fixed, None).map(|s| s.objective)
}

/// Outcome of the joint multi-scenario model.
#[derive(Clone, Debug, PartialEq)]
pub struct Monolithic {
    /// Optimal expected value, `None` for minus infinity.
    pub value: Option<f64>,
    /// First-stage decision at the optimum; ties reject.
    pub accept: bool,
}

/// Joint enumeration over one acceptance vector per scenario at once. A
/// combination counts only when every scenario keeps the accepted requests and
/// all scenarios agree on the pending request.
pub fn brute_monolithic(network: &Network, state: &SystemState, scenarios: &ScenarioSet) -> Monolithic {
    let accepted: BTreeSet<RequestId> = state.accepted.iter().map(|r| r.id).collect();
    // Profit of every acceptance mask per scenario (None if unroutable).
    let tables: Vec<Vec<Option<f64>>> = scenarios
        .scenarios
        .iter()
        .map(|s| {
            (0u64..(1 << s.requests.len()))
                .map(|mask| {
                    let chosen: Vec<Request> =
                        (0..s.requests.len()).filter(|i| mask >> i & 1 == 1).map(|i| s.requests[i].clone()).collect();
                    brute_route(network, &chosen).map(|r| chosen.iter().map(|q| q.utility).sum::<f64>() - r.total_cost)
                })
                .collect()
        })
        .collect();
    let sizes: Vec<u64> = scenarios.scenarios.iter().map(|s| 1u64 << s.requests.len()).collect();
    let pending_bit = |k: usize, mask: u64| {
        let i = scenarios.scenarios[k].requests.iter().position(|r| r.id == state.pending.id).expect("pending in scenario");
        mask >> i & 1 == 1
    };
    let keeps_accepted = |k: usize, mask: u64| {
        scenarios.scenarios[k].requests.iter().enumerate().all(|(i, r)| !accepted.contains(&r.id) || mask >> i & 1 == 1)
    };

    let mut best: [Option<f64>; 2] = [None, None];
    let mut masks = vec![0u64; sizes.len()];
    'outer: loop {
        let first = pending_bit(0, masks[0]);
        let linked = (0..masks.len()).all(|k| pending_bit(k, masks[k]) == first && keeps_accepted(k, masks[k]));
        if linked {
            let mut total = 0.0;
            let mut ok = true;
            for (k, &m) in masks.iter().enumerate() {
                match tables[k][m as usize] {
                    Some(v) => total += scenarios.scenarios[k].probability * v,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            let slot = &mut best[usize::from(first)];
            if ok && slot.is_none_or(|b| total > b) {
                *slot = Some(total);
            }
        }
        let mut k = 0;
        loop {
            if k == masks.len() {
                break 'outer;
            }
            masks[k] += 1;
            if masks[k] < sizes[k] {
                break;
            }
            masks[k] = 0;
            k += 1;
        }
    }
    let [reject, accept] = best;
    let take_accept = match (accept, reject) {
        (Some(a), Some(r)) => a > r + EPS,
        (Some(_), None) => true,
        _ => false,
    };
    Monolithic { value: if take_accept { accept } else { reject }, accept: take_accept }
}

/// Optimal policy value over independent arrival slots by backward induction;
/// the terminal value is minus the cheapest route cost of the accepted set.
pub fn bellman_value(network: &Network, slots: &[Vec<(f64, Option<Request>)>]) -> f64 {
    fn go(network: &Network, slots: &[Vec<(f64, Option<Request>)>], accepted: &mut Vec<Request>) -> f64 {
        let Some((slot, rest)) = slots.split_first() else {
            return -brute_route(network, accepted).expect("accepted set stays feasible").total_cost;
        };
        slot.iter()
            .map(|(p, req)| {
                let v = match req {
                    None => go(network, rest, accepted),
                    Some(r) => {
                        let reject = go(network, rest, accepted);
                        accepted.push(r.clone());
                        let accept = brute_feasible(network, accepted).then(|| r.utility + go(network, rest, accepted));
                        accepted.pop();
                        accept.map_or(reject, |a| a.max(reject))
                    }
                };
                p * v
            })
            .sum()
    }
    go(network, slots, &mut Vec::new())
}

/// Shape limits for [`micro_instance`].
#[derive(Clone, Copy, Debug)]
pub struct MicroSpec {
    pub max_segments: usize,
    pub max_optional: usize,
    pub max_requests: usize,
    /// Probability that a non-direct arc is left out.
    pub arc_dropout: f64,
}

impl Default for MicroSpec {
    fn default() -> Self {
        MicroSpec { max_segments: 3, max_optional: 2, max_requests: 6, arc_dropout: 0.0 }
    }
}

/// Random network with integer costs and times rounded up from planar
/// distances (so both keep the triangle inequality) and windows loose enough
/// for the direct schedule. Arc sets are complete unless `arc_dropout > 0`.
pub fn micro_network<R: Rng>(rng: &mut R, spec: &MicroSpec) -> Network {
    let n = rng.gen_range(1..=spec.max_segments);
    let mut stops = Vec::new();
    let mut compulsory = Vec::new();
    let mut optional: Vec<Vec<StopId>> = vec![Vec::new(); n + 1];
    let mut next = 0u32;
    for h in 1..=n + 1 {
        let id = StopId(next);
        next += 1;
        let x0 = (h - 1) as f64 * 500.0;
        stops.push(Stop { id, x_m: x0, y_m: 0.0, kind: StopKind::Compulsory, segment: h });
        compulsory.push(id);
        if h <= n {
            for _ in 0..rng.gen_range(0..=spec.max_optional) {
                let id = StopId(next);
                next += 1;
                let (x, y) = (x0 + rng.gen_range(0..=500) as f64, rng.gen_range(-300..=300) as f64);
                stops.push(Stop { id, x_m: x, y_m: y, kind: StopKind::Optional, segment: h });
                optional[h].push(id);
            }
        }
    }
    let dist = |a: StopId, b: StopId| {
        let (p, q) = (&stops[a.0 as usize], &stops[b.0 as usize]);
        (p.x_m - q.x_m).hypot(p.y_m - q.y_m)
    };
    let mut arcs = Vec::new();
    let mut windows = Vec::new();
    let mut a = 100.0;
    for h in 1..=n {
        let tails: Vec<StopId> = std::iter::once(compulsory[h - 1]).chain(optional[h].iter().copied()).collect();
        let heads: Vec<StopId> = optional[h].iter().copied().chain(std::iter::once(compulsory[h])).collect();
        for &i in &tails {
            for &j in &heads {
                let direct = i == compulsory[h - 1] && j == compulsory[h];
                if i == j || (!direct && spec.arc_dropout > 0.0 && rng.gen_bool(spec.arc_dropout)) {
                    continue;
                }
                let d = dist(i, j);
                arcs.push(Arc { from: i, to: j, cost: (d / 40.0).ceil().max(1.0), time_s: (d / 10.0).ceil() + 5.0 });
            }
        }
        let direct_time = (dist(compulsory[h - 1], compulsory[h]) / 10.0).ceil() + 5.0;
        windows.push(Window { h, a_s: a, b_s: a + f64::from(rng.gen_range(0..=40)) });
        a += direct_time + f64::from(rng.gen_range(0..=80));
    }
    windows.push(Window { h: n + 1, a_s: a, b_s: a + f64::from(rng.gen_range(0..=40)) });
    Network::new(stops, arcs, windows)
}

/// A request whose pickup stops all precede its dropoff stops in segment
/// order, with ids and times supplied by the caller.
pub fn micro_request<R: Rng>(rng: &mut R, network: &Network, id: RequestId, time_s: f64, max_utility: u32) -> Request {
    let n = network.n_segments();
    let split = rng.gen_range(2..=n + 1);
    let before: Vec<StopId> = (1..split)
        .flat_map(|h| std::iter::once(network.compulsory(h)).chain(network.optional(h).iter().copied()))
        .collect();
    let after: Vec<StopId> = (split..=n + 1)
        .flat_map(|h| std::iter::once(network.compulsory(h)).chain(if h <= n { network.optional(h).to_vec() } else { vec![] }))
        .collect();
    let pick = |rng: &mut R, pool: &[StopId]| -> BTreeSet<StopId> {
        // Lean towards optional stops so routing matters.
        let opt: Vec<StopId> = pool.iter().copied().filter(|&s| !network.is_compulsory(s)).collect();
        let src = if !opt.is_empty() && rng.gen_bool(0.7) { opt } else { pool.to_vec() };
        let k = rng.gen_range(1..=src.len().min(2));
        src.choose_multiple(rng, k).copied().collect()
    };
    Request {
        id,
        pickup: pick(rng, &before),
        dropoff: pick(rng, &after),
        utility: f64::from(rng.gen_range(1..=max_utility)),
        request_time_s: time_s,
    }
}

/// Random validated-by-construction instance within `spec`.
pub fn micro_instance<R: Rng>(rng: &mut R, spec: &MicroSpec) -> Instance {
    let network = micro_network(rng, spec);
    let count = rng.gen_range(0..=spec.max_requests);
    let requests = (0..count).map(|i| micro_request(rng, &network, RequestId(i as u32), 5.0 * i as f64, 40)).collect();
    Instance { network, requests, horizon_end_s: 50.0 }
}

/// A decision state over a micro network plus scenarios: an accepted set that
/// the brute-force router can serve, a pending request, and up to
/// `max_scenarios` scenarios of at most `max_per_scenario` requests each.
pub fn micro_state<R: Rng>(
    rng: &mut R,
    spec: &MicroSpec,
    max_scenarios: usize,
    max_per_scenario: usize,
) -> (Network, SystemState, ScenarioSet) {
    let network = micro_network(rng, spec);
    let mut accepted = Vec::new();
    let n_acc = rng.gen_range(0..max_per_scenario.saturating_sub(1).max(1));
    for i in 0..n_acc {
        let r = micro_request(rng, &network, RequestId(i as u32), i as f64, 40);
        accepted.push(r);
        if !brute_feasible(&network, &accepted) {
            accepted.pop();
        }
    }
    let pending = micro_request(rng, &network, RequestId(10), 10.0, 40);
    let state = SystemState { accepted, pending, decision_index: 0 };
    let k = rng.gen_range(1..=max_scenarios);
    let room = max_per_scenario - state.accepted.len() - 1;
    let mut weights: Vec<f64> = (0..k).map(|_| f64::from(rng.gen_range(1..=4))).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let scenarios = weights
        .into_iter()
        .enumerate()
        .map(|(s, probability)| {
            let mut requests = state.accepted.clone();
            requests.push(state.pending.clone());
            for j in 0..rng.gen_range(0..=room) {
                requests.push(micro_request(rng, &network, RequestId(100 + 10 * s as u32 + j as u32), 20.0 + j as f64, 40));
            }
            Scenario { requests, probability }
        })
        .collect();
    (network, state, ScenarioSet { scenarios })
}

/// Decisions of the myopic rule replayed by enumeration: a request is accepted
/// when the best acceptance set over the accepted ones plus it, with the
/// accepted ones kept and ties going to rejection, contains it. Returns the
/// decisions and the final profit.
pub fn brute_myopic_episode(network: &Network, requests: &[Request]) -> (Vec<bool>, f64) {
    let mut accepted: Vec<Request> = Vec::new();
    let mut decisions = Vec::new();
    for r in requests {
        let mut trial = accepted.clone();
        trial.push(r.clone());
        let accept = brute_feasible(network, &trial) && {
            let fixed: BTreeMap<RequestId, bool> = accepted.iter().map(|q| (q.id, true)).collect();
            brute_full_info_with(network, &trial, &fixed, Some(r.id)).is_some_and(|b| b.accepted.contains(&r.id))
        };
        if accept {
            accepted.push(r.clone());
        }
        decisions.push(accept);
    }
    let utility: f64 = accepted.iter().map(|q| q.utility).sum();
    let cost = brute_route(network, &accepted).expect("accepted set stays feasible").total_cost;
    (decisions, utility - cost)
}

/// A small arrival tree over a micro network: up to `max_slots` slots of one
/// or two requests each, sometimes with a no-arrival branch, random weights.
pub fn micro_tree<R: Rng>(rng: &mut R, spec: &MicroSpec, max_slots: usize) -> ArrivalTree {
    let network = micro_network(rng, spec);
    let slots = (0..rng.gen_range(1..=max_slots))
        .map(|i| {
            let count = rng.gen_range(1..=2);
            let mut outcomes: Vec<Option<Request>> = (0..count)
                .map(|j| Some(micro_request(rng, &network, RequestId((10 * i + j) as u32), (10 * i + j + 1) as f64, 40)))
                .collect();
            if rng.gen_bool(0.5) {
                outcomes.push(None);
            }
            let weights: Vec<f64> = outcomes.iter().map(|_| f64::from(rng.gen_range(1..=4))).collect();
            let total: f64 = weights.iter().sum();
            outcomes.into_iter().zip(weights).map(|(request, w)| Branch { probability: w / total, request }).collect()
        })
        .collect();
    ArrivalTree { network, horizon_end_s: 100.0, slots }
}

/// The tree's slots in the shape [`bellman_value`] takes.
pub fn tree_slots(tree: &ArrivalTree) -> Vec<Vec<(f64, Option<Request>)>> {
    tree.slots.iter().map(|s| s.iter().map(|b| (b.probability, b.request.clone())).collect()).collect()
}

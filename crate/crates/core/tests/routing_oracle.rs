use std::collections::BTreeMap;

use das_core::model::{Request, StopId};
use das_core::routing::{full_info_solve, is_feasible, optimal_route, segment_labels, verify_plan, EPS};
use das_oracle::{brute_full_info, brute_route, micro_instance, micro_network, segment_frontier, MicroSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn segment_labels_match_path_enumeration() {
    // Non-metric costs and missing arcs are fine here: only the candidate set matters.
    let spec = MicroSpec { max_segments: 2, max_optional: 3, max_requests: 0, arc_dropout: 0.2 };
    let mut r = rng(11);
    let mut checked = 0;
    while checked < 150 {
        let net = micro_network(&mut r, &spec);
        for h in 1..=net.n_segments() {
            let cands: Vec<StopId> = net.optional(h).to_vec();
            let mut got: BTreeMap<Vec<StopId>, Vec<(f64, f64)>> = BTreeMap::new();
            for l in segment_labels(&net, h, &cands).unwrap() {
                assert_eq!(l.segment, h);
                let mut sorted = l.order.clone();
                sorted.sort();
                assert_eq!(sorted, l.visited);
                got.entry(l.visited.clone()).or_default().push((l.cost, l.duration));
            }
            for v in got.values_mut() {
                v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            }
            assert_eq!(got, segment_frontier(&net, h, &cands), "segment {h}");
            checked += 1;
        }
    }
}

#[test]
fn optimal_route_matches_route_enumeration() {
    let spec = MicroSpec { max_segments: 3, max_optional: 2, max_requests: 4, arc_dropout: 0.0 };
    let mut r = rng(12);
    let (mut feasible, mut infeasible) = (0, 0);
    for _ in 0..300 {
        let inst = micro_instance(&mut r, &spec);
        let want = brute_route(&inst.network, &inst.requests);
        let got = optimal_route(&inst.network, &inst.requests);
        assert_eq!(is_feasible(&inst.network, &inst.requests), want.is_some());
        match (got, want) {
            (Ok(g), Some(w)) => {
                feasible += 1;
                assert!((g.total_cost - w.total_cost).abs() <= EPS, "{} vs {}", g.total_cost, w.total_cost);
                assert!(verify_plan(&inst.network, &g, &inst.requests).is_empty());
            }
            (Err(_), None) => infeasible += 1,
            (g, w) => panic!("solver {g:?} vs oracle {w:?}"),
        }
    }
    assert!(feasible > 50 && infeasible > 10, "{feasible} feasible, {infeasible} infeasible");
}

#[test]
fn full_info_solve_matches_acceptance_enumeration() {
    let mut r = rng(13);
    for _ in 0..100 {
        let inst = micro_instance(&mut r, &MicroSpec::default());
        let got = full_info_solve(&inst.network, &inst.requests).unwrap();
        let want = brute_full_info(&inst.network, &inst.requests);
        assert!((got.objective - want.objective).abs() <= EPS);
        assert_eq!(got.accepted, want.accepted);
        let accepted: Vec<Request> = inst.requests.iter().filter(|q| got.accepted.contains(&q.id)).cloned().collect();
        assert!(verify_plan(&inst.network, &got.route, &accepted).is_empty());
        let utility: f64 = accepted.iter().map(|q| q.utility).sum();
        assert!((utility - got.route.total_cost - got.objective).abs() <= EPS);
    }
}

#[test]
fn removing_a_request_never_raises_route_cost() {
    let mut r = rng(14);
    let mut compared = 0;
    while compared < 200 {
        let inst = micro_instance(&mut r, &MicroSpec::default());
        let Ok(full) = optimal_route(&inst.network, &inst.requests) else { continue };
        if inst.requests.is_empty() {
            continue;
        }
        let drop = r.gen_range(0..inst.requests.len());
        let mut fewer = inst.requests.clone();
        fewer.remove(drop);
        let less = optimal_route(&inst.network, &fewer).unwrap();
        assert!(less.total_cost <= full.total_cost + EPS);
        compared += 1;
    }
}

#[test]
fn full_information_beats_greedy_sequence() {
    let mut r = rng(15);
    for _ in 0..100 {
        let inst = micro_instance(&mut r, &MicroSpec::default());
        let mut accepted: Vec<Request> = Vec::new();
        let mut cost = inst.network.direct_cost();
        for q in &inst.requests {
            accepted.push(q.clone());
            match optimal_route(&inst.network, &accepted) {
                Ok(p) if q.utility > p.total_cost - cost + EPS => cost = p.total_cost,
                _ => {
                    accepted.pop();
                }
            }
        }
        let greedy = accepted.iter().map(|q| q.utility).sum::<f64>() - cost;
        let best = full_info_solve(&inst.network, &inst.requests).unwrap().objective;
        assert!(best >= greedy - EPS);
    }
}

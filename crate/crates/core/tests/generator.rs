use das_core::gen::{
    build_scenarios, generate_instance, sample_future, sample_requests, GenConfig, Generated, FUTURE_ID_BASE,
};
use das_core::model::{save_instance, validate, SystemState};
use das_core::policies::PROBABILITY_TOL;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn generated(seed: u64, csf: f64, walk: f64) -> Generated {
    generate_instance(&GenConfig { seed, csf, walk_radius_m: walk, ..GenConfig::default() }).unwrap()
}

#[test]
fn thousand_seeds_validate_clean() {
    for seed in 0..1000 {
        let csf = [0.2, 0.4, 0.6, 0.8, 1.0][seed as usize % 5];
        let walk = [100.0, 150.0, 250.0, 300.0, 350.0, 400.0][seed as usize % 6];
        let g = generated(seed, csf, walk);
        assert!(validate(&g.instance).is_empty(), "seed {seed}");
        assert_eq!(g.report.requests.emitted, g.instance.requests.len());
        assert_eq!(g.report.requests.sampled, g.report.requests.emitted + g.report.requests.dropped());
    }
}

#[test]
fn compulsory_count_grows_with_csf() {
    for seed in 0..50 {
        let mut last = 0;
        for step in 1..=20 {
            let g = generated(seed, step as f64 / 20.0, 250.0);
            assert!(g.report.compulsory_stops >= last);
            last = g.report.compulsory_stops;
        }
        assert_eq!(last, GenConfig::default().line_stops);
    }
}

#[test]
fn half_csf_keeps_the_busiest_stops() {
    for seed in 0..40 {
        let g = generated(seed, 0.5, 250.0);
        let volumes = g.demand.line.volumes();
        let m = volumes.len();
        let k = (0.5 * (m - 2) as f64).ceil() as usize;
        let mut interior: Vec<usize> = (1..m - 1).collect();
        // Stable sort keeps line order among equal volumes.
        interior.sort_by(|&a, &b| volumes[b].partial_cmp(&volumes[a]).unwrap());
        let mut want = vec![0, m - 1];
        want.extend_from_slice(&interior[..k]);
        want.sort_unstable();
        assert_eq!(g.report.network.compulsory_line_stops, want);
        let chain = g.instance.network.compulsory_chain();
        assert_eq!(chain.len(), want.len());
        for (&id, &i) in chain.iter().zip(&want) {
            let s = g.instance.network.stop(id).unwrap();
            let p = g.demand.line.stops[i].at;
            assert!((s.x_m - p.x_m).abs() < 1e-9 && (s.y_m - p.y_m).abs() < 1e-9);
        }
    }
}

#[test]
fn zero_walk_radius_drops_everything() {
    for seed in 0..20 {
        let g = generated(seed, 0.6, 0.0);
        assert!(g.instance.requests.is_empty());
        assert_eq!(g.report.requests.dropped(), g.report.requests.sampled);
    }
}

#[test]
fn drop_rate_falls_with_walk_radius() {
    let walks = [100.0, 150.0, 250.0, 300.0, 350.0, 400.0];
    let mut dropped = [0usize; 6];
    for seed in 0..120 {
        let mut last: Option<(usize, usize)> = None;
        for (i, &w) in walks.iter().enumerate() {
            let r = generated(seed, 0.4, w).report.requests;
            dropped[i] += r.dropped();
            // Matched seeds sample the same trips, and a wider radius only adds stops.
            if let Some((sampled, d)) = last {
                assert_eq!(r.sampled, sampled);
                assert!(r.dropped() <= d, "seed {seed} walk {w}");
            }
            last = Some((r.sampled, r.dropped()));
        }
    }
    // Past the disc radius only order-infeasible trips remain, so the tail may plateau.
    assert!(dropped[0] > dropped[1] && dropped[1] > dropped[2] && dropped[2] > dropped[3], "{dropped:?}");
    assert!(dropped[5] * 100 < dropped[0], "{dropped:?}");
}

#[test]
fn same_seed_same_bytes() {
    for seed in [0, 7, 12345] {
        let a = save_instance(&generated(seed, 0.4, 250.0).instance);
        let b = save_instance(&generated(seed, 0.4, 250.0).instance);
        assert_eq!(a, b);
    }
}

#[test]
fn future_from_the_start_is_a_fresh_sample() {
    let g = generated(3, 0.4, 300.0);
    for s in 0..20 {
        let future = sample_future(&g.instance, &g.demand, -1.0, &mut ChaCha8Rng::seed_from_u64(s));
        let (fresh, _) = sample_requests(
            &g.demand.line,
            &g.demand.od,
            &g.instance.network,
            &g.demand.config,
            &mut ChaCha8Rng::seed_from_u64(s),
        );
        assert_eq!(future.len(), fresh.len());
        for (f, r) in future.iter().zip(&fresh) {
            assert_eq!(f.id.0, FUTURE_ID_BASE + r.id.0);
            assert_eq!((&f.pickup, &f.dropoff, f.utility, f.request_time_s), (&r.pickup, &r.dropoff, r.utility, r.request_time_s));
        }
    }
}

#[test]
fn little_future_is_left_near_the_horizon() {
    let g = generated(4, 0.4, 400.0);
    let horizon = g.instance.horizon_end_s;
    let mean = |after: f64| {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        (0..300).map(|_| sample_future(&g.instance, &g.demand, after, &mut rng).len()).sum::<usize>() as f64 / 300.0
    };
    let full = mean(-1.0);
    assert!(full > 1.0);
    assert!(mean(0.97 * horizon) < 0.1 * full);
    let future = sample_future(&g.instance, &g.demand, 0.5 * horizon, &mut ChaCha8Rng::seed_from_u64(5));
    assert!(future.iter().all(|r| r.request_time_s > 0.5 * horizon && r.request_time_s < horizon));
    assert_eq!(future, sample_future(&g.instance, &g.demand, 0.5 * horizon, &mut ChaCha8Rng::seed_from_u64(5)));
}

#[test]
fn scenario_sets_hold_their_invariants() {
    let mut builds = 0;
    for seed in 0..40 {
        let g = generated(seed, 0.4, 350.0);
        let reqs = &g.instance.requests;
        for i in (0..reqs.len()).step_by(3) {
            let state = SystemState { accepted: reqs[..i].iter().step_by(4).cloned().collect(), pending: reqs[i].clone(), decision_index: i };
            let k = 1 + (i % 7);
            let set = build_scenarios(&state, &g.instance, &g.demand, k, seed);
            assert_eq!(set.len(), k);
            assert!((set.total_probability() - 1.0).abs() <= PROBABILITY_TOL);
            set.check(&state).unwrap();
            for sc in &set.scenarios {
                assert!((sc.probability - 1.0 / k as f64).abs() <= 1e-12);
                let known = state.accepted.len() + 1;
                assert_eq!(&sc.requests[..known - 1], &state.accepted[..]);
                assert_eq!(sc.requests[known - 1], state.pending);
                for f in &sc.requests[known..] {
                    assert!(f.id.0 >= FUTURE_ID_BASE);
                    assert!(f.request_time_s > state.pending.request_time_s);
                }
            }
            assert_eq!(set, build_scenarios(&state, &g.instance, &g.demand, k, seed));
            builds += 1;
        }
    }
    assert!(builds >= 100, "{builds} builds");
}

#[test]
fn single_scenario_has_all_the_mass() {
    let g = generated(8, 0.6, 250.0);
    let pending = g.instance.requests[0].clone();
    let state = SystemState { accepted: Vec::new(), pending, decision_index: 0 };
    let set = build_scenarios(&state, &g.instance, &g.demand, 1, 8);
    assert_eq!(set.len(), 1);
    assert_eq!(set.scenarios[0].probability, 1.0);
}

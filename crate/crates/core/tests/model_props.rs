use das_core::gen::{generate_instance, GenConfig};
use das_core::model::{load_instance, save_instance, validate, Instance, Network, Window};
use das_core::routing::optimal_route;
use das_oracle::{micro_instance, micro_network, MicroSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_instances_roundtrip(seed in 0u64..10_000, csf in 0.05f64..=1.0, walk in 50f64..500.0) {
        let g = generate_instance(&GenConfig { seed, csf, walk_radius_m: walk, ..GenConfig::default() }).unwrap();
        let bytes = save_instance(&g.instance);
        let back = load_instance(&bytes).unwrap();
        prop_assert_eq!(&back, &g.instance);
        prop_assert_eq!(save_instance(&back), bytes);
    }

    #[test]
    fn micro_instances_roundtrip(seed in any::<u64>()) {
        let inst = micro_instance(&mut ChaCha8Rng::seed_from_u64(seed), &MicroSpec::default());
        prop_assert_eq!(load_instance(&save_instance(&inst)).unwrap(), inst);
    }
}

/// Windows jittered so that some chains can no longer be driven in time.
fn jitter_windows<R: Rng>(rng: &mut R, net: &Network) -> Network {
    let windows: Vec<Window> = net
        .windows()
        .iter()
        .map(|w| {
            let shift = f64::from(rng.gen_range(-60..=20));
            let width = f64::from(rng.gen_range(0..=30));
            Window { h: w.h, a_s: w.a_s + shift, b_s: w.a_s + shift + width }
        })
        .collect();
    Network::new(net.stops().to_vec(), net.arcs().to_vec(), windows)
}

#[test]
fn validation_agrees_with_empty_route_feasibility() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let (mut ok, mut bad) = (0, 0);
    for _ in 0..500 {
        let base = micro_network(&mut rng, &MicroSpec::default());
        let network = jitter_windows(&mut rng, &base);
        let inst = Instance { network, requests: Vec::new(), horizon_end_s: 0.0 };
        let valid = validate(&inst).is_empty();
        assert_eq!(valid, optimal_route(&inst.network, &[]).is_ok(), "{}", validate(&inst));
        if valid {
            ok += 1;
        } else {
            bad += 1;
        }
    }
    assert!(ok > 50 && bad > 50, "{ok} valid, {bad} invalid");
}

#[test]
fn empty_route_follows_the_chain_schedule() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..100 {
        let net = micro_network(&mut rng, &MicroSpec::default());
        let plan = optimal_route(&net, &[]).unwrap();
        assert_eq!(plan.total_cost, net.direct_cost());
        assert_eq!(plan.departure_times, net.direct_schedule().unwrap());
        let mut t = net.window(1).unwrap().a_s;
        for h in 1..=net.n_segments() {
            let arc = net.arc(net.compulsory(h), net.compulsory(h + 1)).unwrap();
            t = (t + arc.time_s).max(net.window(h + 1).unwrap().a_s);
            assert_eq!(plan.departure_times[h], t);
        }
    }
}

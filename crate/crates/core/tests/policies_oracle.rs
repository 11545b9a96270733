use std::collections::BTreeMap;

use das_core::model::Request;
use das_core::policies::{
    decide_2ssp, decide_consensus, decide_myopic, degenerate_scenario, q_sigma, Decision, ScenarioSet, Value,
};
use das_core::routing::{is_feasible, EPS};
use das_oracle::{brute_full_info_with, brute_monolithic, brute_q, micro_state, MicroSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn spec() -> MicroSpec {
    MicroSpec { max_segments: 3, max_optional: 2, max_requests: 0, arc_dropout: 0.0 }
}

fn as_option(v: Value) -> Option<f64> {
    v.finite()
}

fn accepted_plus_pending(state: &das_core::model::SystemState) -> Vec<Request> {
    let mut v = state.accepted.clone();
    v.push(state.pending.clone());
    v
}

#[test]
fn q_sigma_matches_pinned_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let (net, state, set) = micro_state(&mut rng, &spec(), 3, 4);
        for sc in &set.scenarios {
            for (d, accept) in [(Decision::Accept, true), (Decision::Reject, false)] {
                let got = as_option(q_sigma(&net, &state, d, sc).unwrap());
                let want = brute_q(&net, &state, accept, sc);
                match (got, want) {
                    (Some(g), Some(w)) => assert!((g - w).abs() <= EPS),
                    (None, None) => {}
                    other => panic!("{other:?}"),
                }
            }
        }
    }
}

#[test]
fn decomposition_equals_joint_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..60 {
        let (net, state, set) = micro_state(&mut rng, &spec(), 3, 4);
        let joint = brute_monolithic(&net, &state, &set);
        let rec = decide_2ssp(&net, &state, &set).unwrap();
        let best = match (rec.q_accept.unwrap(), rec.q_reject.unwrap()) {
            (qa, qr) if qa.exceeds(qr) => qa,
            (_, qr) => qr,
        };
        assert!((best.finite().unwrap() - joint.value.unwrap()).abs() <= EPS);
        assert_eq!(rec.decision.is_accept(), joint.accept);
    }
}

#[test]
fn acceptance_feasibility_does_not_depend_on_the_scenario() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (mut yes, mut no) = (0, 0);
    for _ in 0..150 {
        let (net, state, set) = micro_state(&mut rng, &spec(), 3, 4);
        let alone = is_feasible(&net, &accepted_plus_pending(&state));
        for sc in &set.scenarios {
            let q = q_sigma(&net, &state, Decision::Accept, sc).unwrap();
            assert_eq!(q.is_neg_infinity(), !alone);
        }
        if alone {
            yes += 1;
        } else {
            no += 1;
        }
    }
    assert!(yes > 0 && no > 0);
}

#[test]
fn rules_reject_what_cannot_be_served() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mut seen = 0;
    while seen < 40 {
        let (net, state, set) = micro_state(&mut rng, &spec(), 3, 4);
        if is_feasible(&net, &accepted_plus_pending(&state)) {
            continue;
        }
        seen += 1;
        let two = decide_2ssp(&net, &state, &set).unwrap();
        assert_eq!(two.decision, Decision::Reject);
        assert_eq!(two.q_accept, Some(Value::NegInfinity));
        assert_eq!(decide_consensus(&net, &state, &set).unwrap().decision, Decision::Reject);
        assert_eq!(decide_myopic(&net, &state).unwrap().decision, Decision::Reject);
    }
}

#[test]
fn consensus_votes_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for _ in 0..80 {
        let (net, state, set) = micro_state(&mut rng, &spec(), 3, 4);
        let rec = decide_consensus(&net, &state, &set).unwrap();
        assert_eq!(rec.wall_times_s.len(), set.len());
        let fixed: BTreeMap<_, _> = state.accepted.iter().map(|r| (r.id, true)).collect();
        let mut mass = 0.0;
        for (sc, &vote) in set.scenarios.iter().zip(&rec.votes) {
            let best = brute_full_info_with(&net, &sc.requests, &fixed, Some(state.pending.id)).unwrap();
            assert_eq!(vote, best.accepted.contains(&state.pending.id));
            if vote {
                mass += sc.probability;
            }
        }
        assert_eq!(rec.decision.is_accept(), mass >= 0.5 - 1e-9);
    }
}

#[test]
fn degenerate_two_stage_is_myopic() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    for _ in 0..200 {
        let (net, state, _) = micro_state(&mut rng, &spec(), 1, 5);
        let one = ScenarioSet { scenarios: vec![degenerate_scenario(&state)] };
        let two = decide_2ssp(&net, &state, &one).unwrap();
        assert_eq!(two.wall_times_s.len(), 2);
        assert_eq!(two.decision, decide_myopic(&net, &state).unwrap().decision);
    }
}

#[test]
fn rescaled_probabilities_keep_decisions() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    for _ in 0..60 {
        let (net, state, set) = micro_state(&mut rng, &spec(), 3, 4);
        // Scale by 3, then renormalize: same weights up to rounding.
        let scaled: Vec<f64> = set.scenarios.iter().map(|s| s.probability * 3.0).collect();
        let total: f64 = scaled.iter().sum();
        let mut other = set.clone();
        for (s, w) in other.scenarios.iter_mut().zip(scaled) {
            s.probability = w / total;
        }
        assert_eq!(decide_2ssp(&net, &state, &set).unwrap().decision, decide_2ssp(&net, &state, &other).unwrap().decision);
        assert_eq!(
            decide_consensus(&net, &state, &set).unwrap().decision,
            decide_consensus(&net, &state, &other).unwrap().decision
        );
    }
}

//! Drives the cut loop with a small scipy-backed solver script. Skipped when
//! python3 with scipy is not installed.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::Command;

use das_core::model::{Arc, Network, Request, RequestId, Stop, StopId, StopKind, Window};
use das_core::routing::{full_info_solve, subtour_cut_loop, verify_plan, CutLoopError, DasModel, ExternalSolver};
use das_oracle::{micro_instance, MicroSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn solver() -> Option<ExternalSolver> {
    let ok = Command::new("python3")
        .args(["-c", "from scipy.optimize import milp"])
        .output()
        .is_ok_and(|o| o.status.success());
    if !ok {
        eprintln!("skipping: python3 with scipy not available");
        return None;
    }
    let script = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/milp_solver.py");
    Some(ExternalSolver { program: "python3".into(), args: vec![script.to_string_lossy().into_owned()] })
}

fn stop(id: u32, x: f64, y: f64, kind: StopKind, segment: usize) -> Stop {
    Stop { id: StopId(id), x_m: x, y_m: y, kind, segment }
}

fn arc(from: u32, to: u32, cost: f64) -> Arc {
    Arc { from: StopId(from), to: StopId(to), cost, time_s: 10.0 }
}

/// Two far optional stops next to each other: a cycle between them "covers"
/// the pickup for almost nothing, while really driving there costs 120.
fn two_cycle_network() -> Network {
    let stops = vec![
        stop(0, 0.0, 0.0, StopKind::Compulsory, 1),
        stop(1, 250.0, 2000.0, StopKind::Optional, 1),
        stop(2, 260.0, 2000.0, StopKind::Optional, 1),
        stop(3, 500.0, 0.0, StopKind::Compulsory, 2),
    ];
    let arcs = vec![
        arc(0, 1, 60.0),
        arc(0, 2, 60.0),
        arc(0, 3, 10.0),
        arc(1, 2, 1.0),
        arc(2, 1, 1.0),
        arc(1, 3, 60.0),
        arc(2, 3, 60.0),
    ];
    let windows = vec![Window { h: 1, a_s: 0.0, b_s: 0.0 }, Window { h: 2, a_s: 0.0, b_s: 1000.0 }];
    Network::new(stops, arcs, windows)
}

#[test]
fn two_cycle_needs_a_second_round() {
    let Some(solver) = solver() else { return };
    let net = two_cycle_network();
    let requests = vec![Request {
        id: RequestId(0),
        pickup: BTreeSet::from([StopId(1)]),
        dropoff: BTreeSet::from([StopId(3)]),
        utility: 50.0,
        request_time_s: 0.0,
    }];
    let dir = tempfile::tempdir().unwrap();

    let mut once = DasModel::new(&net, &requests, BTreeMap::new());
    match subtour_cut_loop(&mut once, &solver, 1, dir.path()) {
        Err(CutLoopError::MaxRounds { rounds: 1, incumbent }) => {
            assert_eq!(incumbent.subtours, vec![BTreeSet::from([StopId(1), StopId(2)])]);
        }
        other => panic!("expected a subtour after one round, got {other:?}"),
    }

    let mut model = DasModel::new(&net, &requests, BTreeMap::new());
    let out = subtour_cut_loop(&mut model, &solver, 5, dir.path()).unwrap();
    assert_eq!(out.rounds, 2);
    assert_eq!(out.cuts, vec![BTreeSet::from([StopId(1), StopId(2)])]);
    assert!(out.solution.accepted.is_empty());
    assert!((out.solution.objective + 10.0).abs() < 1e-6);
    let exact = full_info_solve(&net, &requests).unwrap();
    assert!((exact.objective - out.solution.objective).abs() < 1e-6);
}

#[test]
fn no_requests_gives_the_direct_route() {
    let Some(solver) = solver() else { return };
    let net = two_cycle_network();
    let dir = tempfile::tempdir().unwrap();
    let mut model = DasModel::new(&net, &[], BTreeMap::new());
    let out = subtour_cut_loop(&mut model, &solver, 5, dir.path()).unwrap();
    assert_eq!(out.rounds, 1);
    assert!(out.cuts.is_empty());
    assert_eq!(out.solution.route.segments, vec![Vec::<StopId>::new()]);
    assert!((out.solution.objective + net.direct_cost()).abs() < 1e-6);
}

#[test]
fn cut_loop_agrees_with_branch_and_bound() {
    let Some(solver) = solver() else { return };
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let dir = tempfile::tempdir().unwrap();
    for _ in 0..15 {
        let inst = micro_instance(&mut rng, &MicroSpec::default());
        let mut model = DasModel::new(&inst.network, &inst.requests, BTreeMap::new());
        let out = subtour_cut_loop(&mut model, &solver, 10, dir.path()).unwrap();
        let exact = full_info_solve(&inst.network, &inst.requests).unwrap();
        assert!(
            (out.solution.objective - exact.objective).abs() < 1e-6,
            "{} vs {}",
            out.solution.objective,
            exact.objective
        );
        let accepted: Vec<Request> =
            inst.requests.iter().filter(|q| out.solution.accepted.contains(&q.id)).cloned().collect();
        assert!(verify_plan(&inst.network, &out.solution.route, &accepted).is_empty());
    }
}

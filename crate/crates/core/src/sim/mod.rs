//! Rolling-horizon episodes over a request stream.
//!
//! Each arriving request opens a decision epoch. Requests that cannot be added
//! to the accepted set are rejected without consulting the policy; otherwise
//! the policy decides, fed with scenarios from a [`FutureSource`]. After the
//! last arrival the route for the accepted set is fixed at minimum cost.

mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gen::{build_scenarios, DemandModel};
use crate::model::{Instance, Request, RequestId, RoutePlan, SystemState};
use crate::policies::{decide, DecisionRecord, PolicyError, PolicyKind, ScenarioSet};
use crate::routing::{full_info_solve, optimal_route, RouteError};

pub use tree::{ArrivalTree, Branch};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error("arrival tree: {0}")]
    Tree(String),
    #[error("arrival tree needs {nodes}+ nodes, over the budget of {budget}")]
    TreeTooLarge { nodes: usize, budget: usize },
}

/// What a scenario source sees at one decision epoch.
pub struct EpochContext<'a> {
    pub instance: &'a Instance,
    pub state: &'a SystemState,
    /// Requests realized so far, the pending one last.
    pub arrivals: &'a [Request],
    pub k: usize,
    pub seed: u64,
}

/// Supplies the scenario set handed to scenario-based policies.
pub trait FutureSource: Sync {
    fn scenarios(&self, ctx: &EpochContext<'_>) -> Result<ScenarioSet, SimError>;
}

impl FutureSource for DemandModel {
    fn scenarios(&self, ctx: &EpochContext<'_>) -> Result<ScenarioSet, SimError> {
        Ok(build_scenarios(ctx.state, ctx.instance, self, ctx.k, ctx.seed))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub theta: usize,
    pub request: RequestId,
    /// Rejected without consulting the policy because it could not be served.
    pub forced: bool,
    #[serde(flatten)]
    pub record: DecisionRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub policy: PolicyKind,
    pub k_scenarios: usize,
    pub seed: u64,
    pub decisions: Vec<EpochRecord>,
    pub accepted: Vec<RequestId>,
    pub final_route: RoutePlan,
    pub utility: f64,
    pub profit: f64,
    pub served: usize,
    pub total_requests: usize,
    pub served_fraction: f64,
    pub serial_time_s: f64,
    pub parallel_time_lb_s: f64,
}

impl EpisodeResult {
    pub fn route_cost(&self) -> f64 {
        self.final_route.total_cost
    }

    /// Routing cost per served passenger; `None` when nobody is served.
    pub fn cost_per_passenger(&self) -> Option<f64> {
        (self.served > 0).then(|| self.final_route.total_cost / self.served as f64)
    }
}

/// Replays `instance.requests` in order under `policy`. Scenario policies draw
/// `k` scenarios per epoch from `source`; `seed` keys every scenario stream.
pub fn run_episode(
    instance: &Instance,
    policy: PolicyKind,
    source: &dyn FutureSource,
    k: usize,
    seed: u64,
) -> Result<EpisodeResult, SimError> {
    let net = &instance.network;
    let mut accepted: Vec<Request> = Vec::new();
    let mut decisions = Vec::with_capacity(instance.requests.len());
    let mut utility = 0.0;

    for (theta, pending) in instance.requests.iter().enumerate() {
        let mut trial = accepted.clone();
        trial.push(pending.clone());
        let feasible = match optimal_route(net, &trial) {
            Ok(_) => true,
            Err(RouteError::Infeasible) => false,
            Err(e) => return Err(e.into()),
        };
        let (record, forced) = if feasible {
            let state = SystemState { accepted: accepted.clone(), pending: pending.clone(), decision_index: theta };
            let scenarios = if policy.uses_scenarios() {
                let ctx = EpochContext { instance, state: &state, arrivals: &instance.requests[..=theta], k, seed };
                Some(source.scenarios(&ctx)?)
            } else {
                None
            };
            (decide(policy, net, &state, scenarios.as_ref())?, false)
        } else {
            (DecisionRecord::forced_reject(), true)
        };
        if record.decision.is_accept() {
            utility += pending.utility;
            accepted.push(pending.clone());
        }
        decisions.push(EpochRecord { theta, request: pending.id, forced, record });
    }

    let final_route = optimal_route(net, &accepted)?;
    let served = accepted.len();
    let total_requests = instance.requests.len();
    let serial_time_s = decisions.iter().map(|d| d.record.serial_time_s()).sum();
    let parallel_time_lb_s = decisions.iter().map(|d| d.record.max_time_s()).sum();
    let mut accepted_ids: Vec<RequestId> = accepted.iter().map(|r| r.id).collect();
    accepted_ids.sort();
    Ok(EpisodeResult {
        policy,
        k_scenarios: k,
        seed,
        decisions,
        accepted: accepted_ids,
        profit: utility - final_route.total_cost,
        final_route,
        utility,
        served,
        total_requests,
        served_fraction: if total_requests == 0 { 0.0 } else { served as f64 / total_requests as f64 },
        serial_time_s,
        parallel_time_lb_s,
    })
}

/// Optimal profit with every request of the stream known upfront.
pub fn full_info_bound(instance: &Instance) -> Result<f64, RouteError> {
    Ok(full_info_solve(&instance.network, &instance.requests)?.objective)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Gap {
    /// `1 - policy / bound` for a positive bound.
    Relative(f64),
    /// `bound - policy`, reported when the bound is not positive.
    AbsoluteFlagged(f64),
}

impl Gap {
    pub fn value(self) -> f64 {
        match self {
            Gap::Relative(v) | Gap::AbsoluteFlagged(v) => v,
        }
    }

    pub fn is_flagged(self) -> bool {
        matches!(self, Gap::AbsoluteFlagged(_))
    }
}

pub fn optimality_gap(policy_value: f64, bound_value: f64) -> Gap {
    if bound_value > 0.0 {
        Gap::Relative(1.0 - policy_value / bound_value)
    } else {
        Gap::AbsoluteFlagged(bound_value - policy_value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_formula_and_flag() {
        assert_eq!(optimality_gap(100.0, 100.0), Gap::Relative(0.0));
        assert!((optimality_gap(90.0, 100.0).value() - 0.10).abs() < 1e-12);
        assert_eq!(optimality_gap(-50.0, -20.0), Gap::AbsoluteFlagged(30.0));
        assert_eq!(serde_json::to_string(&Gap::Relative(0.5)).unwrap(), r#"{"kind":"relative","value":0.5}"#);
    }
}

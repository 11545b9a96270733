use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::{EpochContext, FutureSource, SimError};
use crate::model::{Instance, Network, Request};
use crate::policies::{Scenario, ScenarioSet, PROBABILITY_TOL};
use crate::routing::{is_feasible, optimal_route};

/// One outcome of an arrival slot: a request, or no arrival.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub probability: f64,
    pub request: Option<Request>,
}

/// Exhaustive arrival model: independent slots in time order, each resolving
/// to one of its branches. Every root-to-leaf path is one realized stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalTree {
    pub network: Network,
    pub horizon_end_s: f64,
    pub slots: Vec<Vec<Branch>>,
}

impl ArrivalTree {
    /// Branch probabilities sum to one per slot, request ids are unique and
    /// every request of a slot arrives after all requests of earlier slots.
    pub fn check(&self) -> Result<(), SimError> {
        let mut ids = HashSet::new();
        let mut latest = f64::NEG_INFINITY;
        for (i, slot) in self.slots.iter().enumerate() {
            let sum: f64 = slot.iter().map(|b| b.probability).sum();
            if slot.is_empty() || (sum - 1.0).abs() > PROBABILITY_TOL || slot.iter().any(|b| !(b.probability > 0.0)) {
                return Err(SimError::Tree(format!("slot {i} probabilities do not form a distribution")));
            }
            let mut slot_latest = latest;
            for r in slot.iter().filter_map(|b| b.request.as_ref()) {
                if !ids.insert(r.id) {
                    return Err(SimError::Tree(format!("request id {} appears twice", r.id)));
                }
                if !(r.request_time_s > latest) {
                    return Err(SimError::Tree(format!("request {} of slot {i} does not follow earlier slots", r.id)));
                }
                slot_latest = slot_latest.max(r.request_time_s);
            }
            latest = slot_latest;
        }
        Ok(())
    }

    fn paths_from(&self, slot: usize) -> Vec<(f64, Vec<Request>)> {
        let mut paths = vec![(1.0, Vec::new())];
        for branches in &self.slots[slot..] {
            let mut next = Vec::with_capacity(paths.len() * branches.len());
            for (p, reqs) in &paths {
                for b in branches {
                    let mut r: Vec<Request> = reqs.clone();
                    r.extend(b.request.clone());
                    next.push((p * b.probability, r));
                }
            }
            paths = next;
        }
        paths
    }

    /// Every realized stream with its probability, in branch order.
    pub fn leaves(&self) -> Vec<(f64, Vec<Request>)> {
        self.paths_from(0)
    }

    pub fn instance(&self, requests: Vec<Request>) -> Instance {
        Instance { network: self.network.clone(), requests, horizon_end_s: self.horizon_end_s }
    }

    /// `Σ p · f(instance)` over all leaves, in leaf order.
    pub fn expectation<E>(&self, mut f: impl FnMut(&Instance) -> Result<f64, E>) -> Result<f64, E> {
        let mut acc = 0.0;
        for (p, reqs) in self.leaves() {
            acc += p * f(&self.instance(reqs))?;
        }
        Ok(acc)
    }

    fn slot_of(&self, request: &Request) -> Option<usize> {
        self.slots.iter().position(|s| s.iter().any(|b| b.request.as_ref().is_some_and(|r| r.id == request.id)))
    }

    /// Optimal policy value by backward induction over the tree. Refuses when
    /// the recursion would visit more than `node_budget` nodes.
    pub fn brute_force_policy_value(&self, node_budget: usize) -> Result<f64, SimError> {
        self.check()?;
        let nodes: usize = (0..=self.slots.len()).map(|d| self.slots[..d].iter().map(Vec::len).product::<usize>()).sum();
        if nodes > node_budget {
            return Err(SimError::TreeTooLarge { nodes, budget: node_budget });
        }
        let mut accepted = Vec::new();
        self.value(0, &mut accepted)
    }

    fn value(&self, slot: usize, accepted: &mut Vec<Request>) -> Result<f64, SimError> {
        if slot == self.slots.len() {
            return Ok(-optimal_route(&self.network, accepted)?.total_cost);
        }
        let mut expected = 0.0;
        for b in &self.slots[slot] {
            let v = match &b.request {
                None => self.value(slot + 1, accepted)?,
                Some(r) => {
                    let reject = self.value(slot + 1, accepted)?;
                    accepted.push(r.clone());
                    let accept = if is_feasible(&self.network, accepted) {
                        Some(r.utility + self.value(slot + 1, accepted)?)
                    } else {
                        None
                    };
                    accepted.pop();
                    accept.map_or(reject, |a| a.max(reject))
                }
            };
            expected += b.probability * v;
        }
        Ok(expected)
    }
}

/// Exact conditional scenarios: every completion of the slots after the
/// pending request's slot, with its probability.
impl FutureSource for ArrivalTree {
    fn scenarios(&self, ctx: &EpochContext<'_>) -> Result<ScenarioSet, SimError> {
        let slot = self
            .slot_of(&ctx.state.pending)
            .ok_or_else(|| SimError::Tree(format!("pending request {} is not in the tree", ctx.state.pending.id)))?;
        let scenarios = self
            .paths_from(slot + 1)
            .into_iter()
            .map(|(probability, future)| {
                let mut requests = ctx.state.accepted.clone();
                requests.push(ctx.state.pending.clone());
                requests.extend(future);
                Scenario { requests, probability }
            })
            .collect();
        Ok(ScenarioSet { scenarios })
    }
}

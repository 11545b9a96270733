//! Online accept/reject rules for the pending request of a [`SystemState`].
//!
//! All three rules reduce to full-information solves over scenarios in which
//! the already accepted requests are pinned: the two-stage rule compares the
//! expected value of accepting against rejecting, the consensus rule takes a
//! probability-weighted vote over unpinned solves, and the myopic rule solves
//! the single scenario without future requests.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::model::{Network, Request, RequestId, SystemState};
use crate::routing::{full_info_solve_with, RouteError, SolveOptions, EPS};

/// Tolerance on the total probability of a scenario set.
pub const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
}

impl Decision {
    pub fn is_accept(self) -> bool {
        self == Decision::Accept
    }
}

/// Second-stage value; `NegInfinity` marks an infeasible fixing and absorbs
/// every sum it takes part in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    NegInfinity,
    Finite(f64),
}

impl Value {
    pub fn finite(self) -> Option<f64> {
        match self {
            Value::Finite(v) => Some(v),
            Value::NegInfinity => None,
        }
    }

    pub fn is_neg_infinity(self) -> bool {
        self == Value::NegInfinity
    }

    /// Strictly greater by more than [`EPS`].
    pub fn exceeds(self, other: Value) -> bool {
        match (self, other) {
            (Value::NegInfinity, _) => false,
            (Value::Finite(_), Value::NegInfinity) => true,
            (Value::Finite(a), Value::Finite(b)) => a > b + EPS,
        }
    }

    /// `Σ w·v` in the given order, short-circuiting on `NegInfinity`.
    pub fn weighted_sum(terms: impl IntoIterator<Item = (f64, Value)>) -> Value {
        let mut acc = 0.0;
        for (w, v) in terms {
            match v {
                Value::NegInfinity => return Value::NegInfinity,
                Value::Finite(x) => acc += w * x,
            }
        }
        Value::Finite(acc)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::NegInfinity => f.write_str("-inf"),
            Value::Finite(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::NegInfinity => s.serialize_str("-inf"),
            Value::Finite(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(Value::Finite(v)),
            Repr::Text(t) if t == "-inf" => Ok(Value::NegInfinity),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"-inf\", got {t:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// Accepted requests, the pending request and sampled future requests.
    pub requests: Vec<Request>,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub scenarios: Vec<Scenario>,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum PolicyError {
    #[error("scenario set is empty")]
    NoScenarios,
    #[error("scenario {index} has probability {probability} outside (0, 1]")]
    BadProbability { index: usize, probability: f64 },
    #[error("scenario probabilities sum to {sum}, not 1")]
    ProbabilitySum { sum: f64 },
    #[error("scenario {index} lacks accepted request {request}")]
    MissingAccepted { index: usize, request: RequestId },
    #[error("scenario {index} lacks the pending request {request}")]
    MissingPending { index: usize, request: RequestId },
    #[error("scenario {index}: future request {request} does not arrive after the pending request")]
    FutureNotLater { index: usize, request: RequestId },
    #[error("scenario {index} lists request {request} twice")]
    DuplicateRequest { index: usize, request: RequestId },
    #[error(transparent)]
    Route(#[from] RouteError),
}

impl ScenarioSet {
    /// Equal probability `1/k` for each of the `k` request sets.
    pub fn uniform(request_sets: Vec<Vec<Request>>) -> Self {
        let p = 1.0 / request_sets.len() as f64;
        ScenarioSet { scenarios: request_sets.into_iter().map(|requests| Scenario { requests, probability: p }).collect() }
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.scenarios.iter().map(|s| s.probability).sum()
    }

    /// Checks probabilities and that every scenario extends the state.
    pub fn check(&self, state: &SystemState) -> Result<(), PolicyError> {
        if self.scenarios.is_empty() {
            return Err(PolicyError::NoScenarios);
        }
        for (index, sc) in self.scenarios.iter().enumerate() {
            if !(sc.probability > 0.0 && sc.probability <= 1.0 + PROBABILITY_TOL) {
                return Err(PolicyError::BadProbability { index, probability: sc.probability });
            }
            let mut by_id: BTreeMap<RequestId, &Request> = BTreeMap::new();
            for r in &sc.requests {
                if by_id.insert(r.id, r).is_some() {
                    return Err(PolicyError::DuplicateRequest { index, request: r.id });
                }
            }
            for a in &state.accepted {
                if by_id.remove(&a.id).is_none() {
                    return Err(PolicyError::MissingAccepted { index, request: a.id });
                }
            }
            if by_id.remove(&state.pending.id).is_none() {
                return Err(PolicyError::MissingPending { index, request: state.pending.id });
            }
            for (id, r) in by_id {
                if !(r.request_time_s > state.pending.request_time_s) {
                    return Err(PolicyError::FutureNotLater { index, request: id });
                }
            }
        }
        let sum = self.total_probability();
        if (sum - 1.0).abs() > PROBABILITY_TOL {
            return Err(PolicyError::ProbabilitySum { sum });
        }
        Ok(())
    }
}

/// Outcome of one decision epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub decision: Decision,
    /// Expected value with the pending request accepted (two-stage rule only).
    pub q_accept: Option<Value>,
    pub q_reject: Option<Value>,
    /// Per-scenario votes for the pending request (consensus rule only).
    pub votes: Vec<bool>,
    /// Wall time of every subproblem solved, in seconds.
    pub wall_times_s: Vec<f64>,
}

impl DecisionRecord {
    /// Rejection without any solve, for pending requests that cannot be served.
    pub fn forced_reject() -> Self {
        DecisionRecord { decision: Decision::Reject, q_accept: None, q_reject: None, votes: Vec::new(), wall_times_s: Vec::new() }
    }

    pub fn serial_time_s(&self) -> f64 {
        self.wall_times_s.iter().sum()
    }

    pub fn max_time_s(&self) -> f64 {
        self.wall_times_s.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "2ssp")]
    TwoStage,
    #[serde(rename = "ha")]
    Consensus,
    #[serde(rename = "myopic")]
    Myopic,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::TwoStage, PolicyKind::Consensus, PolicyKind::Myopic];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::TwoStage => "2ssp",
            PolicyKind::Consensus => "ha",
            PolicyKind::Myopic => "myopic",
        }
    }

    pub fn uses_scenarios(self) -> bool {
        self != PolicyKind::Myopic
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("unknown policy {0:?}; expected one of 2ssp, ha, myopic")]
pub struct UnknownPolicy(pub String);

impl FromStr for PolicyKind {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "2ssp" => Ok(PolicyKind::TwoStage),
            "ha" => Ok(PolicyKind::Consensus),
            "myopic" => Ok(PolicyKind::Myopic),
            other => Err(UnknownPolicy(other.to_string())),
        }
    }
}

fn pinned(state: &SystemState) -> BTreeMap<RequestId, bool> {
    state.accepted.iter().map(|r| (r.id, true)).collect()
}

/// Optimal scenario objective with the accepted requests pinned to accepted
/// and the pending request pinned to `fixed`; `NegInfinity` when that fixing
/// cannot be routed.
pub fn q_sigma(network: &Network, state: &SystemState, fixed: Decision, scenario: &Scenario) -> Result<Value, RouteError> {
    let mut options = SolveOptions { fixed: pinned(state), prefer_reject: None };
    options.fixed.insert(state.pending.id, fixed.is_accept());
    match full_info_solve_with(network, &scenario.requests, &options) {
        Ok(sol) => Ok(Value::Finite(sol.objective)),
        Err(RouteError::Infeasible) => Ok(Value::NegInfinity),
        Err(e) => Err(e),
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

/// Two-stage stochastic rule: accept iff the probability-weighted value of
/// accepting strictly exceeds that of rejecting.
pub fn decide_2ssp(network: &Network, state: &SystemState, scenarios: &ScenarioSet) -> Result<DecisionRecord, PolicyError> {
    scenarios.check(state)?;
    let jobs: Vec<(usize, Decision)> =
        (0..scenarios.len()).flat_map(|i| [(i, Decision::Accept), (i, Decision::Reject)]).collect();
    let solved: Vec<(Result<Value, RouteError>, f64)> = jobs
        .par_iter()
        .map(|&(i, d)| timed(|| q_sigma(network, state, d, &scenarios.scenarios[i])))
        .collect();

    let mut accept = Vec::with_capacity(scenarios.len());
    let mut reject = Vec::with_capacity(scenarios.len());
    let mut wall_times_s = Vec::with_capacity(jobs.len());
    for ((i, d), (value, secs)) in jobs.iter().zip(solved) {
        let p = scenarios.scenarios[*i].probability;
        match d {
            Decision::Accept => accept.push((p, value?)),
            Decision::Reject => reject.push((p, value?)),
        }
        wall_times_s.push(secs);
    }
    let qa = Value::weighted_sum(accept);
    let qr = Value::weighted_sum(reject);
    let decision = if qa.exceeds(qr) { Decision::Accept } else { Decision::Reject };
    Ok(DecisionRecord { decision, q_accept: Some(qa), q_reject: Some(qr), votes: Vec::new(), wall_times_s })
}

/// Whether the unpinned optimum of `scenario` accepts the pending request,
/// preferring rejection among equal-objective optima.
fn vote(network: &Network, state: &SystemState, scenario: &Scenario) -> Result<bool, RouteError> {
    let options = SolveOptions { fixed: pinned(state), prefer_reject: Some(state.pending.id) };
    match full_info_solve_with(network, &scenario.requests, &options) {
        Ok(sol) => Ok(sol.accepted.binary_search(&state.pending.id).is_ok()),
        Err(RouteError::Infeasible) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Consensus rule: accept iff the probability mass of scenarios whose optimum
/// accepts the pending request is at least half the total mass.
pub fn decide_consensus(network: &Network, state: &SystemState, scenarios: &ScenarioSet) -> Result<DecisionRecord, PolicyError> {
    scenarios.check(state)?;
    let solved: Vec<(Result<bool, RouteError>, f64)> =
        scenarios.scenarios.par_iter().map(|sc| timed(|| vote(network, state, sc))).collect();
    let mut votes = Vec::with_capacity(solved.len());
    let mut wall_times_s = Vec::with_capacity(solved.len());
    for (v, secs) in solved {
        votes.push(v?);
        wall_times_s.push(secs);
    }
    let mass: f64 = scenarios.scenarios.iter().zip(&votes).filter(|(_, &v)| v).map(|(s, _)| s.probability).sum();
    let total = scenarios.total_probability();
    let decision = if mass >= total / 2.0 - PROBABILITY_TOL { Decision::Accept } else { Decision::Reject };
    Ok(DecisionRecord { decision, q_accept: None, q_reject: None, votes, wall_times_s })
}

/// The scenario holding only the accepted and pending requests.
pub fn degenerate_scenario(state: &SystemState) -> Scenario {
    let mut requests = state.accepted.clone();
    requests.push(state.pending.clone());
    Scenario { requests, probability: 1.0 }
}

/// Myopic rule: accept iff accepting strictly raises the current optimum.
pub fn decide_myopic(network: &Network, state: &SystemState) -> Result<DecisionRecord, PolicyError> {
    let scenario = degenerate_scenario(state);
    let (v, secs) = timed(|| vote(network, state, &scenario));
    let decision = if v? { Decision::Accept } else { Decision::Reject };
    Ok(DecisionRecord { decision, q_accept: None, q_reject: None, votes: Vec::new(), wall_times_s: vec![secs] })
}

/// Dispatches to the rule named by `kind`; the myopic rule ignores `scenarios`.
pub fn decide(kind: PolicyKind, network: &Network, state: &SystemState, scenarios: Option<&ScenarioSet>) -> Result<DecisionRecord, PolicyError> {
    match (kind, scenarios) {
        (PolicyKind::Myopic, _) => decide_myopic(network, state),
        (_, None) => Err(PolicyError::NoScenarios),
        (PolicyKind::TwoStage, Some(s)) => decide_2ssp(network, state, s),
        (PolicyKind::Consensus, Some(s)) => decide_consensus(network, state, s),
    }
}

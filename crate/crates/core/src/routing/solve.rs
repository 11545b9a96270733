use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::route::{dropoff_side, pickup_side, RouteContext, Side};
use super::{RouteError, EPS};
use crate::model::{Network, Request, RequestId, RoutePlan};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullInfoSolution {
    /// Accepted request ids, ascending.
    pub accepted: Vec<RequestId>,
    pub route: RoutePlan,
    /// Accepted utility minus route cost.
    pub objective: f64,
}

/// Acceptance restrictions for [`full_info_solve_with`].
#[derive(Clone, Debug, Default)]
pub struct SolveOptions {
    /// Requests pinned to accepted (`true`) or rejected (`false`).
    pub fixed: BTreeMap<RequestId, bool>,
    /// Among equal-objective optima, prefer those rejecting this request.
    pub prefer_reject: Option<RequestId>,
}

/// Profit-maximizing acceptance set and route over `requests`.
///
/// Among equal-objective optima the solution with fewer accepted requests
/// wins, then the lexicographically smaller accepted id list.
pub fn full_info_solve(network: &Network, requests: &[Request]) -> Result<FullInfoSolution, RouteError> {
    full_info_solve_with(network, requests, &SolveOptions::default())
}

/// [`full_info_solve`] under pinned decisions. Returns
/// [`RouteError::Infeasible`] when the requests pinned to accepted cannot be
/// served together.
pub fn full_info_solve_with(
    network: &Network,
    requests: &[Request],
    options: &SolveOptions,
) -> Result<FullInfoSolution, RouteError> {
    let ctx = RouteContext::new(network, requests.iter().filter(|r| options.fixed.get(&r.id) != Some(&false)))?;

    let mut pinned: Vec<&Request> = Vec::new();
    let mut open: Vec<&Request> = Vec::new();
    for r in requests {
        match options.fixed.get(&r.id) {
            Some(true) => pinned.push(r),
            Some(false) => {}
            // A request served by compulsory stops on both sides adds utility
            // at no routing cost, so every optimum accepts it.
            None if is_free(network, r) => pinned.push(r),
            None => open.push(r),
        }
    }
    let base_route = ctx.optimal_route(&pinned)?;

    // Requests infeasible next to the pinned set stay infeasible below every node.
    let mut branch: Vec<&Request> = Vec::with_capacity(open.len());
    for r in open {
        let mut trial = pinned.clone();
        trial.push(r);
        if ctx.optimal_route(&trial).is_ok() {
            branch.push(r);
        }
    }

    let mut search = Search { ctx: &ctx, prefer_reject: options.prefer_reject, best: None, order: Vec::new(), suffix: Vec::new() };
    search.seed_myopic(&pinned, &base_route, &branch);

    branch.sort_by(|a, b| b.utility.total_cmp(&a.utility).then(a.id.cmp(&b.id)));
    search.suffix = vec![0.0; branch.len() + 1];
    for i in (0..branch.len()).rev() {
        search.suffix[i] = search.suffix[i + 1] + branch[i].utility;
    }
    search.order = branch;

    let utility: f64 = pinned.iter().map(|r| r.utility).sum();
    search.dfs(0, &mut pinned.clone(), utility, base_route);

    let best = search.best.expect("the pinned acceptance set is always a candidate");
    Ok(FullInfoSolution { accepted: best.ids, route: best.route, objective: best.objective })
}

fn is_free(network: &Network, r: &Request) -> bool {
    matches!(pickup_side(network, r), Side::Free) && matches!(dropoff_side(network, r), Side::Free)
}

struct Candidate {
    objective: f64,
    prefers: bool,
    ids: Vec<RequestId>,
    route: RoutePlan,
}

impl Candidate {
    fn new(accepted: &[&Request], utility: f64, route: RoutePlan, prefer_reject: Option<RequestId>) -> Self {
        let mut ids: Vec<RequestId> = accepted.iter().map(|r| r.id).collect();
        ids.sort();
        let prefers = prefer_reject.is_some_and(|p| ids.binary_search(&p).is_ok());
        Candidate { objective: utility - route.total_cost, prefers, ids, route }
    }

    /// Tie-break key on equal objective: avoid the preferred-reject request,
    /// then fewer acceptances, then smaller id list.
    fn tie_cmp(&self, other: &Candidate) -> Ordering {
        self.prefers
            .cmp(&other.prefers)
            .then(self.ids.len().cmp(&other.ids.len()))
            .then_with(|| self.ids.cmp(&other.ids))
    }

    fn beats(&self, other: &Candidate) -> bool {
        if self.objective > other.objective + EPS {
            true
        } else if self.objective >= other.objective - EPS {
            self.tie_cmp(other) == Ordering::Less
        } else {
            false
        }
    }
}

struct Search<'c, 'a, 'r> {
    ctx: &'c RouteContext<'a>,
    prefer_reject: Option<RequestId>,
    best: Option<Candidate>,
    order: Vec<&'r Request>,
    suffix: Vec<f64>,
}

impl<'c, 'a, 'r> Search<'c, 'a, 'r> {
    fn offer(&mut self, c: Candidate) {
        if self.best.as_ref().is_none_or(|b| c.beats(b)) {
            self.best = Some(c);
        }
    }

    /// Arrival-order greedy pass: accept when it strictly raises the objective.
    fn seed_myopic(&mut self, pinned: &[&'r Request], base: &RoutePlan, branch: &[&'r Request]) {
        let mut arrival: Vec<&Request> = branch.to_vec();
        arrival.sort_by(|a, b| a.request_time_s.total_cmp(&b.request_time_s).then(a.id.cmp(&b.id)));
        let mut accepted: Vec<&Request> = pinned.to_vec();
        let mut utility: f64 = pinned.iter().map(|r| r.utility).sum();
        let mut route = base.clone();
        for r in arrival {
            accepted.push(r);
            match self.ctx.optimal_route(&accepted) {
                Ok(next) if utility + r.utility - next.total_cost > utility - route.total_cost + EPS => {
                    utility += r.utility;
                    route = next;
                }
                _ => {
                    accepted.pop();
                }
            }
        }
        let c = Candidate::new(&accepted, utility, route, self.prefer_reject);
        self.offer(c);
    }

    fn dfs(&mut self, i: usize, accepted: &mut Vec<&'r Request>, utility: f64, route: RoutePlan) {
        if let Some(best) = &self.best {
            // Bound: all remaining requests accepted at no extra routing cost.
            if utility + self.suffix[i] - route.total_cost < best.objective - EPS {
                return;
            }
        }
        if i == self.order.len() {
            let c = Candidate::new(accepted, utility, route, self.prefer_reject);
            self.offer(c);
            return;
        }
        let r = self.order[i];
        accepted.push(r);
        if let Ok(next) = self.ctx.optimal_route(accepted) {
            self.dfs(i + 1, accepted, utility + r.utility, next);
        }
        accepted.pop();
        self.dfs(i + 1, accepted, utility, route);
    }
}

//! Lazy subtour elimination around an external MIP solver.
//!
//! The solver is a subprocess invoked as `<program> <args..> <model.mps>
//! <solution.txt>`; it must write one `<variable name> <value>` pair per line
//! into the solution file. Variable names follow [`DasModel`]'s scheme.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;
use thiserror::Error;

use super::mps::{arc_var, request_var, DasModel};
use super::FullInfoSolution;
use crate::model::{RequestId, RoutePlan, StopId};

#[derive(Clone, Debug)]
pub struct ExternalSolver {
    pub program: PathBuf,
    pub args: Vec<String>,
}

/// Solver values from the last round together with the subtours found in them.
#[derive(Clone, Debug, PartialEq)]
pub struct Incumbent {
    pub values: BTreeMap<String, f64>,
    pub subtours: Vec<BTreeSet<StopId>>,
}

#[derive(Clone, Debug)]
pub struct CutLoopOutcome {
    pub solution: FullInfoSolution,
    pub rounds: usize,
    pub cuts: Vec<BTreeSet<StopId>>,
}

#[derive(Debug, Error)]
pub enum CutLoopError {
    #[error("i/o error around solver invocation: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver exited with {status}; stderr:\n{stderr}")]
    Solver { status: String, stderr: String },
    #[error("unreadable solution line {line_no}: {line:?}")]
    SolutionParse { line_no: usize, line: String },
    #[error("solution is not a route: {0}")]
    NotARoute(String),
    #[error("still {} subtour(s) after {rounds} rounds", incumbent.subtours.len())]
    MaxRounds { rounds: usize, incumbent: Box<Incumbent> },
}

/// Solves `model` repeatedly, adding a subtour cut for every cycle among
/// optional stops found in the incumbent, until the incumbent is subtour-free
/// or `max_rounds` solves have been made. `workdir` receives the model and
/// solution files.
pub fn subtour_cut_loop(
    model: &mut DasModel<'_>,
    solver: &ExternalSolver,
    max_rounds: usize,
    workdir: &Path,
) -> Result<CutLoopOutcome, CutLoopError> {
    let mut rounds = 0;
    loop {
        rounds += 1;
        let values = run_solver(model, solver, workdir, rounds)?;
        let subtours = find_subtours(model, &values);
        if subtours.is_empty() {
            let solution = decode(model, &values)?;
            return Ok(CutLoopOutcome { solution, rounds, cuts: model.cuts().to_vec() });
        }
        if rounds >= max_rounds {
            return Err(CutLoopError::MaxRounds { rounds, incumbent: Box::new(Incumbent { values, subtours }) });
        }
        for q in subtours {
            model.add_subtour_cut(q);
        }
    }
}

fn run_solver(
    model: &DasModel<'_>,
    solver: &ExternalSolver,
    workdir: &Path,
    round: usize,
) -> Result<BTreeMap<String, f64>, CutLoopError> {
    let mps_path = workdir.join(format!("round{round}.mps"));
    let sol_path = workdir.join(format!("round{round}.sol"));
    std::fs::write(&mps_path, model.to_mps())?;
    let output = Command::new(&solver.program).args(&solver.args).arg(&mps_path).arg(&sol_path).output()?;
    if !output.status.success() {
        return Err(CutLoopError::Solver {
            status: output.status.to_string(),
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        });
    }
    parse_solution(&std::fs::read_to_string(&sol_path)?)
}

pub(crate) fn parse_solution(text: &str) -> Result<BTreeMap<String, f64>, CutLoopError> {
    let mut values = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        let (Some(name), Some(value)) = (it.next(), it.next()) else {
            if line.trim().is_empty() {
                continue;
            }
            return Err(CutLoopError::SolutionParse { line_no: i + 1, line: line.into() });
        };
        let value: f64 =
            value.parse().map_err(|_| CutLoopError::SolutionParse { line_no: i + 1, line: line.into() })?;
        values.insert(name.to_string(), value);
    }
    Ok(values)
}

fn used(values: &BTreeMap<String, f64>, name: &str) -> bool {
    values.get(name).is_some_and(|&v| v > 0.5)
}

/// Strongly connected groups of optional stops joined by used arcs.
fn find_subtours(model: &DasModel<'_>, values: &BTreeMap<String, f64>) -> Vec<BTreeSet<StopId>> {
    let net = model.network();
    let mut found = Vec::new();
    for h in 1..=net.n_segments() {
        let mut g: DiGraphMap<StopId, ()> = DiGraphMap::new();
        for &a in net.optional(h) {
            for &b in net.optional(h) {
                if a != b && net.arc(a, b).is_some() && used(values, &arc_var(a, b)) {
                    g.add_edge(a, b, ());
                }
            }
        }
        for comp in tarjan_scc(&g) {
            if comp.len() >= 2 {
                found.push(comp.into_iter().collect());
            }
        }
    }
    found.sort();
    found
}

fn decode(model: &DasModel<'_>, values: &BTreeMap<String, f64>) -> Result<FullInfoSolution, CutLoopError> {
    let net = model.network();
    let mut segments = Vec::new();
    let mut total_cost = 0.0;
    let w1 = net.window(1).ok_or_else(|| CutLoopError::NotARoute("missing window 1".into()))?;
    let mut times = vec![w1.a_s];
    for h in 1..=net.n_segments() {
        let (start, end) = (net.compulsory(h), net.compulsory(h + 1));
        let mut nodes = vec![start];
        nodes.extend_from_slice(net.optional(h));
        nodes.push(end);
        let mut visits = Vec::new();
        let mut at = start;
        let mut duration = 0.0;
        while at != end {
            let next = nodes
                .iter()
                .copied()
                .find(|&b| net.arc(at, b).is_some() && used(values, &arc_var(at, b)))
                .ok_or_else(|| CutLoopError::NotARoute(format!("path in segment {h} stops at {at}")))?;
            let arc = net.arc(at, next).expect("checked above");
            total_cost += arc.cost;
            duration += arc.time_s;
            if next != end {
                if visits.contains(&next) {
                    return Err(CutLoopError::NotARoute(format!("segment {h} revisits {next}")));
                }
                visits.push(next);
            }
            at = next;
        }
        let w = net.window(h + 1).ok_or_else(|| CutLoopError::NotARoute(format!("missing window {}", h + 1)))?;
        times.push((times[h - 1] + duration).max(w.a_s));
        segments.push(visits);
    }
    let mut accepted: Vec<RequestId> =
        model.requests().iter().filter(|r| used(values, &request_var(r.id))).map(|r| r.id).collect();
    accepted.sort();
    let utility: f64 = model.requests().iter().filter(|r| accepted.contains(&r.id)).map(|r| r.utility).sum();
    let route = RoutePlan { segments, departure_times: times, total_cost };
    Ok(FullInfoSolution { accepted, route, objective: utility - total_cost })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_solution_lines() {
        let v = parse_solution("X_0_1 1\nY_3 0.9999999\n\nT_1 1000\n").unwrap();
        assert_eq!(v.len(), 3);
        assert!(used(&v, "Y_3"));
        assert!(!used(&v, "X_9_9"));
        assert!(matches!(parse_solution("X_0_1\n"), Err(CutLoopError::SolutionParse { line_no: 1, .. })));
        assert!(matches!(parse_solution("X_0_1 one\n"), Err(CutLoopError::SolutionParse { .. })));
    }
}

//! Grid sweeps: every (csf, walk, seed) instance is generated once, its bound
//! solved once, and then every (scenario count, policy) episode is run on it.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use das_core::gen::{generate_instance, GenConfig};
use das_core::policies::PolicyKind;
use das_core::sim::{full_info_bound, optimality_gap, run_episode, EpisodeResult, Gap};
use rayon::prelude::*;

use crate::config::BenchGrid;
use crate::error::{write, CliError};

pub const COLUMNS: [&str; 14] = [
    "instance_id",
    "seed",
    "policy",
    "csf",
    "walk_m",
    "k_scenarios",
    "profit",
    "served",
    "total_requests",
    "sp_pct",
    "serial_ms",
    "parallel_lb_ms",
    "gap",
    "status",
];

/// Measured outcome of one episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Measured {
    pub profit: f64,
    pub served: usize,
    pub total_requests: usize,
    pub route_cost: f64,
    pub serial_ms: f64,
    pub parallel_lb_ms: f64,
    pub gap: Gap,
}

impl Measured {
    pub fn new(e: &EpisodeResult, bound: f64) -> Self {
        Measured {
            profit: e.profit,
            served: e.served,
            total_requests: e.total_requests,
            route_cost: e.route_cost(),
            serial_ms: e.serial_time_s * 1e3,
            parallel_lb_ms: e.parallel_time_lb_s * 1e3,
            gap: optimality_gap(e.profit, bound),
        }
    }

    pub fn sp_pct(&self) -> f64 {
        if self.total_requests == 0 {
            0.0
        } else {
            100.0 * self.served as f64 / self.total_requests as f64
        }
    }

    pub fn cost_per_passenger(&self) -> Option<f64> {
        (self.served > 0).then(|| self.route_cost / self.served as f64)
    }

    pub fn status(&self) -> &'static str {
        if self.gap.is_flagged() {
            "ok_gap_absolute"
        } else {
            "ok"
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub instance_id: String,
    pub seed: u64,
    pub policy: PolicyKind,
    pub csf: f64,
    pub walk_m: f64,
    pub k: usize,
    pub outcome: Result<Measured, String>,
}

pub fn instance_id(seed: u64, csf: f64, walk: f64) -> String {
    format!("s{seed}-c{csf}-w{walk}")
}

/// All episodes of one generated instance, in (scenario count, policy) order.
fn run_instance(grid: &BenchGrid, base: &GenConfig, csf: f64, walk: f64, seed: u64) -> Vec<Row> {
    let id = instance_id(seed, csf, walk);
    let row = |policy, k, outcome| Row { instance_id: id.clone(), seed, policy, csf, walk_m: walk, k, outcome };
    let config = GenConfig { seed, csf, walk_radius_m: walk, ..base.clone() };
    let prepared = generate_instance(&config)
        .map_err(|e| format!("generate: {e}"))
        .and_then(|g| full_info_bound(&g.instance).map(|b| (g, b)).map_err(|e| format!("bound: {e}")));
    let (g, bound) = match prepared {
        Ok(v) => v,
        Err(msg) => {
            return grid
                .scenario_counts
                .iter()
                .flat_map(|&k| grid.policies.iter().map(move |&p| (k, p)))
                .map(|(k, p)| row(p, k, Err(msg.clone())))
                .collect();
        }
    };
    let episode = |p: PolicyKind, k: usize| {
        run_episode(&g.instance, p, &g.demand, k, seed).map(|e| Measured::new(&e, bound)).map_err(|e| e.to_string())
    };
    // Myopic ignores the scenario count, so it runs once per instance.
    let myopic = grid.policies.contains(&PolicyKind::Myopic).then(|| episode(PolicyKind::Myopic, 0));
    let mut rows = Vec::new();
    for &k in &grid.scenario_counts {
        for &p in &grid.policies {
            let outcome = match (p, &myopic) {
                (PolicyKind::Myopic, Some(m)) => m.clone(),
                _ => episode(p, k),
            };
            rows.push(row(p, k, outcome));
        }
    }
    rows
}

/// Runs the grid on up to `jobs` threads. Seeds are `base.seed + i`, shared by
/// every (csf, walk) pair. Rows come back ordered by (csf, walk, k, policy,
/// seed) regardless of scheduling.
pub fn run_grid(grid: &BenchGrid, base: &GenConfig, jobs: usize) -> Result<Vec<Row>, CliError> {
    grid.check()?;
    let mut units = Vec::new();
    for &csf in &grid.csf_values {
        for &walk in &grid.walk_values_m {
            for i in 0..grid.seeds_per_cell {
                units.push((csf, walk, base.seed + i as u64));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    let per_unit: Vec<Vec<Row>> =
        pool.install(|| units.par_iter().map(|&(csf, walk, seed)| run_instance(grid, base, csf, walk, seed)).collect());
    let mut rows: Vec<Row> = per_unit.into_iter().flatten().collect();
    let pos = |v: &[f64], x: f64| v.iter().position(|&y| y == x);
    rows.sort_by_key(|r| {
        (
            pos(&grid.csf_values, r.csf),
            pos(&grid.walk_values_m, r.walk_m),
            grid.scenario_counts.iter().position(|&k| k == r.k),
            grid.policies.iter().position(|&p| p == r.policy),
            r.seed,
        )
    });
    Ok(rows)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation; zero below two values.
fn stdev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn stderr(v: &[f64]) -> f64 {
    stdev(v) / (v.len() as f64).sqrt()
}

type CellKey = (usize, usize, usize, usize);

fn cells<'a>(grid: &BenchGrid, rows: &'a [Row]) -> BTreeMap<CellKey, Vec<&'a Row>> {
    let mut out: BTreeMap<CellKey, Vec<&Row>> = BTreeMap::new();
    for r in rows {
        let key = (
            grid.csf_values.iter().position(|&c| c == r.csf).unwrap_or(usize::MAX),
            grid.walk_values_m.iter().position(|&w| w == r.walk_m).unwrap_or(usize::MAX),
            grid.scenario_counts.iter().position(|&k| k == r.k).unwrap_or(usize::MAX),
            grid.policies.iter().position(|&p| p == r.policy).unwrap_or(usize::MAX),
        );
        out.entry(key).or_default().push(r);
    }
    out
}

fn ok(rows: &[&Row]) -> Vec<Measured> {
    rows.iter().filter_map(|r| r.outcome.as_ref().ok().cloned()).collect()
}

fn num(v: f64) -> String {
    format!("{v}")
}

/// The `profit` through `status` columns of a data row.
pub fn measured_fields(m: &Measured) -> Vec<String> {
    vec![
        num(m.profit),
        m.served.to_string(),
        m.total_requests.to_string(),
        num(m.sp_pct()),
        num(m.serial_ms),
        num(m.parallel_lb_ms),
        num(m.gap.value()),
        m.status().to_string(),
    ]
}

/// `results.csv`: each cell's data rows followed by its aggregate row.
pub fn results_csv(grid: &BenchGrid, rows: &[Row]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError::Internal(format!("csv: {e}"));
    w.write_record(COLUMNS).map_err(internal)?;
    for group in cells(grid, rows).values() {
        for r in group {
            let head = [r.instance_id.clone(), r.seed.to_string(), r.policy.to_string(), num(r.csf), num(r.walk_m), r.k.to_string()];
            let tail: Vec<String> = match &r.outcome {
                Ok(m) => measured_fields(m),
                Err(msg) => {
                    let mut v = vec![String::new(); 7];
                    v.push(format!("error: {msg}"));
                    v
                }
            };
            w.write_record(head.iter().chain(&tail)).map_err(internal)?;
        }
        let first = group[0];
        let ms = ok(group);
        let agg = |f: fn(&Measured) -> f64| if ms.is_empty() { String::new() } else { num(mean(&ms.iter().map(f).collect::<Vec<_>>())) };
        let record = [
            "aggregate".to_string(),
            String::new(),
            first.policy.to_string(),
            num(first.csf),
            num(first.walk_m),
            first.k.to_string(),
            agg(|m| m.profit),
            agg(|m| m.served as f64),
            agg(|m| m.total_requests as f64),
            agg(Measured::sp_pct),
            agg(|m| m.serial_ms),
            agg(|m| m.parallel_lb_ms),
            agg(|m| m.gap.value()),
            format!("aggregate n={} errors={}", ms.len(), group.len() - ms.len()),
        ];
        w.write_record(record).map_err(internal)?;
    }
    w.into_inner().map_err(|e| CliError::Internal(format!("csv: {e}")))
}

/// `aggregates.csv`: mean and standard deviation per cell.
pub fn aggregates_csv(grid: &BenchGrid, rows: &[Row]) -> String {
    let mut out = String::from(
        "policy,csf,walk_m,k_scenarios,n,errors,profit_mean,profit_stdev,sp_pct_mean,sp_pct_stdev,\
         cost_per_passenger_mean,cost_per_passenger_stdev,gap_mean,gap_stdev,serial_ms_mean,parallel_lb_ms_mean\n",
    );
    for group in cells(grid, rows).values() {
        let r = group[0];
        let ms = ok(group);
        let col = |f: &dyn Fn(&Measured) -> Option<f64>| -> Vec<f64> { ms.iter().filter_map(f).collect() };
        let pair = |v: Vec<f64>| if v.is_empty() { ",".to_string() } else { format!("{},{}", mean(&v), stdev(&v)) };
        let single = |v: Vec<f64>| if v.is_empty() { String::new() } else { num(mean(&v)) };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.policy,
            r.csf,
            r.walk_m,
            r.k,
            ms.len(),
            group.len() - ms.len(),
            pair(col(&|m| Some(m.profit))),
            pair(col(&|m| Some(m.sp_pct()))),
            pair(col(&Measured::cost_per_passenger)),
            pair(col(&|m| Some(m.gap.value()))),
            single(col(&|m| Some(m.serial_ms))),
            single(col(&|m| Some(m.parallel_lb_ms))),
        );
    }
    out
}

/// One plot-data file: `policy,x,y,stderr` per policy and x value.
fn series(
    grid: &BenchGrid,
    rows: &[Row],
    xs: &[f64],
    x_of: fn(&Row) -> f64,
    y_of: fn(&Measured) -> Option<f64>,
) -> String {
    let mut out = String::from("policy,x,y,stderr\n");
    for &p in &grid.policies {
        for &x in xs {
            let ys: Vec<f64> = rows
                .iter()
                .filter(|r| r.policy == p && x_of(r) == x)
                .filter_map(|r| r.outcome.as_ref().ok().and_then(y_of))
                .collect();
            if !ys.is_empty() {
                let _ = writeln!(out, "{p},{x},{},{}", mean(&ys), stderr(&ys));
            }
        }
    }
    out
}

pub fn plot_files(grid: &BenchGrid, rows: &[Row]) -> Vec<(&'static str, String)> {
    let ks: Vec<f64> = grid.scenario_counts.iter().map(|&k| k as f64).collect();
    vec![
        ("profit_vs_csf.csv", series(grid, rows, &grid.csf_values, |r| r.csf, |m| Some(m.profit))),
        ("profit_vs_walk.csv", series(grid, rows, &grid.walk_values_m, |r| r.walk_m, |m| Some(m.profit))),
        (
            "cost_per_passenger_vs_walk.csv",
            series(grid, rows, &grid.walk_values_m, |r| r.walk_m, Measured::cost_per_passenger),
        ),
        ("gap_vs_k.csv", series(grid, rows, &ks, |r| r.k as f64, |m| Some(m.gap.value()))),
    ]
}

/// How often a direction-of-effect holds between adjacent sweep values.
#[derive(Clone, Debug, PartialEq)]
pub struct Trend {
    pub label: &'static str,
    pub policy: PolicyKind,
    pub holding: usize,
    pub pairs: usize,
}

impl Trend {
    pub fn share(&self) -> f64 {
        if self.pairs == 0 {
            1.0
        } else {
            self.holding as f64 / self.pairs as f64
        }
    }
}

const TREND_TOL: f64 = 1e-9;

/// Mean over seeds and scenario counts per (policy, csf, walk); cells without
/// a value are skipped, and so are pairs touching them.
fn cell_means(rows: &[Row], p: PolicyKind, csf: f64, walk: f64, y_of: fn(&Measured) -> Option<f64>) -> Option<f64> {
    let ys: Vec<f64> = rows
        .iter()
        .filter(|r| r.policy == p && r.csf == csf && r.walk_m == walk)
        .filter_map(|r| r.outcome.as_ref().ok().and_then(y_of))
        .collect();
    (!ys.is_empty()).then(|| mean(&ys))
}

/// Profit non-increasing in csf, profit non-decreasing in walk radius and cost
/// per passenger non-increasing in walk radius, per policy, counted over
/// adjacent sweep values with the other parameter held fixed.
pub fn trends(grid: &BenchGrid, rows: &[Row]) -> Vec<Trend> {
    let mut out = Vec::new();
    let profit: fn(&Measured) -> Option<f64> = |m| Some(m.profit);
    for &p in &grid.policies {
        let mut count = |label, pairs: Vec<(Option<f64>, Option<f64>)>, holds: fn(f64, f64) -> bool| {
            let valid: Vec<(f64, f64)> = pairs.into_iter().filter_map(|(a, b)| Some((a?, b?))).collect();
            out.push(Trend { label, policy: p, holding: valid.iter().filter(|&&(a, b)| holds(a, b)).count(), pairs: valid.len() });
        };
        let mut by_csf = Vec::new();
        for &w in &grid.walk_values_m {
            for c in grid.csf_values.windows(2) {
                by_csf.push((cell_means(rows, p, c[0], w, profit), cell_means(rows, p, c[1], w, profit)));
            }
        }
        count("profit non-increasing in csf", by_csf, |a, b| b <= a + TREND_TOL);
        let mut by_walk = Vec::new();
        let mut cpp_by_walk = Vec::new();
        for &c in &grid.csf_values {
            for w in grid.walk_values_m.windows(2) {
                by_walk.push((cell_means(rows, p, c, w[0], profit), cell_means(rows, p, c, w[1], profit)));
                cpp_by_walk.push((
                    cell_means(rows, p, c, w[0], Measured::cost_per_passenger),
                    cell_means(rows, p, c, w[1], Measured::cost_per_passenger),
                ));
            }
        }
        count("profit non-decreasing in walk", by_walk, |a, b| b >= a - TREND_TOL);
        count("cost per passenger non-increasing in walk", cpp_by_walk, |a, b| b <= a + TREND_TOL);
    }
    out
}

pub fn trend_summary(trends: &[Trend]) -> String {
    let mut out = String::new();
    for t in trends {
        let share = if t.pairs == 0 { "-".to_string() } else { format!("{:.1}%", 100.0 * t.share()) };
        let _ = writeln!(out, "{:<7} {:<42} {:>4}/{:<4} ({share})", t.policy.name(), t.label, t.holding, t.pairs);
    }
    out
}

/// Writes every bench artifact under `dir` and returns the trend summary.
pub fn write_outputs(dir: &Path, grid: &BenchGrid, rows: &[Row]) -> Result<String, CliError> {
    write(&dir.join("results.csv"), &results_csv(grid, rows)?)?;
    write(&dir.join("aggregates.csv"), aggregates_csv(grid, rows).as_bytes())?;
    for (name, body) in plot_files(grid, rows) {
        write(&dir.join("plot").join(name), body.as_bytes())?;
    }
    let summary = trend_summary(&trends(grid, rows));
    write(&dir.join("monotonicity.txt"), summary.as_bytes())?;
    Ok(summary)
}

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use das_core::gen::{generate_instance, DemandModel, GenConfig};
use das_core::model::{load_instance, save_instance, Instance, ModelError};
use das_core::policies::{degenerate_scenario, PolicyKind, ScenarioSet};
use das_core::routing::{full_info_solve, FullInfoSolution};
use das_core::sim::{optimality_gap, run_episode, EpochContext, EpisodeResult, FutureSource, Gap, SimError};
use serde::Serialize;

use crate::bench::{self, Measured, COLUMNS};
use crate::config::{check_generator, load_config, GenFlags};
use crate::error::{read, write, CliError};
use crate::report;

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    s.parse().map_err(|e: das_core::policies::UnknownPolicy| e.to_string())
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(format!("json: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

fn load(path: &Path) -> Result<Instance, CliError> {
    load_instance(&read(path)?).map_err(|e| match e {
        ModelError::Parse { .. } => CliError::Validation(format!("{}: {e}", path.display())),
        ModelError::Invalid(report) => CliError::Validation(format!("{} is invalid:\n{report}", path.display())),
    })
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// JSON file with `generator`, `grid` and `jobs` sections; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub csf: Option<f64>,
    /// Walking radius in metres.
    #[arg(long)]
    pub walk: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of consecutive seeds to generate.
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub gen: GenFlags,
}

/// Writes `instance-<seed>.json`, `demand-<seed>.json` and `report-<seed>.json`
/// per seed and returns the written paths.
pub fn generate(args: &GenerateArgs) -> Result<Vec<PathBuf>, CliError> {
    let mut config = load_config(args.config.as_deref())?.generator;
    args.gen.apply(&mut config);
    if let Some(v) = args.csf {
        config.csf = v;
    }
    if let Some(v) = args.walk {
        config.walk_radius_m = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    check_generator(&config)?;
    let mut written = Vec::new();
    for seed in config.seed..config.seed + args.count {
        let g = generate_instance(&GenConfig { seed, ..config.clone() })
            .map_err(|e| CliError::Internal(format!("seed {seed}: {e}")))?;
        for (name, bytes) in [
            (format!("instance-{seed}.json"), save_instance(&g.instance)),
            (format!("demand-{seed}.json"), json(&g.demand)?),
            (format!("report-{seed}.json"), json(&g.report)?),
        ] {
            let path = args.out_dir.join(name);
            write(&path, &bytes)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[derive(Args, Debug)]
pub struct FullInfoArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Solution document path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct FullInfoDoc {
    #[serde(flatten)]
    solution: FullInfoSolution,
    solve_time_ms: f64,
}

pub fn fullinfo(args: &FullInfoArgs) -> Result<Vec<u8>, CliError> {
    let instance = load(&args.instance)?;
    let start = Instant::now();
    let solution = full_info_solve(&instance.network, &instance.requests)
        .map_err(|e| CliError::Validation(format!("{}: {e}", args.instance.display())))?;
    let doc = FullInfoDoc { solution, solve_time_ms: start.elapsed().as_secs_f64() * 1e3 };
    json(&doc)
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Demand model written by `generate`; needed by 2ssp and ha unless `--scenarios 0`.
    #[arg(long)]
    pub demand: Option<PathBuf>,
    /// One of 2ssp, ha, myopic.
    #[arg(long, value_parser = parse_policy)]
    pub policy: PolicyKind,
    /// Scenarios per decision; 0 uses only the known requests.
    #[arg(long, default_value_t = 5)]
    pub scenarios: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Episode document path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Sampled futures from the demand model, or the known requests alone when
/// the scenario count is zero.
struct Futures {
    demand: Option<DemandModel>,
}

impl FutureSource for Futures {
    fn scenarios(&self, ctx: &EpochContext<'_>) -> Result<ScenarioSet, SimError> {
        match (&self.demand, ctx.k) {
            (_, 0) => Ok(ScenarioSet { scenarios: vec![degenerate_scenario(ctx.state)] }),
            (Some(d), _) => d.scenarios(ctx),
            (None, _) => Err(SimError::Tree("no demand model to sample scenarios from".into())),
        }
    }
}

#[derive(Serialize)]
struct EpisodeDoc<'a> {
    instance_id: &'a str,
    bound: f64,
    gap: Gap,
    episode: &'a EpisodeResult,
}

/// Runs one episode; returns the CSV header and row, and writes the episode
/// document to `--out` when given.
pub fn simulate(args: &SimulateArgs) -> Result<Vec<u8>, CliError> {
    if args.policy.uses_scenarios() && args.scenarios > 0 && args.demand.is_none() {
        return Err(CliError::Usage(format!("--policy {} needs --demand (or --scenarios 0)", args.policy)));
    }
    let instance = load(&args.instance)?;
    let demand: Option<DemandModel> = match &args.demand {
        Some(p) => Some(
            serde_json::from_slice(&read(p)?)
                .map_err(|e| CliError::Validation(format!("{}: not a demand model: {e}", p.display())))?,
        ),
        None => None,
    };
    let (csf, walk) = demand.as_ref().map_or((String::new(), String::new()), |d| {
        (d.config.csf.to_string(), d.config.walk_radius_m.to_string())
    });
    let source = Futures { demand };
    let episode = run_episode(&instance, args.policy, &source, args.scenarios, args.seed)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let bound = full_info_solve(&instance.network, &instance.requests)
        .map_err(|e| CliError::Internal(e.to_string()))?
        .objective;
    let id = args.instance.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    if let Some(out) = &args.out {
        let doc = EpisodeDoc { instance_id: &id, bound, gap: optimality_gap(episode.profit, bound), episode: &episode };
        write(out, &json(&doc)?)?;
    }
    let m = Measured::new(&episode, bound);
    let mut w = csv::Writer::from_writer(Vec::new());
    let internal = |e: csv::Error| CliError::Internal(format!("csv: {e}"));
    w.write_record(COLUMNS).map_err(internal)?;
    let mut record = vec![id, args.seed.to_string(), args.policy.to_string(), csf, walk, args.scenarios.to_string()];
    record.extend(bench::measured_fields(&m));
    w.write_record(&record).map_err(internal)?;
    w.into_inner().map_err(|e| CliError::Internal(format!("csv: {e}")))
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub csf_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub walk_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub scenario_counts: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',', value_parser = parse_policy)]
    pub policies: Option<Vec<PolicyKind>>,
    #[arg(long)]
    pub seeds_per_cell: Option<usize>,
    /// First seed; cell i uses seeds seed..seed+seeds_per_cell.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value = "bench-out")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub gen: GenFlags,
}

/// Runs the grid, writes its artifacts and returns the trend summary.
pub fn bench(args: &BenchArgs) -> Result<String, CliError> {
    let file = load_config(args.config.as_deref())?;
    let mut grid = file.grid;
    if let Some(v) = &args.csf_values {
        grid.csf_values = v.clone();
    }
    if let Some(v) = &args.walk_values {
        grid.walk_values_m = v.clone();
    }
    if let Some(v) = &args.scenario_counts {
        grid.scenario_counts = v.clone();
    }
    if let Some(v) = &args.policies {
        grid.policies = v.clone();
    }
    if let Some(v) = args.seeds_per_cell {
        grid.seeds_per_cell = v;
    }
    grid.check()?;
    let mut base = file.generator;
    args.gen.apply(&mut base);
    if let Some(v) = args.seed {
        base.seed = v;
    }
    for &csf in &grid.csf_values {
        for &walk in &grid.walk_values_m {
            check_generator(&GenConfig { csf, walk_radius_m: walk, ..base.clone() })?;
        }
    }
    let jobs = args
        .jobs
        .or(file.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let rows = bench::run_grid(&grid, &base, jobs)?;
    bench::write_outputs(&args.out_dir, &grid, &rows)
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// A `results.csv` written by `bench`.
    #[arg(long)]
    pub input: PathBuf,
}

pub fn report(args: &ReportArgs) -> Result<String, CliError> {
    report::summarize(&read(&args.input)?)
}

//! Synthetic instances and demand scenarios.
//!
//! The pipeline: a synthetic fixed line with boarding/alighting volumes, an
//! OD table fitted to those volumes by iterative proportional fitting, a
//! demand-adaptive network derived from the line for a compulsory stop factor,
//! and request streams sampled from the OD table.

mod ipf;
mod line;
mod network;
mod requests;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{validate, Instance, Request, RequestId, SystemState, ValidationReport};
use crate::policies::ScenarioSet;

pub use ipf::{ipf_fit, IpfError, IpfFit};
pub use line::{FixedLine, LineStop, OdMatrix, Point};
pub use network::{derive_network, interior_compulsory_count, NetworkStats};
pub use requests::{sample_requests, RequestStats};

/// Ids of sampled future requests start here, clear of realized request ids.
pub const FUTURE_ID_BASE: u32 = 1_000_000;

const STREAM_LINE: u64 = 1;
const STREAM_REQUESTS: u64 = 2;
const STREAM_SCENARIO: u64 = 3;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum GenError {
    #[error("invalid config: {field} {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("line needs at least two stops, got {stops}")]
    LineTooShort { stops: usize },
    #[error("bad OD matrix: {0}")]
    OdShape(String),
    #[error("OD fitting failed: {0}")]
    Ipf(#[from] IpfError),
    #[error("generated instance is invalid:\n{0}")]
    Invalid(ValidationReport),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    /// Fraction of interior line stops kept compulsory, in (0, 1].
    pub csf: f64,
    pub walk_radius_m: f64,
    /// Radius of the disc around a line stop in which trip ends are placed.
    pub map_radius_m: f64,
    pub optional_candidate_radius_m: f64,
    pub merge_radius_m: f64,
    /// Requests arrive in [0, horizon_s).
    pub horizon_s: f64,
    pub utility: f64,
    pub seed: u64,
    pub speed_mps: f64,
    pub service_s: f64,
    pub cost_per_m: f64,
    /// Window slack per segment as a fraction of the extra time needed to visit
    /// all of its optional stops in order.
    pub slack: f64,
    pub window_width_s: f64,
    /// Gap between the end of the request horizon and a_1.
    pub start_offset_s: f64,
    pub line_stops: usize,
    pub stop_spacing_m: f64,
    /// Lateral amplitude of the line's zig-zag.
    pub zigzag_m: f64,
    pub intersections: usize,
    /// Expected number of trips per stream before stop mapping.
    pub expected_requests: f64,
    pub max_optional_per_segment: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            csf: 0.4,
            walk_radius_m: 250.0,
            map_radius_m: 300.0,
            optional_candidate_radius_m: 600.0,
            merge_radius_m: 200.0,
            horizon_s: 10_800.0,
            utility: 400.0,
            seed: 0,
            speed_mps: 8.3,
            service_s: 15.0,
            cost_per_m: 1.0,
            slack: 0.4,
            window_width_s: 120.0,
            start_offset_s: 600.0,
            line_stops: 14,
            stop_spacing_m: 450.0,
            zigzag_m: 600.0,
            intersections: 20,
            expected_requests: 14.0,
            max_optional_per_segment: 16,
        }
    }
}

impl GenConfig {
    pub fn check(&self) -> Result<(), GenError> {
        let bad = |field, reason: &str| Err(GenError::InvalidConfig { field, reason: reason.to_string() });
        if !(self.csf > 0.0 && self.csf <= 1.0) {
            return bad("csf", "must lie in (0, 1]");
        }
        let positive = [
            ("map_radius_m", self.map_radius_m),
            ("optional_candidate_radius_m", self.optional_candidate_radius_m),
            ("merge_radius_m", self.merge_radius_m),
            ("horizon_s", self.horizon_s),
            ("utility", self.utility),
            ("speed_mps", self.speed_mps),
            ("cost_per_m", self.cost_per_m),
            ("stop_spacing_m", self.stop_spacing_m),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(field, "must be positive");
            }
        }
        let non_negative = [
            ("walk_radius_m", self.walk_radius_m),
            ("service_s", self.service_s),
            ("slack", self.slack),
            ("window_width_s", self.window_width_s),
            ("start_offset_s", self.start_offset_s),
            ("zigzag_m", self.zigzag_m),
            ("expected_requests", self.expected_requests),
        ];
        for (field, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(field, "must be non-negative");
            }
        }
        if self.start_offset_s == 0.0 {
            return bad("start_offset_s", "must be positive so the horizon ends before a_1");
        }
        if self.line_stops < 2 {
            return bad("line_stops", "must be at least 2");
        }
        if self.max_optional_per_segment > crate::routing::MAX_SEGMENT_CANDIDATES {
            return bad("max_optional_per_segment", "exceeds the exact solver's segment limit");
        }
        Ok(())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent generator for the stream named by `path` under `seed`.
pub fn child_rng(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut h = splitmix(seed);
    for &p in path {
        h = splitmix(h ^ splitmix(p));
    }
    ChaCha8Rng::seed_from_u64(h)
}

/// Everything needed to sample further requests like the realized ones.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandModel {
    pub config: GenConfig,
    pub line: FixedLine,
    pub od: OdMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub seed: u64,
    pub csf: f64,
    pub walk_radius_m: f64,
    pub ipf_iterations: usize,
    pub ipf_deviation: f64,
    pub network: NetworkStats,
    pub requests: RequestStats,
    pub compulsory_stops: usize,
    pub optional_stops: usize,
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub instance: Instance,
    pub demand: DemandModel,
    pub report: GenerationReport,
}

/// Fitting tolerance and round limit for the line's OD table.
const IPF_TOL: f64 = 1e-9;
const IPF_MAX_ITER: usize = 10_000;

/// Full pipeline for `config.seed`. The line and the trip draws depend only on
/// the seed and the line parameters, so instances for different `csf` or walk
/// radii under one seed share their passengers.
pub fn generate_instance(config: &GenConfig) -> Result<Generated, GenError> {
    config.check()?;
    let line = FixedLine::synthetic(config, &mut child_rng(config.seed, &[STREAM_LINE]));
    let (od, fit) = line.fit_od(IPF_TOL, IPF_MAX_ITER)?;
    let (network, net_stats) = derive_network(&line, config)?;
    let (requests, req_stats) =
        sample_requests(&line, &od, &network, config, &mut child_rng(config.seed, &[STREAM_REQUESTS]));
    let report = GenerationReport {
        seed: config.seed,
        csf: config.csf,
        walk_radius_m: config.walk_radius_m,
        ipf_iterations: fit.iterations,
        ipf_deviation: fit.deviation,
        compulsory_stops: network.compulsory_chain().len(),
        optional_stops: network.stops().len() - network.compulsory_chain().len(),
        network: net_stats,
        requests: req_stats,
    };
    let instance = Instance { network, requests, horizon_end_s: config.horizon_s };
    let violations = validate(&instance);
    if !violations.is_empty() {
        return Err(GenError::Invalid(violations));
    }
    Ok(Generated { instance, demand: DemandModel { config: config.clone(), line, od }, report })
}

/// A fresh stream from the demand model restricted to arrivals after
/// `after_s`, with ids from [`FUTURE_ID_BASE`].
pub fn sample_future<R: rand::Rng>(instance: &Instance, demand: &DemandModel, after_s: f64, rng: &mut R) -> Vec<Request> {
    let trips = requests::draw_trips(&demand.line, &demand.od, &demand.config, rng);
    let (all, _) = requests::map_trips(&trips, &instance.network, &demand.config, 0);
    all.into_iter()
        .filter(|r| r.request_time_s > after_s && r.request_time_s < instance.horizon_end_s)
        .enumerate()
        .map(|(i, r)| Request { id: RequestId(FUTURE_ID_BASE + i as u32), ..r })
        .collect()
}

/// `k` equally likely scenarios, each the accepted and pending requests plus
/// a future stream drawn from its own child generator of `seed`, keyed by the
/// decision index and scenario index.
pub fn build_scenarios(state: &SystemState, instance: &Instance, demand: &DemandModel, k: usize, seed: u64) -> ScenarioSet {
    let sets = (0..k)
        .map(|i| {
            let mut rng = child_rng(seed, &[STREAM_SCENARIO, state.decision_index as u64, i as u64]);
            let mut requests = state.accepted.clone();
            requests.push(state.pending.clone());
            requests.extend(sample_future(instance, demand, state.pending.request_time_s, &mut rng));
            requests
        })
        .collect();
    ScenarioSet::uniform(sets)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_generates_valid_instances() {
        for seed in 0..20 {
            let g = generate_instance(&GenConfig { seed, ..GenConfig::default() }).unwrap();
            assert!(validate(&g.instance).is_empty());
            assert_eq!(g.report.requests.emitted, g.instance.requests.len());
        }
    }

    #[test]
    fn config_rejects_out_of_range_csf() {
        let err = GenConfig { csf: 1.5, ..GenConfig::default() }.check().unwrap_err();
        assert!(matches!(err, GenError::InvalidConfig { field: "csf", .. }));
    }

    #[test]
    fn child_streams_differ_and_repeat() {
        use rand::Rng;
        let a: u64 = child_rng(7, &[1, 2]).gen();
        let b: u64 = child_rng(7, &[2, 1]).gen();
        let c: u64 = child_rng(7, &[1, 2]).gen();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}

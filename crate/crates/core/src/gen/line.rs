use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ipf::{ipf_fit, IpfFit};
use super::{GenConfig, GenError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x_m: f64,
    pub y_m: f64,
}

impl Point {
    pub fn new(x_m: f64, y_m: f64) -> Self {
        Point { x_m, y_m }
    }

    pub fn dist(self, o: Point) -> f64 {
        (self.x_m - o.x_m).hypot(self.y_m - o.y_m)
    }
}

/// Distance from `p` to the segment `a-b` and the projection parameter in [0, 1].
pub(crate) fn project(p: Point, a: Point, b: Point) -> (f64, f64) {
    let (dx, dy) = (b.x_m - a.x_m, b.y_m - a.y_m);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 { 0.0 } else { (((p.x_m - a.x_m) * dx + (p.y_m - a.y_m) * dy) / len2).clamp(0.0, 1.0) };
    let q = Point::new(a.x_m + t * dx, a.y_m + t * dy);
    (p.dist(q), t)
}

/// Distance from `p` to a polyline and the arc-length position of its nearest
/// point (first leg wins ties).
pub(crate) fn polyline_position(p: Point, line: &[Point]) -> (f64, f64) {
    if line.len() == 1 {
        return (p.dist(line[0]), 0.0);
    }
    let mut best = (f64::INFINITY, 0.0);
    let mut offset = 0.0;
    for w in line.windows(2) {
        let (d, t) = project(p, w[0], w[1]);
        let len = w[0].dist(w[1]);
        if d < best.0 {
            best = (d, offset + t * len);
        }
        offset += len;
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineStop {
    pub at: Point,
    pub boarding: f64,
    pub alighting: f64,
}

/// A conventional fixed-route line: stops in travel order with demand marginals
/// and street intersections that may become optional stops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedLine {
    pub stops: Vec<LineStop>,
    pub intersections: Vec<Point>,
}

/// Origin-destination volumes between line stops; only forward trips
/// (`o < d` in line order) carry volume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OdMatrix(Array2<f64>);

impl OdMatrix {
    pub fn new(matrix: Array2<f64>) -> Result<Self, GenError> {
        let (r, c) = matrix.dim();
        if r != c {
            return Err(GenError::OdShape(format!("{r}x{c} is not square")));
        }
        for ((o, d), &v) in matrix.indexed_iter() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(GenError::OdShape(format!("entry ({o},{d}) = {v} is negative")));
            }
            if o >= d && v != 0.0 {
                return Err(GenError::OdShape(format!("entry ({o},{d}) = {v} is not a forward trip")));
            }
        }
        Ok(OdMatrix(matrix))
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, o: usize, d: usize) -> f64 {
        self.0[(o, d)]
    }

    pub fn total(&self) -> f64 {
        self.0.sum()
    }
}

impl FixedLine {
    pub fn points(&self) -> Vec<Point> {
        self.stops.iter().map(|s| s.at).collect()
    }

    pub fn volumes(&self) -> Vec<f64> {
        self.stops.iter().map(|s| s.boarding + s.alighting).collect()
    }

    /// A zig-zagging line along the x axis. Demand marginals come from a
    /// random gravity-style OD table scaled to `expected_requests` trips.
    pub fn synthetic<R: Rng>(config: &GenConfig, rng: &mut R) -> FixedLine {
        let m = config.line_stops;
        let mut stops = Vec::with_capacity(m);
        for i in 0..m {
            let jitter = rng.gen_range(-0.15..0.15) * config.stop_spacing_m;
            let x = i as f64 * config.stop_spacing_m + if i == 0 || i + 1 == m { 0.0 } else { jitter };
            let side = if i % 2 == 0 { -1.0 } else { 1.0 };
            let y = if i == 0 || i + 1 == m { 0.0 } else { side * config.zigzag_m * rng.gen_range(0.6..1.0) };
            stops.push(LineStop { at: Point::new(x, y), boarding: 0.0, alighting: 0.0 });
        }

        // Skewed attraction: a few busy stops, many quiet ones.
        let attraction: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2f64..1.0).powi(4)).collect();
        let mut truth = Array2::<f64>::zeros((m, m));
        for o in 0..m {
            for d in o + 1..m {
                // Trips of one or two stops are mostly walked.
                let k = (d - o) as f64;
                truth[(o, d)] = attraction[o] * attraction[d] * k * k * (-k / m as f64).exp();
            }
        }
        let total = truth.sum();
        if total > 0.0 {
            truth *= config.expected_requests / total;
        }
        for o in 0..m {
            for d in o + 1..m {
                stops[o].boarding += truth[(o, d)];
                stops[d].alighting += truth[(o, d)];
            }
        }

        let x_max = (m.saturating_sub(1)) as f64 * config.stop_spacing_m;
        let reach = config.zigzag_m + config.optional_candidate_radius_m;
        // Street intersections away from the existing stops.
        let mut intersections = Vec::with_capacity(config.intersections);
        let mut attempts = 0;
        while intersections.len() < config.intersections && attempts < 1000 * config.intersections {
            attempts += 1;
            let p = Point::new(rng.gen_range(0.0..=x_max.max(1.0)), rng.gen_range(-reach..=reach));
            if stops.iter().all(|s| s.at.dist(p) >= config.merge_radius_m) {
                intersections.push(p);
            }
        }
        FixedLine { stops, intersections }
    }

    /// Fits a forward-only OD table to the line's boarding and alighting
    /// marginals, starting from a uniform upper-triangular seed.
    pub fn fit_od(&self, tol: f64, max_iter: usize) -> Result<(OdMatrix, IpfFit), GenError> {
        let m = self.stops.len();
        let seed = Array2::from_shape_fn((m, m), |(o, d)| if o < d { 1.0 } else { 0.0 });
        let rows: Vec<f64> = self.stops.iter().map(|s| s.boarding).collect();
        let cols: Vec<f64> = self.stops.iter().map(|s| s.alighting).collect();
        let fit = ipf_fit(&seed, &rows, &cols, tol, max_iter)?;
        let mut matrix = fit.matrix.clone();
        // Rounding leaves nothing below the diagonal, but keep the invariant exact.
        for o in 0..m {
            for d in 0..=o {
                matrix[(o, d)] = 0.0;
            }
        }
        Ok((OdMatrix::new(matrix)?, fit))
    }
}

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum IpfError {
    #[error("seed is {rows}x{cols} but {row_marginals} row and {col_marginals} column marginals were given")]
    Shape { rows: usize, cols: usize, row_marginals: usize, col_marginals: usize },
    #[error("seed and marginals must be finite and non-negative")]
    Negative,
    #[error("row marginals total {rows} but column marginals total {cols}")]
    InconsistentTotals { rows: f64, cols: f64 },
    #[error("no convergence after {iterations} iterations; max marginal deviation {deviation}")]
    NotConverged { iterations: usize, deviation: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpfFit {
    pub matrix: Array2<f64>,
    /// Largest absolute row or column marginal deviation of `matrix`.
    pub deviation: f64,
    /// Completed row-then-column scaling rounds.
    pub iterations: usize,
}

fn deviation(m: &Array2<f64>, rows: &[f64], cols: &[f64]) -> f64 {
    let r = m.sum_axis(Axis(1));
    let c = m.sum_axis(Axis(0));
    let dr = r.iter().zip(rows).map(|(a, b)| (a - b).abs());
    let dc = c.iter().zip(cols).map(|(a, b)| (a - b).abs());
    dr.chain(dc).fold(0.0, f64::max)
}

fn scale_lanes(m: &mut Array2<f64>, axis: Axis, targets: &[f64]) {
    for (mut lane, &target) in m.axis_iter_mut(axis).zip(targets) {
        let sum: f64 = lane.sum();
        if sum > 0.0 {
            lane *= target / sum;
        }
    }
}

/// Iterative proportional fitting: alternately rescales the rows and then the
/// columns of `seed` until every marginal is within `tol`, or fails after
/// `max_iter` rounds.
pub fn ipf_fit(seed: &Array2<f64>, rows: &[f64], cols: &[f64], tol: f64, max_iter: usize) -> Result<IpfFit, IpfError> {
    let (nr, nc) = seed.dim();
    if rows.len() != nr || cols.len() != nc {
        return Err(IpfError::Shape { rows: nr, cols: nc, row_marginals: rows.len(), col_marginals: cols.len() });
    }
    let ok = |v: &f64| v.is_finite() && *v >= 0.0;
    if !seed.iter().all(ok) || !rows.iter().all(ok) || !cols.iter().all(ok) {
        return Err(IpfError::Negative);
    }
    let (sr, sc): (f64, f64) = (rows.iter().sum(), cols.iter().sum());
    if (sr - sc).abs() > tol {
        return Err(IpfError::InconsistentTotals { rows: sr, cols: sc });
    }

    let mut m = seed.clone();
    let mut iterations = 0;
    loop {
        let dev = deviation(&m, rows, cols);
        if dev < tol {
            return Ok(IpfFit { matrix: m, deviation: dev, iterations });
        }
        if iterations == max_iter {
            return Err(IpfError::NotConverged { iterations, deviation: dev });
        }
        scale_lanes(&mut m, Axis(0), rows);
        scale_lanes(&mut m, Axis(1), cols);
        iterations += 1;
    }
}

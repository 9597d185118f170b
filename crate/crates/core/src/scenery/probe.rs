//! Finite-difference Hölder estimates for log DΦ and its derivative.

use serde::Serialize;

use super::grid::ConjugacyGrid;
use crate::error::{Error, Result};

/// Growth per halving of the scale above which an estimate is called divergent.
const DIVERGENCE_SLOPE: f64 = 0.5;

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub k: usize,
    pub gamma: f64,
    /// (scale, max |Δq| / scale^γ) from the finest scale up.
    pub scales: Vec<(f64, f64)>,
    /// Largest estimate over the scales.
    pub constant: f64,
    /// Average growth of log2 of the estimate per halving over the finest scales.
    pub growth: f64,
    pub divergent: bool,
}

/// Hölder estimates of D^{k−1} log Df: log Df for k = 1, f''/f' for k = 2.
pub fn smoothness_probe(f: &ConjugacyGrid, k: usize, gamma: f64) -> Result<ProbeReport> {
    let n = f.len();
    if n < 17 {
        return Err(Error::Resolution(format!("{n} points, need at least 17")));
    }
    let h = f.grid[1] - f.grid[0];
    if f.grid.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-12) {
        return Err(Error::Resolution("probe needs a uniform grid".into()));
    }
    let q: Vec<f64> = match k {
        1 => f.dvalues.iter().map(|d| d.ln()).collect(),
        2 => match &f.second {
            Some(s) => s.iter().zip(&f.dvalues).map(|(s, d)| s / d).collect(),
            None => return Err(Error::Resolution("second derivatives are missing".into())),
        },
        _ => return Err(Error::Parameter(format!("probe order {k} not supported"))),
    };
    let mut scales = Vec::new();
    let mut step = 1;
    while step * 4 < n {
        let width = step as f64 * h;
        let m = (0..n - step).map(|i| (q[i + step] - q[i]).abs()).fold(0.0, f64::max);
        let m = if q.iter().any(|v| !v.is_finite()) { f64::INFINITY } else { m };
        scales.push((width, m / width.powf(gamma)));
        step *= 2;
    }
    let constant = scales.iter().map(|s| s.1).fold(0.0, f64::max);
    let finest = scales.len().min(4);
    let growth = if constant == 0.0 {
        0.0
    } else {
        let a = scales[0].1.max(f64::MIN_POSITIVE).log2();
        let b = scales[finest - 1].1.max(f64::MIN_POSITIVE).log2();
        (a - b) / (finest - 1) as f64
    };
    let divergent = !constant.is_finite() || growth > DIVERGENCE_SLOPE;
    Ok(ProbeReport { k, gamma, scales, constant, growth, divergent })
}

//! The C¹ distance between conjugacies, the Hausdorff distance between interval unions,
//! and the dyadic-interval distance between measures.

use serde::Serialize;

use super::grid::ConjugacyGrid;
use crate::error::{Error, Result};
use crate::thermo::CylinderMeasure;

/// Number of dyadic intervals summed by [`d_m`].
pub const DEFAULT_MEASURE_TERMS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MetricKind {
    C1,
    Hausdorff,
    Measure,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricValue {
    pub kind: MetricKind,
    pub value: f64,
    pub truncation_err: f64,
    /// Sampled sup-norms only bound the true norm from below.
    pub lower_bound: bool,
}

/// max|f − g| + max|Df − Dg| over the grid of `f`.
///
/// Different grids are reconciled by Hermite resampling of `g` when `resample` is set.
pub fn d_c(f: &ConjugacyGrid, g: &ConjugacyGrid, resample: bool) -> Result<MetricValue> {
    let (g, slack) = if f.same_grid(g) {
        (g.clone(), 0.0)
    } else if resample {
        (g.resample(&f.grid)?, g.interpolation_slack())
    } else {
        return Err(Error::IncompatibleGrids);
    };
    let mut v = 0.0f64;
    let mut d = 0.0f64;
    for i in 0..f.len() {
        v = v.max((f.values[i] - g.values[i]).abs());
        d = d.max((f.dvalues[i] - g.dvalues[i]).abs());
    }
    Ok(MetricValue { kind: MetricKind::C1, value: v + d, truncation_err: slack, lower_bound: true })
}

/// Distance from x to a sorted union of disjoint closed intervals.
fn dist_to(set: &[(f64, f64)], x: f64) -> f64 {
    let i = set.partition_point(|iv| iv.1 < x);
    let mut best = f64::INFINITY;
    if i < set.len() {
        best = if set[i].0 <= x { 0.0 } else { set[i].0 - x };
    }
    if i > 0 {
        best = best.min(x - set[i - 1].1);
    }
    best
}

/// sup over b ∈ B of dist(b, A): attained at endpoints of B or at midpoints of gaps of A inside B.
fn directed(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let mut best = 0.0f64;
    for &(l, r) in b {
        best = best.max(dist_to(a, l)).max(dist_to(a, r));
    }
    for w in a.windows(2) {
        let mid = 0.5 * (w[0].1 + w[1].0);
        if dist_to(b, mid) == 0.0 {
            best = best.max(dist_to(a, mid));
        }
    }
    best
}

fn validate_union(s: &[(f64, f64)]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::EmptySet);
    }
    if s.iter().any(|iv| !(iv.0 <= iv.1)) || s.windows(2).any(|w| w[0].1 > w[1].0) {
        return Err(Error::Parameter("intervals must be ordered and disjoint".into()));
    }
    Ok(())
}

/// Exact Hausdorff distance between two finite unions of closed intervals.
///
/// The truncation slack is half the longest interval: the distance from either union
/// to the Cantor set it approximates.
pub fn d_h(a: &[(f64, f64)], b: &[(f64, f64)]) -> Result<MetricValue> {
    validate_union(a)?;
    validate_union(b)?;
    let value = directed(a, b).max(directed(b, a));
    let longest = a.iter().chain(b).map(|iv| iv.1 - iv.0).fold(0.0, f64::max);
    Ok(MetricValue { kind: MetricKind::Hausdorff, value, truncation_err: 0.5 * longest, lower_bound: false })
}

/// Finite measure carried by disjoint intervals, spread proportionally to length inside each.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SetMeasure {
    pub intervals: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

impl SetMeasure {
    pub fn new(intervals: Vec<(f64, f64)>, weights: Vec<f64>) -> Result<Self> {
        validate_union(&intervals)?;
        if intervals.len() != weights.len() || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Parameter("need one nonnegative weight per interval".into()));
        }
        Ok(SetMeasure { intervals, weights })
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Mass of [lo, hi].
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        let start = self.intervals.partition_point(|iv| iv.1 < lo);
        let mut m = 0.0;
        for (iv, w) in self.intervals[start..].iter().zip(&self.weights[start..]) {
            if iv.0 > hi {
                break;
            }
            let len = iv.1 - iv.0;
            if len <= 0.0 {
                m += w;
                continue;
            }
            let overlap = (iv.1.min(hi) - iv.0.max(lo)).max(0.0);
            m += w * overlap / len;
        }
        m
    }

    /// Image of the measure under a map of [0,1] by the conformal rule
    /// μ_f(f(I)) = (|f(I)|/|I|)^d·μ(I), given the image intervals.
    pub fn conformal_image(&self, images: Vec<(f64, f64)>, d: f64) -> Result<SetMeasure> {
        if images.len() != self.intervals.len() {
            return Err(Error::Parameter("one image interval per interval required".into()));
        }
        let weights = self
            .intervals
            .iter()
            .zip(&images)
            .zip(&self.weights)
            .map(|((a, b), w)| w * ((b.1 - b.0) / (a.1 - a.0)).powf(d))
            .collect();
        SetMeasure::new(images, weights)
    }
}

/// Cylinder weights placed on the matching intervals.
pub fn place(mu: &CylinderMeasure, intervals: Vec<(f64, f64)>) -> Result<SetMeasure> {
    SetMeasure::new(intervals, mu.weights.clone())
}

/// The n-th interval of the enumeration E_1 = [0,1], then the dyadic intervals of each
/// level in increasing order (n ≥ 1).
pub fn dyadic_interval(n: usize) -> (f64, f64) {
    let level = usize::BITS - 1 - n.leading_zeros();
    let j = n - (1usize << level);
    let w = (-(level as f64)).exp2();
    (j as f64 * w, (j + 1) as f64 * w)
}

/// Σ_{n ≤ terms} |μ_A(E_n) − μ_B(E_n)|·2^{−n}.
pub fn d_m(a: &SetMeasure, b: &SetMeasure, terms: usize) -> Result<MetricValue> {
    if terms == 0 {
        return Err(Error::Parameter("need at least one term".into()));
    }
    let mut value = 0.0;
    for n in 1..=terms {
        let (lo, hi) = dyadic_interval(n);
        value += (a.mass(lo, hi) - b.mass(lo, hi)).abs() * (-(n as f64)).exp2();
    }
    let truncation_err = (a.total() + b.total()) * (-(terms as f64)).exp2();
    Ok(MetricValue { kind: MetricKind::Measure, value, truncation_err, lower_bound: false })
}

/// Caveat attached to every measure comparison built from conformal weights.
pub fn conformal_bound_note() -> &'static str {
    "measures are conformal proxies (exact for affine systems), equivalent to the Hausdorff measure within the certified band"
}

/// The modulus 5x + 4x² bounding d_M by d_C for conformal images.
pub fn measure_modulus(x: f64) -> f64 {
    5.0 * x + 4.0 * x * x
}

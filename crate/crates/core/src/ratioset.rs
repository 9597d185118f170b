//! Ratio Cantor sets C^y rebuilt from scaling data, and the scenery identity.
//!
//! The subdivision of I^y_{x_0…x_{k−1}} uses the triple queried at the past
//! y·x_0…x_{k−1}; the left child shares the left endpoint and the right child the
//! right endpoint.

use std::fmt;
use std::sync::Arc;

use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::scaling::{RatioTriple, ScalingTable};
use crate::symbolic::{check_depth, BiWindow, DualWord};

type Rule = Arc<dyn Fn(&DualWord) -> RatioTriple + Send + Sync>;

/// Where subdivision ratios come from.
#[derive(Clone)]
pub enum ScalingSource {
    Constant(RatioTriple),
    /// Lookup by the length-m suffix of the (zero-padded) past.
    Table(Arc<ScalingTable>),
    Rule { name: String, rule: Rule },
}

impl fmt::Debug for ScalingSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalingSource::Constant(t) => write!(f, "Constant({t:?})"),
            ScalingSource::Table(t) => write!(f, "Table(depth {}, est_depth {})", t.depth, t.est_depth),
            ScalingSource::Rule { name, .. } => write!(f, "Rule({name})"),
        }
    }
}

impl ScalingSource {
    pub fn table(t: ScalingTable) -> Self {
        ScalingSource::Table(Arc::new(t))
    }

    pub fn rule(name: &str, f: impl Fn(&DualWord) -> RatioTriple + Send + Sync + 'static) -> Self {
        ScalingSource::Rule { name: name.to_string(), rule: Arc::new(f) }
    }

    pub fn query(&self, y: &DualWord) -> Result<RatioTriple> {
        let t = match self {
            ScalingSource::Constant(t) => *t,
            ScalingSource::Table(t) => t.lookup(y),
            ScalingSource::Rule { rule, .. } => rule(y),
        };
        RatioTriple::new(t.l, t.g, t.r)
    }

    /// Number of past symbols a query depends on (0 if none).
    pub fn depth(&self) -> usize {
        match self {
            ScalingSource::Table(t) => t.depth,
            _ => 0,
        }
    }

    /// Multiplicative exponent of each query against the true scaling function.
    pub fn query_exponent(&self) -> f64 {
        match self {
            ScalingSource::Table(t) => t.query_exponent(),
            _ => 0.0,
        }
    }

    pub fn describe(&self) -> String {
        format!("{self:?}")
    }
}

/// 2^depth ordered disjoint closed subintervals of [0,1].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RescaledSet {
    pub depth: usize,
    #[serde(serialize_with = "serialize_intervals")]
    pub intervals: Vec<(Real, Real)>,
    pub provenance: String,
}

fn serialize_intervals<S: serde::Serializer>(v: &[(Real, Real)], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for (a, b) in v {
        seq.serialize_element(&(a.to_f64(), b.to_f64()))?;
    }
    seq.end()
}

impl RescaledSet {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn intervals_f64(&self) -> Vec<(f64, f64)> {
        self.intervals.iter().map(|(a, b)| (a.to_f64(), b.to_f64())).collect()
    }

    /// All endpoints in increasing order.
    pub fn endpoints(&self) -> Vec<&Real> {
        self.intervals.iter().flat_map(|(a, b)| [a, b]).collect()
    }

    /// Largest endpoint difference against another set of the same shape.
    pub fn max_endpoint_diff(&self, other: &RescaledSet) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Parameter("sets have different numbers of intervals".into()));
        }
        Ok(self
            .endpoints()
            .iter()
            .zip(other.endpoints())
            .map(|(a, b)| Float::with_val(a.prec(), *a - b).abs().to_f64())
            .fold(0.0, f64::max))
    }

    /// Check ordering, disjointness and the unit-interval end conditions.
    pub fn check(&self, tol: f64) -> Result<()> {
        let ends = self.endpoints();
        let (first, last) = match (ends.first(), ends.last()) {
            (Some(a), Some(b)) => (a.to_f64(), b.to_f64()),
            _ => return Err(Error::EmptySet),
        };
        if first.abs() > tol || (last - 1.0).abs() > tol {
            return Err(Error::Invariant(format!("set spans [{first}, {last}] instead of [0, 1]")));
        }
        if ends.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::Invariant("intervals are not disjoint and increasing".into()));
        }
        Ok(())
    }
}

fn subdivide(left: &Real, right: &Real, t: &RatioTriple) -> [(Real, Real); 2] {
    let p = left.prec();
    let len = Float::with_val(p, right - left);
    let a = Float::with_val(p, &len * t.l) + left;
    let b = Float::with_val(p, right - Float::with_val(p, &len * t.r));
    [(left.clone(), a), (b, right.clone())]
}

/// Level-`depth` intervals below the node [left, right] whose subdivision uses the past `past`.
fn build_subtree(src: &ScalingSource, past: &DualWord, left: Real, right: Real, depth: usize) -> Result<Vec<(Real, Real)>> {
    let mut nodes = vec![(past.clone(), left, right)];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(nodes.len() * 2);
        for (y, l, r) in nodes {
            let t = src.query(&y)?;
            let [c0, c1] = subdivide(&l, &r, &t);
            next.push((y.push(0), c0.0, c0.1));
            next.push((y.push(1), c1.0, c1.1));
        }
        nodes = next;
    }
    Ok(nodes.into_iter().map(|(_, l, r)| (l, r)).collect())
}

pub fn build_ratio_set(src: &ScalingSource, y: &DualWord, n: usize, prec: u32, cap: usize) -> Result<RescaledSet> {
    check_depth(n, cap)?;
    let past = y.padded(src.depth());
    let intervals = build_subtree(src, &past, Float::with_val(prec, 0), Float::with_val(prec, 1), n)?;
    Ok(RescaledSet { depth: n, intervals, provenance: format!("ratio set of {} at past {}", src.describe(), past.human()) })
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub n: usize,
    pub depth: usize,
    pub compared: usize,
    pub max_diff: f64,
}

/// Compare the rescaled sub-hierarchy of C^y below I^y_{x_0…x_{n−1}} with C built at the shifted past.
pub fn scenery_identity_check(
    src: &ScalingSource,
    window: &BiWindow,
    n: usize,
    depth: usize,
    prec: u32,
    tol: f64,
) -> Result<IdentityReport> {
    if window.future.len() < n {
        return Err(Error::Parameter(format!("window future has {} symbols, need {n}", window.future.len())));
    }
    let mut past = window.past.padded(src.depth());
    let mut left = Float::with_val(prec, 0);
    let mut right = Float::with_val(prec, 1);
    for &x in &window.future.symbols()[..n] {
        let t = src.query(&past)?;
        let [c0, c1] = subdivide(&left, &right, &t);
        (left, right) = if x == 0 { c0 } else { c1 };
        past = past.push(x);
    }
    let below = build_subtree(src, &past, left.clone(), right.clone(), depth)?;
    let len = Float::with_val(prec, &right - &left);
    let shifted = build_ratio_set(src, &window.shift_n(n)?.past, depth, prec, usize::MAX)?;
    let mut max_diff = 0.0f64;
    for (i, ((a, b), (c, d))) in below.iter().zip(&shifted.intervals).enumerate() {
        for (k, (u, v)) in [(a, c), (b, d)].into_iter().enumerate() {
            let rescaled = Float::with_val(prec, u - &left) / &len;
            let diff = Float::with_val(prec, &rescaled - v).abs().to_f64();
            if diff > tol {
                return Err(Error::IdentityMismatch { index: 2 * i + k, diff });
            }
            max_diff = max_diff.max(diff);
        }
    }
    Ok(IdentityReport { n, depth, compared: 2 * below.len(), max_diff })
}

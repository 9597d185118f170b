//! Ratio geometry of cylinders, estimates of the scaling function and Hölder diagnostics.
//!
//! Error bounds are multiplicative: a triple `t` with exponent `e` stands for the
//! componentwise range `t·e^{±e}`.

use rayon::prelude::*;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::symbolic::{beta_metric, check_depth, DualWord, Word};
use crate::system::ContractionSystem;

pub const TABLE_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_TABLE_BUDGET: usize = 1 << 20;

/// Normalized (left, gap, right) lengths of a subdivided interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioTriple {
    pub l: f64,
    pub g: f64,
    pub r: f64,
}

impl RatioTriple {
    /// Checked constructor: components in (0,1) summing to 1 within 1e-12.
    pub fn new(l: f64, g: f64, r: f64) -> Result<Self> {
        let t = RatioTriple { l, g, r };
        if t.in_open_simplex() {
            Ok(t)
        } else {
            Err(Error::OutsideSimplex { l, g, r })
        }
    }

    pub fn in_open_simplex(&self) -> bool {
        let inside = |v: f64| v > 0.0 && v < 1.0;
        inside(self.l) && inside(self.g) && inside(self.r) && (self.l + self.g + self.r - 1.0).abs() <= 1e-12
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.l, self.g, self.r]
    }

    pub fn min_component(&self) -> f64 {
        self.l.min(self.g).min(self.r)
    }

    /// ‖log self − log other‖_∞.
    pub fn log_distance(&self, other: &RatioTriple) -> f64 {
        self.as_array()
            .iter()
            .zip(other.as_array())
            .map(|(a, b)| (a.ln() - b.ln()).abs())
            .fold(0.0, f64::max)
    }

    /// ‖self − other‖_∞.
    pub fn distance(&self, other: &RatioTriple) -> f64 {
        self.as_array().iter().zip(other.as_array()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// (|I_{w0}|, |G_w|, |I_{w1}|)/|I_w|, computed in working precision.
pub fn ratio_geometry(sys: &ContractionSystem, w: &Word) -> Result<RatioTriple> {
    sys.check_depth(w.len() + 1)?;
    let p = sys.precision();
    let (g0, g1) = sys.root_gap();
    let pts = [Float::with_val(p, 0), g0.clone(), g1.clone(), Float::with_val(p, 1)];
    let mut tmp = Float::new(p);
    let img: Vec<Float> = pts
        .into_iter()
        .map(|mut x| {
            sys.apply_word(w.symbols(), &mut x, &mut tmp);
            x
        })
        .collect();
    let whole = Float::with_val(p, &img[3] - &img[0]);
    let part = |a: usize, b: usize| (Float::with_val(p, &img[b] - &img[a]) / &whole).to_f64();
    RatioTriple::new(part(0, 1), part(1, 2), part(2, 3))
}

pub fn ratio_dual(sys: &ContractionSystem, y: &DualWord) -> Result<RatioTriple> {
    if y.is_empty() {
        return Err(Error::Parameter("ratio_dual needs a nonempty dual word".into()));
    }
    ratio_geometry(sys, &y.as_word())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalingEstimate {
    pub triple: RatioTriple,
    /// Distance exponent to R at the zero-padded completion, K·β^{(n−1)γ}.
    pub estimation_exponent: f64,
    /// Distance exponent between completions agreeing on |y| symbols, 2K·β^{(|y|−1)γ}.
    pub tail_exponent: f64,
}

impl ScalingEstimate {
    /// Multiplicative exponent valid for every completion of y.
    pub fn err(&self) -> f64 {
        self.estimation_exponent + self.tail_exponent
    }
}

/// Exponent K·β^{(n−1)γ} bounding ‖log R_n(y) − log R(y)‖ for |y| = n.
pub fn estimation_exponent(sys: &ContractionSystem, n: usize) -> f64 {
    if sys.k() == 0.0 {
        return 0.0;
    }
    sys.k() * sys.rate().powi(n as i32 - 1)
}

pub fn scaling_estimate(sys: &ContractionSystem, y: &DualWord, est_depth: usize) -> Result<ScalingEstimate> {
    if est_depth < y.len() {
        return Err(Error::Parameter(format!("est_depth {est_depth} is shorter than the dual word ({})", y.len())));
    }
    let triple = ratio_dual(sys, &y.padded(est_depth))?;
    Ok(ScalingEstimate {
        triple,
        estimation_exponent: estimation_exponent(sys, est_depth),
        tail_exponent: 2.0 * estimation_exponent(sys, y.len()),
    })
}

/// Estimated scaling function on the 2^m dual cylinders of length m.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    pub version: u32,
    pub depth: usize,
    pub est_depth: usize,
    /// Entries indexed by the binary value of the dual word (y_{-m} most significant).
    pub entries: Vec<RatioTriple>,
    /// Multiplicative slack e^{Kβ^{(n−1)γ}} − 1 against R at each padded word.
    pub err_bound: f64,
    /// Additional slack e^{2Kβ^{(m−1)γ}} − 1 covering arbitrary completions of a length-m suffix.
    pub tail_bound: f64,
    pub k: f64,
    pub beta: f64,
    pub gamma: f64,
    pub system: Option<SystemConfig>,
}

impl ScalingTable {
    pub fn lookup(&self, y: &DualWord) -> RatioTriple {
        self.entries[y.padded(self.depth).suffix(self.depth).index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (DualWord, &RatioTriple)> + '_ {
        self.entries.iter().enumerate().map(move |(i, t)| (DualWord::from_index(i, self.depth), t))
    }

    /// Multiplicative exponent covering both estimation and suffix truncation.
    pub fn query_exponent(&self) -> f64 {
        (1.0 + self.err_bound).ln() + (1.0 + self.tail_bound).ln()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: ScalingTable = serde_json::from_str(s)?;
        if t.version != TABLE_FORMAT_VERSION {
            return Err(Error::Parameter(format!("unsupported table version {}", t.version)));
        }
        if t.entries.len() != 1usize << t.depth {
            return Err(Error::Parameter("table has the wrong number of entries".into()));
        }
        for e in &t.entries {
            RatioTriple::new(e.l, e.g, e.r)?;
        }
        Ok(t)
    }
}

pub fn build_scaling_table(sys: &ContractionSystem, m: usize, n: usize, budget: usize) -> Result<ScalingTable> {
    if m > n {
        return Err(Error::Parameter(format!("table depth {m} exceeds estimation depth {n}")));
    }
    check_depth(n + 1, sys.depth_cap())?;
    let size = 1usize.checked_shl(m as u32).unwrap_or(usize::MAX);
    if size > budget {
        return Err(Error::Budget { requested: size, budget });
    }
    let entries = (0..size)
        .into_par_iter()
        .map(|i| scaling_estimate(sys, &DualWord::from_index(i, m), n).map(|e| e.triple))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScalingTable {
        version: TABLE_FORMAT_VERSION,
        depth: m,
        est_depth: n,
        entries,
        err_bound: estimation_exponent(sys, n).exp_m1(),
        tail_bound: (2.0 * estimation_exponent(sys, m)).exp_m1(),
        k: sys.k(),
        beta: sys.beta(),
        gamma: sys.gamma(),
        system: Some(sys.config().clone()),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderReport {
    pub pairs: usize,
    /// Largest LHS/bound over pairs with a positive bound.
    pub max_ratio: f64,
    pub max_lhs: f64,
    pub worst_pair: Option<(String, String)>,
}

/// Check ‖log R(y) − log R(w)‖ ≤ 2K·d_β(y,w)^γ + 2·log(1 + err_bound) over all pairs of entries.
pub fn holder_diagnostic(table: &ScalingTable, beta: f64, gamma: f64, k: f64) -> Result<HolderReport> {
    let m = table.depth;
    let slack = 2.0 * (1.0 + table.err_bound).ln();
    let words: Vec<DualWord> = (0..table.entries.len()).map(|i| DualWord::from_index(i, m)).collect();
    let rows: Vec<(f64, f64, usize, usize)> = (0..words.len())
        .into_par_iter()
        .map(|i| {
            let mut best = (0.0f64, 0.0f64, i, i);
            for j in 0..words.len() {
                let lhs = table.entries[i].log_distance(&table.entries[j]);
                let d = beta_metric(&words[i], &words[j], beta).map(|d| d.upper()).unwrap_or(1.0);
                let bound = 2.0 * k * d.powf(gamma) + slack;
                let ratio = if bound > 0.0 {
                    lhs / bound
                } else if lhs > 1e-13 {
                    f64::INFINITY
                } else {
                    0.0
                };
                if ratio > best.0 {
                    best = (ratio, lhs, i, j);
                }
                best.1 = best.1.max(lhs);
            }
            best
        })
        .collect();
    let mut report = HolderReport { pairs: words.len() * words.len(), max_ratio: 0.0, max_lhs: 0.0, worst_pair: None };
    for (ratio, lhs, i, j) in rows {
        report.max_lhs = report.max_lhs.max(lhs);
        if ratio > report.max_ratio {
            report.max_ratio = ratio;
            report.worst_pair = Some((words[i].to_string(), words[j].to_string()));
        }
    }
    if report.max_ratio > 1.0 {
        let (y, w) = report.worst_pair.clone().unwrap_or_default();
        return Err(Error::Holder { y, w, lhs: report.max_lhs, bound: report.max_lhs / report.max_ratio });
    }
    Ok(report)
}

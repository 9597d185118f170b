//! Pressure roots, conformal and Gibbs weights on cylinders.

use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hierarchy::cylinder;
use crate::real::Real;
use crate::symbolic::Word;
use crate::system::ContractionSystem;

const S_LO: f64 = 0.01;
const S_HI: f64 = 0.99;
const MAX_BISECTIONS: usize = 200;
const EIGEN_TOL: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 20_000;

/// Nonnegative weights on the 2^n cylinders of level n, indexed by word value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CylinderMeasure {
    pub depth: usize,
    pub weights: Vec<f64>,
    pub total: f64,
}

impl CylinderMeasure {
    pub fn new(depth: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != 1usize << depth {
            return Err(Error::Parameter(format!("expected {} weights, got {}", 1usize << depth, weights.len())));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Parameter("weights must be finite and nonnegative".into()));
        }
        let total = crate::stats::sum(weights.iter().copied());
        Ok(CylinderMeasure { depth, weights, total })
    }

    pub fn weight(&self, w: &Word) -> f64 {
        if w.len() == self.depth {
            self.weights[w.index()]
        } else {
            self.marginal(w.len()).weights[w.index()]
        }
    }

    /// Weights of the level-k cylinders (k ≤ depth), summing children into parents.
    pub fn marginal(&self, k: usize) -> CylinderMeasure {
        let k = k.min(self.depth);
        let block = 1usize << (self.depth - k);
        let weights: Vec<f64> = self.weights.chunks(block).map(|c| c.iter().sum()).collect();
        CylinderMeasure { depth: k, total: crate::stats::sum(weights.iter().copied()), weights }
    }

    pub fn normalized(&self) -> CylinderMeasure {
        let weights = self.weights.iter().map(|w| w / self.total).collect();
        CylinderMeasure { depth: self.depth, weights, total: 1.0 }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Word, f64)> + '_ {
        self.weights.iter().enumerate().map(move |(i, &w)| (Word::from_index(i, self.depth), w))
    }
}

/// Endpoints of all levels 0..=n, built by prepending the outer map: I_{s·w} = φ_s(I_w).
pub fn level_endpoints_upto(sys: &ContractionSystem, n: usize) -> Result<Vec<Vec<(Real, Real)>>> {
    sys.check_depth(n)?;
    let p = sys.precision();
    let mut levels = vec![vec![(Float::with_val(p, 0), Float::with_val(p, 1))]];
    let mut tmp = Float::new(p);
    for _ in 0..n {
        let prev = levels.last().expect("level 0 exists");
        let mut next = Vec::with_capacity(prev.len() * 2);
        for s in 0..2u8 {
            let f = &sys.phi(s).form;
            for (a, b) in prev {
                let (mut a, mut b) = (a.clone(), b.clone());
                f.apply(&mut a, &mut tmp);
                f.apply(&mut b, &mut tmp);
                next.push((a, b));
            }
        }
        levels.push(next);
    }
    Ok(levels)
}

fn log_lengths(level: &[(Real, Real)]) -> Vec<f64> {
    level.iter().map(|(a, b)| Float::with_val(a.prec(), b - a).ln().to_f64()).collect()
}

/// log Σ exp(s·ℓ_i).
fn log_partition(logs: &[f64], s: f64) -> f64 {
    let m = logs.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(s * b));
    m + logs.iter().map(|&l| (s * l - m).exp()).sum::<f64>().ln()
}

/// Bisection for a decreasing function on [S_LO, S_HI]; returns the final bracket.
fn bisect(f: impl Fn(f64) -> f64, tol: f64) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (S_LO, S_HI);
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo >= 0.0 && fhi <= 0.0) {
        return Err(Error::NonBracketing { lo, hi });
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v == 0.0 {
            return Ok((mid, mid));
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

#[derive(Clone, Debug, Serialize)]
pub struct DimensionResult {
    /// Root of Z_n(s) = Z_{n−1}(s) with Z_n(s) = Σ_{|w|=n} |I_w|^s.
    pub d: f64,
    pub depth_used: usize,
    /// Bisection bracket around `d`, of width at most the requested tolerance.
    pub bracket: (f64, f64),
    /// Bracket certified to contain the dimension, from super- and subadditivity of
    /// log Z_k(s) ± s·c/(1−β^γ), intersected over depths 1..=n.
    pub certified: (f64, f64),
    /// Root of Z_n(s) = 1.
    pub moran: f64,
}

pub fn bowen_root(sys: &ContractionSystem, n: usize, tol: f64) -> Result<DimensionResult> {
    if n < 2 {
        return Err(Error::Parameter("bowen_root needs depth n ≥ 2".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter("tolerance must be positive".into()));
    }
    let levels = level_endpoints_upto(sys, n)?;
    let logs: Vec<Vec<f64>> = levels.iter().map(|l| log_lengths(l)).collect();
    let (zn, zprev) = (&logs[n], &logs[n - 1]);
    let bracket = bisect(|s| log_partition(zn, s) - log_partition(zprev, s), tol)?;
    let d = 0.5 * (bracket.0 + bracket.1);
    let moran_bracket = bisect(|s| log_partition(zn, s), tol)?;
    let spread = sys.renormalized_log_d_constant();
    let mut certified = (S_LO, S_HI);
    for level in logs.iter().skip(1) {
        let lo = bisect(|s| log_partition(level, s) - s * spread, tol);
        let hi = bisect(|s| log_partition(level, s) + s * spread, tol);
        if let (Ok(lo), Ok(hi)) = (lo, hi) {
            certified.0 = certified.0.max(lo.0);
            certified.1 = certified.1.min(hi.1);
        }
    }
    if certified.0 > d || certified.1 < d {
        return Err(Error::Invariant(format!("root {d} escapes certified bracket {certified:?}")));
    }
    Ok(DimensionResult {
        d,
        depth_used: n,
        bracket,
        certified,
        moran: 0.5 * (moran_bracket.0 + moran_bracket.1),
    })
}

/// Leading eigen-data of the depth-n transfer operator for the potential −d·log|DS|.
#[derive(Clone, Debug)]
pub struct TransferSpectrum {
    pub depth: usize,
    pub lambda: f64,
    /// Left eigenvector, normalized to total 1.
    pub left: Vec<f64>,
    /// Right eigenvector, normalized so Σ left·right = 1.
    pub right: Vec<f64>,
    /// Residuals of the two eigen-equations.
    pub left_residual: Vec<f64>,
    pub right_residual: Vec<f64>,
}

/// Entry u → v = prefix_n(s·u) carries |Dφ_s(x_u)|^d, x_u the left endpoint of I_u.
fn transfer_matrix(sys: &ContractionSystem, d: f64, n: usize) -> Result<Vec<[(usize, f64); 2]>> {
    sys.check_depth(n)?;
    if n == 0 {
        return Err(Error::Parameter("transfer operator needs depth ≥ 1".into()));
    }
    let half = 1usize << (n - 1);
    let rows: Vec<[(usize, f64); 2]> = (0..1usize << n)
        .map(|u| {
            let x = cylinder(sys, &Word::from_index(u, n)).left;
            [0u8, 1].map(|s| {
                let v = s as usize * half + (u >> 1);
                (v, sys.phi(s).form.deriv(&x).to_f64().powf(d))
            })
        })
        .collect();
    Ok(rows)
}

pub fn transfer_spectrum(sys: &ContractionSystem, d: f64, n: usize) -> Result<TransferSpectrum> {
    let rows = transfer_matrix(sys, d, n)?;
    let size = rows.len();
    let apply_left = |m: &[f64]| {
        let mut out = vec![0.0; size];
        for (u, row) in rows.iter().enumerate() {
            for &(v, w) in row {
                out[v] += m[u] * w;
            }
        }
        out
    };
    let apply_right = |h: &[f64]| -> Vec<f64> { rows.iter().map(|row| row.iter().map(|&(v, w)| w * h[v]).sum()).collect() };
    let iterate = |apply: &dyn Fn(&[f64]) -> Vec<f64>| -> Result<(f64, Vec<f64>)> {
        let mut x = vec![1.0 / size as f64; size];
        for _ in 0..EIGEN_MAX_ITER {
            let y = apply(&x);
            let total: f64 = y.iter().sum();
            let y: Vec<f64> = y.iter().map(|v| v / total).collect();
            let change = x.iter().zip(&y).map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max);
            x = y;
            if change <= EIGEN_TOL {
                let lambda = apply(&x).iter().sum::<f64>();
                return Ok((lambda, x));
            }
        }
        Err(Error::EigenNonConvergence(EIGEN_MAX_ITER))
    };
    let (lambda, left) = iterate(&apply_left)?;
    let (_, mut right) = iterate(&apply_right)?;
    let pairing: f64 = left.iter().zip(&right).map(|(a, b)| a * b).sum();
    right.iter_mut().for_each(|h| *h /= pairing);
    let left_residual = apply_left(&left).iter().zip(&left).map(|(a, b)| a - lambda * b).collect();
    let right_residual = apply_right(&right).iter().zip(&right).map(|(a, b)| a - lambda * b).collect();
    Ok(TransferSpectrum { depth: n, lambda, left, right, left_residual, right_residual })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConformalWeights {
    pub measure: CylinderMeasure,
    pub lambda: f64,
    /// Certified: true conformal weights of level-n cylinders lie within e^{±band}
    /// of normalized |I_w|^d, band = d·c/(1−β^γ).
    pub band: f64,
    /// Observed range of weight / normalized |I_w|^d.
    pub proxy_ratio: (f64, f64),
}

/// Conformal weights: the left eigenvector of the depth-n transfer operator.
pub fn conformal_weights(sys: &ContractionSystem, d: f64, n: usize) -> Result<ConformalWeights> {
    let spec = transfer_spectrum(sys, d, n)?;
    let proxy = proxy_weights(sys, d, n)?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for (m, p) in spec.left.iter().zip(&proxy.weights) {
        lo = lo.min(m / p);
        hi = hi.max(m / p);
    }
    Ok(ConformalWeights {
        measure: CylinderMeasure::new(n, spec.left)?,
        lambda: spec.lambda,
        band: d * sys.renormalized_log_d_constant(),
        proxy_ratio: (lo, hi),
    })
}

/// Normalized |I_w|^d.
pub fn proxy_weights(sys: &ContractionSystem, d: f64, n: usize) -> Result<CylinderMeasure> {
    let levels = level_endpoints_upto(sys, n)?;
    let logs = log_lengths(&levels[n]);
    let z = log_partition(&logs, d);
    CylinderMeasure::new(n, logs.iter().map(|l| (d * l - z).exp()).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct GibbsWeights {
    pub measure: CylinderMeasure,
    pub lambda: f64,
    /// max over level-(n−1) cylinders A of |ν(σ^{-1}A) − ν(A)|.
    pub invariance_defect: f64,
    /// Bound on the defect from the eigen-equation residuals.
    pub defect_bound: f64,
    /// Range of Gibbs / conformal weight ratios.
    pub conformal_ratio: (f64, f64),
}

pub fn gibbs_weights(sys: &ContractionSystem, d: f64, n: usize) -> Result<GibbsWeights> {
    if n < 2 {
        return Err(Error::Parameter("gibbs_weights needs depth ≥ 2".into()));
    }
    let spec = transfer_spectrum(sys, d, n)?;
    let weights: Vec<f64> = spec.left.iter().zip(&spec.right).map(|(m, h)| m * h).collect();
    let total: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let half = 1usize << (n - 1);
    let mut defect = 0.0f64;
    let mut bound = 0.0f64;
    for a in 0..half {
        let pre = weights[a] + weights[half + a];
        let post = weights[2 * a] + weights[2 * a + 1];
        defect = defect.max((pre - post).abs());
        let rh: f64 = (0..2).map(|t| spec.left[2 * a + t] * spec.right_residual[2 * a + t].abs()).sum();
        let rm: f64 = [a, half + a].iter().map(|&v| spec.left_residual[v].abs() * spec.right[v]).sum();
        bound = bound.max((rh + rm) / (spec.lambda * total) + 4.0 * f64::EPSILON * (pre + post));
    }
    let ratio = spec.right.iter().map(|h| h / total);
    let conformal_ratio = ratio.fold((f64::INFINITY, 0.0f64), |acc, r| (acc.0.min(r), acc.1.max(r)));
    Ok(GibbsWeights {
        measure: CylinderMeasure::new(n, weights)?,
        lambda: spec.lambda,
        invariance_defect: defect,
        defect_bound: bound,
        conformal_ratio,
    })
}

/// Weights below I_w moved to [0,1] by its rescaling, with the conformal factor |I_w|^{-d}.
pub fn restrict_rescale(sys: &ContractionSystem, mu: &CylinderMeasure, w: &Word, d: f64) -> Result<CylinderMeasure> {
    if w.len() >= mu.depth {
        return Err(Error::Parameter(format!("word length {} must be below the measure depth {}", w.len(), mu.depth)));
    }
    let k = mu.depth - w.len();
    let start = w.index() << k;
    let block = &mu.weights[start..start + (1usize << k)];
    if block.iter().sum::<f64>() <= 0.0 {
        return Err(Error::ZeroMass(w.to_string()));
    }
    let factor = (-d * cylinder(sys, w).length().ln().to_f64()).exp();
    CylinderMeasure::new(k, block.iter().map(|v| v * factor).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;

    fn pert() -> &'static ContractionSystem {
        static S: std::sync::OnceLock<ContractionSystem> = std::sync::OnceLock::new();
        S.get_or_init(|| SystemConfig::perturbed(0.1, 0.1).build().unwrap())
    }

    #[test]
    fn middle_third_dimension_every_depth() {
        let mt = SystemConfig::middle_third().build().unwrap();
        let exact = 2f64.ln() / 3f64.ln();
        for n in [2, 5, 8] {
            let r = bowen_root(&mt, n, 1e-12).unwrap();
            assert!((r.d - exact).abs() < 1e-9, "n = {n}: {}", r.d);
            assert!((r.moran - exact).abs() < 1e-9);
            assert!(r.bracket.0 <= r.d && r.d <= r.bracket.1 && r.bracket.1 - r.bracket.0 <= 1e-12);
        }
    }

    #[test]
    fn moran_exactness() {
        let r = bowen_root(&SystemConfig::linear(0.25, 0.25).build().unwrap(), 6, 1e-13).unwrap();
        assert!((r.d - 0.5).abs() < 1e-9);
        let lin = SystemConfig::linear(0.25, 0.5).build().unwrap();
        for n in 2..9 {
            let r = bowen_root(&lin, n, 1e-14).unwrap();
            assert!((0.25f64.powf(r.d) + 0.5f64.powf(r.d) - 1.0).abs() < 1e-12);
            assert!((r.certified.1 - r.certified.0) < 1e-12);
        }
    }

    #[test]
    fn perturbed_dimension_stable() {
        let a = bowen_root(pert(), 14, 1e-10).unwrap();
        let b = bowen_root(pert(), 16, 1e-10).unwrap();
        assert!((a.d - b.d).abs() < 1e-6);
        assert!(b.certified.0 <= b.d && b.d <= b.certified.1);
        // running intersection makes certified brackets nested
        assert!(a.certified.0 <= b.certified.0 && b.certified.1 <= a.certified.1);
    }

    #[test]
    fn conformal_examples() {
        let mt = SystemConfig::middle_third().build().unwrap();
        let d = 2f64.ln() / 3f64.ln();
        let c = conformal_weights(&mt, d, 3).unwrap();
        assert!(c.measure.weights.iter().all(|w| (w - 0.125).abs() < 1e-14));
        let lin = SystemConfig::linear(0.25, 0.5).build().unwrap();
        let d = bowen_root(&lin, 4, 1e-15).unwrap().d;
        let c = conformal_weights(&lin, d, 4).unwrap();
        for (w, v) in c.measure.iter() {
            let prod: f64 = w.symbols().iter().map(|&s| if s == 0 { 0.25f64 } else { 0.5 }.powf(d)).product();
            assert!((v - prod).abs() < 1e-12);
        }
    }

    #[test]
    fn conformal_refinement_within_band() {
        let p = pert();
        let d = bowen_root(p, 14, 1e-12).unwrap().d;
        for n in [6, 8, 10] {
            let coarse = conformal_weights(p, d, n).unwrap().measure;
            let fine = conformal_weights(p, d, n + 1).unwrap().measure.marginal(n);
            let band = p.k() * d * p.rate().powi(n as i32);
            for (a, b) in coarse.weights.iter().zip(&fine.weights) {
                assert!((a / b).ln().abs() <= band, "n = {n}");
            }
            assert!((coarse.total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gibbs_examples() {
        let mt = SystemConfig::middle_third().build().unwrap();
        let g = gibbs_weights(&mt, 2f64.ln() / 3f64.ln(), 5).unwrap();
        assert!(g.measure.weights.iter().all(|w| (w - 1.0 / 32.0).abs() < 1e-15));
        assert!(g.invariance_defect < 1e-15);
        let lin = SystemConfig::linear(0.25, 0.5).build().unwrap();
        let d = bowen_root(&lin, 4, 1e-15).unwrap().d;
        let g = gibbs_weights(&lin, d, 5).unwrap();
        for (w, v) in g.measure.iter() {
            let prod: f64 = w.symbols().iter().map(|&s| if s == 0 { 0.25f64 } else { 0.5 }.powf(d)).product();
            assert!((v - prod).abs() < 1e-12);
        }
        assert!(g.invariance_defect < 1e-14);
    }

    #[test]
    fn gibbs_perturbed_invariant_and_equivalent() {
        let p = pert();
        let d = bowen_root(p, 14, 1e-12).unwrap().d;
        let g = gibbs_weights(p, d, 12).unwrap();
        assert!((g.measure.total - 1.0).abs() < 1e-14);
        assert!(g.invariance_defect <= 1e-6);
        assert!(g.invariance_defect <= g.defect_bound);
        let c = conformal_weights(p, d, 12).unwrap().measure;
        for (a, b) in g.measure.weights.iter().zip(&c.weights) {
            assert!((a / b).ln().abs() <= 2.0 * p.k());
        }
    }

    #[test]
    fn marginals_are_consistent() {
        let g = gibbs_weights(pert(), 0.6278, 8).unwrap().measure;
        let m4 = g.marginal(4);
        let m3 = g.marginal(3);
        for (i, w) in m3.weights.iter().enumerate() {
            assert!((w - m4.weights[2 * i] - m4.weights[2 * i + 1]).abs() < 1e-10);
        }
    }

    #[test]
    fn restriction_examples() {
        let mt = SystemConfig::middle_third().build().unwrap();
        let d = 2f64.ln() / 3f64.ln();
        let mu = conformal_weights(&mt, d, 6).unwrap().measure;
        let r = restrict_rescale(&mt, &mu, &"0".parse().unwrap(), d).unwrap();
        let whole = mu.marginal(5);
        for (a, b) in r.weights.iter().zip(&whole.weights) {
            assert!((a - b).abs() < 1e-14);
        }
        let lin = SystemConfig::linear(0.25, 0.5).build().unwrap();
        let d = bowen_root(&lin, 4, 1e-15).unwrap().d;
        let mu = conformal_weights(&lin, d, 7).unwrap().measure;
        let r = restrict_rescale(&lin, &mu, &"1".parse().unwrap(), d).unwrap();
        for (a, b) in r.weights.iter().zip(&mu.marginal(6).weights) {
            assert!((a - b).abs() < 1e-12);
        }
        let zero = CylinderMeasure::new(2, vec![0.0, 0.0, 0.5, 0.5]).unwrap();
        assert!(matches!(restrict_rescale(&mt, &zero, &"0".parse().unwrap(), d), Err(Error::ZeroMass(_))));
    }
}

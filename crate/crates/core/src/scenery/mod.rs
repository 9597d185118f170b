//! Renormalized conjugacies Φ^y_n, their limits, limit sets and the scenery sequence.
//!
//! For a past y = …y_{−2}y_{−1}, Φ^y_n is φ_{y_{−n}}∘…∘φ_{y_{−1}} followed by the affine
//! map sending I_{y_{−n}…y_{−1}} onto [0,1]. The limit set C(y) is the image of C under
//! the limit Φ^y. Zooming toward x = x_0x_1… the rescaled copy of C ∩ I_{x_0…x_n} is
//! the image of C under Φ^y_{n+1} for the past y = x_0…x_n.

pub mod grid;
pub mod metrics;
pub mod probe;
pub mod rigidity;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ratioset::RescaledSet;
use crate::real::Real;
use crate::symbolic::{DualWord, Word};
use crate::system::ContractionSystem;
use crate::thermo::level_endpoints_upto;

pub use grid::{dyadic_grid, ConjugacyGrid, DEFAULT_GRID_POINTS};
pub use metrics::{d_c, d_h, d_m, measure_modulus, MetricKind, MetricValue, SetMeasure};

/// Certified C¹ distance k_1·β^{nγ} between Φ^y_n and its limit.
pub fn conjugacy_bound(sys: &ContractionSystem, n: usize) -> f64 {
    if sys.k() == 0.0 {
        return 0.0;
    }
    sys.k1() * sys.rate().powi(n as i32)
}

/// Smallest n ≤ depth cap with k_1·β^{nγ} ≤ tol, or the cap.
pub fn approximant_depth(sys: &ContractionSystem, tol: f64) -> usize {
    (0..sys.depth_cap()).find(|&n| conjugacy_bound(sys, n) <= tol).unwrap_or(sys.depth_cap())
}

/// Φ_w = rescale(I_w) ∘ φ_w sampled with two derivatives.
pub fn renormalized(sys: &ContractionSystem, w: &Word, grid: &[f64]) -> Result<ConjugacyGrid> {
    sys.check_depth(w.len())?;
    let p = sys.precision();
    let s = w.symbols();
    let left = sys.eval_word(s, &Float::with_val(p, 0));
    let right = sys.eval_word(s, &Float::with_val(p, 1));
    let len = Float::with_val(p, &right - &left);
    let rows: Vec<[f64; 3]> = grid
        .par_iter()
        .map(|&x| {
            let j = sys.jet_word(s, &Float::with_val(p, x));
            let v = Float::with_val(p, &j.v - &left) / &len;
            let d1 = Float::with_val(p, &j.d1 / &len);
            let d2 = Float::with_val(p, &j.d2 / &len);
            [v.to_f64(), d1.to_f64(), d2.to_f64()]
        })
        .collect();
    ConjugacyGrid::new(
        grid.to_vec(),
        rows.iter().map(|r| r[0]).collect(),
        rows.iter().map(|r| r[1]).collect(),
        Some(rows.iter().map(|r| r[2]).collect()),
    )
}

/// Φ^y_n on the grid.
pub fn phi_n(sys: &ContractionSystem, y: &DualWord, n: usize, grid: &[f64]) -> Result<ConjugacyGrid> {
    if n > y.len() {
        return Err(Error::Parameter(format!("n = {n} exceeds the past length {}", y.len())));
    }
    renormalized(sys, &y.suffix(n).as_word(), grid)
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitConjugacy {
    pub grid: ConjugacyGrid,
    pub n_used: usize,
    /// Certified C¹ distance to the limit.
    pub bound: f64,
    /// Whether `bound` meets the requested tolerance.
    pub reached: bool,
    /// Whether the past was extended by zeros to reach `n_used`.
    pub padded: bool,
}

/// Φ^y_n for the smallest n whose certified distance to Φ^y is at most `tol`.
///
/// A past shorter than that n is extended on the remote side by zeros, which selects one
/// particular infinite past with the given last symbols. Past the depth cap the best
/// available approximant is returned with `reached = false`.
pub fn limit_conjugacy(sys: &ContractionSystem, y: &DualWord, tol: f64, grid: &[f64]) -> Result<LimitConjugacy> {
    if !(tol > 0.0) {
        return Err(Error::Parameter("tolerance must be positive".into()));
    }
    let n = approximant_depth(sys, tol);
    let bound = conjugacy_bound(sys, n);
    let past = y.padded(n);
    Ok(LimitConjugacy {
        grid: phi_n(sys, &past, n, grid)?,
        n_used: n,
        bound,
        reached: bound <= tol,
        padded: n > y.len(),
    })
}

/// Images of the level-`depth` endpoints of C under Φ_w.
fn renormalized_set(sys: &ContractionSystem, w: &Word, level: &[(Real, Real)], depth: usize, provenance: String) -> Result<RescaledSet> {
    let p = sys.precision();
    let s = w.symbols();
    let left = sys.eval_word(s, &Float::with_val(p, 0));
    let right = sys.eval_word(s, &Float::with_val(p, 1));
    let len = Float::with_val(p, &right - &left);
    let map = |x: &Real| Float::with_val(p, sys.eval_word(s, x) - &left) / &len;
    let intervals = level.par_iter().map(|(a, b)| (map(a), map(b))).collect();
    Ok(RescaledSet { depth, intervals, provenance })
}

/// Level-`depth` skeleton of C(y) = Φ^y(C), using the approximant chosen by `limit_conjugacy`.
pub fn limit_set(sys: &ContractionSystem, y: &DualWord, depth: usize, tol: f64) -> Result<(RescaledSet, f64)> {
    let n = approximant_depth(sys, tol);
    let levels = level_endpoints_upto(sys, depth)?;
    let past = y.padded(n);
    let w = past.suffix(n).as_word();
    let set = renormalized_set(sys, &w, &levels[depth], depth, format!("limit set at past {}", past.human()))?;
    Ok((set, conjugacy_bound(sys, n)))
}

/// Skeletons of C_{n,x} for n = 0..=n_max: C ∩ I_{x_0…x_n} rescaled, resolved `depth` levels below.
pub fn scenery_sequence(sys: &ContractionSystem, x_prefix: &Word, n_max: usize, depth: usize) -> Result<Vec<RescaledSet>> {
    if x_prefix.len() < n_max + depth {
        return Err(Error::InsufficientOrbit { need: n_max + depth, have: x_prefix.len() });
    }
    sys.check_depth(n_max + 1 + depth)?;
    let levels = level_endpoints_upto(sys, depth)?;
    (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let w = x_prefix.prefix(n + 1);
            renormalized_set(sys, &w, &levels[depth], depth, format!("scenery at n = {n} along {x_prefix}"))
        })
        .collect()
}

/// The past whose limit set C_{n,x} approaches: x_0…x_n with x_n most recent.
pub fn scenery_past(x_prefix: &Word, n: usize) -> DualWord {
    x_prefix.prefix(n + 1).as_dual()
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderEstimate {
    pub k2: f64,
    pub pairs: usize,
    pub seed: u64,
}

/// Empirical constant k_2 in d_C(Φ^y, Φ^w) ≤ k_2·β^{jγ} for pasts agreeing on the last j symbols,
/// measured between approximants of equal depth.
pub fn estimate_k2(sys: &ContractionSystem, pairs: usize, max_agree: usize, tol: f64, grid: &[f64], seed: u64) -> Result<HolderEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = sys.depth_cap().min(30);
    let mut k2 = 0.0f64;
    for _ in 0..pairs {
        let j = rng.gen_range(0..=max_agree);
        let (y, w) = agreeing_pair(&mut rng, len, j);
        let a = limit_conjugacy(sys, &y, tol, grid)?;
        let b = limit_conjugacy(sys, &w, tol, grid)?;
        let dist = d_c(&a.grid, &b.grid, false)?.value;
        k2 = k2.max(dist / sys.rate().powi(j as i32));
    }
    Ok(HolderEstimate { k2, pairs, seed })
}

/// Two random pasts of length `len` sharing exactly their last `j` symbols.
pub fn agreeing_pair(rng: &mut impl Rng, len: usize, j: usize) -> (DualWord, DualWord) {
    let common: Vec<u8> = (0..j).map(|_| rng.gen_range(0..2)).collect();
    let mut build = |flip: u8| {
        let mut v: Vec<u8> = (0..len - j).map(|_| rng.gen_range(0..2)).collect();
        if let Some(last) = v.last_mut() {
            *last = flip;
        }
        v.extend(&common);
        DualWord::new(v).expect("binary symbols")
    };
    let y = build(0);
    let w = build(1);
    (y, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;
    use crate::hierarchy::level_intervals;

    fn pert() -> &'static ContractionSystem {
        static S: std::sync::OnceLock<ContractionSystem> = std::sync::OnceLock::new();
        S.get_or_init(|| SystemConfig::perturbed(0.1, 0.1).build().unwrap())
    }

    fn grid() -> Vec<f64> {
        dyadic_grid(257).unwrap()
    }

    #[test]
    fn affine_conjugacies_are_identity() {
        for cfg in [SystemConfig::middle_third(), SystemConfig::linear(0.25, 0.5)] {
            let sys = cfg.build().unwrap();
            let id = ConjugacyGrid::identity(grid()).unwrap();
            let y: DualWord = "0110100".parse().unwrap();
            for n in [0, 3, 7] {
                let f = phi_n(&sys, &y, n, &grid()).unwrap();
                assert!(d_c(&f, &id, false).unwrap().value < 1e-12);
            }
            let lim = limit_conjugacy(&sys, &y, 1e-10, &grid()).unwrap();
            assert_eq!((lim.n_used, lim.bound), (0, 0.0));
        }
    }

    #[test]
    fn perturbed_derivative_envelope() {
        let p = pert();
        let y = DualWord::new((0..12).map(|i| (i % 2) as u8).collect()).unwrap();
        let f = phi_n(p, &y, 12, &grid()).unwrap();
        f.check(1e-12).unwrap();
        let k = p.k();
        assert!(f.dvalues.iter().all(|d| (-k).exp() <= *d && *d <= k.exp()));
    }

    #[test]
    fn limit_conjugacy_cauchy() {
        let p = pert();
        let y = DualWord::zeros(24);
        let lim = limit_conjugacy(p, &y, 1e-6, &grid()).unwrap();
        let expect = (0..).find(|&n| p.k1() * p.rate().powi(n) <= 1e-6).unwrap() as usize;
        assert_eq!(lim.n_used, expect);
        assert!(lim.reached && !lim.padded);
        let further = phi_n(p, &y, lim.n_used + 2, &grid()).unwrap();
        assert!(d_c(&lim.grid, &further, false).unwrap().value <= lim.bound);
    }

    #[test]
    fn limit_set_of_affine_is_the_set() {
        let mt = SystemConfig::middle_third().build().unwrap();
        let (set, bound) = limit_set(&mt, &"101".parse().unwrap(), 5, 1e-10).unwrap();
        assert_eq!(bound, 0.0);
        let own = level_intervals(&mt, 5).unwrap();
        for ((a, b), iv) in set.intervals.iter().zip(&own) {
            assert!((a.to_f64() - iv.left.to_f64()).abs() < 1e-15 && (b.to_f64() - iv.right.to_f64()).abs() < 1e-15);
        }
    }

    #[test]
    fn scenery_of_linear_is_constant() {
        let lin = SystemConfig::linear(0.25, 0.5).build().unwrap();
        let x: Word = "0110101001".parse().unwrap();
        let seq = scenery_sequence(&lin, &x, 4, 5).unwrap();
        let own = level_intervals(&lin, 5).unwrap();
        for s in &seq {
            for ((a, b), iv) in s.intervals.iter().zip(&own) {
                assert!((a.to_f64() - iv.left.to_f64()).abs() < 1e-14);
                assert!((b.to_f64() - iv.right.to_f64()).abs() < 1e-14);
            }
        }
        assert!(scenery_sequence(&lin, &x, 8, 5).is_err());
    }

    #[test]
    fn scenery_approaches_limit_sets() {
        let p = pert();
        let x = Word::new((0..32).map(|i| (i % 2) as u8).collect()).unwrap();
        let seq = scenery_sequence(p, &x, 12, 6).unwrap();
        for (n, s) in seq.iter().enumerate() {
            let (lim, lb) = limit_set(p, &scenery_past(&x, n), 6, 1e-8).unwrap();
            let dh = d_h(&s.intervals_f64(), &lim.intervals_f64()).unwrap().value;
            assert!(dh <= conjugacy_bound(p, n) + lb, "n = {n}: {dh}");
        }
    }

    #[test]
    fn agreeing_pairs_share_exactly_j() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for j in 0..6 {
            let (y, w) = agreeing_pair(&mut rng, 12, j);
            assert_eq!(crate::symbolic::common_suffix_len(&y, &w), j);
        }
    }
}

//! Conjugacies between two hyperbolic Cantor sets with the same scaling function,
//! built gap by gap from a choice of map between the root gaps.
//!
//! On the gap G_w of the first system the conjugacy is φ̂_w ∘ seed ∘ φ_w^{-1}; on the
//! Cantor set it is the coding map φ_w(0) ↦ φ̂_w(0).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::Float;
use serde::Serialize;

use super::grid::ConjugacyGrid;
use crate::error::{Error, Result};
use crate::maps::{Jet, MapForm};
use crate::real::Real;
use crate::scaling::build_scaling_table;
use crate::system::ContractionSystem;

/// How the root gap of the first system is sent onto the root gap of the second.
#[derive(Clone, Debug)]
pub enum GapSeed {
    /// The increasing affine map between the gaps.
    Affine,
    /// A closed-form map of [0,1], used on the gap as is.
    Form(MapForm),
    /// A map of [0,1] applied in normalized gap coordinates.
    Grid(ConjugacyGrid),
}

struct Gaps {
    a: (Real, Real),
    b: (Real, Real),
}

impl GapSeed {
    fn jet(&self, gaps: &Gaps, u: &Real) -> Jet {
        let p = u.prec();
        let la = Float::with_val(p, &gaps.a.1 - &gaps.a.0);
        let lb = Float::with_val(p, &gaps.b.1 - &gaps.b.0);
        match self {
            GapSeed::Affine => {
                let s = Float::with_val(p, &lb / &la);
                let v = Float::with_val(p, u - &gaps.a.0) * &s + &gaps.b.0;
                Jet { v, d1: s, d2: Float::with_val(p, 0) }
            }
            GapSeed::Form(f) => f.jet(u),
            GapSeed::Grid(g) => {
                let t = Float::with_val(p, u - &gaps.a.0) / &la;
                let (v, d, dd) = g.eval_jet(t.to_f64());
                let v = Float::with_val(p, &lb * v) + &gaps.b.0;
                let d1 = Float::with_val(p, &lb * d) / &la;
                let d2 = Float::with_val(p, &lb * dd) / Float::with_val(p, &la * &la);
                Jet { v, d1, d2 }
            }
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            GapSeed::Affine => "affine",
            GapSeed::Form(_) => "closed form",
            GapSeed::Grid(_) => "grid",
        }
    }
}

/// The conjugacy, resolved through gaps of level ≤ `depth`.
pub struct RigidityMap<'a> {
    pub a: &'a ContractionSystem,
    pub b: &'a ContractionSystem,
    pub seed: GapSeed,
    pub depth: usize,
    gaps: Gaps,
}

impl<'a> RigidityMap<'a> {
    pub fn new(a: &'a ContractionSystem, b: &'a ContractionSystem, seed: GapSeed, depth: usize) -> Result<Self> {
        a.check_depth(depth + 1)?;
        b.check_depth(depth + 1)?;
        let (a0, a1) = a.root_gap();
        let (b0, b1) = b.root_gap();
        let gaps = Gaps { a: (a0.clone(), a1.clone()), b: (b0.clone(), b1.clone()) };
        if let GapSeed::Form(f) = &seed {
            let tol = 1e-12;
            let e0 = Float::with_val(a.precision(), f.eval(a0) - b0).abs().to_f64();
            let e1 = Float::with_val(a.precision(), f.eval(a1) - b1).abs().to_f64();
            if e0.max(e1) > tol {
                return Err(Error::Parameter(format!("seed does not map gap onto gap (error {:e})", e0.max(e1))));
            }
        }
        Ok(RigidityMap { a, b, seed, depth, gaps })
    }

    /// φ̂_w ∘ seed ∘ φ_w^{-1} at the point φ_w(u).
    fn gap_jet(&self, w: &[u8], u: &Real) -> Jet {
        let forward = self.a.jet_word(w, u);
        let back = forward.inverse(u);
        let s = self.seed.jet(&self.gaps, u);
        let outer = self.b.jet_word(w, &s.v);
        outer.after(&s.after(&back))
    }

    /// Value and two derivatives of the conjugacy at x.
    ///
    /// Points still inside a cylinder below the last resolved level get the value of the
    /// affine fill between the image endpoints, and the derivatives of the nearest gap
    /// formula at the closest point of that cylinder's own gap.
    pub fn eval(&self, x: &Real) -> Jet {
        let (g0, g1) = (&self.gaps.a.0, &self.gaps.a.1);
        let mut u = x.clone();
        let mut w = Vec::with_capacity(self.depth + 1);
        for _ in 0..=self.depth {
            if u > *g0 && u < *g1 {
                return self.gap_jet(&w, &u);
            }
            let s = u8::from(u >= *g1);
            u = self.a.phi(s).form.inverse(&u);
            w.push(s);
        }
        let p = self.a.precision();
        let left = self.b.eval_word(&w, &Float::with_val(p, 0));
        let right = self.b.eval_word(&w, &Float::with_val(p, 1));
        let value = Float::with_val(p, &right - &left) * &u + &left;
        let clamp = if u <= *g0 { g0.clone() } else { g1.clone() };
        let j = self.gap_jet(&w, &clamp);
        Jet { v: value, d1: j.d1, d2: j.d2 }
    }

    pub fn sample(&self, grid: &[f64]) -> Result<ConjugacyGrid> {
        let p = self.a.precision();
        let rows: Vec<[f64; 3]> = grid.par_iter().map(|&x| self.eval(&Float::with_val(p, x)).to_f64()).collect();
        ConjugacyGrid::new(
            grid.to_vec(),
            rows.iter().map(|r| r[0]).collect(),
            rows.iter().map(|r| r[1]).collect(),
            Some(rows.iter().map(|r| r[2]).collect()),
        )
    }

    /// max |Ŝ(Φ(a)) − Φ(S(a))| over random points a in gaps of levels 1..=depth.
    pub fn residual(&self, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.a.precision();
        let la = Float::with_val(p, &self.gaps.a.1 - &self.gaps.a.0);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let len = rng.gen_range(1..=self.depth);
            let w: Vec<u8> = (0..len).map(|_| rng.gen_range(0..2)).collect();
            let t: f64 = rng.gen_range(0.01..0.99);
            let u = Float::with_val(p, &la * t) + &self.gaps.a.0;
            let x = self.a.eval_word(&w, &u);
            let (_, sx) = self.a.expand(&x)?;
            let (_, s_hat) = self.b.expand(&self.eval(&x).v)?;
            let diff = Float::with_val(p, s_hat - self.eval(&sx).v).abs().to_f64();
            worst = worst.max(diff);
        }
        Ok(worst)
    }

    /// max |Φ(e) − reference(e)| over the endpoints of the level-n cylinders.
    pub fn endpoint_deviation(&self, n: usize, reference: impl Fn(&Real) -> Real + Sync) -> Result<f64> {
        let levels = crate::thermo::level_endpoints_upto(self.a, n)?;
        Ok(levels[n]
            .par_iter()
            .flat_map_iter(|(l, r)| [l, r])
            .map(|e| Float::with_val(e.prec(), self.eval(e).v - reference(e)).abs().to_f64())
            .reduce(|| 0.0, f64::max))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RigidityResult {
    pub grid: ConjugacyGrid,
    pub depth: usize,
    pub seed: &'static str,
    /// Largest log-difference between the two scaling tables and the allowed slack.
    pub scaling_diff: f64,
    pub scaling_tol: f64,
}

/// Confirm that the scaling tables agree within their combined error, then sample the conjugacy.
pub fn rigidity_conjugacy(
    a: &ContractionSystem,
    b: &ContractionSystem,
    seed: GapSeed,
    depth: usize,
    grid: &[f64],
    table: (usize, usize),
) -> Result<RigidityResult> {
    let (m, n) = table;
    let ta = build_scaling_table(a, m, n, usize::MAX)?;
    let tb = build_scaling_table(b, m, n, usize::MAX)?;
    let tol = (1.0 + ta.err_bound).ln() + (1.0 + tb.err_bound).ln() + 1e-12;
    let mut diff = 0.0f64;
    for ((y, ea), eb) in ta.iter().zip(&tb.entries) {
        let d = ea.log_distance(eb);
        if d > tol {
            return Err(Error::ScalingMismatch { word: y.to_string(), diff: d, tol });
        }
        diff = diff.max(d);
    }
    let map = RigidityMap::new(a, b, seed, depth)?;
    let label = map.seed.describe();
    Ok(RigidityResult { grid: map.sample(grid)?, depth, seed: label, scaling_diff: diff, scaling_tol: tol })
}

//! Gibbs-distributed symbol sequences and time-versus-ensemble averages of the ratio
//! process and the set-valued scenery process.
//!
//! At time t the window x_t…x_{t+L−1} stands for the past, its last symbol most recent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::Float;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ratioset::{build_ratio_set, RescaledSet, ScalingSource};
use crate::real::Real;
use crate::scaling::{estimation_exponent, ratio_geometry, RatioTriple, ScalingTable};
use crate::scenery::{conjugacy_bound, d_h};
use crate::stats::{batch_standard_error, mean, sum};
use crate::symbolic::{DualWord, Word};
use crate::system::ContractionSystem;
use crate::thermo::{level_endpoints_upto, CylinderMeasure};

const BATCHES: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitSample {
    pub seed: u64,
    pub symbols: Word,
    /// Depth of the cylinder law the symbols were drawn from.
    pub law_depth: usize,
}

impl OrbitSample {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// x_t…x_{t+len−1}.
    pub fn window(&self, t: usize, len: usize) -> Word {
        Word::new(self.symbols.symbols()[t..t + len].to_vec()).expect("binary symbols")
    }
}

fn draw(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// Draw a symbol sequence whose blocks of `gibbs.depth` symbols follow the cylinder weights:
/// the first block directly, later symbols conditionally on the preceding depth − 1.
pub fn sample_orbit(gibbs: &CylinderMeasure, length: usize, seed: u64) -> Result<OrbitSample> {
    let n = gibbs.depth;
    if n < 2 {
        return Err(Error::Parameter("orbit sampling needs a law of depth ≥ 2".into()));
    }
    if length < n {
        return Err(Error::Parameter(format!("orbit length {length} below the law depth {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = draw(&mut rng, &gibbs.weights);
    let mut symbols = Word::from_index(first, n).symbols().to_vec();
    let mask = (1usize << (n - 1)) - 1;
    let mut context = first & mask;
    while symbols.len() < length {
        let w0 = gibbs.weights[context << 1];
        let w1 = gibbs.weights[(context << 1) | 1];
        if w0 + w1 <= 0.0 {
            return Err(Error::ZeroProbability(Word::from_index(context, n - 1).to_string()));
        }
        let s = u8::from(rng.gen::<f64>() * (w0 + w1) >= w0);
        symbols.push(s);
        context = ((context << 1) | s as usize) & mask;
    }
    Ok(OrbitSample { seed, symbols: Word::new(symbols)?, law_depth: n })
}

/// Frequencies of the 2^k windows of length k along the orbit, with batch-means errors.
pub fn window_frequencies(orbit: &OrbitSample, k: usize) -> Result<Vec<(f64, f64)>> {
    if orbit.len() < k + BATCHES {
        return Err(Error::InsufficientOrbit { need: k + BATCHES, have: orbit.len() });
    }
    let s = orbit.symbols.symbols();
    let codes: Vec<usize> = (0..=s.len() - k).map(|t| s[t..t + k].iter().fold(0, |a, &b| (a << 1) | b as usize)).collect();
    Ok((0..1usize << k)
        .map(|c| {
            let ind: Vec<f64> = codes.iter().map(|&v| f64::from(u8::from(v == c))).collect();
            (mean(&ind), batch_standard_error(&ind, BATCHES))
        })
        .collect())
}

/// Coordinate of the ratio triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RatioFunctional {
    Left,
    Gap,
    Right,
}

impl RatioFunctional {
    pub const ALL: [RatioFunctional; 3] = [RatioFunctional::Left, RatioFunctional::Gap, RatioFunctional::Right];

    pub fn eval(&self, t: &RatioTriple) -> f64 {
        match self {
            RatioFunctional::Left => t.l,
            RatioFunctional::Gap => t.g,
            RatioFunctional::Right => t.r,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BirkhoffReport {
    pub functional: RatioFunctional,
    pub steps: usize,
    pub window: usize,
    pub seed: u64,
    pub time_average: f64,
    pub ensemble_average: f64,
    pub difference: f64,
    /// Batch-means standard error of the time average.
    pub sigma: f64,
    /// Deterministic slack from finite windows and table error.
    pub systematic: f64,
    /// 3σ + systematic.
    pub band: f64,
    pub within_band: bool,
}

/// Time average of f(ratio geometry of the cylinder of each window) against the Gibbs
/// ensemble average of f over the scaling table.
pub fn birkhoff_ratio_test(
    sys: &ContractionSystem,
    orbit: &OrbitSample,
    steps: usize,
    f: RatioFunctional,
    table: &ScalingTable,
    ensemble: &CylinderMeasure,
) -> Result<BirkhoffReport> {
    let window = table.est_depth;
    if orbit.len() < steps + window {
        return Err(Error::InsufficientOrbit { need: steps + window, have: orbit.len() });
    }
    if ensemble.depth < table.depth {
        return Err(Error::Parameter("ensemble law is shallower than the table".into()));
    }
    let values: Vec<f64> = (0..steps)
        .into_par_iter()
        .map(|t| ratio_geometry(sys, &orbit.window(t, window)).map(|r| f.eval(&r)))
        .collect::<Result<_>>()?;
    let law = ensemble.marginal(table.depth).normalized();
    let ensemble_average = sum(table.entries.iter().zip(&law.weights).map(|(t, w)| w * f.eval(t)));
    let time_average = mean(&values);
    let sigma = batch_standard_error(&values, BATCHES);
    let systematic = estimation_exponent(sys, window).exp_m1() + table.query_exponent().exp_m1();
    let band = 3.0 * sigma + systematic + 1e-14;
    let difference = (time_average - ensemble_average).abs();
    Ok(BirkhoffReport {
        functional: f,
        steps,
        window,
        seed: orbit.seed,
        time_average,
        ensemble_average,
        difference,
        sigma,
        systematic,
        band,
        within_band: difference <= band,
    })
}

/// Bounded functionals of a level-D skeleton, each Lipschitz for the sup-distance between
/// corresponding endpoints with the declared constant.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SetFunctional {
    /// Left end of the first-level gap.
    FirstGapLeft,
    /// Σ over gaps of length·center^p.
    GapMoment { p: u32 },
    /// Mean over endpoints of the tent of height 1 on the dyadic cell j of level k.
    DyadicEndpointMass { level: u32, cell: u32 },
    /// Hausdorff distance to a fixed union of intervals.
    HausdorffTo(Vec<(f64, f64)>),
}

impl SetFunctional {
    pub fn eval(&self, set: &[(f64, f64)]) -> f64 {
        match self {
            SetFunctional::FirstGapLeft => set[set.len() / 2 - 1].1,
            SetFunctional::GapMoment { p } => set
                .windows(2)
                .map(|w| {
                    let len = w[1].0 - w[0].1;
                    len * (0.5 * (w[1].0 + w[0].1)).powi(*p as i32)
                })
                .sum(),
            SetFunctional::DyadicEndpointMass { level, cell } => {
                let width = (-(*level as f64)).exp2();
                let center = (*cell as f64 + 0.5) * width;
                let half = 0.5 * width;
                let tent = |x: f64| (1.0 - (x - center).abs() / half).max(0.0);
                set.iter().map(|(a, b)| tent(*a) + tent(*b)).sum::<f64>() / (2 * set.len()) as f64
            }
            SetFunctional::HausdorffTo(r) => d_h(set, r).map(|m| m.value).unwrap_or(f64::NAN),
        }
    }

    /// Lipschitz constant for skeletons of `depth` levels.
    pub fn lipschitz(&self, depth: usize) -> f64 {
        match self {
            SetFunctional::FirstGapLeft | SetFunctional::HausdorffTo(_) => 1.0,
            SetFunctional::GapMoment { p } => (depth as f64 + 1.0).exp2() + *p as f64,
            SetFunctional::DyadicEndpointMass { level, .. } => (*level as f64 + 1.0).exp2(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            SetFunctional::FirstGapLeft => "first_gap_left".into(),
            SetFunctional::GapMoment { p } => format!("gap_moment_{p}"),
            SetFunctional::DyadicEndpointMass { level, cell } => format!("dyadic_mass_{level}_{cell}"),
            SetFunctional::HausdorffTo(_) => "hausdorff_to_reference".into(),
        }
    }

    /// The built-in family; the reference for the Hausdorff functional is the middle-third skeleton of depth 3.
    pub fn builtins() -> Vec<SetFunctional> {
        let mut reference = vec![(0.0, 1.0)];
        for _ in 0..3 {
            reference = reference
                .iter()
                .flat_map(|&(a, b)| {
                    let t = (b - a) / 3.0;
                    [(a, a + t), (b - t, b)]
                })
                .collect();
        }
        vec![
            SetFunctional::FirstGapLeft,
            SetFunctional::GapMoment { p: 1 },
            SetFunctional::GapMoment { p: 2 },
            SetFunctional::DyadicEndpointMass { level: 2, cell: 1 },
            SetFunctional::DyadicEndpointMass { level: 3, cell: 6 },
            SetFunctional::HausdorffTo(reference),
        ]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SceneryStep {
    pub t: usize,
    pub actual: f64,
    pub limit: f64,
    pub running_actual: f64,
    pub running_limit: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SceneryReport {
    pub functional: String,
    pub steps: usize,
    pub depth: usize,
    pub window: usize,
    pub seed: u64,
    pub average_actual: f64,
    pub average_limit: f64,
    pub ensemble_average: f64,
    /// |average_actual − average_limit| and its deterministic bound Lip·(per-step endpoint bound).
    pub agreement_diff: f64,
    pub agreement_bound: f64,
    /// Batch-means standard error of the actual time average.
    pub sigma: f64,
    /// 3σ + agreement bound, for the actual average against the ensemble.
    pub band: f64,
    pub agrees: bool,
    pub generic: bool,
    #[serde(skip)]
    pub series: Vec<SceneryStep>,
}

/// Precomputed pieces shared by many functionals on one orbit.
pub struct SceneryData {
    pub depth: usize,
    pub window: usize,
    /// Skeleton of the rescaled cylinder set at each step, from the last `window` symbols.
    pub actual: Vec<Vec<(f64, f64)>>,
    /// Ratio set from the table at each of the 2^m pasts.
    pub limit_sets: Vec<Vec<(f64, f64)>>,
    /// Index into `limit_sets` for each step.
    pub limit_index: Vec<usize>,
    pub ensemble: Vec<f64>,
    /// Sup-distance bound between corresponding endpoints of the two sides.
    pub endpoint_bound: f64,
    pub seed: u64,
}

/// Skeletons of depth `depth` along `steps` windows of `window` symbols, and the table-backed
/// ratio sets for every past of the table's depth.
pub fn scenery_data(
    sys: &ContractionSystem,
    orbit: &OrbitSample,
    steps: usize,
    depth: usize,
    window: usize,
    table: &ScalingTable,
    law: &CylinderMeasure,
) -> Result<SceneryData> {
    if orbit.len() < steps + window {
        return Err(Error::InsufficientOrbit { need: steps + window, have: orbit.len() });
    }
    if window < table.depth || law.depth < table.depth {
        return Err(Error::Parameter("window and law must reach the table depth".into()));
    }
    sys.check_depth(window)?;
    let p = sys.precision();
    let level = level_endpoints_upto(sys, depth)?;
    let skeleton = &level[depth];
    let actual: Vec<Vec<(f64, f64)>> = (0..steps)
        .into_par_iter()
        .map(|t| {
            let w = orbit.window(t, window);
            let s = w.symbols();
            let left = sys.eval_word(s, &Float::with_val(p, 0));
            let right = sys.eval_word(s, &Float::with_val(p, 1));
            let len = Float::with_val(p, &right - &left);
            let map = |x: &Real| (Float::with_val(p, sys.eval_word(s, x) - &left) / &len).to_f64();
            skeleton.iter().map(|(a, b)| (map(a), map(b))).collect()
        })
        .collect();
    let m = table.depth;
    let src = ScalingSource::table(table.clone());
    let limit_sets: Vec<Vec<(f64, f64)>> = (0..1usize << m)
        .into_par_iter()
        .map(|i| build_ratio_set(&src, &DualWord::from_index(i, m), depth, p, sys.depth_cap()).map(|s: RescaledSet| s.intervals_f64()))
        .collect::<Result<_>>()?;
    let limit_index = (0..steps).map(|t| orbit.window(t + window - m, m).index()).collect();
    let ensemble = law.marginal(m).normalized().weights;
    let r_max = table.entries.iter().map(|t| t.l.max(t.r)).fold(0.0, f64::max);
    let eps = table.query_exponent();
    let endpoint_bound = conjugacy_bound(sys, window) + ((depth as f64 + 1.0) * eps).exp_m1() / (1.0 - r_max);
    Ok(SceneryData { depth, window, actual, limit_sets, limit_index, ensemble, endpoint_bound, seed: orbit.seed })
}

/// Time averages of g along the rescaled cylinder sets and along the limit sets, against
/// the ensemble average over the stationary law.
pub fn scenery_process_sim(data: &SceneryData, g: &SetFunctional) -> SceneryReport {
    let actual: Vec<f64> = data.actual.par_iter().map(|s| g.eval(s)).collect();
    let per_past: Vec<f64> = data.limit_sets.par_iter().map(|s| g.eval(s)).collect();
    let limit: Vec<f64> = data.limit_index.iter().map(|&i| per_past[i]).collect();
    let ensemble_average = sum(per_past.iter().zip(&data.ensemble).map(|(v, w)| v * w));
    let mut series = Vec::with_capacity(actual.len());
    let (mut sa, mut sl) = (0.0, 0.0);
    for (t, (a, l)) in actual.iter().zip(&limit).enumerate() {
        sa += a;
        sl += l;
        series.push(SceneryStep { t, actual: *a, limit: *l, running_actual: sa / (t + 1) as f64, running_limit: sl / (t + 1) as f64 });
    }
    let average_actual = mean(&actual);
    let average_limit = mean(&limit);
    let agreement_bound = g.lipschitz(data.depth) * data.endpoint_bound + 1e-13;
    let agreement_diff = (average_actual - average_limit).abs();
    let sigma = batch_standard_error(&actual, BATCHES);
    let band = 3.0 * sigma + agreement_bound;
    SceneryReport {
        functional: g.name(),
        steps: actual.len(),
        depth: data.depth,
        window: data.window,
        seed: data.seed,
        average_actual,
        average_limit,
        ensemble_average,
        agreement_diff,
        agreement_bound,
        sigma,
        band,
        agrees: agreement_diff <= agreement_bound,
        generic: (average_actual - ensemble_average).abs() <= band,
        series,
    }
}

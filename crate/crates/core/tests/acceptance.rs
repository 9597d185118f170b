//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p cantor-scenery --test acceptance`.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Float;

use cantor_scenery::ergodic::{birkhoff_ratio_test, sample_orbit, scenery_data, scenery_process_sim, RatioFunctional, SetFunctional};
use cantor_scenery::hierarchy::level_intervals;
use cantor_scenery::maps::MapForm;
use cantor_scenery::ratioset::{scenery_identity_check, ScalingSource};
use cantor_scenery::scaling::{build_scaling_table, holder_diagnostic, ratio_dual, RatioTriple};
use cantor_scenery::scenery::metrics::{conformal_bound_note, place};
use cantor_scenery::scenery::probe::smoothness_probe;
use cantor_scenery::scenery::rigidity::{rigidity_conjugacy, GapSeed, RigidityMap};
use cantor_scenery::scenery::{
    conjugacy_bound, d_c, d_h, d_m, dyadic_grid, limit_conjugacy, limit_set, measure_modulus, phi_n, renormalized, scenery_past,
    scenery_sequence, ConjugacyGrid, SetMeasure,
};
use cantor_scenery::stats::slope;
use cantor_scenery::system::check_distortion;
use cantor_scenery::thermo::{bowen_root, conformal_weights, gibbs_weights};
use cantor_scenery::{BiWindow, ContractionSystem, DualWord, SystemConfig, Word};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn random_dual(rng: &mut ChaCha8Rng, len: usize) -> DualWord {
    DualWord::new((0..len).map(|_| rng.gen_range(0..2)).collect()).unwrap()
}

fn perturbed(cap: usize) -> ContractionSystem {
    SystemConfig::perturbed(0.1, 0.1).build().unwrap().with_depth_cap(cap)
}

fn middle_third_exactness() -> Outcome {
    let mt = SystemConfig::middle_third().build().map_err(e)?;
    let exact = 2f64.ln() / 3f64.ln();
    for n in 2..=8 {
        let d = bowen_root(&mt, n, 1e-12).map_err(e)?.d;
        ensure((d - exact).abs() < 1e-9, || format!("dimension {d} at depth {n}"))?;
    }
    let table = build_scaling_table(&mt, 6, 12, 1 << 10).map_err(e)?;
    let worst = table.entries.iter().flat_map(|t| t.as_array()).map(|v| (v - 1.0 / 3.0).abs()).fold(0.0, f64::max);
    ensure(worst < 1e-12, || format!("table deviates by {worst:e}"))?;
    let grid = dyadic_grid(1025).map_err(e)?;
    let id = ConjugacyGrid::identity(grid.clone()).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_phi = 0.0f64;
    for _ in 0..5 {
        let y = random_dual(&mut rng, 12);
        for n in [0, 4, 12] {
            worst_phi = worst_phi.max(d_c(&phi_n(&mt, &y, n, &grid).map_err(e)?, &id, false).map_err(e)?.value);
        }
    }
    ensure(worst_phi < 1e-12, || format!("Φ deviates from identity by {worst_phi:e}"))?;
    let own = level_intervals(&mt, 8).map_err(e)?;
    let (set, _) = limit_set(&mt, &random_dual(&mut rng, 10), 8, 1e-10).map_err(e)?;
    let diff = set
        .intervals
        .iter()
        .zip(&own)
        .map(|((a, b), iv)| (a.to_f64() - iv.left.to_f64()).abs().max((b.to_f64() - iv.right.to_f64()).abs()))
        .fold(0.0, f64::max);
    ensure(diff < 1e-12, || format!("limit set deviates by {diff:e}"))?;
    Ok(format!("d exact to 1e-9, table/Φ/limit set within {:.1e}", worst.max(worst_phi).max(diff)))
}

fn moran_check() -> Outcome {
    let lin = SystemConfig::linear(0.25, 0.25).build().map_err(e)?;
    let d = bowen_root(&lin, 6, 1e-12).map_err(e)?.d;
    ensure((d - 0.5).abs() < 1e-9, || format!("dimension {d}"))?;
    let mut worst = 0.0f64;
    for (l, r) in [(0.25, 0.25), (0.25, 0.5), (0.4, 0.1), (0.2, 0.6)] {
        let sys = SystemConfig::linear(l, r).build().map_err(e)?;
        let t = build_scaling_table(&sys, 5, 10, 1 << 10).map_err(e)?;
        for entry in &t.entries {
            worst = worst.max((entry.l - l).abs()).max((entry.g - (1.0 - l - r)).abs()).max((entry.r - r).abs());
        }
    }
    ensure(worst < 1e-12, || format!("table deviates by {worst:e}"))?;
    Ok(format!("d = {d:.12}, tables constant within {worst:.1e}"))
}

fn scaling_convergence() -> Outcome {
    let p = perturbed(32);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut duals = vec![DualWord::zeros(26)];
    duals.extend((0..20).map(|_| random_dual(&mut rng, 26)));
    let mut worst_ratio = 0.0f64;
    let mut per_n = Vec::new();
    for n in 2..=16usize {
        let mut worst = 0.0f64;
        for y in &duals {
            let a = ratio_dual(&p, &y.suffix(n)).map_err(e)?;
            let b = ratio_dual(&p, &y.suffix(n + 10)).map_err(e)?;
            worst = worst.max(a.log_distance(&b));
        }
        let bound = p.k() * p.rate().powi(n as i32);
        ensure(worst <= bound, || format!("n = {n}: {worst:e} > {bound:e}"))?;
        worst_ratio = worst_ratio.max(worst / bound);
        per_n.push((n as f64, worst.ln()));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = per_n.into_iter().unzip();
    let s = slope(&x, &y);
    let limit = (13.0f64 / 30.0).ln() + 0.1;
    ensure(s <= limit, || format!("slope {s:.3} > {limit:.3}"))?;
    Ok(format!("worst error/bound {worst_ratio:.3}, slope {s:.3} ≤ {limit:.3}"))
}

fn holder_bound() -> Outcome {
    let p = perturbed(26);
    let t = build_scaling_table(&p, 8, 20, 1 << 10).map_err(e)?;
    let r = holder_diagnostic(&t, p.beta(), p.gamma(), p.k()).map_err(e)?;
    ensure(r.max_ratio <= 1.0, || format!("ratio {} at {:?}", r.max_ratio, r.worst_pair))?;
    Ok(format!("{} pairs, worst lhs/bound {:.3}", r.pairs, r.max_ratio))
}

fn bounded_distortion() -> Outcome {
    let p = perturbed(26);
    let r = check_distortion(&p, 6, 10, 200, 5).map_err(e)?;
    Ok(format!("200 samples, max |log ratio| {:.3e} ≤ {:.3e}", r.max_log_ratio, r.bound))
}

fn conjugacy_convergence() -> Outcome {
    let p = perturbed(26);
    let grid = dyadic_grid(1025).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (lo, hi) = ((-p.k()).exp(), p.k().exp());
    let mut worst_ratio = 0.0f64;
    for _ in 0..10 {
        let y = random_dual(&mut rng, 24);
        let grids: Vec<ConjugacyGrid> = (0..=24).map(|n| phi_n(&p, &y, n, &grid)).collect::<Result<_, _>>().map_err(e)?;
        for g in &grids {
            ensure(g.dvalues.iter().all(|d| lo <= *d && *d <= hi), || "derivative outside [e^-K, e^K]".into())?;
        }
        for n in 2..=18 {
            let dist = d_c(&grids[n], &grids[n + 6], false).map_err(e)?.value;
            let bound = conjugacy_bound(&p, n);
            ensure(dist <= bound, || format!("n = {n}: {dist:e} > {bound:e}"))?;
            worst_ratio = worst_ratio.max(dist / bound);
        }
    }
    // the sampled norm must be stable under mesh doubling
    let y = random_dual(&mut rng, 24);
    let fine = dyadic_grid(2049).map_err(e)?;
    let coarse_d = d_c(&phi_n(&p, &y, 4, &grid).map_err(e)?, &phi_n(&p, &y, 10, &grid).map_err(e)?, false).map_err(e)?.value;
    let fine_d = d_c(&phi_n(&p, &y, 4, &fine).map_err(e)?, &phi_n(&p, &y, 10, &fine).map_err(e)?, false).map_err(e)?.value;
    let moved = (fine_d - coarse_d).abs() / fine_d;
    ensure(moved < 0.01, || format!("mesh doubling moved d_C by {:.2}%", 100.0 * moved))?;
    Ok(format!("worst d_C/bound {worst_ratio:.2e}, mesh doubling moves {:.1e}", moved))
}

fn scenery_theorem() -> Outcome {
    let p = perturbed(32);
    let d = bowen_root(&p, 14, 1e-12).map_err(e)?.d;
    let gibbs = gibbs_weights(&p, d, 12).map_err(e)?.measure;
    let orbit = sample_orbit(&gibbs, 2000 + 40, 7).map_err(e)?;
    let grid = dyadic_grid(1025).map_err(e)?;
    let depth = 6;
    let (n_max, tol) = (20, 1e-9);
    let base_intervals: Vec<(f64, f64)> =
        level_intervals(&p, depth).map_err(e)?.iter().map(|iv| (iv.left.to_f64(), iv.right.to_f64())).collect();
    let base = place(&conformal_weights(&p, d, depth).map_err(e)?.measure, base_intervals.clone()).map_err(e)?;
    let (k1, k3) = (p.k1(), p.k3());
    let mut worst = [0.0f64; 3];
    let mut logs: Vec<(f64, f64)> = Vec::new();
    for t in (0..2000).step_by(100) {
        let x = orbit.window(t, n_max + depth + 1);
        let seq = scenery_sequence(&p, &x, n_max, depth).map_err(e)?;
        for (n, actual_set) in seq.iter().enumerate() {
            let past = scenery_past(&x, n);
            let actual = renormalized(&p, &x.prefix(n + 1), &grid).map_err(e)?;
            let lim = limit_conjugacy(&p, &past, tol, &grid).map_err(e)?;
            let dc = d_c(&actual, &lim.grid, false).map_err(e)?.value;
            let (lim_set, _) = limit_set(&p, &past, depth, tol).map_err(e)?;
            let dh = d_h(&actual_set.intervals_f64(), &lim_set.intervals_f64()).map_err(e)?.value;
            let mu_a = base.conformal_image(actual_set.intervals_f64(), d).map_err(e)?;
            let mu_l = base.conformal_image(lim_set.intervals_f64(), d).map_err(e)?;
            let dm = d_m(&mu_a, &mu_l, 40).map_err(e)?;
            let rate = p.rate().powi(n as i32);
            ensure(dc <= k1 * rate, || format!("t = {t}, n = {n}: d_C {dc:e} > {:e}", k1 * rate))?;
            ensure(dh <= k1 * rate, || format!("t = {t}, n = {n}: d_H {dh:e} > {:e}", k1 * rate))?;
            ensure(dm.value <= k3 * rate + dm.truncation_err, || format!("t = {t}, n = {n}: d_M {:e} > {:e}", dm.value, k3 * rate))?;
            worst[0] = worst[0].max(dc / (k1 * rate));
            worst[1] = worst[1].max(dh / (k1 * rate));
            worst[2] = worst[2].max(dm.value / (k3 * rate));
            if dc > 1e-13 {
                logs.push((n as f64, dc.ln()));
            }
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = logs.into_iter().unzip();
    let s = slope(&xs, &ys);
    let limit = p.gamma() * p.beta().ln() + 0.1;
    ensure(s <= limit, || format!("d_C slope {s:.3} > {limit:.3}"))?;
    Ok(format!(
        "20 windows × n ≤ {n_max}: worst ratios d_C {:.1e}, d_H {:.1e}, d_M {:.1e} (k1 = {k1:.3}, k3 = {k3:.3}); slope {s:.3}",
        worst[0], worst[1], worst[2]
    ))
}

fn metric_inequalities() -> Outcome {
    let mt = SystemConfig::middle_third().build().map_err(e)?;
    let d = 2f64.ln() / 3f64.ln();
    let depth = 8;
    let base: Vec<(f64, f64)> = level_intervals(&mt, depth).map_err(e)?.iter().map(|iv| (iv.left.to_f64(), iv.right.to_f64())).collect();
    let mu = SetMeasure::new(base.clone(), vec![(0.5f64).powi(depth as i32); base.len()]).map_err(e)?;
    let grid = dyadic_grid(1025).map_err(e)?;
    let id = ConjugacyGrid::identity(grid.clone()).map_err(e)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = (0.0f64, 0.0f64);
    for _ in 0..50 {
        // x + a·x(1−x) + b·sin(2πx)/(2π) with |a| + |b| ≤ 0.3 keeps Df ∈ [0.7, 1.3]
        let total: f64 = rng.gen_range(0.0..0.3);
        let split: f64 = rng.gen_range(0.0..1.0);
        let a = total * split * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let b = total * (1.0 - split) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let tau = std::f64::consts::TAU;
        let f = move |x: f64| {
            (
                x + a * x * (1.0 - x) + b * (tau * x).sin() / tau,
                1.0 + a * (1.0 - 2.0 * x) + b * (tau * x).cos(),
                -2.0 * a - b * tau * (tau * x).sin(),
            )
        };
        let fg = ConjugacyGrid::from_fn(grid.clone(), f).map_err(e)?;
        let x = d_c(&id, &fg, false).map_err(e)?.value;
        let image: Vec<(f64, f64)> = base.iter().map(|&(l, r)| (f(l).0, f(r).0)).collect();
        let dh = d_h(&base, &image).map_err(e)?.value;
        let dm = d_m(&mu, &mu.conformal_image(image, d).map_err(e)?, 40).map_err(e)?;
        ensure(dh <= x, || format!("d_H {dh:e} > d_C {x:e}"))?;
        ensure(dm.value <= measure_modulus(x) + dm.truncation_err, || format!("d_M {:e} > Ψ({x:e})", dm.value))?;
        worst.0 = worst.0.max(dh / x);
        worst.1 = worst.1.max(dm.value / measure_modulus(x));
    }
    Ok(format!("50 maps: max d_H/d_C {:.3}, max d_M/Ψ(d_C) {:.3}; {}", worst.0, worst.1, conformal_bound_note()))
}

fn scenery_identity() -> Outcome {
    let p = perturbed(26);
    let table = ScalingSource::table(build_scaling_table(&p, 8, 20, 1 << 10).map_err(e)?);
    let constant = ScalingSource::Constant(RatioTriple::new(0.3, 0.25, 0.45).map_err(e)?);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for src in [&constant, &table] {
        for _ in 0..100 {
            let len = rng.gen_range(0..12);
            let past = random_dual(&mut rng, len);
            let n = rng.gen_range(0..=6);
            let depth = rng.gen_range(0..=8);
            let future = Word::new((0..n).map(|_| rng.gen_range(0..2)).collect()).map_err(e)?;
            let r = scenery_identity_check(src, &BiWindow::new(past, future), n, depth, 128, 1e-20).map_err(e)?;
            worst = worst.max(r.max_diff);
        }
    }
    Ok(format!("200 cases, worst endpoint difference {worst:.1e}"))
}

fn rigidity_construction() -> Outcome {
    let a = SystemConfig::middle_third().build().map_err(e)?;
    let b = SystemConfig::conjugated(SystemConfig::middle_third(), 0.3).build().map_err(e)?;
    let prec = a.precision();
    let psi = MapForm::psi(Float::with_val(prec, 0.3));
    let grid = dyadic_grid(1025).map_err(e)?;
    let result = rigidity_conjugacy(&a, &b, GapSeed::Form(psi.clone()), 12, &grid, (4, 20)).map_err(e)?;
    let map = RigidityMap::new(&a, &b, GapSeed::Form(psi.clone()), 12).map_err(e)?;
    let dev = map.endpoint_deviation(12, |x| psi.eval(x)).map_err(e)?;
    ensure(dev <= 1e-10, || format!("endpoint deviation {dev:e}"))?;
    let residual = map.residual(1000, 10).map_err(e)?;
    ensure(residual <= 1e-10, || format!("residual {residual:e}"))?;
    let mut constants = Vec::new();
    for k in [1, 2] {
        let r = smoothness_probe(&result.grid, k, 1.0).map_err(e)?;
        ensure(!r.divergent, || format!("probe k = {k} divergent (growth {:.2})", r.growth))?;
        constants.push(r.constant);
    }
    Ok(format!(
        "endpoints {dev:.1e}, residual {residual:.1e}, probe constants {:.3}/{:.3}, scaling diff {:.1e} ≤ {:.1e}",
        constants[0], constants[1], result.scaling_diff, result.scaling_tol
    ))
}

fn genericity() -> Outcome {
    let mut summary = Vec::new();
    for (name, sys) in [("perturbed", perturbed(26)), ("middle-third", SystemConfig::middle_third().build().map_err(e)?)] {
        let d = bowen_root(&sys, 14, 1e-12).map_err(e)?.d;
        let gibbs = gibbs_weights(&sys, d, 12).map_err(e)?.measure;
        let steps = 10_000;
        let orbit = sample_orbit(&gibbs, steps + 20, 11).map_err(e)?;
        let table = build_scaling_table(&sys, 10, 20, 1 << 12).map_err(e)?;
        let exact = sys.is_affine();
        for f in RatioFunctional::ALL {
            let r = birkhoff_ratio_test(&sys, &orbit, steps, f, &table, &gibbs).map_err(e)?;
            ensure(r.within_band, || format!("{name} {f:?}: |{} − {}| > {:e}", r.time_average, r.ensemble_average, r.band))?;
            if exact {
                ensure(r.difference < 1e-13, || format!("{name} {f:?} not exact: {:e}", r.difference))?;
            }
        }
        let data = scenery_data(&sys, &orbit, steps, 6, 20, &table, &gibbs).map_err(e)?;
        for g in SetFunctional::builtins() {
            let r = scenery_process_sim(&data, &g);
            ensure(r.generic, || format!("{name} {}: |{} − {}| > {:e}", r.functional, r.average_actual, r.ensemble_average, r.band))?;
            ensure(r.agrees, || format!("{name} {}: actual and limit averages differ by {:e}", r.functional, r.agreement_diff))?;
            if exact {
                ensure((r.average_actual - r.ensemble_average).abs() < 1e-12, || format!("{name} {} not exact", r.functional))?;
            }
        }
        summary.push(format!("{name} ok"));
    }
    Ok(format!("3 ratio + 6 set functionals on 10^4 steps: {}", summary.join(", ")))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "middle-third exactness", limit: Duration::from_secs(1), run: middle_third_exactness },
        Criterion { id: 2, name: "Moran check", limit: Duration::from_secs(1), run: moran_check },
        Criterion { id: 3, name: "scaling convergence rate", limit: Duration::from_secs(30), run: scaling_convergence },
        Criterion { id: 4, name: "Hölder bound", limit: Duration::from_secs(10), run: holder_bound },
        Criterion { id: 5, name: "bounded distortion", limit: Duration::from_secs(5), run: bounded_distortion },
        Criterion { id: 6, name: "conjugacy convergence", limit: Duration::from_secs(30), run: conjugacy_convergence },
        Criterion { id: 7, name: "scenery theorem", limit: Duration::from_secs(120), run: scenery_theorem },
        Criterion { id: 8, name: "metric inequalities", limit: Duration::from_secs(60), run: metric_inequalities },
        Criterion { id: 9, name: "exact scenery identity", limit: Duration::from_secs(30), run: scenery_identity },
        Criterion { id: 10, name: "rigidity construction", limit: Duration::from_secs(60), run: rigidity_construction },
        Criterion { id: 11, name: "genericity", limit: Duration::from_secs(120), run: genericity },
    ];
    let only: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failures = 0;
    for c in criteria.iter().filter(|c| only.is_none_or(|o| o == c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if elapsed <= c.limit => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; took {:.1}s over the {}s limit", elapsed.as_secs_f64(), c.limit.as_secs())),
            Err(d) => ("FAIL", d),
        };
        if status == "FAIL" {
            failures += 1;
        }
        println!("criterion {:>2} {:<26} {status} [{:.2}s] {detail}", c.id, c.name, elapsed.as_secs_f64());
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}

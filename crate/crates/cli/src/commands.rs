use std::path::Path;

use anyhow::{bail, Context};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use cantor_scenery::ergodic::{sample_orbit, scenery_data, scenery_process_sim, OrbitSample, SetFunctional};
use cantor_scenery::hierarchy::level_intervals;
use cantor_scenery::maps::MapForm;
use cantor_scenery::ratioset::{build_ratio_set, ScalingSource};
use cantor_scenery::scaling::{build_scaling_table, ScalingTable, DEFAULT_TABLE_BUDGET};
use cantor_scenery::scenery::metrics::place;
use cantor_scenery::scenery::probe::smoothness_probe;
use cantor_scenery::scenery::rigidity::{rigidity_conjugacy, GapSeed, RigidityMap};
use cantor_scenery::scenery::{
    conjugacy_bound, d_c, d_h, d_m, dyadic_grid, limit_conjugacy, limit_set, phi_n, renormalized, scenery_past,
    scenery_sequence, DEFAULT_GRID_POINTS,
};
use cantor_scenery::stats::slope;
use cantor_scenery::thermo::{bowen_root, conformal_weights, gibbs_weights, CylinderMeasure};
use cantor_scenery::{ContractionSystem, DualWord, Error};

use crate::config::{ConfigError, RunConfig};
use crate::output::{emit_plotdata, json_doc, num, write, Csv, Provenance};

/// Depth of the Gibbs law used to draw orbits.
const LAW_DEPTH: usize = 10;
/// Bisection depth for the dimension that weights the Gibbs law.
const ROOT_DEPTH: usize = 12;
/// Gap between compared approximants in `converge`.
const CONVERGE_GAP: usize = 6;
/// Symbols of history behind each simulated scenery step.
const SIM_WINDOW: usize = 20;

struct Ctx<'a> {
    cfg: &'a RunConfig,
    prov: Provenance,
}

impl Ctx<'_> {
    fn system(&self) -> anyhow::Result<ContractionSystem> {
        Ok(self.cfg.system.build()?.with_depth_cap(self.cfg.depth_cap))
    }

    fn csv(&self, data: &Csv) -> anyhow::Result<()> {
        write(self.cfg.out.as_deref(), &data.render(&self.prov))
    }

    fn json(&self, body: serde_json::Value) -> anyhow::Result<()> {
        write(self.cfg.out.as_deref(), &json_doc(&self.prov, body))
    }

    fn plot(&self, data: &Csv, columns: &[&str]) -> anyhow::Result<()> {
        match &self.cfg.plot {
            Some(p) => emit_plotdata(data, columns, &self.prov, p),
            None => Ok(()),
        }
    }

    /// The configured past, or a seeded random one of length `len`.
    fn past(&self, len: usize) -> anyhow::Result<DualWord> {
        match &self.cfg.past {
            Some(s) => Ok(s.parse::<DualWord>().map_err(|e| ConfigError(format!("past: {e}")))?),
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
                Ok(DualWord::new((0..len).map(|_| rng.gen_range(0..2u8)).collect())?)
            }
        }
    }
}

pub fn run(command: &str, cfg: &RunConfig) -> anyhow::Result<()> {
    cfg.validate()?;
    let ctx = Ctx { cfg, prov: Provenance { command: command.to_string(), config_hash: cfg.hash(command) } };
    eprintln!("{command}: config_hash={}", ctx.prov.config_hash);
    match command {
        "validate" => validate(&ctx),
        "levels" => levels(&ctx),
        "scaling" => scaling(&ctx),
        "ratioset" => ratioset(&ctx),
        "dimension" => dimension(&ctx),
        "scenery" => scenery(&ctx),
        "converge" => converge(&ctx),
        "rigidity" => rigidity(&ctx),
        "simulate" => simulate(&ctx),
        other => bail!(ConfigError(format!("unknown command {other:?}"))),
    }
}

fn violation(msg: String) -> anyhow::Error {
    Error::Invariant(msg).into()
}

fn validate(ctx: &Ctx) -> anyhow::Result<()> {
    let sys = ctx.system()?;
    let report = sys.validate(DEFAULT_GRID_POINTS)?;
    let cert = sys.certificates();
    ctx.json(json!({
        "passed": report.passed(),
        "summary": report.summary(),
        "report": report,
        "certificates": cert,
        "k1": sys.k1(),
        "k3": sys.k3(),
    }))?;
    if !report.passed() {
        return Err(violation(report.summary()));
    }
    Ok(())
}

fn levels(ctx: &Ctx) -> anyhow::Result<()> {
    let sys = ctx.system()?;
    let mut csv = Csv::new(&["word", "left", "right", "length"]);
    for iv in level_intervals(&sys, ctx.cfg.depth)? {
        csv.push(vec![iv.word.to_string(), num(iv.left.to_f64()), num(iv.right.to_f64()), num(iv.length().to_f64())]);
    }
    ctx.plot(&csv, &["left", "right"])?;
    ctx.csv(&csv)
}

fn scaling(ctx: &Ctx) -> anyhow::Result<()> {
    let sys = ctx.system()?;
    let table = build_scaling_table(&sys, ctx.cfg.table_depth, ctx.cfg.est_depth, DEFAULT_TABLE_BUDGET)?;
    // multiplicative slack e^{±q}, reported additively at the largest component
    let q = table.query_exponent();
    let mut csv = Csv::new(&["dual_word", "l", "g", "r", "err_bound"]);
    for (y, t) in table.iter() {
        let top = t.l.max(t.g).max(t.r);
        csv.push(vec![y.to_string(), num(t.l), num(t.g), num(t.r), num(top * q.exp_m1())]);
    }
    ctx.plot(&csv, &["dual_word", "l", "g", "r"])?;
    let as_json = ctx.cfg.out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
    if as_json {
        ctx.json(json!({ "table": table }))
    } else {
        ctx.csv(&csv)
    }
}

/// A persisted table: either the `scaling` JSON artifact or a bare table document.
pub fn load_table(path: &Path) -> anyhow::Result<ScalingTable> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| ConfigError(format!("table: {e}")))?;
    if let Some(t) = v.get_mut("table") {
        v = t.take();
    }
    Ok(ScalingTable::from_json(&v.to_string())?)
}

fn ratioset(ctx: &Ctx) -> anyhow::Result<()> {
    let cfg = ctx.cfg;
    let table = match &cfg.table {
        Some(p) => load_table(p)?,
        None => build_scaling_table(&ctx.system()?, cfg.table_depth, cfg.est_depth, DEFAULT_TABLE_BUDGET)?,
    };
    let past = ctx.past(table.depth)?;
    let set = build_ratio_set(&ScalingSource::table(table), &past, cfg.depth, cfg.system.precision_bits, cfg.depth_cap)?;
    let mut csv = Csv::new(&["index", "left", "right"]);
    for (i, (a, b)) in set.intervals_f64().into_iter().enumerate() {
        csv.push(vec![i.to_string(), num(a), num(b)]);
    }
    eprintln!("ratioset: past {} at depth {}", past.human(), cfg.depth);
    ctx.plot(&csv, &["left", "right"])?;
    ctx.csv(&csv)
}

fn dimension(ctx: &Ctx) -> anyhow::Result<()> {
    let sys = ctx.system()?;
    let r = bowen_root(&sys, ctx.cfg.depth, ctx.cfg.tol)?;
    if let Some(p) = &ctx.cfg.plot {
        let g = gibbs_weights(&sys, r.d, ctx.cfg.depth.min(LAW_DEPTH))?;
        let mut csv = Csv::new(&["word", "weight"]);
        for (w, x) in g.measure.iter() {
            csv.push(vec![w.to_string(), num(x)]);
        }
        emit_plotdata(&csv, &["word", "weight"], &ctx.prov, p)?;
    }
    ctx.json(json!({
        "d": r.d,
        "bracket": [r.bracket.0, r.bracket.1],
        "certified": [r.certified.0, r.certified.1],
        "depth": r.depth_used,
        "moran": r.moran,
    }))
}

/// Gibbs law and an orbit of `len` symbols drawn from it.
fn gibbs_orbit(sys: &ContractionSystem, len: usize, seed: u64) -> anyhow::Result<(CylinderMeasure, OrbitSample, f64)> {
    let d = bowen_root(sys, ROOT_DEPTH, 1e-12)?.d;
    let law = gibbs_weights(sys, d, LAW_DEPTH)?.measure;
    let orbit = sample_orbit(&law, len, seed)?;
    Ok((law, orbit, d))
}

fn scenery(ctx: &Ctx) -> anyhow::Result<()> {
    let (cfg, sys) = (ctx.cfg, ctx.system()?);
    let (depth, n_max) = (cfg.depth, cfg.max_n);
    let (_, orbit, d) = gibbs_orbit(&sys, n_max + depth + 1, cfg.seed)?;
    let x = orbit.window(0, n_max + depth + 1);
    let grid = dyadic_grid(DEFAULT_GRID_POINTS)?;
    let base_intervals: Vec<(f64, f64)> = level_intervals(&sys, depth)?.iter().map(|iv| (iv.left.to_f64(), iv.right.to_f64())).collect();
    let base = place(&conformal_weights(&sys, d, depth)?.measure, base_intervals)?;
    let seq = scenery_sequence(&sys, &x, n_max, depth)?;
    let mut csv = Csv::new(&["n", "d_C", "d_H", "d_M", "bound", "measure_bound", "limit_slack"]);
    let mut failures = Vec::new();
    for (n, actual_set) in seq.iter().enumerate() {
        let past = scenery_past(&x, n);
        let actual = renormalized(&sys, &x.prefix(n + 1), &grid)?;
        let lim = limit_conjugacy(&sys, &past, cfg.tol, &grid)?;
        let (lim_set, set_slack) = limit_set(&sys, &past, depth, cfg.tol)?;
        let dc = d_c(&actual, &lim.grid, false)?.value;
        let dh = d_h(&actual_set.intervals_f64(), &lim_set.intervals_f64())?.value;
        let dm = d_m(&base.conformal_image(actual_set.intervals_f64(), d)?, &base.conformal_image(lim_set.intervals_f64(), d)?, 40)?;
        let rate = sys.rate().powi(n as i32);
        let (bound, mbound) = (sys.k1() * rate, sys.k3() * rate);
        // the computed limit is itself within `slack` of the true one
        let slack = lim.bound.max(set_slack);
        if dc > bound + lim.bound || dh > bound + set_slack || dm.value > mbound + dm.truncation_err + sys.k3() * set_slack {
            failures.push(n);
        }
        csv.push(vec![n.to_string(), num(dc), num(dh), num(dm.value), num(bound), num(mbound), num(slack)]);
    }
    eprintln!("scenery: point {x} with seed {}, k1 = {:.4}, k3 = {:.4}", cfg.seed, sys.k1(), sys.k3());
    ctx.plot(&csv, &["n", "d_C", "d_H", "d_M", "bound"])?;
    ctx.csv(&csv)?;
    if !failures.is_empty() {
        return Err(violation(format!("scenery bounds exceeded at n = {failures:?}")));
    }
    Ok(())
}

fn converge(ctx: &Ctx) -> anyhow::Result<()> {
    let (cfg, sys) = (ctx.cfg, ctx.system()?);
    let n_max = cfg.max_n;
    sys.check_depth(n_max + CONVERGE_GAP)?;
    let y = ctx.past(n_max + CONVERGE_GAP)?.padded(n_max + CONVERGE_GAP);
    let grid = dyadic_grid(DEFAULT_GRID_POINTS)?;
    let mut csv = Csv::new(&["n", "d_C", "bound", "log_dC", "log_bound"]);
    let (mut xs, mut ys, mut failures) = (Vec::new(), Vec::new(), Vec::new());
    for n in 1..=n_max {
        let dist = d_c(&phi_n(&sys, &y, n, &grid)?, &phi_n(&sys, &y, n + CONVERGE_GAP, &grid)?, false)?.value;
        let bound = conjugacy_bound(&sys, n);
        if dist > bound {
            failures.push(n);
        }
        if dist > 0.0 {
            xs.push(n as f64);
            ys.push(dist.ln());
        }
        csv.push(vec![n.to_string(), num(dist), num(bound), num(dist.ln()), num(bound.ln())]);
    }
    if xs.len() >= 2 {
        eprintln!("converge: past {}, slope of log d_C {:.4} against γ·log β = {:.4}", y.human(), slope(&xs, &ys), sys.rate().ln());
    }
    ctx.plot(&csv, &["n", "log_dC", "log_bound"])?;
    ctx.csv(&csv)?;
    if !failures.is_empty() {
        return Err(violation(format!("d_C above k1·β^(nγ) at n = {failures:?}")));
    }
    Ok(())
}

fn rigidity(ctx: &Ctx) -> anyhow::Result<()> {
    let cfg = ctx.cfg;
    if cfg.system.family != "conjugated" {
        bail!(ConfigError("rigidity needs a conjugated system; its base is the other side".into()));
    }
    let base_cfg = cfg.system.base.as_deref().context("conjugated system without base")?;
    let a = base_cfg.build()?.with_depth_cap(cfg.depth_cap);
    let b = ctx.system()?;
    let eps = *cfg.system.params.first().context("conjugated system needs eps")?;
    let psi = MapForm::psi(a.real(eps));
    let seed = match cfg.gap_seed.as_str() {
        "affine" => GapSeed::Affine,
        _ => GapSeed::Form(psi.clone()),
    };
    let grid = dyadic_grid(DEFAULT_GRID_POINTS)?;
    let depth = cfg.depth;
    let result = rigidity_conjugacy(&a, &b, seed.clone(), depth, &grid, (cfg.table_depth, cfg.est_depth))?;
    let map = RigidityMap::new(&a, &b, seed, depth)?;
    let dev = map.endpoint_deviation(depth, |x| psi.eval(x))?;
    let residual = map.residual(1000, cfg.seed)?;
    for k in [1, 2] {
        let p = smoothness_probe(&result.grid, k, 1.0)?;
        eprintln!(
            "rigidity: probe k = {k}: constant {:.4e}, growth {:.3}{}",
            p.constant,
            p.growth,
            if p.divergent { " (divergent)" } else { "" }
        );
    }
    eprintln!(
        "rigidity: seed {}, endpoint deviation {dev:.3e}, residual {residual:.3e}, scaling diff {:.3e} ≤ {:.3e}",
        result.seed, result.scaling_diff, result.scaling_tol
    );
    let mut csv = Csv::new(&["x", "value", "dvalue"]);
    for i in 0..result.grid.len() {
        csv.push(vec![num(result.grid.grid[i]), num(result.grid.values[i]), num(result.grid.dvalues[i])]);
    }
    ctx.plot(&csv, &["x", "dvalue"])?;
    ctx.csv(&csv)?;
    if dev > cfg.tol || residual > cfg.tol {
        return Err(violation(format!("conjugacy off the dynamics: endpoint {dev:e}, residual {residual:e}")));
    }
    Ok(())
}

fn simulate(ctx: &Ctx) -> anyhow::Result<()> {
    let (cfg, sys) = (ctx.cfg, ctx.system()?);
    let builtins = SetFunctional::builtins();
    let g = match &cfg.functional {
        None => builtins[0].clone(),
        Some(name) => builtins.iter().find(|g| &g.name() == name).cloned().ok_or_else(|| {
            let known: Vec<String> = builtins.iter().map(|g| g.name()).collect();
            ConfigError(format!("unknown functional {name:?}; known: {}", known.join(", ")))
        })?,
    };
    let window = SIM_WINDOW.max(cfg.table_depth);
    let (law, orbit, _) = gibbs_orbit(&sys, cfg.steps + window, cfg.seed)?;
    let table = build_scaling_table(&sys, cfg.table_depth, cfg.est_depth, DEFAULT_TABLE_BUDGET)?;
    let data = scenery_data(&sys, &orbit, cfg.steps, cfg.depth, window, &table, &law)?;
    let r = scenery_process_sim(&data, &g);
    let mut csv = Csv::new(&["n", "f_value_actual", "f_value_limitset", "running_avg_actual", "running_avg_limit", "band"]);
    for s in &r.series {
        csv.push(vec![s.t.to_string(), num(s.actual), num(s.limit), num(s.running_actual), num(s.running_limit), num(r.band)]);
    }
    eprintln!(
        "simulate: {} over {} steps: time {:.6}, limit {:.6}, ensemble {:.6}, band {:.2e}{}",
        r.functional,
        r.steps,
        r.average_actual,
        r.average_limit,
        r.ensemble_average,
        r.band,
        if r.generic { "" } else { " (outside band)" }
    );
    ctx.plot(&csv, &["n", "running_avg_actual", "running_avg_limit"])?;
    ctx.csv(&csv)?;
    if !r.agrees {
        return Err(violation(format!("actual and limit averages differ by {:e} > {:e}", r.agreement_diff, r.agreement_bound)));
    }
    Ok(())
}

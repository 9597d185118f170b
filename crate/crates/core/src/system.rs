//! Contraction pairs, hyperbolicity certificates and bounded distortion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Float;
use serde::Serialize;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::maps::{Jet, MapForm};
use crate::real::{ratio, real, Real};
use crate::symbolic::{check_depth, Word, DEFAULT_DEPTH_CAP};

/// Widening applied to closed-form derivative bounds so strict inequalities survive rounding.
const WIDEN: f64 = 4.0 * f64::EPSILON;
/// Safety margin for bounds sampled on a grid.
const EMPIRICAL_MARGIN: f64 = 1e-9;
const ENDPOINT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Smoothness {
    Finite { k: u32, gamma: f64 },
    Infinite,
    Analytic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CertificateKind {
    Certified,
    /// Sampled on a dense grid with a safety margin; not a proof.
    Empirical,
}

/// One branch φ_i with its smoothness data.
#[derive(Clone, Debug)]
pub struct SmoothContraction {
    pub form: MapForm,
    pub smoothness: Smoothness,
    pub holder_gamma: f64,
    /// Hölder constant of log Dφ_i.
    pub holder_const_log_d: f64,
}

impl SmoothContraction {
    pub fn eval(&self, x: &Real) -> Real {
        self.form.eval(x)
    }

    /// k-th derivative for k ≤ 2.
    pub fn deriv(&self, k: u32, x: &Real) -> Real {
        let j = self.form.jet(x);
        match k {
            0 => j.v,
            1 => j.d1,
            _ => j.d2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Certificates {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub c: f64,
    pub k: f64,
    pub kind: CertificateKind,
}

impl Certificates {
    pub fn new(alpha: f64, beta: f64, gamma: f64, c: f64, kind: CertificateKind) -> Self {
        Certificates { alpha, beta, gamma, c, k: distortion_constant(c, beta, gamma), kind }
    }
}

/// K = c·β^γ / (1 − β^γ).
pub fn distortion_constant(c: f64, beta: f64, gamma: f64) -> f64 {
    let b = beta.powf(gamma);
    c * b / (1.0 - b)
}

/// A validated pair of contractions with its certificates.
#[derive(Clone, Debug)]
pub struct ContractionSystem {
    phi: [SmoothContraction; 2],
    cert: Certificates,
    prec: u32,
    depth_cap: usize,
    config: SystemConfig,
    gap: (Real, Real),
}

fn affine_pair(prec: u32, l: Real, r: Real) -> [MapForm; 2] {
    let _ = prec;
    [MapForm::Affine { slope: l, fixed_one: false }, MapForm::Affine { slope: r, fixed_one: true }]
}

fn branch(form: MapForm, c: f64, smoothness: Smoothness) -> SmoothContraction {
    SmoothContraction { form, smoothness, holder_gamma: 1.0, holder_const_log_d: c }
}

impl ContractionSystem {
    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        let prec = cfg.precision_bits;
        if !(53..=4096).contains(&prec) {
            return Err(Error::Parameter(format!("precision_bits = {prec} must lie in [53, 4096]")));
        }
        let (forms, cert, cs, smooth) = match cfg.family.as_str() {
            "middle-third" => {
                cfg.expect_params(0)?;
                let third = ratio(prec, 1, 3);
                let cert = affine_certificate(1.0 / 3.0, 1.0 / 3.0);
                (affine_pair(prec, third.clone(), third), cert, [0.0, 0.0], Smoothness::Analytic)
            }
            "linear" => {
                let p = cfg.expect_params(2)?;
                let (l, r) = (p[0], p[1]);
                if !(l > 0.0 && r > 0.0 && l + r < 1.0) {
                    return Err(Error::Parameter(format!("linear({l}, {r}) needs l, r > 0 and l + r < 1")));
                }
                let cert = affine_certificate(l, r);
                (affine_pair(prec, real(prec, l), real(prec, r)), cert, [0.0, 0.0], Smoothness::Analytic)
            }
            "perturbed" => {
                let p = cfg.expect_params(2)?;
                let (a, b) = (p[0], p[1]);
                if !(a.abs() < 1.0 / 3.0 && b.abs() < 1.0 / 3.0) {
                    return Err(Error::Parameter(format!("perturbed({a}, {b}) needs |a|, |b| < 1/3")));
                }
                let third = ratio(prec, 1, 3);
                let forms = [
                    MapForm::Perturbed { slope: third.clone(), fixed_one: false, amplitude: real(prec, a) },
                    MapForm::Perturbed { slope: third, fixed_one: true, amplitude: real(prec, b) },
                ];
                let m = a.abs().max(b.abs());
                let ci = |t: f64| 2.0 * t.abs() / (1.0 / 3.0 - t.abs());
                let c = ci(a).max(ci(b));
                let cert = Certificates::new(
                    (1.0 / 3.0 - m) * (1.0 - WIDEN),
                    (1.0 / 3.0 + m) * (1.0 + WIDEN),
                    1.0,
                    c,
                    CertificateKind::Certified,
                );
                (forms, cert, [ci(a), ci(b)], Smoothness::Analytic)
            }
            "conjugated" => {
                let eps = cfg.expect_params(1)?[0];
                if !(eps.abs() < 1.0) {
                    return Err(Error::Parameter(format!("conjugating parameter {eps} needs |eps| < 1")));
                }
                let base_cfg = cfg
                    .base
                    .as_ref()
                    .ok_or_else(|| Error::Parameter("conjugated family needs a base system".into()))?;
                let base = ContractionSystem::from_config(&base_cfg.as_ref().clone().with_precision(prec))?;
                let bc = base.cert;
                let e = eps.abs();
                let alpha = bc.alpha * (1.0 - e) / (1.0 + e);
                let beta = bc.beta * (1.0 + e) / (1.0 - e);
                if beta >= 1.0 {
                    return Err(Error::Parameter(format!(
                        "conjugation by eps = {eps} gives derivative bound {beta} ≥ 1"
                    )));
                }
                let ci = |c_in: f64| (2.0 * e * bc.beta / (1.0 - e) + c_in + 2.0 * e / (1.0 - e)) / (1.0 - e);
                let cs = [ci(base.phi[0].holder_const_log_d), ci(base.phi[1].holder_const_log_d)];
                let forms = [0, 1].map(|i| MapForm::Conjugated {
                    inner: Box::new(base.phi[i].form.clone()),
                    eps: real(prec, eps),
                });
                let cert = Certificates::new(
                    alpha * (1.0 - WIDEN),
                    beta * (1.0 + WIDEN),
                    bc.gamma,
                    cs[0].max(cs[1]),
                    bc.kind,
                );
                (forms, cert, cs, Smoothness::Analytic)
            }
            "polynomial" => {
                let (p0, p1) = match (&cfg.phi0, &cfg.phi1) {
                    (Some(a), Some(b)) => (a, b),
                    _ => return Err(Error::Parameter("polynomial family needs phi0 and phi1".into())),
                };
                let forms = [p0, p1].map(|c| MapForm::Polynomial {
                    coeffs: c.iter().map(|&v| real(prec, v)).collect(),
                });
                let report = validate_maps(&forms[0], &forms[1], 256, prec, None);
                if !report.passed() {
                    return Err(Error::Validation(report.summary()));
                }
                let (cert, cs) = empirical_certificate(&forms, prec, 4097);
                (forms, cert, cs, Smoothness::Infinite)
            }
            other => return Err(Error::Parameter(format!("unknown family {other:?}"))),
        };
        let [f0, f1] = forms;
        let sys = ContractionSystem::assemble(
            [branch(f0, cs[0], smooth), branch(f1, cs[1], smooth)],
            cert,
            prec,
            cfg.clone(),
        )?;
        let report = sys.validate(256)?;
        if !report.passed() {
            return Err(Error::Validation(report.summary()));
        }
        Ok(sys)
    }

    fn assemble(phi: [SmoothContraction; 2], cert: Certificates, prec: u32, config: SystemConfig) -> Result<Self> {
        if !(cert.alpha > 0.0 && cert.alpha <= cert.beta && cert.beta < 1.0) {
            return Err(Error::Validation(format!(
                "derivative certificates alpha = {}, beta = {} do not satisfy 0 < alpha ≤ beta < 1",
                cert.alpha, cert.beta
            )));
        }
        let gap = (phi[0].eval(&real(prec, 1.0)), phi[1].eval(&real(prec, 0.0)));
        Ok(ContractionSystem { phi, cert, prec, depth_cap: DEFAULT_DEPTH_CAP, config, gap })
    }

    pub fn with_depth_cap(mut self, cap: usize) -> Self {
        self.depth_cap = cap;
        self
    }

    pub fn phi(&self, s: u8) -> &SmoothContraction {
        &self.phi[s as usize]
    }

    pub fn certificates(&self) -> &Certificates {
        &self.cert
    }

    pub fn alpha(&self) -> f64 {
        self.cert.alpha
    }

    pub fn beta(&self) -> f64 {
        self.cert.beta
    }

    pub fn gamma(&self) -> f64 {
        self.cert.gamma
    }

    pub fn c(&self) -> f64 {
        self.cert.c
    }

    /// Distortion constant K.
    pub fn k(&self) -> f64 {
        self.cert.k
    }

    /// β^γ, the contraction rate of all certified error bounds.
    pub fn rate(&self) -> f64 {
        self.cert.beta.powf(self.cert.gamma)
    }

    /// K·β^{nγ}, the distortion exponent at depth n.
    pub fn distortion_exponent(&self, n: usize) -> f64 {
        self.cert.k * self.rate().powi(n as i32)
    }

    /// k_0 = (e^{e^K} − 1)/e^K.
    pub fn k0(&self) -> f64 {
        let ek = self.cert.k.exp();
        (ek.exp() - 1.0) / ek
    }

    /// k_1 = e^K·k_0.
    pub fn k1(&self) -> f64 {
        self.cert.k.exp() * self.k0()
    }

    /// k_3 = k_0(5 + 4k_0).
    pub fn k3(&self) -> f64 {
        let k0 = self.k0();
        k0 * (5.0 + 4.0 * k0)
    }

    /// Lipschitz bound c/(1 − β^γ) for log of the derivative of renormalized compositions.
    pub fn renormalized_log_d_constant(&self) -> f64 {
        self.cert.c / (1.0 - self.rate())
    }

    pub fn is_affine(&self) -> bool {
        self.cert.k == 0.0
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn depth_cap(&self) -> usize {
        self.depth_cap
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn real(&self, v: f64) -> Real {
        real(self.prec, v)
    }

    /// Root gap G = (φ0(1), φ1(0)).
    pub fn root_gap(&self) -> (&Real, &Real) {
        (&self.gap.0, &self.gap.1)
    }

    pub fn check_depth(&self, n: usize) -> Result<()> {
        check_depth(n, self.depth_cap)
    }

    /// Replace `x` by φ_w(x), applying the last symbol innermost.
    pub fn apply_word(&self, w: &[u8], x: &mut Real, tmp: &mut Real) {
        for &s in w.iter().rev() {
            self.phi[s as usize].form.apply(x, tmp);
        }
    }

    pub fn eval_word(&self, w: &[u8], x: &Real) -> Real {
        let mut y = x.clone();
        let mut tmp = Float::new(self.prec);
        self.apply_word(w, &mut y, &mut tmp);
        y
    }

    pub fn jet_word(&self, w: &[u8], x: &Real) -> Jet {
        let mut j = Jet::identity(x);
        for &s in w.iter().rev() {
            j = self.phi[s as usize].form.jet(&j.v).after(&j);
        }
        j
    }

    /// Dφ_w(x) by the chain rule.
    pub fn deriv_word(&self, w: &[u8], x: &Real) -> Real {
        let mut y = x.clone();
        let mut d = Float::with_val(self.prec, 1);
        let mut tmp = Float::new(self.prec);
        for &s in w.iter().rev() {
            let f = &self.phi[s as usize].form;
            d *= f.deriv(&y);
            f.apply(&mut y, &mut tmp);
        }
        d
    }

    /// φ_w^{-1}(y).
    pub fn inverse_word(&self, w: &[u8], y: &Real) -> Real {
        w.iter().fold(y.clone(), |acc, &s| self.phi[s as usize].form.inverse(&acc))
    }

    /// The expanding map S: returns the branch symbol and S(x).
    pub fn expand(&self, x: &Real) -> Result<(u8, Real)> {
        if *x <= self.gap.0 {
            Ok((0, self.phi[0].form.inverse(x)))
        } else if *x >= self.gap.1 {
            Ok((1, self.phi[1].form.inverse(x)))
        } else {
            Err(Error::InGap { level: 0, word: String::new() })
        }
    }

    pub fn validate(&self, grid_size: usize) -> Result<ValidationReport> {
        if grid_size < 64 {
            return Err(Error::Parameter(format!("grid_size = {grid_size} must be at least 64")));
        }
        Ok(validate_maps(&self.phi[0].form, &self.phi[1].form, grid_size, self.prec, Some(&self.cert)))
    }
}

fn affine_certificate(l: f64, r: f64) -> Certificates {
    Certificates::new(l.min(r) * (1.0 - WIDEN), l.max(r) * (1.0 + WIDEN), 1.0, 0.0, CertificateKind::Certified)
}

fn empirical_certificate(forms: &[MapForm; 2], prec: u32, n: usize) -> (Certificates, [f64; 2]) {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut cs = [0.0f64; 2];
    for (i, f) in forms.iter().enumerate() {
        for k in 0..n {
            let x = ratio(prec, k as i64, (n - 1) as i64);
            let j = f.jet(&x);
            let d1 = j.d1.to_f64();
            lo = lo.min(d1);
            hi = hi.max(d1);
            cs[i] = cs[i].max((j.d2.to_f64() / d1).abs());
        }
        cs[i] += EMPIRICAL_MARGIN;
    }
    let cert = Certificates::new(
        lo - EMPIRICAL_MARGIN,
        hi + EMPIRICAL_MARGIN,
        1.0,
        cs[0].max(cs[1]),
        CertificateKind::Empirical,
    );
    (cert, cs)
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Grid point (or word depth) witnessing a failure.
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
    /// Estimated (c, β̃) with Dφ_w ≤ c·β̃^n over words up to depth 12.
    pub estimated_c: f64,
    pub estimated_beta: f64,
    pub certificate: Option<CertificateKind>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self) -> String {
        let failed: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} ({})", c.name, c.detail))
            .collect();
        if failed.is_empty() {
            "all checks passed".into()
        } else {
            failed.join("; ")
        }
    }
}

/// Check endpoint, ordering, monotonicity and derivative conditions of a candidate pair.
pub fn validate_maps(
    phi0: &MapForm,
    phi1: &MapForm,
    grid_size: usize,
    prec: u32,
    cert: Option<&Certificates>,
) -> ValidationReport {
    let mut checks = Vec::new();
    let zero = real(prec, 0.0);
    let one = real(prec, 1.0);
    let f00 = phi0.eval(&zero).to_f64();
    let f11 = phi1.eval(&one).to_f64();
    checks.push(CheckResult {
        name: "phi0(0) = 0".into(),
        passed: f00.abs() <= ENDPOINT_TOL,
        witness: Some(0.0),
        detail: format!("phi0(0) = {f00:e}"),
    });
    checks.push(CheckResult {
        name: "phi1(1) = 1".into(),
        passed: (f11 - 1.0).abs() <= ENDPOINT_TOL,
        witness: Some(1.0),
        detail: format!("phi1(1) = {f11}"),
    });
    let g0 = phi0.eval(&one).to_f64();
    let g1 = phi1.eval(&zero).to_f64();
    checks.push(CheckResult {
        name: "phi0(1) < phi1(0)".into(),
        passed: g0 < g1,
        witness: if g0 < g1 { None } else { Some(1.0) },
        detail: format!("phi0(1) = {g0}, phi1(0) = {g1}{}", if g0 < g1 { "" } else { ": images overlap" }),
    });
    for (i, f) in [phi0, phi1].into_iter().enumerate() {
        let mut prev: Option<f64> = None;
        let mut mono: Option<f64> = None;
        let mut range: Option<(f64, f64)> = None;
        let mut bounds: Option<(f64, f64)> = None;
        for k in 0..grid_size {
            let xf = k as f64 / (grid_size - 1) as f64;
            let j = f.jet(&real(prec, xf));
            let v = j.v.to_f64();
            let d = j.d1.to_f64();
            if let Some(p) = prev {
                if v <= p && mono.is_none() {
                    mono = Some(xf);
                }
            }
            prev = Some(v);
            if !(d > 0.0 && d < 1.0) && range.is_none() {
                range = Some((xf, d));
            }
            if let Some(c) = cert {
                if !(c.alpha <= d && d <= c.beta) && bounds.is_none() {
                    bounds = Some((xf, d));
                }
            }
        }
        checks.push(CheckResult {
            name: format!("phi{i} strictly increasing"),
            passed: mono.is_none(),
            witness: mono,
            detail: mono.map_or("ok".into(), |x| format!("not increasing at x = {x}")),
        });
        checks.push(CheckResult {
            name: format!("0 < Dphi{i} < 1"),
            passed: range.is_none(),
            witness: range.map(|r| r.0),
            detail: range.map_or("ok".into(), |(x, d)| format!("Dphi{i}({x}) = {d}")),
        });
        if let Some(c) = cert {
            checks.push(CheckResult {
                name: format!("alpha ≤ Dphi{i} ≤ beta"),
                passed: bounds.is_none(),
                witness: bounds.map(|r| r.0),
                detail: bounds.map_or("ok".into(), |(x, d)| {
                    format!("Dphi{i}({x}) = {d} outside [{}, {}]", c.alpha, c.beta)
                }),
            });
        }
    }
    let ordered = checks.iter().all(|c| c.passed);
    let (estimated_c, estimated_beta) = if ordered { composite_growth(phi0, phi1, prec, 12) } else { (f64::NAN, f64::NAN) };
    ValidationReport { checks, estimated_c, estimated_beta, certificate: cert.map(|c| c.kind) }
}

/// Fit sup over words of length n of Dφ_w ≈ c·β̃^n for n ≤ depth.
///
/// Words are grown by prepending the outer map, so each level reuses the previous one.
fn composite_growth(phi0: &MapForm, phi1: &MapForm, prec: u32, depth: usize) -> (f64, f64) {
    let forms = [phi0, phi1];
    let mut logs = vec![f64::NEG_INFINITY; depth];
    for x in [0.0, 0.5, 1.0] {
        let mut level: Vec<(Real, f64)> = vec![(real(prec, x), 0.0)];
        for slot in logs.iter_mut() {
            let mut next = Vec::with_capacity(level.len() * 2);
            for (y, d) in &level {
                for f in forms {
                    let j = f.jet(y);
                    next.push((j.v, d + j.d1.to_f64().ln()));
                }
            }
            *slot = next.iter().map(|p| p.1).fold(*slot, f64::max);
            level = next;
        }
    }
    let ns: Vec<f64> = (1..=depth).map(|n| n as f64).collect();
    let slope = crate::stats::slope(&ns, &logs);
    let beta = slope.exp();
    let c = logs.iter().zip(&ns).map(|(l, n)| l - n * slope).fold(f64::NEG_INFINITY, f64::max).exp();
    (c, beta)
}

#[derive(Clone, Debug, Serialize)]
pub struct DistortionReport {
    pub n: usize,
    pub m: usize,
    pub samples: usize,
    pub seed: u64,
    pub max_log_ratio: f64,
    pub bound: f64,
}

/// Sample words w = w_0 ... w_{n+m} and points x, y ∈ I_w, and compare DS^m(x)/DS^m(y)
/// against e^{±Kβ^{nγ}}.
pub fn check_distortion(sys: &ContractionSystem, n: usize, m: usize, samples: usize, seed: u64) -> Result<DistortionReport> {
    let len = n + m + 1;
    sys.check_depth(len)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = sys.distortion_exponent(n);
    let prec = sys.prec;
    let mut max_log = 0.0f64;
    for _ in 0..samples {
        let w: Vec<u8> = (0..len).map(|_| rng.gen_range(0..2u8)).collect();
        let u = real(prec, rng.gen::<f64>());
        let v = real(prec, rng.gen::<f64>());
        // S^{j+1}x = φ_{w_{j+1} ... w_last}(u); DS at that point is 1/Dφ_{w_j}.
        let mut log_ratio = Float::with_val(prec, 0);
        for j in 0..m {
            let tail = &w[j + 1..];
            let xs = sys.eval_word(tail, &u);
            let ys = sys.eval_word(tail, &v);
            let f = &sys.phi(w[j]).form;
            let dx = f.deriv(&xs);
            let dy = f.deriv(&ys);
            log_ratio += Float::with_val(prec, dy / dx).ln();
        }
        let lr = log_ratio.to_f64().abs();
        if lr > bound * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::Distortion { observed: lr, bound, word: Word::new(w)?.to_string() });
        }
        max_log = max_log.max(lr);
    }
    Ok(DistortionReport { n, m, samples, seed, max_log_ratio: max_log, bound })
}

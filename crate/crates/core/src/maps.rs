//! Closed-form branch maps evaluated in extended precision, with second-order jets.

use rug::ops::Pow;
use rug::Float;

use crate::real::Real;

/// Value together with first and second derivatives at a point.
#[derive(Clone, Debug)]
pub struct Jet {
    pub v: Real,
    pub d1: Real,
    pub d2: Real,
}

impl Jet {
    pub fn identity(x: &Real) -> Jet {
        let p = x.prec();
        Jet { v: x.clone(), d1: Float::with_val(p, 1), d2: Float::with_val(p, 0) }
    }

    /// Jet of `outer ∘ inner`, where `self` is the jet of `outer` taken at `inner.v`.
    pub fn after(&self, inner: &Jet) -> Jet {
        let d1 = Float::with_val(self.d1.prec(), &self.d1 * &inner.d1);
        let mut d2 = Float::with_val(self.d2.prec(), &inner.d1 * &inner.d1);
        d2 *= &self.d2;
        d2 += Float::with_val(self.d1.prec(), &self.d1 * &inner.d2);
        Jet { v: self.v.clone(), d1, d2 }
    }

    /// Jet of the inverse map at `self.v`, given the jet of the map at `at`.
    pub fn inverse(&self, at: &Real) -> Jet {
        let p = at.prec();
        let d1 = Float::with_val(p, 1) / &self.d1;
        let cube = Float::with_val(p, (&self.d1).pow(3));
        let d2 = Float::with_val(p, -&self.d2) / cube;
        Jet { v: at.clone(), d1, d2 }
    }

    pub fn to_f64(&self) -> [f64; 3] {
        [self.v.to_f64(), self.d1.to_f64(), self.d2.to_f64()]
    }
}

/// An orientation-preserving map of [0,1] given in closed form.
#[derive(Clone, Debug)]
pub enum MapForm {
    /// x ↦ fixed + slope·(x − fixed) with fixed point 0 or 1.
    Affine { slope: Real, fixed_one: bool },
    /// The affine map plus amplitude·x(1−x).
    Perturbed { slope: Real, fixed_one: bool, amplitude: Real },
    /// Polynomial with ascending coefficients.
    Polynomial { coeffs: Vec<Real> },
    /// Ψ ∘ inner ∘ Ψ^{-1} with Ψ(x) = x + eps·x(1−x).
    Conjugated { inner: Box<MapForm>, eps: Real },
}

impl MapForm {
    pub fn psi(eps: Real) -> MapForm {
        let p = eps.prec();
        MapForm::Perturbed { slope: Float::with_val(p, 1), fixed_one: false, amplitude: eps }
    }

    fn affine_into(slope: &Real, fixed_one: bool, x: &mut Real) {
        if fixed_one {
            *x -= 1u32;
            *x *= slope;
            *x += 1u32;
        } else {
            *x *= slope;
        }
    }

    /// Replace `x` by the image of `x`.
    pub fn apply(&self, x: &mut Real, tmp: &mut Real) {
        match self {
            MapForm::Affine { slope, fixed_one } => Self::affine_into(slope, *fixed_one, x),
            MapForm::Perturbed { slope, fixed_one, amplitude } => {
                tmp.assign_sub_from_one(x);
                *tmp *= &*x;
                *tmp *= amplitude;
                Self::affine_into(slope, *fixed_one, x);
                *x += &*tmp;
            }
            MapForm::Polynomial { coeffs } => {
                tmp.assign_horner(coeffs, x);
                std::mem::swap(x, tmp);
            }
            MapForm::Conjugated { inner, eps } => {
                let u = psi_inverse(eps, x);
                *x = u;
                inner.apply(x, tmp);
                MapForm::psi(eps.clone()).apply(x, tmp);
            }
        }
    }

    pub fn eval(&self, x: &Real) -> Real {
        let mut y = x.clone();
        let mut tmp = Float::new(x.prec());
        self.apply(&mut y, &mut tmp);
        y
    }

    pub fn jet(&self, x: &Real) -> Jet {
        let p = x.prec();
        match self {
            MapForm::Affine { slope, .. } => {
                Jet { v: self.eval(x), d1: slope.clone(), d2: Float::with_val(p, 0) }
            }
            MapForm::Perturbed { slope, amplitude, .. } => {
                // d1 = slope + a(1 − 2x), d2 = −2a
                let mut d1 = Float::with_val(p, x * 2u32);
                d1 = 1u32 - d1;
                d1 *= amplitude;
                d1 += slope;
                let d2 = Float::with_val(p, amplitude * -2i32);
                Jet { v: self.eval(x), d1, d2 }
            }
            MapForm::Polynomial { coeffs } => {
                let mut v = Float::with_val(p, 0);
                let mut d1 = Float::with_val(p, 0);
                let mut d2 = Float::with_val(p, 0);
                for c in coeffs.iter().rev() {
                    d2 *= x;
                    d2 += Float::with_val(p, &d1 * 2u32);
                    d1 *= x;
                    d1 += &v;
                    v *= x;
                    v += c;
                }
                Jet { v, d1, d2 }
            }
            MapForm::Conjugated { inner, eps } => {
                let psi = MapForm::psi(eps.clone());
                let u = psi_inverse(eps, x);
                let psi_u = psi.jet(&u);
                let to_u = psi_u.inverse(&u);
                let mid = inner.jet(&u).after(&to_u);
                psi.jet(&mid.v).after(&mid)
            }
        }
    }

    pub fn deriv(&self, x: &Real) -> Real {
        match self {
            MapForm::Affine { slope, .. } => slope.clone(),
            _ => self.jet(x).d1,
        }
    }

    /// Preimage of `y` in [0,1].
    pub fn inverse(&self, y: &Real) -> Real {
        let p = y.prec();
        match self {
            MapForm::Affine { slope, fixed_one } => {
                if *fixed_one {
                    Float::with_val(p, y - 1u32) / slope + 1u32
                } else {
                    Float::with_val(p, y / slope)
                }
            }
            MapForm::Perturbed { slope, fixed_one, amplitude } => {
                // a x² − (slope + a) x + (y − fixed(1 − slope)) = 0, smaller-derivative-safe root
                let c0 = if *fixed_one {
                    Float::with_val(p, y - 1u32) + slope
                } else {
                    y.clone()
                };
                let b = Float::with_val(p, slope + amplitude);
                let mut disc = Float::with_val(p, &b * &b);
                disc -= Float::with_val(p, amplitude * &c0) * 4u32;
                let den = disc.sqrt() + &b;
                c0 * 2u32 / den
            }
            MapForm::Polynomial { .. } => self.newton_inverse(y),
            MapForm::Conjugated { inner, eps } => {
                let u = psi_inverse(eps, y);
                let v = inner.inverse(&u);
                MapForm::psi(eps.clone()).eval(&v)
            }
        }
    }

    /// Safeguarded Newton iteration for increasing maps of [0,1].
    fn newton_inverse(&self, y: &Real) -> Real {
        let p = y.prec();
        let mut lo = Float::with_val(p, 0);
        let mut hi = Float::with_val(p, 1);
        let mut x = Float::with_val(p, 0.5);
        let tol = Float::with_val(p, 1u32) >> (p - 4);
        for _ in 0..(4 * p as usize) {
            let j = self.jet(&x);
            let f = Float::with_val(p, &j.v - y);
            if f.is_zero() {
                break;
            }
            if f.is_sign_positive() {
                hi.clone_from(&x);
            } else {
                lo.clone_from(&x);
            }
            let step = Float::with_val(p, &f / &j.d1);
            let mut next = Float::with_val(p, &x - &step);
            if next <= lo || next >= hi || !next.is_finite() {
                next = Float::with_val(p, &lo + &hi) / 2u32;
            }
            let moved = Float::with_val(p, &next - &x).abs();
            x = next;
            if moved <= tol {
                break;
            }
        }
        x
    }
}

/// Closed-form inverse of Ψ(x) = x + eps·x(1−x) on [0,1].
pub fn psi_inverse(eps: &Real, y: &Real) -> Real {
    let p = y.prec();
    let b = Float::with_val(p, eps + 1u32);
    let mut disc = Float::with_val(p, &b * &b);
    disc -= Float::with_val(p, eps * y) * 4u32;
    let den = disc.sqrt() + &b;
    Float::with_val(p, y * 2u32) / den
}

trait FloatExt {
    fn assign_sub_from_one(&mut self, x: &Real);
    fn assign_horner(&mut self, coeffs: &[Real], x: &Real);
}

impl FloatExt for Float {
    fn assign_sub_from_one(&mut self, x: &Real) {
        use rug::Assign;
        self.assign(1u32 - x);
    }

    fn assign_horner(&mut self, coeffs: &[Real], x: &Real) {
        use rug::Assign;
        self.assign(0u32);
        for c in coeffs.iter().rev() {
            *self *= x;
            *self += c;
        }
    }
}

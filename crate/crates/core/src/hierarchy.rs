//! Cylinder intervals I_w, gaps G_w, affine rescalings and symbolic coding.

use rayon::prelude::*;
use rug::Float;

use crate::error::{Error, Result};
use crate::real::Real;
use crate::symbolic::Word;
use crate::system::ContractionSystem;

#[derive(Clone, Debug, PartialEq)]
pub struct CylinderInterval {
    pub word: Word,
    pub left: Real,
    pub right: Real,
}

impl CylinderInterval {
    pub fn length(&self) -> Real {
        Float::with_val(self.left.prec(), &self.right - &self.left)
    }

    pub fn contains(&self, x: &Real) -> bool {
        self.left <= *x && *x <= self.right
    }
}

/// Open gap between the two children of I_w.
#[derive(Clone, Debug, PartialEq)]
pub struct GapInterval {
    pub word: Word,
    pub left: Real,
    pub right: Real,
}

impl GapInterval {
    pub fn length(&self) -> Real {
        Float::with_val(self.left.prec(), &self.right - &self.left)
    }
}

/// x ↦ scale·x + offset.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineRescale {
    pub scale: Real,
    pub offset: Real,
}

impl AffineRescale {
    pub fn apply(&self, x: &Real) -> Real {
        let mut y = Float::with_val(x.prec(), x * &self.scale);
        y += &self.offset;
        y
    }

    pub fn invert(&self, y: &Real) -> Real {
        Float::with_val(y.prec(), y - &self.offset) / &self.scale
    }
}

/// Endpoints φ_w(0), φ_w(1), including the empty word.
pub(crate) fn cylinder(sys: &ContractionSystem, w: &Word) -> CylinderInterval {
    let p = sys.precision();
    let mut left = Float::with_val(p, 0);
    let mut right = Float::with_val(p, 1);
    let mut tmp = Float::new(p);
    sys.apply_word(w.symbols(), &mut left, &mut tmp);
    sys.apply_word(w.symbols(), &mut right, &mut tmp);
    CylinderInterval { word: w.clone(), left, right }
}

pub fn interval_for_word(sys: &ContractionSystem, w: &Word) -> Result<CylinderInterval> {
    if w.is_empty() {
        return Err(Error::Parameter("interval_for_word needs a nonempty word".into()));
    }
    sys.check_depth(w.len())?;
    Ok(cylinder(sys, w))
}

/// The 2^n cylinders of level n in increasing order.
pub fn level_intervals(sys: &ContractionSystem, n: usize) -> Result<Vec<CylinderInterval>> {
    sys.check_depth(n)?;
    Ok((0..1usize << n).into_par_iter().map(|i| cylinder(sys, &Word::from_index(i, n))).collect())
}

pub fn gap(sys: &ContractionSystem, w: &Word) -> Result<GapInterval> {
    sys.check_depth(w.len() + 1)?;
    let (g0, g1) = sys.root_gap();
    Ok(GapInterval { word: w.clone(), left: sys.eval_word(w.symbols(), g0), right: sys.eval_word(w.symbols(), g1) })
}

pub fn rescale(iv: &CylinderInterval) -> Result<AffineRescale> {
    rescale_endpoints(&iv.left, &iv.right)
}

pub fn rescale_endpoints(left: &Real, right: &Real) -> Result<AffineRescale> {
    let p = left.prec();
    let len = Float::with_val(p, right - left);
    if !len.is_sign_positive() || len.is_zero() {
        return Err(Error::Degenerate { left: left.to_f64(), right: right.to_f64() });
    }
    let scale = Float::with_val(p, 1) / &len;
    let offset = Float::with_val(p, -left) / &len;
    Ok(AffineRescale { scale, offset })
}

/// The length-n word w with x ∈ I_w.
pub fn code_point(sys: &ContractionSystem, x: &Real, n: usize) -> Result<Word> {
    sys.check_depth(n)?;
    let mut w = Word::empty();
    for level in 0..n {
        let left = cylinder(sys, &w.child(0));
        if left.contains(x) {
            w = w.child(0);
            continue;
        }
        let right = cylinder(sys, &w.child(1));
        if right.contains(x) {
            w = w.child(1);
            continue;
        }
        return Err(Error::InGap { level, word: w.to_string() });
    }
    Ok(w)
}

//! Extended-precision scalars.

use rug::Float;

/// Working scalar type for endpoint and derivative computations.
pub type Real = Float;

pub const DEFAULT_PRECISION_BITS: u32 = 128;

pub fn real(prec: u32, v: f64) -> Real {
    Float::with_val(prec, v)
}

pub fn ratio(prec: u32, num: i64, den: i64) -> Real {
    Float::with_val(prec, num) / den
}

pub fn zero(prec: u32) -> Real {
    Float::with_val(prec, 0)
}

pub fn one(prec: u32) -> Real {
    Float::with_val(prec, 1)
}

//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal or sample.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("usize is representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("real converts to f64")
    }

    /// Positive part `max(x, 0)`.
    #[inline]
    fn pos(self) -> Self {
        if self > Self::zero() {
            self
        } else {
            Self::zero()
        }
    }

    /// Negative part `min(x, 0)`.
    #[inline]
    fn neg_part(self) -> Self {
        if self < Self::zero() {
            self
        } else {
            Self::zero()
        }
    }

    /// Relative slack used when checking a thinning bound at runtime.
    #[inline]
    fn bound_tolerance() -> Self {
        let floor = Self::epsilon() * Self::of(1.0e4);
        let tol = Self::of(1.0e-9);
        if floor > tol {
            floor
        } else {
            tol
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `C(k, 2)` as a scalar.
#[inline]
pub fn choose2<R: Real>(k: usize) -> R {
    R::of_usize(k * k.saturating_sub(1) / 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parts() {
        assert_eq!(2.5f64.pos(), 2.5);
        assert_eq!((-2.5f64).pos(), 0.0);
        assert_eq!((-2.5f32).neg_part(), -2.5);
        assert_eq!(1.0f32.neg_part(), 0.0);
    }

    #[test]
    fn choose_two() {
        assert_eq!(choose2::<f64>(2), 1.0);
        assert_eq!(choose2::<f64>(5), 10.0);
        assert_eq!(choose2::<f32>(1), 0.0);
    }

    #[test]
    fn tolerance_scales_with_precision() {
        assert_eq!(f64::bound_tolerance(), 1.0e-9);
        assert!(f32::bound_tolerance() > 1.0e-4);
    }
}

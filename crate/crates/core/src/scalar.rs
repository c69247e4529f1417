//! Scalar abstraction shared by every numerical module.
//!
//! All geometry is written against [`Real`], which `f32` and `f64` implement.
//! Complex values are `num_complex::Complex<T>`.

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};

/// Real field used for matrix entries, tolerances and volumes.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Every `Real` can represent (a rounding of) any finite `f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    /// Ratio used to rescale tolerances pinned for `f64`: `sqrt(eps_T / eps_f64)`.
    ///
    /// Equals 1 for `f64` and about 2.3e4 for `f32`.
    fn tol_scale() -> Self {
        let ratio = Self::epsilon().to_f64().unwrap_or(f64::EPSILON) / f64::EPSILON;
        Self::lit(ratio.sqrt())
    }

    /// A tolerance pinned for `f64`, rescaled to this precision.
    fn tol(x: f64) -> Self {
        Self::lit(x) * Self::tol_scale()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over `T`.
pub type Cx<T> = Complex<T>;

#[inline]
pub(crate) fn cx<T: Real>(re: T, im: T) -> Cx<T> {
    Complex::new(re, im)
}

#[cfg(test)]
#[inline]
pub(crate) fn cxf<T: Real>(re: f64, im: f64) -> Cx<T> {
    Complex::new(T::lit(re), T::lit(im))
}

#[inline]
pub(crate) fn is_finite_cx<T: Real>(z: Cx<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Converts a complex value between precisions.
pub fn cast_cx<S: Real, T: Real>(z: Cx<S>) -> Cx<T> {
    Complex::new(
        T::lit(z.re.to_f64().unwrap_or(f64::NAN)),
        T::lit(z.im.to_f64().unwrap_or(f64::NAN)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_scale_is_identity_for_f64() {
        assert_eq!(f64::tol_scale(), 1.0);
        assert_eq!(f64::tol(1e-10), 1e-10);
        let s = f32::tol_scale();
        assert!(s > 1e4 && s < 1e5, "{s}");
    }

    #[test]
    fn cast_round_trip() {
        let z: Cx<f64> = cx(0.25, -3.5);
        let w: Cx<f32> = cast_cx(z);
        assert_eq!(cast_cx::<f32, f64>(w), z);
    }
}

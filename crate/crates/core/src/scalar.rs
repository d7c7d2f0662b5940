//! Scalar bound shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Complex entries of every operator.
pub type Complex<T> = num_complex::Complex<T>;

/// Real field the library is generic over (`f32` or `f64`).
///
/// Everything is written against this trait; the concrete `f64` aliases at
/// the crate root are what the CLI and the acceptance suite use. Single
/// precision works for the operator algebra but cannot reach the default
/// solver tolerances.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Send + Sync {
    /// Converts an `f64` constant.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Floor for absolute tolerances: `max(1e-10, 1e3·ε)`.
    fn tol_floor() -> Self {
        let eps = Self::default_epsilon() * Self::lit(1e3);
        eps.max(Self::lit(1e-10))
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[inline]
pub(crate) fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn creal<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

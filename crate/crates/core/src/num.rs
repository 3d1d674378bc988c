//! Scalar abstraction: all core math is generic over `Real` (f32 or f64).

use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar for the core math: `f32` or `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::NumAssign
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`; panics only on non-representable input.
    fn cast(x: f64) -> Self {
        Self::from_f64(x).expect("f64 value representable in scalar type")
    }

    /// Lossy widening to `f64`.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Draw a standard normal variate in the target scalar type.
///
/// Sampling happens in f64 so the stream of draws is identical no matter
/// which scalar type consumes it.
pub fn sample_standard_normal<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    T::cast(rng.sample::<f64, _>(StandardNormal))
}

/// Draw uniformly from `[lo, hi)`.
pub fn sample_uniform<T: Real, R: Rng + ?Sized>(rng: &mut R, lo: T, hi: T) -> T {
    let u: f64 = rng.gen();
    lo + (hi - lo) * T::cast(u)
}

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the closed-form oracles are evaluated in: f32 or f64.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Default + Send + Sync + 'static
{
    /// Lossy conversion from an integer count.
    fn from_count(c: u64) -> Self {
        Self::from_u64(c).expect("count representable as float")
    }

    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Ceiling that forgives floating noise just above an integer, so that
/// `2/2 * ln(e)` rounds to 1 rather than 2.
pub fn ceil_count<T: Scalar>(x: T) -> u64 {
    let tol = T::from_f64_lossy(1e-9) * x.abs().max(T::one());
    let r = x.round();
    let c = if (x - r).abs() <= tol { r } else { x.ceil() };
    c.max(T::zero()).to_u64().unwrap_or(u64::MAX)
}

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar used by the statistics and aggregation code.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from a count or literal.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean<T: Real>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().copied().sum::<T>() / T::from_count(xs.len()))
}

/// Round half away from zero to `decimals` places.
pub fn round_to<T: Real>(x: T, decimals: i32) -> T {
    let scale = T::of(10f64.powi(decimals));
    (x * scale).round() / scale
}

//! Scalar abstraction for the numeric kernels.
//!
//! Everything that does not need a random number generator is generic over
//! the floating-point type; `f64` aliases for the main types live at the
//! crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar (`f32` or `f64`) the numeric kernels are written
/// against.
///
/// The stated accuracy targets throughout the crate assume `f64`; `f32`
/// works but degrades them accordingly.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into `Self`.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 constant")
    }

    /// Converts a count into `Self`.
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("count representable as float")
    }

    /// Widens to `f64` (lossless for `f32`/`f64`).
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Compensated (Kahan) accumulator; summation order then fully determines
/// the result, independent of magnitude spread.
#[derive(Debug, Clone, Copy)]
pub struct KahanSum<F> {
    sum: F,
    carry: F,
}

impl<F: Real> KahanSum<F> {
    pub fn new() -> Self {
        Self {
            sum: F::zero(),
            carry: F::zero(),
        }
    }

    pub fn add(&mut self, value: F) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> F {
        self.sum
    }
}

impl<F: Real> Default for KahanSum<F> {
    fn default() -> Self {
        Self::new()
    }
}

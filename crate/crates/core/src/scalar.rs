use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::ScalarOperand;
use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating-point scalar the numeric core is generic over.
///
/// Implemented for `f32` and `f64`. Gram matrices, the dual solver and
/// projection training all work with either width; the crate root exposes
/// `f64` aliases for the common entry points.
pub trait Real:
    Float
    + NumAssign
    + FromPrimitive
    + ScalarOperand
    + Sum
    + Display
    + Debug
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn cast(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Real")
    }

    /// Widens to `f64` (exact for both supported types).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real widens to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

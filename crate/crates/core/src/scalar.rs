//! Floating-point abstraction for the lattice math.
//!
//! Everything in this crate is generic over [`Real`], so the same code runs
//! in `f32` or `f64`. The crate root exports `f64` aliases for the common
//! types; `f64` is what the command-line tools and all quoted tolerances
//! assume.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftNum;

/// Scalar type for all physics routines.
///
/// Blanket-implemented for every type meeting the bounds; in practice that is
/// `f32` and `f64` (`rustfft` restricts the spectral propagator to those).
pub trait Real:
    Float + FloatConst + NumAssign + FromPrimitive + FftNum + Sum + Debug + Display + LowerExp
{
    /// Converts a literal. Panics only for scalars that cannot represent
    /// finite `f64` values, which the blanket impl rules out.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal converts to scalar")
    }

    /// Widens a tolerance quoted for `f64` when the scalar is coarser, so
    /// internal consistency checks stay meaningful in `f32`.
    fn tol(spec: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(1e3);
        Self::lit(spec).max(floor)
    }
}

impl<T> Real for T where
    T: Float + FloatConst + NumAssign + FromPrimitive + FftNum + Sum + Debug + Display + LowerExp
{
}

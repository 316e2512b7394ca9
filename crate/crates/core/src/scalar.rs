//! Real-valued scalar abstraction for scores and summary statistics.
//!
//! Every quantity the attack ranks on is an exact integer (sum of squared
//! histogram counts); floating point only appears when a score is reported.
//! Reporting code is generic so callers can choose `f32` or `f64`.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Nearest representable value of an exact non-negative rational.
    fn from_ratio(r: &Ratio<u128>) -> Self {
        let num = Self::from_u128(*r.numer()).unwrap_or_else(Self::infinity);
        let den = Self::from_u128(*r.denom()).unwrap_or_else(Self::infinity);
        num / den
    }

    fn from_count(n: usize) -> Self {
        Self::from_usize(n).unwrap_or_else(Self::infinity)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

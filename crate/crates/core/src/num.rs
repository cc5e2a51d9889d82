//! Scalar abstractions shared by the numeric modules.
//!
//! Score arithmetic and ROUGE ratios only ever divide integers, so they are
//! generic over [`Scalar`] and work with exact rationals as well as floats.
//! Correlation and log-coverage need `sqrt`/`ln` and require [`Real`].

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

pub trait Scalar:
    Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count not representable in scalar type")
    }

    fn from_signed(n: i64) -> Self {
        Self::from_i64(n).expect("integer not representable in scalar type")
    }

    /// Exact ratio of two counts; callers guarantee `den > 0`.
    fn ratio(num: u64, den: u64) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Num + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
}

pub trait Real: Scalar + Float {}

impl<T> Real for T where T: Scalar + Float {}

/// Harmonic mean of precision and recall, zero when both are zero.
pub fn f_measure<T: Scalar>(precision: T, recall: T) -> T {
    let sum = precision + recall;
    if sum == T::zero() {
        T::zero()
    } else {
        (T::one() + T::one()) * precision * recall / sum
    }
}

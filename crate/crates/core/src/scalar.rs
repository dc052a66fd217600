//! Scalar abstraction shared by every numeric module.
//!
//! The math is written once against [`Scalar`] and instantiated for `f32`
//! and `f64`. Literals go through [`Scalar::of`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// Lossy conversion used by serialization and reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_exact(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }
}

macro_rules! impl_scalar {
    ($($t:ty)*) => ($(
        impl Scalar for $t {}
    )*)
}

impl_scalar!(f32 f64);

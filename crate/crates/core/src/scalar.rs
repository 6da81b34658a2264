//! Scalar abstraction for the real-valued quantities of the model.
//!
//! Lengths and edit distances are integers and stay integers. Effectiveness is
//! kept as an exact ratio of two integers and only converted to a [`Real`] when
//! resources are computed or reported. Resources, endowment and the adoption
//! strengths are generic so the engine can run in `f64` (the default) or `f32`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type usable for resources, endowment and adoption strengths.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Draws a uniform sample from `[0, 1)`.
    fn sample_unit<G: Rng + ?Sized>(rng: &mut G) -> Self;

    /// Lossless widening used by the emitters.
    fn to_f64_lossless(self) -> f64;

    /// Converts a count. Counts in this crate stay far below 2^24, so this is
    /// exact for both `f32` and `f64`.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable as a float")
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn sample_unit<G: Rng + ?Sized>(rng: &mut G) -> Self {
                rng.gen::<$t>()
            }

            #[inline]
            fn to_f64_lossless(self) -> f64 {
                self as f64
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

//! Scalar abstraction for the numeric kernels.
//!
//! All distance, clustering, loss and metric computations are generic over
//! [`Real`], so the same code runs in `f32` or `f64`. The CLI and the file
//! formats use `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar usable by every kernel in this crate.
pub trait Real:
    num_traits::Float + num_traits::FromPrimitive + num_traits::ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; panics only if the trait impl is broken.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 conversion")
    }

    /// Lossy conversion to `f64` for reporting and statistics.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

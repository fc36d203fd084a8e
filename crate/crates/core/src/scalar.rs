//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All physics code is written against [`Real`], which is implemented for
//! `f32` and `f64`. The tolerances used throughout the toolkit assume `f64`;
//! the concrete aliases in the crate root pick that type.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use rustfft::FftPlanner;

/// In-place complex transform of a fixed length.
pub type Transform<T> = Arc<dyn Fn(&mut [Complex<T>]) + Send + Sync>;

/// Forward/inverse FFT pair for one transform length (unnormalized).
#[derive(Clone)]
pub struct FftPlan<T> {
    pub len: usize,
    pub forward: Transform<T>,
    pub inverse: Transform<T>,
}

impl<T> Debug for FftPlan<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FftPlan").field("len", &self.len).finish()
    }
}

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    fn fft_plan(len: usize) -> FftPlan<Self>;

    /// Lossless-enough literal conversion for constants written as `f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            fn fft_plan(len: usize) -> FftPlan<$t> {
                let mut planner = FftPlanner::<$t>::new();
                let fwd = planner.plan_fft_forward(len);
                let inv = planner.plan_fft_inverse(len);
                FftPlan {
                    len,
                    forward: Arc::new(move |buf: &mut [Complex<$t>]| fwd.process(buf)),
                    inverse: Arc::new(move |buf: &mut [Complex<$t>]| inv.process(buf)),
                }
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// Shorthand for [`Real::lit`].
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fft_round_trip_f32_and_f64() {
        fn check<T: Real>() {
            let plan = T::fft_plan(8);
            let orig: Vec<Complex<T>> = (0..8)
                .map(|i| Complex::new(T::from_usize_lossy(i), T::lit(0.5)))
                .collect();
            let mut buf = orig.clone();
            (plan.forward)(&mut buf);
            (plan.inverse)(&mut buf);
            let scale = T::lit(8.0);
            for (a, b) in buf.iter().zip(&orig) {
                assert!(((*a / scale) - *b).norm() < T::lit(1e-5));
            }
        }
        check::<f32>();
        check::<f64>();
    }
}

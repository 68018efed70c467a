//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the model is evaluated in (`f32` or `f64`).
///
/// The special functions are evaluated in `f64` and cast back, so `f32`
/// gains range but not precision from them.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + serde::Serialize
    + serde::de::DeserializeOwned
    + 'static
{
    fn log_gamma(self) -> Self;

    fn error_fn(self) -> Self;

    /// Lossy conversion from `f64`; used for constants and random draws.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite cast")
    }
}

impl Real for f64 {
    #[inline]
    fn log_gamma(self) -> Self {
        statrs::function::gamma::ln_gamma(self)
    }

    #[inline]
    fn error_fn(self) -> Self {
        statrs::function::erf::erf(self)
    }
}

impl Real for f32 {
    #[inline]
    fn log_gamma(self) -> Self {
        statrs::function::gamma::ln_gamma(self as f64) as f32
    }

    #[inline]
    fn error_fn(self) -> Self {
        statrs::function::erf::erf(self as f64) as f32
    }
}

/// `ln Σ exp(x_i)`; `-inf` for an empty slice or all `-inf` inputs.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if max == T::neg_infinity() {
        return max;
    }
    let sum: T = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// `ln Γ(x + n) − ln Γ(x)`, i.e. the log of the rising factorial `x (x+1) ... (x+n-1)`.
///
/// Short runs are summed directly, which is both faster and more accurate
/// than differencing two large log-gamma values.
pub fn ln_rising<T: Real>(x: T, n: u64) -> T {
    const DIRECT: u64 = 64;
    if n <= DIRECT {
        let mut acc = T::zero();
        let mut term = x;
        for _ in 0..n {
            acc = acc + term.ln();
            term = term + T::one();
        }
        acc
    } else {
        (x + T::from_count(n)).log_gamma() - x.log_gamma()
    }
}

//! Scalar abstraction shared by every numeric routine in the crate.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating point scalar used for probabilities, weights and scores: `f32` or `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossless-enough conversion from `f64` constants.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Index of the largest element; the lowest index wins ties. Returns 0 for an empty slice.
pub fn argmax<F: Real>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Normalizes `values` in place to sum to one. A zero-mass vector becomes uniform.
pub fn normalize<F: Real>(values: &mut [F]) {
    let total: F = values.iter().copied().sum();
    if total > F::zero() && total.is_finite() {
        for v in values.iter_mut() {
            *v /= total;
        }
    } else if !values.is_empty() {
        let u = F::one() / F::from_count(values.len());
        values.iter_mut().for_each(|v| *v = u);
    }
}

/// `ln(exp(a) + exp(b))` without overflow; handles `-inf` operands.
pub fn log_add_exp<F: Real>(a: F, b: F) -> F {
    if a == F::neg_infinity() {
        return b;
    }
    if b == F::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[0.2f64, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[1.0f32, 1.0]), 0);
        assert_eq!(argmax::<f64>(&[]), 0);
    }

    #[test]
    fn normalize_zero_mass_is_uniform() {
        let mut v = [0.0f64; 4];
        normalize(&mut v);
        assert_eq!(v, [0.25; 4]);
        let mut w = [1.0f32, 3.0];
        normalize(&mut w);
        assert_eq!(w, [0.25, 0.75]);
    }

    #[test]
    fn log_add_exp_matches_direct() {
        let got = log_add_exp(2.0f64.ln(), 3.0f64.ln());
        assert!((got - 5.0f64.ln()).abs() < 1e-12);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 1.5), 1.5);
    }
}

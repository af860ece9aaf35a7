//! Floating-point abstraction shared by every generic routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type the optimizer and analysis routines are generic over.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, panicking only if the target cannot represent finite values.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts a count or index.
    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn norm_sq<S: Scalar>(a: &[S]) -> S {
    a.iter().fold(S::zero(), |acc, &x| acc + x * x)
}

pub(crate) fn dist_sq<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

/// Pairwise (cascade) summation of `f(0) + ... + f(n-1)`.
pub(crate) fn pairwise_sum<S: Scalar>(n: usize, f: &impl Fn(usize) -> S) -> S {
    fn rec<S: Scalar>(lo: usize, hi: usize, f: &impl Fn(usize) -> S) -> S {
        if hi - lo <= 16 {
            return (lo..hi).fold(S::zero(), |acc, i| acc + f(i));
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    if n == 0 {
        S::zero()
    } else {
        rec(0, n, f)
    }
}

/// Pairwise summation of vector-valued terms; `f(i, out)` overwrites `out` with term `i`.
pub(crate) fn pairwise_vec_sum<S: Scalar>(n: usize, d: usize, f: &impl Fn(usize, &mut [S])) -> Vec<S> {
    fn rec<S: Scalar>(lo: usize, hi: usize, d: usize, f: &impl Fn(usize, &mut [S]), acc: &mut [S]) {
        if hi - lo <= 16 {
            let mut term = vec![S::zero(); d];
            for i in lo..hi {
                f(i, &mut term);
                for (a, &t) in acc.iter_mut().zip(&term) {
                    *a = *a + t;
                }
            }
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let mut right = vec![S::zero(); d];
        rec(lo, mid, d, f, acc);
        rec(mid, hi, d, f, &mut right);
        for (a, r) in acc.iter_mut().zip(right) {
            *a = *a + r;
        }
    }
    let mut acc = vec![S::zero(); d];
    if n > 0 {
        rec(0, n, d, f, &mut acc);
    }
    acc
}

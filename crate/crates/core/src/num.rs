//! Scalar abstraction shared by every real-valued quantity in the crate:
//! feedback probabilities, specificity `s`, activation gain `K`, regression
//! targets and predictions.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;

/// Floating point scalar: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Draws a uniform sample from `[0, 1)`.
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossless widening used by the snapshot and report encoders.
    fn to_f64_lossless(self) -> f64;

    fn from_f64_lossy(v: f64) -> Self;

    fn from_usize_exact(v: usize) -> Self {
        Self::from_usize(v).expect("usize fits in a float")
    }
}

impl Scalar for f32 {
    #[inline]
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.gen::<f32>()
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self as f64
    }

    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for f64 {
    #[inline]
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.gen::<f64>()
    }

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self
    }

    #[inline]
    fn from_f64_lossy(v: f64) -> Self {
        v
    }
}

/// Bernoulli trial that only consumes randomness when the outcome is uncertain.
#[inline]
pub fn bernoulli<F: Scalar, R: Rng + ?Sized>(rng: &mut R, p: F) -> bool {
    if p <= F::zero() {
        false
    } else if p >= F::one() {
        true
    } else {
        F::sample_unit(rng) < p
    }
}

/// Successes of `n` independent Bernoulli(`p`) trials, in index order.
///
/// Each success costs one uniform draw for the geometric gap before it, so
/// sparse selections are cheap. Certain outcomes consume no randomness.
#[derive(Debug, Clone)]
pub struct BernoulliRun {
    n: usize,
    next: usize,
    /// `ln(1 - p)`; zero means every trial succeeds, infinity none.
    ln_q: f64,
}

impl BernoulliRun {
    pub fn new<F: Scalar>(p: F, n: usize) -> Self {
        let p = p.to_f64_lossless();
        let ln_q = if p >= 1.0 {
            0.0
        } else if p > 0.0 {
            (-p).ln_1p()
        } else {
            f64::INFINITY
        };
        Self { n, next: 0, ln_q }
    }

    #[inline]
    pub fn next_success<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<usize> {
        if self.next >= self.n || self.ln_q == f64::INFINITY {
            return None;
        }
        if self.ln_q == 0.0 {
            self.next += 1;
            return Some(self.next - 1);
        }
        let u = 1.0 - rng.gen::<f64>();
        let gap = (u.ln() / self.ln_q).floor();
        if !(gap < (self.n - self.next) as f64) {
            self.next = self.n;
            return None;
        }
        let idx = self.next + gap as usize;
        self.next = idx + 1;
        Some(idx)
    }
}

//! Scalar abstraction for residual kernels.
//!
//! Kernels are written once over [`Scalar`] and instantiated with plain `f64`
//! for evaluation or with [`Dual`] to get exact partial derivatives with
//! respect to the seeded inputs (the jet components of the fields being
//! trained). Forward-mode is cheap here because a kernel touches at most
//! [`MAX_SEEDS`] active scalars per point.

use std::ops::{Add, Mul, Neg, Sub};

/// Largest number of simultaneously active seed scalars per collocation
/// point: three active field components times six jet entries each.
pub const MAX_SEEDS: usize = 18;

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn constant(v: f64) -> Self;
    fn scale(self, k: f64) -> Self;
    fn value(self) -> f64;
}

impl Scalar for f64 {
    #[inline(always)]
    fn constant(v: f64) -> Self {
        v
    }
    #[inline(always)]
    fn scale(self, k: f64) -> Self {
        self * k
    }
    #[inline(always)]
    fn value(self) -> f64 {
        self
    }
}

/// Forward-mode dual number carrying up to [`MAX_SEEDS`] partial derivatives.
#[derive(Clone, Copy, Debug)]
pub struct Dual {
    pub v: f64,
    pub d: [f64; MAX_SEEDS],
}

impl Dual {
    #[inline(always)]
    pub fn seeded(v: f64, seed: usize) -> Self {
        let mut d = [0.0; MAX_SEEDS];
        d[seed] = 1.0;
        Dual { v, d }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline(always)]
    fn add(self, rhs: Dual) -> Dual {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(rhs.d.iter()) {
            *a += *b;
        }
        Dual { v: self.v + rhs.v, d }
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline(always)]
    fn sub(self, rhs: Dual) -> Dual {
        let mut d = self.d;
        for (a, b) in d.iter_mut().zip(rhs.d.iter()) {
            *a -= *b;
        }
        Dual { v: self.v - rhs.v, d }
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline(always)]
    fn mul(self, rhs: Dual) -> Dual {
        let mut d = [0.0; MAX_SEEDS];
        for i in 0..MAX_SEEDS {
            d[i] = self.d[i] * rhs.v + self.v * rhs.d[i];
        }
        Dual { v: self.v * rhs.v, d }
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline(always)]
    fn neg(self) -> Dual {
        let mut d = self.d;
        for a in d.iter_mut() {
            *a = -*a;
        }
        Dual { v: -self.v, d }
    }
}

impl Scalar for Dual {
    #[inline(always)]
    fn constant(v: f64) -> Self {
        Dual { v, d: [0.0; MAX_SEEDS] }
    }
    #[inline(always)]
    fn scale(self, k: f64) -> Self {
        let mut d = self.d;
        for a in d.iter_mut() {
            *a *= k;
        }
        Dual { v: self.v * k, d }
    }
    #[inline(always)]
    fn value(self) -> f64 {
        self.v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_product_rule() {
        // f(a, b) = (a + 2b)·(a − b) at a = 3, b = 1 → f = 10, df/da = 2a + b = 7, df/db = a − 4b... check by algebra:
        // f = a² + ab − 2b²; df/da = 2a + b = 7; df/db = a − 4b = −1.
        let a = Dual::seeded(3.0, 0);
        let b = Dual::seeded(1.0, 1);
        let f = (a + b.scale(2.0)) * (a - b);
        assert_eq!(f.v, 10.0);
        assert_eq!(f.d[0], 7.0);
        assert_eq!(f.d[1], -1.0);
    }
}

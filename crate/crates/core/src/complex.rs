//! Complex numbers in linear (cartesian) representation at working precision.

use crate::error::Result;
use crate::precision::{Hp, PrecisionContext};

#[derive(Debug, Clone, PartialEq)]
pub struct HpComplex {
    pub re: Hp,
    pub im: Hp,
}

impl HpComplex {
    pub fn new(re: Hp, im: Hp) -> Self {
        HpComplex { re, im }
    }

    pub fn zero(ctx: PrecisionContext) -> Self {
        HpComplex::new(Hp::zero(ctx), Hp::zero(ctx))
    }

    pub fn one(ctx: PrecisionContext) -> Self {
        HpComplex::new(Hp::one(ctx), Hp::zero(ctx))
    }

    pub fn from_real(re: Hp, ctx: PrecisionContext) -> Self {
        HpComplex::new(re, Hp::zero(ctx))
    }

    pub fn from_f64(re: f64, im: f64, ctx: PrecisionContext) -> Self {
        HpComplex::new(Hp::from_f64(re, ctx), Hp::from_f64(im, ctx))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn add(&self, rhs: &Self, ctx: PrecisionContext) -> Self {
        HpComplex::new(self.re.add(&rhs.re, ctx), self.im.add(&rhs.im, ctx))
    }

    /// Exact component-wise sum.
    pub fn add_exact(&self, rhs: &Self) -> Self {
        HpComplex::new(self.re.add_exact(&rhs.re), self.im.add_exact(&rhs.im))
    }

    pub fn sub(&self, rhs: &Self, ctx: PrecisionContext) -> Self {
        HpComplex::new(self.re.sub(&rhs.re, ctx), self.im.sub(&rhs.im, ctx))
    }

    pub fn mul(&self, rhs: &Self, ctx: PrecisionContext) -> Self {
        let re = self.re.mul(&rhs.re, ctx).sub(&self.im.mul(&rhs.im, ctx), ctx);
        let im = self.re.mul(&rhs.im, ctx).add(&self.im.mul(&rhs.re, ctx), ctx);
        HpComplex::new(re, im)
    }

    pub fn scale(&self, k: &Hp, ctx: PrecisionContext) -> Self {
        HpComplex::new(self.re.mul(k, ctx), self.im.mul(k, ctx))
    }

    /// Exact product with an integer.
    pub fn scale_i64_exact(&self, k: i64) -> Self {
        HpComplex::new(self.re.mul_i64_exact(k), self.im.mul_i64_exact(k))
    }

    pub fn neg(&self) -> Self {
        HpComplex::new(self.re.neg(), self.im.neg())
    }

    pub fn conj(&self) -> Self {
        HpComplex::new(self.re.clone(), self.im.neg())
    }

    pub fn div(&self, rhs: &Self, ctx: PrecisionContext) -> Result<Self> {
        let d = rhs.norm_sq(ctx);
        let num = self.mul(&rhs.conj(), ctx);
        Ok(HpComplex::new(num.re.div(&d, ctx)?, num.im.div(&d, ctx)?))
    }

    pub fn recip(&self, ctx: PrecisionContext) -> Result<Self> {
        HpComplex::one(ctx).div(self, ctx)
    }

    pub fn norm_sq(&self, ctx: PrecisionContext) -> Hp {
        self.re.mul(&self.re, ctx).add(&self.im.mul(&self.im, ctx), ctx)
    }

    pub fn abs(&self, ctx: PrecisionContext) -> Hp {
        self.norm_sq(ctx).sqrt(ctx).expect("norm_sq nonnegative")
    }

    /// Argument in `[0, 2π)`.
    pub fn arg(&self, ctx: PrecisionContext) -> Hp {
        Hp::atan2(&self.im, &self.re, ctx)
    }

    pub fn dist(&self, rhs: &Self, ctx: PrecisionContext) -> Hp {
        self.sub(rhs, ctx).abs(ctx)
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

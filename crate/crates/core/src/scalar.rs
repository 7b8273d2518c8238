//! Log-sign scalars: nonzero reals as `sign · e^log_mod`, complex values in
//! log-polar form.
//!
//! Products and integer powers act additively on logs and are kept *exact*
//! (see [`crate::precision`]), so identities like `(a·a⁻¹)^κ = 1` or
//! `(4i)^ρ(-1/4)^ρ = 1` for `ρ ∈ 4ℕ` hold bit-for-bit when the reciprocal
//! member of a pair is constructed by log negation. Sign and quarter-turn
//! angle bookkeeping is discrete arithmetic and exact by nature; `0⁰ = 1`.

use crate::complex::HpComplex;
use crate::error::{Error, Result};
use crate::precision::{Hp, PrecisionContext};

/// Sign of a real scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

impl Sign {
    pub fn of(x: &Hp) -> Sign {
        match x.signum_i8() {
            0 => Sign::Zero,
            s if s < 0 => Sign::Neg,
            _ => Sign::Pos,
        }
    }

    pub fn mul(self, rhs: Sign) -> Sign {
        match (self, rhs) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (Sign::Pos, s) | (s, Sign::Pos) => s,
            (Sign::Neg, Sign::Neg) => Sign::Pos,
        }
    }

    /// Sign of a (±1) value raised to `k`.
    pub fn pow(self, k: i64) -> Sign {
        match self {
            Sign::Neg if k % 2 != 0 => Sign::Neg,
            Sign::Neg => Sign::Pos,
            s => s,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Neg => -1,
            Sign::Zero => 0,
            Sign::Pos => 1,
        }
    }
}

/// Angle of a complex scalar.
///
/// Angles that are exact rational multiples of the full turn carry the
/// fraction so that sums and integer multiples stay exact. Everything else
/// keeps the rational tag *and* a radian remainder, both accumulated with
/// exact arithmetic, so rational contributions cancel bit-for-bit even after
/// mixing with an irrational angle (e.g. `i^ξ · (1/i)^ξ` inside a product
/// that also carries an irrational rotation).
#[derive(Debug, Clone, PartialEq)]
pub enum Angle {
    /// `2π · num/den`, reduced, `0 ≤ num < den`.
    Turn { num: i64, den: i64 },
    /// `2π · num/den + rad` with `rad ≠ 0`; `rad` is wrapped only at
    /// construction, never by arithmetic.
    Mixed { num: i64, den: i64, rad: Hp },
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Reduce `x` into `[0, 2π)` at elevated intermediate precision.
fn wrap_radians(x: &Hp, ctx: PrecisionContext) -> Hp {
    let wide = PrecisionContext::new(ctx.bits() + 96).expect("valid bits");
    let tau = Hp::two_pi(wide);
    let q = x.div(&tau, wide).expect("2π nonzero").floor();
    let r = x.sub_exact(&q.mul_exact(&tau));
    let r = if r.signum_i8() < 0 { r.add(&tau, wide) } else { r };
    let r = if r.cmp(&tau) != std::cmp::Ordering::Less {
        r.sub(&tau, wide)
    } else {
        r
    };
    r.mul(&Hp::one(ctx), ctx)
}

impl Angle {
    pub fn zero() -> Angle {
        Angle::Turn { num: 0, den: 1 }
    }

    /// Exact fraction of a full turn.
    pub fn turn(num: i64, den: i64) -> Angle {
        assert!(den > 0, "denominator must be positive");
        let num = num.rem_euclid(den);
        let g = gcd(num, den).max(1);
        Angle::Turn { num: num / g, den: den / g }
    }

    pub fn from_radians(x: Hp, ctx: PrecisionContext) -> Angle {
        Angle::with_parts(0, 1, wrap_radians(&x, ctx))
    }

    fn with_parts(num: i64, den: i64, rad: Hp) -> Angle {
        if rad.is_zero() {
            Angle::Turn { num, den }
        } else {
            Angle::Mixed { num, den, rad }
        }
    }

    fn parts(&self) -> (i64, i64, Option<&Hp>) {
        match self {
            Angle::Turn { num, den } => (*num, *den, None),
            Angle::Mixed { num, den, rad } => (*num, *den, Some(rad)),
        }
    }

    /// Principal value in `[0, 2π)`. Measurement only: exactness never rides
    /// on this.
    pub fn radians(&self, ctx: PrecisionContext) -> Hp {
        let (num, den, rad) = self.parts();
        let frac = Hp::from_i64(num, ctx).div(&Hp::from_i64(den, ctx), ctx).expect("den > 0");
        let turn = Hp::two_pi(ctx).mul(&frac, ctx);
        match rad {
            None => turn,
            Some(r) => wrap_radians(&turn.add_exact(r), ctx),
        }
    }

    pub fn add(&self, rhs: &Angle, ctx: PrecisionContext) -> Angle {
        let _ = ctx;
        let (n1, d1, r1) = self.parts();
        let (n2, d2, r2) = rhs.parts();
        let (num, den) = add_frac(n1, d1, n2, d2);
        let rad = match (r1, r2) {
            (None, None) => return Angle::Turn { num, den },
            (Some(r), None) | (None, Some(r)) => r.clone(),
            (Some(a), Some(b)) => a.add_exact(b),
        };
        Angle::with_parts(num, den, rad)
    }

    /// `k·self`; the rational part and the radian remainder both scale
    /// exactly.
    pub fn scale(&self, k: i64, ctx: PrecisionContext) -> Angle {
        let _ = ctx;
        let (num, den, rad) = self.parts();
        let num = ((num as i128) * (k as i128)).rem_euclid(den as i128);
        let g = gcd128(num, den as i128).max(1);
        let (num, den) = ((num / g) as i64, (den as i128 / g) as i64);
        match rad {
            None => Angle::Turn { num, den },
            Some(r) => Angle::with_parts(num, den, r.mul_i64_exact(k)),
        }
    }

    pub fn neg(&self, ctx: PrecisionContext) -> Angle {
        self.scale(-1, ctx)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Angle::Turn { num: 0, .. })
    }

    /// `(cos, sin)`; quarter-turn multiples come out exactly `0`/`±1`.
    pub fn cos_sin(&self, ctx: PrecisionContext) -> (Hp, Hp) {
        if let Angle::Turn { num, den } = self {
            let quarter = match den {
                1 => Some(0i64),
                2 => Some(num * 2),
                4 => Some(*num),
                _ => None,
            };
            if let Some(q) = quarter {
                let one = Hp::one(ctx);
                let zero = Hp::zero(ctx);
                return match q.rem_euclid(4) {
                    0 => (one, zero),
                    1 => (zero, one),
                    2 => (one.neg(), zero),
                    _ => (zero, one.neg()),
                };
            }
        }
        let r = self.radians(ctx);
        (r.cos(ctx), r.sin(ctx))
    }

    /// Circular distance to `rhs` in radians, in `[0, π]`.
    pub fn dist(&self, rhs: &Angle, ctx: PrecisionContext) -> Hp {
        let d = self.radians(ctx).sub(&rhs.radians(ctx), ctx).abs();
        let tau = Hp::two_pi(ctx);
        let pi = Hp::pi(ctx);
        if d.cmp(&pi) == std::cmp::Ordering::Greater {
            tau.sub(&d, ctx).abs()
        } else {
            d
        }
    }
}

fn gcd128(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Exact sum of two turn fractions, reduced into `[0, 1)`.
fn add_frac(n1: i64, d1: i64, n2: i64, d2: i64) -> (i64, i64) {
    let den = (d1 as i128) * (d2 as i128);
    let num = (n1 as i128) * (d2 as i128) + (n2 as i128) * (d1 as i128);
    let num = num.rem_euclid(den);
    let g = gcd128(num, den).max(1);
    ((num / g) as i64, (den / g) as i64)
}

/// Provenance note for a preset parameter whose irrationality or density
/// hypothesis is assumed, not proven.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamTag {
    /// Symbolic form of the parameter, e.g. `-(2^(-1/2))`.
    pub description: String,
    /// The hypothesis riding on it, e.g. which log-ratio must be irrational.
    pub irrationality_notes: String,
}

/// Nonzero real (or zero) in log-sign form.
#[derive(Debug, Clone, PartialEq)]
pub struct RealScalar {
    sign: Sign,
    /// `ln|x|`; `-inf` iff `sign == Zero`.
    log_mod: Hp,
}

impl RealScalar {
    pub fn zero() -> RealScalar {
        RealScalar { sign: Sign::Zero, log_mod: Hp::neg_inf() }
    }

    pub fn one(ctx: PrecisionContext) -> RealScalar {
        RealScalar { sign: Sign::Pos, log_mod: Hp::zero(ctx) }
    }

    pub fn from_parts(sign: Sign, log_mod: Hp) -> RealScalar {
        match sign {
            Sign::Zero => RealScalar::zero(),
            s => RealScalar { sign: s, log_mod },
        }
    }

    pub fn from_linear(x: &Hp, ctx: PrecisionContext) -> RealScalar {
        match Sign::of(x) {
            Sign::Zero => RealScalar::zero(),
            s => RealScalar { sign: s, log_mod: x.abs().ln(ctx).expect("|x| > 0") },
        }
    }

    pub fn from_f64(v: f64, ctx: PrecisionContext) -> RealScalar {
        RealScalar::from_linear(&Hp::from_f64(v, ctx), ctx)
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// `ln|x|` (`-inf` for zero).
    pub fn log_mod(&self) -> &Hp {
        &self.log_mod
    }

    pub fn is_zero(&self) -> bool {
        self.sign == Sign::Zero
    }

    /// Exactly ±1 or 0.
    pub fn is_unit_modulus(&self) -> bool {
        self.sign != Sign::Zero && self.log_mod.is_zero()
    }

    pub fn mul(&self, rhs: &RealScalar, _ctx: PrecisionContext) -> RealScalar {
        let sign = self.sign.mul(rhs.sign);
        if sign == Sign::Zero {
            return RealScalar::zero();
        }
        RealScalar { sign, log_mod: self.log_mod.add_exact(&rhs.log_mod) }
    }

    /// `x^k` for `k ∈ ℤ`, with `0⁰ = 1`.
    pub fn pow(&self, k: i64, ctx: PrecisionContext) -> Result<RealScalar> {
        if self.is_zero() {
            return match k {
                0 => Ok(RealScalar::one(ctx)),
                k if k > 0 => Ok(RealScalar::zero()),
                _ => Err(Error::ZeroParameter),
            };
        }
        Ok(RealScalar {
            sign: self.sign.pow(k),
            log_mod: self.log_mod.mul_i64_exact(k),
        })
    }

    pub fn recip(&self, _ctx: PrecisionContext) -> Result<RealScalar> {
        if self.is_zero() {
            return Err(Error::ZeroParameter);
        }
        Ok(RealScalar { sign: self.sign, log_mod: self.log_mod.neg() })
    }

    pub fn neg(&self) -> RealScalar {
        let sign = match self.sign {
            Sign::Neg => Sign::Pos,
            Sign::Pos => Sign::Neg,
            Sign::Zero => Sign::Zero,
        };
        RealScalar { sign, log_mod: self.log_mod.clone() }
    }

    /// Back to the linear representation; guards exponent overflow.
    pub fn to_linear(&self, ctx: PrecisionContext) -> Result<Hp> {
        if self.is_zero() {
            return Ok(Hp::zero(ctx));
        }
        let mag = self.log_mod.exp(ctx)?;
        Ok(if self.sign == Sign::Neg { mag.neg() } else { mag })
    }

    /// Exact equality of the representation.
    pub fn bit_eq(&self, rhs: &RealScalar) -> bool {
        self.sign == rhs.sign && (self.is_zero() || self.log_mod.bit_eq(&rhs.log_mod))
    }
}

/// Complex scalar in log-polar form.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexScalar {
    /// `ln|z|`; `-inf` iff zero.
    log_mod: Hp,
    angle: Angle,
}

impl ComplexScalar {
    pub fn zero() -> ComplexScalar {
        ComplexScalar { log_mod: Hp::neg_inf(), angle: Angle::zero() }
    }

    pub fn one(ctx: PrecisionContext) -> ComplexScalar {
        ComplexScalar { log_mod: Hp::zero(ctx), angle: Angle::zero() }
    }

    pub fn from_parts(log_mod: Hp, angle: Angle) -> ComplexScalar {
        ComplexScalar { log_mod, angle }
    }

    /// Modulus given linearly, angle kept exact.
    pub fn from_modulus_angle(modulus: &Hp, angle: Angle, ctx: PrecisionContext) -> Result<ComplexScalar> {
        if modulus.signum_i8() <= 0 {
            return Err(Error::BadInput("modulus must be positive".into()));
        }
        Ok(ComplexScalar { log_mod: modulus.ln(ctx)?, angle })
    }

    pub fn from_real_scalar(x: &RealScalar) -> ComplexScalar {
        match x.sign() {
            Sign::Zero => ComplexScalar::zero(),
            Sign::Pos => ComplexScalar { log_mod: x.log_mod().clone(), angle: Angle::zero() },
            Sign::Neg => ComplexScalar { log_mod: x.log_mod().clone(), angle: Angle::turn(1, 2) },
        }
    }

    pub fn from_linear(z: &HpComplex, ctx: PrecisionContext) -> ComplexScalar {
        if z.is_zero() {
            return ComplexScalar::zero();
        }
        if z.im.is_zero() {
            return ComplexScalar::from_real_scalar(&RealScalar::from_linear(&z.re, ctx));
        }
        if z.re.is_zero() {
            let sc = RealScalar::from_linear(&z.im, ctx);
            let angle = if sc.sign() == Sign::Pos { Angle::turn(1, 4) } else { Angle::turn(3, 4) };
            return ComplexScalar { log_mod: sc.log_mod().clone(), angle };
        }
        let log_mod = z.norm_sq(ctx).ln(ctx).expect("nonzero").mul(&Hp::from_f64(0.5, ctx), ctx);
        ComplexScalar { log_mod, angle: Angle::from_radians(z.arg(ctx), ctx) }
    }

    pub fn log_mod(&self) -> &Hp {
        &self.log_mod
    }

    pub fn angle(&self) -> &Angle {
        &self.angle
    }

    pub fn is_zero(&self) -> bool {
        self.log_mod.is_neg_inf()
    }

    pub fn is_unit_modulus(&self) -> bool {
        !self.is_zero() && self.log_mod.is_zero()
    }

    pub fn mul(&self, rhs: &ComplexScalar, ctx: PrecisionContext) -> ComplexScalar {
        if self.is_zero() || rhs.is_zero() {
            return ComplexScalar::zero();
        }
        ComplexScalar {
            log_mod: self.log_mod.add_exact(&rhs.log_mod),
            angle: self.angle.add(&rhs.angle, ctx),
        }
    }

    pub fn pow(&self, k: i64, ctx: PrecisionContext) -> Result<ComplexScalar> {
        if self.is_zero() {
            return match k {
                0 => Ok(ComplexScalar::one(ctx)),
                k if k > 0 => Ok(ComplexScalar::zero()),
                _ => Err(Error::ZeroParameter),
            };
        }
        Ok(ComplexScalar {
            log_mod: self.log_mod.mul_i64_exact(k),
            angle: self.angle.scale(k, ctx),
        })
    }

    pub fn recip(&self, ctx: PrecisionContext) -> Result<ComplexScalar> {
        if self.is_zero() {
            return Err(Error::ZeroParameter);
        }
        Ok(ComplexScalar {
            log_mod: self.log_mod.neg(),
            angle: self.angle.neg(ctx),
        })
    }

    pub fn to_linear(&self, ctx: PrecisionContext) -> Result<HpComplex> {
        if self.is_zero() {
            return Ok(HpComplex::zero(ctx));
        }
        let r = self.log_mod.exp(ctx)?;
        let (c, s) = self.angle.cos_sin(ctx);
        Ok(HpComplex::new(r.mul(&c, ctx), r.mul(&s, ctx)))
    }

    /// Exact equality of the representation (angles compared structurally).
    pub fn bit_eq(&self, rhs: &ComplexScalar) -> bool {
        if self.is_zero() || rhs.is_zero() {
            return self.is_zero() && rhs.is_zero();
        }
        if !self.log_mod.bit_eq(&rhs.log_mod) {
            return false;
        }
        match (&self.angle, &rhs.angle) {
            (Angle::Turn { num: n1, den: d1 }, Angle::Turn { num: n2, den: d2 }) => {
                n1 == n2 && d1 == d2
            }
            (
                Angle::Mixed { num: n1, den: d1, rad: a },
                Angle::Mixed { num: n2, den: d2, rad: b },
            ) => n1 == n2 && d1 == d2 && a.bit_eq(b),
            _ => false,
        }
    }
}

/// Scalar behavior shared by the real and complex kinds, used by the reduced
/// dynamics and solvers that are generic over the ground field.
pub trait ScalarLike: Clone {
    type Linear: Clone;

    fn one_value(ctx: PrecisionContext) -> Self;
    fn zero_value() -> Self;
    fn from_linear_value(v: &Self::Linear, ctx: PrecisionContext) -> Self;
    fn is_zero(&self) -> bool;
    fn log_mod(&self) -> &Hp;
    fn mul_value(&self, rhs: &Self, ctx: PrecisionContext) -> Self;
    fn pow_value(&self, k: i64, ctx: PrecisionContext) -> Result<Self>;
    fn recip_value(&self, ctx: PrecisionContext) -> Result<Self>;
    fn to_linear_value(&self, ctx: PrecisionContext) -> Result<Self::Linear>;
    fn bit_eq_value(&self, rhs: &Self) -> bool;

    fn lin_zero(ctx: PrecisionContext) -> Self::Linear;
    fn lin_add_exact(a: &Self::Linear, b: &Self::Linear) -> Self::Linear;
    fn lin_scale_i64_exact(a: &Self::Linear, k: i64) -> Self::Linear;
    fn lin_mul(a: &Self::Linear, b: &Self::Linear, ctx: PrecisionContext) -> Self::Linear;
    fn lin_recip(a: &Self::Linear, ctx: PrecisionContext) -> Result<Self::Linear>;
    /// `|a - b|`.
    fn lin_dist(a: &Self::Linear, b: &Self::Linear, ctx: PrecisionContext) -> Hp;
}

impl ScalarLike for RealScalar {
    type Linear = Hp;

    fn one_value(ctx: PrecisionContext) -> Self {
        RealScalar::one(ctx)
    }
    fn zero_value() -> Self {
        RealScalar::zero()
    }
    fn from_linear_value(v: &Self::Linear, ctx: PrecisionContext) -> Self {
        RealScalar::from_linear(v, ctx)
    }
    fn is_zero(&self) -> bool {
        RealScalar::is_zero(self)
    }
    fn log_mod(&self) -> &Hp {
        RealScalar::log_mod(self)
    }
    fn mul_value(&self, rhs: &Self, ctx: PrecisionContext) -> Self {
        self.mul(rhs, ctx)
    }
    fn pow_value(&self, k: i64, ctx: PrecisionContext) -> Result<Self> {
        self.pow(k, ctx)
    }
    fn recip_value(&self, ctx: PrecisionContext) -> Result<Self> {
        self.recip(ctx)
    }
    fn to_linear_value(&self, ctx: PrecisionContext) -> Result<Hp> {
        self.to_linear(ctx)
    }
    fn bit_eq_value(&self, rhs: &Self) -> bool {
        self.bit_eq(rhs)
    }

    fn lin_zero(ctx: PrecisionContext) -> Hp {
        Hp::zero(ctx)
    }
    fn lin_add_exact(a: &Hp, b: &Hp) -> Hp {
        a.add_exact(b)
    }
    fn lin_scale_i64_exact(a: &Hp, k: i64) -> Hp {
        a.mul_i64_exact(k)
    }
    fn lin_mul(a: &Hp, b: &Hp, ctx: PrecisionContext) -> Hp {
        a.mul(b, ctx)
    }
    fn lin_recip(a: &Hp, ctx: PrecisionContext) -> Result<Hp> {
        a.recip(ctx)
    }
    fn lin_dist(a: &Hp, b: &Hp, _ctx: PrecisionContext) -> Hp {
        a.sub_exact(b).abs()
    }
}

impl ScalarLike for ComplexScalar {
    type Linear = HpComplex;

    fn one_value(ctx: PrecisionContext) -> Self {
        ComplexScalar::one(ctx)
    }
    fn zero_value() -> Self {
        ComplexScalar::zero()
    }
    fn from_linear_value(v: &Self::Linear, ctx: PrecisionContext) -> Self {
        ComplexScalar::from_linear(v, ctx)
    }
    fn is_zero(&self) -> bool {
        ComplexScalar::is_zero(self)
    }
    fn log_mod(&self) -> &Hp {
        ComplexScalar::log_mod(self)
    }
    fn mul_value(&self, rhs: &Self, ctx: PrecisionContext) -> Self {
        self.mul(rhs, ctx)
    }
    fn pow_value(&self, k: i64, ctx: PrecisionContext) -> Result<Self> {
        self.pow(k, ctx)
    }
    fn recip_value(&self, ctx: PrecisionContext) -> Result<Self> {
        self.recip(ctx)
    }
    fn to_linear_value(&self, ctx: PrecisionContext) -> Result<HpComplex> {
        self.to_linear(ctx)
    }
    fn bit_eq_value(&self, rhs: &Self) -> bool {
        self.bit_eq(rhs)
    }

    fn lin_zero(ctx: PrecisionContext) -> HpComplex {
        HpComplex::zero(ctx)
    }
    fn lin_add_exact(a: &HpComplex, b: &HpComplex) -> HpComplex {
        a.add_exact(b)
    }
    fn lin_scale_i64_exact(a: &HpComplex, k: i64) -> HpComplex {
        a.scale_i64_exact(k)
    }
    fn lin_mul(a: &HpComplex, b: &HpComplex, ctx: PrecisionContext) -> HpComplex {
        a.mul(b, ctx)
    }
    fn lin_recip(a: &HpComplex, ctx: PrecisionContext) -> Result<HpComplex> {
        a.recip(ctx)
    }
    fn lin_dist(a: &HpComplex, b: &HpComplex, ctx: PrecisionContext) -> Hp {
        a.dist(b, ctx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    #[test]
    fn zero_pow_zero_is_one() {
        let c = ctx();
        assert!(RealScalar::zero().pow(0, c).unwrap().bit_eq(&RealScalar::one(c)));
        assert!(ComplexScalar::zero().pow(0, c).unwrap().bit_eq(&ComplexScalar::one(c)));
        assert!(RealScalar::zero().pow(3, c).unwrap().is_zero());
        assert!(RealScalar::zero().pow(-1, c).is_err());
    }

    #[test]
    fn pow_additivity_exact() {
        let c = ctx();
        let x = RealScalar::from_f64(-1.7, c);
        let a = x.pow(5, c).unwrap().mul(&x.pow(9, c).unwrap(), c);
        let b = x.pow(14, c).unwrap();
        assert!(a.bit_eq(&b));

        let z = ComplexScalar::from_modulus_angle(&Hp::from_f64(2.5, c), Angle::turn(1, 4), c).unwrap();
        let a = z.pow(3, c).unwrap().mul(&z.pow(4, c).unwrap(), c);
        let b = z.pow(7, c).unwrap();
        assert!(a.bit_eq(&b));
    }

    #[test]
    fn reciprocal_pair_cancels_exactly() {
        let c = ctx();
        let a = RealScalar::from_f64(-0.7071067811865476, c);
        let inv = a.recip(c).unwrap();
        for k in [1i64, 4, 17, 1000] {
            let prod = a.pow(k, c).unwrap().mul(&inv.pow(k, c).unwrap(), c);
            assert!(prod.bit_eq(&RealScalar::one(c)), "k={k}");
        }
    }

    #[test]
    fn quarter_turn_power_identity() {
        let c = ctx();
        // 4i and -1/4, the latter with log built by negation.
        let a7 = ComplexScalar::from_modulus_angle(&Hp::from_i64(4, c), Angle::turn(1, 4), c).unwrap();
        let a8 = ComplexScalar::from_parts(a7.log_mod().neg(), Angle::turn(1, 2));
        for rho in [0i64, 4, 8, 48] {
            let prod = a7.pow(rho, c).unwrap().mul(&a8.pow(rho, c).unwrap(), c);
            assert!(prod.bit_eq(&ComplexScalar::one(c)), "rho={rho}");
        }
        // Not an identity off the 4ℕ lattice.
        let prod = a7.pow(2, c).unwrap().mul(&a8.pow(2, c).unwrap(), c);
        assert!(!prod.bit_eq(&ComplexScalar::one(c)));
    }

    #[test]
    fn sign_parity_exact() {
        let c = ctx();
        let x = RealScalar::from_f64(-0.5, c);
        for k in 0..32i64 {
            let want = if k % 2 == 0 { Sign::Pos } else { Sign::Neg };
            assert_eq!(x.pow(k, c).unwrap().sign(), want);
        }
    }

    #[test]
    fn linear_round_trip() {
        let c = ctx();
        let v = Hp::from_f64(-3.25, c);
        let x = RealScalar::from_linear(&v, c);
        let back = x.to_linear(c).unwrap();
        assert!(back.sub(&v, c).abs().to_f64() < 1e-36);
    }

    #[test]
    fn to_linear_overflow_guard() {
        let c = ctx();
        let x = RealScalar::from_parts(Sign::Pos, Hp::from_i64(1 << 31, c));
        assert!(matches!(x.to_linear(c), Err(Error::OverflowRange(_))));
    }

    #[test]
    fn angle_arithmetic() {
        let c = ctx();
        let q = Angle::turn(1, 4);
        assert_eq!(q.scale(4, c), Angle::zero());
        assert_eq!(q.scale(6, c), Angle::turn(1, 2));
        assert_eq!(q.add(&Angle::turn(1, 2), c), Angle::turn(3, 4));
        assert_eq!(q.neg(c), Angle::turn(3, 4));
        let (cos, sin) = Angle::turn(1, 2).cos_sin(c);
        assert_eq!(cos.to_f64(), -1.0);
        assert!(sin.is_zero());
    }

    #[test]
    fn mixed_angles_keep_the_rational_part_exact() {
        let c = ctx();
        let irr = Angle::from_radians(Hp::from_f64(0.77, c), c);
        // Quarter-turn contributions cancel bit-for-bit even when folded into
        // an irrational angle one at a time.
        let acc = irr.add(&Angle::turn(3, 4), c).add(&Angle::turn(1, 4), c);
        assert_eq!(acc, irr);
        // Scaling acts exactly on both parts.
        let third = Angle::turn(1, 3).add(&irr, c);
        let tripled = third.scale(3, c);
        assert_eq!(tripled, irr.scale(3, c));
    }

    #[test]
    fn radian_wrap_stays_in_range() {
        let c = ctx();
        let big = Hp::from_f64(1234.5678, c);
        let a = Angle::from_radians(big, c);
        let r = a.radians(c).to_f64();
        assert!((0.0..std::f64::consts::TAU).contains(&r));
        let expect = 1234.5678f64.rem_euclid(std::f64::consts::TAU);
        assert!((r - expect).abs() < 1e-9);
    }

    #[test]
    fn imaginary_axis_from_linear_is_exact() {
        let c = ctx();
        let z = HpComplex::from_f64(0.0, -2.0, c);
        let s = ComplexScalar::from_linear(&z, c);
        assert_eq!(*s.angle(), Angle::turn(3, 4));
        let back = s.to_linear(c).unwrap();
        assert!(back.re.is_zero());
        assert!((back.im.to_f64() + 2.0).abs() < 1e-30);
    }
}

//! Working-precision context and the high-precision real type (`Hp`) the rest
//! of the crate is built on.
//!
//! `Hp` wraps an arbitrary-precision binary float. Rounded operations take a
//! [`PrecisionContext`] and round to its mantissa width; the `_exact` variants
//! never round (the mantissa grows as needed, capped far above any width this
//! crate produces). Exact sums are what make the algebraic identities of the
//! reduced dynamics hold bit-for-bit instead of merely to tolerance.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign};

use crate::error::{Error, Result};

/// Smallest admissible working precision.
pub const MIN_BITS: u32 = 64;
/// Default working precision.
pub const DEFAULT_BITS: u32 = 128;
/// Mantissa cap for exact accumulation; reaching it rounds instead of failing.
const EXACT_BITS_CAP: usize = 1 << 15;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constants cache"));
}

fn with_cc<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Mantissa width (and derived machine epsilon) shared by a whole computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionContext {
    bits: u32,
}

impl PrecisionContext {
    /// `bits` must be at least [`MIN_BITS`].
    pub fn new(bits: u32) -> Result<Self> {
        if bits < MIN_BITS {
            return Err(Error::BadInput(format!(
                "precision must be at least {MIN_BITS} bits, got {bits}"
            )));
        }
        Ok(PrecisionContext { bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Mantissa width as expected by the backend.
    pub fn p(&self) -> usize {
        self.bits as usize
    }

    /// `2^(1 - bits)`.
    pub fn eps_machine(&self) -> Hp {
        Hp::pow2(1 - self.bits as i64, *self)
    }

    /// Context with doubled mantissa width (used for re-validation passes).
    pub fn doubled(&self) -> Self {
        PrecisionContext { bits: self.bits * 2 }
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext { bits: DEFAULT_BITS }
    }
}

/// High-precision real number. Never NaN; infinities only where documented
/// (the log of a zero scalar is `-inf`).
#[derive(Debug, Clone)]
pub struct Hp(BigFloat);

impl Hp {
    fn wrap(x: BigFloat) -> Hp {
        debug_assert!(!x.is_nan(), "internal NaN");
        Hp(x)
    }

    fn capped(x: BigFloat) -> Hp {
        let mut x = x;
        if let Some(len) = x.mantissa_max_bit_len() {
            if len > EXACT_BITS_CAP {
                // Exact accumulation ran away; keep going with a huge but
                // bounded mantissa rather than aborting.
                x.set_precision(EXACT_BITS_CAP, RM).ok();
            }
        }
        Hp::wrap(x)
    }

    pub fn zero(ctx: PrecisionContext) -> Hp {
        Hp::wrap(BigFloat::new(ctx.p()))
    }

    pub fn one(ctx: PrecisionContext) -> Hp {
        Hp::from_i64(1, ctx)
    }

    pub fn neg_inf() -> Hp {
        Hp(BigFloat::from_f64(f64::NEG_INFINITY, MIN_BITS as usize))
    }

    /// `2^e`, exact.
    pub fn pow2(e: i64, ctx: PrecisionContext) -> Hp {
        let mut x = BigFloat::from_u8(1, ctx.p());
        x.set_exponent((e + 1) as astro_float::Exponent);
        Hp::wrap(x)
    }

    pub fn from_f64(v: f64, ctx: PrecisionContext) -> Hp {
        Hp::wrap(BigFloat::from_f64(v, ctx.p()))
    }

    pub fn from_i64(v: i64, ctx: PrecisionContext) -> Hp {
        Hp::wrap(BigFloat::from_i64(v, ctx.p()))
    }

    pub fn from_u64(v: u64, ctx: PrecisionContext) -> Hp {
        Hp::wrap(BigFloat::from_u64(v, ctx.p()))
    }

    pub fn from_i128(v: i128, ctx: PrecisionContext) -> Hp {
        // The backend insists on at least 128 bits for 128-bit integers;
        // the value is exact either way.
        Hp::wrap(BigFloat::from_i128(v, ctx.p().max(128)))
    }

    /// Parse a decimal string (plain or scientific notation).
    pub fn parse_dec(s: &str, ctx: PrecisionContext) -> Result<Hp> {
        let t = s.trim();
        if t.is_empty() {
            return Err(Error::BadInput("empty number".into()));
        }
        // The backend accepts some non-finite spellings; reject them up front.
        let lower = t.to_ascii_lowercase();
        if lower.contains("inf") || lower.contains("nan") {
            return Err(Error::BadInput(format!("not a finite decimal: {s}")));
        }
        let x = with_cc(|cc| BigFloat::parse(t, Radix::Dec, ctx.p(), RM, cc));
        if x.is_nan() {
            return Err(Error::BadInput(format!("unparseable decimal: {s}")));
        }
        Ok(Hp::wrap(x))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_neg_inf(&self) -> bool {
        self.0.is_inf_neg()
    }

    pub fn is_finite(&self) -> bool {
        !self.0.is_inf() && !self.0.is_nan()
    }

    /// -1, 0, or +1.
    pub fn signum_i8(&self) -> i8 {
        if self.0.is_zero() {
            0
        } else if self.0.is_negative() {
            -1
        } else {
            1
        }
    }

    // -- rounded arithmetic ---------------------------------------------------

    pub fn add(&self, rhs: &Hp, ctx: PrecisionContext) -> Hp {
        Hp::wrap(self.0.add(&rhs.0, ctx.p(), RM))
    }

    pub fn sub(&self, rhs: &Hp, ctx: PrecisionContext) -> Hp {
        Hp::wrap(self.0.sub(&rhs.0, ctx.p(), RM))
    }

    pub fn mul(&self, rhs: &Hp, ctx: PrecisionContext) -> Hp {
        Hp::wrap(self.0.mul(&rhs.0, ctx.p(), RM))
    }

    pub fn div(&self, rhs: &Hp, ctx: PrecisionContext) -> Result<Hp> {
        if rhs.is_zero() {
            return Err(Error::ZeroParameter);
        }
        Ok(Hp::wrap(self.0.div(&rhs.0, ctx.p(), RM)))
    }

    pub fn recip(&self, ctx: PrecisionContext) -> Result<Hp> {
        if self.is_zero() {
            return Err(Error::ZeroParameter);
        }
        Ok(Hp::wrap(self.0.reciprocal(ctx.p(), RM)))
    }

    // -- exact arithmetic -----------------------------------------------------

    /// Exact sum (no rounding; see module docs for the cap).
    ///
    /// `add_full_prec` returns zero when either operand is zero, so zero
    /// operands are handled here.
    pub fn add_exact(&self, rhs: &Hp) -> Hp {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        Hp::capped(self.0.add_full_prec(&rhs.0))
    }

    pub fn sub_exact(&self, rhs: &Hp) -> Hp {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.neg();
        }
        Hp::capped(self.0.sub_full_prec(&rhs.0))
    }

    /// Exact product.
    pub fn mul_exact(&self, rhs: &Hp) -> Hp {
        Hp::capped(self.0.mul_full_prec(&rhs.0))
    }

    /// Exact product with an integer.
    pub fn mul_i64_exact(&self, k: i64) -> Hp {
        let kf = BigFloat::from_i64(k, MIN_BITS as usize);
        Hp::capped(self.0.mul_full_prec(&kf))
    }

    // -- elementary functions -------------------------------------------------

    pub fn sqrt(&self, ctx: PrecisionContext) -> Result<Hp> {
        if self.signum_i8() < 0 {
            return Err(Error::BadInput("sqrt of a negative value".into()));
        }
        Ok(Hp::wrap(self.0.sqrt(ctx.p(), RM)))
    }

    pub fn ln(&self, ctx: PrecisionContext) -> Result<Hp> {
        if self.signum_i8() <= 0 {
            return Err(Error::BadInput("log of a non-positive value".into()));
        }
        Ok(Hp::wrap(with_cc(|cc| self.0.ln(ctx.p(), RM, cc))))
    }

    /// `e^self`; errors with `OverflowRange` when the result leaves the
    /// representable exponent range in either direction.
    pub fn exp(&self, ctx: PrecisionContext) -> Result<Hp> {
        // Exponent field is 32-bit; stay well inside it.
        let bound = Hp::from_i64(1 << 30, ctx);
        if self.abs().cmp(&bound) == Ordering::Greater {
            return Err(Error::OverflowRange(format!(
                "exp argument {} exceeds 2^30 in magnitude",
                self.to_f64()
            )));
        }
        let r = with_cc(|cc| self.0.exp(ctx.p(), RM, cc));
        if r.is_inf() {
            return Err(Error::OverflowRange("exp overflow".into()));
        }
        Ok(Hp::wrap(r))
    }

    pub fn sin(&self, ctx: PrecisionContext) -> Hp {
        Hp::wrap(with_cc(|cc| self.0.sin(ctx.p(), RM, cc)))
    }

    pub fn cos(&self, ctx: PrecisionContext) -> Hp {
        Hp::wrap(with_cc(|cc| self.0.cos(ctx.p(), RM, cc)))
    }

    pub fn atan(&self, ctx: PrecisionContext) -> Hp {
        Hp::wrap(with_cc(|cc| self.0.atan(ctx.p(), RM, cc)))
    }

    /// Angle of the point `(x, y)` in `[0, 2π)`.
    pub fn atan2(y: &Hp, x: &Hp, ctx: PrecisionContext) -> Hp {
        let pi = Hp::pi(ctx);
        let raw = if x.is_zero() && y.is_zero() {
            Hp::zero(ctx)
        } else if x.is_zero() {
            let half_pi = pi.mul(&Hp::from_f64(0.5, ctx), ctx);
            if y.signum_i8() > 0 {
                half_pi
            } else {
                half_pi.neg()
            }
        } else {
            let base = y.div(x, ctx).expect("x nonzero").atan(ctx);
            match (x.signum_i8() > 0, y.signum_i8() >= 0) {
                (true, _) => base,
                (false, true) => base.add(&pi, ctx),
                (false, false) => base.sub(&pi, ctx),
            }
        };
        // Wrap (-π, π] to [0, 2π).
        if raw.signum_i8() < 0 {
            raw.add(&Hp::two_pi(ctx), ctx)
        } else {
            raw
        }
    }

    // -- constants -------------------------------------------------------------

    pub fn pi(ctx: PrecisionContext) -> Hp {
        Hp::wrap(with_cc(|cc| cc.pi(ctx.p(), RM)))
    }

    pub fn two_pi(ctx: PrecisionContext) -> Hp {
        Hp::pi(ctx).mul_i64_exact(2)
    }

    pub fn ln2(ctx: PrecisionContext) -> Hp {
        Hp::wrap(with_cc(|cc| cc.ln_2(ctx.p(), RM)))
    }

    // -- structure -------------------------------------------------------------

    pub fn neg(&self) -> Hp {
        Hp::wrap(-&self.0)
    }

    pub fn abs(&self) -> Hp {
        Hp::wrap(self.0.abs())
    }

    pub fn floor(&self) -> Hp {
        Hp::wrap(self.0.floor())
    }

    /// Fractional part in `[0, 1)`: `self - floor(self)`.
    pub fn fract01(&self) -> Hp {
        let f = self.sub_exact(&self.floor());
        // Guard the half-open invariant against any representation edge.
        if f.signum_i8() < 0 {
            return f.add_exact(&Hp::from_i64(1, PrecisionContext::default()));
        }
        f
    }

    pub fn cmp(&self, rhs: &Hp) -> Ordering {
        match self.0.cmp(&rhs.0) {
            Some(v) if v < 0 => Ordering::Less,
            Some(v) if v > 0 => Ordering::Greater,
            Some(_) => Ordering::Equal,
            None => unreachable!("NaN in Hp comparison"),
        }
    }

    pub fn min(&self, rhs: &Hp) -> Hp {
        if self.cmp(rhs) == Ordering::Greater {
            rhs.clone()
        } else {
            self.clone()
        }
    }

    pub fn max(&self, rhs: &Hp) -> Hp {
        if self.cmp(rhs) == Ordering::Less {
            rhs.clone()
        } else {
            self.clone()
        }
    }

    /// Bit-identical equality (same mantissa, exponent and sign after
    /// normalization); used by the exactness tests.
    pub fn bit_eq(&self, rhs: &Hp) -> bool {
        self.cmp(rhs) == Ordering::Equal
    }

    // -- conversions -----------------------------------------------------------

    /// Nearest-below double; good to one or two ulps, used only for reporting
    /// and coarse prefilters.
    pub fn to_f64(&self) -> f64 {
        if self.0.is_zero() {
            return 0.0;
        }
        if self.0.is_inf_pos() {
            return f64::INFINITY;
        }
        if self.0.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        let (words, _len, sign, e, _inexact) = self.0.as_raw_parts().expect("finite value");
        let n = words.len();
        let top = words[n - 1] as f64;
        let next = if n >= 2 { words[n - 2] as f64 } else { 0.0 };
        // Fraction in [1/2, 1).
        let frac = top / 1.8446744073709552e19 + next / 3.402823669209385e38;
        let mag = frac * 2f64.powi(e.clamp(-2000, 2000));
        if sign == Sign::Neg {
            -mag
        } else {
            mag
        }
    }

    /// Exact integer extraction of an integer-valued `Hp`.
    fn integer_to_i128(&self) -> Result<i128> {
        if self.0.is_zero() {
            return Ok(0);
        }
        let (words, _len, sign, e, _inexact) = self.0.as_raw_parts().expect("finite value");
        if e <= 0 {
            return Ok(0);
        }
        if e > 127 {
            return Err(Error::OverflowRange(format!(
                "integer magnitude near 2^{e} exceeds i128"
            )));
        }
        let n = words.len();
        let hi = words[n - 1] as u128;
        let lo = if n >= 2 { words[n - 2] as u128 } else { 0 };
        let m_top: u128 = (hi << 64) | lo;
        let v = m_top >> (128 - e as u32);
        let v = v as i128;
        Ok(if sign == Sign::Neg { -v } else { v })
    }

    /// `floor(self)` as an i128.
    pub fn floor_i128(&self) -> Result<i128> {
        self.floor().integer_to_i128()
    }

    /// Nearest integer (ties away from zero) as an i128.
    pub fn round_i128(&self) -> Result<i128> {
        let half = Hp::from_f64(0.5, PrecisionContext::default());
        self.add_exact(&half).floor_i128()
    }

    /// Decimal scientific notation with enough digits to round-trip at the
    /// value's own precision.
    pub fn to_dec_string(&self) -> String {
        if self.0.is_zero() {
            return "0".into();
        }
        if self.0.is_inf_neg() {
            return "-inf".into();
        }
        if self.0.is_inf_pos() {
            return "inf".into();
        }
        let (sign, digits, e10) = with_cc(|cc| self.0.convert_to_radix(Radix::Dec, RM, cc))
            .expect("finite value converts");
        let mut s = String::new();
        if sign == Sign::Neg {
            s.push('-');
        }
        let ds: Vec<u8> = digits.iter().map(|d| d + b'0').collect();
        let ds = String::from_utf8(ds).expect("digits");
        let ds = ds.trim_end_matches('0');
        let ds = if ds.is_empty() { "0" } else { ds };
        // Value is 0.digits * 10^e10; render as d.ddd e(e10-1).
        s.push_str(&ds[..1]);
        if ds.len() > 1 {
            s.push('.');
            s.push_str(&ds[1..]);
        }
        s.push('e');
        s.push_str(&(e10 - 1).to_string());
        s
    }
}

impl fmt::Display for Hp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dec_string())
    }
}

impl PartialEq for Hp {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl PartialOrd for Hp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

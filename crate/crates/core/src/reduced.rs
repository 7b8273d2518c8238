//! Reduced dynamics of a Jordan tuple.
//!
//! `Π A_j^{k_j}` acts on `(z₁, z₂)` as `(v·(z₁ + u·z₂), v·z₂)` with
//! `v = Π a_j^{k_j}` and `u = Σ k_j / a_j`, so the pair `(u, v)` carries the
//! whole orbit. `u` accumulates in linear form with exact sums; `v` stays in
//! log-sign form with exact log sums.

use crate::error::{Error, Result};
use crate::matrices::{jordan_tuple_product, Family, LinearField, MatrixTuple};
use crate::precision::PrecisionContext;
use crate::scalar::{ComplexScalar, RealScalar, ScalarLike};

/// The pair `(u, v)` of the reduced orbit.
#[derive(Debug, Clone)]
pub struct Reduced<S: ScalarLike> {
    pub u: S::Linear,
    pub v: S,
}

pub fn reduce<S: ScalarLike>(
    params: &[S],
    k: &[i64],
    ctx: PrecisionContext,
) -> Result<Reduced<S>> {
    let p = jordan_tuple_product(params, k, ctx)?;
    Ok(Reduced { u: p.u, v: p.v })
}

/// Tuple-level reduction for Jordan tuples of either ground field.
#[derive(Debug, Clone)]
pub enum ReducedPoint {
    Real(Reduced<RealScalar>),
    Complex(Reduced<ComplexScalar>),
}

pub fn reduce_tuple(t: &MatrixTuple, k: &[i64], ctx: PrecisionContext) -> Result<ReducedPoint> {
    if let Some(params) = t.jordan_real_params() {
        return Ok(ReducedPoint::Real(reduce(&params, k, ctx)?));
    }
    if let Some(params) = t.jordan_complex_params() {
        return Ok(ReducedPoint::Complex(reduce(&params, k, ctx)?));
    }
    Err(Error::MismatchedConfig(
        "reduction needs a tuple of single Jordan cells".into(),
    ))
}

/// Orbit point in log-sign form. With `z₂ ≠ 0` the coordinates share the
/// factor `v·z₂`, so dividing `first` by `second` cancels the exact log sums
/// bit-for-bit and recovers `z₁/z₂ + u`.
#[derive(Debug, Clone)]
pub struct OrbitPoint<S: ScalarLike> {
    pub first: S,
    pub second: S,
}

impl<S: ScalarLike> OrbitPoint<S> {
    pub fn to_linear(&self, ctx: PrecisionContext) -> Result<(S::Linear, S::Linear)> {
        Ok((self.first.to_linear_value(ctx)?, self.second.to_linear_value(ctx)?))
    }
}

pub fn orbit_point<S: ScalarLike>(
    params: &[S],
    k: &[i64],
    start: (&S::Linear, &S::Linear),
    ctx: PrecisionContext,
) -> Result<OrbitPoint<S>> {
    let r = reduce(params, k, ctx)?;
    let z1 = S::from_linear_value(start.0, ctx);
    let z2 = S::from_linear_value(start.1, ctx);
    if z2.is_zero() {
        return Ok(OrbitPoint { first: z1.mul_value(&r.v, ctx), second: S::zero_value() });
    }
    let second = z2.mul_value(&r.v, ctx);
    // w = z₁/z₂ + u, accumulated exactly in linear form.
    let w = S::lin_add_exact(
        &S::lin_mul(start.0, &S::lin_recip(start.1, ctx)?, ctx),
        &r.u,
    );
    let first = second.mul_value(&S::from_linear_value(&w, ctx), ctx);
    Ok(OrbitPoint { first, second })
}

/// The set of vectors with dense orbit, per family structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HcSet {
    /// `z₂ ≠ 0` (2-dim Jordan tuples; orbits of `z₂ = 0` stay on a line).
    SecondCoordNonzero,
    /// Every planar 2-block nonzero; with `odd_tail`, the trailing single
    /// coordinate must be nonzero too.
    BlocksNonzero { pairs: usize, odd_tail: bool },
}

impl HcSet {
    pub fn dim(&self) -> usize {
        match self {
            HcSet::SecondCoordNonzero => 2,
            HcSet::BlocksNonzero { pairs, odd_tail } => 2 * pairs + usize::from(*odd_tail),
        }
    }
}

/// Exact membership test (coordinates compare against zero exactly).
pub fn hc_member<L: LinearField>(set: &HcSet, vec: &[L]) -> Result<bool> {
    if vec.len() != set.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector dim {} vs set dim {}",
            vec.len(),
            set.dim()
        )));
    }
    match set {
        HcSet::SecondCoordNonzero => Ok(!vec[1].is_zero()),
        HcSet::BlocksNonzero { pairs, odd_tail } => {
            for j in 0..*pairs {
                if vec[2 * j].is_zero() && vec[2 * j + 1].is_zero() {
                    return Ok(false);
                }
            }
            if *odd_tail && vec[2 * pairs].is_zero() {
                return Ok(false);
            }
            Ok(true)
        }
    }
}

/// Descriptor for a tuple's family, when one is known.
pub fn hc_descriptor(t: &MatrixTuple) -> Option<HcSet> {
    match t.family {
        Family::JordanR2x4 | Family::JordanC2x8 => Some(HcSet::SecondCoordNonzero),
        Family::RotPairR2 | Family::RotRotPairR2 => {
            Some(HcSet::BlocksNonzero { pairs: 1, odd_tail: false })
        }
        Family::R3Triple => Some(HcSet::BlocksNonzero { pairs: 1, odd_tail: true }),
        Family::EvenN => Some(HcSet::BlocksNonzero { pairs: t.dim / 2, odd_tail: false }),
        Family::OddN => {
            Some(HcSet::BlocksNonzero { pairs: (t.dim - 1) / 2, odd_tail: true })
        }
        Family::Custom => {
            if t.jordan_real_params().is_some() || t.jordan_complex_params().is_some() {
                Some(HcSet::SecondCoordNonzero)
            } else {
                None
            }
        }
    }
}

//! Non-density certificates for 2×2 pairs.
//!
//! Each certificate carries the constants of a concrete obstruction that a
//! finite scan can verify: a line the orbit never leaves, a coupling term
//! that blows up, an isolated-value set, or an arithmetic progression with a
//! fixed gap. The checker re-verifies the obstruction at exactly the level it
//! is literally true; the step from the obstruction to "no dense orbit" is
//! prose in the `explanation` field, not an assertion.

use crate::diophantine::SearchBudget;
use crate::error::{Error, Result};
use crate::precision::{Hp, PrecisionContext};
use crate::scalar::RealScalar;

/// Which shapes the two 2×2 matrices take (scaled identity vs Jordan block).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    DiagDiag,
    DiagJordan,
    JordanJordan,
}

impl PairKind {
    pub fn name(&self) -> &'static str {
        match self {
            PairKind::DiagDiag => "diag-diag",
            PairKind::DiagJordan => "diag-jordan",
            PairKind::JordanJordan => "jordan-jordan",
        }
    }

    pub fn parse(s: &str) -> Result<PairKind> {
        match s {
            "diag-diag" => Ok(PairKind::DiagDiag),
            "diag-jordan" => Ok(PairKind::DiagJordan),
            "jordan-jordan" => Ok(PairKind::JordanJordan),
            other => Err(Error::BadInput(format!("unknown pair kind `{other}`"))),
        }
    }
}

/// The checkable constants, one variant per obstruction kind.
#[derive(Debug, Clone)]
pub enum Obstruction {
    /// Orbit of scaled identities stays on the line through the start vector;
    /// log-moduli lie in the image of ℕ² under (n, m) ↦ n·log_a + m·log_b.
    DiagonalLattice { log_a: Hp, log_b: Hp },
    /// First coordinate carries the term m·aⁿbᵐ·x₂: whenever the second
    /// coordinate's modulus sits in [min_mass, max_mass], the term's magnitude
    /// grows at least linearly in m.
    CouplingBlowup { min_mass: Hp, max_mass: Hp },
    /// One modulus is exactly 1, so second-coordinate moduli form the isolated
    /// set { other^m } (log gap `other_log`), a single point if both are 1.
    UnitModulus { unit_is_a: bool, other_log: Hp },
    /// {m·delta : m ∈ ℕ} is an arithmetic progression with gap |delta|
    /// (a single point when delta = 0); it never meets the interval of radius
    /// |delta|/4 around delta/2.
    ProgressionGap { delta: Hp, gap: Hp },
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub pair: PairKind,
    pub a: Hp,
    pub b: Hp,
    pub data: Obstruction,
    pub explanation: String,
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self.data {
            Obstruction::DiagonalLattice { .. } => "diagonal-lattice",
            Obstruction::CouplingBlowup { .. } => "coupling-blowup",
            Obstruction::UnitModulus { .. } => "unit-modulus",
            Obstruction::ProgressionGap { .. } => "progression-gap",
        }
    }
}

/// Builds the obstruction certificate for the pair shaped by `kind` with
/// diagonal entries `a` and `b`.
pub fn certify_pair(kind: PairKind, a: &Hp, b: &Hp, ctx: PrecisionContext) -> Result<Certificate> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::ZeroParameter);
    }
    let log_a = a.abs().ln(ctx)?;
    let log_b = b.abs().ln(ctx)?;
    let (data, explanation) = match kind {
        PairKind::DiagDiag => (
            Obstruction::DiagonalLattice { log_a: log_a.clone(), log_b: log_b.clone() },
            "Scaled identities act on every vector by the scalar a^n b^m, so the orbit \
             stays on the line spanned by the start vector and its log-moduli lie in the \
             image of the integer grid under (n, m) -> n ln|a| + m ln|b|. A line has empty \
             interior in the plane, so no orbit is dense."
                .to_string(),
        ),
        PairKind::DiagJordan => (
            Obstruction::CouplingBlowup {
                min_mass: Hp::from_f64(0.5, ctx),
                max_mass: Hp::from_i64(2, ctx),
            },
            "With a scaled identity and a Jordan block the orbit is \
             (a^n b^m x1 + m a^n b^m x2, a^n b^m x2). Keeping the second coordinate near a \
             nonzero limit while exhausting the grid forces m to grow, and then \
             |m a^n b^m x2| grows without bound, so the first coordinate cannot also \
             converge."
                .to_string(),
        ),
        PairKind::JordanJordan if log_a.is_zero() || log_b.is_zero() => {
            let unit_is_a = log_a.is_zero();
            let other_log = if unit_is_a { log_b.clone() } else { log_a.clone() };
            (
                Obstruction::UnitModulus { unit_is_a, other_log },
                "One modulus is exactly 1, so the second coordinate's modulus |a|^n |b|^m \
                 depends on a single exponent and takes countably many isolated values \
                 (an arithmetic progression in log scale). Such a set is nowhere dense in \
                 (0, inf)."
                    .to_string(),
            )
        }
        PairKind::JordanJordan => {
            // delta = ln|a|/b - ln|b|/a, divided by the signed entries.
            let delta = log_a.div(b, ctx)?.sub(&log_b.div(a, ctx)?, ctx);
            (
                Obstruction::ProgressionGap { gap: delta.abs(), delta },
                "A dense orbit of the Jordan pair would make the rescaled difference \
                 sequence {m (ln|a|/b - ln|b|/a)} dense in the reals; that set is an \
                 arithmetic progression with gap |delta| (a single point when delta = 0) \
                 and misses the interval of radius |delta|/4 around delta/2."
                    .to_string(),
            )
        }
    };
    Ok(Certificate { pair: kind, a: a.clone(), b: b.clone(), data, explanation })
}

/// Outcome of re-checking a certificate's obstruction by finite enumeration.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub passed: bool,
    pub points_checked: u64,
    /// Counterexample description when `passed` is false (an implementation
    /// bug by construction: the obstructions are theorems).
    pub witness: Option<String>,
}

fn pass(points: u64) -> CheckReport {
    CheckReport { passed: true, points_checked: points, witness: None }
}

fn fail(points: u64, witness: String) -> CheckReport {
    CheckReport { passed: false, points_checked: points, witness: Some(witness) }
}

/// Side length of the (n, m) scan box affordable under `budget`.
fn box_side(budget: &SearchBudget) -> i64 {
    let mut s = (budget.max_candidates as f64).sqrt() as i64;
    while s > 0 && (s as u64) * (s as u64) > budget.max_candidates {
        s -= 1;
    }
    (s - 1).clamp(1, budget.max_exponent)
}

/// Verifies the stored obstruction over a budgeted scan. Always passes for
/// certificates built by `certify_pair`; a failure report carries the
/// offending point.
pub fn check_certificate(
    cert: &Certificate,
    witness_budget: &SearchBudget,
    ctx: PrecisionContext,
) -> Result<CheckReport> {
    let side = box_side(witness_budget);
    let a_s = RealScalar::from_linear(&cert.a, ctx);
    let b_s = RealScalar::from_linear(&cert.b, ctx);
    match &cert.data {
        Obstruction::ProgressionGap { delta, gap } => {
            if delta.is_zero() {
                // {m·0} is the single point 0; the excluded interval around
                // delta/2 = 0 has radius 0, so the claim holds vacuously.
                return Ok(pass(0));
            }
            let center = delta.mul(&Hp::from_f64(0.5, ctx), ctx);
            let radius = gap.mul(&Hp::from_f64(0.25, ctx), ctx);
            let count = witness_budget
                .max_exponent
                .min(witness_budget.max_candidates.saturating_sub(1) as i64);
            for m in 0..=count {
                let p = delta.mul_i64_exact(m);
                if p.sub(&center, ctx).abs().cmp(&radius) == std::cmp::Ordering::Less {
                    return Ok(fail(m as u64 + 1, format!("m = {m} lands inside the gap")));
                }
            }
            Ok(pass(count as u64 + 1))
        }
        Obstruction::UnitModulus { unit_is_a, other_log } => {
            let (zero_log, step_log) = if *unit_is_a {
                (a_s.log_mod(), b_s.log_mod())
            } else {
                (b_s.log_mod(), a_s.log_mod())
            };
            if !zero_log.is_zero() {
                return Ok(fail(0, "certified unit modulus is not 1".into()));
            }
            if !step_log.bit_eq(other_log) {
                return Ok(fail(0, "stored log step disagrees with the pair".into()));
            }
            // Collect the distinct log-moduli over the box; exact arithmetic
            // makes coincident values bit-identical.
            let mut values = Vec::with_capacity((side + 1) as usize);
            let mut points = 0u64;
            for n in 0..=side {
                for m in 0..=side {
                    points += 1;
                    let (u, s) = if *unit_is_a { (n, m) } else { (m, n) };
                    let l = zero_log.mul_i64_exact(u).add_exact(&step_log.mul_i64_exact(s));
                    values.push((s, l));
                }
            }
            values.sort_by(|(_, x), (_, y)| x.cmp(y));
            values.dedup_by(|(_, x), (_, y)| x.bit_eq(y));
            if values.len() > (side + 1) as usize {
                return Ok(fail(points, format!("{} distinct moduli exceed the count bound", values.len())));
            }
            let min_gap = other_log.abs().mul(&Hp::from_f64(0.5, ctx), ctx);
            for w in values.windows(2) {
                let d = w[1].1.sub(&w[0].1, ctx).abs();
                if d.cmp(&min_gap) == std::cmp::Ordering::Less {
                    return Ok(fail(points, format!("moduli at m = {}, {} are not isolated", w[0].0, w[1].0)));
                }
            }
            Ok(pass(points))
        }
        Obstruction::DiagonalLattice { log_a, log_b } => {
            if !log_a.bit_eq(a_s.log_mod()) || !log_b.bit_eq(b_s.log_mod()) {
                return Ok(fail(0, "stored lattice map disagrees with the pair".into()));
            }
            // Orbit of a start off the axes: both coordinates are the scalar
            // a^n b^m times the start, so the cross product with the start
            // vanishes identically (checked in log-sign form, where the exact
            // sums make both routes bit-identical) and the log-modulus equals
            // the lattice point n·log_a + m·log_b.
            let x1 = RealScalar::from_linear(&Hp::from_i64(2, ctx), ctx);
            let x2 = RealScalar::from_linear(&Hp::from_i64(-3, ctx), ctx);
            let mut points = 0u64;
            let mut row = RealScalar::one(ctx);
            for n in 0..=side {
                let mut p = row.clone();
                for m in 0..=side {
                    points += 1;
                    let first = p.mul(&x1, ctx);
                    let second = p.mul(&x2, ctx);
                    if !first.mul(&x2, ctx).bit_eq(&second.mul(&x1, ctx)) {
                        return Ok(fail(points, format!("({n}, {m}) leaves the start line")));
                    }
                    let lattice = log_a.mul_i64_exact(n).add_exact(&log_b.mul_i64_exact(m));
                    if !p.log_mod().bit_eq(&lattice) {
                        return Ok(fail(points, format!("({n}, {m}) misses the log lattice")));
                    }
                    p = p.mul(&b_s, ctx);
                }
                row = row.mul(&a_s, ctx);
            }
            Ok(pass(points))
        }
        Obstruction::CouplingBlowup { min_mass, max_mass } => {
            // Witness threshold: on the scanned box, every point with mass
            // in [min, max] and m past the threshold has coupling magnitude
            // m·mass ≥ threshold·min ≥ threshold/2.
            let threshold = (side + 1) / 2;
            let floor = Hp::from_i64(threshold, ctx).mul(min_mass, ctx);
            // Log-scale prefilter with slack; candidates still face the exact
            // linear comparison below.
            let slack = Hp::pow2(-60, ctx);
            let log_lo = min_mass.ln(ctx)?.sub(&slack, ctx);
            let log_hi = max_mass.ln(ctx)?.add(&slack, ctx);
            let mut points = 0u64;
            let mut row = RealScalar::one(ctx);
            for n in 0..=side {
                let mut p = row.clone();
                for m in 0..=side {
                    points += 1;
                    let log_mass = p.log_mod().clone();
                    p = p.mul(&b_s, ctx);
                    if m < threshold
                        || log_mass.cmp(&log_lo) == std::cmp::Ordering::Less
                        || log_mass.cmp(&log_hi) == std::cmp::Ordering::Greater
                    {
                        continue;
                    }
                    let mass = log_mass.exp(ctx)?;
                    if mass.cmp(min_mass) == std::cmp::Ordering::Less
                        || mass.cmp(max_mass) == std::cmp::Ordering::Greater
                    {
                        continue;
                    }
                    let coupling = mass.mul_i64_exact(m);
                    if coupling.cmp(&floor) == std::cmp::Ordering::Less {
                        return Ok(fail(points, format!("({n}, {m}) has small coupling")));
                    }
                }
                row = row.mul(&a_s, ctx);
            }
            Ok(pass(points))
        }
    }
}

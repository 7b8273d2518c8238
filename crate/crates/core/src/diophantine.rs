//! Search kernel: continued fractions, inhomogeneous approximation mod 1,
//! two-exponent log-linear approximation with nonnegative exponents, its
//! sign-aware variant, and an exhaustive oracle.
//!
//! All hits are verified in high precision; `f64` appears only as a scan
//! prefilter with an absolute margin of 1e-9, so any candidate within the
//! margin is re-checked exactly before it can be accepted or rejected.

use crate::error::{Error, Result};
use crate::precision::{Hp, PrecisionContext};
use crate::scalar::{RealScalar, Sign};
use rayon::prelude::*;
use std::cmp::Ordering;

/// Partial quotients above this are treated as a rational cut: at working
/// precision such a quotient means the remainder was a rounding artifact.
pub const QUOTIENT_CAP: i128 = 1 << 40;

/// Prefilter slack: `f64` screening may misjudge a candidate by at most this
/// much, so anything within the slack of a hit is re-verified exactly.
const SCREEN_MARGIN: f64 = 1e-9;

/// Steps between exact re-synchronisations of incremental `f64` scans.
const RESYNC_PERIOD: i64 = 1 << 20;

#[derive(Debug, Clone)]
pub struct SearchBudget {
    /// Largest exponent any search may return.
    pub max_exponent: i64,
    /// Total candidate evaluations across a single call.
    pub max_candidates: u64,
    pub deadline_hint_ms: Option<u64>,
}

impl SearchBudget {
    pub fn new(max_exponent: i64, max_candidates: u64) -> Result<SearchBudget> {
        if max_exponent <= 0 || max_candidates == 0 {
            return Err(Error::BadInput("budget fields must be positive".into()));
        }
        Ok(SearchBudget { max_exponent, max_candidates, deadline_hint_ms: None })
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_exponent: 100_000_000,
            max_candidates: 100_000_000,
            deadline_hint_ms: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContinuedFraction {
    /// `a₀` may be any integer; later quotients are ≥ 1.
    pub quotients: Vec<i128>,
    /// Convergents `(p_i, q_i)` with `p_i = a_i p_{i-1} + p_{i-2}`.
    pub convergents: Vec<(i128, i128)>,
    /// Set when a remainder vanished (or underflowed) before `depth`.
    pub rational: bool,
}

/// Expands `alpha` to at most `depth` partial quotients.
///
/// Each quotient consumes roughly its bit length from the mantissa; the
/// expansion refuses to continue past the trustworthy range.
pub fn cf_expand(alpha: &Hp, depth: usize, ctx: PrecisionContext) -> Result<ContinuedFraction> {
    if depth == 0 {
        return Err(Error::BadInput("depth must be positive".into()));
    }
    let (cf, exhausted) = cf_expand_inner(alpha, depth, ctx)?;
    if exhausted && !cf.rational && cf.quotients.len() < depth {
        return Err(Error::PrecisionExhausted(format!(
            "only {} quotients are trustworthy at {} bits",
            cf.quotients.len(),
            ctx.bits()
        )));
    }
    Ok(cf)
}

/// Expands as far as trust allows, flagging instead of erroring.
fn cf_expand_inner(
    alpha: &Hp,
    depth: usize,
    ctx: PrecisionContext,
) -> Result<(ContinuedFraction, bool)> {
    let trust_bits = ctx.bits() as i64 - 8;
    // Remainders below the representation floor are rounding artifacts.
    let tiny = Hp::pow2(-(ctx.bits() as i64 - 4), ctx);
    let mut used: i64 = 0;
    let mut quotients: Vec<i128> = Vec::new();
    let mut rational = false;
    let mut exhausted = false;
    let mut x = alpha.clone();
    for i in 0..depth {
        if used > trust_bits {
            exhausted = true;
            break;
        }
        let a = x.floor_i128()?;
        if i >= 1 && a > QUOTIENT_CAP {
            rational = true;
            break;
        }
        quotients.push(a);
        used += (128 - a.unsigned_abs().leading_zeros() as i64) + 1;
        let r = x.sub_exact(&Hp::from_i128(a, ctx));
        if r.is_zero() || r.cmp(&tiny) == Ordering::Less {
            rational = true;
            break;
        }
        if i + 1 < depth {
            x = r.recip(ctx)?;
        }
    }
    let convergents = convergents_of(&quotients)?;
    Ok((ContinuedFraction { quotients, convergents, rational }, exhausted))
}

fn convergents_of(quotients: &[i128]) -> Result<Vec<(i128, i128)>> {
    let mut out = Vec::with_capacity(quotients.len());
    let (mut p_prev, mut p_prev2) = (1i128, 0i128);
    let (mut q_prev, mut q_prev2) = (0i128, 1i128);
    for &a in quotients {
        let p = a
            .checked_mul(p_prev)
            .and_then(|v| v.checked_add(p_prev2))
            .ok_or_else(|| Error::OverflowRange("convergent numerator overflow".into()))?;
        let q = a
            .checked_mul(q_prev)
            .and_then(|v| v.checked_add(q_prev2))
            .ok_or_else(|| Error::OverflowRange("convergent denominator overflow".into()))?;
        out.push((p, q));
        p_prev2 = p_prev;
        p_prev = p;
        q_prev2 = q_prev;
        q_prev = q;
    }
    Ok(out)
}

/// Result of a single-exponent search.
#[derive(Debug, Clone)]
pub struct ApproxOne {
    pub k: i64,
    pub achieved_error: Hp,
    pub candidates_examined: u64,
}

/// Result of a two-exponent search.
#[derive(Debug, Clone)]
pub struct ApproxPair {
    pub n: i64,
    pub m: i64,
    pub achieved_error: Hp,
    pub candidates_examined: u64,
}

/// Finds `k ≥ max(k_min, 1)` with `|{k·alpha} − gamma| ≤ eps` (plain
/// fractional-part distance).
///
/// Walks the Ostrowski/three-distance ladder built from the convergents of
/// `{alpha}`: the signed defect moves toward `gamma` in floor-sized steps
/// that never overshoot, and the fractional part is recomputed exactly at
/// every landing. Rational or precision-exhausted inputs fall back to a
/// verified linear scan. Returns the smallest k the search path visits that
/// satisfies the bound; `k = 0` is never returned (it trivially hits every
/// `gamma = 0` instance and carries no stepping information).
pub fn frac_approx(
    alpha: &Hp,
    gamma: &Hp,
    eps: &Hp,
    k_min: i64,
    budget: &SearchBudget,
    ctx: PrecisionContext,
) -> Result<ApproxOne> {
    if eps.signum_i8() <= 0 {
        return Err(Error::BadInput("eps must be positive".into()));
    }
    if gamma.signum_i8() < 0 || gamma.cmp(&Hp::one(ctx)) != Ordering::Less {
        return Err(Error::BadInput("gamma must lie in [0,1)".into()));
    }
    if k_min < 0 {
        return Err(Error::BadInput("k_min must be nonnegative".into()));
    }
    let start = k_min.max(1);
    if start > budget.max_exponent {
        return Err(Error::BudgetExhausted {
            stage: "frac_approx",
            detail: "k_min exceeds the exponent budget".into(),
        });
    }
    let ah = alpha.fract01();
    if ah.is_zero() {
        // Integral alpha: every k gives fractional part 0.
        let err = gamma.abs();
        if err.cmp(eps) != Ordering::Greater {
            return Ok(ApproxOne { k: start, achieved_error: err, candidates_examined: 1 });
        }
        return Err(Error::BudgetExhausted {
            stage: "frac_approx",
            detail: "alpha is integral; the distance to gamma is fixed".into(),
        });
    }

    let (cf, _) = cf_expand_inner(&ah, 64, ctx)?;
    if !cf.rational {
        if let Some(res) = ostrowski_walk(&ah, gamma, eps, start, &cf, budget, ctx)? {
            return Ok(res);
        }
    }
    frac_scan(&ah, gamma, eps, start, budget, ctx)
}

fn frac_value(ah: &Hp, k: i64) -> Hp {
    ah.mul_i64_exact(k).fract01()
}

/// Greedy no-overshoot walk; `None` means the ladder cannot make progress
/// (caller falls back to scanning).
fn ostrowski_walk(
    ah: &Hp,
    gamma: &Hp,
    eps: &Hp,
    start: i64,
    cf: &ContinuedFraction,
    budget: &SearchBudget,
    ctx: PrecisionContext,
) -> Result<Option<ApproxOne>> {
    // Signed defects δ_i = q_i·α − p_i, exact, alternating in sign and
    // shrinking in magnitude.
    let mut deltas: Vec<(i64, Hp)> = Vec::new();
    for &(p, q) in &cf.convergents {
        let q64 = match i64::try_from(q) {
            Ok(v) if v <= budget.max_exponent => v,
            _ => break,
        };
        let d = ah.mul_i64_exact(q64).sub_exact(&Hp::from_i128(p, ctx));
        if d.is_zero() {
            break;
        }
        deltas.push((q64, d));
    }
    if deltas.is_empty() {
        return Ok(None);
    }
    let mut k = start;
    let mut candidates = 0u64;
    loop {
        candidates += 1;
        if candidates > budget.max_candidates {
            return Err(Error::BudgetExhausted {
                stage: "frac_approx",
                detail: "walk exceeded the candidate budget".into(),
            });
        }
        let v = frac_value(ah, k);
        let d = v.sub_exact(gamma);
        if d.abs().cmp(eps) != Ordering::Greater {
            return Ok(Some(ApproxOne {
                k,
                achieved_error: d.abs(),
                candidates_examined: candidates,
            }));
        }
        let want = -d.signum_i8();
        let mut stepped = false;
        for (q, delta) in &deltas {
            if delta.signum_i8() != want {
                continue;
            }
            if delta.abs().cmp(&d.abs()) == Ordering::Greater {
                continue;
            }
            let head = budget.max_exponent - k;
            if *q > head {
                continue;
            }
            let mut t = d.abs().div(&delta.abs(), ctx)?.floor_i128()?;
            t = t.min((head / q) as i128);
            // Never overshoot: shrink t until t·|δ| ≤ |d| holds exactly.
            while t > 0 && delta.mul_i64_exact(t as i64).abs().cmp(&d.abs()) == Ordering::Greater
            {
                t -= 1;
            }
            if t == 0 {
                continue;
            }
            k += (t as i64) * q;
            stepped = true;
            break;
        }
        if !stepped {
            return Ok(None);
        }
    }
}

/// Linear scan with `f64` prefilter and exact verification; first hit wins.
fn frac_scan(
    ah: &Hp,
    gamma: &Hp,
    eps: &Hp,
    start: i64,
    budget: &SearchBudget,
    ctx: PrecisionContext,
) -> Result<ApproxOne> {
    let _ = ctx;
    let ahf = ah.to_f64();
    let gf = gamma.to_f64();
    let threshold = eps.to_f64() + SCREEN_MARGIN;
    let mut candidates = 0u64;
    let mut k = start;
    let mut vf = frac_value(ah, k).to_f64();
    loop {
        candidates += 1;
        if candidates > budget.max_candidates {
            return Err(Error::BudgetExhausted {
                stage: "frac_approx",
                detail: "scan exceeded the candidate budget".into(),
            });
        }
        if (vf - gf).abs() <= threshold {
            let err = frac_value(ah, k).sub_exact(gamma).abs();
            if err.cmp(eps) != Ordering::Greater {
                return Ok(ApproxOne { k, achieved_error: err, candidates_examined: candidates });
            }
        }
        k += 1;
        if k > budget.max_exponent {
            return Err(Error::BudgetExhausted {
                stage: "frac_approx",
                detail: "scan exceeded the exponent budget".into(),
            });
        }
        if (k - start) % RESYNC_PERIOD == 0 {
            vf = frac_value(ah, k).to_f64();
        } else {
            vf += ahf;
            if vf >= 1.0 {
                vf -= 1.0;
            }
        }
    }
}

/// Solves `|n·log_a + m·log_b − tau| < eps` over `n, m ∈ ℕ` (zeros allowed).
///
/// `UnreachableCone` is an exact impossibility proof: the distance from
/// `tau` to the closed additive cone of `{log_a, log_b}` is at least `eps`.
/// Anything else that fails is `BudgetExhausted` (inconclusive). The search
/// scans `n` upward and picks the first hit, so results are deterministic
/// and favour small exponent sums.
pub fn loglinear_approx(
    log_a: &Hp,
    log_b: &Hp,
    tau: &Hp,
    eps: &Hp,
    budget: &SearchBudget,
    ctx: PrecisionContext,
) -> Result<ApproxPair> {
    if eps.signum_i8() <= 0 {
        return Err(Error::BadInput("eps must be positive".into()));
    }
    let sa = log_a.signum_i8();
    let sb = log_b.signum_i8();
    let cone_dist = match (sa >= 0 && sb >= 0, sa <= 0 && sb <= 0) {
        (true, true) => tau.abs(),                       // both zero: cone = {0}
        (true, false) => tau.min(&Hp::zero(ctx)).abs(),  // cone = [0, ∞)
        (false, true) => tau.max(&Hp::zero(ctx)),        // cone = (−∞, 0]
        (false, false) => Hp::zero(ctx),                 // opposite signs: cone = ℝ
    };
    if cone_dist.cmp(eps) != Ordering::Less {
        return Err(Error::UnreachableCone(format!(
            "target is {} from the reachable cone, eps {}",
            cone_dist.to_dec_string(),
            eps.to_dec_string()
        )));
    }
    match (sa, sb) {
        (0, 0) => Ok(ApproxPair {
            n: 0,
            m: 0,
            achieved_error: tau.abs(),
            candidates_examined: 1,
        }),
        (_, 0) => single_axis(log_a, tau, eps, budget, true),
        (0, _) => single_axis(log_b, tau, eps, budget, false),
        _ if sa == sb => cone_enumerate(log_a, log_b, tau, eps, budget, ctx),
        _ => {
            // Canonical orientation: log_a > 0 > log_b.
            if sa < 0 {
                let r = opposite_scan(&log_a.neg(), &log_b.neg(), &tau.neg(), eps, budget, ctx)?;
                return Ok(r);
            }
            opposite_scan(log_a, log_b, tau, eps, budget, ctx)
        }
    }
}

/// One log is zero: its exponent stays 0 and the lattice is one-dimensional.
fn single_axis(
    log_x: &Hp,
    tau: &Hp,
    eps: &Hp,
    budget: &SearchBudget,
    n_axis: bool,
) -> Result<ApproxPair> {
    let kf = (tau.to_f64() / log_x.to_f64()).round();
    let center = if kf.is_finite() { kf as i64 } else { 0 };
    let mut best: Option<(i64, Hp)> = None;
    let mut candidates = 0u64;
    for k in [center - 1, center, center + 1] {
        if k < 0 || k > budget.max_exponent {
            continue;
        }
        candidates += 1;
        let err = log_x.mul_i64_exact(k).sub_exact(tau).abs();
        if err.cmp(eps) == Ordering::Less
            && best.as_ref().map_or(true, |(_, b)| err.cmp(b) == Ordering::Less)
        {
            best = Some((k, err));
        }
    }
    match best {
        Some((k, err)) => Ok(ApproxPair {
            n: if n_axis { k } else { 0 },
            m: if n_axis { 0 } else { k },
            achieved_error: err,
            candidates_examined: candidates,
        }),
        None => Err(Error::BudgetExhausted {
            stage: "loglinear_approx",
            detail: "one-dimensional lattice has no point within eps".into(),
        }),
    }
}

/// Same-sign case: only finitely many lattice points fall near `tau`;
/// enumerate them.
fn cone_enumerate(
    log_a: &Hp,
    log_b: &Hp,
    tau: &Hp,
    eps: &Hp,
    budget: &SearchBudget,
    ctx: PrecisionContext,
) -> Result<ApproxPair> {
    // Mirror the both-negative case.
    let (la, lb, t) = if log_a.signum_i8() < 0 {
        (log_a.neg(), log_b.neg(), tau.neg())
    } else {
        (log_a.clone(), log_b.clone(), tau.clone())
    };
    let laf = la.to_f64();
    let lbf = lb.to_f64();
    let tf = t.to_f64();
    let reach = tf + eps.to_f64();
    let n_max = ((reach / laf).floor() as i64).clamp(0, budget.max_exponent);
    let mut candidates = 0u64;
    for n in 0..=n_max {
        let rem = tf - n as f64 * laf;
        let m0 = (rem / lbf).round() as i64;
        for m in [m0 - 1, m0, m0 + 1] {
            if m < 0 || m > budget.max_exponent {
                continue;
            }
            candidates += 1;
            if candidates > budget.max_candidates {
                return Err(Error::BudgetExhausted {
                    stage: "loglinear_approx",
                    detail: "cone enumeration exceeded the candidate budget".into(),
                });
            }
            let ef = (n as f64 * laf + m as f64 * lbf - tf).abs();
            if ef <= eps.to_f64() + SCREEN_MARGIN {
                let err = exact_pair_error(&la, &lb, &t, n, m, ctx);
                if err.cmp(eps) == Ordering::Less {
                    return Ok(ApproxPair {
                        n,
                        m,
                        achieved_error: err,
                        candidates_examined: candidates,
                    });
                }
            }
        }
    }
    Err(Error::BudgetExhausted {
        stage: "loglinear_approx",
        detail: "in-cone enumeration is exhaustive and found no point within eps".into(),
    })
}

fn exact_pair_error(la: &Hp, lb: &Hp, tau: &Hp, n: i64, m: i64, _ctx: PrecisionContext) -> Hp {
    la.mul_i64_exact(n)
        .add_exact(&lb.mul_i64_exact(m))
        .sub_exact(tau)
        .abs()
}

/// Opposite-sign case (`log_a > 0 > log_b`): for each `n` the best
/// `m ≈ (n·log_a − tau)/(−log_b)` is unique up to rounding, so scan `n`
/// upward with an incremental prefilter and verify hits exactly.
fn opposite_scan(
    la: &Hp,
    lb: &Hp,
    tau: &Hp,
    eps: &Hp,
    budget: &SearchBudget,
    ctx: PrecisionContext,
) -> Result<ApproxPair> {
    let nlb = lb.neg(); // −log_b > 0
    let theta = la.div(&nlb, ctx)?;
    let tau2 = tau.div(&nlb, ctx)?;
    let thetaf = theta.to_f64();
    let tau2f = tau2.to_f64();
    let nlbf = nlb.to_f64();
    let epsf = eps.to_f64();
    // Below this n the ideal m is negative and clamps to 0.
    let n_low = (((tau2f - 0.5) / thetaf).ceil() as i64).clamp(0, budget.max_exponent);

    let mut candidates = 0u64;
    let mut exhausted_m = false;
    // x tracks n·θ − τ' recentred to [−1/2, 1/2): |x|·(−log_b) is the error
    // with the rounded m.
    let mut x = recentre(-tau2f);
    for n in 0..=budget.max_exponent {
        candidates += 1;
        if candidates > budget.max_candidates {
            return Err(Error::BudgetExhausted {
                stage: "loglinear_approx",
                detail: "scan exceeded the candidate budget".into(),
            });
        }
        let errf = if n < n_low {
            // m clamps to 0.
            (n as f64 * la.to_f64() - tau.to_f64()).abs()
        } else {
            x.abs() * nlbf
        };
        if errf <= epsf + SCREEN_MARGIN {
            if let Some(res) = verify_pair(la, lb, tau, &nlb, n, eps, budget, candidates, ctx)? {
                return Ok(res);
            }
        }
        if n >= n_low && n % RESYNC_PERIOD == 0 {
            // Ideal m hopelessly beyond the budget: all later n are worse.
            if (n as f64) * thetaf - tau2f - 0.5 > budget.max_exponent as f64 {
                exhausted_m = true;
                break;
            }
        }
        if (n + 1) % RESYNC_PERIOD == 0 {
            let exact = theta
                .mul_i64_exact(n + 1)
                .sub_exact(&tau2)
                .to_f64();
            x = recentre(exact - exact.round());
        } else {
            x = recentre(x + thetaf);
        }
    }
    Err(Error::BudgetExhausted {
        stage: "loglinear_approx",
        detail: if exhausted_m {
            "the companion exponent left the budget range".into()
        } else {
            "scan exceeded the exponent budget".into()
        },
    })
}

fn recentre(x: f64) -> f64 {
    let mut y = x - x.round();
    if y >= 0.5 {
        y -= 1.0;
    }
    if y < -0.5 {
        y += 1.0;
    }
    y
}

/// Exact check of the candidates around the ideal `m` for one `n`.
#[allow(clippy::too_many_arguments)]
fn verify_pair(
    la: &Hp,
    lb: &Hp,
    tau: &Hp,
    nlb: &Hp,
    n: i64,
    eps: &Hp,
    budget: &SearchBudget,
    candidates: u64,
    ctx: PrecisionContext,
) -> Result<Option<ApproxPair>> {
    let ideal = la.mul_i64_exact(n).sub_exact(tau).div(nlb, ctx)?;
    let m0 = match ideal.round_i128() {
        Ok(v) => v,
        Err(_) => return Ok(None),
    };
    let mut best: Option<(i64, Hp)> = None;
    for dm in [-1i128, 0, 1] {
        let m = m0 + dm;
        if m < 0 || m > budget.max_exponent as i128 {
            continue;
        }
        let m = m as i64;
        let err = exact_pair_error(la, lb, tau, n, m, ctx);
        if err.cmp(eps) == Ordering::Less
            && best.as_ref().map_or(true, |(_, b)| err.cmp(b) == Ordering::Less)
        {
            best = Some((m, err));
        }
    }
    Ok(best.map(|(m, err)| ApproxPair {
        n,
        m,
        achieved_error: err,
        candidates_examined: candidates,
    }))
}

/// Sign-aware variant for `a ∈ (−1, 0)`, `b > 1`: finds `(n, m)` with
/// `sign(aⁿ) = sign(t)` exactly and `|n·ln|a| + m·ln b − ln|t|| < eps_rel`,
/// via the doubled-exponent sublattice `n = 2n′ + parity`.
pub fn signed_approx(
    a: &RealScalar,
    b: &RealScalar,
    t: &Hp,
    eps_rel: &Hp,
    budget: &SearchBudget,
    ctx: PrecisionContext,
) -> Result<ApproxPair> {
    if a.sign() != Sign::Neg || a.log_mod().signum_i8() >= 0 {
        return Err(Error::BadInput("need −1 < a < 0".into()));
    }
    if b.sign() != Sign::Pos || b.log_mod().signum_i8() <= 0 {
        return Err(Error::BadInput("need b > 1".into()));
    }
    if t.is_zero() {
        return Err(Error::ZeroTarget(
            "0 is never attained; request a small |t| instead".into(),
        ));
    }
    if eps_rel.signum_i8() <= 0 {
        return Err(Error::BadInput("eps_rel must be positive".into()));
    }
    let parity: i64 = if t.signum_i8() > 0 { 0 } else { 1 };
    let tau0 = t.abs().ln(ctx)?;
    let la2 = a.log_mod().mul_i64_exact(2);
    let tau = tau0.sub_exact(&a.log_mod().mul_i64_exact(parity));
    let r = loglinear_approx(&la2, b.log_mod(), &tau, eps_rel, budget, ctx)?;
    let n = 2 * r.n + parity;
    if n > budget.max_exponent {
        return Err(Error::BudgetExhausted {
            stage: "signed_approx",
            detail: "doubled exponent exceeds the budget".into(),
        });
    }
    // Identical exact value as the sublattice error; recomputed in the
    // original coordinates for reporting.
    let err = a
        .log_mod()
        .mul_i64_exact(n)
        .add_exact(&b.log_mod().mul_i64_exact(r.m))
        .sub_exact(&tau0)
        .abs();
    Ok(ApproxPair { n, m: r.m, achieved_error: err, candidates_examined: r.candidates_examined })
}

/// An enumeration problem for the exhaustive oracle: `arity` exponents, each
/// ranging over `0..=cap`. `screen` must approximate `exact` within 5e-10 so
/// the two-pass scheme (f64 minimum, then exact re-evaluation of near-ties)
/// is sound.
pub struct OracleProblem<'a> {
    pub arity: usize,
    pub cap: i64,
    pub screen: &'a (dyn Fn(&[i64]) -> f64 + Sync),
    pub exact: &'a (dyn Fn(&[i64]) -> Result<Hp> + Sync),
}

#[derive(Debug, Clone)]
pub struct OracleBest {
    pub exponents: Vec<i64>,
    pub error: Hp,
    pub candidates_examined: u64,
}

/// Exhaustive minimum-error search over the box, deterministic tie-break:
/// smallest exponent sum, then lexicographic. Intended for boxes of at most
/// about 10⁶ candidates. Parallel and serial runs return identical results.
pub fn brute_force_oracle(
    problem: &OracleProblem,
    budget: &SearchBudget,
    parallel: bool,
    ctx: PrecisionContext,
) -> Result<OracleBest> {
    if problem.arity == 0 {
        return Err(Error::BadInput("oracle needs at least one exponent".into()));
    }
    if problem.cap < 0 || problem.cap > budget.max_exponent {
        return Err(Error::BadInput("oracle cap out of budget range".into()));
    }
    let base = problem.cap as u128 + 1;
    let mut total: u128 = 1;
    for _ in 0..problem.arity {
        total = total.saturating_mul(base);
    }
    if total > budget.max_candidates as u128 {
        return Err(Error::EnumerationTooLarge(format!(
            "{total} candidates exceed the budget of {}",
            budget.max_candidates
        )));
    }
    let total = total as u64;

    // Pass 1: f64 minimum (a pure function of the index set, so the value is
    // independent of evaluation order).
    let min_screen = if parallel {
        (0..total)
            .into_par_iter()
            .map(|idx| (problem.screen)(&decode(idx, problem.arity, base as u64)))
            .reduce(|| f64::INFINITY, f64::min)
    } else {
        let mut best = f64::INFINITY;
        for idx in 0..total {
            best = best.min((problem.screen)(&decode(idx, problem.arity, base as u64)));
        }
        best
    };

    // Pass 2: exact re-evaluation of everything within the screening margin.
    let cutoff = min_screen + SCREEN_MARGIN;
    let mut ties: Vec<Vec<i64>> = if parallel {
        (0..total)
            .into_par_iter()
            .filter_map(|idx| {
                let e = decode(idx, problem.arity, base as u64);
                ((problem.screen)(&e) <= cutoff).then_some(e)
            })
            .collect()
    } else {
        (0..total)
            .filter_map(|idx| {
                let e = decode(idx, problem.arity, base as u64);
                ((problem.screen)(&e) <= cutoff).then_some(e)
            })
            .collect()
    };
    // Deterministic selection order regardless of how ties were gathered.
    ties.sort_by(|x, y| tie_order(x, y));
    let _ = ctx;
    let mut best: Option<(Vec<i64>, Hp)> = None;
    for e in ties {
        let err = (problem.exact)(&e)?;
        let better = match &best {
            None => true,
            Some((be, berr)) => match err.cmp(berr) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => tie_order(&e, be) == Ordering::Less,
            },
        };
        if better {
            best = Some((e, err));
        }
    }
    let (exponents, error) =
        best.ok_or_else(|| Error::BadInput("empty enumeration".into()))?;
    Ok(OracleBest { exponents, error, candidates_examined: total })
}

fn decode(idx: u64, arity: usize, base: u64) -> Vec<i64> {
    let mut out = vec![0i64; arity];
    let mut rest = idx;
    for slot in out.iter_mut().rev() {
        *slot = (rest % base) as i64;
        rest /= base;
    }
    out
}

fn tie_order(a: &[i64], b: &[i64]) -> Ordering {
    let sa: i64 = a.iter().sum();
    let sb: i64 = b.iter().sum();
    sa.cmp(&sb).then_with(|| a.cmp(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    fn sqrt2() -> Hp {
        Hp::from_i64(2, ctx()).sqrt(ctx()).unwrap()
    }

    fn budget() -> SearchBudget {
        SearchBudget::default()
    }

    #[test]
    fn cf_rational_and_classics() {
        let c = ctx();
        let cf = cf_expand(&Hp::from_f64(1.5, c), 3, c).unwrap();
        assert_eq!(cf.quotients, vec![1, 2]);
        assert!(cf.rational);

        let cf = cf_expand(&sqrt2(), 5, c).unwrap();
        assert_eq!(cf.quotients, vec![1, 2, 2, 2, 2]);
        assert!(!cf.rational);

        let golden = Hp::from_i64(5, c)
            .sqrt(c)
            .unwrap()
            .add(&Hp::one(c), c)
            .mul(&Hp::from_f64(0.5, c), c);
        let cf = cf_expand(&golden, 5, c).unwrap();
        assert_eq!(cf.quotients, vec![1, 1, 1, 1, 1]);
    }

    #[test]
    fn cf_convergents_recurrence() {
        let c = ctx();
        let cf = cf_expand(&sqrt2(), 12, c).unwrap();
        // 1/1, 3/2, 7/5, 17/12, 41/29 ...
        assert_eq!(&cf.convergents[..5], &[(1, 1), (3, 2), (7, 5), (17, 12), (41, 29)]);
        for w in cf.convergents.windows(2) {
            assert!(w[1].1 > w[0].1);
        }
    }

    #[test]
    fn cf_depth_guard() {
        let c64 = PrecisionContext::new(64).unwrap();
        let s2 = Hp::from_i64(2, c64).sqrt(c64).unwrap();
        assert!(matches!(cf_expand(&s2, 60, c64), Err(Error::PrecisionExhausted(_))));
        assert!(matches!(
            cf_expand(&s2, 0, ctx()),
            Err(Error::BadInput(_))
        ));
    }

    #[test]
    fn frac_rational_alpha_scans() {
        let c = ctx();
        let third = Hp::one(c).div(&Hp::from_i64(3, c), c).unwrap();
        let r = frac_approx(&third, &third, &Hp::from_f64(1e-9, c), 0, &budget(), c).unwrap();
        assert_eq!(r.k, 1);
        assert!(r.achieved_error.to_f64() < 1e-30);
    }

    #[test]
    fn frac_sqrt2_fixtures() {
        let c = ctx();
        let r = frac_approx(
            &sqrt2(),
            &Hp::from_f64(0.5, c),
            &Hp::from_f64(0.05, c),
            0,
            &budget(),
            c,
        )
        .unwrap();
        assert_eq!(r.k, 6);
        assert!((r.achieved_error.to_f64() - 0.0147186).abs() < 1e-4);

        let r = frac_approx(&sqrt2(), &Hp::zero(c), &Hp::from_f64(0.1, c), 0, &budget(), c)
            .unwrap();
        assert_eq!(r.k, 5);
        assert!((r.achieved_error.to_f64() - 0.0710678).abs() < 1e-4);
    }

    #[test]
    fn frac_respects_k_min_and_reproduces() {
        let c = ctx();
        let eps = Hp::from_f64(0.03, c);
        let gamma = Hp::from_f64(0.25, c);
        for k_min in [0i64, 3, 50, 1234] {
            let a = frac_approx(&sqrt2(), &gamma, &eps, k_min, &budget(), c).unwrap();
            let b = frac_approx(&sqrt2(), &gamma, &eps, k_min, &budget(), c).unwrap();
            assert_eq!(a.k, b.k);
            assert!(a.k >= k_min.max(1));
            assert!(a.achieved_error.cmp(&eps) != Ordering::Greater);
        }
    }

    #[test]
    fn frac_tiny_eps_still_verified() {
        let c = ctx();
        let eps = Hp::from_f64(1e-7, c);
        let r = frac_approx(&sqrt2(), &Hp::from_f64(0.7, c), &eps, 0, &budget(), c).unwrap();
        assert!(r.achieved_error.cmp(&eps) != Ordering::Greater);
        // Exact recheck from scratch.
        let v = sqrt2().fract01().mul_i64_exact(r.k).fract01();
        let d = v.sub_exact(&Hp::from_f64(0.7, c)).abs();
        assert!(d.bit_eq(&r.achieved_error));
    }

    #[test]
    fn frac_input_validation() {
        let c = ctx();
        let e = Hp::from_f64(0.1, c);
        assert!(matches!(
            frac_approx(&sqrt2(), &Hp::one(c), &e, 0, &budget(), c),
            Err(Error::BadInput(_))
        ));
        assert!(matches!(
            frac_approx(&sqrt2(), &Hp::zero(c), &Hp::zero(c), 0, &budget(), c),
            Err(Error::BadInput(_))
        ));
        let tight = SearchBudget::new(4, 100).unwrap();
        assert!(matches!(
            frac_approx(&sqrt2(), &Hp::zero(c), &e, 9, &tight, c),
            Err(Error::BudgetExhausted { .. })
        ));
    }

    fn ln_of(v: i64) -> Hp {
        Hp::from_i64(v, ctx()).ln(ctx()).unwrap()
    }

    #[test]
    fn loglinear_identity_target_is_all_zero() {
        let c = ctx();
        let r = loglinear_approx(
            &ln_of(2),
            &ln_of(3).neg(),
            &Hp::zero(c),
            &Hp::from_f64(0.06, c),
            &budget(),
            c,
        )
        .unwrap();
        assert_eq!((r.n, r.m), (0, 0));
        assert!(r.achieved_error.is_zero());
        // The classical near-miss behind that eps: |8·ln2 − 5·ln3| = ln(256/243).
        let gap = exact_pair_error(&ln_of(2), &ln_of(3).neg(), &Hp::zero(c), 8, 5, c);
        assert!((gap.to_f64() - 0.052_116_0).abs() < 1e-6);
        assert!(gap.to_f64() < 0.06);
    }

    #[test]
    fn loglinear_exact_hit() {
        let c = ctx();
        let r = loglinear_approx(
            &ln_of(2),
            &ln_of(3).neg(),
            &ln_of(2),
            &Hp::from_f64(1e-12, c),
            &budget(),
            c,
        )
        .unwrap();
        assert_eq!((r.n, r.m), (1, 0));
        assert!(r.achieved_error.is_zero());
    }

    #[test]
    fn loglinear_cone_tests() {
        let c = ctx();
        // Nonnegative combinations of positives cannot reach −1.
        assert!(matches!(
            loglinear_approx(
                &ln_of(2),
                &ln_of(3),
                &Hp::from_i64(-1, c),
                &Hp::from_f64(0.1, c),
                &budget(),
                c
            ),
            Err(Error::UnreachableCone(_))
        ));
        // ... but a target within eps of the cone boundary is fine.
        let r = loglinear_approx(
            &ln_of(2),
            &ln_of(3),
            &Hp::from_f64(-0.05, c),
            &Hp::from_f64(0.1, c),
            &budget(),
            c,
        )
        .unwrap();
        assert_eq!((r.n, r.m), (0, 0));
        // Exact boundary separation even at absurdly small scales.
        assert!(matches!(
            loglinear_approx(
                &ln_of(2),
                &ln_of(3),
                &Hp::pow2(-100, c).neg(),
                &Hp::pow2(-117, c),
                &budget(),
                c
            ),
            Err(Error::UnreachableCone(_))
        ));
    }

    #[test]
    fn loglinear_same_sign_enumeration() {
        let c = ctx();
        // 3·ln2 + 2·ln3 = ln 72.
        let tau = Hp::from_i64(72, c).ln(c).unwrap();
        let r = loglinear_approx(&ln_of(2), &ln_of(3), &tau, &Hp::from_f64(1e-9, c), &budget(), c)
            .unwrap();
        assert_eq!((r.n, r.m), (3, 2));
        // No lattice point near ln(5) at eps = 0.05 with positives ≤ ...
        let res = loglinear_approx(
            &ln_of(2),
            &ln_of(3),
            &Hp::from_i64(5, c).ln(c).unwrap(),
            &Hp::from_f64(0.02, c),
            &budget(),
            c,
        );
        assert!(matches!(res, Err(Error::BudgetExhausted { .. })));
    }

    #[test]
    fn loglinear_random_instances_beat_eps_and_oracle_feasible() {
        let c = ctx();
        let la = ln_of(2);
        let lb = ln_of(3).neg();
        let eps = Hp::from_f64(1e-2, c);
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut lcg = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let tau = Hp::from_f64(lcg() * 4.0 - 2.0, c);
            let r = loglinear_approx(&la, &lb, &tau, &eps, &budget(), c).unwrap();
            assert!(r.achieved_error.cmp(&eps) == Ordering::Less);
            // Exhaustive check over a box containing the solver's point.
            let cap = r.n.max(r.m).max(1);
            assert!(cap <= 1000, "unexpectedly deep first hit {cap}");
            let laf = la.to_f64();
            let lbf = lb.to_f64();
            let tf = tau.to_f64();
            let screen = move |e: &[i64]| (e[0] as f64 * laf + e[1] as f64 * lbf - tf).abs();
            let exact = |e: &[i64]| -> Result<Hp> {
                Ok(exact_pair_error(&la, &lb, &tau, e[0], e[1], c))
            };
            let problem = OracleProblem { arity: 2, cap, screen: &screen, exact: &exact };
            let best = brute_force_oracle(&problem, &budget(), false, c).unwrap();
            assert!(best.error.cmp(&r.achieved_error) != Ordering::Greater);
            assert!(best.error.cmp(&eps) == Ordering::Less);
        }
    }

    fn minus_inv_sqrt2() -> RealScalar {
        let c = ctx();
        RealScalar::from_linear(&Hp::from_f64(0.5, c).sqrt(c).unwrap().neg(), c)
    }

    #[test]
    fn signed_fixture_19_6() {
        let c = ctx();
        let a = minus_inv_sqrt2();
        let b = RealScalar::from_f64(3.0, c);
        let r = signed_approx(
            &a,
            &b,
            &Hp::from_i64(-1, c),
            &Hp::from_f64(0.01, c),
            &budget(),
            c,
        )
        .unwrap();
        assert_eq!((r.n, r.m), (19, 6));
        assert_eq!(r.n % 2, 1);
        assert!((r.achieved_error.to_f64() - 0.0068) < 1e-3);
    }

    #[test]
    fn signed_exact_products() {
        let c = ctx();
        let a = minus_inv_sqrt2();
        let b = RealScalar::from_f64(3.0, c);
        let al = a.to_linear(c).unwrap();
        let bl = b.to_linear(c).unwrap();
        let eps = Hp::from_f64(1e-12, c);
        let t1 = al.mul(&bl, c);
        let r = signed_approx(&a, &b, &t1, &eps, &budget(), c).unwrap();
        assert_eq!((r.n, r.m), (1, 1));
        let t2 = t1.mul(&t1, c);
        let r = signed_approx(&a, &b, &t2, &eps, &budget(), c).unwrap();
        assert_eq!((r.n, r.m), (2, 2));
    }

    #[test]
    fn signed_parity_is_exact() {
        let c = ctx();
        let a = minus_inv_sqrt2();
        let b = RealScalar::from_f64(3.0, c);
        let eps = Hp::from_f64(0.05, c);
        let mut state = 42u64;
        for i in 0..500 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let mag = ((state >> 11) as f64 / (1u64 << 53) as f64) * 6.0 - 3.0;
            let t = Hp::from_f64(if i % 2 == 0 { mag.exp() } else { -mag.exp() }, c);
            let r = signed_approx(&a, &b, &t, &eps, &budget(), c).unwrap();
            assert_eq!(r.n % 2, i64::from(i % 2 != 0), "parity mismatch at draw {i}");
            assert!(r.achieved_error.cmp(&eps) == Ordering::Less);
        }
    }

    #[test]
    fn signed_rejections() {
        let c = ctx();
        let a = minus_inv_sqrt2();
        let b = RealScalar::from_f64(3.0, c);
        let eps = Hp::from_f64(0.1, c);
        assert!(matches!(
            signed_approx(&a, &b, &Hp::zero(c), &eps, &budget(), c),
            Err(Error::ZeroTarget(_))
        ));
        let bad_a = RealScalar::from_f64(-2.0, c);
        assert!(matches!(
            signed_approx(&bad_a, &b, &Hp::one(c), &eps, &budget(), c),
            Err(Error::BadInput(_))
        ));
        let bad_b = RealScalar::from_f64(0.5, c);
        assert!(matches!(
            signed_approx(&a, &bad_b, &Hp::one(c), &eps, &budget(), c),
            Err(Error::BadInput(_))
        ));
    }

    #[test]
    fn oracle_identity_point_prefers_all_zero() {
        let c = ctx();
        let la = ln_of(2);
        let lb = ln_of(3).neg();
        let zero = Hp::zero(c);
        let screen = |e: &[i64]| (e[0] as f64 * la.to_f64() + e[1] as f64 * lb.to_f64()).abs();
        let exact =
            |e: &[i64]| -> Result<Hp> { Ok(exact_pair_error(&la, &lb, &zero, e[0], e[1], c)) };
        let problem = OracleProblem { arity: 2, cap: 20, screen: &screen, exact: &exact };
        let best = brute_force_oracle(&problem, &budget(), false, c).unwrap();
        assert_eq!(best.exponents, vec![0, 0]);
        assert!(best.error.is_zero());
        assert_eq!(best.candidates_examined, 441);
    }

    #[test]
    fn oracle_serial_parallel_identical() {
        let c = ctx();
        let la = ln_of(2);
        let lb = ln_of(3).neg();
        // A target with genuine near-ties in the box.
        let tau = Hp::from_f64(0.0261, c);
        let laf = la.to_f64();
        let lbf = lb.to_f64();
        let tf = tau.to_f64();
        let screen = move |e: &[i64]| (e[0] as f64 * laf + e[1] as f64 * lbf - tf).abs();
        let exact =
            |e: &[i64]| -> Result<Hp> { Ok(exact_pair_error(&la, &lb, &tau, e[0], e[1], c)) };
        let problem = OracleProblem { arity: 2, cap: 40, screen: &screen, exact: &exact };
        let s = brute_force_oracle(&problem, &budget(), false, c).unwrap();
        let p = brute_force_oracle(&problem, &budget(), true, c).unwrap();
        assert_eq!(s.exponents, p.exponents);
        assert!(s.error.bit_eq(&p.error));
        assert_eq!(s.candidates_examined, p.candidates_examined);
    }

    #[test]
    fn oracle_refuses_oversized_boxes() {
        let c = ctx();
        let screen = |_: &[i64]| 0.0;
        let exact = |_: &[i64]| -> Result<Hp> { Ok(Hp::zero(c)) };
        let problem = OracleProblem { arity: 4, cap: 100, screen: &screen, exact: &exact };
        let tight = SearchBudget::new(1000, 1_000_000).unwrap();
        assert!(matches!(
            brute_force_oracle(&problem, &tight, false, c),
            Err(Error::EnumerationTooLarge(_))
        ));
    }
}

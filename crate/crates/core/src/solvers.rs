//! Solve pipelines: one per family. Given a target and `eps`, each pipeline
//! produces an exponent tuple steering the reduced orbit within `eps`,
//! stage by stage, and re-verifies the result exactly before returning it.
//!
//! Shared scheme: a fast `f64` prefilter proposes candidates (windows chosen
//! so no true hit is rejected), then every accepted candidate is re-checked
//! in high precision. Integer bookkeeping (parities, fractional shifts) is
//! done with exact arithmetic so the advertised error bounds are the ones
//! actually achieved.

use std::cmp::Ordering;

use crate::complex::HpComplex;
use crate::diophantine::{frac_approx, signed_approx, SearchBudget};
use crate::error::{Error, Result};
use crate::matrices::{
    jordan_tuple_product, rot_rot_product, rotation_pair_product, Family, Rotor, TripleParams,
};
use crate::precision::{Hp, PrecisionContext};
use crate::presets::{FamilyParams, TupleSpec};
use crate::reduced::{hc_member, orbit_point, HcSet};
use crate::scalar::{ComplexScalar, RealScalar, Sign};

/// Which coordinates the error bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// The reduced point (u, v) of the closed-form product.
    Reduced,
    /// The orbit of a start vector (second coordinate nonzero).
    Ambient,
}

#[derive(Debug, Clone)]
pub struct SolveRequest {
    /// Flattened real coordinates; complex targets interleave (re, im).
    pub target: Vec<Hp>,
    pub eps: Hp,
    pub budget: SearchBudget,
    pub metric: Metric,
    /// Start vector for the ambient metric (defaults to (0, 1) on the
    /// 2-dimensional Jordan families; other families use their canonical
    /// start and ignore this).
    pub start: Option<Vec<Hp>>,
}

impl SolveRequest {
    pub fn reduced(target: Vec<Hp>, eps: Hp, budget: SearchBudget) -> SolveRequest {
        SolveRequest { target, eps, budget, metric: Metric::Reduced, start: None }
    }
}

#[derive(Debug, Clone)]
pub struct StageInfo {
    pub name: &'static str,
    pub candidates: u64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub exponents: Vec<i64>,
    /// Error in the requested metric.
    pub achieved_error: Hp,
    /// Largest coordinate error of the reduced point (or of the canonical
    /// orbit for the non-Jordan families, where the two coincide).
    pub reduced_error: Hp,
    pub ambient_error: Option<Hp>,
    pub candidates_examined: u64,
    pub stages: Vec<StageInfo>,
}

// Relative safety shave on stage budgets so exact re-verification at the end
// cannot flip a bound that the stage met.
fn shaved(eps: &Hp, ctx: PrecisionContext) -> Hp {
    eps.mul(&Hp::from_f64(1.0 - 1e-9, ctx), ctx)
}

fn ceil_i64(x: &Hp) -> Result<i64> {
    let f = x.neg().floor_i128()?;
    i64::try_from(-f).map_err(|_| Error::OverflowRange("integer exceeds i64".into()))
}

fn round_i64(x: &Hp) -> Result<i64> {
    let r = x.round_i128()?;
    i64::try_from(r).map_err(|_| Error::OverflowRange("integer exceeds i64".into()))
}

fn exponent_in_budget(k: i64, budget: &SearchBudget, stage: &'static str) -> Result<()> {
    if k > budget.max_exponent {
        return Err(Error::BudgetExhausted {
            stage,
            detail: format!("exponent {k} exceeds the budget {}", budget.max_exponent),
        });
    }
    Ok(())
}

fn require_eps(eps: &Hp) -> Result<()> {
    if eps.signum_i8() <= 0 {
        return Err(Error::BadInput("eps must be positive".into()));
    }
    Ok(())
}

fn require_dim(target: &[Hp], want: usize) -> Result<()> {
    if target.len() != want {
        return Err(Error::DimensionMismatch(format!(
            "target has {} coordinates, family needs {want}",
            target.len()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Planar engine: |aⁿ·bᵐ − w| < eps over n, m ≥ 0 for complex a, b
// ---------------------------------------------------------------------------

/// Margins absorbing `f64` rounding in the prefilter (angles accumulate about
/// `n·2⁻⁵³·|φ|`, well under 1e-7 for exponents up to the default budget).
const MOD_MARGIN: f64 = 1e-7;
const ANG_MARGIN: f64 = 2e-7;

#[derive(Debug, Clone)]
pub struct PlanarHit {
    pub n: i64,
    pub m: i64,
    pub error: Hp,
    pub candidates: u64,
}

fn wrap_pi(t: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let r = t % tau;
    if r > std::f64::consts::PI {
        r - tau
    } else if r <= -std::f64::consts::PI {
        r + tau
    } else {
        r
    }
}

/// Necessary-condition windows: any v with |v − w| < eps satisfies both
/// |ln|v| − ln|w|| ≤ −ln(1 − eps/|w|) and ∠(v, w) ≤ 2·asin(eps / (2(|w|−eps))),
/// so filtering on them (plus margins) never drops a true hit.
fn planar_windows(wf: f64, epsf: f64) -> (f64, f64) {
    if epsf >= wf {
        return (f64::INFINITY, std::f64::consts::PI);
    }
    let ratio = epsf / wf;
    let win_m = -(1.0 - ratio).ln() + MOD_MARGIN;
    let win_a = 2.0 * (ratio / (2.0 * (1.0 - ratio))).min(1.0).asin() + ANG_MARGIN;
    (win_m, win_a)
}

/// First (n, m) in m-scan order with `|aⁿbᵐ − w| < eps`, prefiltered in `f64`
/// and verified in high precision. The modulus line fixes the candidate `n`
/// for each `m`; the angle and modulus residuals must then both fall inside
/// the necessary windows.
pub fn planar_approx(
    a: &ComplexScalar,
    b: &ComplexScalar,
    w: &HpComplex,
    eps: &Hp,
    budget: &SearchBudget,
    ctx: PrecisionContext,
) -> Result<PlanarHit> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::ZeroParameter);
    }
    require_eps(eps)?;
    let la = a.log_mod().clone();
    let lb = b.log_mod().clone();
    if la.is_zero() {
        return Err(Error::MismatchedConfig("planar search needs |a| != 1".into()));
    }
    let w_abs = w.abs(ctx);

    // Targets inside the eps-disc around 0: contract the modulus below the
    // headroom eps − |w| instead of chasing an angle.
    if w_abs.cmp(eps) == Ordering::Less {
        let headroom = eps.sub(&w_abs, ctx).mul(&Hp::from_f64(0.5, ctx), ctx);
        let contracting = if la.signum_i8() < 0 {
            Some((la.clone(), true))
        } else if lb.signum_i8() < 0 {
            Some((lb.clone(), false))
        } else {
            None
        };
        if let Some((lc, on_a)) = contracting {
            let e = ceil_i64(&headroom.ln(ctx)?.div(&lc, ctx)?)?.max(0);
            exponent_in_budget(e, budget, "planar")?;
            let (n, m) = if on_a { (e, 0) } else { (0, e) };
            let v = a.pow(n, ctx)?.mul(&b.pow(m, ctx)?, ctx);
            let d = v.to_linear(ctx)?.dist(w, ctx);
            if d.cmp(eps) == Ordering::Less {
                return Ok(PlanarHit { n, m, error: d, candidates: 1 });
            }
        }
        if w_abs.is_zero() {
            return Err(Error::ZeroTarget("planar target 0 needs a contracting modulus".into()));
        }
    }

    let tauf = w_abs.ln(ctx)?.to_f64();
    let psif = w.arg(ctx).to_f64();
    let laf = la.to_f64();
    let lbf = lb.to_f64();
    let phif = a.angle().radians(ctx).to_f64();
    let thef = b.angle().radians(ctx).to_f64();
    let (win_m, win_a) = planar_windows(w_abs.to_f64(), eps.to_f64());
    // Whether the modulus-line n grows with m (opposite log signs) or shrinks.
    let n_grows = lbf / laf < 0.0;
    let mut candidates: u64 = 0;
    for m in 0..=budget.max_exponent {
        candidates += 1;
        if candidates > budget.max_candidates {
            return Err(Error::BudgetExhausted {
                stage: "planar",
                detail: "candidate budget spent".into(),
            });
        }
        let x = (tauf - m as f64 * lbf) / laf;
        let n = x.round();
        if n < 0.0 {
            if n_grows {
                continue;
            } else if x < -0.5 {
                break;
            } else {
                continue;
            }
        }
        let n_i = n as i64;
        if n_i > budget.max_exponent {
            if n_grows {
                return Err(Error::BudgetExhausted {
                    stage: "planar",
                    detail: "exponent budget spent".into(),
                });
            }
            continue;
        }
        let em = (x - n) * laf;
        if em.abs() > win_m {
            continue;
        }
        let ea = wrap_pi(n * phif + m as f64 * thef - psif);
        if ea.abs() > win_a {
            continue;
        }
        let v = a.pow(n_i, ctx)?.mul(&b.pow(m, ctx)?, ctx);
        let d = v.to_linear(ctx)?.dist(w, ctx);
        if d.cmp(eps) == Ordering::Less {
            return Ok(PlanarHit { n: n_i, m, error: d, candidates });
        }
    }
    Err(Error::BudgetExhausted {
        stage: "planar",
        detail: "no feasible pair within the exponent budget".into(),
    })
}

// ---------------------------------------------------------------------------
// ℝ² Jordan pipeline: k = (n+κ, m, κ, s)
// ---------------------------------------------------------------------------

struct FracShift {
    kappa: i64,
    base_shift: Hp,
    candidates: u64,
}

/// Finds κ with `{κ·alpha}` close to `{d}` so an integer shift can finish the
/// job. `alpha < −2` pushes the running value below `bound`, guaranteeing the
/// later shift is nonnegative; κ = 0 is kept when `d` already rounds cleanly.
fn kappa_stage(
    d: &Hp,
    alpha: &Hp,
    bound: &Hp,
    u0: &Hp,
    eps: &Hp,
    budget: &SearchBudget,
    ctx: PrecisionContext,
) -> Result<FracShift> {
    let s0 = d.round_i128()?;
    if s0 >= 0 {
        let err = d.sub_exact(&Hp::from_i128(s0, ctx)).abs();
        if err.cmp(eps) != Ordering::Greater {
            return Ok(FracShift { kappa: 0, base_shift: d.clone(), candidates: 0 });
        }
    }
    let need = bound.sub(u0, ctx);
    let k_min = ceil_i64(&need.div(alpha, ctx)?)?.max(0);
    let gamma = d.fract01();
    let r = frac_approx(alpha, &gamma, eps, k_min, budget, ctx)?;
    let base_shift = d.sub_exact(&alpha.mul_i64_exact(r.k));
    Ok(FracShift { kappa: r.k, base_shift, candidates: r.candidates_examined })
}

/// Ambient-to-reduced transform over ℝ: the reduced tolerance is scaled down
/// by a Lipschitz factor of the closed form (first, second) = (v(z₁+u·z₂), v·z₂).
fn ambient_plan_real(
    start: (&Hp, &Hp),
    target: (&Hp, &Hp),
    eps: &Hp,
    ctx: PrecisionContext,
) -> Result<(Hp, Hp, Hp)> {
    let (z1, z2) = start;
    let (t1, t2) = target;
    if z2.is_zero() {
        return Err(Error::NotInHCSet("start vector has second coordinate 0".into()));
    }
    if t2.is_zero() {
        return Err(Error::ZeroTarget(
            "ambient second coordinate 0 is never attained; target a small value instead".into(),
        ));
    }
    let v_t = t2.div(z2, ctx)?;
    let u_t = t1.div(t2, ctx)?.sub(&z1.div(z2, ctx)?, ctx);
    let lip = z2
        .abs()
        .add(&z1.abs(), ctx)
        .add(&z2.abs().mul(&u_t.abs(), ctx), ctx)
        .mul(&Hp::one(ctx).max(&v_t.abs()), ctx)
        .add(&z2.abs(), ctx);
    let eps_red = eps.div(&lip, ctx)?.min(eps).min(&Hp::from_f64(0.49, ctx));
    Ok((u_t, v_t, eps_red))
}

pub fn solve_r2(spec: &TupleSpec, req: &SolveRequest, ctx: PrecisionContext) -> Result<SolveResult> {
    let FamilyParams::JordanR(params) = &spec.params else {
        return Err(Error::MismatchedConfig("expected the 4-member real Jordan family".into()));
    };
    if params.len() != 4 {
        return Err(Error::MismatchedConfig("real Jordan preset has 4 members".into()));
    }
    require_eps(&req.eps)?;
    require_dim(&req.target, 2)?;
    let a = &params[0];
    let b = &params[1];

    let default_start = [Hp::zero(ctx), Hp::one(ctx)];
    let (x1, x2, eps, ambient) = match req.metric {
        Metric::Reduced => (req.target[0].clone(), req.target[1].clone(), req.eps.clone(), None),
        Metric::Ambient => {
            let start = req.start.as_deref().unwrap_or(&default_start);
            require_dim(start, 2)?;
            let (u_t, v_t, eps_red) = ambient_plan_real(
                (&start[0], &start[1]),
                (&req.target[0], &req.target[1]),
                &req.eps,
                ctx,
            )?;
            (u_t, v_t, eps_red, Some((start[0].clone(), start[1].clone())))
        }
    };

    let mut stages = Vec::new();
    let eps_v = shaved(&eps, ctx);
    let eps_u = eps_v.clone();

    // Stage 1: (n, m) matches the v coordinate, sign included.
    let (n, m, sign_candidates) = if x2.is_zero() {
        // Best effort: drive |v| below eps with an even power of a.
        let n0 = ceil_i64(&eps_v.ln(ctx)?.div(a.log_mod(), ctx)?)?.max(0);
        let n = n0 + (n0 & 1);
        exponent_in_budget(n, &req.budget, "sign")?;
        (n, 0, 0)
    } else {
        let ratio = eps_v.div(&x2.abs(), ctx)?;
        let eps_rel = Hp::one(ctx).add(&ratio, ctx).ln(ctx)?;
        let r = signed_approx(a, b, &x2, &eps_rel, &req.budget, ctx)?;
        (r.n, r.m, r.candidates_examined)
    };
    stages.push(StageInfo { name: "sign", candidates: sign_candidates });

    // Stage 2: κ matches the fractional part of u, s shifts the integer part.
    // Reciprocals mirror the closed-form product exactly, so the predicted
    // error equals the re-verified one.
    let inv1 = a.to_linear(ctx)?.recip(ctx)?;
    let inv2 = b.to_linear(ctx)?.recip(ctx)?;
    let inv3 = params[2].to_linear(ctx)?.recip(ctx)?;
    let u0 = inv1.mul_i64_exact(n).add_exact(&inv2.mul_i64_exact(m));
    let alpha = inv1.add_exact(&inv3);
    if alpha.cmp(&Hp::from_i64(-2, ctx)) != Ordering::Less {
        return Err(Error::MismatchedConfig("need a + 1/a < -2".into()));
    }
    let d_re = x1.sub_exact(&u0);
    let bound = Hp::one(ctx).neg().min(&x1.sub(&Hp::one(ctx), ctx));
    let shift = kappa_stage(&d_re, &alpha, &bound, &u0, &eps_u, &req.budget, ctx)?;
    stages.push(StageInfo { name: "frac", candidates: shift.candidates });
    let s = round_i64(&shift.base_shift)?;
    if s < 0 {
        return Err(Error::PrecisionExhausted("integer shift went negative".into()));
    }
    exponent_in_budget(s, &req.budget, "int-shift")?;
    let n_plus = n
        .checked_add(shift.kappa)
        .ok_or_else(|| Error::OverflowRange("combined exponent overflows".into()))?;
    exponent_in_budget(n_plus, &req.budget, "combine")?;
    stages.push(StageInfo { name: "int-shift", candidates: 0 });

    // Exact re-verification through the closed form.
    let k = vec![n_plus, m, shift.kappa, s];
    let prod = jordan_tuple_product(params, &k, ctx)?;
    let u_err = prod.u.sub_exact(&x1).abs();
    let v_err = prod.v.to_linear(ctx)?.sub(&x2, ctx).abs();
    let reduced_error = u_err.max(&v_err);
    if reduced_error.cmp(&eps) != Ordering::Less {
        return Err(Error::PrecisionExhausted("result failed final verification".into()));
    }

    let candidates_examined = stages.iter().map(|s| s.candidates).sum();
    let (achieved, ambient_error) = match &ambient {
        None => (reduced_error.clone(), None),
        Some((z1, z2)) => {
            let orbit = orbit_point::<RealScalar>(params, &k, (z1, z2), ctx)?;
            let (first, second) = orbit.to_linear(ctx)?;
            let amb = first
                .sub(&req.target[0], ctx)
                .abs()
                .max(&second.sub(&req.target[1], ctx).abs());
            if amb.cmp(&req.eps) != Ordering::Less {
                return Err(Error::PrecisionExhausted("ambient bound failed verification".into()));
            }
            (amb.clone(), Some(amb))
        }
    };
    Ok(SolveResult {
        exponents: k,
        achieved_error: achieved,
        reduced_error,
        ambient_error,
        candidates_examined,
        stages,
    })
}

// ---------------------------------------------------------------------------
// ℂ² Jordan pipeline: k = (n+κ, m, κ, s, ξ, ξ, ρ, ρ), ρ ∈ 4ℕ
// ---------------------------------------------------------------------------

fn ambient_plan_complex(
    start: (&HpComplex, &HpComplex),
    target: (&HpComplex, &HpComplex),
    eps: &Hp,
    ctx: PrecisionContext,
) -> Result<(HpComplex, HpComplex, Hp)> {
    let (z1, z2) = start;
    let (t1, t2) = target;
    if z2.is_zero() {
        return Err(Error::NotInHCSet("start vector has second coordinate 0".into()));
    }
    if t2.is_zero() {
        return Err(Error::ZeroTarget(
            "ambient second coordinate 0 is never attained; target a small value instead".into(),
        ));
    }
    let v_t = t2.div(z2, ctx)?;
    let u_t = t1.div(t2, ctx)?.sub(&z1.div(z2, ctx)?, ctx);
    let lip = z2
        .abs(ctx)
        .add(&z1.abs(ctx), ctx)
        .add(&z2.abs(ctx).mul(&u_t.abs(ctx), ctx), ctx)
        .mul(&Hp::one(ctx).max(&v_t.abs(ctx)), ctx)
        .add(&z2.abs(ctx), ctx);
    let eps_red = eps.div(&lip, ctx)?.min(eps).min(&Hp::from_f64(0.49, ctx));
    Ok((u_t, v_t, eps_red))
}

pub fn solve_c2(spec: &TupleSpec, req: &SolveRequest, ctx: PrecisionContext) -> Result<SolveResult> {
    let FamilyParams::JordanC { a: a_real, params } = &spec.params else {
        return Err(Error::MismatchedConfig("expected the 8-member complex Jordan family".into()));
    };
    if params.len() != 8 {
        return Err(Error::MismatchedConfig("complex Jordan preset has 8 members".into()));
    }
    if a_real.sign() != Sign::Neg || a_real.log_mod().signum_i8() >= 0 {
        return Err(Error::MismatchedConfig("need -1 < a < 0".into()));
    }
    require_eps(&req.eps)?;
    require_dim(&req.target, 4)?;

    let t_z1 = HpComplex::new(req.target[0].clone(), req.target[1].clone());
    let t_z2 = HpComplex::new(req.target[2].clone(), req.target[3].clone());
    let (z1, z2, eps, ambient) = match req.metric {
        Metric::Reduced => (t_z1.clone(), t_z2.clone(), req.eps.clone(), None),
        Metric::Ambient => {
            let default_start =
                [Hp::zero(ctx), Hp::zero(ctx), Hp::one(ctx), Hp::zero(ctx)];
            let start = req.start.as_deref().unwrap_or(&default_start);
            require_dim(start, 4)?;
            let s1 = HpComplex::new(start[0].clone(), start[1].clone());
            let s2 = HpComplex::new(start[2].clone(), start[3].clone());
            let (u_t, v_t, eps_red) =
                ambient_plan_complex((&s1, &s2), (&t_z1, &t_z2), &req.eps, ctx)?;
            (u_t, v_t, eps_red, Some((s1, s2)))
        }
    };

    let mut stages = Vec::new();
    let eps_v = shaved(&eps, ctx);
    // Per-axis budget for Re/Im of u: the combined distance stays below
    // eps/√2 < eps.
    let eps_q = shaved(&eps, ctx).mul(&Hp::from_f64(0.5, ctx), ctx);

    // Stage 1: (n, m) matches v = aⁿbᵐ against z₂ in the plane.
    let (n, m, planar_candidates) = if z2.is_zero() {
        let n = ceil_i64(&eps_v.ln(ctx)?.div(params[0].log_mod(), ctx)?)?.max(0);
        exponent_in_budget(n, &req.budget, "planar")?;
        (n, 0, 0)
    } else {
        let hit = planar_approx(&params[0], &params[1], &z2, &eps_v, &req.budget, ctx)?;
        (hit.n, hit.m, hit.candidates)
    };
    stages.push(StageInfo { name: "planar", candidates: planar_candidates });

    // Reciprocals as the closed form computes them. For the preset family the
    // imaginary parts of 1/a and 1/(1/a) are exactly zero, and the ρ members'
    // real/imaginary splits are exact, so the four adjustment stages act on
    // independent axes.
    let inv: Vec<HpComplex> = params
        .iter()
        .map(|p| p.to_linear(ctx)?.recip(ctx))
        .collect::<Result<Vec<_>>>()?;
    let u0 = inv[0].scale_i64_exact(n).add_exact(&inv[1].scale_i64_exact(m));
    let alpha = inv[0].re.add_exact(&inv[2].re);
    if !inv[0].im.add_exact(&inv[2].im).is_zero()
        || alpha.cmp(&Hp::from_i64(-2, ctx)) != Ordering::Less
    {
        return Err(Error::MismatchedConfig("need real a with a + 1/a < -2".into()));
    }
    let beta = inv[4].im.add_exact(&inv[5].im);
    if !inv[4].re.add_exact(&inv[5].re).is_zero() || beta.signum_i8() <= 0 {
        return Err(Error::MismatchedConfig("need imaginary pair with a - 1/a > 0".into()));
    }
    let rho_vec = inv[6].add_exact(&inv[7]);

    // Stage 2 (κ): real fractional part. Later stages shift Re by integers
    // only, so the match survives them.
    let d_re = z1.re.sub_exact(&u0.re);
    let bound_re = Hp::one(ctx).neg().min(&z1.re.sub(&Hp::one(ctx), ctx));
    let shift = kappa_stage(&d_re, &alpha, &bound_re, &u0.re, &eps_q, &req.budget, ctx)?;
    stages.push(StageInfo { name: "re-frac", candidates: shift.candidates });
    let kappa = shift.kappa;
    let n_plus = n
        .checked_add(kappa)
        .ok_or_else(|| Error::OverflowRange("combined exponent overflows".into()))?;
    exponent_in_budget(n_plus, &req.budget, "re-frac")?;

    // Stage 3 (ξ): imaginary fractional part, pushing above the target so the
    // integer correction J is nonnegative.
    let d_im = z1.im.sub_exact(&u0.im);
    let (xi, j, xi_candidates) = {
        let e0 = u0.im.sub_exact(&z1.im);
        let j0 = e0.round_i128()?;
        let err0 = e0.sub_exact(&Hp::from_i128(j0, ctx)).abs();
        if j0 >= 0 && err0.cmp(&eps_q) != Ordering::Greater {
            (0i64, i64::try_from(j0).map_err(|_| Error::OverflowRange("shift".into()))?, 0u64)
        } else {
            let top = Hp::one(ctx).max(&z1.im.add(&Hp::one(ctx), ctx));
            let k_min = ceil_i64(&top.sub(&u0.im, ctx).div(&beta, ctx)?)?.max(0);
            let gamma = d_im.fract01();
            let r = frac_approx(&beta, &gamma, &eps_q, k_min, &req.budget, ctx)?;
            let j = round_i64(&beta.mul_i64_exact(r.k).sub_exact(&d_im))?;
            if j < 0 {
                return Err(Error::PrecisionExhausted("imaginary shift went negative".into()));
            }
            (r.k, j, r.candidates_examined)
        }
    };
    stages.push(StageInfo { name: "im-frac", candidates: xi_candidates });

    // Stage 4 (ρ): the imaginary integer part, in multiples of 4.
    let rho = j
        .checked_mul(4)
        .ok_or_else(|| Error::OverflowRange("rho exponent overflows".into()))?;
    exponent_in_budget(rho, &req.budget, "im-int")?;
    stages.push(StageInfo { name: "im-int", candidates: 0 });

    // Stage 5 (s): the real integer part, compensating ρ's real shift.
    let re_after = u0
        .re
        .add_exact(&alpha.mul_i64_exact(kappa))
        .add_exact(&rho_vec.re.mul_i64_exact(rho));
    let s = round_i64(&z1.re.sub_exact(&re_after))?;
    if s < 0 {
        return Err(Error::PrecisionExhausted("integer shift went negative".into()));
    }
    exponent_in_budget(s, &req.budget, "re-int")?;
    stages.push(StageInfo { name: "re-int", candidates: 0 });

    // Exact re-verification through the closed form.
    let k = vec![n_plus, m, kappa, s, xi, xi, rho, rho];
    let prod = jordan_tuple_product(params, &k, ctx)?;
    let u_err = prod.u.dist(&z1, ctx);
    let v_err = prod.v.to_linear(ctx)?.dist(&z2, ctx);
    let reduced_error = u_err.max(&v_err);
    if reduced_error.cmp(&eps) != Ordering::Less {
        return Err(Error::PrecisionExhausted("result failed final verification".into()));
    }

    let candidates_examined = stages.iter().map(|s| s.candidates).sum();
    let (achieved, ambient_error) = match &ambient {
        None => (reduced_error.clone(), None),
        Some((s1, s2)) => {
            let orbit = orbit_point::<ComplexScalar>(params, &k, (s1, s2), ctx)?;
            let (first, second) = orbit.to_linear(ctx)?;
            let amb = first.dist(&t_z1, ctx).max(&second.dist(&t_z2, ctx));
            if amb.cmp(&req.eps) != Ordering::Less {
                return Err(Error::PrecisionExhausted("ambient bound failed verification".into()));
            }
            (amb.clone(), Some(amb))
        }
    };
    Ok(SolveResult {
        exponents: k,
        achieved_error: achieved,
        reduced_error,
        ambient_error,
        candidates_examined,
        stages,
    })
}

// ---------------------------------------------------------------------------
// Rotation pairs on ℝ² ≅ ℂ
// ---------------------------------------------------------------------------

/// Planar solve for a scaled identity (or rotation) `a` against a rotation
/// `b`: finds (n, m) with `|aⁿ·|b|ᵐ·e^{i(nφ+mθ)} − target| < eps`. Real
/// scalars enter as `φ = 0` (positive) or `φ = π` (negative).
pub fn solve_pair_rotation(
    a: &ComplexScalar,
    b: &ComplexScalar,
    target: &HpComplex,
    eps: &Hp,
    budget: &SearchBudget,
    ctx: PrecisionContext,
) -> Result<SolveResult> {
    require_eps(eps)?;
    if target.is_zero() {
        return Err(Error::NotInHCSet("planar target (0,0) is excluded".into()));
    }
    let hit = planar_approx(a, b, target, &shaved(eps, ctx), budget, ctx)?;
    Ok(SolveResult {
        exponents: vec![hit.n, hit.m],
        achieved_error: hit.error.clone(),
        reduced_error: hit.error.clone(),
        ambient_error: Some(hit.error),
        candidates_examined: hit.candidates,
        stages: vec![StageInfo { name: "planar", candidates: hit.candidates }],
    })
}

// ---------------------------------------------------------------------------
// ℂ×ℝ triple (and ℝ³ via the canonical start (1,0,1))
// ---------------------------------------------------------------------------

/// Coupled search over (n, m, l): `n` drives both coordinates, `m` fixes the
/// planar modulus, `l` fixes the real coordinate with its parity forced by
/// sign(x) (d < 0). First n-scan hit meeting eps in both coordinates wins.
pub fn solve_cxr(
    tp: &TripleParams,
    z: &HpComplex,
    x: &Hp,
    eps: &Hp,
    budget: &SearchBudget,
    ctx: PrecisionContext,
) -> Result<SolveResult> {
    require_eps(eps)?;
    if x.is_zero() {
        return Err(Error::ZeroTarget("the real coordinate of the product is never 0".into()));
    }
    let a_c = tp.a.to_complex_scalar();
    let b_c = ComplexScalar::from_real_scalar(&tp.b);
    let eps_s = shaved(eps, ctx);
    let parity: i64 = if x.signum_i8() > 0 { 0 } else { 1 };

    if z.is_zero() {
        // Unreachable exactly; best effort: match x through the (d, c) pair,
        // then contract the planar modulus below eps.
        let ratio = eps_s.div(&x.abs(), ctx)?;
        let eps_rel = Hp::one(ctx).add(&ratio, ctx).ln(ctx)?;
        let r = signed_approx(&tp.d, &tp.c, x, &eps_rel, budget, ctx)?;
        let (l, n) = (r.n, r.m);
        let la = tp.a.modulus.log_mod();
        let goal = eps_s.ln(ctx)?.sub_exact(&la.mul_i64_exact(n));
        let m = ceil_i64(&goal.div(tp.b.log_mod(), ctx)?)?.max(0);
        exponent_in_budget(m, budget, "z-shrink")?;
        let zv = a_c.pow(n, ctx)?.mul(&b_c.pow(m, ctx)?, ctx).to_linear(ctx)?;
        let xv = tp.c.pow(n, ctx)?.mul(&tp.d.pow(l, ctx)?, ctx).to_linear(ctx)?;
        let z_err = zv.dist(z, ctx);
        let x_err = xv.sub(x, ctx).abs();
        let reduced_error = z_err.max(&x_err);
        if reduced_error.cmp(eps) != Ordering::Less {
            return Err(Error::PrecisionExhausted("result failed final verification".into()));
        }
        return Ok(SolveResult {
            exponents: vec![n, m, l],
            achieved_error: reduced_error.clone(),
            reduced_error,
            ambient_error: None,
            candidates_examined: r.candidates_examined,
            stages: vec![
                StageInfo { name: "x-sign", candidates: r.candidates_examined },
                StageInfo { name: "z-shrink", candidates: 0 },
            ],
        });
    }

    let z_abs = z.abs(ctx);
    let x_abs = x.abs();
    let tau_z = z_abs.ln(ctx)?.to_f64();
    let tau_x = x_abs.ln(ctx)?.to_f64();
    let psif = z.arg(ctx).to_f64();
    let laf = tp.a.modulus.log_mod().to_f64();
    let lbf = tp.b.log_mod().to_f64();
    let lcf = tp.c.log_mod().to_f64();
    let ldf = tp.d.log_mod().to_f64();
    let phif = tp.a.angle.radians(ctx).to_f64();
    let (win_zm, win_za) = planar_windows(z_abs.to_f64(), eps_s.to_f64());
    let epsf = eps_s.to_f64();
    let xf = x_abs.to_f64();
    let win_x = if epsf >= xf { f64::INFINITY } else { -(1.0 - epsf / xf).ln() + MOD_MARGIN };

    let mut candidates: u64 = 0;
    for n in 0..=budget.max_exponent {
        candidates += 1;
        if candidates > budget.max_candidates {
            return Err(Error::BudgetExhausted {
                stage: "triple-scan",
                detail: "candidate budget spent".into(),
            });
        }
        let ea = wrap_pi(n as f64 * phif - psif);
        if ea.abs() > win_za {
            continue;
        }
        let mx = (tau_z - n as f64 * laf) / lbf;
        let m = mx.round();
        if m < 0.0 {
            continue;
        }
        if m as i64 > budget.max_exponent {
            return Err(Error::BudgetExhausted {
                stage: "triple-scan",
                detail: "planar exponent budget spent".into(),
            });
        }
        if ((mx - m) * lbf).abs() > win_zm {
            continue;
        }
        let lx = (tau_x - n as f64 * lcf) / ldf;
        let mut l = parity as f64 + 2.0 * ((lx - parity as f64) / 2.0).round();
        if l < 0.0 {
            l = parity as f64;
        }
        if l as i64 > budget.max_exponent {
            return Err(Error::BudgetExhausted {
                stage: "triple-scan",
                detail: "parity exponent budget spent".into(),
            });
        }
        if ((l - lx) * ldf).abs() > win_x {
            continue;
        }
        let (m_i, l_i) = (m as i64, l as i64);
        let zv = a_c.pow(n, ctx)?.mul(&b_c.pow(m_i, ctx)?, ctx).to_linear(ctx)?;
        let z_err = zv.dist(z, ctx);
        if z_err.cmp(&eps_s) != Ordering::Less {
            continue;
        }
        let xs = tp.c.pow(n, ctx)?.mul(&tp.d.pow(l_i, ctx)?, ctx);
        let x_err = xs.to_linear(ctx)?.sub(x, ctx).abs();
        if x_err.cmp(&eps_s) != Ordering::Less {
            continue;
        }
        debug_assert_eq!(xs.sign() == Sign::Pos, x.signum_i8() > 0);
        let reduced_error = z_err.max(&x_err);
        return Ok(SolveResult {
            exponents: vec![n, m_i, l_i],
            achieved_error: reduced_error.clone(),
            reduced_error,
            ambient_error: None,
            candidates_examined: candidates,
            stages: vec![StageInfo { name: "triple-scan", candidates }],
        });
    }
    Err(Error::BudgetExhausted {
        stage: "triple-scan",
        detail: "no feasible triple within the exponent budget".into(),
    })
}

/// ℝ³ solve from the canonical start (1, 0, 1): identifies the first two
/// coordinates with ℂ and delegates to the coupled ℂ×ℝ search.
pub fn solve_r3(spec: &TupleSpec, req: &SolveRequest, ctx: PrecisionContext) -> Result<SolveResult> {
    let FamilyParams::Triple(tp) = &spec.params else {
        return Err(Error::MismatchedConfig("expected the 3×3 triple family".into()));
    };
    require_dim(&req.target, 3)?;
    let z = HpComplex::new(req.target[0].clone(), req.target[1].clone());
    let mut out = solve_cxr(tp, &z, &req.target[2], &req.eps, &req.budget, ctx)?;
    out.ambient_error = Some(out.reduced_error.clone());
    Ok(out)
}

// ---------------------------------------------------------------------------
// ℝⁿ block families
// ---------------------------------------------------------------------------

pub fn solve_rn(spec: &TupleSpec, req: &SolveRequest, ctx: PrecisionContext) -> Result<SolveResult> {
    let (pairs, odd, a, b, triple) = match &spec.params {
        FamilyParams::EvenN { k, a, b } => (*k, false, a, b, None),
        FamilyParams::OddN { k, a, b, triple } => (*k, true, a, b, Some(triple)),
        _ => return Err(Error::MismatchedConfig("expected an ℝⁿ block family".into())),
    };
    require_eps(&req.eps)?;
    let desc = HcSet::BlocksNonzero { pairs, odd_tail: odd };
    require_dim(&req.target, desc.dim())?;
    if !hc_member(&desc, &req.target)? {
        return Err(Error::NotInHCSet(
            "a planar block (or the trailing coordinate) of the target is zero".into(),
        ));
    }

    let a_c = ComplexScalar::from_real_scalar(a);
    let b_c = b.to_complex_scalar();
    let planar_blocks = if odd { pairs - 1 } else { pairs };
    let mut exponents = Vec::with_capacity(desc.dim());
    let mut stages = Vec::new();
    let mut worst = Hp::zero(ctx);
    let mut total: u64 = 0;
    for j in 0..planar_blocks {
        let w = HpComplex::new(req.target[2 * j].clone(), req.target[2 * j + 1].clone());
        let r = solve_pair_rotation(&a_c, &b_c, &w, &req.eps, &req.budget, ctx).map_err(|e| {
            match e {
                Error::BudgetExhausted { stage, detail } => Error::BudgetExhausted {
                    stage,
                    detail: format!("block {j}: {detail}"),
                },
                other => other,
            }
        })?;
        exponents.extend_from_slice(&r.exponents);
        worst = worst.max(&r.reduced_error);
        total += r.candidates_examined;
        stages.push(StageInfo { name: "planar-block", candidates: r.candidates_examined });
    }
    if let Some(tp) = triple {
        let off = 2 * (pairs - 1);
        let z = HpComplex::new(req.target[off].clone(), req.target[off + 1].clone());
        let r = solve_cxr(tp, &z, &req.target[off + 2], &req.eps, &req.budget, ctx)
            .map_err(|e| match e {
                Error::BudgetExhausted { stage, detail } => Error::BudgetExhausted {
                    stage,
                    detail: format!("trailing block: {detail}"),
                },
                other => other,
            })?;
        exponents.extend_from_slice(&r.exponents);
        worst = worst.max(&r.reduced_error);
        total += r.candidates_examined;
        stages.push(StageInfo { name: "triple-block", candidates: r.candidates_examined });
    }
    Ok(SolveResult {
        exponents,
        achieved_error: worst.clone(),
        reduced_error: worst.clone(),
        ambient_error: Some(worst),
        candidates_examined: total,
        stages,
    })
}

// ---------------------------------------------------------------------------
// Dispatch and forward evaluation
// ---------------------------------------------------------------------------

/// Routes a request to the family's pipeline.
pub fn solve(spec: &TupleSpec, req: &SolveRequest, ctx: PrecisionContext) -> Result<SolveResult> {
    match spec.family {
        Family::JordanR2x4 => solve_r2(spec, req, ctx),
        Family::JordanC2x8 => solve_c2(spec, req, ctx),
        Family::RotPairR2 | Family::RotRotPairR2 => {
            require_dim(&req.target, 2)?;
            let (a_c, b_c) = rotation_scalars(spec)?;
            let w = HpComplex::new(req.target[0].clone(), req.target[1].clone());
            solve_pair_rotation(&a_c, &b_c, &w, &req.eps, &req.budget, ctx)
        }
        Family::R3Triple => solve_r3(spec, req, ctx),
        Family::EvenN | Family::OddN => solve_rn(spec, req, ctx),
        Family::Custom => {
            Err(Error::MismatchedConfig("custom tuples have no solve pipeline".into()))
        }
    }
}

fn rotation_scalars(spec: &TupleSpec) -> Result<(ComplexScalar, ComplexScalar)> {
    match &spec.params {
        FamilyParams::RotPair { a, b } => {
            Ok((ComplexScalar::from_real_scalar(a), b.to_complex_scalar()))
        }
        FamilyParams::RotRotPair { a, b } => Ok((a.to_complex_scalar(), b.to_complex_scalar())),
        _ => Err(Error::MismatchedConfig("expected a rotation-pair family".into())),
    }
}

/// Forward evaluation of the point a solve for `k` would be measured against:
/// the reduced point for the Jordan families (flattened re/im for ℂ²), the
/// canonical orbit elsewhere.
pub fn forward_point(spec: &TupleSpec, k: &[i64], ctx: PrecisionContext) -> Result<Vec<Hp>> {
    let expect = |want: usize| -> Result<()> {
        if k.len() != want {
            return Err(Error::DimensionMismatch(format!(
                "{} exponents vs {want} members",
                k.len()
            )));
        }
        Ok(())
    };
    match &spec.params {
        FamilyParams::JordanR(params) => {
            expect(params.len())?;
            let prod = jordan_tuple_product(params, k, ctx)?;
            Ok(vec![prod.u.clone(), prod.v.to_linear(ctx)?])
        }
        FamilyParams::JordanC { params, .. } => {
            expect(params.len())?;
            let prod = jordan_tuple_product(params, k, ctx)?;
            let v = prod.v.to_linear(ctx)?;
            Ok(vec![prod.u.re.clone(), prod.u.im.clone(), v.re, v.im])
        }
        FamilyParams::RotPair { a, b } => {
            expect(2)?;
            let one = Hp::one(ctx);
            let zero = Hp::zero(ctx);
            let (re, im) = rotation_pair_product(a, b, k[0], k[1], (&one, &zero), ctx)?;
            Ok(vec![re, im])
        }
        FamilyParams::RotRotPair { a, b } => {
            expect(2)?;
            let one = Hp::one(ctx);
            let zero = Hp::zero(ctx);
            let (re, im) = rot_rot_product(a, b, k[0], k[1], (&one, &zero), ctx)?;
            Ok(vec![re, im])
        }
        FamilyParams::Triple(tp) => {
            expect(3)?;
            let mut out = triple_orbit(tp, k[0], k[1], k[2], ctx)?;
            Ok(vec![out.remove(0), out.remove(0), out.remove(0)])
        }
        FamilyParams::EvenN { k: blocks, a, b } => {
            expect(2 * blocks)?;
            let one = Hp::one(ctx);
            let zero = Hp::zero(ctx);
            let mut out = Vec::with_capacity(2 * blocks);
            for j in 0..*blocks {
                let (re, im) =
                    rotation_pair_product(a, b, k[2 * j], k[2 * j + 1], (&one, &zero), ctx)?;
                out.push(re);
                out.push(im);
            }
            Ok(out)
        }
        FamilyParams::OddN { k: blocks, a, b, triple } => {
            expect(2 * blocks + 1)?;
            let one = Hp::one(ctx);
            let zero = Hp::zero(ctx);
            let mut out = Vec::with_capacity(2 * blocks + 1);
            for j in 0..blocks - 1 {
                let (re, im) =
                    rotation_pair_product(a, b, k[2 * j], k[2 * j + 1], (&one, &zero), ctx)?;
                out.push(re);
                out.push(im);
            }
            let off = 2 * (blocks - 1);
            out.extend(triple_orbit(triple, k[off], k[off + 1], k[off + 2], ctx)?);
            Ok(out)
        }
    }
}

fn triple_orbit(tp: &TripleParams, n: i64, m: i64, l: i64, ctx: PrecisionContext) -> Result<Vec<Hp>> {
    let one = Hp::one(ctx);
    let zero = Hp::zero(ctx);
    let pair = Rotor::new(tp.b.clone(), crate::scalar::Angle::zero())?;
    let (re, im) = rot_rot_product(&tp.a, &pair, n, m, (&one, &zero), ctx)?;
    let third = tp.c.pow(n, ctx)?.mul(&tp.d.pow(l, ctx)?, ctx).to_linear(ctx)?;
    Ok(vec![re, im, third])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::default_params;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128).unwrap()
    }

    fn budget() -> SearchBudget {
        SearchBudget::default()
    }

    fn hp(v: f64) -> Hp {
        Hp::from_f64(v, ctx())
    }

    fn spec_r2() -> TupleSpec {
        default_params(Family::JordanR2x4, ctx()).unwrap()
    }

    fn spec_c2() -> TupleSpec {
        default_params(Family::JordanC2x8, ctx()).unwrap()
    }

    // Deterministic uniform draws in [0,1).
    struct Lcg(u64);
    impl Lcg {
        fn next_f64(&mut self) -> f64 {
            self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((self.0 >> 11) as f64) / ((1u64 << 53) as f64)
        }
    }

    #[test]
    fn r2_forward_target_round_trips_exactly() {
        let c = ctx();
        let spec = spec_r2();
        let target = forward_point(&spec, &[2, 1, 0, 3], c).unwrap();
        let req = SolveRequest::reduced(target, Hp::pow2(-30, c), budget());
        let out = solve_r2(&spec, &req, c).unwrap();
        // The (n, m) stage hits (2, 1) exactly and the shift stage rounds to
        // s = 3 with zero residue, so the exact tuple comes back.
        assert_eq!(out.exponents, vec![2, 1, 0, 3]);
        assert!(out.reduced_error.is_zero());
    }

    #[test]
    fn r2_exact_orbit_point_is_found() {
        let c = ctx();
        let spec = spec_r2();
        let FamilyParams::JordanR(params) = &spec.params else { panic!() };
        let inv_a = params[0].to_linear(c).unwrap().recip(c).unwrap();
        let inv_b = params[1].to_linear(c).unwrap().recip(c).unwrap();
        let u = inv_a.add_exact(&inv_b);
        let v = params[0].mul(&params[1], c).to_linear(c).unwrap();
        let req = SolveRequest::reduced(vec![u, v], Hp::pow2(-30, c), budget());
        let out = solve_r2(&spec, &req, c).unwrap();
        assert_eq!(out.exponents, vec![1, 1, 0, 0]);
    }

    #[test]
    fn r2_rejects_nonpositive_eps() {
        let c = ctx();
        let spec = spec_r2();
        for eps in [Hp::zero(c), hp(-0.25)] {
            let req = SolveRequest::reduced(vec![hp(1.0), hp(1.0)], eps, budget());
            assert!(matches!(solve_r2(&spec, &req, c), Err(Error::BadInput(_))));
        }
    }

    #[test]
    fn r2_random_targets_within_eps() {
        let c = ctx();
        let spec = spec_r2();
        let FamilyParams::JordanR(params) = &spec.params else { panic!() };
        let eps = hp(1e-2);
        let mut rng = Lcg(0x5851f42d4c957f2d);
        for _ in 0..40 {
            let x1 = 10.0 * rng.next_f64() - 5.0;
            let mut x2 = 10.0 * rng.next_f64() - 5.0;
            if x2.abs() < 0.1 {
                x2 = 0.1f64.copysign(x2 + 0.05);
            }
            let req = SolveRequest::reduced(vec![hp(x1), hp(x2)], eps.clone(), budget());
            let out = solve_r2(&spec, &req, c).unwrap();
            assert!(out.reduced_error.cmp(&eps) == Ordering::Less, "({x1}, {x2})");
            // Independent re-verification through the closed form.
            let prod = jordan_tuple_product(params, &out.exponents, c).unwrap();
            let u_err = prod.u.sub(&hp(x1), c).abs();
            assert!(u_err.cmp(&eps) == Ordering::Less);
            assert_eq!(prod.v.sign() == Sign::Pos, x2 > 0.0);
        }
    }

    #[test]
    fn r2_adjustment_stages_preserve_v_bitwise() {
        let c = ctx();
        let spec = spec_r2();
        let FamilyParams::JordanR(params) = &spec.params else { panic!() };
        let req =
            SolveRequest::reduced(vec![hp(-3.7), hp(2.25)], hp(1e-4), budget());
        let out = solve_r2(&spec, &req, c).unwrap();
        let k = &out.exponents;
        assert!(k[2] > 0, "target chosen to need the fractional stage");
        let with = jordan_tuple_product(params, k, c).unwrap();
        let without = jordan_tuple_product(params, &[k[0] - k[2], k[1], 0, 0], c).unwrap();
        assert!(with.v.bit_eq(&without.v));
    }

    #[test]
    fn r2_zero_second_coordinate_best_effort() {
        let c = ctx();
        let spec = spec_r2();
        let eps = hp(1e-3);
        let req = SolveRequest::reduced(vec![hp(2.5), Hp::zero(c)], eps.clone(), budget());
        let out = solve_r2(&spec, &req, c).unwrap();
        assert!(out.reduced_error.cmp(&eps) == Ordering::Less);
        // Even exponent on the contracting member keeps v positive.
        assert_eq!((out.exponents[0] - out.exponents[2]) % 2, 0);
    }

    #[test]
    fn r2_ambient_metric_reports_both_errors() {
        let c = ctx();
        let spec = spec_r2();
        let FamilyParams::JordanR(params) = &spec.params else { panic!() };
        let start = (Hp::zero(c), Hp::one(c));
        let orbit = orbit_point::<RealScalar>(params, &[2, 1, 0, 3], (&start.0, &start.1), c)
            .unwrap()
            .to_linear(c)
            .unwrap();
        let eps = hp(1e-2);
        let req = SolveRequest {
            target: vec![orbit.0, orbit.1],
            eps: eps.clone(),
            budget: budget(),
            metric: Metric::Ambient,
            start: None,
        };
        let out = solve_r2(&spec, &req, c).unwrap();
        let amb = out.ambient_error.clone().unwrap();
        assert!(amb.cmp(&eps) == Ordering::Less);
        assert!(out.reduced_error.cmp(&eps) == Ordering::Less);
        assert!(amb.bit_eq(&out.achieved_error));
    }

    #[test]
    fn c2_forward_target_within_eps() {
        let c = ctx();
        let spec = spec_c2();
        let k0 = [3, 2, 1, 0, 2, 2, 4, 4];
        let target = forward_point(&spec, &k0, c).unwrap();
        let eps = hp(1e-6);
        let wide = SearchBudget::new(1_000_000_000, 100_000_000).unwrap();
        let req = SolveRequest::reduced(target.clone(), eps.clone(), wide);
        let out = solve_c2(&spec, &req, c).unwrap();
        assert!(out.reduced_error.cmp(&eps) == Ordering::Less);
        // ρ stays a multiple of 4 and the paired stages repeat exponents.
        assert_eq!(out.exponents[4], out.exponents[5]);
        assert_eq!(out.exponents[6], out.exponents[7]);
        assert_eq!(out.exponents[6] % 4, 0);
        // Independent forward re-evaluation.
        let again = forward_point(&spec, &out.exponents, c).unwrap();
        for (got, want) in again.iter().zip(target.iter()) {
            assert!(got.sub(want, c).abs().to_f64() < 1e-6);
        }
    }

    #[test]
    fn c2_identity_target_returns_zero_tuple() {
        let c = ctx();
        let spec = spec_c2();
        let target = vec![Hp::zero(c), Hp::zero(c), Hp::one(c), Hp::zero(c)];
        let req = SolveRequest::reduced(target, Hp::pow2(-30, c), budget());
        let out = solve_c2(&spec, &req, c).unwrap();
        assert_eq!(out.exponents, vec![0; 8]);
        assert!(out.reduced_error.is_zero());
    }

    #[test]
    fn c2_pair_stages_cancel_in_v_exactly() {
        let c = ctx();
        let spec = spec_c2();
        let FamilyParams::JordanC { params, .. } = &spec.params else { panic!() };
        for xi in [1i64, 3, 10] {
            let with = jordan_tuple_product(params, &[2, 1, 0, 0, xi, xi, 0, 0], c).unwrap();
            let without = jordan_tuple_product(params, &[2, 1, 0, 0, 0, 0, 0, 0], c).unwrap();
            assert!(with.v.bit_eq(&without.v));
        }
    }

    #[test]
    fn c2_random_targets_within_eps() {
        let c = ctx();
        let spec = spec_c2();
        let eps = hp(1e-2);
        let mut rng = Lcg(0x9e3779b97f4a7c15);
        for _ in 0..10 {
            let z1 = (4.0 * rng.next_f64() - 2.0, 4.0 * rng.next_f64() - 2.0);
            let mut z2 = (4.0 * rng.next_f64() - 2.0, 4.0 * rng.next_f64() - 2.0);
            if (z2.0 * z2.0 + z2.1 * z2.1).sqrt() < 0.1 {
                z2.0 += 0.5;
            }
            let req = SolveRequest::reduced(
                vec![hp(z1.0), hp(z1.1), hp(z2.0), hp(z2.1)],
                eps.clone(),
                budget(),
            );
            let out = solve_c2(&spec, &req, c).unwrap();
            assert!(out.reduced_error.cmp(&eps) == Ordering::Less, "{z1:?} {z2:?}");
            assert_eq!(out.exponents[6] % 4, 0);
        }
    }

    #[test]
    fn pair_rotation_forward_target_recovered() {
        let c = ctx();
        let spec = default_params(Family::RotPairR2, c).unwrap();
        let target = forward_point(&spec, &[7, 3], c).unwrap();
        let eps = hp(1e-6);
        let req = SolveRequest::reduced(target, eps.clone(), budget());
        let out = solve(&spec, &req, c).unwrap();
        assert!(out.reduced_error.cmp(&eps) == Ordering::Less);
        // (7,3) itself is a perfect hit, so anything returned earlier in scan
        // order must also be within eps; the scan order makes this (7,3).
        assert_eq!(out.exponents, vec![7, 3]);
    }

    #[test]
    fn pair_rotation_axis_aligned_hit() {
        let c = ctx();
        let spec = default_params(Family::RotPairR2, c).unwrap();
        let FamilyParams::RotPair { a, .. } = &spec.params else { panic!() };
        // Target on the positive x-axis with zero rotation steps.
        let t = a.pow(5, c).unwrap().to_linear(c).unwrap();
        let req = SolveRequest::reduced(vec![t, Hp::zero(c)], Hp::pow2(-40, c), budget());
        let out = solve(&spec, &req, c).unwrap();
        assert_eq!(out.exponents, vec![5, 0]);
        assert!(out.reduced_error.is_zero());
    }

    #[test]
    fn pair_rotation_rejects_origin() {
        let c = ctx();
        let spec = default_params(Family::RotPairR2, c).unwrap();
        let req = SolveRequest::reduced(vec![Hp::zero(c), Hp::zero(c)], hp(0.1), budget());
        assert!(matches!(solve(&spec, &req, c), Err(Error::NotInHCSet(_))));
    }

    #[test]
    fn pair_rotation_annulus_calibration() {
        let c = ctx();
        let spec = default_params(Family::RotPairR2, c).unwrap();
        let eps = hp(0.1);
        let small = SearchBudget::new(1_000_000, 1_000_000).unwrap();
        let mut rng = Lcg(0x2545f4914f6cdd1d);
        let mut ok = 0;
        for _ in 0..100 {
            // Uniform angle, radius in [0.5, 2].
            let r = 0.5 + 1.5 * rng.next_f64();
            let t = std::f64::consts::TAU * rng.next_f64();
            let req = SolveRequest::reduced(
                vec![hp(r * t.cos()), hp(r * t.sin())],
                eps.clone(),
                small.clone(),
            );
            match solve(&spec, &req, c) {
                Ok(out) => {
                    assert!(out.reduced_error.cmp(&eps) == Ordering::Less);
                    ok += 1;
                }
                Err(Error::BudgetExhausted { .. }) => {}
                Err(other) => panic!("unexpected error {other:?}"),
            }
        }
        assert!(ok >= 95, "success rate {ok}/100");
    }

    #[test]
    fn rot_rot_family_solves_forward_targets() {
        let c = ctx();
        let spec = default_params(Family::RotRotPairR2, c).unwrap();
        let target = forward_point(&spec, &[4, 9], c).unwrap();
        let eps = hp(1e-5);
        let req = SolveRequest::reduced(target, eps.clone(), budget());
        let out = solve(&spec, &req, c).unwrap();
        assert!(out.reduced_error.cmp(&eps) == Ordering::Less);
    }

    #[test]
    fn cxr_forward_target_within_eps() {
        let c = ctx();
        let spec = default_params(Family::R3Triple, c).unwrap();
        let FamilyParams::Triple(tp) = &spec.params else { panic!() };
        let t = forward_point(&spec, &[4, 2, 6], c).unwrap();
        let z = HpComplex::new(t[0].clone(), t[1].clone());
        let eps = hp(1e-6);
        let out = solve_cxr(tp, &z, &t[2], &eps, &budget(), c).unwrap();
        assert!(out.reduced_error.cmp(&eps) == Ordering::Less);
        assert_eq!(out.exponents.len(), 3);
        assert_eq!(out.exponents[2] % 2, 0, "positive third coordinate forces even l");
    }

    #[test]
    fn cxr_parity_follows_target_sign() {
        let c = ctx();
        let spec = default_params(Family::R3Triple, c).unwrap();
        let FamilyParams::Triple(tp) = &spec.params else { panic!() };
        let eps = hp(0.05);
        let cases: &[(f64, f64, f64, i64)] = &[
            (1.0, 0.5, 0.8, 0),
            (1.0, 0.5, -0.8, 1),
            (-0.7, 1.1, 2.3, 0),
            (-0.7, 1.1, -2.3, 1),
        ];
        for &(zr, zi, x, want_parity) in cases {
            let z = HpComplex::new(hp(zr), hp(zi));
            let out = solve_cxr(tp, &z, &hp(x), &eps, &budget(), c).unwrap();
            assert_eq!(out.exponents[2] % 2, want_parity, "target x = {x}");
            assert!(out.reduced_error.cmp(&eps) == Ordering::Less);
        }
    }

    #[test]
    fn cxr_zero_real_coordinate_is_an_error() {
        let c = ctx();
        let spec = default_params(Family::R3Triple, c).unwrap();
        let FamilyParams::Triple(tp) = &spec.params else { panic!() };
        let z = HpComplex::new(hp(1.0), hp(0.5));
        assert!(matches!(
            solve_cxr(tp, &z, &Hp::zero(c), &hp(0.1), &budget(), c),
            Err(Error::ZeroTarget(_))
        ));
    }

    #[test]
    fn r3_zero_exponents_fix_the_start() {
        let c = ctx();
        let spec = default_params(Family::R3Triple, c).unwrap();
        let p = forward_point(&spec, &[0, 0, 0], c).unwrap();
        assert!(p[0].bit_eq(&Hp::one(c)));
        assert!(p[1].is_zero());
        assert!(p[2].bit_eq(&Hp::one(c)));
    }

    #[test]
    fn r3_forward_target_within_eps() {
        let c = ctx();
        let spec = default_params(Family::R3Triple, c).unwrap();
        let target = forward_point(&spec, &[3, 2, 5], c).unwrap();
        let eps = hp(1e-6);
        let req = SolveRequest::reduced(target, eps.clone(), budget());
        let out = solve(&spec, &req, c).unwrap();
        assert!(out.reduced_error.cmp(&eps) == Ordering::Less);
        assert_eq!(out.exponents[2] % 2, 1, "negative third coordinate forces odd l");
    }

    #[test]
    fn r3_planar_origin_best_effort_reported() {
        let c = ctx();
        let spec = default_params(Family::R3Triple, c).unwrap();
        let eps = hp(1e-3);
        let req = SolveRequest::reduced(vec![Hp::zero(c), Hp::zero(c), hp(1.3)], eps.clone(), budget());
        let out = solve(&spec, &req, c).unwrap();
        assert!(out.reduced_error.cmp(&eps) == Ordering::Less);
        assert_eq!(out.exponents[2] % 2, 0);
    }

    #[test]
    fn rn_even_solves_blockwise() {
        let c = ctx();
        let spec = default_params(Family::EvenN, c).unwrap();
        let eps = hp(0.1);
        let req = SolveRequest::reduced(vec![hp(1.0); 4], eps.clone(), budget());
        let out = solve(&spec, &req, c).unwrap();
        assert_eq!(out.exponents.len(), 4);
        assert!(out.reduced_error.cmp(&eps) == Ordering::Less);
        let p = forward_point(&spec, &out.exponents, c).unwrap();
        for got in &p {
            assert!(got.sub(&hp(1.0), c).abs().cmp(&eps) == Ordering::Less);
        }
    }

    #[test]
    fn rn_rejects_targets_outside_hc_set() {
        let c = ctx();
        let spec = default_params(Family::EvenN, c).unwrap();
        let req = SolveRequest::reduced(
            vec![Hp::zero(c), Hp::zero(c), hp(1.0), hp(1.0)],
            hp(0.1),
            budget(),
        );
        assert!(matches!(solve(&spec, &req, c), Err(Error::NotInHCSet(_))));
    }

    #[test]
    fn rn_block_permutation_permutes_exponents_exactly() {
        let c = ctx();
        let spec = default_params(Family::EvenN, c).unwrap();
        let eps = hp(0.1);
        let (ta, tb) = ((0.9, -0.4), (-1.3, 0.7));
        let fwd = |t: [(f64, f64); 2]| {
            SolveRequest::reduced(
                vec![hp(t[0].0), hp(t[0].1), hp(t[1].0), hp(t[1].1)],
                eps.clone(),
                budget(),
            )
        };
        let out1 = solve(&spec, &fwd([ta, tb]), c).unwrap();
        let out2 = solve(&spec, &fwd([tb, ta]), c).unwrap();
        assert_eq!(&out1.exponents[0..2], &out2.exponents[2..4]);
        assert_eq!(&out1.exponents[2..4], &out2.exponents[0..2]);
    }

    #[test]
    fn rn_odd_concatenates_triple_block() {
        let c = ctx();
        let spec = crate::presets::default_params_with_blocks(Family::OddN, 2, c).unwrap();
        let eps = hp(0.1);
        let target = vec![hp(1.0), hp(1.0), hp(0.5), hp(-0.5), hp(-1.2)];
        let req = SolveRequest::reduced(target.clone(), eps.clone(), budget());
        let out = solve(&spec, &req, c).unwrap();
        assert_eq!(out.exponents.len(), 5);
        assert!(out.reduced_error.cmp(&eps) == Ordering::Less);
        let p = forward_point(&spec, &out.exponents, c).unwrap();
        for (got, want) in p.iter().zip(target.iter()) {
            assert!(got.sub(want, c).abs().cmp(&eps) == Ordering::Less);
        }
    }

    #[test]
    fn budget_errors_carry_a_stage_tag() {
        let c = ctx();
        let spec = spec_r2();
        let tiny = SearchBudget::new(3, 3).unwrap();
        let req = SolveRequest::reduced(vec![hp(1.234), hp(4.321)], hp(1e-9), tiny);
        match solve(&spec, &req, c) {
            Err(e @ Error::BudgetExhausted { .. }) => assert!(e.stage().is_some()),
            other => panic!("expected a budget error, got {other:?}"),
        }
    }

    #[test]
    fn results_hold_at_doubled_precision() {
        let c = ctx();
        let wide = PrecisionContext::new(256).unwrap();
        let spec = spec_r2();
        let eps = hp(1e-2);
        let mut rng = Lcg(0xda3e39cb94b95bdb);
        for _ in 0..5 {
            let x1 = 4.0 * rng.next_f64() - 2.0;
            let x2 = 0.2 + rng.next_f64();
            let req = SolveRequest::reduced(vec![hp(x1), hp(x2)], eps.clone(), budget());
            let out = solve_r2(&spec, &req, c).unwrap();
            let spec_wide = default_params(Family::JordanR2x4, wide).unwrap();
            let FamilyParams::JordanR(params) = &spec_wide.params else { panic!() };
            let prod = jordan_tuple_product(params, &out.exponents, wide).unwrap();
            let u_err = prod.u.sub(&Hp::from_f64(x1, wide), wide).abs();
            let v_err =
                prod.v.to_linear(wide).unwrap().sub(&Hp::from_f64(x2, wide), wide).abs();
            assert!(u_err.max(&v_err).cmp(&Hp::from_f64(1e-2, wide)) == Ordering::Less);
        }
    }
}

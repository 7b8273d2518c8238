//! Empirical ε-net coverage: enumerate exponent tuples under a budget, map
//! each to its orbit (or reduced) point, and report which cells of a box the
//! points hit. Magnitudes are accumulated in log space so large exponents
//! never overflow; binning happens in `f64`, which is plenty for a density
//! measurement and keeps million-point sweeps cheap.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::precision::PrecisionContext;
use crate::presets::{FamilyParams, TupleSpec};
use crate::scalar::{ComplexScalar, RealScalar, Sign};
use crate::diophantine::SearchBudget;

/// Axis-aligned box with per-axis closed intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Region> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::BadInput("region needs matching nonempty bounds".into()));
        }
        for (l, h) in lo.iter().zip(hi.iter()) {
            if !l.is_finite() || !h.is_finite() || l >= h {
                return Err(Error::BadInput("region axes must be finite with lo < hi".into()));
            }
        }
        Ok(Region { lo, hi })
    }

    /// The same bounds on every axis.
    pub fn cube(lo: f64, hi: f64, dim: usize) -> Result<Region> {
        Region::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub cells_per_axis: usize,
}

impl GridSpec {
    pub fn new(cells_per_axis: usize) -> Result<GridSpec> {
        if cells_per_axis == 0 {
            return Err(Error::BadInput("grid needs at least one cell per axis".into()));
        }
        Ok(GridSpec { cells_per_axis })
    }
}

/// How `budget.max_exponent` caps the enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CapMode {
    /// Every exponent independently in `0..=cap`.
    PerExponent,
    /// Tuples with `Σ kⱼ ≤ cap`.
    TotalSum,
}

impl CapMode {
    pub fn name(&self) -> &'static str {
        match self {
            CapMode::PerExponent => "per-exponent",
            CapMode::TotalSum => "total-sum",
        }
    }
}

/// Which points get binned: the reduced/canonical coordinates, or the orbit
/// of an explicit start vector.
#[derive(Debug, Clone, PartialEq)]
pub enum CoverageMode {
    Reduced,
    Ambient(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    /// (#cells with at least one hit) / (#cells).
    pub fraction_hit: f64,
    /// Per-cell counts in row-major order (first axis slowest).
    pub hit_histogram: Vec<u64>,
    /// Deterministic witness: lexicographically first empty cell, if any.
    pub worst_empty_cell: Option<Vec<usize>>,
    pub points_enumerated: u64,
    pub points_in_box: u64,
    /// Budget echo.
    pub cap: i64,
    pub cap_mode: CapMode,
    pub max_candidates: u64,
    pub grid: GridSpec,
    pub region: Region,
    /// Spec identity echo (family or preset name).
    pub family: String,
}

// ---------------------------------------------------------------------------
// Point maps (f64, log-space magnitudes)
// ---------------------------------------------------------------------------

#[derive(Clone, Copy)]
struct RealCoeff {
    log: f64,
    neg: bool,
    inv: f64,
}

#[derive(Clone, Copy)]
struct ComplexCoeff {
    log: f64,
    theta: f64,
    inv: (f64, f64),
}

fn real_coeff(p: &RealScalar, _ctx: PrecisionContext) -> RealCoeff {
    let log = p.log_mod().to_f64();
    let neg = p.sign() == Sign::Neg;
    RealCoeff { log, neg, inv: if neg { -(-log).exp() } else { (-log).exp() } }
}

fn complex_coeff(p: &ComplexScalar, ctx: PrecisionContext) -> ComplexCoeff {
    let log = p.log_mod().to_f64();
    let theta = p.angle().radians(ctx).to_f64();
    let r = (-log).exp();
    ComplexCoeff { log, theta, inv: (r * theta.cos(), -r * theta.sin()) }
}

fn cmul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

type Mapper = Box<dyn Fn(&[i64], &mut [f64]) + Send + Sync>;

/// Builds the tuple→point map: `arity` exponents in, `dim` coordinates out.
fn point_map(
    spec: &TupleSpec,
    mode: &CoverageMode,
    ctx: PrecisionContext,
) -> Result<(usize, usize, Mapper)> {
    let start_for = |dim: usize, canonical: Vec<f64>| -> Result<Vec<f64>> {
        match mode {
            CoverageMode::Reduced => Ok(canonical),
            CoverageMode::Ambient(s) => {
                if s.len() != dim {
                    return Err(Error::DimensionMismatch(format!(
                        "start has {} coordinates, family needs {dim}",
                        s.len()
                    )));
                }
                Ok(s.clone())
            }
        }
    };
    match &spec.params {
        FamilyParams::JordanR(params) => {
            let cs: Vec<RealCoeff> = params.iter().map(|p| real_coeff(p, ctx)).collect();
            let arity = cs.len();
            let ambient = match mode {
                CoverageMode::Reduced => None,
                CoverageMode::Ambient(s) => {
                    if s.len() != 2 {
                        return Err(Error::DimensionMismatch("start needs 2 coordinates".into()));
                    }
                    Some((s[0], s[1]))
                }
            };
            let map: Mapper = Box::new(move |k, out| {
                let mut u = 0.0;
                let mut lv = 0.0;
                let mut par = 0i64;
                for (c, &kj) in cs.iter().zip(k.iter()) {
                    u += kj as f64 * c.inv;
                    lv += kj as f64 * c.log;
                    par += kj * c.neg as i64;
                }
                let v = if par % 2 == 0 { lv.exp() } else { -lv.exp() };
                match ambient {
                    None => {
                        out[0] = u;
                        out[1] = v;
                    }
                    Some((z1, z2)) => {
                        out[0] = v * (z1 + u * z2);
                        out[1] = v * z2;
                    }
                }
            });
            Ok((arity, 2, map))
        }
        FamilyParams::JordanC { params, .. } => {
            let cs: Vec<ComplexCoeff> = params.iter().map(|p| complex_coeff(p, ctx)).collect();
            let arity = cs.len();
            let ambient = match mode {
                CoverageMode::Reduced => None,
                CoverageMode::Ambient(s) => {
                    if s.len() != 4 {
                        return Err(Error::DimensionMismatch("start needs 4 coordinates".into()));
                    }
                    Some(((s[0], s[1]), (s[2], s[3])))
                }
            };
            let map: Mapper = Box::new(move |k, out| {
                let mut u = (0.0, 0.0);
                let mut lv = 0.0;
                let mut th = 0.0;
                for (c, &kj) in cs.iter().zip(k.iter()) {
                    u.0 += kj as f64 * c.inv.0;
                    u.1 += kj as f64 * c.inv.1;
                    lv += kj as f64 * c.log;
                    th += kj as f64 * c.theta;
                }
                let v = (lv.exp() * th.cos(), lv.exp() * th.sin());
                match ambient {
                    None => {
                        out[0] = u.0;
                        out[1] = u.1;
                        out[2] = v.0;
                        out[3] = v.1;
                    }
                    Some((z1, z2)) => {
                        let first = cmul(v, (z1.0 + cmul(u, z2).0, z1.1 + cmul(u, z2).1));
                        let second = cmul(v, z2);
                        out[0] = first.0;
                        out[1] = first.1;
                        out[2] = second.0;
                        out[3] = second.1;
                    }
                }
            });
            Ok((arity, 4, map))
        }
        FamilyParams::RotPair { a, b } => {
            let ca = complex_coeff(&ComplexScalar::from_real_scalar(a), ctx);
            let cb = complex_coeff(&b.to_complex_scalar(), ctx);
            let s = start_for(2, vec![1.0, 0.0])?;
            Ok((2, 2, planar_map(ca, cb, (s[0], s[1]))))
        }
        FamilyParams::RotRotPair { a, b } => {
            let ca = complex_coeff(&a.to_complex_scalar(), ctx);
            let cb = complex_coeff(&b.to_complex_scalar(), ctx);
            let s = start_for(2, vec![1.0, 0.0])?;
            Ok((2, 2, planar_map(ca, cb, (s[0], s[1]))))
        }
        FamilyParams::Triple(tp) => {
            let co = triple_coeffs(tp, ctx);
            let s = start_for(3, vec![1.0, 0.0, 1.0])?;
            let map: Mapper = Box::new(move |k, out| {
                eval_triple(&co, k[0], k[1], k[2], (s[0], s[1]), s[2], out);
            });
            Ok((3, 3, map))
        }
        FamilyParams::EvenN { k: blocks, a, b } => {
            let ca = complex_coeff(&ComplexScalar::from_real_scalar(a), ctx);
            let cb = complex_coeff(&b.to_complex_scalar(), ctx);
            let blocks = *blocks;
            let dim = 2 * blocks;
            let canonical: Vec<f64> =
                (0..dim).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
            let s = start_for(dim, canonical)?;
            let map: Mapper = Box::new(move |k, out| {
                for j in 0..blocks {
                    let (re, im) =
                        eval_planar(ca, cb, k[2 * j], k[2 * j + 1], (s[2 * j], s[2 * j + 1]));
                    out[2 * j] = re;
                    out[2 * j + 1] = im;
                }
            });
            Ok((dim, dim, map))
        }
        FamilyParams::OddN { k: blocks, a, b, triple } => {
            let ca = complex_coeff(&ComplexScalar::from_real_scalar(a), ctx);
            let cb = complex_coeff(&b.to_complex_scalar(), ctx);
            let co = triple_coeffs(triple, ctx);
            let blocks = *blocks;
            let dim = 2 * blocks + 1;
            let mut canonical: Vec<f64> =
                (0..dim - 1).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
            canonical.push(1.0);
            let s = start_for(dim, canonical)?;
            let map: Mapper = Box::new(move |k, out| {
                for j in 0..blocks - 1 {
                    let (re, im) =
                        eval_planar(ca, cb, k[2 * j], k[2 * j + 1], (s[2 * j], s[2 * j + 1]));
                    out[2 * j] = re;
                    out[2 * j + 1] = im;
                }
                let off = 2 * (blocks - 1);
                eval_triple(
                    &co,
                    k[off],
                    k[off + 1],
                    k[off + 2],
                    (s[off], s[off + 1]),
                    s[off + 2],
                    &mut out[off..],
                );
            });
            Ok((dim, dim, map))
        }
    }
}

fn eval_planar(ca: ComplexCoeff, cb: ComplexCoeff, n: i64, m: i64, start: (f64, f64)) -> (f64, f64) {
    let lv = n as f64 * ca.log + m as f64 * cb.log;
    let th = n as f64 * ca.theta + m as f64 * cb.theta;
    cmul((lv.exp() * th.cos(), lv.exp() * th.sin()), start)
}

fn planar_map(ca: ComplexCoeff, cb: ComplexCoeff, start: (f64, f64)) -> Mapper {
    Box::new(move |k, out| {
        let (re, im) = eval_planar(ca, cb, k[0], k[1], start);
        out[0] = re;
        out[1] = im;
    })
}

struct TripleCoeffs {
    a: ComplexCoeff,
    b: ComplexCoeff,
    c: RealCoeff,
    d: RealCoeff,
}

fn triple_coeffs(tp: &crate::matrices::TripleParams, ctx: PrecisionContext) -> TripleCoeffs {
    TripleCoeffs {
        a: complex_coeff(&tp.a.to_complex_scalar(), ctx),
        b: complex_coeff(&ComplexScalar::from_real_scalar(&tp.b), ctx),
        c: real_coeff(&tp.c, ctx),
        d: real_coeff(&tp.d, ctx),
    }
}

fn eval_triple(
    co: &TripleCoeffs,
    n: i64,
    m: i64,
    l: i64,
    z_start: (f64, f64),
    x_start: f64,
    out: &mut [f64],
) {
    let (re, im) = eval_planar(co.a, co.b, n, m, z_start);
    let lx = n as f64 * co.c.log + l as f64 * co.d.log;
    let par = n * co.c.neg as i64 + l * co.d.neg as i64;
    let x = if par % 2 == 0 { lx.exp() } else { -lx.exp() };
    out[0] = re;
    out[1] = im;
    out[2] = x * x_start;
}

// ---------------------------------------------------------------------------
// Enumeration and binning
// ---------------------------------------------------------------------------

fn candidate_count(arity: usize, cap: i64, mode: CapMode) -> Option<u128> {
    match mode {
        CapMode::PerExponent => {
            let base = (cap as u128).checked_add(1)?;
            let mut total: u128 = 1;
            for _ in 0..arity {
                total = total.checked_mul(base)?;
            }
            Some(total)
        }
        CapMode::TotalSum => {
            // C(cap + arity, arity)
            let mut total: u128 = 1;
            for i in 1..=arity as u128 {
                total = total.checked_mul(cap as u128 + i)?;
                total /= i;
            }
            Some(total)
        }
    }
}

/// Flat row-major cell index, or None when outside the box. Cells are
/// half-open `[lo, hi)` along each axis except the last cell, which is
/// closed so the box partitions exactly.
fn cell_of(region: &Region, grid: GridSpec, point: &[f64]) -> Option<usize> {
    let cells = grid.cells_per_axis;
    let mut flat = 0usize;
    for (i, &x) in point.iter().enumerate() {
        if !x.is_finite() || x < region.lo[i] || x > region.hi[i] {
            return None;
        }
        let t = (x - region.lo[i]) / (region.hi[i] - region.lo[i]) * cells as f64;
        let idx = (t as usize).min(cells - 1);
        flat = flat * cells + idx;
    }
    Some(flat)
}

fn enumerate_slab(
    first: i64,
    arity: usize,
    cap: i64,
    mode: CapMode,
    map: &Mapper,
    dim: usize,
    region: &Region,
    grid: GridSpec,
    hist: &mut [u64],
) -> (u64, u64) {
    let mut k = vec![0i64; arity];
    k[0] = first;
    let mut point = vec![0.0f64; dim];
    let mut enumerated = 0u64;
    let mut in_box = 0u64;
    let rest_cap = match mode {
        CapMode::PerExponent => cap,
        CapMode::TotalSum => cap - first,
    };
    loop {
        map(&k, &mut point);
        enumerated += 1;
        if let Some(cell) = cell_of(region, grid, &point) {
            hist[cell] += 1;
            in_box += 1;
        }
        // Odometer over k[1..], bounded per mode.
        let mut digit = arity - 1;
        loop {
            if digit == 0 {
                return (enumerated, in_box);
            }
            k[digit] += 1;
            let fits = match mode {
                CapMode::PerExponent => k[digit] <= cap,
                CapMode::TotalSum => k[1..].iter().sum::<i64>() <= rest_cap,
            };
            if fits {
                break;
            }
            k[digit] = 0;
            digit -= 1;
        }
    }
}

/// Enumerates every exponent tuple allowed by `budget.max_exponent` under
/// `cap_mode`, maps each to a point, and bins the points inside `region`.
/// Refuses oversized enumerations instead of truncating.
pub fn coverage(
    spec: &TupleSpec,
    mode: &CoverageMode,
    region: &Region,
    grid: GridSpec,
    cap_mode: CapMode,
    budget: &SearchBudget,
    ctx: PrecisionContext,
) -> Result<CoverageReport> {
    let (arity, dim, map) = point_map(spec, mode, ctx)?;
    if region.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "region has {} axes, family points have {dim}",
            region.dim()
        )));
    }
    let cap = budget.max_exponent;
    if cap < 0 {
        return Err(Error::BadInput("exponent cap must be nonnegative".into()));
    }
    let total = candidate_count(arity, cap, cap_mode)
        .filter(|&t| t <= budget.max_candidates as u128)
        .ok_or_else(|| {
            Error::EnumerationTooLarge(format!(
                "tuple count for cap {cap} exceeds the candidate budget {}",
                budget.max_candidates
            ))
        })?;
    let cells_total = grid
        .cells_per_axis
        .checked_pow(dim as u32)
        .filter(|&c| c <= 1 << 24)
        .ok_or_else(|| Error::EnumerationTooLarge("grid has too many cells".into()))?;

    let slabs: Vec<(Vec<u64>, u64, u64)> = (0..=cap)
        .into_par_iter()
        .map(|first| {
            let mut hist = vec![0u64; cells_total];
            let (enumerated, in_box) = enumerate_slab(
                first, arity, cap, cap_mode, &map, dim, region, grid, &mut hist,
            );
            (hist, enumerated, in_box)
        })
        .collect();
    let mut hist = vec![0u64; cells_total];
    let mut enumerated = 0u64;
    let mut in_box = 0u64;
    for (h, e, i) in slabs {
        for (dst, src) in hist.iter_mut().zip(h.iter()) {
            *dst += src;
        }
        enumerated += e;
        in_box += i;
    }
    debug_assert_eq!(enumerated as u128, total);

    let hit = hist.iter().filter(|&&c| c > 0).count();
    let worst_empty_cell = hist.iter().position(|&c| c == 0).map(|flat| {
        let mut idx = vec![0usize; dim];
        let mut rest = flat;
        for i in (0..dim).rev() {
            idx[i] = rest % grid.cells_per_axis;
            rest /= grid.cells_per_axis;
        }
        idx
    });
    Ok(CoverageReport {
        fraction_hit: hit as f64 / cells_total as f64,
        hit_histogram: hist,
        worst_empty_cell,
        points_enumerated: enumerated,
        points_in_box: in_box,
        cap,
        cap_mode,
        max_candidates: budget.max_candidates,
        grid,
        region: region.clone(),
        family: spec.preset.clone(),
    })
}

/// True iff the smaller-budget run's hit cells nest inside the larger run's
/// (counts included) and the hit fraction did not decrease. Reports must
/// share the spec, region, grid, and cap mode.
pub fn coverage_monotone_check(small: &CoverageReport, large: &CoverageReport) -> Result<bool> {
    if small.family != large.family
        || small.region != large.region
        || small.grid != large.grid
        || small.cap_mode != large.cap_mode
    {
        return Err(Error::MismatchedConfig(
            "coverage reports compare only with identical spec, region, grid, and cap mode"
                .into(),
        ));
    }
    if small.cap > large.cap || small.max_candidates > large.max_candidates {
        return Err(Error::MismatchedConfig("budgets are not nested".into()));
    }
    let nested = small
        .hit_histogram
        .iter()
        .zip(large.hit_histogram.iter())
        .all(|(s, l)| s <= l);
    Ok(nested && small.fraction_hit <= large.fraction_hit)
}

/// Histogram CSV: one row per cell in row-major order, one index column per
/// axis (`i0,i1,…`) followed by `count`.
pub fn write_histogram_csv<W: Write>(report: &CoverageReport, out: &mut W) -> std::io::Result<()> {
    let dim = report.region.dim();
    for i in 0..dim {
        write!(out, "i{i},")?;
    }
    writeln!(out, "count")?;
    let cells = report.grid.cells_per_axis;
    for (flat, count) in report.hit_histogram.iter().enumerate() {
        let mut rest = flat;
        let mut idx = vec![0usize; dim];
        for i in (0..dim).rev() {
            idx[i] = rest % cells;
            rest /= cells;
        }
        for i in idx {
            write!(out, "{i},")?;
        }
        writeln!(out, "{count}")?;
    }
    Ok(())
}

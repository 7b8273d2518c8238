//! The four command implementations behind `main`. Each returns the `result`
//! payload for the response envelope; errors bubble as [`Error`] and the
//! binary maps them to exit codes via [`crate::jsonio::exit_code`].

use std::path::Path;

use hyporbit_core::certify::{certify_pair, check_certificate, Obstruction, PairKind};
use hyporbit_core::complex::HpComplex;
use hyporbit_core::coverage::{
    coverage, write_histogram_csv, CapMode, CoverageMode, GridSpec, Region,
};
use hyporbit_core::diophantine::SearchBudget;
use hyporbit_core::error::{Error, Result};
use hyporbit_core::matrices::{commute_check, Family};
use hyporbit_core::precision::{Hp, PrecisionContext};
use hyporbit_core::presets::{
    default_params, default_params_with_blocks, FamilyParams, TupleSpec,
};
use hyporbit_core::reduced::{hc_member, HcSet};
use hyporbit_core::scalar::RealScalar;
use hyporbit_core::solvers::{solve, Metric, SolveRequest};
use serde_json::{json, Value};

use crate::jsonio::{hp_str, members_json, parse_tuple_json};

pub const PRECISION_ENV: &str = "HYPORBIT_PRECISION_BITS";

/// Flag beats environment beats the 128-bit default.
pub fn resolve_precision(flag: Option<u32>) -> Result<PrecisionContext> {
    let bits = match flag {
        Some(b) => b,
        None => match std::env::var(PRECISION_ENV) {
            Ok(s) => s.trim().parse::<u32>().map_err(|_| {
                Error::BadInput(format!("{PRECISION_ENV} must be an integer, got `{s}`"))
            })?,
            Err(_) => 128,
        },
    };
    PrecisionContext::new(bits)
}

fn parse_coords(s: &str, what: &str, ctx: PrecisionContext) -> Result<Vec<Hp>> {
    s.split(',')
        .map(|part| {
            Hp::parse_dec(part, ctx)
                .map_err(|_| Error::BadInput(format!("bad {what} coordinate `{part}`")))
        })
        .collect()
}

/// A named family at its preset parameters, or `custom` with an explicit
/// member list (a Jordan-cell tuple with those diagonals).
pub fn family_spec(
    family: &str,
    blocks: Option<usize>,
    members: Option<&str>,
    ctx: PrecisionContext,
) -> Result<TupleSpec> {
    let fam = Family::parse(family)?;
    if fam == Family::Custom {
        let list = members.ok_or_else(|| {
            Error::BadInput("custom family needs --members a1,a2,…".into())
        })?;
        let params: Result<Vec<RealScalar>> = parse_coords(list, "member", ctx)?
            .iter()
            .map(|a| {
                if a.is_zero() {
                    return Err(Error::ZeroParameter);
                }
                Ok(RealScalar::from_linear(a, ctx))
            })
            .collect();
        return Ok(TupleSpec {
            family: Family::Custom,
            params: FamilyParams::JordanR(params?),
            tags: vec![],
            preset: "custom".into(),
        });
    }
    match blocks {
        Some(k) => default_params_with_blocks(fam, k, ctx),
        None => default_params(fam, ctx),
    }
}

// ---------------------------------------------------------------------------
// build
// ---------------------------------------------------------------------------

fn build_tuple_json(
    t: &hyporbit_core::matrices::MatrixTuple,
    tags: &[hyporbit_core::scalar::ParamTag],
    ctx: PrecisionContext,
) -> Result<Value> {
    // Preset members commute by construction; the residual bound only has to
    // absorb last-ulp rounding in the dense commutator arithmetic.
    let tol = Hp::pow2(-(ctx.bits() as i64 - 24), ctx);
    let report = commute_check(t, &tol, ctx)?;
    if t.family == Family::Custom && !report.ok {
        return Err(Error::MismatchedConfig(format!(
            "commute check failed: max residual {}",
            hp_str(&report.max_residual)
        )));
    }
    Ok(json!({
        "family": t.family.name(),
        "dim": t.dim,
        "precision_bits": ctx.bits(),
        "param_tags": tags.iter().map(|tag| json!({
            "description": tag.description,
            "irrationality_notes": tag.irrationality_notes,
        })).collect::<Vec<_>>(),
        "members": members_json(t, ctx)?,
        "commute_check": {
            "ok": report.ok,
            "max_residual": hp_str(&report.max_residual),
        },
    }))
}

pub fn cmd_build(
    family: Option<&str>,
    blocks: Option<usize>,
    custom: Option<&Path>,
    ctx: PrecisionContext,
) -> Result<Value> {
    if let Some(path) = custom {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::BadInput(format!("cannot read {}: {e}", path.display())))?;
        let doc: Value = serde_json::from_str(&text)
            .map_err(|e| Error::BadInput(format!("{} is not JSON: {e}", path.display())))?;
        let tuple = parse_tuple_json(&doc, ctx)?;
        return build_tuple_json(&tuple, &[], ctx);
    }
    let family = family.ok_or_else(|| Error::BadInput("need --family or --custom".into()))?;
    let spec = family_spec(family, blocks, None, ctx)?;
    let tuple = spec.to_matrix_tuple(ctx)?;
    build_tuple_json(&tuple, &spec.tags, ctx)
}

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

/// Dense-set descriptor the CLI gates solve targets through. The library
/// solvers keep their best-effort branches for boundary targets; the command
/// surface instead reports `not_in_hc_set` exactly when a descriptor
/// coordinate (block) is zero, so fixtures can rely on the exit code.
fn hc_gate(spec: &TupleSpec, target: &[Hp]) -> Result<()> {
    let ok = match &spec.params {
        FamilyParams::JordanR(_) => hc_member(&HcSet::SecondCoordNonzero, target)?,
        FamilyParams::JordanC { .. } => {
            if target.len() != 4 {
                return Err(Error::DimensionMismatch(format!(
                    "target has {} coordinates, family needs 4",
                    target.len()
                )));
            }
            let z = [
                HpComplex::new(target[0].clone(), target[1].clone()),
                HpComplex::new(target[2].clone(), target[3].clone()),
            ];
            hc_member(&HcSet::SecondCoordNonzero, &z)?
        }
        FamilyParams::RotPair { .. } | FamilyParams::RotRotPair { .. } => {
            hc_member(&HcSet::BlocksNonzero { pairs: 1, odd_tail: false }, target)?
        }
        FamilyParams::Triple(_) => {
            hc_member(&HcSet::BlocksNonzero { pairs: 1, odd_tail: true }, target)?
        }
        FamilyParams::EvenN { k, .. } => {
            hc_member(&HcSet::BlocksNonzero { pairs: *k, odd_tail: false }, target)?
        }
        FamilyParams::OddN { k, .. } => {
            hc_member(&HcSet::BlocksNonzero { pairs: *k, odd_tail: true }, target)?
        }
    };
    if !ok {
        return Err(Error::NotInHCSet(
            "a descriptor coordinate of the target is zero".into(),
        ));
    }
    Ok(())
}

pub struct SolveOpts<'a> {
    pub family: &'a str,
    pub blocks: Option<usize>,
    pub target: &'a str,
    pub eps: &'a str,
    pub metric: &'a str,
    pub start: Option<&'a str>,
    pub max_exponent: Option<i64>,
    pub max_candidates: Option<u64>,
}

fn budget_from(max_exponent: Option<i64>, max_candidates: Option<u64>) -> Result<SearchBudget> {
    let d = SearchBudget::default();
    SearchBudget::new(
        max_exponent.unwrap_or(d.max_exponent),
        max_candidates.unwrap_or(d.max_candidates),
    )
}

pub fn cmd_solve(opts: &SolveOpts, ctx: PrecisionContext) -> Result<Value> {
    let spec = family_spec(opts.family, opts.blocks, None, ctx)?;
    if spec.family == Family::Custom {
        return Err(Error::MismatchedConfig("custom tuples have no solve pipeline".into()));
    }
    let target = parse_coords(opts.target, "target", ctx)?;
    if target.len() != spec.target_dim() {
        return Err(Error::DimensionMismatch(format!(
            "target has {} coordinates, family needs {}",
            target.len(),
            spec.target_dim()
        )));
    }
    let eps = Hp::parse_dec(opts.eps, ctx)?;
    if eps.signum_i8() <= 0 {
        return Err(Error::BadInput("eps must be positive".into()));
    }
    hc_gate(&spec, &target)?;
    let metric = match opts.metric {
        "reduced" => Metric::Reduced,
        "ambient" => Metric::Ambient,
        other => return Err(Error::BadInput(format!("unknown metric `{other}`"))),
    };
    let start = match opts.start {
        Some(s) => Some(parse_coords(s, "start", ctx)?),
        None => None,
    };
    let req = SolveRequest {
        target,
        eps: eps.clone(),
        budget: budget_from(opts.max_exponent, opts.max_candidates)?,
        metric,
        start,
    };
    let r = solve(&spec, &req, ctx)?;
    Ok(json!({
        "family": spec.family.name(),
        "precision_bits": ctx.bits(),
        "metric": opts.metric,
        "eps": hp_str(&eps),
        "exponents": r.exponents,
        "achieved_error": hp_str(&r.achieved_error),
        "reduced_error": hp_str(&r.reduced_error),
        "ambient_error": r.ambient_error.as_ref().map(hp_str),
        "candidates_examined": r.candidates_examined,
        "stages": r.stages.iter().map(|s| json!({
            "name": s.name,
            "candidates": s.candidates,
        })).collect::<Vec<_>>(),
    }))
}

// ---------------------------------------------------------------------------
// certify
// ---------------------------------------------------------------------------

pub fn cmd_certify(
    pair: &str,
    a: &str,
    b: &str,
    max_exponent: Option<i64>,
    max_candidates: Option<u64>,
    ctx: PrecisionContext,
) -> Result<Value> {
    let kind = PairKind::parse(pair)?;
    let a = Hp::parse_dec(a, ctx)?;
    let b = Hp::parse_dec(b, ctx)?;
    let cert = certify_pair(kind, &a, &b, ctx)?;
    let budget = SearchBudget::new(
        max_exponent.unwrap_or(10_000),
        max_candidates.unwrap_or(10_000),
    )?;
    let check = check_certificate(&cert, &budget, ctx)?;
    let data = match &cert.data {
        Obstruction::DiagonalLattice { log_a, log_b } => json!({
            "log_a": hp_str(log_a),
            "log_b": hp_str(log_b),
        }),
        Obstruction::CouplingBlowup { min_mass, max_mass } => json!({
            "min_mass": hp_str(min_mass),
            "max_mass": hp_str(max_mass),
        }),
        Obstruction::UnitModulus { unit_is_a, other_log } => json!({
            "unit_is_a": unit_is_a,
            "other_log": hp_str(other_log),
        }),
        Obstruction::ProgressionGap { delta, gap } => json!({
            "delta": hp_str(delta),
            "gap": hp_str(gap),
        }),
    };
    Ok(json!({
        "pair": cert.pair.name(),
        "precision_bits": ctx.bits(),
        "a": hp_str(&cert.a),
        "b": hp_str(&cert.b),
        "kind": cert.kind(),
        "data": data,
        "explanation": cert.explanation,
        "check": {
            "passed": check.passed,
            "points_checked": check.points_checked,
            "witness": check.witness,
        },
    }))
}

// ---------------------------------------------------------------------------
// coverage
// ---------------------------------------------------------------------------

pub struct CoverageOpts<'a> {
    pub family: &'a str,
    pub blocks: Option<usize>,
    pub members: Option<&'a str>,
    pub box_spec: &'a str,
    pub grid: usize,
    pub cap: i64,
    pub cap_mode: &'a str,
    pub max_candidates: Option<u64>,
    pub mode: &'a str,
    pub start: Option<&'a str>,
    pub csv: Option<&'a Path>,
}

fn parse_box(s: &str) -> Result<Region> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for axis in s.split(',') {
        let (l, h) = axis
            .split_once(':')
            .ok_or_else(|| Error::BadInput(format!("box axis `{axis}` is not lo:hi")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::BadInput(format!("bad box bound `{t}`")))
        };
        lo.push(parse(l)?);
        hi.push(parse(h)?);
    }
    Region::new(lo, hi)
}

pub fn cmd_coverage(opts: &CoverageOpts, ctx: PrecisionContext) -> Result<Value> {
    let spec = family_spec(opts.family, opts.blocks, opts.members, ctx)?;
    let region = parse_box(opts.box_spec)?;
    let grid = GridSpec::new(opts.grid)?;
    let cap_mode = match opts.cap_mode {
        "per-exponent" => CapMode::PerExponent,
        "total-sum" => CapMode::TotalSum,
        other => return Err(Error::BadInput(format!("unknown cap mode `{other}`"))),
    };
    if opts.cap < 0 {
        return Err(Error::BadInput("cap must be nonnegative".into()));
    }
    let budget = SearchBudget {
        max_exponent: opts.cap,
        max_candidates: opts.max_candidates.unwrap_or(SearchBudget::default().max_candidates),
        deadline_hint_ms: None,
    };
    let mode = match opts.mode {
        "reduced" => CoverageMode::Reduced,
        "ambient" => {
            let s = opts.start.ok_or_else(|| {
                Error::BadInput("ambient coverage needs --start".into())
            })?;
            let coords: Result<Vec<f64>> = s
                .split(',')
                .map(|t| {
                    t.trim().parse::<f64>().map_err(|_| {
                        Error::BadInput(format!("bad start coordinate `{t}`"))
                    })
                })
                .collect();
            CoverageMode::Ambient(coords?)
        }
        other => return Err(Error::BadInput(format!("unknown coverage mode `{other}`"))),
    };
    let report = coverage(&spec, &mode, &region, grid, cap_mode, &budget, ctx)?;
    if let Some(path) = opts.csv {
        let mut file = std::fs::File::create(path)
            .map_err(|e| Error::BadInput(format!("cannot write {}: {e}", path.display())))?;
        write_histogram_csv(&report, &mut file)
            .map_err(|e| Error::BadInput(format!("cannot write {}: {e}", path.display())))?;
    }
    let fmt_f64 = |v: &f64| format!("{v}");
    Ok(json!({
        "family": spec.family.name(),
        "precision_bits": ctx.bits(),
        "mode": opts.mode,
        "region": {
            "lo": report.region.lo.iter().map(fmt_f64).collect::<Vec<_>>(),
            "hi": report.region.hi.iter().map(fmt_f64).collect::<Vec<_>>(),
        },
        "grid": report.grid.cells_per_axis,
        "cap": report.cap,
        "cap_mode": report.cap_mode.name(),
        "max_candidates": report.max_candidates,
        "fraction_hit": format!("{}", report.fraction_hit),
        "points_enumerated": report.points_enumerated,
        "points_in_box": report.points_in_box,
        "worst_empty_cell": report.worst_empty_cell,
        "csv": opts.csv.map(|p| p.display().to_string()),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128).unwrap()
    }

    #[test]
    fn solve_gates_boundary_targets() {
        let c = ctx();
        let base = SolveOpts {
            family: "even-n",
            blocks: Some(2),
            target: "0,0,1,1",
            eps: "1e-1",
            metric: "reduced",
            start: None,
            max_exponent: None,
            max_candidates: None,
        };
        let err = cmd_solve(&base, c).unwrap_err();
        assert!(matches!(err, Error::NotInHCSet(_)));

        let err = cmd_solve(&SolveOpts { family: "jordan-r2x4", blocks: None, target: "0.5,0", ..base }, c)
            .unwrap_err();
        assert!(matches!(err, Error::NotInHCSet(_)));

        let err = cmd_solve(&SolveOpts { family: "r3-triple", blocks: None, target: "1,1,0", ..base }, c)
            .unwrap_err();
        assert!(matches!(err, Error::NotInHCSet(_)));
    }

    #[test]
    fn solve_round_trips_a_reachable_target() {
        let c = ctx();
        let opts = SolveOpts {
            family: "jordan-r2x4",
            blocks: None,
            target: "0.3,-1.7",
            eps: "1e-2",
            metric: "reduced",
            start: None,
            max_exponent: None,
            max_candidates: None,
        };
        let v = cmd_solve(&opts, c).unwrap();
        assert_eq!(v["family"], "jordan-r2x4");
        assert_eq!(v["exponents"].as_array().unwrap().len(), 4);
        let err: f64 = v["achieved_error"].as_str().unwrap().parse().unwrap();
        assert!(err < 1e-2, "{err}");
    }

    #[test]
    fn negative_eps_is_bad_input() {
        let c = ctx();
        let opts = SolveOpts {
            family: "jordan-r2x4",
            blocks: None,
            target: "0.3,-1.7",
            eps: "-1",
            metric: "reduced",
            start: None,
            max_exponent: None,
            max_candidates: None,
        };
        assert!(matches!(cmd_solve(&opts, c), Err(Error::BadInput(_))));
    }

    #[test]
    fn certify_reports_the_progression_gap() {
        let c = ctx();
        let v = cmd_certify("jordan-jordan", "2", "3", None, None, c).unwrap();
        assert_eq!(v["kind"], "progression-gap");
        assert_eq!(v["check"]["passed"], true);
        let delta: f64 = v["data"]["delta"].as_str().unwrap().parse().unwrap();
        assert!((delta - (-0.3183)).abs() < 1e-4, "{delta}");

        let v = cmd_certify("jordan-jordan", "1", "5", None, None, c).unwrap();
        assert_eq!(v["kind"], "unit-modulus");
        assert_eq!(v["check"]["passed"], true);
    }

    #[test]
    fn coverage_reports_a_fraction_and_csv() {
        let c = ctx();
        let dir = std::env::temp_dir().join("hyporbit-cov-test");
        std::fs::create_dir_all(&dir).unwrap();
        let csv = dir.join("hist.csv");
        let opts = CoverageOpts {
            family: "custom",
            blocks: None,
            members: Some("2,3"),
            box_spec: "-2:2,-2:2",
            grid: 5,
            cap: 30,
            cap_mode: "per-exponent",
            max_candidates: None,
            mode: "reduced",
            start: None,
            csv: Some(&csv),
        };
        let v = cmd_coverage(&opts, c).unwrap();
        let frac: f64 = v["fraction_hit"].as_str().unwrap().parse().unwrap();
        assert!(frac > 0.0 && frac <= 1.0);
        assert_eq!(v["points_enumerated"], 31 * 31);
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with("i0,i1,count"));
        assert_eq!(text.lines().count(), 1 + 25);
    }

    #[test]
    fn build_then_reingest_is_identical() {
        let c = ctx();
        let first = cmd_build(Some("jordan-r2x4"), None, None, c).unwrap();
        let dir = std::env::temp_dir().join("hyporbit-build-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("tuple.json");
        std::fs::write(&path, serde_json::to_string(&json!({"result": first.clone()})).unwrap())
            .unwrap();
        let second = cmd_build(None, None, Some(&path), c).unwrap();
        assert_eq!(second["family"], "custom");
        assert_eq!(first["members"], second["members"]);
        assert_eq!(second["commute_check"]["ok"], true);
    }

    #[test]
    fn precision_resolution_prefers_the_flag() {
        assert_eq!(resolve_precision(Some(192)).unwrap().bits(), 192);
        assert!(resolve_precision(Some(32)).is_err());
    }
}

//! JSON encoding of matrices and reports. Numeric values travel as decimal
//! strings next to an explicit `precision_bits` field so fixtures re-parse
//! bit-for-bit at the precision they were written with — never as binary
//! floats.

use hyporbit_core::complex::HpComplex;
use hyporbit_core::error::{Error, Result};
use hyporbit_core::matrices::{DenseMatrix, Member, MatrixTuple};
use hyporbit_core::precision::{Hp, PrecisionContext};
use serde_json::{json, Value};

pub const SCHEMA_VERSION: &str = "1";

pub fn hp_str(x: &Hp) -> String {
    x.to_dec_string()
}

/// Exit code for an error, per the documented contract: 2 when a search
/// budget runs out, 3 when the target is outside the family's dense set or
/// reachable cone, 4 for malformed requests, 1 for internal numeric faults.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::BudgetExhausted { .. } => 2,
        Error::NotInHCSet(_) | Error::UnreachableCone(_) | Error::ZeroTarget(_) => 3,
        Error::BadInput(_)
        | Error::InvalidFamily(_)
        | Error::DimensionMismatch(_)
        | Error::MismatchedConfig(_)
        | Error::ZeroParameter
        | Error::EnumerationTooLarge(_) => 4,
        Error::OverflowRange(_) | Error::PrecisionExhausted(_) => 1,
    }
}

/// The one response shape every command prints: `schema_version`,
/// `elapsed_ms`, and exactly one of `result` / `error`.
pub fn envelope(outcome: &Result<Value>, elapsed_ms: u64) -> (Value, i32) {
    match outcome {
        Ok(result) => (
            json!({
                "schema_version": SCHEMA_VERSION,
                "elapsed_ms": elapsed_ms,
                "result": result,
            }),
            0,
        ),
        Err(err) => (
            json!({
                "schema_version": SCHEMA_VERSION,
                "elapsed_ms": elapsed_ms,
                "error": {
                    "code": err.code(),
                    "stage": err.stage(),
                    "message": err.to_string(),
                },
            }),
            exit_code(err),
        ),
    }
}

fn real_rows(d: &DenseMatrix<Hp>) -> Value {
    let rows: Vec<Value> = (0..d.dim)
        .map(|i| Value::Array((0..d.dim).map(|j| json!(hp_str(d.at(i, j)))).collect()))
        .collect();
    Value::Array(rows)
}

fn complex_rows(d: &DenseMatrix<HpComplex>) -> Value {
    let rows: Vec<Value> = (0..d.dim)
        .map(|i| {
            Value::Array(
                (0..d.dim)
                    .map(|j| {
                        let e = d.at(i, j);
                        json!([hp_str(&e.re), hp_str(&e.im)])
                    })
                    .collect(),
            )
        })
        .collect();
    Value::Array(rows)
}

pub fn member_json(m: &Member, ctx: PrecisionContext) -> Result<Value> {
    if m.is_complex() {
        let d = m.to_dense_complex(ctx)?;
        Ok(json!({ "complex": true, "entries": complex_rows(&d) }))
    } else {
        let d = match m {
            Member::Blocks(b) => b.to_dense_real(ctx)?,
            Member::DenseReal(d) => d.clone(),
            Member::DenseComplex(_) => unreachable!("is_complex() was false"),
        };
        Ok(json!({ "complex": false, "entries": real_rows(&d) }))
    }
}

fn bad(msg: &str) -> Error {
    Error::BadInput(msg.into())
}

fn parse_entry_real(v: &Value, ctx: PrecisionContext) -> Result<Hp> {
    let s = v.as_str().ok_or_else(|| bad("real entry must be a decimal string"))?;
    Hp::parse_dec(s, ctx)
}

fn parse_entry_complex(v: &Value, ctx: PrecisionContext) -> Result<HpComplex> {
    let pair = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
        bad("complex entry must be a two-element [re, im] array of decimal strings")
    })?;
    Ok(HpComplex::new(parse_entry_real(&pair[0], ctx)?, parse_entry_real(&pair[1], ctx)?))
}

pub fn parse_member_json(v: &Value, ctx: PrecisionContext) -> Result<Member> {
    let complex =
        v.get("complex").and_then(Value::as_bool).ok_or_else(|| bad("member needs `complex`"))?;
    let rows = v
        .get("entries")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("member needs an `entries` array of rows"))?;
    let dim = rows.len();
    let row_of = |r: &Value| -> Result<Vec<Value>> {
        let cells = r.as_array().ok_or_else(|| bad("matrix row must be an array"))?;
        if cells.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "row has {} entries in a {dim}×{dim} matrix",
                cells.len()
            )));
        }
        Ok(cells.clone())
    };
    if complex {
        let mut parsed = Vec::with_capacity(dim);
        for r in rows {
            parsed.push(row_of(r)?.iter().map(|e| parse_entry_complex(e, ctx)).collect::<Result<Vec<_>>>()?);
        }
        Ok(Member::DenseComplex(DenseMatrix::from_rows(parsed)?))
    } else {
        let mut parsed = Vec::with_capacity(dim);
        for r in rows {
            parsed.push(row_of(r)?.iter().map(|e| parse_entry_real(e, ctx)).collect::<Result<Vec<_>>>()?);
        }
        Ok(Member::DenseReal(DenseMatrix::from_rows(parsed)?))
    }
}

pub fn members_json(t: &MatrixTuple, ctx: PrecisionContext) -> Result<Value> {
    let members: Result<Vec<Value>> = t.members.iter().map(|m| member_json(m, ctx)).collect();
    Ok(Value::Array(members?))
}

/// Reads the `members` array of a previous `build` result back into a tuple.
/// Accepts either a bare result object or a full response envelope.
pub fn parse_tuple_json(doc: &Value, ctx: PrecisionContext) -> Result<MatrixTuple> {
    let result = doc.get("result").unwrap_or(doc);
    let members_v = result
        .get("members")
        .and_then(Value::as_array)
        .ok_or_else(|| bad("document has no `members` array"))?;
    if members_v.is_empty() {
        return Err(bad("tuple needs at least one member"));
    }
    let members: Result<Vec<Member>> =
        members_v.iter().map(|m| parse_member_json(m, ctx)).collect();
    let members = members?;
    let dim = members[0].dim();
    MatrixTuple::new(dim, members, hyporbit_core::matrices::Family::Custom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hyporbit_core::matrices::Family;
    use hyporbit_core::presets::default_params;

    fn ctx() -> PrecisionContext {
        PrecisionContext::new(128).unwrap()
    }

    #[test]
    fn members_round_trip_bit_exactly() {
        let c = ctx();
        for family in [Family::JordanR2x4, Family::JordanC2x8, Family::R3Triple] {
            let t = default_params(family, c).unwrap().to_matrix_tuple(c).unwrap();
            let doc = json!({ "members": members_json(&t, c).unwrap() });
            let back = parse_tuple_json(&doc, c).unwrap();
            assert_eq!(back.dim, t.dim);
            assert_eq!(back.family, Family::Custom);
            // Re-rendering the re-ingested tuple reproduces the strings.
            assert_eq!(
                members_json(&back, c).unwrap(),
                members_json(&t, c).unwrap(),
                "{family:?}"
            );
        }
    }

    #[test]
    fn error_envelopes_carry_code_stage_message() {
        let err: Result<Value> = Err(Error::BudgetExhausted {
            stage: "planar",
            detail: "m exceeded 10".into(),
        });
        let (v, code) = envelope(&err, 7);
        assert_eq!(code, 2);
        assert_eq!(v["schema_version"], "1");
        assert_eq!(v["error"]["code"], "budget_exhausted");
        assert_eq!(v["error"]["stage"], "planar");
        assert!(v["error"]["message"].as_str().unwrap().contains("planar"));
        assert!(v.get("result").is_none());
    }

    #[test]
    fn exit_codes_follow_the_contract() {
        let cases: Vec<(Error, i32)> = vec![
            (Error::BudgetExhausted { stage: "sign", detail: String::new() }, 2),
            (Error::NotInHCSet(String::new()), 3),
            (Error::UnreachableCone(String::new()), 3),
            (Error::ZeroTarget(String::new()), 3),
            (Error::BadInput(String::new()), 4),
            (Error::InvalidFamily(String::new()), 4),
            (Error::EnumerationTooLarge(String::new()), 4),
            (Error::ZeroParameter, 4),
            (Error::OverflowRange(String::new()), 1),
            (Error::PrecisionExhausted(String::new()), 1),
        ];
        for (err, want) in cases {
            assert_eq!(exit_code(&err), want, "{err:?}");
        }
    }
}

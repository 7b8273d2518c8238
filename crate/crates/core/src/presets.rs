//! Named parameter presets and the expression language they are written in.
//!
//! Presets live in `presets.toml`, embedded at build time. Every numeric value
//! there is a symbolic expression (`-(2^(-1/2))`, `sqrt(3)`, …) re-evaluated at
//! the caller's working precision, so a 256-bit re-validation rebuilds the same
//! constants at 256 bits instead of upcasting 64-bit approximations.
//!
//! Reciprocal parameters such as the third member of `(a, b, 1/a, 1)` are
//! *not* listed in the file: they are derived by log negation so that the
//! cancellation identities (`a^κ·(1/a)^κ = 1` and friends) hold bit-for-bit.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::matrices::{
    build_even_tuple, build_odd_tuple, jordan_complex_tuple, jordan_real_tuple, Family,
    MatrixTuple, Rotor, TripleParams,
};
use crate::precision::{Hp, PrecisionContext};
use crate::scalar::{Angle, ComplexScalar, ParamTag, RealScalar, Sign};

const PRESETS_TOML: &str = include_str!("../presets.toml");

// ---------------------------------------------------------------------------
// Expression evaluation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let mut toks = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                toks.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                toks.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                toks.push(Tok::Star);
                i += 1;
            }
            '/' => {
                toks.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                toks.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                toks.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                toks.push(Tok::Num(src[start..i].to_string()));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, 'a'..='z' | 'A'..='Z' | '_' | '0'..='9')
                {
                    i += 1;
                }
                toks.push(Tok::Ident(src[start..i].to_string()));
            }
            other => {
                return Err(Error::BadInput(format!(
                    "unexpected character `{other}` in expression `{src}`"
                )))
            }
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
    src: &'a str,
    ctx: PrecisionContext,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok) -> Result<()> {
        match self.bump() {
            Some(t) if *t == want => Ok(()),
            _ => Err(self.err("malformed expression")),
        }
    }

    fn err(&self, what: &str) -> Error {
        Error::BadInput(format!("{what} in expression `{}`", self.src))
    }

    // expr := term {('+'|'-') term}
    fn expr(&mut self) -> Result<Hp> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = acc.add(&rhs, self.ctx);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    let rhs = self.term()?;
                    acc = acc.sub(&rhs, self.ctx);
                }
                _ => return Ok(acc),
            }
        }
    }

    // term := unary {('*'|'/') unary}
    fn term(&mut self) -> Result<Hp> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = acc.mul(&rhs, self.ctx);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let rhs = self.unary()?;
                    acc = acc.div(&rhs, self.ctx)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    // unary := '-' unary | power
    fn unary(&mut self) -> Result<Hp> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.pos += 1;
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    // power := primary ['^' unary]   (right-associative)
    fn power(&mut self) -> Result<Hp> {
        let base = self.primary()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.pos += 1;
            let expo = self.unary()?;
            return pow_hp(&base, &expo, self.ctx).map_err(|_| self.err("bad power"));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Hp> {
        match self.bump().cloned() {
            Some(Tok::Num(s)) => Hp::parse_dec(&s, self.ctx),
            Some(Tok::Ident(name)) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen)?;
                    match name.as_str() {
                        "sqrt" => arg.sqrt(self.ctx),
                        _ => Err(self.err("unknown function")),
                    }
                } else {
                    match name.as_str() {
                        "pi" => Ok(Hp::pi(self.ctx)),
                        // Fractional golden ratio (sqrt(5)-1)/2, used as a turn
                        // count because its multiples equidistribute mod 1.
                        "golden" => {
                            let s = Hp::from_i64(5, self.ctx).sqrt(self.ctx)?;
                            s.sub(&Hp::one(self.ctx), self.ctx)
                                .div(&Hp::from_i64(2, self.ctx), self.ctx)
                        }
                        _ => Err(self.err("unknown constant")),
                    }
                }
            }
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            _ => Err(self.err("malformed expression")),
        }
    }
}

fn pow_hp(base: &Hp, expo: &Hp, ctx: PrecisionContext) -> Result<Hp> {
    match base.signum_i8() {
        1 => {
            let l = base.ln(ctx)?;
            l.mul(expo, ctx).exp(ctx)
        }
        0 => match expo.signum_i8() {
            1 => Ok(Hp::zero(ctx)),
            0 => Ok(Hp::one(ctx)),
            _ => Err(Error::BadInput("0 to a negative power".into())),
        },
        _ => {
            // Negative base only with an integer exponent.
            let k = expo.round_i128().map_err(|_| {
                Error::BadInput("negative base needs an integer exponent".into())
            })?;
            if !expo.sub_exact(&Hp::from_i128(k, ctx)).is_zero() {
                return Err(Error::BadInput("negative base needs an integer exponent".into()));
            }
            let mag = pow_hp(&base.abs(), expo, ctx)?;
            Ok(if k % 2 == 0 { mag } else { mag.neg() })
        }
    }
}

/// Evaluates one preset expression at the given precision.
///
/// Grammar: `+ - * / ^` with usual precedence, parentheses, `sqrt(x)`, and the
/// constants `pi` and `golden` = (√5−1)/2.
pub fn eval_expr(src: &str, ctx: PrecisionContext) -> Result<Hp> {
    let toks = lex(src)?;
    let mut p = Parser { toks: &toks, pos: 0, src, ctx };
    let v = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::BadInput(format!("trailing tokens in expression `{src}`")));
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Preset file access
// ---------------------------------------------------------------------------

fn preset_doc() -> &'static toml::Table {
    static DOC: OnceLock<toml::Table> = OnceLock::new();
    DOC.get_or_init(|| PRESETS_TOML.parse::<toml::Table>().expect("embedded presets.toml parses"))
}

fn family_table(family: Family) -> Result<&'static toml::Table> {
    preset_doc()
        .get(family.name())
        .and_then(|v| v.as_table())
        .ok_or_else(|| Error::MismatchedConfig(format!("no preset for family {}", family.name())))
}

fn expr_key(table: &toml::Table, key: &str, ctx: PrecisionContext) -> Result<Hp> {
    let src = table
        .get(key)
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::MismatchedConfig(format!("preset key `{key}` missing")))?;
    eval_expr(src, ctx)
}

fn expr_src(table: &toml::Table, key: &str) -> String {
    table.get(key).and_then(|v| v.as_str()).unwrap_or("?").to_string()
}

fn int_key(table: &toml::Table, key: &str) -> Result<usize> {
    let v = table
        .get(key)
        .and_then(|v| v.as_integer())
        .ok_or_else(|| Error::MismatchedConfig(format!("preset key `{key}` missing")))?;
    usize::try_from(v).map_err(|_| Error::MismatchedConfig(format!("preset key `{key}` negative")))
}

// ---------------------------------------------------------------------------
// Tuple specifications
// ---------------------------------------------------------------------------

/// Family-shaped parameter bundle.
#[derive(Debug, Clone)]
pub enum FamilyParams {
    /// `(a, b, 1/a, 1)` with `-1 < a < 0`, `b > 1`.
    JordanR(Vec<RealScalar>),
    /// `(a, b, 1/a, 1, ia, 1/(ia), 4i, -1/4)`; `a` is the underlying real.
    JordanC { a: RealScalar, params: Vec<ComplexScalar> },
    /// Scaled identity × rotation.
    RotPair { a: RealScalar, b: Rotor },
    /// Rotation × rotation.
    RotRotPair { a: Rotor, b: Rotor },
    /// The 3×3 construction.
    Triple(TripleParams),
    /// `k` independent planar blocks on ℝ^{2k}.
    EvenN { k: usize, a: RealScalar, b: Rotor },
    /// `k-1` planar blocks plus the triple on ℝ^{2k+1}.
    OddN { k: usize, a: RealScalar, b: Rotor, triple: TripleParams },
}

/// A family plus concrete parameters and their hypothesis tags.
#[derive(Debug, Clone)]
pub struct TupleSpec {
    pub family: Family,
    pub params: FamilyParams,
    pub tags: Vec<ParamTag>,
    /// Name of the preset the parameters came from.
    pub preset: String,
}

impl TupleSpec {
    pub fn dim(&self) -> usize {
        match &self.params {
            FamilyParams::JordanR(_)
            | FamilyParams::JordanC { .. }
            | FamilyParams::RotPair { .. }
            | FamilyParams::RotRotPair { .. } => 2,
            FamilyParams::Triple(_) => 3,
            FamilyParams::EvenN { k, .. } => 2 * k,
            FamilyParams::OddN { k, .. } => 2 * k + 1,
        }
    }

    /// Number of real coordinates a solve target carries: complex families
    /// flatten each coordinate into a (re, im) pair.
    pub fn target_dim(&self) -> usize {
        match &self.params {
            FamilyParams::JordanC { .. } => 4,
            _ => self.dim(),
        }
    }

    /// Materialises the member matrices.
    pub fn to_matrix_tuple(&self, _ctx: PrecisionContext) -> Result<MatrixTuple> {
        match &self.params {
            FamilyParams::JordanR(params) => jordan_real_tuple(params, Family::JordanR2x4),
            FamilyParams::JordanC { params, .. } => {
                jordan_complex_tuple(params, Family::JordanC2x8)
            }
            FamilyParams::RotPair { a, b } => {
                let mut t = build_even_tuple(1, a, b)?;
                t.family = Family::RotPairR2;
                Ok(t)
            }
            FamilyParams::RotRotPair { a, b } => {
                let mut t = build_even_tuple(1, &a.modulus, b)?;
                // First member is a rotation, not a scaled identity.
                t.members[0] = crate::matrices::Member::Blocks(crate::matrices::BlockMatrix::new(
                    2,
                    vec![(0, a.block())],
                )?);
                t.family = Family::RotRotPairR2;
                Ok(t)
            }
            FamilyParams::Triple(triple) => {
                let one = RealScalar::one(_ctx);
                let unit = Rotor::new(one.clone(), Angle::zero())?;
                let mut t = build_odd_tuple(1, &one, &unit, triple)?;
                t.family = Family::R3Triple;
                Ok(t)
            }
            FamilyParams::EvenN { k, a, b } => build_even_tuple(*k, a, b),
            FamilyParams::OddN { k, a, b, triple } => build_odd_tuple(*k, a, b, triple),
        }
    }
}

fn rotor_from(table: &toml::Table, mod_key: &str, turn_key: &str, ctx: PrecisionContext) -> Result<Rotor> {
    let modulus = RealScalar::from_linear(&expr_key(table, mod_key, ctx)?, ctx);
    let turn = expr_key(table, turn_key, ctx)?;
    let angle = Angle::from_radians(turn.mul(&Hp::two_pi(ctx), ctx), ctx);
    Rotor::new(modulus, angle)
}

fn jordan_real_params(ctx: PrecisionContext) -> Result<(Vec<RealScalar>, Vec<ParamTag>)> {
    let table = family_table(Family::JordanR2x4)?;
    let a = RealScalar::from_linear(&expr_key(table, "a", ctx)?, ctx);
    let b = RealScalar::from_linear(&expr_key(table, "b", ctx)?, ctx);
    if a.sign() != Sign::Neg || !a.log_mod().is_finite() || a.log_mod().signum_i8() >= 0 {
        return Err(Error::MismatchedConfig("preset `a` must lie in (-1, 0)".into()));
    }
    if b.sign() != Sign::Pos || b.log_mod().signum_i8() <= 0 {
        return Err(Error::MismatchedConfig("preset `b` must exceed 1".into()));
    }
    let inv_a = a.recip(ctx)?;
    let params = vec![a, b, inv_a, RealScalar::one(ctx)];
    let tags = vec![
        ParamTag {
            description: expr_src(table, "a"),
            irrationality_notes: "a + 1/a = -3/sqrt(2) and a - 1/a = 1/sqrt(2) are irrational; \
                                  their integer multiples equidistribute mod 1 (assumed)"
                .into(),
        },
        ParamTag {
            description: expr_src(table, "b"),
            irrationality_notes: "ln|a|/ln b = -ln 2/(2 ln 3) is irrational because 2 and 3 \
                                  are multiplicatively independent"
                .into(),
        },
    ];
    Ok((params, tags))
}

fn jordan_complex_params(
    ctx: PrecisionContext,
) -> Result<(RealScalar, Vec<ComplexScalar>, Vec<ParamTag>)> {
    let table = family_table(Family::JordanC2x8)?;
    let a_real = RealScalar::from_linear(&expr_key(table, "a", ctx)?, ctx);
    if a_real.sign() != Sign::Neg || a_real.log_mod().signum_i8() >= 0 {
        return Err(Error::MismatchedConfig("preset `a` must lie in (-1, 0)".into()));
    }
    let b_mod = expr_key(table, "b_modulus", ctx)?;
    let b_turn = expr_key(table, "b_turn", ctx)?;
    let a = ComplexScalar::from_real_scalar(&a_real);
    let b = ComplexScalar::from_modulus_angle(
        &b_mod,
        Angle::from_radians(b_turn.mul(&Hp::two_pi(ctx), ctx), ctx),
        ctx,
    )?;
    let quarter = ComplexScalar::from_parts(Hp::zero(ctx), Angle::turn(1, 4));
    let ia = a.mul(&quarter, ctx);
    let inv_ia = ia.recip(ctx)?;
    let four_i = ComplexScalar::from_parts(Hp::from_i64(4, ctx).ln(ctx)?, Angle::turn(1, 4));
    // -1/4 via log negation of 4i's modulus, so (4i)^ρ·(-1/4)^ρ cancels exactly.
    let neg_quarter = ComplexScalar::from_parts(four_i.log_mod().neg(), Angle::turn(1, 2));
    let params = vec![
        a.clone(),
        b,
        a.recip(ctx)?,
        ComplexScalar::one(ctx),
        ia,
        inv_ia,
        four_i,
        neg_quarter,
    ];
    let tags = vec![
        ParamTag {
            description: expr_src(table, "a"),
            irrationality_notes: "a + 1/a and a - 1/a are irrational; multiples equidistribute \
                                  mod 1 (assumed)"
                .into(),
        },
        ParamTag {
            description: format!(
                "{}*exp(2*pi*i*({}))",
                expr_src(table, "b_modulus"),
                expr_src(table, "b_turn")
            ),
            irrationality_notes: "ln|a|/ln|b| irrational (2, 3 multiplicatively independent); \
                                  angle/2pi irrational so arguments are dense mod 2pi"
                .into(),
        },
    ];
    Ok((a_real, params, tags))
}

fn rot_pair_params(ctx: PrecisionContext) -> Result<(RealScalar, Rotor, Vec<ParamTag>)> {
    let table = family_table(Family::RotPairR2)?;
    let a = RealScalar::from_linear(&expr_key(table, "a", ctx)?, ctx);
    let b = rotor_from(table, "b_modulus", "b_turn", ctx)?;
    let tags = vec![ParamTag {
        description: format!(
            "a = {}, b = {}*exp(2*pi*i*({}))",
            expr_src(table, "a"),
            expr_src(table, "b_modulus"),
            expr_src(table, "b_turn")
        ),
        irrationality_notes: "density of {a^n b^m} in the plane is a configured default, \
                              validated empirically rather than proven"
            .into(),
    }];
    Ok((a, b, tags))
}

fn triple_params(ctx: PrecisionContext) -> Result<(TripleParams, Vec<ParamTag>)> {
    let table = family_table(Family::R3Triple)?;
    let a = rotor_from(table, "a_modulus", "a_turn", ctx)?;
    let b = RealScalar::from_linear(&expr_key(table, "b", ctx)?, ctx);
    let c = RealScalar::from_linear(&expr_key(table, "c", ctx)?, ctx);
    let b2 = expr_key(table, "b2", ctx)?;
    let d = RealScalar::from_linear(&b2.sqrt(ctx)?.neg(), ctx);
    let triple = TripleParams { a, b, c, d };
    let tags = vec![
        ParamTag {
            description: format!(
                "a = {}*exp(2*pi*i*({})), b = {}",
                expr_src(table, "a_modulus"),
                expr_src(table, "a_turn"),
                expr_src(table, "b")
            ),
            irrationality_notes: "planar density of {a^n b^m} is a configured default, \
                                  validated empirically"
                .into(),
        },
        ParamTag {
            description: format!("c = {}, d = -sqrt({})", expr_src(table, "c"), expr_src(table, "b2")),
            irrationality_notes: "ln c/ln|d| = 2 ln(17/10)/ln(2/5) is irrational because 17/10 \
                                  and 2/5 are multiplicatively independent"
                .into(),
        },
    ];
    Ok((triple, tags))
}

/// Default parameters for a family, from the embedded preset file.
pub fn default_params(family: Family, ctx: PrecisionContext) -> Result<TupleSpec> {
    match family {
        Family::EvenN => {
            let k = int_key(family_table(Family::EvenN)?, "blocks")?;
            default_params_with_blocks(family, k, ctx)
        }
        Family::OddN => {
            let k = int_key(family_table(Family::OddN)?, "blocks")?;
            default_params_with_blocks(family, k, ctx)
        }
        _ => default_params_with_blocks(family, 0, ctx),
    }
}

/// Same as [`default_params`] but with an explicit block count for the
/// arbitrary-dimension families (`blocks` is ignored elsewhere).
pub fn default_params_with_blocks(
    family: Family,
    blocks: usize,
    ctx: PrecisionContext,
) -> Result<TupleSpec> {
    let preset = "paper-default".to_string();
    match family {
        Family::JordanR2x4 => {
            let (params, tags) = jordan_real_params(ctx)?;
            Ok(TupleSpec { family, params: FamilyParams::JordanR(params), tags, preset })
        }
        Family::JordanC2x8 => {
            let (a, params, tags) = jordan_complex_params(ctx)?;
            Ok(TupleSpec { family, params: FamilyParams::JordanC { a, params }, tags, preset })
        }
        Family::RotPairR2 => {
            let (a, b, tags) = rot_pair_params(ctx)?;
            Ok(TupleSpec { family, params: FamilyParams::RotPair { a, b }, tags, preset })
        }
        Family::RotRotPairR2 => {
            let table = family_table(Family::RotRotPairR2)?;
            let a = rotor_from(table, "a_modulus", "a_turn", ctx)?;
            let b = rotor_from(table, "b_modulus", "b_turn", ctx)?;
            let tags = vec![ParamTag {
                description: format!(
                    "a = {}*exp(2*pi*i*({})), b = {}*exp(2*pi*i*({}))",
                    expr_src(table, "a_modulus"),
                    expr_src(table, "a_turn"),
                    expr_src(table, "b_modulus"),
                    expr_src(table, "b_turn")
                ),
                irrationality_notes: "planar density of {a^n b^m} is a configured default, \
                                      validated empirically"
                    .into(),
            }];
            Ok(TupleSpec { family, params: FamilyParams::RotRotPair { a, b }, tags, preset })
        }
        Family::R3Triple => {
            let (triple, tags) = triple_params(ctx)?;
            Ok(TupleSpec { family, params: FamilyParams::Triple(triple), tags, preset })
        }
        Family::EvenN => {
            if blocks == 0 {
                return Err(Error::BadInput("need at least one block".into()));
            }
            let (a, b, tags) = rot_pair_params(ctx)?;
            Ok(TupleSpec {
                family,
                params: FamilyParams::EvenN { k: blocks, a, b },
                tags,
                preset,
            })
        }
        Family::OddN => {
            if blocks == 0 {
                return Err(Error::BadInput("need k >= 1".into()));
            }
            let (a, b, mut tags) = rot_pair_params(ctx)?;
            let (triple, mut t_tags) = triple_params(ctx)?;
            tags.append(&mut t_tags);
            Ok(TupleSpec {
                family,
                params: FamilyParams::OddN { k: blocks, a, b, triple },
                tags,
                preset,
            })
        }
        Family::Custom => {
            Err(Error::MismatchedConfig("custom family has no preset parameters".into()))
        }
    }
}

//! Commuting matrix tuples: block-diagonal members built from 2×2 Jordan
//! cells, scaled identities, rotations, diagonal cells and 1×1 cells, plus a
//! dense fallback for custom tuples.
//!
//! Closed forms: a Jordan cell power is `[[a^l, l·a^(l-1)], [0, a^l]]`, and a
//! product of cell powers over one Jordan tuple is upper-triangular with
//! diagonal `v = Π a_j^{k_j}` and corner `v·u`, `u = Σ k_j / a_j`. Rotations
//! compose by multiplying moduli and adding angles.

use crate::complex::HpComplex;
use crate::error::{Error, Result};
use crate::precision::{Hp, PrecisionContext};
use crate::scalar::{Angle, ComplexScalar, RealScalar, ScalarLike, Sign};

/// Field element usable as a dense matrix entry.
pub trait LinearField: Clone {
    fn zero(ctx: PrecisionContext) -> Self;
    fn one(ctx: PrecisionContext) -> Self;
    fn add(&self, rhs: &Self, ctx: PrecisionContext) -> Self;
    fn sub(&self, rhs: &Self, ctx: PrecisionContext) -> Self;
    fn mul(&self, rhs: &Self, ctx: PrecisionContext) -> Self;
    fn abs_hp(&self, ctx: PrecisionContext) -> Hp;
    fn is_zero(&self) -> bool;
    fn bit_eq(&self, rhs: &Self) -> bool;
}

impl LinearField for Hp {
    fn zero(ctx: PrecisionContext) -> Self {
        Hp::zero(ctx)
    }
    fn one(ctx: PrecisionContext) -> Self {
        Hp::one(ctx)
    }
    fn add(&self, rhs: &Self, ctx: PrecisionContext) -> Self {
        Hp::add(self, rhs, ctx)
    }
    fn sub(&self, rhs: &Self, ctx: PrecisionContext) -> Self {
        Hp::sub(self, rhs, ctx)
    }
    fn mul(&self, rhs: &Self, ctx: PrecisionContext) -> Self {
        Hp::mul(self, rhs, ctx)
    }
    fn abs_hp(&self, _ctx: PrecisionContext) -> Hp {
        self.abs()
    }
    fn is_zero(&self) -> bool {
        Hp::is_zero(self)
    }
    fn bit_eq(&self, rhs: &Self) -> bool {
        Hp::bit_eq(self, rhs)
    }
}

impl LinearField for HpComplex {
    fn zero(ctx: PrecisionContext) -> Self {
        HpComplex::zero(ctx)
    }
    fn one(ctx: PrecisionContext) -> Self {
        HpComplex::one(ctx)
    }
    fn add(&self, rhs: &Self, ctx: PrecisionContext) -> Self {
        HpComplex::add(self, rhs, ctx)
    }
    fn sub(&self, rhs: &Self, ctx: PrecisionContext) -> Self {
        HpComplex::sub(self, rhs, ctx)
    }
    fn mul(&self, rhs: &Self, ctx: PrecisionContext) -> Self {
        HpComplex::mul(self, rhs, ctx)
    }
    fn abs_hp(&self, ctx: PrecisionContext) -> Hp {
        self.abs(ctx)
    }
    fn is_zero(&self) -> bool {
        HpComplex::is_zero(self)
    }
    fn bit_eq(&self, rhs: &Self) -> bool {
        self.re.bit_eq(&rhs.re) && self.im.bit_eq(&rhs.im)
    }
}

/// Small dense row-major matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix<L> {
    pub dim: usize,
    pub entries: Vec<L>,
}

impl<L: LinearField> DenseMatrix<L> {
    pub fn identity(dim: usize, ctx: PrecisionContext) -> Self {
        let mut entries = vec![L::zero(ctx); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = L::one(ctx);
        }
        DenseMatrix { dim, entries }
    }

    pub fn from_rows(rows: Vec<Vec<L>>) -> Result<Self> {
        let dim = rows.len();
        for r in &rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "expected {dim} columns, got {}",
                    r.len()
                )));
            }
        }
        Ok(DenseMatrix { dim, entries: rows.into_iter().flatten().collect() })
    }

    pub fn at(&self, i: usize, j: usize) -> &L {
        &self.entries[i * self.dim + j]
    }

    pub fn mul(&self, rhs: &Self, ctx: PrecisionContext) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch(format!("{} vs {}", self.dim, rhs.dim)));
        }
        let n = self.dim;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = L::zero(ctx);
                for k in 0..n {
                    acc = acc.add(&self.at(i, k).mul(rhs.at(k, j), ctx), ctx);
                }
                entries.push(acc);
            }
        }
        Ok(DenseMatrix { dim: n, entries })
    }

    /// Repeated multiplication, the slow oracle for closed-form powers.
    pub fn pow_naive(&self, l: u64, ctx: PrecisionContext) -> Result<Self> {
        let mut acc = DenseMatrix::identity(self.dim, ctx);
        for _ in 0..l {
            acc = acc.mul(self, ctx)?;
        }
        Ok(acc)
    }

    pub fn sub(&self, rhs: &Self, ctx: PrecisionContext) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch(format!("{} vs {}", self.dim, rhs.dim)));
        }
        let entries = self
            .entries
            .iter()
            .zip(rhs.entries.iter())
            .map(|(a, b)| a.sub(b, ctx))
            .collect();
        Ok(DenseMatrix { dim: self.dim, entries })
    }

    pub fn max_abs(&self, ctx: PrecisionContext) -> Hp {
        let mut best = Hp::zero(ctx);
        for e in &self.entries {
            best = best.max(&e.abs_hp(ctx));
        }
        best
    }

    pub fn apply(&self, v: &[L], ctx: PrecisionContext) -> Result<Vec<L>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch(format!("{} vs {}", self.dim, v.len())));
        }
        let n = self.dim;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = L::zero(ctx);
            for k in 0..n {
                acc = acc.add(&self.at(i, k).mul(&v[k], ctx), ctx);
            }
            out.push(acc);
        }
        Ok(out)
    }

    fn bit_eq(&self, rhs: &Self) -> bool {
        self.dim == rhs.dim
            && self.entries.iter().zip(rhs.entries.iter()).all(|(a, b)| a.bit_eq(b))
    }
}

impl DenseMatrix<Hp> {
    pub fn to_complex(&self, ctx: PrecisionContext) -> DenseMatrix<HpComplex> {
        DenseMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|e| HpComplex::from_real(e.clone(), ctx))
                .collect(),
        }
    }
}

/// One structured cell of a block-diagonal member.
#[derive(Debug, Clone)]
pub enum Block {
    /// 2×2 real Jordan cell `[[a, 1], [0, a]]`.
    JordanR(RealScalar),
    /// 2×2 complex Jordan cell.
    JordanC(ComplexScalar),
    /// `s·I₂`.
    ScaledId2(RealScalar),
    /// Rotation by `angle`, scaled by a positive modulus.
    Rotation2 { modulus: RealScalar, angle: Angle },
    /// `diag(d1, d2)`.
    Diag2(RealScalar, RealScalar),
    /// 1×1 cell.
    Cell1(RealScalar),
}

impl Block {
    pub fn size(&self) -> usize {
        match self {
            Block::Cell1(_) => 1,
            _ => 2,
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Block::JordanC(_))
    }

    /// Dense real rendering; errors for complex cells.
    pub fn to_dense_real(&self, ctx: PrecisionContext) -> Result<DenseMatrix<Hp>> {
        match self {
            Block::JordanR(a) => {
                let al = a.to_linear(ctx)?;
                DenseMatrix::from_rows(vec![
                    vec![al.clone(), Hp::one(ctx)],
                    vec![Hp::zero(ctx), al],
                ])
            }
            Block::ScaledId2(s) => {
                let sl = s.to_linear(ctx)?;
                DenseMatrix::from_rows(vec![
                    vec![sl.clone(), Hp::zero(ctx)],
                    vec![Hp::zero(ctx), sl],
                ])
            }
            Block::Rotation2 { modulus, angle } => {
                let r = modulus.to_linear(ctx)?;
                let (c, s) = angle.cos_sin(ctx);
                DenseMatrix::from_rows(vec![
                    vec![r.mul(&c, ctx), r.mul(&s, ctx).neg()],
                    vec![r.mul(&s, ctx), r.mul(&c, ctx)],
                ])
            }
            Block::Diag2(d1, d2) => DenseMatrix::from_rows(vec![
                vec![d1.to_linear(ctx)?, Hp::zero(ctx)],
                vec![Hp::zero(ctx), d2.to_linear(ctx)?],
            ]),
            Block::Cell1(c) => DenseMatrix::from_rows(vec![vec![c.to_linear(ctx)?]]),
            Block::JordanC(_) => {
                Err(Error::MismatchedConfig("complex cell in a real rendering".into()))
            }
        }
    }

    pub fn to_dense_complex(&self, ctx: PrecisionContext) -> Result<DenseMatrix<HpComplex>> {
        match self {
            Block::JordanC(a) => {
                let al = a.to_linear(ctx)?;
                DenseMatrix::from_rows(vec![
                    vec![al.clone(), HpComplex::one(ctx)],
                    vec![HpComplex::zero(ctx), al],
                ])
            }
            other => Ok(other.to_dense_real(ctx)?.to_complex(ctx)),
        }
    }
}

/// Block-diagonal member; positions not covered by a block are identity.
#[derive(Debug, Clone)]
pub struct BlockMatrix {
    pub dim: usize,
    /// `(offset, block)`, sorted by offset, non-overlapping.
    pub blocks: Vec<(usize, Block)>,
}

impl BlockMatrix {
    pub fn new(dim: usize, mut blocks: Vec<(usize, Block)>) -> Result<Self> {
        blocks.sort_by_key(|(o, _)| *o);
        let mut prev_end = 0usize;
        for (o, b) in &blocks {
            if *o < prev_end {
                return Err(Error::DimensionMismatch("overlapping blocks".into()));
            }
            prev_end = o + b.size();
            if prev_end > dim {
                return Err(Error::DimensionMismatch("block exceeds dimension".into()));
            }
        }
        Ok(BlockMatrix { dim, blocks })
    }

    pub fn is_complex(&self) -> bool {
        self.blocks.iter().any(|(_, b)| b.is_complex())
    }

    fn block_at(&self, offset: usize) -> Option<&Block> {
        self.blocks.iter().find(|(o, _)| *o == offset).map(|(_, b)| b)
    }

    pub fn to_dense_real(&self, ctx: PrecisionContext) -> Result<DenseMatrix<Hp>> {
        let mut m = DenseMatrix::identity(self.dim, ctx);
        for (o, b) in &self.blocks {
            let d = b.to_dense_real(ctx)?;
            for i in 0..d.dim {
                for j in 0..d.dim {
                    m.entries[(o + i) * self.dim + (o + j)] = d.at(i, j).clone();
                }
            }
        }
        Ok(m)
    }

    pub fn to_dense_complex(&self, ctx: PrecisionContext) -> Result<DenseMatrix<HpComplex>> {
        let mut m = DenseMatrix::identity(self.dim, ctx);
        for (o, b) in &self.blocks {
            let d = b.to_dense_complex(ctx)?;
            for i in 0..d.dim {
                for j in 0..d.dim {
                    m.entries[(o + i) * self.dim + (o + j)] = d.at(i, j).clone();
                }
            }
        }
        Ok(m)
    }
}

/// A member matrix: structured blocks, or dense for custom tuples.
#[derive(Debug, Clone)]
pub enum Member {
    Blocks(BlockMatrix),
    DenseReal(DenseMatrix<Hp>),
    DenseComplex(DenseMatrix<HpComplex>),
}

impl Member {
    pub fn dim(&self) -> usize {
        match self {
            Member::Blocks(b) => b.dim,
            Member::DenseReal(d) => d.dim,
            Member::DenseComplex(d) => d.dim,
        }
    }

    pub fn is_complex(&self) -> bool {
        match self {
            Member::Blocks(b) => b.is_complex(),
            Member::DenseReal(_) => false,
            Member::DenseComplex(_) => true,
        }
    }

    pub fn to_dense_complex(&self, ctx: PrecisionContext) -> Result<DenseMatrix<HpComplex>> {
        match self {
            Member::Blocks(b) => b.to_dense_complex(ctx),
            Member::DenseReal(d) => Ok(d.to_complex(ctx)),
            Member::DenseComplex(d) => Ok(d.clone()),
        }
    }
}

/// Named tuple families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    JordanR2x4,
    JordanC2x8,
    RotPairR2,
    RotRotPairR2,
    R3Triple,
    EvenN,
    OddN,
    Custom,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::JordanR2x4 => "jordan-r2x4",
            Family::JordanC2x8 => "jordan-c2x8",
            Family::RotPairR2 => "rot-pair-r2",
            Family::RotRotPairR2 => "rot-rot-pair-r2",
            Family::R3Triple => "r3-triple",
            Family::EvenN => "even-n",
            Family::OddN => "odd-n",
            Family::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Family> {
        Ok(match s {
            "jordan-r2x4" => Family::JordanR2x4,
            "jordan-c2x8" => Family::JordanC2x8,
            "rot-pair-r2" => Family::RotPairR2,
            "rot-rot-pair-r2" => Family::RotRotPairR2,
            "r3-triple" => Family::R3Triple,
            "even-n" => Family::EvenN,
            "odd-n" => Family::OddN,
            "custom" => Family::Custom,
            other => return Err(Error::InvalidFamily(other.into())),
        })
    }
}

/// A tuple of pairwise commuting members.
#[derive(Debug, Clone)]
pub struct MatrixTuple {
    pub dim: usize,
    pub members: Vec<Member>,
    pub family: Family,
}

impl MatrixTuple {
    pub fn new(dim: usize, members: Vec<Member>, family: Family) -> Result<Self> {
        for m in &members {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "member dim {} vs tuple dim {dim}",
                    m.dim()
                )));
            }
        }
        Ok(MatrixTuple { dim, members, family })
    }

    pub fn is_complex(&self) -> bool {
        self.members.iter().any(|m| m.is_complex())
    }

    /// Jordan eigenvalues when every member is a single real Jordan cell.
    pub fn jordan_real_params(&self) -> Option<Vec<RealScalar>> {
        if self.dim != 2 {
            return None;
        }
        self.members
            .iter()
            .map(|m| match m {
                Member::Blocks(b) => match b.blocks.as_slice() {
                    [(0, Block::JordanR(a))] => Some(a.clone()),
                    _ => None,
                },
                _ => None,
            })
            .collect()
    }

    /// Jordan eigenvalues when every member is a single complex Jordan cell.
    pub fn jordan_complex_params(&self) -> Option<Vec<ComplexScalar>> {
        if self.dim != 2 {
            return None;
        }
        self.members
            .iter()
            .map(|m| match m {
                Member::Blocks(b) => match b.blocks.as_slice() {
                    [(0, Block::JordanC(a))] => Some(a.clone()),
                    _ => None,
                },
                _ => None,
            })
            .collect()
    }
}

/// Real Jordan tuple (one 2×2 cell per member).
pub fn jordan_real_tuple(params: &[RealScalar], family: Family) -> Result<MatrixTuple> {
    if params.iter().any(|p| p.is_zero()) {
        return Err(Error::ZeroParameter);
    }
    let members = params
        .iter()
        .map(|a| Ok(Member::Blocks(BlockMatrix::new(2, vec![(0, Block::JordanR(a.clone()))])?)))
        .collect::<Result<Vec<_>>>()?;
    MatrixTuple::new(2, members, family)
}

pub fn jordan_complex_tuple(params: &[ComplexScalar], family: Family) -> Result<MatrixTuple> {
    if params.iter().any(|p| p.is_zero()) {
        return Err(Error::ZeroParameter);
    }
    let members = params
        .iter()
        .map(|a| Ok(Member::Blocks(BlockMatrix::new(2, vec![(0, Block::JordanC(a.clone()))])?)))
        .collect::<Result<Vec<_>>>()?;
    MatrixTuple::new(2, members, family)
}

/// Closed form for the `l`-th power of a Jordan cell: diagonal `a^l`, corner
/// `l·a^(l-1)` (with `0⁰ = 1`, and a zero corner when `l = 0`).
#[derive(Debug, Clone)]
pub struct JordanPower<S> {
    pub diag: S,
    pub corner: S,
}

pub fn jordan_power<S: ScalarLike>(a: &S, l: u64, ctx: PrecisionContext) -> Result<JordanPower<S>>
where
    S: JordanCornerWeight,
{
    let l_i = i64::try_from(l).map_err(|_| Error::BadInput("power exceeds i64".into()))?;
    let diag = a.pow_value(l_i, ctx)?;
    let corner = if l == 0 {
        S::weightless_zero()
    } else {
        S::weighted(l_i, &a.pow_value(l_i - 1, ctx)?, ctx)
    };
    Ok(JordanPower { diag, corner })
}

/// Integer-weight scaling used by Jordan corners (`l · a^(l-1)`); kept
/// separate so the l-fold structured product reproduces the exact same bits.
pub trait JordanCornerWeight: ScalarLike {
    fn weightless_zero() -> Self;
    fn weighted(weight: i64, base: &Self, ctx: PrecisionContext) -> Self;
}

impl JordanCornerWeight for RealScalar {
    fn weightless_zero() -> Self {
        RealScalar::zero()
    }
    fn weighted(weight: i64, base: &Self, ctx: PrecisionContext) -> Self {
        let w = RealScalar::from_linear(&Hp::from_i64(weight, ctx), ctx);
        w.mul(base, ctx)
    }
}

impl JordanCornerWeight for ComplexScalar {
    fn weightless_zero() -> Self {
        ComplexScalar::zero()
    }
    fn weighted(weight: i64, base: &Self, ctx: PrecisionContext) -> Self {
        let w = ComplexScalar::from_real_scalar(&RealScalar::from_linear(
            &Hp::from_i64(weight, ctx),
            ctx,
        ));
        w.mul(base, ctx)
    }
}

/// `Π_j A_j^{k_j}` over one Jordan tuple, in closed form: upper-triangular
/// with diagonal `v` and corner `v·u`. Also returns `u` in linear form.
#[derive(Debug, Clone)]
pub struct JordanTupleProduct<S: ScalarLike> {
    pub v: S,
    pub corner: S,
    pub u: S::Linear,
}

pub fn jordan_tuple_product<S: ScalarLike>(
    params: &[S],
    k: &[i64],
    ctx: PrecisionContext,
) -> Result<JordanTupleProduct<S>> {
    if params.len() != k.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} params vs {} exponents",
            params.len(),
            k.len()
        )));
    }
    if k.iter().any(|&kj| kj < 0) {
        return Err(Error::BadInput("exponents must be nonnegative".into()));
    }
    if params.iter().any(|p| p.is_zero()) {
        return Err(Error::ZeroParameter);
    }
    let mut v = S::one_value(ctx);
    let mut u = S::lin_zero(ctx);
    for (a, &kj) in params.iter().zip(k.iter()) {
        v = v.mul_value(&a.pow_value(kj, ctx)?, ctx);
        let inv = S::lin_recip(&a.to_linear_value(ctx)?, ctx)?;
        u = S::lin_add_exact(&u, &S::lin_scale_i64_exact(&inv, kj));
    }
    let u_scalar = lin_to_scalar::<S>(&u, ctx);
    let corner = v.mul_value(&u_scalar, ctx);
    Ok(JordanTupleProduct { v, corner, u })
}

/// Log-sign form of a linear value (helper for corners).
pub fn lin_to_scalar<S: ScalarLike>(u: &S::Linear, ctx: PrecisionContext) -> S
where
    S: ScalarLike,
{
    S::from_linear_value(u, ctx)
}

/// Rotation-family parameters: positive modulus with an angle.
#[derive(Debug, Clone)]
pub struct Rotor {
    pub modulus: RealScalar,
    pub angle: Angle,
}

impl Rotor {
    pub fn new(modulus: RealScalar, angle: Angle) -> Result<Rotor> {
        if modulus.is_zero() || modulus.sign() == Sign::Neg {
            return Err(Error::BadInput("rotor modulus must be positive".into()));
        }
        Ok(Rotor { modulus, angle })
    }

    /// As a complex scalar `|r|·e^{iθ}`.
    pub fn to_complex_scalar(&self) -> ComplexScalar {
        ComplexScalar::from_parts(self.modulus.log_mod().clone(), self.angle.clone())
    }

    pub fn block(&self) -> Block {
        Block::Rotation2 { modulus: self.modulus.clone(), angle: self.angle.clone() }
    }
}

/// Orbit point of `A₁ⁿA₂ᵐ · start` for `A₁ = a·I`, `A₂` a rotation: the
/// composite acts as complex multiplication by `aⁿ·|b|ᵐ·e^{imθ}`.
pub fn rotation_pair_product(
    a: &RealScalar,
    b: &Rotor,
    n: i64,
    m: i64,
    start: (&Hp, &Hp),
    ctx: PrecisionContext,
) -> Result<(Hp, Hp)> {
    let factor = ComplexScalar::from_real_scalar(&a.pow(n, ctx)?)
        .mul(&b.to_complex_scalar().pow(m, ctx)?, ctx);
    apply_complex_factor(&factor, start, ctx)
}

/// Same closed form for a pair of rotations: multiplication by
/// `|a|ⁿ|b|ᵐ·e^{i(nφ+mθ)}`.
pub fn rot_rot_product(
    a: &Rotor,
    b: &Rotor,
    n: i64,
    m: i64,
    start: (&Hp, &Hp),
    ctx: PrecisionContext,
) -> Result<(Hp, Hp)> {
    let factor = a
        .to_complex_scalar()
        .pow(n, ctx)?
        .mul(&b.to_complex_scalar().pow(m, ctx)?, ctx);
    apply_complex_factor(&factor, start, ctx)
}

fn apply_complex_factor(
    factor: &ComplexScalar,
    start: (&Hp, &Hp),
    ctx: PrecisionContext,
) -> Result<(Hp, Hp)> {
    let f = factor.to_linear(ctx)?;
    let s = HpComplex::new(start.0.clone(), start.1.clone());
    let out = f.mul(&s, ctx);
    Ok((out.re, out.im))
}

/// Parameters of the 3×3 construction: a planar rotor pair `(a, b)` acting on
/// the first two coordinates and a signed pair `(c, d)` on the third.
#[derive(Debug, Clone)]
pub struct TripleParams {
    /// Rotor with modulus > 1.
    pub a: Rotor,
    /// Real contraction `0 < b < 1`.
    pub b: RealScalar,
    /// Real expansion `c > 1`.
    pub c: RealScalar,
    /// Real `-1 < d < 0`.
    pub d: RealScalar,
}

/// 2k members on ℝ^{2k}: per planar block, a scaled identity and a rotation.
pub fn build_even_tuple(k: usize, a: &RealScalar, b: &Rotor) -> Result<MatrixTuple> {
    if k == 0 {
        return Err(Error::BadInput("need at least one block".into()));
    }
    if a.is_zero() {
        return Err(Error::ZeroParameter);
    }
    let dim = 2 * k;
    let mut members = Vec::with_capacity(2 * k);
    for j in 0..k {
        let off = 2 * j;
        members.push(Member::Blocks(BlockMatrix::new(
            dim,
            vec![(off, Block::ScaledId2(a.clone()))],
        )?));
        members.push(Member::Blocks(BlockMatrix::new(dim, vec![(off, b.block())])?));
    }
    MatrixTuple::new(dim, members, Family::EvenN)
}

/// 2k+1 members on ℝ^{2k+1}: k-1 planar blocks plus the 3×3 triple.
pub fn build_odd_tuple(
    k: usize,
    a: &RealScalar,
    b: &Rotor,
    triple: &TripleParams,
) -> Result<MatrixTuple> {
    if k == 0 {
        return Err(Error::BadInput("need k >= 1".into()));
    }
    if a.is_zero() || triple.b.is_zero() || triple.c.is_zero() || triple.d.is_zero() {
        return Err(Error::ZeroParameter);
    }
    let dim = 2 * k + 1;
    let mut members = Vec::with_capacity(2 * k + 1);
    for j in 0..k - 1 {
        let off = 2 * j;
        members.push(Member::Blocks(BlockMatrix::new(
            dim,
            vec![(off, Block::ScaledId2(a.clone()))],
        )?));
        members.push(Member::Blocks(BlockMatrix::new(dim, vec![(off, b.block())])?));
    }
    let off = 2 * (k - 1);
    members.push(Member::Blocks(BlockMatrix::new(
        dim,
        vec![(off, triple.a.block()), (off + 2, Block::Cell1(triple.c.clone()))],
    )?));
    members.push(Member::Blocks(BlockMatrix::new(
        dim,
        vec![(off, Block::ScaledId2(triple.b.clone()))],
    )?));
    members.push(Member::Blocks(BlockMatrix::new(
        dim,
        vec![(off + 2, Block::Cell1(triple.d.clone()))],
    )?));
    MatrixTuple::new(dim, members, Family::OddN)
}

/// Pairwise commutation report.
#[derive(Debug, Clone)]
pub struct CommuteReport {
    pub ok: bool,
    /// Largest `|AB - BA|` entry over all member pairs.
    pub max_residual: Hp,
}

/// Checks all member pairs. Structured members multiply per co-located block
/// with a fixed summation order, so commuting cells cancel to a residual of
/// exactly zero; dense members are compared at working precision against
/// `tol`.
pub fn commute_check(t: &MatrixTuple, tol: &Hp, ctx: PrecisionContext) -> Result<CommuteReport> {
    let mut max_residual = Hp::zero(ctx);
    for i in 0..t.members.len() {
        for j in (i + 1)..t.members.len() {
            let r = member_commutator(&t.members[i], &t.members[j], ctx)?;
            max_residual = max_residual.max(&r);
        }
    }
    Ok(CommuteReport { ok: max_residual.cmp(tol) != std::cmp::Ordering::Greater, max_residual })
}

fn member_commutator(a: &Member, b: &Member, ctx: PrecisionContext) -> Result<Hp> {
    match (a, b) {
        (Member::Blocks(ba), Member::Blocks(bb)) => block_commutator(ba, bb, ctx),
        _ => {
            let da = a.to_dense_complex(ctx)?;
            let db = b.to_dense_complex(ctx)?;
            let ab = da.mul(&db, ctx)?;
            let ba = db.mul(&da, ctx)?;
            Ok(ab.sub(&ba, ctx)?.max_abs(ctx))
        }
    }
}

fn block_commutator(a: &BlockMatrix, b: &BlockMatrix, ctx: PrecisionContext) -> Result<Hp> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(format!("{} vs {}", a.dim, b.dim)));
    }
    let mut offsets: Vec<usize> = a
        .blocks
        .iter()
        .chain(b.blocks.iter())
        .map(|(o, _)| *o)
        .collect();
    offsets.sort_unstable();
    offsets.dedup();
    let mut worst = Hp::zero(ctx);
    for off in offsets {
        let ba = a.block_at(off);
        let bb = b.block_at(off);
        let res = match (ba, bb) {
            // Identity on one side: products agree trivially.
            (None, _) | (_, None) => continue,
            (Some(x), Some(y)) => {
                if x.size() != y.size() {
                    // Misaligned structure; fall back to a full dense check.
                    let da = a.to_dense_complex(ctx)?;
                    let db = b.to_dense_complex(ctx)?;
                    let ab = da.mul(&db, ctx)?;
                    let ba_ = db.mul(&da, ctx)?;
                    return Ok(ab.sub(&ba_, ctx)?.max_abs(ctx));
                }
                let dx = x.to_dense_complex(ctx)?;
                let dy = y.to_dense_complex(ctx)?;
                let xy = dx.mul(&dy, ctx)?;
                let yx = dy.mul(&dx, ctx)?;
                if xy.bit_eq(&yx) {
                    Hp::zero(ctx)
                } else {
                    xy.sub(&yx, ctx)?.max_abs(ctx)
                }
            }
        };
        worst = worst.max(&res);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> PrecisionContext {
        PrecisionContext::default()
    }

    fn rs(v: f64) -> RealScalar {
        RealScalar::from_f64(v, ctx())
    }

    #[test]
    fn jordan_power_closed_form() {
        let c = ctx();
        let a = rs(2.0);
        let p = jordan_power(&a, 3, c).unwrap();
        assert!((p.diag.to_linear(c).unwrap().to_f64() - 8.0).abs() < 1e-12);
        assert!((p.corner.to_linear(c).unwrap().to_f64() - 12.0).abs() < 1e-12);
        // l = 0 is the identity, including for a "zero eigenvalue" input.
        let p0 = jordan_power(&RealScalar::zero(), 0, c).unwrap();
        assert!(p0.diag.bit_eq(&RealScalar::one(c)));
        assert!(p0.corner.is_zero());
    }

    #[test]
    fn jordan_power_matches_naive_dense() {
        let c = ctx();
        let a = rs(-1.25);
        let cell = Block::JordanR(a.clone()).to_dense_real(c).unwrap();
        for l in [1u64, 2, 5, 11] {
            let fast = jordan_power(&a, l, c).unwrap();
            let slow = cell.pow_naive(l, c).unwrap();
            let d = fast.diag.to_linear(c).unwrap().sub(slow.at(0, 0), c).abs();
            let e = fast.corner.to_linear(c).unwrap().sub(slow.at(0, 1), c).abs();
            assert!(d.to_f64() < 1e-30 && e.to_f64() < 1e-30, "l={l}");
        }
    }

    #[test]
    fn tuple_product_hand_check() {
        // (2,3) with k=(1,1): diagonal 6, corner 6·(1/2+1/3) = 5.
        let c = ctx();
        let params = vec![rs(2.0), rs(3.0)];
        let p = jordan_tuple_product(&params, &[1, 1], c).unwrap();
        assert!((p.v.to_linear(c).unwrap().to_f64() - 6.0).abs() < 1e-30);
        assert!((p.corner.to_linear(c).unwrap().to_f64() - 5.0).abs() < 1e-30);
        assert!((p.u.to_f64() - 5.0 / 6.0).abs() < 1e-30);
    }

    #[test]
    fn tuple_product_rejects_bad_input() {
        let c = ctx();
        let params = vec![rs(2.0)];
        assert!(matches!(
            jordan_tuple_product(&params, &[1, 2], c),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            jordan_tuple_product(&params, &[-1], c),
            Err(Error::BadInput(_))
        ));
        assert!(matches!(
            jordan_tuple_product(&[RealScalar::zero()], &[1], c),
            Err(Error::ZeroParameter)
        ));
    }

    #[test]
    fn rotation_pair_closed_form_matches_dense() {
        let c = ctx();
        let a = rs(3.0f64.sqrt());
        let b = Rotor::new(rs(0.5f64.sqrt()), Angle::from_radians(Hp::from_f64(1.1, c), c)).unwrap();
        let (x, y) = rotation_pair_product(&a, &b, 3, 2, (&Hp::one(c), &Hp::zero(c)), c).unwrap();
        let da = Block::ScaledId2(a).to_dense_real(c).unwrap();
        let db = b.block().to_dense_real(c).unwrap();
        let m = da.pow_naive(3, c).unwrap().mul(&db.pow_naive(2, c).unwrap(), c).unwrap();
        let v = m.apply(&[Hp::one(c), Hp::zero(c)], c).unwrap();
        assert!(x.sub(&v[0], c).abs().to_f64() < 1e-30);
        assert!(y.sub(&v[1], c).abs().to_f64() < 1e-30);
    }

    #[test]
    fn rot_rot_angles_add() {
        let c = ctx();
        let a = Rotor::new(rs(2.0), Angle::turn(1, 8)).unwrap();
        let b = Rotor::new(rs(0.5), Angle::turn(1, 12)).unwrap();
        let (x, y) = rot_rot_product(&a, &b, 2, 3, (&Hp::one(c), &Hp::zero(c)), c).unwrap();
        // moduli: 4·(1/8) = 1/2; angle: 2/8 + 3/12 = 1/2 turn.
        assert!((x.to_f64() + 0.5).abs() < 1e-15);
        assert!(y.abs().to_f64() < 1e-30);
    }

    #[test]
    fn even_tuple_shape_and_commutation() {
        let c = ctx();
        let a = rs(3.0f64.sqrt());
        let b = Rotor::new(rs(0.5f64.sqrt()), Angle::from_radians(Hp::from_f64(2.4, c), c)).unwrap();
        let t = build_even_tuple(3, &a, &b).unwrap();
        assert_eq!(t.dim, 6);
        assert_eq!(t.members.len(), 6);
        let rep = commute_check(&t, &Hp::zero(c), c).unwrap();
        assert!(rep.ok, "residual {}", rep.max_residual);
        assert!(rep.max_residual.is_zero());
    }

    #[test]
    fn odd_tuple_shape_and_commutation() {
        let c = ctx();
        let a = rs(3.0f64.sqrt());
        let b = Rotor::new(rs(0.5f64.sqrt()), Angle::from_radians(Hp::from_f64(2.4, c), c)).unwrap();
        let triple = TripleParams {
            a: Rotor::new(rs(1.9), Angle::from_radians(Hp::from_f64(0.77, c), c)).unwrap(),
            b: rs(0.7),
            c: rs(1.7),
            d: rs(-(0.4f64.sqrt())),
        };
        for k in [1usize, 2, 3] {
            let t = build_odd_tuple(k, &a, &b, &triple).unwrap();
            assert_eq!(t.dim, 2 * k + 1);
            assert_eq!(t.members.len(), 2 * k + 1);
            let rep = commute_check(&t, &Hp::zero(c), c).unwrap();
            assert!(rep.ok, "k={k} residual {}", rep.max_residual);
            assert!(rep.max_residual.is_zero());
        }
    }

    #[test]
    fn shear_pair_does_not_commute() {
        let c = ctx();
        let upper = DenseMatrix::from_rows(vec![
            vec![Hp::one(c), Hp::one(c)],
            vec![Hp::zero(c), Hp::one(c)],
        ])
        .unwrap();
        let lower = DenseMatrix::from_rows(vec![
            vec![Hp::one(c), Hp::zero(c)],
            vec![Hp::one(c), Hp::one(c)],
        ])
        .unwrap();
        let t = MatrixTuple::new(
            2,
            vec![Member::DenseReal(upper), Member::DenseReal(lower)],
            Family::Custom,
        )
        .unwrap();
        let rep = commute_check(&t, &Hp::from_f64(1e-30, c), c).unwrap();
        assert!(!rep.ok);
        assert!((rep.max_residual.to_f64() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn param_extraction() {
        let c = ctx();
        let t = jordan_real_tuple(&[rs(2.0), rs(3.0)], Family::Custom).unwrap();
        let ps = t.jordan_real_params().unwrap();
        assert_eq!(ps.len(), 2);
        assert!((ps[1].to_linear(c).unwrap().to_f64() - 3.0).abs() < 1e-15);
        assert!(t.jordan_complex_params().is_none());
    }
}

//! From the universal `Z[H]` complex to concrete TQFT complexes.
//!
//! A [`Promotion`] replaces the special line by `n` copies of the ground
//! ring and `H` by an `n × n` matrix. Rank-2 presets use the basis
//! `(1, X) = (v₊, v₋)` with q-shifts `(+1, -1)`, so that `H ↦ 2X - h` in
//! the multiplication-by-`X` representation.
//!
//! [`naive_tqft`] applies a Frobenius system to every circle of every
//! resolution without delooping; it is the independent oracle.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::cobordism::{CobMor, Port};
use crate::complex::{AlgComplex, GeomComplex, SparseMatrix};
use crate::reduce::ReducedComplex;
use crate::rings::{parse_ring_element, Matrix, Ring, RingError};
use crate::{MultiPoly, Poly, ZH, ZT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PromoteError {
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("promotion matrix must be square and match {shifts} q-shifts, got {rows}x{cols}")]
    Shape { rows: usize, cols: usize, shifts: usize },
    #[error("unknown ring {0:?} (expected Z, Q, Z[H], Z[T] or Z[h,t])")]
    UnknownRing(String),
    #[error("variable {0} needs a value before homology can be computed")]
    MissingValue(char),
    #[error("ring {ring} has no variable {var}")]
    ExtraValue { ring: String, var: char },
    #[error("invalid promotion file: {0}")]
    Json(String),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("Frobenius system fails: {0}")]
    Frobenius(String),
    #[error("cube entry at degree {h} ({row},{col}) is not an elementary saddle")]
    NotElementary { h: i64, row: usize, col: usize },
}

/// Rings whose elements may be homogeneous for the q-grading.
/// `H` and `h` have degree `-2`, `T` and `t` degree `-4`.
pub trait GradedRing: Ring {
    /// Degree of a nonzero homogeneous element; `None` for zero or an
    /// inhomogeneous element.
    fn homogeneous_degree(&self) -> Option<i64>;
}

impl GradedRing for BigInt {
    fn homogeneous_degree(&self) -> Option<i64> {
        (!self.is_zero()).then_some(0)
    }
}

impl GradedRing for BigRational {
    fn homogeneous_degree(&self) -> Option<i64> {
        (!self.is_zero()).then_some(0)
    }
}

fn poly_degree<const X: char, R: GradedRing>(p: &Poly<X, u32, R>, var_deg: i64) -> Option<i64> {
    let mut deg = None;
    for (e, c) in p.terms() {
        let d = c.homogeneous_degree()? + var_deg * *e as i64;
        if deg.is_some_and(|x| x != d) {
            return None;
        }
        deg = Some(d);
    }
    deg
}

impl GradedRing for ZH {
    fn homogeneous_degree(&self) -> Option<i64> {
        poly_degree(self, -2)
    }
}

impl GradedRing for ZT {
    fn homogeneous_degree(&self) -> Option<i64> {
        poly_degree(self, -4)
    }
}

impl GradedRing for Poly<'t', u32, BigInt> {
    fn homogeneous_degree(&self) -> Option<i64> {
        poly_degree(self, -4)
    }
}

impl GradedRing for MultiPoly {
    fn homogeneous_degree(&self) -> Option<i64> {
        poly_degree(self, -2)
    }
}

/// `H ↦ h_matrix`, special line ↦ `n` copies with the given q-shifts.
#[derive(Clone, Debug, PartialEq)]
pub struct Promotion<R: Ring> {
    pub ring: String,
    pub h_matrix: Matrix<R>,
    pub q_shifts: Vec<i64>,
    /// Whether every nonzero entry `M[i][j]` has degree `s_j - s_i - 2`.
    pub graded: bool,
    /// Set for presets whose module structure is not asserted.
    pub experimental: bool,
}

impl<R: GradedRing> Promotion<R> {
    pub fn new(ring: &str, h_matrix: Matrix<R>, q_shifts: Vec<i64>) -> Result<Self, PromoteError> {
        let (rows, cols) = (h_matrix.nrows(), h_matrix.ncols());
        if rows != cols || rows != q_shifts.len() || rows == 0 {
            return Err(PromoteError::Shape { rows, cols, shifts: q_shifts.len() });
        }
        let graded = respects_grading(&h_matrix, &q_shifts);
        Ok(Self { ring: ring.to_string(), h_matrix, q_shifts, graded, experimental: false })
    }
}

impl<R: Ring> Promotion<R> {
    pub fn n(&self) -> usize {
        self.q_shifts.len()
    }
}

pub fn respects_grading<R: GradedRing>(m: &Matrix<R>, shifts: &[i64]) -> bool {
    (0..m.nrows()).all(|i| {
        (0..m.ncols()).all(|j| {
            let x = m.get(i, j);
            x.is_zero() || x.homogeneous_degree() == Some(shifts[j] - shifts[i] - 2)
        })
    })
}

/// Generator `i` becomes generators `n*i .. n*i + n`; an entry `p(H)`
/// becomes the block `p(h_matrix)`.
pub fn promote<R: Ring>(rc: &ReducedComplex, p: &Promotion<R>) -> AlgComplex<R> {
    let c = &rc.complex;
    let n = p.n();
    let max_e = c.diffs.iter().flat_map(|d| d.iter().filter_map(|(_, _, x)| x.degree())).max().unwrap_or(0);
    let mut powers = vec![Matrix::identity(n)];
    for k in 1..=max_e as usize {
        powers.push(powers[k - 1].mul(&p.h_matrix));
    }
    let q: Vec<Vec<i64>> = c
        .q
        .iter()
        .map(|qs| {
            qs.iter()
                .flat_map(|&g| p.q_shifts.iter().map(move |&s| if p.graded { g + s } else { 0 }))
                .collect()
        })
        .collect();
    let diffs = c
        .diffs
        .iter()
        .map(|d| {
            let mut out = SparseMatrix::new(d.nrows * n, d.ncols * n);
            for (r, col, x) in d.iter() {
                let mut block = Matrix::zeros(n, n);
                for (e, coef) in x.terms() {
                    block = block.add(&powers[*e as usize].scale(&R::from_int(coef)));
                }
                for a in 0..n {
                    for b in 0..n {
                        let v = block.get(a, b);
                        if !v.is_zero() {
                            out.insert(r * n + a, col * n + b, v.clone());
                        }
                    }
                }
            }
            out
        })
        .collect();
    AlgComplex { ring: p.ring.clone(), h_min: c.h_min, graded: p.graded, q, diffs }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Preset {
    Standard,
    Lee,
    FH,
    FT,
    FHT,
    ReducedH0,
    GenusLe(usize),
}

impl Preset {
    pub const RANK_TWO: [Preset; 5] = [Preset::Standard, Preset::Lee, Preset::FH, Preset::FT, Preset::FHT];

    /// Variables left symbolic by the preset.
    pub fn variables(self) -> &'static [char] {
        match self {
            Preset::FH => &['H'],
            Preset::FT => &['T'],
            Preset::FHT => &['h', 't'],
            _ => &[],
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Standard => f.write_str("standard"),
            Preset::Lee => f.write_str("lee"),
            Preset::FH => f.write_str("f_h"),
            Preset::FT => f.write_str("f_t"),
            Preset::FHT => f.write_str("f_ht"),
            Preset::ReducedH0 => f.write_str("reduced_h0"),
            Preset::GenusLe(k) => write!(f, "genus_le({k})"),
        }
    }
}

/// A preset with optional integer or rational values for its variables,
/// written `f_h(H=2)`, `f_ht(h=1,t=-3)`, `f_t(T=1/4)` or `genus_le(2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PresetSpec {
    pub preset: Preset,
    pub values: BTreeMap<char, BigRational>,
}

impl PresetSpec {
    pub fn plain(preset: Preset) -> Self {
        Self { preset, values: BTreeMap::new() }
    }

    pub fn with(preset: Preset, values: &[(char, i64)]) -> Self {
        Self { preset, values: values.iter().map(|&(v, x)| (v, BigRational::from_integer(x.into()))).collect() }
    }
}

impl fmt::Display for PresetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.preset)?;
        if !self.values.is_empty() {
            let vals: Vec<String> = self.values.iter().map(|(v, x)| format!("{v}={x}")).collect();
            write!(f, "({})", vals.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for PresetSpec {
    type Err = PromoteError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PromoteError::UnknownPreset(s.to_string());
        let s_trim = s.trim();
        let (name, args) = match s_trim.find('(') {
            Some(i) => {
                let rest = s_trim[i + 1..].strip_suffix(')').ok_or_else(bad)?;
                (&s_trim[..i], Some(rest))
            }
            None => (s_trim, None),
        };
        let preset = match name.trim() {
            "standard" | "khovanov" => Preset::Standard,
            "lee" => Preset::Lee,
            "f_h" => Preset::FH,
            "f_t" => Preset::FT,
            "f_ht" => Preset::FHT,
            "reduced_h0" => Preset::ReducedH0,
            "genus_le" => {
                let k = args.ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
                return Ok(Self::plain(Preset::GenusLe(k)));
            }
            _ => return Err(bad()),
        };
        let mut values = BTreeMap::new();
        for part in args.into_iter().flat_map(|a| a.split(',')).filter(|p| !p.trim().is_empty()) {
            let (var, val) = part.split_once('=').ok_or_else(bad)?;
            let var = var.trim();
            let mut chars = var.chars();
            let (Some(v), None) = (chars.next(), chars.next()) else { return Err(bad()) };
            if !preset.variables().contains(&v) {
                return Err(PromoteError::ExtraValue { ring: preset.to_string(), var: v });
            }
            let x: BigRational = val.trim().parse().map_err(|_| bad())?;
            values.insert(v, x);
        }
        Ok(Self { preset, values })
    }
}

/// A promotion over any supported coefficient ring.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyPromotion {
    Z(Promotion<BigInt>),
    Q(Promotion<BigRational>),
    ZH(Promotion<ZH>),
    ZT(Promotion<ZT>),
    Zht(Promotion<MultiPoly>),
}

/// A promotion whose coefficients are numbers, ready for homology.
#[derive(Clone, Debug, PartialEq)]
pub enum NumericPromotion {
    Z(Promotion<BigInt>),
    Q(Promotion<BigRational>),
}

fn int_matrix<R: Ring>(rows: &[&[i64]]) -> Matrix<R> {
    Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| R::from_i64(x)).collect()).collect())
}

pub fn preset(p: Preset) -> AnyPromotion {
    let rank2 = vec![1, -1];
    let ok = "preset shapes are valid";
    match p {
        Preset::Standard => AnyPromotion::Z(Promotion::new("Z", int_matrix(&[&[0, 0], &[2, 0]]), rank2).expect(ok)),
        Preset::Lee => AnyPromotion::Q(Promotion::new("Q", int_matrix(&[&[0, 2], &[2, 0]]), rank2).expect(ok)),
        Preset::FH => {
            let h = ZH::var();
            let m = Matrix::from_rows(vec![vec![-h.clone(), ZH::zero()], vec![ZH::from_i64(2), h]]);
            AnyPromotion::ZH(Promotion::new("Z[H]", m, rank2).expect(ok))
        }
        Preset::FT => {
            let t = ZT::var();
            let m = Matrix::from_rows(vec![vec![ZT::zero(), t.scale(&BigInt::from(2))], vec![ZT::from_i64(2), ZT::zero()]]);
            AnyPromotion::ZT(Promotion::new("Z[T]", m, rank2).expect(ok))
        }
        Preset::FHT => AnyPromotion::Zht(Promotion::new("Z[h,t]", fht_matrix(), rank2).expect(ok)),
        Preset::ReducedH0 => {
            let mut p = Promotion::new("Z", int_matrix(&[&[0]]), vec![0]).expect(ok);
            p.experimental = true;
            AnyPromotion::Z(p)
        }
        Preset::GenusLe(k) => {
            let n = k + 1;
            let mut m = Matrix::zeros(n, n);
            for i in 1..n {
                m.set(i, i - 1, BigInt::one());
            }
            let shifts = (0..n as i64).map(|i| -2 * i).collect();
            AnyPromotion::Z(Promotion::new("Z", m, shifts).expect(ok))
        }
    }
}

/// `[[-h, 2t], [2, h]]` over `Z[h,t]`.
pub fn fht_matrix() -> Matrix<MultiPoly> {
    let h = MultiPoly::var();
    let t = MultiPoly::constant(Poly::var());
    Matrix::from_rows(vec![
        vec![-h.clone(), t.scale(&Poly::constant(BigInt::from(2)))],
        vec![MultiPoly::from_i64(2), h],
    ])
}

fn rat_int(x: &BigInt) -> BigRational {
    BigRational::from_integer(x.clone())
}

fn value_of(values: &BTreeMap<char, BigRational>, v: char) -> Result<BigRational, PromoteError> {
    values.get(&v).cloned().ok_or(PromoteError::MissingValue(v))
}

fn check_vars(ring: &str, allowed: &[char], values: &BTreeMap<char, BigRational>) -> Result<(), PromoteError> {
    match values.keys().find(|v| !allowed.contains(v)) {
        Some(&var) => Err(PromoteError::ExtraValue { ring: ring.to_string(), var }),
        None => Ok(()),
    }
}

impl AnyPromotion {
    pub fn ring(&self) -> &str {
        match self {
            AnyPromotion::Z(p) => &p.ring,
            AnyPromotion::Q(p) => &p.ring,
            AnyPromotion::ZH(p) => &p.ring,
            AnyPromotion::ZT(p) => &p.ring,
            AnyPromotion::Zht(p) => &p.ring,
        }
    }

    pub fn graded(&self) -> bool {
        match self {
            AnyPromotion::Z(p) => p.graded,
            AnyPromotion::Q(p) => p.graded,
            AnyPromotion::ZH(p) => p.graded,
            AnyPromotion::ZT(p) => p.graded,
            AnyPromotion::Zht(p) => p.graded,
        }
    }

    pub fn experimental(&self) -> bool {
        match self {
            AnyPromotion::Z(p) => p.experimental,
            AnyPromotion::Q(p) => p.experimental,
            AnyPromotion::ZH(p) => p.experimental,
            AnyPromotion::ZT(p) => p.experimental,
            AnyPromotion::Zht(p) => p.experimental,
        }
    }

    /// Substitutes numbers for every ring variable. The result is over `Z`
    /// when all entries are integers and the source ring is not `Q`.
    pub fn specialize(&self, values: &BTreeMap<char, BigRational>) -> Result<NumericPromotion, PromoteError> {
        let (m, shifts, rational, experimental): (Matrix<BigRational>, &[i64], bool, bool) = match self {
            AnyPromotion::Z(p) => {
                check_vars(&p.ring, &[], values)?;
                (p.h_matrix.map(rat_int), &p.q_shifts, false, p.experimental)
            }
            AnyPromotion::Q(p) => {
                check_vars(&p.ring, &[], values)?;
                (p.h_matrix.clone(), &p.q_shifts, true, p.experimental)
            }
            AnyPromotion::ZH(p) => {
                check_vars(&p.ring, &['H'], values)?;
                let x = value_of(values, 'H')?;
                (p.h_matrix.map(|e| e.eval(&x, rat_int)), &p.q_shifts, false, p.experimental)
            }
            AnyPromotion::ZT(p) => {
                check_vars(&p.ring, &['T'], values)?;
                let x = value_of(values, 'T')?;
                (p.h_matrix.map(|e| e.eval(&x, rat_int)), &p.q_shifts, false, p.experimental)
            }
            AnyPromotion::Zht(p) => {
                check_vars(&p.ring, &['h', 't'], values)?;
                let (h, t) = (value_of(values, 'h')?, value_of(values, 't')?);
                (p.h_matrix.map(|e| e.eval(&h, |c| c.eval(&t, rat_int))), &p.q_shifts, false, p.experimental)
            }
        };
        let integral = m.to_rows().iter().flatten().all(|x| x.is_integer());
        let mut out = if integral && !rational {
            NumericPromotion::Z(Promotion::new("Z", m.map(|x| x.to_integer()), shifts.to_vec())?)
        } else {
            NumericPromotion::Q(Promotion::new("Q", m, shifts.to_vec())?)
        };
        match &mut out {
            NumericPromotion::Z(p) => p.experimental = experimental,
            NumericPromotion::Q(p) => p.experimental = experimental,
        }
        Ok(out)
    }
}

impl PresetSpec {
    pub fn promotion(&self) -> Result<NumericPromotion, PromoteError> {
        preset(self.preset).specialize(&self.values)
    }

    /// The Frobenius system `(h, t)` whose TQFT this preset realizes, when
    /// the preset is rank 2. Its ring follows [`AnyPromotion::specialize`].
    pub fn frobenius(&self) -> Result<Option<NumericFrobenius>, PromoteError> {
        let zero = BigRational::zero;
        let (h, t) = match self.preset {
            Preset::Standard => (zero(), zero()),
            Preset::Lee => (zero(), BigRational::one()),
            Preset::FH => (value_of(&self.values, 'H')?, zero()),
            Preset::FT => (zero(), value_of(&self.values, 'T')?),
            Preset::FHT => (value_of(&self.values, 'h')?, value_of(&self.values, 't')?),
            Preset::ReducedH0 | Preset::GenusLe(_) => return Ok(None),
        };
        Ok(Some(if h.is_integer() && t.is_integer() && self.preset != Preset::Lee {
            NumericFrobenius::Z(FrobeniusSystem::from_ht("Z", h.to_integer(), t.to_integer()))
        } else {
            NumericFrobenius::Q(FrobeniusSystem::from_ht("Q", h, t))
        }))
    }
}

/// A Frobenius system over `Z` or `Q`.
#[derive(Clone, Debug, PartialEq)]
pub enum NumericFrobenius {
    Z(FrobeniusSystem<BigInt>),
    Q(FrobeniusSystem<BigRational>),
}

#[derive(Deserialize)]
struct PromotionFile {
    ring: String,
    #[serde(rename = "H")]
    h: Vec<Vec<serde_json::Value>>,
    q: Option<Vec<i64>>,
}

fn entry_text(v: &serde_json::Value) -> Result<String, PromoteError> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(PromoteError::Json(format!("matrix entry {other} is neither a string nor a number"))),
    }
}

fn parse_matrix<R: GradedRing>(rows: &[Vec<serde_json::Value>]) -> Result<Matrix<R>, PromoteError> {
    let parsed: Result<Vec<Vec<R>>, PromoteError> = rows
        .iter()
        .map(|r| r.iter().map(|v| Ok(parse_ring_element::<R>(&entry_text(v)?)?)).collect())
        .collect();
    let parsed = parsed?;
    let cols = parsed.first().map_or(0, Vec::len);
    if parsed.iter().any(|r| r.len() != cols) {
        return Err(PromoteError::Json("ragged matrix".into()));
    }
    Ok(Matrix::from_rows(parsed))
}

fn build_custom<R: GradedRing>(ring: &str, f: &PromotionFile) -> Result<Promotion<R>, PromoteError> {
    let m = parse_matrix::<R>(&f.h)?;
    let shifts = match &f.q {
        Some(q) => q.clone(),
        None if m.nrows() == 2 => vec![1, -1],
        None => return Err(PromoteError::Json("\"q\" shifts are required unless the matrix is 2x2".into())),
    };
    Promotion::new(ring, m, shifts)
}

/// Loads `{"ring": "Z[h,t]", "H": [["-h","2t"],["2","h"]], "q": [1,-1]}`.
/// The result is graded exactly when the shifts make every entry
/// homogeneous of the required degree.
pub fn load_promotion(json: &str) -> Result<AnyPromotion, PromoteError> {
    let f: PromotionFile = serde_json::from_str(json).map_err(|e| PromoteError::Json(e.to_string()))?;
    let ring = f.ring.replace(' ', "");
    Ok(match ring.as_str() {
        "Z" => AnyPromotion::Z(build_custom("Z", &f)?),
        "Q" => AnyPromotion::Q(build_custom("Q", &f)?),
        "Z[H]" => AnyPromotion::ZH(build_custom("Z[H]", &f)?),
        "Z[T]" => AnyPromotion::ZT(build_custom("Z[T]", &f)?),
        "Z[h,t]" => AnyPromotion::Zht(build_custom("Z[h,t]", &f)?),
        _ => return Err(PromoteError::UnknownRing(f.ring)),
    })
}

/// A rank-2 Frobenius algebra on the basis `(v₊, v₋) = (1, X)`; index 0 is
/// `v₊`. Tables: `m[a][b][c]` is the `c`-coefficient of `a·b`,
/// `delta[a][b][c]` the `b⊗c`-coefficient of `Δ(a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrobeniusSystem<R: Ring> {
    pub ring: String,
    pub h: R,
    pub t: R,
    pub m: [[[R; 2]; 2]; 2],
    pub delta: [[[R; 2]; 2]; 2],
    pub unit: [R; 2],
    pub counit: [R; 2],
}

type Elem<R> = [R; 2];
type Elem2<R> = [[R; 2]; 2];
type Elem3<R> = [[[R; 2]; 2]; 2];

fn zeros2<R: Ring>() -> Elem2<R> {
    std::array::from_fn(|_| std::array::from_fn(|_| R::zero()))
}

fn zeros3<R: Ring>() -> Elem3<R> {
    std::array::from_fn(|_| zeros2())
}

impl<R: Ring> FrobeniusSystem<R> {
    /// `X² = hX + t`, `Δ(1) = 1⊗X + X⊗1 - h 1⊗1`, `Δ(X) = X⊗X + t 1⊗1`,
    /// `ε(1) = 0`, `ε(X) = 1`.
    pub fn from_ht(ring: &str, h: R, t: R) -> Self {
        let (o, z) = (R::one, R::zero);
        let m = [[[o(), z()], [z(), o()]], [[z(), o()], [t.clone(), h.clone()]]];
        let delta = [[[-h.clone(), o()], [o(), z()]], [[t.clone(), z()], [z(), o()]]];
        Self { ring: ring.to_string(), h, t, m, delta, unit: [o(), z()], counit: [z(), o()] }
    }

    fn mul(&self, x: &Elem<R>, y: &Elem<R>) -> Elem<R> {
        let mut out = [R::zero(), R::zero()];
        for a in 0..2 {
            for b in 0..2 {
                let s = x[a].clone() * y[b].clone();
                if s.is_zero() {
                    continue;
                }
                for c in 0..2 {
                    out[c] = out[c].clone() + s.clone() * self.m[a][b][c].clone();
                }
            }
        }
        out
    }

    fn comul(&self, x: &Elem<R>) -> Elem2<R> {
        let mut out: Elem2<R> = zeros2();
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    out[b][c] = out[b][c].clone() + x[a].clone() * self.delta[a][b][c].clone();
                }
            }
        }
        out
    }

    fn basis(i: usize) -> Elem<R> {
        let mut e = [R::zero(), R::zero()];
        e[i] = R::one();
        e
    }

    /// Matrix of multiplication by `X` in the basis `(1, X)`.
    pub fn x_matrix(&self) -> Matrix<R> {
        let x = Self::basis(1);
        let mut m = Matrix::zeros(2, 2);
        for j in 0..2 {
            let col = self.mul(&x, &Self::basis(j));
            for i in 0..2 {
                m.set(i, j, col[i].clone());
            }
        }
        m
    }

    /// The handle operator `2X - h` as a matrix.
    pub fn handle_matrix(&self) -> Matrix<R> {
        self.x_matrix().scale(&R::from_i64(2)).sub(&Matrix::identity(2).scale(&self.h))
    }

    fn counit_of(&self, x: &Elem<R>) -> R {
        x[0].clone() * self.counit[0].clone() + x[1].clone() * self.counit[1].clone()
    }
}

/// One named identity and whether it holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub ok: bool,
}

impl Check {
    fn new(name: &str, ok: bool) -> Self {
        Self { name: name.to_string(), ok }
    }
}

/// Associativity, coassociativity, the Frobenius condition, counit laws,
/// sphere `= 0`, torus `= 2`, and `(2X - h)² = (4t + h²)·Id`.
pub fn frobenius_checks<R: Ring>(f: &FrobeniusSystem<R>) -> Vec<Check> {
    let b = FrobeniusSystem::<R>::basis;
    let mut assoc = true;
    let mut coassoc = true;
    let mut frob_l = true;
    let mut frob_r = true;
    let mut counit = true;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let l = f.mul(&f.mul(&b(i), &b(j)), &b(k));
                let r = f.mul(&b(i), &f.mul(&b(j), &b(k)));
                assoc &= l == r;
            }
        }
        // (Δ⊗id)Δ vs (id⊗Δ)Δ on basis element i.
        let d = f.comul(&b(i));
        let mut left: Elem3<R> = zeros3();
        let mut right: Elem3<R> = zeros3();
        for a in 0..2 {
            for c in 0..2 {
                let da = f.comul(&b(a));
                let dc = f.comul(&b(c));
                for x in 0..2 {
                    for y in 0..2 {
                        left[x][y][c] = left[x][y][c].clone() + d[a][c].clone() * da[x][y].clone();
                        right[a][x][y] = right[a][x][y].clone() + d[a][c].clone() * dc[x][y].clone();
                    }
                }
            }
        }
        coassoc &= left == right;
        // (ε⊗id)Δ = id = (id⊗ε)Δ.
        let e_left: Elem<R> = std::array::from_fn(|c| (0..2).fold(R::zero(), |s, a| s + d[a][c].clone() * f.counit[a].clone()));
        let e_right: Elem<R> = std::array::from_fn(|a| (0..2).fold(R::zero(), |s, c| s + d[a][c].clone() * f.counit[c].clone()));
        counit &= e_left == b(i) && e_right == b(i);
        for j in 0..2 {
            let dm = f.comul(&f.mul(&b(i), &b(j)));
            // (m⊗id)(id⊗Δ)(i⊗j) and (id⊗m)(Δ⊗id)(i⊗j).
            let dj = f.comul(&b(j));
            let di = f.comul(&b(i));
            let mut l2: Elem2<R> = zeros2();
            let mut r2: Elem2<R> = zeros2();
            for x in 0..2 {
                for y in 0..2 {
                    let p = f.mul(&b(i), &b(x));
                    let q = f.mul(&b(y), &b(j));
                    for z in 0..2 {
                        l2[z][y] = l2[z][y].clone() + dj[x][y].clone() * p[z].clone();
                        r2[x][z] = r2[x][z].clone() + di[x][y].clone() * q[z].clone();
                    }
                }
            }
            frob_l &= dm == l2;
            frob_r &= dm == r2;
        }
    }
    let sphere = f.counit_of(&f.unit).is_zero();
    let d1 = f.comul(&f.unit);
    let mut handle = [R::zero(), R::zero()];
    for a in 0..2 {
        for c in 0..2 {
            let p = f.mul(&b(a), &b(c));
            for z in 0..2 {
                handle[z] = handle[z].clone() + d1[a][c].clone() * p[z].clone();
            }
        }
    }
    let torus = f.counit_of(&handle) == R::from_i64(2);
    let hm = f.handle_matrix();
    let two_handle = f.t.clone() * R::from_i64(4) + f.h.clone() * f.h.clone();
    let square = hm.mul(&hm) == Matrix::identity(2).scale(&two_handle);
    let handle_is_mult = {
        // m∘Δ is multiplication by 2X - h.
        let mut ok = true;
        for j in 0..2 {
            let mut img = [R::zero(), R::zero()];
            let dj = f.comul(&b(j));
            for a in 0..2 {
                for c in 0..2 {
                    let p = f.mul(&b(a), &b(c));
                    for z in 0..2 {
                        img[z] = img[z].clone() + dj[a][c].clone() * p[z].clone();
                    }
                }
            }
            ok &= (0..2).all(|i| img[i] == *hm.get(i, j));
        }
        ok
    };
    vec![
        Check::new("associativity", assoc),
        Check::new("coassociativity", coassoc),
        Check::new("frobenius (m⊗id)(id⊗Δ)", frob_l),
        Check::new("frobenius (id⊗m)(Δ⊗id)", frob_r),
        Check::new("counit", counit),
        Check::new("sphere = 0", sphere),
        Check::new("torus = 2", torus),
        Check::new("m∘Δ = 2X - h", handle_is_mult),
        Check::new("(2X - h)² = (4t + h²)·Id", square),
    ]
}

enum Saddle {
    Merge { x: usize, y: usize, z: usize },
    Split { z: usize, x: usize, y: usize },
}

/// Sign, saddle and identity tubes of a cube entry, ignoring the special
/// circle.
fn saddle_of(m: &CobMor<ZH>) -> Option<(i64, Saddle, Vec<(usize, usize)>)> {
    if m.len() != 1 {
        return None;
    }
    let (g, coef) = m.terms().next()?;
    let sign = match coef.as_monomial() {
        Some((c, 0)) if c.is_one() => 1,
        Some((c, 0)) if (-c.clone()).is_one() => -1,
        _ => return None,
    };
    let mut saddle = None;
    let mut tubes = Vec::new();
    for c in g.components() {
        if c.genus != 0 {
            return None;
        }
        let ins: Vec<usize> = c.ports.iter().filter_map(|p| if let Port::In(i) = p { Some(*i as usize) } else { None }).collect();
        let outs: Vec<usize> = c.ports.iter().filter_map(|p| if let Port::Out(i) = p { Some(*i as usize) } else { None }).collect();
        match (ins.len(), outs.len()) {
            (1, 1) => tubes.push((ins[0], outs[0])),
            (2, 1) if saddle.is_none() => saddle = Some(Saddle::Merge { x: ins[0], y: ins[1], z: outs[0] }),
            (1, 2) if saddle.is_none() => saddle = Some(Saddle::Split { z: ins[0], x: outs[0], y: outs[1] }),
            _ => return None,
        }
    }
    Some((sign, saddle?, tubes))
}

fn is_graded_system<R: GradedRing>(f: &FrobeniusSystem<R>) -> bool {
    let ok = |x: &R, d: i64| x.is_zero() || x.homogeneous_degree() == Some(d);
    ok(&f.h, -2) && ok(&f.t, -4)
}

/// The full cube complex of the TQFT of `f`: one tensor factor per circle,
/// generator bit `c - 1 - j` for circle `j` (`1` = `v₋`), merges by `m`,
/// splits by `Δ`, cube signs from the cobordisms.
pub fn naive_tqft<R: GradedRing>(cube: &GeomComplex<ZH>, f: &FrobeniusSystem<R>) -> Result<AlgComplex<R>, PromoteError> {
    if let Some(bad) = frobenius_checks(f).into_iter().find(|c| !c.ok) {
        return Err(PromoteError::Frobenius(bad.name));
    }
    let graded = is_graded_system(f);
    let mut offsets = Vec::with_capacity(cube.objects.len());
    let mut q = Vec::with_capacity(cube.objects.len());
    for objs in &cube.objects {
        let mut off = Vec::with_capacity(objs.len());
        let mut qs = Vec::new();
        for o in objs {
            off.push(qs.len());
            let c = o.config.count;
            for g in 0u64..1 << c {
                let minus = g.count_ones() as i64;
                qs.push(if graded { o.qshift + (c as i64 - minus) - minus } else { 0 });
            }
        }
        offsets.push(off);
        q.push(qs);
    }
    let mut diffs = Vec::with_capacity(cube.diffs.len());
    for (k, d) in cube.diffs.iter().enumerate() {
        let entries: Vec<_> = d.iter().collect();
        let blocks: Result<Vec<Vec<(usize, usize, R)>>, PromoteError> = entries
            .par_iter()
            .map(|&(r, col, m)| {
                let (sign, saddle, tubes) =
                    saddle_of(m).ok_or(PromoteError::NotElementary { h: cube.h_min + k as i64, row: r, col })?;
                let sign = R::from_i64(sign);
                let (cs, ct) = (m.source.count, m.target.count);
                let bit = |g: u64, j: usize| (g >> (cs - 1 - j) & 1) as usize;
                let set = |l: usize, j: usize| (l as u64) << (ct - 1 - j);
                let (so, to) = (offsets[k][col], offsets[k + 1][r]);
                let mut out = Vec::new();
                for g in 0u64..1 << cs {
                    let base: u64 = tubes.iter().map(|&(i, o)| set(bit(g, i), o)).sum();
                    match saddle {
                        Saddle::Merge { x, y, z } => {
                            for l in 0..2 {
                                let v = &f.m[bit(g, x)][bit(g, y)][l];
                                if !v.is_zero() {
                                    out.push((to + (base | set(l, z)) as usize, so + g as usize, sign.clone() * v.clone()));
                                }
                            }
                        }
                        Saddle::Split { z, x, y } => {
                            for l1 in 0..2 {
                                for l2 in 0..2 {
                                    let v = &f.delta[bit(g, z)][l1][l2];
                                    if !v.is_zero() {
                                        let t = base | set(l1, x) | set(l2, y);
                                        out.push((to + t as usize, so + g as usize, sign.clone() * v.clone()));
                                    }
                                }
                            }
                        }
                    }
                }
                Ok(out)
            })
            .collect();
        let mut mat = SparseMatrix::new(q[k + 1].len(), q[k].len());
        for (r, c, v) in blocks?.into_iter().flatten() {
            mat.insert(r, c, v);
        }
        diffs.push(mat);
    }
    Ok(AlgComplex { ring: f.ring.clone(), h_min: cube.h_min, graded, q, diffs })
}

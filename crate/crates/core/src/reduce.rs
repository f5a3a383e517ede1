//! Delooping and Gaussian elimination.
//!
//! A non-special circle `O` is isomorphic to `∅{-1} ⊕ ∅{+1}`. Over `Z[H]`
//! the isomorphism uses dots (a dot is a tube to the special component):
//!
//! ```text
//! p₋ = cap           i₋ = dotted cup
//! p₊ = dotted cap - H·cap    i₊ = cup
//! ```
//!
//! Over `Z[1/2, T]` a box (half a handle) replaces the dot and no special
//! circle is needed. After every circle but the special one is gone, each
//! differential entry is an endomorphism of the special line, i.e. an
//! element of `Z[H]`; units are then cancelled until none remain.
//!
//! The pipeline does not deloop geometrically: composing the pieces around
//! the four kinds of pants (merge and split, with or without the special
//! circle) gives small tables, and the delooped complex is assembled from
//! those tables. Graded entries of `Z[H]` are monomials `c·H^k` with `k`
//! fixed by the q-degrees, so elimination runs on the integers `c` alone.

use std::collections::BinaryHeap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::checked::CheckedInt;
use crate::cobordism::{compose, CircleConfig, CobError, CobMor, Component, Port, SurfaceGen, SurfaceRing};
use crate::complex::{AlgComplex, GeomComplex, GeomObject, SparseMatrix};
use crate::rings::{poly_is_monomial, Ring};
use crate::{QT, ZH};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReduceError {
    #[error("circle {0} is the special circle and cannot be delooped")]
    SpecialCircle(usize),
    #[error("no special circle designated")]
    NoSpecial,
    #[error("index out of range: {0}")]
    OutOfRange(String),
    #[error("entry at ({row},{col}) in degree {h} is not a unit")]
    NotUnit { h: i64, row: usize, col: usize },
    #[error("endomorphism of the special line is not a connected curtain: {0}")]
    Disconnected(String),
    #[error("differential entry is not monomial: {0}")]
    NotMonomial(String),
    #[error(transparent)]
    Cob(#[from] CobError),
}

/// The four pieces of a delooping isomorphism.
#[derive(Clone, Debug)]
pub struct DeloopIso<C: Ring> {
    pub p_minus: CobMor<C>,
    pub p_plus: CobMor<C>,
    pub i_minus: CobMor<C>,
    pub i_plus: CobMor<C>,
}

/// Index of circle `j` once circle `removed` is gone.
fn shift_index(j: usize, removed: usize) -> usize {
    if j > removed {
        j - 1
    } else {
        j
    }
}

fn reduced_config(config: CircleConfig, circle: usize) -> CircleConfig {
    CircleConfig::new(config.count - 1, config.special.map(|s| shift_index(s, circle)))
}

/// Identity tubes on every circle except `circle`. `outward` builds the
/// tubes for a map from the full configuration (ports `In` full, `Out`
/// reduced); otherwise the reverse.
fn frame_tubes(config: CircleConfig, circle: usize, outward: bool) -> Vec<Component> {
    (0..config.count)
        .filter(|&j| j != circle)
        .map(|j| {
            let (full, small) = (j as u32, shift_index(j, circle) as u32);
            if outward {
                Component::new(0, vec![Port::In(full), Port::Out(small)])
            } else {
                Component::new(0, vec![Port::In(small), Port::Out(full)])
            }
        })
        .collect()
}

/// A cap or cup on `circle`, of the given genus, optionally joined to the
/// special tube (a dot).
fn cap_cup(config: CircleConfig, circle: usize, outward: bool, genus: u32, dotted: bool) -> SurfaceGen {
    let mut comps = frame_tubes(config, circle, outward);
    let port = if outward { Port::In(circle as u32) } else { Port::Out(circle as u32) };
    if dotted {
        let s = config.special.expect("dotted pieces need a special circle");
        let sp = if outward { Port::In(s as u32) } else { Port::Out(s as u32) };
        let k = comps.iter().position(|c| c.ports.contains(&sp)).unwrap();
        let mut ports = comps[k].ports.clone();
        ports.push(port);
        comps[k] = Component::new(genus, ports);
    } else {
        comps.push(Component::new(genus, vec![port]));
    }
    SurfaceGen::new(comps)
}

/// Delooping of a non-special circle over `Z[H]`.
pub fn deloop_iso_z(config: CircleConfig, circle: usize) -> Result<DeloopIso<ZH>, ReduceError> {
    let s = config.special.ok_or(ReduceError::NoSpecial)?;
    if circle == s {
        return Err(ReduceError::SpecialCircle(circle));
    }
    if circle >= config.count {
        return Err(ReduceError::OutOfRange(format!("circle {circle} of {}", config.count)));
    }
    let small = reduced_config(config, circle);
    let one = ZH::one();
    let p_minus = CobMor::from_gen(config, small, cap_cup(config, circle, true, 0, false), one.clone())?;
    let mut p_plus = CobMor::from_gen(config, small, cap_cup(config, circle, true, 0, true), one.clone())?;
    p_plus.add_term(cap_cup(config, circle, true, 0, false), -ZH::var());
    let i_minus = CobMor::from_gen(small, config, cap_cup(config, circle, false, 0, true), one.clone())?;
    let i_plus = CobMor::from_gen(small, config, cap_cup(config, circle, false, 0, false), one)?;
    Ok(DeloopIso { p_minus, p_plus, i_minus, i_plus })
}

/// Delooping over `Z[1/2, T]`; boxes are half a handle.
pub fn deloop_iso_q(config: CircleConfig, circle: usize) -> Result<DeloopIso<QT>, ReduceError> {
    if circle >= config.count {
        return Err(ReduceError::OutOfRange(format!("circle {circle} of {}", config.count)));
    }
    let small = reduced_config(config, circle);
    let one = QT::one();
    let half = QT::constant(BigRational::new(1.into(), 2.into()));
    Ok(DeloopIso {
        p_minus: CobMor::from_gen(config, small, cap_cup(config, circle, true, 0, false), one.clone())?,
        p_plus: CobMor::from_gen(config, small, cap_cup(config, circle, true, 1, false), half.clone())?,
        i_minus: CobMor::from_gen(small, config, cap_cup(config, circle, false, 1, false), half)?,
        i_plus: CobMor::from_gen(small, config, cap_cup(config, circle, false, 0, false), one)?,
    })
}

/// Replaces object `obj` of degree `h` by the two objects of its delooping
/// along `circle` (the `-1` shift first), composing and reducing every
/// incident differential entry.
pub fn deloop_with<C: SurfaceRing>(
    c: &GeomComplex<C>,
    h: i64,
    obj: usize,
    circle: usize,
    iso: impl Fn(CircleConfig, usize) -> Result<DeloopIso<C>, ReduceError>,
) -> Result<GeomComplex<C>, ReduceError> {
    let k = c.degree_index(h).ok_or_else(|| ReduceError::OutOfRange(format!("degree {h}")))?;
    let o = c.objects[k].get(obj).ok_or_else(|| ReduceError::OutOfRange(format!("object {obj}")))?.clone();
    let pieces = iso(o.config, circle)?;
    let small = reduced_config(o.config, circle);
    let mut out = c.clone();
    out.objects[k].splice(
        obj..=obj,
        [
            GeomObject { config: small, qshift: o.qshift - 1, vertex: o.vertex },
            GeomObject { config: small, qshift: o.qshift + 1, vertex: o.vertex },
        ],
    );
    let bump = |i: usize| if i > obj { i + 1 } else { i };
    if k > 0 {
        let d = &c.diffs[k - 1];
        let mut nd = SparseMatrix::new(d.nrows + 1, d.ncols);
        for (r, col, f) in d.iter() {
            if r == obj {
                for (slot, p) in [(obj, &pieces.p_minus), (obj + 1, &pieces.p_plus)] {
                    let m = C::reduce(&compose(f, p)?)?;
                    if !m.is_zero() {
                        nd.insert(slot, col, m);
                    }
                }
            } else {
                nd.insert(bump(r), col, f.clone());
            }
        }
        out.diffs[k - 1] = nd;
    }
    if k < c.diffs.len() {
        let d = &c.diffs[k];
        let mut nd = SparseMatrix::new(d.nrows, d.ncols + 1);
        for (r, col, g) in d.iter() {
            if col == obj {
                for (slot, i) in [(obj, &pieces.i_minus), (obj + 1, &pieces.i_plus)] {
                    let m = C::reduce(&compose(i, g)?)?;
                    if !m.is_zero() {
                        nd.insert(r, slot, m);
                    }
                }
            } else {
                nd.insert(r, bump(col), g.clone());
            }
        }
        out.diffs[k] = nd;
    }
    Ok(out)
}

/// Geometric delooping over `Z[H]`.
pub fn deloop(c: &GeomComplex<ZH>, h: i64, obj: usize, circle: usize) -> Result<GeomComplex<ZH>, ReduceError> {
    deloop_with(c, h, obj, circle, deloop_iso_z)
}

/// Geometric delooping over `Z[1/2, T]`.
pub fn deloop_q(c: &GeomComplex<QT>, h: i64, obj: usize, circle: usize) -> Result<GeomComplex<QT>, ReduceError> {
    deloop_with(c, h, obj, circle, deloop_iso_q)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeloopOrder {
    /// Lowest degree, then object, then circle first.
    Forward,
    /// Highest degree, last object, last circle first.
    Backward,
}

/// Deloops every non-special circle geometrically and reads off the
/// resulting complex over `Z[H]`. Exponential in the number of circles per
/// object; meant as a cross-check on small diagrams.
pub fn deloop_all_geometric(c: &GeomComplex<ZH>, order: DeloopOrder) -> Result<AlgComplex<ZH>, ReduceError> {
    let mut cur = c.clone();
    let nk = cur.objects.len();
    let degrees: Vec<usize> = match order {
        DeloopOrder::Forward => (0..nk).collect(),
        DeloopOrder::Backward => (0..nk).rev().collect(),
    };
    for k in degrees {
        loop {
            let objs = &cur.objects[k];
            let pick = |(i, o): (usize, &GeomObject)| -> Option<(usize, usize)> {
                let s = o.config.special?;
                let mut circles = (0..o.config.count).filter(|&j| j != s);
                let j = match order {
                    DeloopOrder::Forward => circles.next(),
                    DeloopOrder::Backward => circles.next_back(),
                }?;
                Some((i, j))
            };
            let found = match order {
                DeloopOrder::Forward => objs.iter().enumerate().find_map(pick),
                DeloopOrder::Backward => objs.iter().enumerate().rev().find_map(pick),
            };
            match found {
                Some((i, j)) => cur = deloop(&cur, cur.h_min + k as i64, i, j)?,
                None => break,
            }
        }
    }
    special_line_complex(&cur)
}

/// Reads a complex whose objects are all the bare special line.
fn special_line_complex(c: &GeomComplex<ZH>) -> Result<AlgComplex<ZH>, ReduceError> {
    let mut diffs = Vec::new();
    for d in &c.diffs {
        let mut nd = SparseMatrix::new(d.nrows, d.ncols);
        for (r, col, m) in d.iter() {
            nd.insert(r, col, curtain_coefficient(m)?);
        }
        diffs.push(nd);
    }
    for o in c.objects.iter().flatten() {
        if o.config.count != 1 || o.config.special != Some(0) {
            return Err(ReduceError::OutOfRange("object still has non-special circles".into()));
        }
    }
    Ok(AlgComplex {
        ring: "Z[H]".into(),
        h_min: c.h_min,
        graded: true,
        q: c.objects.iter().map(|os| os.iter().map(|o| o.qshift).collect()).collect(),
        diffs,
    })
}

/// The `Z[H]` coefficient of the connected curtain; any other generator is
/// an error.
fn curtain_coefficient(m: &CobMor<ZH>) -> Result<ZH, ReduceError> {
    let curtain = SurfaceGen::identity(1);
    let mut out = ZH::zero();
    for (g, c) in m.terms() {
        if *g != curtain {
            return Err(ReduceError::Disconnected(m.to_string()));
        }
        out = c.clone();
    }
    Ok(out)
}

/// Scalar value of a morphism `∅ -> ∅`.
fn scalar<C: SurfaceRing>(m: &CobMor<C>) -> C {
    let empty = SurfaceGen::new(vec![]);
    m.terms().find(|(g, _)| **g == empty).map(|(_, c)| c.clone()).unwrap_or_else(C::zero)
}

/// Label of a delooped circle. `Minus` is the `-1` shifted copy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Minus = 0,
    Plus = 1,
}

pub const LABELS: [Label; 2] = [Label::Minus, Label::Plus];

impl Label {
    pub fn q(self) -> i64 {
        match self {
            Label::Minus => -1,
            Label::Plus => 1,
        }
    }
}

/// Pants maps in delooped bases over `Z[H]`.
///
/// `m1` merges two non-special circles, `delta1` splits one, `phi` merges
/// a circle into the special line and `psi` splits one off it. Tensor
/// factors are ordered by circle index.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraTablesZ {
    pub m1: [[[ZH; 2]; 2]; 2],
    pub delta1: [[[ZH; 2]; 2]; 2],
    pub phi: [ZH; 2],
    pub psi: [ZH; 2],
}

/// Pants maps over `Z[1/2, T]` (no special circle).
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraTablesQ {
    pub m2: [[[QT; 2]; 2]; 2],
    pub delta2: [[[QT; 2]; 2]; 2],
}

fn pants<C: Ring>(source: CircleConfig, target: CircleConfig, saddle: Vec<Port>, tubes: &[(u32, u32)]) -> CobMor<C> {
    let mut comps = vec![Component::new(0, saddle)];
    comps.extend(tubes.iter().map(|&(i, o)| Component::new(0, vec![Port::In(i), Port::Out(o)])));
    CobMor::from_gen(source, target, SurfaceGen::new(comps), C::one()).expect("pants partition ports")
}

fn piece<C: Ring>(iso: &DeloopIso<C>, l: Label, project: bool) -> &CobMor<C> {
    match (l, project) {
        (Label::Minus, true) => &iso.p_minus,
        (Label::Plus, true) => &iso.p_plus,
        (Label::Minus, false) => &iso.i_minus,
        (Label::Plus, false) => &iso.i_plus,
    }
}

impl AlgebraTablesZ {
    /// Derives the tables by composing delooping pieces with pants.
    pub fn compute() -> Self {
        let reduce = |m: CobMor<ZH>| curtain_coefficient(&crate::cobordism::reduce_z(&m).unwrap()).unwrap();
        let c = |n| CircleConfig::new(n, Some(0));
        // circles: 0 = special, 1 and 2 delooped
        let iso3_2 = deloop_iso_z(c(3), 2).unwrap();
        let iso2_1 = deloop_iso_z(c(2), 1).unwrap();
        let merge = pants::<ZH>(c(3), c(2), vec![Port::In(1), Port::In(2), Port::Out(1)], &[(0, 0)]);
        let split = pants::<ZH>(c(2), c(3), vec![Port::In(1), Port::Out(1), Port::Out(2)], &[(0, 0)]);
        let special_merge = pants::<ZH>(c(2), c(1), vec![Port::In(0), Port::In(1), Port::Out(0)], &[]);
        let special_split = pants::<ZH>(c(1), c(2), vec![Port::In(0), Port::Out(0), Port::Out(1)], &[]);
        let both_in = |a: Label, b: Label| compose(piece(&iso2_1, a, false), piece(&iso3_2, b, false)).unwrap();
        let both_out = |a: Label, b: Label| compose(piece(&iso3_2, b, true), piece(&iso2_1, a, true)).unwrap();

        let z = ZH::zero;
        let mut t = AlgebraTablesZ {
            m1: std::array::from_fn(|_| std::array::from_fn(|_| [z(), z()])),
            delta1: std::array::from_fn(|_| std::array::from_fn(|_| [z(), z()])),
            phi: [z(), z()],
            psi: [z(), z()],
        };
        for a in LABELS {
            for b in LABELS {
                let src = both_in(a, b);
                for z in LABELS {
                    let m = compose(&compose(&src, &merge).unwrap(), piece(&iso2_1, z, true)).unwrap();
                    t.m1[a as usize][b as usize][z as usize] = reduce(m);
                    let d = compose(&compose(piece(&iso2_1, z, false), &split).unwrap(), &both_out(a, b)).unwrap();
                    t.delta1[z as usize][a as usize][b as usize] = reduce(d);
                }
            }
            t.phi[a as usize] = reduce(compose(piece(&iso2_1, a, false), &special_merge).unwrap());
            t.psi[a as usize] = reduce(compose(&special_split, piece(&iso2_1, a, true)).unwrap());
        }
        t
    }
}

impl AlgebraTablesQ {
    pub fn compute() -> Self {
        let c = |n| CircleConfig::new(n, None);
        let iso2_1 = deloop_iso_q(c(2), 1).unwrap();
        let iso1_0 = deloop_iso_q(c(1), 0).unwrap();
        let merge = pants::<QT>(c(2), c(1), vec![Port::In(0), Port::In(1), Port::Out(0)], &[]);
        let split = pants::<QT>(c(1), c(2), vec![Port::In(0), Port::Out(0), Port::Out(1)], &[]);
        let both_in = |a: Label, b: Label| compose(piece(&iso1_0, a, false), piece(&iso2_1, b, false)).unwrap();
        let both_out = |a: Label, b: Label| compose(piece(&iso2_1, b, true), piece(&iso1_0, a, true)).unwrap();
        let z = QT::zero;
        let mut t = AlgebraTablesQ {
            m2: std::array::from_fn(|_| std::array::from_fn(|_| [z(), z()])),
            delta2: std::array::from_fn(|_| std::array::from_fn(|_| [z(), z()])),
        };
        for a in LABELS {
            for b in LABELS {
                for z in LABELS {
                    let m = compose(&compose(&both_in(a, b), &merge).unwrap(), piece(&iso1_0, z, true)).unwrap();
                    t.m2[a as usize][b as usize][z as usize] = scalar(&m);
                    let d = compose(&compose(piece(&iso1_0, z, false), &split).unwrap(), &both_out(a, b)).unwrap();
                    t.delta2[z as usize][a as usize][b as usize] = scalar(&d);
                }
            }
        }
        t
    }
}

/// Integer coefficients of the pants tables; the `H` power of each entry is
/// implied by the q-degrees.
struct IntTables {
    m1: [[[i64; 2]; 2]; 2],
    delta1: [[[i64; 2]; 2]; 2],
    phi: [i64; 2],
    psi: [i64; 2],
}

fn int_coeff(p: &ZH) -> i64 {
    if p.is_zero() {
        return 0;
    }
    let (c, _) = poly_is_monomial(p).expect("pants tables are homogeneous");
    c.to_i64().expect("small table coefficient")
}

fn int_tables() -> &'static IntTables {
    static TABLES: std::sync::OnceLock<IntTables> = std::sync::OnceLock::new();
    TABLES.get_or_init(|| IntTables::from(&AlgebraTablesZ::compute()))
}

impl IntTables {
    fn from(t: &AlgebraTablesZ) -> Self {
        let cube = |x: &[[[ZH; 2]; 2]; 2]| {
            let mut o = [[[0i64; 2]; 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        o[a][b][c] = int_coeff(&x[a][b][c]);
                    }
                }
            }
            o
        };
        IntTables {
            m1: cube(&t.m1),
            delta1: cube(&t.delta1),
            phi: [int_coeff(&t.phi[0]), int_coeff(&t.phi[1])],
            psi: [int_coeff(&t.psi[0]), int_coeff(&t.psi[1])],
        }
    }
}

/// A sparse matrix with row-major values and column incidence, for
/// elimination. Rows and columns stay short, so they are unsorted vectors.
#[derive(Clone, Debug)]
struct ElimMatrix<T> {
    rows: Vec<Vec<(u32, T)>>,
    cols: Vec<Vec<u32>>,
}

fn remove_item(v: &mut Vec<u32>, x: u32) {
    if let Some(i) = v.iter().position(|&y| y == x) {
        v.swap_remove(i);
    }
}

impl<T: CheckedInt> ElimMatrix<T> {
    fn new(nrows: usize, ncols: usize) -> Self {
        Self { rows: vec![Vec::new(); nrows], cols: vec![Vec::new(); ncols] }
    }

    fn get(&self, r: u32, c: u32) -> Option<&T> {
        self.rows[r as usize].iter().find(|(s, _)| *s == c).map(|(_, v)| v)
    }

    /// Inserts at a position known to be empty.
    fn push(&mut self, r: u32, c: u32, v: T) {
        self.rows[r as usize].push((c, v));
        self.cols[c as usize].push(r);
    }

    fn add(&mut self, r: u32, c: u32, v: T) -> Option<()> {
        let row = &mut self.rows[r as usize];
        match row.iter().position(|(s, _)| *s == c) {
            Some(i) => {
                let sum = row[i].1.c_add(&v)?;
                if sum.c_is_zero() {
                    row.swap_remove(i);
                    remove_item(&mut self.cols[c as usize], r);
                } else {
                    row[i].1 = sum;
                }
            }
            None => {
                if !v.c_is_zero() {
                    row.push((c, v));
                    self.cols[c as usize].push(r);
                }
            }
        }
        Some(())
    }

    fn clear_row(&mut self, r: u32) {
        for (c, _) in std::mem::take(&mut self.rows[r as usize]) {
            remove_item(&mut self.cols[c as usize], r);
        }
    }

    fn clear_col(&mut self, c: u32) {
        for r in std::mem::take(&mut self.cols[c as usize]) {
            let row = &mut self.rows[r as usize];
            if let Some(i) = row.iter().position(|(s, _)| *s == c) {
                row.swap_remove(i);
            }
        }
    }

    fn convert<U: CheckedInt>(&self) -> ElimMatrix<U> {
        ElimMatrix {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|(c, v)| (*c, U::from_bigint(&v.to_bigint()).unwrap())).collect())
                .collect(),
            cols: self.cols.clone(),
        }
    }
}

/// A graded complex over `Z[H]` stored by integer coefficients.
#[derive(Clone, Debug)]
struct IntComplex<T> {
    h_min: i64,
    q: Vec<Vec<i64>>,
    mats: Vec<ElimMatrix<T>>,
}

#[derive(Debug)]
struct Overflow;

impl<T: CheckedInt> IntComplex<T> {
    fn from_alg(c: &AlgComplex<ZH>) -> Result<Self, ReduceError> {
        let mut mats = Vec::new();
        for (k, d) in c.diffs.iter().enumerate() {
            let mut m = ElimMatrix::new(c.q[k + 1].len(), c.q[k].len());
            for (r, col, x) in d.iter() {
                let (coef, e) = poly_is_monomial(x).ok_or_else(|| ReduceError::NotMonomial(x.to_string()))?;
                if c.q[k + 1][r] != c.q[k][col] + 2 * e as i64 {
                    return Err(ReduceError::NotMonomial(format!("{x} breaks the grading")));
                }
                let v = T::from_bigint(&coef).ok_or_else(|| ReduceError::NotMonomial("coefficient too large".into()))?;
                m.add(r as u32, col as u32, v);
            }
            mats.push(m);
        }
        Ok(IntComplex { h_min: c.h_min, q: c.q.clone(), mats })
    }

    fn to_alg(&self, alive: Option<&[Vec<bool>]>) -> AlgComplex<ZH> {
        let keep: Vec<Vec<usize>> = (0..self.q.len())
            .map(|k| (0..self.q[k].len()).filter(|&i| alive.is_none_or(|a| a[k][i])).collect())
            .collect();
        let mut index: Vec<Vec<usize>> = self.q.iter().map(|qs| vec![usize::MAX; qs.len()]).collect();
        for (k, ks) in keep.iter().enumerate() {
            for (new, &old) in ks.iter().enumerate() {
                index[k][old] = new;
            }
        }
        let q: Vec<Vec<i64>> = keep.iter().enumerate().map(|(k, ks)| ks.iter().map(|&i| self.q[k][i]).collect()).collect();
        let diffs = self
            .mats
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let mut d = SparseMatrix::new(keep[k + 1].len(), keep[k].len());
                for (r, row) in m.rows.iter().enumerate() {
                    for &(c, ref v) in row {
                        let (ri, ci) = (index[k + 1][r], index[k][c as usize]);
                        assert!(ri != usize::MAX && ci != usize::MAX, "entry on an eliminated generator");
                        let e = (self.q[k + 1][r] - self.q[k][c as usize]) / 2;
                        d.insert(ri, ci, ZH::monomial(v.to_bigint(), e as u32));
                    }
                }
                d
            })
            .collect();
        AlgComplex { ring: "Z[H]".into(), h_min: self.h_min, graded: true, q, diffs }
    }

    fn convert<U: CheckedInt>(&self) -> IntComplex<U> {
        IntComplex { h_min: self.h_min, q: self.q.clone(), mats: self.mats.iter().map(ElimMatrix::convert).collect() }
    }
}

/// Which unit entry is cancelled next within a degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PivotOrder {
    /// Lowest (row, col) first.
    #[default]
    Lowest,
    /// Highest (row, col) first.
    Highest,
}

/// Cancels unit entries degree by degree, lowest degree first. Returns the
/// surviving generators.
fn eliminate_units<T: CheckedInt>(cx: &mut IntComplex<T>, order: PivotOrder) -> Result<Vec<Vec<bool>>, Overflow> {
    let mut alive: Vec<Vec<bool>> = cx.q.iter().map(|qs| vec![true; qs.len()]).collect();
    for k in 0..cx.mats.len() {
        let (q_src, q_tgt) = (cx.q[k].clone(), cx.q[k + 1].clone());
        let is_pivot = |r: u32, c: u32, v: &T| v.c_is_unit() && q_tgt[r as usize] == q_src[c as usize];
        // Max-heap on keys arranged so the preferred pivot pops first;
        // stale keys are skipped when popped.
        let key = |r: u32, c: u32| match order {
            PivotOrder::Lowest => (u32::MAX - r, u32::MAX - c),
            PivotOrder::Highest => (r, c),
        };
        let mut cand: BinaryHeap<(u32, u32)> = BinaryHeap::new();
        for (r, row) in cx.mats[k].rows.iter().enumerate() {
            for &(c, ref v) in row {
                if is_pivot(r as u32, c, v) {
                    cand.push(key(r as u32, c));
                }
            }
        }
        loop {
            let Some(k2) = cand.pop() else { break };
            let (r, c) = key(k2.0, k2.1);
            let Some(a) = cx.mats[k].get(r, c).cloned() else { continue };
            if !is_pivot(r, c, &a) {
                continue;
            }
            // a is ±1, so a⁻¹ = a.
            let m = &mut cx.mats[k];
            let col: Vec<(u32, T)> = m.cols[c as usize]
                .iter()
                .filter(|&&t| t != r)
                .map(|&t| (t, m.get(t, c).expect("column incidence matches rows").clone()))
                .collect();
            let row: Vec<(u32, T)> = m.rows[r as usize].iter().filter(|(s, _)| *s != c).cloned().collect();
            m.clear_row(r);
            m.clear_col(c);
            for (t, x) in &col {
                let f = x.c_mul(&a).ok_or(Overflow)?.c_neg().ok_or(Overflow)?;
                for (s, y) in &row {
                    m.add(*t, *s, f.c_mul(y).ok_or(Overflow)?).ok_or(Overflow)?;
                    if let Some(v) = m.get(*t, *s) {
                        if is_pivot(*t, *s, v) {
                            cand.push(key(*t, *s));
                        }
                    }
                }
            }
            if k > 0 {
                cx.mats[k - 1].clear_row(c);
            }
            if k + 1 < cx.mats.len() {
                cx.mats[k + 1].clear_col(r);
            }
            alive[k][c as usize] = false;
            alive[k + 1][r as usize] = false;
        }
    }
    Ok(alive)
}

/// An elimination run that restarts on big integers, from a rebuilt
/// input, after an overflow.
fn eliminate_int(
    cx: IntComplex<i64>,
    order: PivotOrder,
    rebuild: impl FnOnce() -> Result<IntComplex<BigInt>, ReduceError>,
) -> Result<AlgComplex<ZH>, ReduceError> {
    let mut small = cx;
    match eliminate_units(&mut small, order) {
        Ok(alive) => Ok(small.to_alg(Some(&alive))),
        Err(Overflow) => {
            let mut big = rebuild()?;
            let alive = eliminate_units(&mut big, order).unwrap_or_else(|_| unreachable!("BigInt never overflows"));
            Ok(big.to_alg(Some(&alive)))
        }
    }
}

/// Cancels every `±1` entry between generators of equal q-degree in an
/// integer complex. The result is chain-homotopy equivalent, so homology
/// (torsion included) is unchanged.
pub fn cancel_integer_units(c: &AlgComplex<BigInt>) -> AlgComplex<BigInt> {
    let build = |c: &AlgComplex<BigInt>| -> Option<IntComplex<i64>> {
        let mut mats = Vec::new();
        for (k, d) in c.diffs.iter().enumerate() {
            let mut m = ElimMatrix::new(c.q[k + 1].len(), c.q[k].len());
            for (r, col, x) in d.iter() {
                m.add(r as u32, col as u32, x.to_i64()?)?;
            }
            mats.push(m);
        }
        Some(IntComplex { h_min: c.h_min, q: c.q.clone(), mats })
    };
    let big = |c: &AlgComplex<BigInt>| -> IntComplex<BigInt> {
        let mats = c
            .diffs
            .iter()
            .enumerate()
            .map(|(k, d)| {
                let mut m = ElimMatrix::new(c.q[k + 1].len(), c.q[k].len());
                for (r, col, x) in d.iter() {
                    m.add(r as u32, col as u32, x.clone());
                }
                m
            })
            .collect();
        IntComplex { h_min: c.h_min, q: c.q.clone(), mats }
    };
    let finish = |cx: &IntComplex<BigInt>, alive: &[Vec<bool>]| -> AlgComplex<BigInt> {
        let z = cx.to_alg(Some(alive));
        z.map_ring(&c.ring, |x| poly_is_monomial(x).expect("integer entries stay constant").0)
    };
    if let Some(mut small) = build(c) {
        if let Ok(alive) = eliminate_units(&mut small, PivotOrder::Lowest) {
            let mut out = finish(&small.convert(), &alive);
            out.graded = c.graded;
            return out;
        }
    }
    let mut cx = big(c);
    let alive = eliminate_units(&mut cx, PivotOrder::Lowest).unwrap_or_else(|_| unreachable!("BigInt never overflows"));
    let mut out = finish(&cx, &alive);
    out.graded = c.graded;
    out
}

/// Gaussian elimination of a single unit entry `(row, col)` of the
/// differential leaving degree `h`.
pub fn eliminate<R: Ring>(c: &AlgComplex<R>, h: i64, row: usize, col: usize) -> Result<AlgComplex<R>, ReduceError> {
    let k = (h - c.h_min) as usize;
    let not_unit = || ReduceError::NotUnit { h, row, col };
    if h < c.h_min || k >= c.diffs.len() {
        return Err(ReduceError::OutOfRange(format!("degree {h}")));
    }
    let d = &c.diffs[k];
    let a = d.get(row, col).ok_or_else(not_unit)?;
    let ainv = a.unit_inverse().ok_or_else(not_unit)?;
    let cols = d.columns();
    let col_entries: Vec<(usize, R)> = cols[col].iter().filter(|(t, _)| *t != row).map(|(t, x)| (*t, (*x).clone())).collect();
    let row_entries: Vec<(usize, R)> = d.iter().filter(|(r, s, _)| *r == row && *s != col).map(|(_, s, y)| (s, y.clone())).collect();

    let drop = |i: usize, gone: usize| if i > gone { i - 1 } else { i };
    let mut out = c.clone();
    out.q[k].remove(col);
    out.q[k + 1].remove(row);
    let mut nd = SparseMatrix::new(d.nrows - 1, d.ncols - 1);
    let mut vals: std::collections::BTreeMap<(usize, usize), R> = d
        .iter()
        .filter(|(r, s, _)| *r != row && *s != col)
        .map(|(r, s, v)| ((r, s), v.clone()))
        .collect();
    for (t, x) in &col_entries {
        for (s, y) in &row_entries {
            let e = vals.entry((*t, *s)).or_insert_with(R::zero);
            *e = e.clone() - x.clone() * ainv.clone() * y.clone();
        }
    }
    for ((r, s), v) in vals {
        if !v.is_zero() {
            nd.insert(drop(r, row), drop(s, col), v);
        }
    }
    out.diffs[k] = nd;
    if k > 0 {
        let p = &c.diffs[k - 1];
        let mut np = SparseMatrix::new(p.nrows - 1, p.ncols);
        for (r, s, v) in p.iter().filter(|(r, _, _)| *r != col) {
            np.insert(drop(r, col), s, v.clone());
        }
        out.diffs[k - 1] = np;
    }
    if k + 1 < c.diffs.len() {
        let nx = &c.diffs[k + 1];
        let mut nn = SparseMatrix::new(nx.nrows, nx.ncols - 1);
        for (r, s, v) in nx.iter().filter(|(_, s, _)| *s != row) {
            nn.insert(r, drop(s, row), v.clone());
        }
        out.diffs[k + 1] = nn;
    }
    Ok(out)
}

/// Minimal complex over `Z[H]`: every entry zero or a non-unit monomial.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedComplex {
    pub complex: AlgComplex<ZH>,
}

impl ReducedComplex {
    /// Monomial entries, no units, homogeneous, `d² = 0`.
    pub fn check_invariants(&self) -> Result<(), String> {
        for (k, d) in self.complex.diffs.iter().enumerate() {
            for (r, c, x) in d.iter() {
                if poly_is_monomial(x).is_none() {
                    return Err(format!("non-monomial entry {x} at degree {} ({r},{c})", self.complex.h_min + k as i64));
                }
                if x.is_unit() {
                    return Err(format!("unit entry {x} at degree {} ({r},{c})", self.complex.h_min + k as i64));
                }
            }
        }
        if !self.complex.is_homogeneous() {
            return Err("entry breaks the q-grading".into());
        }
        crate::complex::check_d_squared_alg(&self.complex).map_err(|f| format!("d² ≠ 0 at {f:?}"))
    }

    pub fn n_generators(&self) -> usize {
        self.complex.total_rank()
    }
}

/// How each cube entry acts on delooped generators.
enum Pants {
    Merge { x: usize, y: usize, z: usize },
    Split { z: usize, x: usize, y: usize },
    MergeSpecial { x: usize },
    SplitSpecial { x: usize },
}

/// Decomposes an elementary entry (one term, `±1`, a genus-0 three-port
/// component plus tubes).
fn elementary(m: &CobMor<ZH>) -> Option<(i64, Pants, Vec<(usize, usize)>)> {
    if m.len() != 1 {
        return None;
    }
    let (g, coef) = m.terms().next()?;
    let sign = if coef.is_one() {
        1
    } else if (-coef.clone()).is_one() {
        -1
    } else {
        return None;
    };
    let (ss, ts) = (m.source.special?, m.target.special?);
    let mut saddle = None;
    let mut tubes = Vec::new();
    for c in g.components() {
        if c.genus != 0 {
            return None;
        }
        let ins: Vec<usize> = c.ports.iter().filter_map(|p| if let Port::In(i) = p { Some(*i as usize) } else { None }).collect();
        let outs: Vec<usize> = c.ports.iter().filter_map(|p| if let Port::Out(i) = p { Some(*i as usize) } else { None }).collect();
        match (ins.len(), outs.len()) {
            (1, 1) => {
                if (ins[0] == ss) != (outs[0] == ts) {
                    return None;
                }
                tubes.push((ins[0], outs[0]));
            }
            (2, 1) if saddle.is_none() => {
                saddle = Some(if ins.contains(&ss) {
                    if outs[0] != ts {
                        return None;
                    }
                    Pants::MergeSpecial { x: if ins[0] == ss { ins[1] } else { ins[0] } }
                } else {
                    Pants::Merge { x: ins[0], y: ins[1], z: outs[0] }
                });
            }
            (1, 2) if saddle.is_none() => {
                saddle = Some(if ins[0] == ss {
                    if !outs.contains(&ts) {
                        return None;
                    }
                    Pants::SplitSpecial { x: if outs[0] == ts { outs[1] } else { outs[0] } }
                } else {
                    Pants::Split { z: ins[0], x: outs[0], y: outs[1] }
                });
            }
            _ => return None,
        }
    }
    Some((sign, saddle?, tubes))
}

/// Bit position of each non-special circle in a generator index: the
/// first non-special circle is the most significant bit, `1` = `Plus`.
fn bit_positions(config: CircleConfig) -> Vec<Option<u32>> {
    let s = config.special.unwrap();
    let k = config.count as u32 - 1;
    let mut j = 0;
    (0..config.count)
        .map(|c| {
            if c == s {
                None
            } else {
                j += 1;
                Some(k - j)
            }
        })
        .collect()
}

/// Assembles the fully delooped complex from the pants tables.
fn delooped_int(c: &GeomComplex<ZH>, tables: &IntTables) -> Option<IntComplex<i64>> {
    let nk = c.objects.len();
    let mut offsets: Vec<Vec<usize>> = Vec::with_capacity(nk);
    let mut q: Vec<Vec<i64>> = Vec::with_capacity(nk);
    for objs in &c.objects {
        let mut off = Vec::with_capacity(objs.len());
        let mut qs = Vec::new();
        for o in objs {
            o.config.special?;
            off.push(qs.len());
            let k = o.config.count - 1;
            for g in 0u64..1 << k {
                let plus = g.count_ones() as i64;
                qs.push(o.qshift + plus - (k as i64 - plus));
            }
        }
        offsets.push(off);
        q.push(qs);
    }
    let mut mats = Vec::with_capacity(c.diffs.len());
    for (k, d) in c.diffs.iter().enumerate() {
        let entries: Vec<(usize, usize, &CobMor<ZH>)> = d.iter().collect();
        let blocks: Option<Vec<Vec<(u32, u32, i64)>>> = entries
            .par_iter()
            .with_min_len(256)
            .map(|&(r, col, m)| {
                let (sign, pants, tubes) = elementary(m)?;
                let src = bit_positions(m.source);
                let tgt = bit_positions(m.target);
                let (so, to) = (offsets[k][col], offsets[k + 1][r]);
                let bit = |g: u64, p: Option<u32>| -> usize { p.map_or(0, |p| (g >> p & 1) as usize) };
                let set = |l: usize, p: Option<u32>| -> u64 { p.map_or(0, |p| (l as u64) << p) };
                let mut out = Vec::with_capacity(4 << (m.source.count - 1));
                for g in 0u64..1 << (m.source.count - 1) {
                    let base: u64 = tubes.iter().map(|&(i, o)| set(bit(g, src[i]), tgt[o])).sum();
                    let mut emit = |t: u64, v: i64| {
                        if v != 0 {
                            out.push(((to as u64 + t) as u32, (so as u64 + g) as u32, sign * v));
                        }
                    };
                    match pants {
                        Pants::Merge { x, y, z } => {
                            let (a, b) = (bit(g, src[x]), bit(g, src[y]));
                            for l in 0..2 {
                                emit(base | set(l, tgt[z]), tables.m1[a][b][l]);
                            }
                        }
                        Pants::Split { z, x, y } => {
                            let a = bit(g, src[z]);
                            for l1 in 0..2 {
                                for l2 in 0..2 {
                                    emit(base | set(l1, tgt[x]) | set(l2, tgt[y]), tables.delta1[a][l1][l2]);
                                }
                            }
                        }
                        Pants::MergeSpecial { x } => emit(base, tables.phi[bit(g, src[x])]),
                        Pants::SplitSpecial { x } => {
                            for l in 0..2 {
                                emit(base | set(l, tgt[x]), tables.psi[l]);
                            }
                        }
                    }
                }
                Some(out)
            })
            .collect();
        // Blocks of distinct cube entries are disjoint and each block
        // emits a position once, so entries are inserted directly.
        let blocks = blocks?;
        let mut m = ElimMatrix::new(q[k + 1].len(), q[k].len());
        let (mut rc, mut cc) = (vec![0usize; q[k + 1].len()], vec![0usize; q[k].len()]);
        for &(r, col, _) in blocks.iter().flatten() {
            rc[r as usize] += 1;
            cc[col as usize] += 1;
        }
        m.rows.iter_mut().zip(rc).for_each(|(row, n)| row.reserve_exact(n));
        m.cols.iter_mut().zip(cc).for_each(|(col, n)| col.reserve_exact(n));
        for (r, col, v) in blocks.into_iter().flatten() {
            m.push(r, col, v);
        }
        mats.push(m);
    }
    Some(IntComplex { h_min: c.h_min, q, mats })
}

/// The delooped complex over `Z[H]`, assembled from the pants tables.
/// Falls back to geometric delooping when an entry is not a signed
/// elementary saddle.
pub fn delooped_complex(c: &GeomComplex<ZH>) -> Result<AlgComplex<ZH>, ReduceError> {
    match delooped_int(c, int_tables()) {
        Some(ic) => Ok(ic.to_alg(None)),
        None => deloop_all_geometric(c, DeloopOrder::Forward),
    }
}

/// Deloops every non-special circle and cancels every unit entry.
pub fn reduce_pipeline(c: &GeomComplex<ZH>) -> Result<ReducedComplex, ReduceError> {
    reduce_pipeline_with(c, PivotOrder::Lowest)
}

pub fn reduce_pipeline_with(c: &GeomComplex<ZH>, order: PivotOrder) -> Result<ReducedComplex, ReduceError> {
    let build = || -> Result<IntComplex<i64>, ReduceError> {
        match delooped_int(c, int_tables()) {
            Some(ic) => Ok(ic),
            None => IntComplex::from_alg(&deloop_all_geometric(c, DeloopOrder::Forward)?),
        }
    };
    let complex = eliminate_int(build()?, order, || Ok(build()?.convert()))?;
    Ok(ReducedComplex { complex })
}

/// Cancels every unit entry of an arbitrary graded complex over `Z[H]`.
pub fn eliminate_all(c: &AlgComplex<ZH>, order: PivotOrder) -> Result<ReducedComplex, ReduceError> {
    let complex = eliminate_int(IntComplex::from_alg(c)?, order, || IntComplex::from_alg(c))?;
    Ok(ReducedComplex { complex })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cobordism::{reduce_half_t, reduce_z};
    use crate::complex::{build_cube, check_d_squared_alg};
    use crate::diagram::parse_pd;

    fn zh(s: &str) -> ZH {
        s.parse().unwrap()
    }

    fn qt(s: &str) -> QT {
        s.parse().unwrap()
    }

    #[test]
    fn deloop_identities_over_z() {
        let cfg = CircleConfig::new(2, Some(0));
        let iso = deloop_iso_z(cfg, 1).unwrap();
        let small = CircleConfig::new(1, Some(0));
        let id_small = CobMor::<ZH>::identity(small);
        for (a, p) in [(0, &iso.p_minus), (1, &iso.p_plus)] {
            for (b, i) in [(0, &iso.i_minus), (1, &iso.i_plus)] {
                let m = reduce_z(&compose(i, p).unwrap()).unwrap();
                if a == b {
                    assert_eq!(m, id_small);
                } else {
                    assert!(m.is_zero(), "p{a} i{b} = {m}");
                }
            }
        }
        let round = compose(&iso.p_minus, &iso.i_minus).unwrap().add(&compose(&iso.p_plus, &iso.i_plus).unwrap()).unwrap();
        assert_eq!(reduce_z(&round).unwrap(), reduce_z(&CobMor::identity(cfg)).unwrap());
        assert_eq!(deloop_iso_z(cfg, 0).unwrap_err(), ReduceError::SpecialCircle(0));
    }

    #[test]
    fn deloop_identities_over_q() {
        let cfg = CircleConfig::new(1, None);
        let iso = deloop_iso_q(cfg, 0).unwrap();
        assert_eq!(scalar(&compose(&iso.i_plus, &iso.p_plus).unwrap()), QT::one());
        assert!(scalar(&compose(&iso.i_minus, &iso.p_plus).unwrap()).is_zero());
        let round = compose(&iso.p_minus, &iso.i_minus).unwrap().add(&compose(&iso.p_plus, &iso.i_plus).unwrap()).unwrap();
        assert_eq!(reduce_half_t(&round), reduce_half_t(&CobMor::identity(cfg)));
    }

    #[test]
    fn tables_over_z() {
        let t = AlgebraTablesZ::compute();
        let (m, p) = (Label::Minus as usize, Label::Plus as usize);
        assert_eq!(t.phi, [zh("H"), zh("1")]);
        assert_eq!(t.psi, [zh("1"), zh("0")]);
        assert_eq!(t.m1[p][p], [zh("0"), zh("1")]);
        assert_eq!(t.m1[p][m], [zh("1"), zh("0")]);
        assert_eq!(t.m1[m][p], [zh("1"), zh("0")]);
        assert_eq!(t.m1[m][m], [zh("H"), zh("0")]);
        assert_eq!(t.delta1[p], [[zh("0"), zh("1")], [zh("1"), zh("-H")]]);
        assert_eq!(t.delta1[m], [[zh("1"), zh("0")], [zh("0"), zh("0")]]);
    }

    #[test]
    fn tables_over_q() {
        let t = AlgebraTablesQ::compute();
        let (m, p) = (Label::Minus as usize, Label::Plus as usize);
        assert_eq!(t.m2[p][p], [qt("0"), qt("1")]);
        assert_eq!(t.m2[p][m], [qt("1"), qt("0")]);
        assert_eq!(t.m2[m][m], [qt("0"), qt("1/4*T")]);
        assert_eq!(t.delta2[p], [[qt("0"), qt("1")], [qt("1"), qt("0")]]);
        assert_eq!(t.delta2[m], [[qt("1"), qt("0")], [qt("0"), qt("1/4*T")]]);
    }

    #[test]
    fn circle_with_zero_differential() {
        let c = build_cube(&parse_pd("U,U").unwrap());
        let d = deloop(&c, 0, 0, 1).unwrap();
        let q: Vec<i64> = d.objects[0].iter().map(|o| o.qshift).collect();
        assert_eq!(q, vec![-1, 1]);
    }

    #[test]
    fn fast_path_matches_geometric() {
        for pd in ["PD[X[1,1,2,2]]", "PD[X[4,2,5,1],X[2,6,3,5],X[6,4,1,3]]", "PD[X[4,2,1,1],X[2,3,3,4]]", "PD[X[3,2,4,1],X[2,3,1,4]]"] {
            let c = build_cube(&parse_pd(pd).unwrap());
            let fast = delooped_complex(&c).unwrap();
            let geo = deloop_all_geometric(&c, DeloopOrder::Forward).unwrap();
            assert_eq!(fast, geo, "{pd}");
            assert!(check_d_squared_alg(&fast).is_ok());
            assert!(fast.is_homogeneous());
        }
    }

    #[test]
    fn kink_reduces_to_unknot() {
        let u = reduce_pipeline(&build_cube(&parse_pd("U").unwrap())).unwrap();
        let k = reduce_pipeline(&build_cube(&parse_pd("PD[X[1,1,2,2]]").unwrap())).unwrap();
        assert_eq!(u.complex.q, vec![vec![0]]);
        assert_eq!(k.complex.q[0], vec![0]);
        assert_eq!(k.n_generators(), 1);
        k.check_invariants().unwrap();
    }

    #[test]
    fn trefoil_reduces_to_monomials() {
        let c = build_cube(&parse_pd("PD[X[4,2,5,1],X[2,6,3,5],X[6,4,1,3]]").unwrap());
        let r = reduce_pipeline(&c).unwrap();
        r.check_invariants().unwrap();
        assert_eq!(r.n_generators(), 3);
    }

    fn alg(q: Vec<Vec<i64>>, diffs: Vec<Vec<(usize, usize, &str)>>) -> AlgComplex<ZH> {
        let ds = diffs
            .into_iter()
            .enumerate()
            .map(|(k, es)| {
                let mut m = SparseMatrix::new(q[k + 1].len(), q[k].len());
                for (r, c, v) in es {
                    m.insert(r, c, zh(v));
                }
                m
            })
            .collect();
        AlgComplex { ring: "Z[H]".into(), h_min: 0, graded: true, q, diffs: ds }
    }

    #[test]
    fn single_unit_cancels_to_zero() {
        let c = alg(vec![vec![0], vec![0]], vec![vec![(0, 0, "1")]]);
        let e = eliminate(&c, 0, 0, 0).unwrap();
        assert_eq!(e.total_rank(), 0);
    }

    #[test]
    fn block_cancellation() {
        let c = alg(vec![vec![0, 0], vec![0, 2]], vec![vec![(0, 0, "1"), (1, 1, "H")]]);
        let e = eliminate(&c, 0, 0, 0).unwrap();
        assert_eq!(e.q, vec![vec![0], vec![2]]);
        assert_eq!(e.diffs[0].get(0, 0), Some(&zh("H")));
        assert!(eliminate(&c, 0, 1, 1).is_err());
    }

    #[test]
    fn off_diagonal_corrections() {
        // [[1, 2, 0], [3, 1, H], [0, 0, H^2]] with matching gradings
        let c = alg(
            vec![vec![0, 0, -2], vec![0, 0, 2]],
            vec![vec![(0, 0, "1"), (0, 1, "2"), (1, 0, "3"), (1, 1, "1"), (1, 2, "H"), (2, 2, "H^2")]],
        );
        let e = eliminate(&c, 0, 0, 0).unwrap();
        // remaining block: [[1 - 3*2, H], [0, H]]
        assert_eq!(e.diffs[0].get(0, 0), Some(&zh("-5")));
        assert_eq!(e.diffs[0].get(0, 1), Some(&zh("H")));
        assert_eq!(e.diffs[0].get(1, 1), Some(&zh("H^2")));
        let full = eliminate_all(&c, PivotOrder::Lowest).unwrap();
        assert_eq!(full.n_generators(), 4);
    }
}

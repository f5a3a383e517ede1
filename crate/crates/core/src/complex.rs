//! Graded chain complexes: geometric (cobordism matrices between circle
//! configurations) and algebraic (free modules over a ring), plus the
//! cube-of-resolutions constructor.
//!
//! Differentials are stored per degree as sparse matrices whose entry
//! `(row, col)` maps generator `col` of degree `h` to generator `row` of
//! degree `h + 1`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::cobordism::{compose, CircleConfig, CobMor, Component, Port, SurfaceGen, SurfaceRing};
use crate::diagram::LinkDiagram;
use crate::rings::Ring;
use crate::ZH;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseMatrix<T> {
    pub nrows: usize,
    pub ncols: usize,
    entries: BTreeMap<(usize, usize), T>,
}

impl<T: Clone> SparseMatrix<T> {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, entries: BTreeMap::new() }
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&T> {
        self.entries.get(&(row, col))
    }

    pub fn insert(&mut self, row: usize, col: usize, v: T) {
        assert!(row < self.nrows && col < self.ncols, "entry ({row},{col}) out of range");
        self.entries.insert((row, col), v);
    }

    pub fn remove(&mut self, row: usize, col: usize) -> Option<T> {
        self.entries.remove(&(row, col))
    }

    /// Entries in (row, col) order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &T)> {
        self.entries.iter().map(|(&(r, c), v)| (r, c, v))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn map<U: Clone>(&self, mut f: impl FnMut(&T) -> Option<U>) -> SparseMatrix<U> {
        let mut m = SparseMatrix::new(self.nrows, self.ncols);
        for (&k, v) in &self.entries {
            if let Some(u) = f(v) {
                m.entries.insert(k, u);
            }
        }
        m
    }

    /// Entries grouped by column.
    pub fn columns(&self) -> Vec<Vec<(usize, &T)>> {
        let mut cols = vec![Vec::new(); self.ncols];
        for (&(r, c), v) in &self.entries {
            cols[c].push((r, v));
        }
        cols
    }
}

impl<R: Ring> SparseMatrix<R> {
    /// `self * rhs` (apply `rhs` first).
    pub fn mul(&self, rhs: &SparseMatrix<R>) -> SparseMatrix<R> {
        assert_eq!(self.ncols, rhs.nrows);
        let cols = self.columns();
        let mut acc: BTreeMap<(usize, usize), R> = BTreeMap::new();
        for (&(k, j), b) in &rhs.entries {
            for (i, a) in &cols[k] {
                let e = acc.entry((*i, j)).or_insert_with(R::zero);
                *e = e.clone() + (*a).clone() * b.clone();
            }
        }
        acc.retain(|_, v| !v.is_zero());
        SparseMatrix { nrows: self.nrows, ncols: rhs.ncols, entries: acc }
    }

    pub fn to_dense(&self) -> crate::Matrix<R> {
        let mut m = crate::Matrix::zeros(self.nrows, self.ncols);
        for (&(r, c), v) in &self.entries {
            m.set(r, c, v.clone());
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeomObject {
    pub config: CircleConfig,
    pub qshift: i64,
    /// Cube vertex this object came from, when built by [`build_cube`].
    pub vertex: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct GeomComplex<C: SurfaceRing = ZH> {
    pub h_min: i64,
    pub objects: Vec<Vec<GeomObject>>,
    /// `diffs[k]` maps degree `h_min + k` to `h_min + k + 1`.
    pub diffs: Vec<SparseMatrix<CobMor<C>>>,
}

impl<C: SurfaceRing> GeomComplex<C> {
    pub fn h_max(&self) -> i64 {
        self.h_min + self.objects.len() as i64 - 1
    }

    pub fn degree_index(&self, h: i64) -> Option<usize> {
        let k = h - self.h_min;
        (k >= 0 && (k as usize) < self.objects.len()).then_some(k as usize)
    }

    pub fn n_objects(&self) -> usize {
        self.objects.iter().map(Vec::len).sum()
    }

    /// Every entry `O{a} -> O'{b}` satisfies `deg(entry) + b - a = 0`, where
    /// a surface has degree `chi` and the ring variable its own degree.
    pub fn is_homogeneous(&self) -> bool {
        self.diffs.iter().enumerate().all(|(k, d)| {
            d.iter().all(|(r, c, m)| {
                let (a, b) = (self.objects[k][c].qshift, self.objects[k + 1][r].qshift);
                m.terms().all(|(g, coef)| {
                    coef.exponents().iter().all(|&e| g.euler_char() + C::VAR_DEGREE * e as i64 + b - a == 0)
                })
            })
        })
    }

    pub fn map_coeffs<D: SurfaceRing>(&self, f: impl Fn(&C) -> D) -> GeomComplex<D> {
        GeomComplex {
            h_min: self.h_min,
            objects: self.objects.clone(),
            diffs: self.diffs.iter().map(|d| d.map(|m| Some(m.map_coeffs(&f)))).collect(),
        }
    }

    pub fn to_json(&self) -> Value {
        let degrees: Vec<Value> = self
            .objects
            .iter()
            .enumerate()
            .map(|(k, objs)| {
                json!({
                    "h": self.h_min + k as i64,
                    "objects": objs.iter().map(|o| json!({
                        "circles": o.config.count,
                        "special": o.config.special.map_or(-1, |s| s as i64),
                        "q": o.qshift,
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        let diffs: Vec<Value> = self
            .diffs
            .iter()
            .enumerate()
            .map(|(k, d)| {
                json!({
                    "h": self.h_min + k as i64,
                    "entries": d.iter().map(|(r, c, m)| json!([r, c, m.to_string()])).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({ "degrees": degrees, "diffs": diffs })
    }
}

/// The cube of resolutions with its signed saddle differentials.
pub fn build_cube(d: &LinkDiagram) -> GeomComplex {
    let n = d.n_crossings();
    let signs = d.crossing_signs();
    let (n_plus, n_minus) = (signs.n_plus as i64, signs.n_minus as i64);
    let smoothings: Vec<_> = (0..1u64 << n).into_par_iter().map(|v| d.resolve(v)).collect();

    // Objects of degree |v| - n_minus, ordered by vertex number.
    let mut objects: Vec<Vec<GeomObject>> = vec![Vec::new(); n + 1];
    let mut position = vec![0usize; 1 << n];
    for (v, s) in smoothings.iter().enumerate() {
        let w = (v as u64).count_ones() as usize;
        position[v] = objects[w].len();
        objects[w].push(GeomObject {
            config: CircleConfig::new(s.circles.len(), Some(s.special_index)),
            qshift: w as i64 + n_plus - 2 * n_minus,
            vertex: Some(v as u64),
        });
    }

    let edges: Vec<Vec<(usize, usize, CobMor<ZH>)>> = (0..1u64 << n)
        .into_par_iter()
        .map(|v| {
            let mut out = Vec::new();
            for i in 0..n {
                if v >> i & 1 == 1 {
                    continue;
                }
                let w = v | 1 << i;
                let sign = if (v & ((1 << i) - 1)).count_ones() % 2 == 0 { 1 } else { -1 };
                let m = saddle(d, &smoothings[v as usize], &smoothings[w as usize], i, sign);
                out.push((position[w as usize], position[v as usize], m));
            }
            out
        })
        .collect();

    let mut diffs: Vec<SparseMatrix<CobMor<ZH>>> =
        (0..n).map(|k| SparseMatrix::new(objects[k + 1].len(), objects[k].len())).collect();
    for (v, es) in edges.into_iter().enumerate() {
        let k = (v as u64).count_ones() as usize;
        for (r, c, m) in es {
            diffs[k].insert(r, c, m);
        }
    }
    GeomComplex { h_min: -n_minus, objects, diffs }
}

/// Saddle at crossing `i` from smoothing `s` (bit 0) to `t` (bit 1), with
/// identity tubes on the untouched circles.
fn saddle(
    d: &LinkDiagram,
    s: &crate::diagram::Smoothing,
    t: &crate::diagram::Smoothing,
    i: usize,
    sign: i64,
) -> CobMor<ZH> {
    let [a, b, c, _] = d.crossings()[i];
    let mut touched_in = vec![s.circle_of(a), s.circle_of(c)];
    touched_in.dedup();
    let mut touched_out = vec![t.circle_of(a), t.circle_of(b)];
    touched_out.dedup();
    let mut ports: Vec<Port> = touched_in.iter().map(|&x| Port::In(x as u32)).collect();
    ports.extend(touched_out.iter().map(|&x| Port::Out(x as u32)));
    let mut comps = vec![Component::new(0, ports)];
    for (ci, circle) in s.circles.iter().enumerate() {
        if touched_in.contains(&ci) {
            continue;
        }
        let tc = t.circle_of(circle[0]);
        comps.push(Component::new(0, vec![Port::In(ci as u32), Port::Out(tc as u32)]));
    }
    let source = CircleConfig::new(s.circles.len(), Some(s.special_index));
    let target = CircleConfig::new(t.circles.len(), Some(t.special_index));
    CobMor::from_gen(source, target, SurfaceGen::new(comps), ZH::from_i64(sign)).expect("saddle partitions ports")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DSquaredFailure {
    pub h: i64,
    pub row: usize,
    pub col: usize,
}

/// Every composite `d_{h+1} ∘ d_h` entry reduces to zero.
pub fn check_d_squared_geom<C: SurfaceRing>(c: &GeomComplex<C>) -> Result<(), DSquaredFailure> {
    for k in 0..c.diffs.len().saturating_sub(1) {
        let (d0, d1) = (&c.diffs[k], &c.diffs[k + 1]);
        let cols1 = d1.columns();
        let mut acc: BTreeMap<(usize, usize), CobMor<C>> = BTreeMap::new();
        for (mid, src, f) in d0.iter() {
            for (tgt, g) in &cols1[mid] {
                let h = compose(f, g).expect("composable cube entries");
                match acc.remove(&(*tgt, src)) {
                    Some(prev) => {
                        acc.insert((*tgt, src), prev.add(&h).expect("same objects"));
                    }
                    None => {
                        acc.insert((*tgt, src), h);
                    }
                }
            }
        }
        for ((r, s), m) in acc {
            if !m.is_zero() && !C::reduce(&m).map(|x| x.is_zero()).unwrap_or(false) {
                return Err(DSquaredFailure { h: c.h_min + k as i64, row: r, col: s });
            }
        }
    }
    Ok(())
}

/// A complex of free modules over `R`. Generators carry a q-degree when
/// the complex is graded.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgComplex<R: Ring> {
    pub ring: String,
    pub h_min: i64,
    pub graded: bool,
    /// `q[k][i]`: q-degree of generator `i` in degree `h_min + k` (0 when ungraded).
    pub q: Vec<Vec<i64>>,
    pub diffs: Vec<SparseMatrix<R>>,
}

impl<R: Ring> AlgComplex<R> {
    pub fn rank(&self, k: usize) -> usize {
        self.q[k].len()
    }

    pub fn total_rank(&self) -> usize {
        self.q.iter().map(Vec::len).sum()
    }

    pub fn map_ring<S: Ring>(&self, ring: &str, f: impl Fn(&R) -> S) -> AlgComplex<S> {
        AlgComplex {
            ring: ring.to_string(),
            h_min: self.h_min,
            graded: self.graded,
            q: self.q.clone(),
            diffs: self.diffs.iter().map(|d| d.map(|x| Some(f(x)).filter(|y| !y.is_zero()))).collect(),
        }
    }

    pub fn ungraded(mut self) -> Self {
        self.graded = false;
        for qs in &mut self.q {
            qs.iter_mut().for_each(|q| *q = 0);
        }
        self
    }

    pub fn to_json(&self) -> Value {
        let degrees: Vec<Value> = self
            .q
            .iter()
            .enumerate()
            .map(|(k, qs)| {
                let objs: Vec<Value> = qs
                    .iter()
                    .map(|q| if self.graded { json!({"circles": 0, "special": -1, "q": q}) } else { json!({"circles": 0, "special": -1}) })
                    .collect();
                json!({"h": self.h_min + k as i64, "objects": objs})
            })
            .collect();
        let diffs: Vec<Value> = self
            .diffs
            .iter()
            .enumerate()
            .map(|(k, d)| {
                json!({
                    "h": self.h_min + k as i64,
                    "entries": d.iter().map(|(r, c, x)| json!([r, c, x.to_string()])).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({"ring": self.ring, "degrees": degrees, "diffs": diffs})
    }
}

pub fn check_d_squared_alg<R: Ring>(c: &AlgComplex<R>) -> Result<(), DSquaredFailure> {
    for k in 0..c.diffs.len().saturating_sub(1) {
        let p = c.diffs[k + 1].mul(&c.diffs[k]);
        let first = p.iter().next().map(|(r, s, _)| (r, s));
        if let Some((row, col)) = first {
            return Err(DSquaredFailure { h: c.h_min + k as i64, row, col });
        }
    }
    Ok(())
}

impl AlgComplex<ZH> {
    /// Entries `c*H^k` from q-degree `a` to `b` satisfy `b = a + 2k`.
    pub fn is_homogeneous(&self) -> bool {
        self.diffs.iter().enumerate().all(|(k, d)| {
            d.iter().all(|(r, c, x)| {
                let (a, b) = (self.q[k][c], self.q[k + 1][r]);
                x.terms().all(|(e, _)| b == a + 2 * *e as i64)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::parse_pd;

    const TREFOIL: &str = "PD[X[4,2,5,1],X[2,6,3,5],X[6,4,1,3]]";

    #[test]
    fn unknot_cube() {
        let c = build_cube(&parse_pd("U").unwrap());
        assert_eq!(c.objects.len(), 1);
        assert_eq!(c.objects[0][0].config, CircleConfig::new(1, Some(0)));
        assert_eq!(c.objects[0][0].qshift, 0);
        assert!(c.diffs.is_empty());
        assert!(check_d_squared_geom(&c).is_ok());
    }

    #[test]
    fn kink_cube() {
        let c = build_cube(&parse_pd("PD[X[1,1,2,2]]").unwrap());
        assert_eq!((c.h_min, c.objects.len()), (0, 2));
        assert_eq!(c.diffs[0].nnz(), 1);
        assert!(c.is_homogeneous());
    }

    #[test]
    fn trefoil_cube() {
        let c = build_cube(&parse_pd(TREFOIL).unwrap());
        assert_eq!(c.n_objects(), 8);
        assert_eq!(c.diffs.iter().map(SparseMatrix::nnz).sum::<usize>(), 12);
        assert!(c.is_homogeneous());
        assert!(check_d_squared_geom(&c).is_ok());
    }

    #[test]
    fn flipped_sign_breaks_d_squared() {
        let mut c = build_cube(&parse_pd(TREFOIL).unwrap());
        let (r, col, m) = c.diffs[0].iter().next().map(|(r, c, m)| (r, c, m.clone())).unwrap();
        c.diffs[0].insert(r, col, m.scale(&ZH::from_i64(-1)));
        assert!(check_d_squared_geom(&c).is_err());
    }

    #[test]
    fn zero_complex_passes() {
        let z: AlgComplex<ZH> = AlgComplex { ring: "Z[H]".into(), h_min: 0, graded: true, q: vec![vec![]], diffs: vec![] };
        assert!(check_d_squared_alg(&z).is_ok());
        assert!(z.is_homogeneous());
    }

    #[test]
    fn sparse_product() {
        let mut a = SparseMatrix::<ZH>::new(1, 2);
        a.insert(0, 0, ZH::from_i64(1));
        a.insert(0, 1, ZH::from_i64(-1));
        let mut b = SparseMatrix::<ZH>::new(2, 1);
        b.insert(0, 0, ZH::from_i64(3));
        b.insert(1, 0, ZH::from_i64(3));
        assert_eq!(a.mul(&b).nnz(), 0);
    }
}

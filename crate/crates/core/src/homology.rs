//! Smith normal form, bigraded homology, Euler characteristics and the
//! Kauffman state sum.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::checked::CheckedInt;
use crate::complex::{check_d_squared_alg, AlgComplex, DSquaredFailure, GeomComplex, SparseMatrix};
use crate::diagram::LinkDiagram;
use crate::promote::{promote, FrobeniusSystem, NumericFrobenius, NumericPromotion, PromoteError};
use crate::reduce::{cancel_integer_units, ReducedComplex};
use crate::rings::{lcm_denominators, Ring};
use crate::{LaurentPoly, ZH};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomologyError {
    #[error("d² ≠ 0 at degree {} entry ({}, {})", .0.h, .0.row, .0.col)]
    DSquared(DSquaredFailure),
    #[error("entry at degree {h} ({row},{col}) changes the q-degree of an integer complex")]
    NotHomogeneous { h: i64, row: usize, col: usize },
    #[error(transparent)]
    Promote(#[from] PromoteError),
}

/// Invariant factors `d₁ | d₂ | … | d_rank`, all positive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnfResult {
    pub diagonal: Vec<BigInt>,
    pub rank: usize,
}

#[derive(Debug)]
struct Overflow;

fn min_abs_entry<T: CheckedInt>(a: &[Vec<T>], t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, row) in a.iter().enumerate().skip(t) {
        for (j, x) in row.iter().enumerate().skip(t) {
            if x.c_is_zero() {
                continue;
            }
            if best.is_none_or(|(bi, bj)| x.abs_cmp(&a[bi][bj]) == Ordering::Less) {
                best = Some((i, j));
                if x.c_is_unit() {
                    return best;
                }
            }
        }
    }
    best
}

/// Diagonalizes `a` in place with minimal-absolute-value pivots; returns
/// the (unnormalized) diagonal.
fn diagonalize<T: CheckedInt>(mut a: Vec<Vec<T>>) -> Result<Vec<T>, Overflow> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        let Some((pi, pj)) = min_abs_entry(&a, t) else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut clean = true;
            for i in t + 1..rows {
                if a[i][t].c_is_zero() {
                    continue;
                }
                let (q, _) = a[i][t].c_divrem(&a[t][t]).ok_or(Overflow)?;
                for j in t..cols {
                    let v = a[i][j].c_sub(&q.c_mul(&a[t][j]).ok_or(Overflow)?).ok_or(Overflow)?;
                    a[i][j] = v;
                }
                clean &= a[i][t].c_is_zero();
            }
            for j in t + 1..cols {
                if a[t][j].c_is_zero() {
                    continue;
                }
                let (q, _) = a[t][j].c_divrem(&a[t][t]).ok_or(Overflow)?;
                for i in t..rows {
                    let v = a[i][j].c_sub(&q.c_mul(&a[i][t]).ok_or(Overflow)?).ok_or(Overflow)?;
                    a[i][j] = v;
                }
                clean &= a[t][j].c_is_zero();
            }
            if clean {
                break;
            }
            // A remainder smaller than the pivot survives; move it in.
            let mut best = (t, t);
            for i in t + 1..rows {
                if !a[i][t].c_is_zero() && a[i][t].abs_cmp(&a[best.0][best.1]) == Ordering::Less {
                    best = (i, t);
                }
            }
            for j in t + 1..cols {
                if !a[t][j].c_is_zero() && a[t][j].abs_cmp(&a[best.0][best.1]) == Ordering::Less {
                    best = (t, j);
                }
            }
            a.swap(t, best.0);
            for row in a.iter_mut() {
                row.swap(t, best.1);
            }
        }
        diag.push(a[t][t].clone());
        t += 1;
    }
    Ok(diag)
}

/// Normalizes a diagonal into a divisibility chain of positive entries.
fn invariant_factors(mut d: Vec<BigInt>) -> Vec<BigInt> {
    for x in d.iter_mut() {
        *x = x.abs();
    }
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            if !d[j].is_multiple_of(&d[i]) {
                let g = d[i].gcd(&d[j]);
                let l = d[i].lcm(&d[j]);
                d[i] = g;
                d[j] = l;
            }
        }
    }
    d
}

/// Smith normal form of a dense integer matrix given by rows.
pub fn snf(rows: &[Vec<BigInt>]) -> SnfResult {
    let small: Option<Vec<Vec<i64>>> = rows.iter().map(|r| r.iter().map(ToPrimitive::to_i64).collect()).collect();
    let diag = match small.map(diagonalize) {
        Some(Ok(d)) => d.iter().map(|x| x.to_bigint()).collect(),
        _ => diagonalize(rows.to_vec()).unwrap_or_else(|_| unreachable!("BigInt never overflows")),
    };
    let diagonal = invariant_factors(diag);
    SnfResult { rank: diagonal.len(), diagonal }
}

/// Free rank and torsion (prime-power orders, ascending) at one bidegree.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HomologyEntry {
    pub free: usize,
    pub torsion: Vec<BigInt>,
}

impl HomologyEntry {
    pub fn is_zero(&self) -> bool {
        self.free == 0 && self.torsion.is_empty()
    }
}

/// Nonzero homology groups keyed by `(h, q)`; `q` is 0 for ungraded
/// complexes.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct HomologyTable {
    pub graded: bool,
    pub entries: BTreeMap<(i64, i64), HomologyEntry>,
}

fn prime_powers(n: &BigInt) -> Vec<BigInt> {
    let mut n = n.abs();
    let mut out = Vec::new();
    let mut p = BigInt::from(2);
    while &p * &p <= n {
        let mut pk = BigInt::one();
        while n.is_multiple_of(&p) {
            n /= &p;
            pk *= &p;
        }
        if !pk.is_one() {
            out.push(pk);
        }
        p += 1;
    }
    if n > BigInt::one() {
        out.push(n);
    }
    out
}

impl HomologyTable {
    pub fn total_free(&self) -> usize {
        self.entries.values().map(|e| e.free).sum()
    }

    pub fn torsion_count(&self) -> usize {
        self.entries.values().map(|e| e.torsion.len()).sum()
    }

    /// Drops torsion, giving ranks over `Q`.
    pub fn rationalize(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .filter(|(_, e)| e.free > 0)
            .map(|(k, e)| (*k, HomologyEntry { free: e.free, torsion: Vec::new() }))
            .collect();
        Self { graded: self.graded, entries }
    }

    pub fn to_json(&self) -> Value {
        let num = |x: &BigInt| x.to_i64().map_or_else(|| json!(x.to_string()), |v| json!(v));
        let entries: Vec<Value> = self
            .entries
            .iter()
            .map(|(&(h, q), e)| {
                let torsion: Vec<Value> = e.torsion.iter().map(num).collect();
                if self.graded {
                    json!({"h": h, "q": q, "free": e.free, "torsion": torsion})
                } else {
                    json!({"h": h, "free": e.free, "torsion": torsion})
                }
            })
            .collect();
        json!({ "entries": entries })
    }

    /// Free ranks as `t^h q^q` terms, `h` ascending and `q` descending.
    pub fn poincare(&self) -> String {
        let mut keys: Vec<&(i64, i64)> = self.entries.iter().filter(|(_, e)| e.free > 0).map(|(k, _)| k).collect();
        keys.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)));
        let terms: Vec<String> = keys
            .into_iter()
            .map(|k| {
                let r = self.entries[k].free;
                let coef = if r == 1 { String::new() } else { format!("{r} ") };
                if self.graded {
                    format!("{coef}t^{} q^{}", k.0, k.1)
                } else {
                    format!("{coef}t^{}", k.0)
                }
            })
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join(" + ")
        }
    }

    /// One line per nonzero group, e.g. `h=2 q=5: Z + Z/2`.
    pub fn to_text(&self) -> String {
        self.to_text_over("Z")
    }

    /// As [`Self::to_text`] with free summands written as `base`.
    pub fn to_text_over(&self, base: &str) -> String {
        let mut s = String::new();
        for (&(h, q), e) in &self.entries {
            let mut parts = Vec::new();
            match e.free {
                0 => {}
                1 => parts.push(base.to_string()),
                r => parts.push(format!("{base}^{r}")),
            }
            parts.extend(e.torsion.iter().map(|t| format!("Z/{t}")));
            if self.graded {
                let _ = writeln!(s, "h={h} q={q}: {}", parts.join(" + "));
            } else {
                let _ = writeln!(s, "h={h}: {}", parts.join(" + "));
            }
        }
        if s.is_empty() {
            s.push_str("0\n");
        }
        s
    }
}

/// How [`homology_with`] prepares blocks before SNF.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HomologyMethod {
    /// Dense SNF of every `(h, q)` block.
    #[default]
    Snf,
    /// Cancel `±1` entries sparsely first, then SNF what is left.
    CancelUnits,
}

/// Homology of a complex over `Z`, graded by q when the complex is, by
/// dense SNF per block.
pub fn homology(c: &AlgComplex<BigInt>) -> Result<HomologyTable, HomologyError> {
    homology_with(c, HomologyMethod::Snf)
}

/// Blocks of each `(h, q)` go through SNF in parallel.
pub fn homology_with(c: &AlgComplex<BigInt>, method: HomologyMethod) -> Result<HomologyTable, HomologyError> {
    check_d_squared_alg(c).map_err(HomologyError::DSquared)?;
    for (k, d) in c.diffs.iter().enumerate() {
        if let Some((row, col, _)) = d.iter().find(|(r, s, _)| c.q[k + 1][*r] != c.q[k][*s]) {
            return Err(HomologyError::NotHomogeneous { h: c.h_min + k as i64, row, col });
        }
    }
    let cancelled;
    let small = match method {
        HomologyMethod::Snf => c,
        HomologyMethod::CancelUnits => {
            cancelled = cancel_integer_units(c);
            &cancelled
        }
    };

    // Generators of each degree grouped by q, with their block positions.
    let groups: Vec<BTreeMap<i64, Vec<usize>>> = small
        .q
        .iter()
        .map(|qs| {
            let mut g: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
            for (i, &q) in qs.iter().enumerate() {
                g.entry(q).or_default().push(i);
            }
            g
        })
        .collect();
    let mut jobs: Vec<(usize, i64)> = Vec::new();
    for k in 0..small.diffs.len() {
        for q in groups[k].keys() {
            if groups[k + 1].contains_key(q) {
                jobs.push((k, *q));
            }
        }
    }
    let block = |k: usize, q: i64| -> Vec<Vec<BigInt>> {
        let (src, tgt) = (&groups[k][&q], &groups[k + 1][&q]);
        let col_pos: BTreeMap<usize, usize> = src.iter().enumerate().map(|(a, &i)| (i, a)).collect();
        let row_pos: BTreeMap<usize, usize> = tgt.iter().enumerate().map(|(a, &i)| (i, a)).collect();
        let mut m = vec![vec![BigInt::zero(); src.len()]; tgt.len()];
        for (r, s, x) in small.diffs[k].iter() {
            if let (Some(&a), Some(&b)) = (row_pos.get(&r), col_pos.get(&s)) {
                m[a][b] = x.clone();
            }
        }
        m
    };
    let results: BTreeMap<(usize, i64), SnfResult> =
        jobs.par_iter().map(|&(k, q)| ((k, q), snf(&block(k, q)))).collect::<Vec<_>>().into_iter().collect();

    let mut table = HomologyTable { graded: c.graded, entries: BTreeMap::new() };
    for (k, g) in groups.iter().enumerate() {
        for (&q, gens) in g {
            let out_rank = results.get(&(k, q)).map_or(0, |r| r.rank);
            let incoming = k.checked_sub(1).and_then(|j| results.get(&(j, q)));
            let in_rank = incoming.map_or(0, |r| r.rank);
            let torsion: Vec<BigInt> = {
                let mut t: Vec<BigInt> = incoming
                    .map(|r| r.diagonal.iter().filter(|d| !d.is_one()).flat_map(prime_powers).collect())
                    .unwrap_or_default();
                t.sort();
                t
            };
            let entry = HomologyEntry { free: gens.len() - out_rank - in_rank, torsion };
            if !entry.is_zero() {
                table.entries.insert((c.h_min + k as i64, q), entry);
            }
        }
    }
    Ok(table)
}

/// Ranks over `Q`. Each differential is scaled by the lcm of its
/// denominators, which changes neither `d² = 0` nor any rank.
pub fn homology_q(c: &AlgComplex<BigRational>) -> Result<HomologyTable, HomologyError> {
    homology_q_with(c, HomologyMethod::Snf)
}

pub fn homology_q_with(c: &AlgComplex<BigRational>, method: HomologyMethod) -> Result<HomologyTable, HomologyError> {
    let diffs: Vec<SparseMatrix<BigInt>> = c
        .diffs
        .iter()
        .map(|d| {
            let l = BigRational::from_integer(lcm_denominators(d.iter().map(|(_, _, x)| x)));
            d.map(|x| Some((x * &l).to_integer()))
        })
        .collect();
    let z = AlgComplex { ring: "Z".into(), h_min: c.h_min, graded: c.graded, q: c.q.clone(), diffs };
    Ok(homology_with(&z, method)?.rationalize())
}

/// A complex over `Z` or `Q`.
#[derive(Clone, Debug, PartialEq)]
pub enum NumericComplex {
    Z(AlgComplex<BigInt>),
    Q(AlgComplex<BigRational>),
}

impl NumericComplex {
    pub fn homology(&self) -> Result<HomologyTable, HomologyError> {
        self.homology_with(HomologyMethod::Snf)
    }

    pub fn homology_with(&self, method: HomologyMethod) -> Result<HomologyTable, HomologyError> {
        match self {
            NumericComplex::Z(c) => homology_with(c, method),
            NumericComplex::Q(c) => homology_q_with(c, method),
        }
    }

    pub fn euler_characteristic(&self) -> LaurentPoly {
        match self {
            NumericComplex::Z(c) => euler_characteristic(c),
            NumericComplex::Q(c) => euler_characteristic(c),
        }
    }

    pub fn check_d_squared(&self) -> Result<(), DSquaredFailure> {
        match self {
            NumericComplex::Z(c) => check_d_squared_alg(c),
            NumericComplex::Q(c) => check_d_squared_alg(c),
        }
    }

    pub fn total_rank(&self) -> usize {
        match self {
            NumericComplex::Z(c) => c.total_rank(),
            NumericComplex::Q(c) => c.total_rank(),
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            NumericComplex::Z(c) => c.to_json(),
            NumericComplex::Q(c) => c.to_json(),
        }
    }
}

pub fn promote_numeric(rc: &ReducedComplex, p: &NumericPromotion) -> NumericComplex {
    match p {
        NumericPromotion::Z(p) => NumericComplex::Z(promote(rc, p)),
        NumericPromotion::Q(p) => NumericComplex::Q(promote(rc, p)),
    }
}

pub fn naive_numeric(cube: &GeomComplex<ZH>, f: &NumericFrobenius) -> Result<NumericComplex, PromoteError> {
    Ok(match f {
        NumericFrobenius::Z(f) => NumericComplex::Z(crate::promote::naive_tqft(cube, f)?),
        NumericFrobenius::Q(f) => NumericComplex::Q(crate::promote::naive_tqft(cube, f)?),
    })
}

/// Homology through the reduced complex.
pub fn promoted_homology(rc: &ReducedComplex, p: &NumericPromotion) -> Result<HomologyTable, HomologyError> {
    promote_numeric(rc, p).homology()
}

/// Homology through the full-cube TQFT.
pub fn naive_homology(cube: &GeomComplex<ZH>, f: &NumericFrobenius) -> Result<HomologyTable, HomologyError> {
    naive_numeric(cube, f)?.homology()
}

/// `Σ (-1)^h q^deg` over generators.
pub fn euler_characteristic<R: Ring>(c: &AlgComplex<R>) -> LaurentPoly {
    let mut acc: BTreeMap<i64, BigInt> = BTreeMap::new();
    for (k, qs) in c.q.iter().enumerate() {
        let sign = if (c.h_min + k as i64).rem_euclid(2) == 0 { 1 } else { -1 };
        for &q in qs {
            *acc.entry(q).or_insert_with(BigInt::zero) += sign;
        }
    }
    laurent(acc)
}

/// `Σ (-1)^h rank · q^q` over free parts.
pub fn euler_characteristic_table(t: &HomologyTable) -> LaurentPoly {
    let mut acc: BTreeMap<i64, BigInt> = BTreeMap::new();
    for (&(h, q), e) in &t.entries {
        let sign = if h.rem_euclid(2) == 0 { 1 } else { -1 };
        *acc.entry(q).or_insert_with(BigInt::zero) += sign * e.free as i64;
    }
    laurent(acc)
}

fn laurent(acc: BTreeMap<i64, BigInt>) -> LaurentPoly {
    LaurentPoly::from_terms(acc.into_iter().map(|(q, c)| (i32::try_from(q).expect("q-degree fits i32"), c)))
}

/// `Σ_v (-1)^{|v| - n₋} q^{|v| + n₊ - 2n₋} (q + q⁻¹)^{#circles(v)}`.
pub fn state_sum(d: &LinkDiagram) -> LaurentPoly {
    let n = d.n_crossings();
    let signs = d.crossing_signs();
    let (np, nm) = (signs.n_plus as i64, signs.n_minus as i64);
    // counts[(|v|, circles)] = number of vertices.
    let counts: BTreeMap<(u32, usize), u64> = (0..1u64 << n)
        .into_par_iter()
        .map(|v| {
            let mut m = BTreeMap::new();
            m.insert((v.count_ones(), d.resolve(v).circles.len()), 1u64);
            m
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, c) in b {
                *a.entry(k).or_insert(0) += c;
            }
            a
        });
    let loop_value = LaurentPoly::from_terms([(1, BigInt::one()), (-1, BigInt::one())]);
    let mut total = LaurentPoly::zero();
    for ((w, circles), count) in counts {
        let w = w as i64;
        let sign: i64 = if (w - nm).rem_euclid(2) == 0 { 1 } else { -1 };
        let shift = LaurentPoly::monomial(BigInt::from(sign) * BigInt::from(count), (w + np - 2 * nm) as i32);
        total = total + shift * loop_value.pow(circles as u32);
    }
    total
}

/// Convenience for the standard theory: Frobenius system `(0, 0)` over `Z`.
pub fn standard_frobenius() -> NumericFrobenius {
    NumericFrobenius::Z(FrobeniusSystem::from_ht("Z", BigInt::zero(), BigInt::zero()))
}

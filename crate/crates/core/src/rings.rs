//! Exact coefficient rings: integers, rationals and polynomials over them.
//!
//! Every ring used in the pipeline implements [`Ring`]. Polynomials are a
//! single generic type [`Poly`] parameterized by the variable symbol, the
//! exponent type (`u32` for ordinary polynomials, `i32` for Laurent
//! polynomials) and the coefficient ring. Nesting gives multivariate rings,
//! e.g. `Z[h,t] = Poly<'h', u32, Poly<'t', u32, BigInt>>`.

use std::collections::BTreeMap;
use std::fmt::{self, Debug, Display};
use std::hash::Hash;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RingError {
    #[error("variable mismatch: unexpected variable '{found}' (ring has {expected})")]
    VariableMismatch { found: char, expected: String },
    #[error("coefficient {0} is not an integer")]
    NotIntegral(String),
    #[error("negative exponent {0} in a polynomial ring")]
    NegativeExponent(i64),
    #[error("cannot parse ring element {0:?}")]
    Syntax(String),
}

/// A commutative ring with exact arithmetic.
pub trait Ring:
    Clone
    + PartialEq
    + Debug
    + Display
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_int(n: &BigInt) -> Self;

    fn from_i64(n: i64) -> Self {
        Self::from_int(&BigInt::from(n))
    }

    /// Multiplicative inverse when `self` is a unit, `None` otherwise.
    fn unit_inverse(&self) -> Option<Self>;

    fn is_unit(&self) -> bool {
        self.unit_inverse().is_some()
    }

    /// Splits the element into (is-negative, text of the absolute value,
    /// needs-parentheses-as-a-factor) for term printing.
    fn display_parts(&self) -> (bool, String, bool);

    /// Builds `coef * prod(var^exp)`; fails on foreign variables.
    fn from_monomial(coef: &BigRational, vars: &[(char, i64)]) -> Result<Self, RingError>;

    fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = acc * self.clone();
        }
        acc
    }
}

pub type Rational = BigRational;

impl Ring for BigInt {
    fn from_int(n: &BigInt) -> Self {
        n.clone()
    }
    fn unit_inverse(&self) -> Option<Self> {
        if self.abs().is_one() {
            Some(self.clone())
        } else {
            None
        }
    }
    fn display_parts(&self) -> (bool, String, bool) {
        (self.is_negative(), self.abs().to_string(), false)
    }
    fn from_monomial(coef: &BigRational, vars: &[(char, i64)]) -> Result<Self, RingError> {
        if let Some(&(v, _)) = vars.iter().find(|(_, e)| *e != 0) {
            return Err(RingError::VariableMismatch { found: v, expected: "no variables".into() });
        }
        if !coef.is_integer() {
            return Err(RingError::NotIntegral(coef.to_string()));
        }
        Ok(coef.to_integer())
    }
}

impl Ring for BigRational {
    fn from_int(n: &BigInt) -> Self {
        BigRational::from_integer(n.clone())
    }
    fn unit_inverse(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(self.recip())
        }
    }
    fn display_parts(&self) -> (bool, String, bool) {
        let a = self.abs();
        let parens = !a.is_integer();
        (self.is_negative(), a.to_string(), parens)
    }
    fn from_monomial(coef: &BigRational, vars: &[(char, i64)]) -> Result<Self, RingError> {
        if let Some(&(v, _)) = vars.iter().find(|(_, e)| *e != 0) {
            return Err(RingError::VariableMismatch { found: v, expected: "no variables".into() });
        }
        Ok(coef.clone())
    }
}

/// Exponent type of a [`Poly`]: `u32` (polynomials) or `i32` (Laurent).
pub trait Exponent:
    Copy + Ord + Hash + Debug + Display + Add<Output = Self> + Zero + Send + Sync + 'static
{
    /// Print order of terms: polynomials print highest degree first,
    /// Laurent polynomials lowest first.
    const DESCENDING: bool;
    fn from_i64(v: i64) -> Option<Self>;
    fn to_i64(self) -> i64;
}

impl Exponent for u32 {
    const DESCENDING: bool = true;
    fn from_i64(v: i64) -> Option<Self> {
        u32::try_from(v).ok()
    }
    fn to_i64(self) -> i64 {
        self as i64
    }
}

impl Exponent for i32 {
    const DESCENDING: bool = false;
    fn from_i64(v: i64) -> Option<Self> {
        i32::try_from(v).ok()
    }
    fn to_i64(self) -> i64 {
        self as i64
    }
}

/// Univariate polynomial in the variable `X` with exponents `I` and
/// coefficients `R`. No zero coefficient is ever stored.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Poly<const X: char, I: Exponent, R: Ring> {
    terms: BTreeMap<I, R>,
}

impl<const X: char, I: Exponent, R: Ring> Poly<X, I, R> {
    pub const VAR: char = X;

    pub fn from_terms<T: IntoIterator<Item = (I, R)>>(terms: T) -> Self {
        let mut p = Self { terms: BTreeMap::new() };
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn constant(c: R) -> Self {
        Self::monomial(c, I::zero())
    }

    pub fn monomial(c: R, e: I) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(e, c);
        }
        Self { terms }
    }

    /// The variable itself.
    pub fn var() -> Self
    where
        I: From<u8>,
    {
        Self::monomial(R::one(), I::from(1u8))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&I, &R)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: I) -> R {
        self.terms.get(&e).cloned().unwrap_or_else(R::zero)
    }

    pub fn degree(&self) -> Option<I> {
        self.terms.keys().next_back().copied()
    }

    pub fn min_degree(&self) -> Option<I> {
        self.terms.keys().next().copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, e: I, c: R) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&e) {
            Some(old) => {
                let s = old + c;
                if !s.is_zero() {
                    self.terms.insert(e, s);
                }
            }
            None => {
                self.terms.insert(e, c);
            }
        }
    }

    /// `Some((c, e))` iff the polynomial is exactly `c * X^e` with `c != 0`.
    pub fn as_monomial(&self) -> Option<(&R, I)> {
        if self.terms.len() == 1 {
            let (e, c) = self.terms.iter().next().unwrap();
            Some((c, *e))
        } else {
            None
        }
    }

    /// Drops zero coefficients; a no-op on values built through the API.
    pub fn normalize(self) -> Self {
        Self::from_terms(self.terms)
    }

    pub fn scale(&self, c: &R) -> Self {
        Self::from_terms(self.terms.iter().map(|(e, x)| (*e, x.clone() * c.clone())))
    }

    pub fn shift(&self, by: I) -> Self {
        Self { terms: self.terms.iter().map(|(e, c)| (*e + by, c.clone())).collect() }
    }

    pub fn map_coeffs<S: Ring, F: Fn(&R) -> S>(&self, f: F) -> Poly<X, I, S> {
        Poly::from_terms(self.terms.iter().map(|(e, c)| (*e, f(c))))
    }

    /// Substitutes `X := value` in any ring that `R` maps into.
    pub fn eval<S: Ring>(&self, value: &S, embed: impl Fn(&R) -> S) -> S
    where
        I: Into<i64>,
    {
        let mut acc = S::zero();
        for (e, c) in &self.terms {
            let k = (*e).into();
            assert!(k >= 0, "cannot evaluate a negative power");
            acc = acc + embed(c) * value.pow(k as u32);
        }
        acc
    }
}

/// `p.is_monomial()` spelled as a free function, mirroring the operation
/// table of the rings module. Zero is not a monomial.
pub fn poly_is_monomial<const X: char, I: Exponent, R: Ring>(p: &Poly<X, I, R>) -> Option<(R, I)> {
    p.as_monomial().map(|(c, e)| (c.clone(), e))
}

impl<const X: char, I: Exponent, R: Ring> Zero for Poly<X, I, R> {
    fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl<const X: char, I: Exponent, R: Ring> One for Poly<X, I, R> {
    fn one() -> Self {
        Self::constant(R::one())
    }
}

impl<const X: char, I: Exponent, R: Ring> Add for Poly<X, I, R> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for (e, c) in rhs.terms {
            self.add_term(e, c);
        }
        self
    }
}

impl<const X: char, I: Exponent, R: Ring> Sub for Poly<X, I, R> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<const X: char, I: Exponent, R: Ring> Neg for Poly<X, I, R> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { terms: self.terms.into_iter().map(|(e, c)| (e, -c)).collect() }
    }
}

impl<const X: char, I: Exponent, R: Ring> Mul for Poly<X, I, R> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &rhs.terms {
                out.add_term(*e1 + *e2, c1.clone() * c2.clone());
            }
        }
        out
    }
}

impl<const X: char, I: Exponent, R: Ring> Ring for Poly<X, I, R> {
    fn from_int(n: &BigInt) -> Self {
        Self::constant(R::from_int(n))
    }

    fn unit_inverse(&self) -> Option<Self> {
        // Units of R[X] (R a domain) are the constant units; for Laurent
        // polynomials monomials with unit coefficient are units as well.
        let (c, e) = self.as_monomial()?;
        let inv = c.unit_inverse()?;
        if e.is_zero() {
            return Some(Self::constant(inv));
        }
        let neg = I::from_i64(-e.to_i64())?;
        Some(Self::monomial(inv, neg))
    }

    fn display_parts(&self) -> (bool, String, bool) {
        match self.as_monomial() {
            Some((c, _)) => {
                let (neg, _, _) = c.display_parts();
                let abs = if neg { -self.clone() } else { self.clone() };
                (neg, abs.to_string(), false)
            }
            None => (false, self.to_string(), self.terms.len() > 1),
        }
    }

    fn from_monomial(coef: &BigRational, vars: &[(char, i64)]) -> Result<Self, RingError> {
        let mut e = 0i64;
        let mut rest = Vec::new();
        for &(v, k) in vars {
            if v == X {
                e += k;
            } else {
                rest.push((v, k));
            }
        }
        let c = R::from_monomial(coef, &rest).map_err(|err| match err {
            RingError::VariableMismatch { found, expected } => RingError::VariableMismatch {
                found,
                expected: if expected == "no variables" {
                    format!("'{X}'")
                } else {
                    format!("'{X}', {expected}")
                },
            },
            other => other,
        })?;
        let e = I::from_i64(e).ok_or(RingError::NegativeExponent(e))?;
        Ok(Self::monomial(c, e))
    }
}

impl<const X: char, I: Exponent, R: Ring> Display for Poly<X, I, R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let ordered: Vec<(&I, &R)> = if I::DESCENDING {
            self.terms.iter().rev().collect()
        } else {
            self.terms.iter().collect()
        };
        for (i, (e, c)) in ordered.into_iter().enumerate() {
            let (neg, abs, parens) = c.display_parts();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let mono = match e.to_i64() {
                0 => None,
                1 => Some(format!("{X}")),
                k => Some(format!("{X}^{k}")),
            };
            let coeff = if parens { format!("({abs})") } else { abs };
            match mono {
                None => write!(f, "{coeff}")?,
                Some(m) if coeff == "1" => write!(f, "{m}")?,
                Some(m) => write!(f, "{coeff}*{m}")?,
            }
        }
        Ok(())
    }
}

impl<const X: char, I: Exponent, R: Ring> Debug for Poly<X, I, R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Poly[{self}]")
    }
}

impl<const X: char, I: Exponent, R: Ring> std::str::FromStr for Poly<X, I, R> {
    type Err = RingError;
    fn from_str(s: &str) -> Result<Self, RingError> {
        parse_ring_element(s)
    }
}

/// Parses a sum of monomials such as `"6*H^3 - 2*H + 1"`, `"2t"`, `"-h"`,
/// `"q^-1"` or `"1/2*T"` into any ring implementing [`Ring::from_monomial`].
pub fn parse_ring_element<R: Ring>(s: &str) -> Result<R, RingError> {
    let err = || RingError::Syntax(s.to_string());
    let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    if chars.is_empty() {
        return Err(err());
    }
    let mut pos = 0usize;
    let mut acc = R::zero();
    while pos < chars.len() {
        let mut sign = BigInt::one();
        if chars[pos] == '+' || chars[pos] == '-' {
            if chars[pos] == '-' {
                sign = -sign;
            }
            pos += 1;
        } else if pos != 0 {
            return Err(err());
        }
        let read_int = |pos: &mut usize| -> Option<BigInt> {
            let start = *pos;
            while *pos < chars.len() && chars[*pos].is_ascii_digit() {
                *pos += 1;
            }
            if start == *pos {
                None
            } else {
                chars[start..*pos].iter().collect::<String>().parse().ok()
            }
        };
        let mut coef = BigRational::from_integer(sign);
        let mut vars: Vec<(char, i64)> = Vec::new();
        let mut seen_factor = false;
        loop {
            if pos >= chars.len() || chars[pos] == '+' || chars[pos] == '-' {
                break;
            }
            if chars[pos] == '*' {
                if !seen_factor {
                    return Err(err());
                }
                pos += 1;
                continue;
            }
            if chars[pos].is_ascii_digit() {
                let num = read_int(&mut pos).ok_or_else(err)?;
                let mut q = BigRational::from_integer(num);
                if pos < chars.len() && chars[pos] == '/' {
                    pos += 1;
                    let den = read_int(&mut pos).ok_or_else(err)?;
                    if den.is_zero() {
                        return Err(err());
                    }
                    q = BigRational::new(q.to_integer(), den);
                }
                coef *= q;
            } else if chars[pos].is_alphabetic() {
                let v = chars[pos];
                pos += 1;
                let mut k = 1i64;
                if pos < chars.len() && chars[pos] == '^' {
                    pos += 1;
                    let mut neg = false;
                    if pos < chars.len() && chars[pos] == '-' {
                        neg = true;
                        pos += 1;
                    }
                    let n = read_int(&mut pos).ok_or_else(err)?;
                    k = n.to_i64().ok_or_else(err)?;
                    if neg {
                        k = -k;
                    }
                }
                vars.push((v, k));
            } else {
                return Err(err());
            }
            seen_factor = true;
        }
        if !seen_factor {
            return Err(err());
        }
        acc = acc + R::from_monomial(&coef, &vars)?;
    }
    Ok(acc)
}

/// Lowest common denominator helper used when clearing rationals.
pub fn lcm_denominators<'a>(xs: impl IntoIterator<Item = &'a BigRational>) -> BigInt {
    xs.into_iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}



/// Dense matrix over a ring, row-major. Used for promotion matrices and
/// algebra structure maps; chain complexes use sparse storage.
#[derive(Clone, PartialEq, Debug)]
pub struct Matrix<R: Ring> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Ring> Matrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![R::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, R::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<R>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        Self { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &R {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: R) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matrix shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = rhs.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let v = out.get(i, j).clone() + a.clone() * b.clone();
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        assert!(self.is_square());
        let mut acc = Self::identity(self.rows);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn scale(&self, c: &R) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x.clone() * c.clone()).collect() }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.add(&rhs.scale(&-R::one()))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn map<S: Ring>(&self, f: impl Fn(&R) -> S) -> Matrix<S> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn to_rows(&self) -> Vec<Vec<R>> {
        self.data.chunks(self.cols.max(1)).take(self.rows).map(|r| r.to_vec()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{LaurentPoly, MultiPoly, ZH};

    fn zh(s: &str) -> ZH {
        s.parse().unwrap()
    }

    #[test]
    fn difference_of_squares() {
        let p = zh("H + 1") * zh("H - 1");
        assert_eq!(p, zh("H^2 - 1"));
        assert_eq!(p.to_string(), "H^2 - 1");
    }

    #[test]
    fn additive_identity_and_monomial_product() {
        let p = zh("6*H^3 - 2*H + 1");
        assert_eq!(p.clone() + ZH::zero(), p);
        assert_eq!(zh("2*H") * zh("3*H^2"), zh("6*H^3"));
        assert_eq!(p.to_string(), "6*H^3 - 2*H + 1");
    }

    #[test]
    fn monomial_detection() {
        assert_eq!(poly_is_monomial(&zh("3*H^2")), Some((BigInt::from(3), 2)));
        assert_eq!(poly_is_monomial(&zh("H + 1")), None);
        assert_eq!(poly_is_monomial(&ZH::zero()), None);
    }

    #[test]
    fn laurent_printing() {
        let q: LaurentPoly = "q^-1 + q".parse().unwrap();
        assert_eq!(q.to_string(), "q^-1 + q");
        let j: LaurentPoly = "q + q^3 + q^5 - q^9".parse().unwrap();
        assert_eq!(j.to_string(), "q + q^3 + q^5 - q^9");
        assert!(!q.is_unit());
        let m: LaurentPoly = "-q^3".parse().unwrap();
        assert_eq!(m.unit_inverse().unwrap().to_string(), "-q^-3");
    }

    #[test]
    fn variable_mismatch_is_reported() {
        let e = "H + x".parse::<ZH>().unwrap_err();
        assert!(matches!(e, RingError::VariableMismatch { found: 'x', .. }));
        assert!("H^-1".parse::<ZH>().is_err());
        assert!("1/2*H".parse::<ZH>().is_err());
    }

    #[test]
    fn multivariate_parse() {
        let a: MultiPoly = "-h".parse().unwrap();
        let b: MultiPoly = "2t".parse().unwrap();
        let c: MultiPoly = "4t + h^2".parse().unwrap();
        assert_eq!(a.clone() * a + b.clone() * "2".parse::<MultiPoly>().unwrap(), c);
        assert_eq!(b.to_string(), "2*t");
    }

    #[test]
    fn rational_coefficients() {
        let p: crate::QT = "1/2*T + 1".parse().unwrap();
        let two: crate::QT = "2".parse().unwrap();
        assert_eq!(p * two, "T + 2".parse().unwrap());
    }

    #[test]
    fn matrix_power() {
        let m = Matrix::from_rows(vec![vec![BigInt::from(0), BigInt::from(0)], vec![BigInt::from(2), BigInt::from(0)]]);
        assert!(m.pow(2).is_zero());
        assert_eq!(m.pow(1), m);
    }
}

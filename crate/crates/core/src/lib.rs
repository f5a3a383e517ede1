//! Exact computation of universal Khovanov-type link homology.
//!
//! The pipeline builds the geometric cube-of-resolutions complex of a
//! PD-coded link diagram, deloops every non-special circle, cancels unit
//! differential entries, and arrives at a minimal complex of free
//! `Z[H]`-modules. Every rank-2 Frobenius-system homology is then obtained
//! by substituting a matrix for `H` ([`promote`]). A full-cube TQFT
//! construction is kept alongside as an independent oracle.

pub mod checked;
pub mod cobordism;
pub mod complex;
pub mod diagram;
pub mod homology;
pub mod links;
pub mod promote;
pub mod reduce;
pub mod rings;

use num_bigint::BigInt;
use num_rational::BigRational;

pub use rings::{Matrix, Poly, Ring, RingError};

/// `Z[H]`, the endomorphism ring of the special line.
pub type ZH = Poly<'H', u32, BigInt>;
/// `Z[T]`.
pub type ZT = Poly<'T', u32, BigInt>;
/// `Q[T]`; the half-integral ring `Z[1/2, T]` lives inside it.
pub type QT = Poly<'T', u32, BigRational>;
/// `Z[h, t]`, stored as polynomials in `h` over `Z[t]`.
pub type MultiPoly = Poly<'h', u32, Poly<'t', u32, BigInt>>;
/// Laurent polynomials in `q` (graded Euler characteristics).
pub type LaurentPoly = Poly<'q', i32, BigInt>;
/// Arbitrary-precision rationals.
pub type Rational = BigRational;
pub use num_bigint::BigInt as Integer;

//! Overflow-checked integer arithmetic for hot loops that start on machine
//! words and restart on `BigInt` when a value escapes.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub trait CheckedInt: Clone + PartialEq + std::fmt::Debug + Send + Sync + 'static {
    fn from_i64(x: i64) -> Self;
    fn from_bigint(x: &BigInt) -> Option<Self>;
    fn to_bigint(&self) -> BigInt;
    fn c_is_zero(&self) -> bool;
    fn c_is_unit(&self) -> bool;
    fn c_is_neg(&self) -> bool;
    fn abs_cmp(&self, other: &Self) -> std::cmp::Ordering;
    fn c_add(&self, o: &Self) -> Option<Self>;
    fn c_sub(&self, o: &Self) -> Option<Self>;
    fn c_mul(&self, o: &Self) -> Option<Self>;
    /// Euclidean quotient and remainder with `0 <= r < |o|`.
    fn c_divrem(&self, o: &Self) -> Option<(Self, Self)>;
    fn c_neg(&self) -> Option<Self>;
}

impl CheckedInt for i64 {
    fn from_i64(x: i64) -> Self {
        x
    }
    fn from_bigint(x: &BigInt) -> Option<Self> {
        x.to_i64()
    }
    fn to_bigint(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn c_is_zero(&self) -> bool {
        *self == 0
    }
    fn c_is_unit(&self) -> bool {
        *self == 1 || *self == -1
    }
    fn c_is_neg(&self) -> bool {
        *self < 0
    }
    fn abs_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.unsigned_abs().cmp(&other.unsigned_abs())
    }
    fn c_add(&self, o: &Self) -> Option<Self> {
        self.checked_add(*o)
    }
    fn c_sub(&self, o: &Self) -> Option<Self> {
        self.checked_sub(*o)
    }
    fn c_mul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(*o)
    }
    fn c_divrem(&self, o: &Self) -> Option<(Self, Self)> {
        Some((self.checked_div_euclid(*o)?, self.checked_rem_euclid(*o)?))
    }
    fn c_neg(&self) -> Option<Self> {
        self.checked_neg()
    }
}

impl CheckedInt for BigInt {
    fn from_i64(x: i64) -> Self {
        BigInt::from(x)
    }
    fn from_bigint(x: &BigInt) -> Option<Self> {
        Some(x.clone())
    }
    fn to_bigint(&self) -> BigInt {
        self.clone()
    }
    fn c_is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn c_is_unit(&self) -> bool {
        self.magnitude().is_one()
    }
    fn c_is_neg(&self) -> bool {
        Signed::is_negative(self)
    }
    fn abs_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.magnitude().cmp(other.magnitude())
    }
    fn c_add(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn c_sub(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn c_mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn c_divrem(&self, o: &Self) -> Option<(Self, Self)> {
        let (q, r) = self.div_mod_floor(&o.abs());
        Some((if Signed::is_negative(o) { -q } else { q }, r))
    }
    fn c_neg(&self) -> Option<Self> {
        Some(-self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_division_agrees() {
        for a in -7i64..=7 {
            for b in [-3i64, -2, 2, 3] {
                let (q, r) = a.c_divrem(&b).unwrap();
                let (bq, br) = BigInt::from(a).c_divrem(&BigInt::from(b)).unwrap();
                assert_eq!((BigInt::from(q), BigInt::from(r)), (bq, br), "{a} / {b}");
                assert!(r >= 0 && r < b.abs() && q * b + r == a);
            }
        }
    }

    #[test]
    fn overflow_is_reported() {
        assert_eq!(i64::MAX.c_add(&1), None);
        assert_eq!(i64::MIN.c_neg(), None);
        assert!(BigInt::from(i64::MAX).c_add(&BigInt::one()).is_some());
    }
}

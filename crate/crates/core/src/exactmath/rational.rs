//! Arbitrary-precision rational numbers.
//!
//! Values that fit in a machine word are kept inline; arithmetic runs in
//! `i128` and falls back to heap-allocated big rationals only on overflow,
//! so exactness never depends on magnitudes while the common small-number
//! case stays allocation-free.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use super::ExactError;

/// Inline numerator/denominator, always coprime with positive denominator.
/// The `Big` variant is used exactly when the reduced value does not fit,
/// so equal values always share a representation and derived equality is
/// sound.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
enum Repr {
    Small(i64, i64),
    Big(BigRational),
}

/// An exact rational number.
///
/// Always stored in lowest terms with a positive denominator; every
/// operation is exact, there is no rounding anywhere in this crate's
/// arithmetic.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct QRational(Repr);

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Builds the canonical value of `num / den` for nonzero `den`; reduces,
/// normalizes the sign, and picks the inline representation when possible.
fn make_i128(num: i128, den: i128) -> QRational {
    debug_assert!(den != 0);
    if num == 0 {
        return QRational(Repr::Small(0, 1));
    }
    let negative = (num < 0) != (den < 0);
    let mut n = num.unsigned_abs();
    let mut d = den.unsigned_abs();
    let g = gcd_u128(n, d);
    n /= g;
    d /= g;
    if n <= i64::MAX as u128 && d <= i64::MAX as u128 {
        let n = if negative { -(n as i64) } else { n as i64 };
        QRational(Repr::Small(n, d as i64))
    } else {
        let mut big_n = BigInt::from(n);
        if negative {
            big_n = -big_n;
        }
        QRational(Repr::Big(BigRational::new_raw(big_n, BigInt::from(d))))
    }
}

/// Canonicalizes a big rational, demoting it to the inline form if it fits.
fn make_big(r: BigRational) -> QRational {
    match (r.numer().to_i64(), r.denom().to_i64()) {
        (Some(n), Some(d)) => QRational(Repr::Small(n, d)),
        _ => QRational(Repr::Big(r)),
    }
}

impl QRational {
    /// Builds `numer / denom`, reduced to lowest terms.
    pub fn new(numer: BigInt, denom: BigInt) -> Result<Self, ExactError> {
        if denom.is_zero() {
            return Err(ExactError::ZeroDenominator);
        }
        Ok(make_big(BigRational::new(numer, denom)))
    }

    pub fn from_integer(n: BigInt) -> Self {
        make_big(BigRational::from_integer(n))
    }

    pub fn zero() -> Self {
        QRational(Repr::Small(0, 1))
    }

    pub fn one() -> Self {
        QRational(Repr::Small(1, 1))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_one(&self) -> bool {
        matches!(self.0, Repr::Small(1, 1))
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n < 0,
            Repr::Big(r) => r.is_negative(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, _) => BigInt::from(*n),
            Repr::Big(r) => r.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(_, d) => BigInt::from(*d),
            Repr::Big(r) => r.denom().clone(),
        }
    }

    pub fn abs(&self) -> Self {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(r) => r.clone(),
        }
    }

    /// Nearest `f64`; used only by the floating-point Fock oracle.
    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(n, d) => *n as f64 / *d as f64,
            Repr::Big(r) => r.to_f64().unwrap_or(f64::NAN),
        }
    }
}

impl Default for QRational {
    fn default() -> Self {
        QRational::zero()
    }
}

impl From<i64> for QRational {
    fn from(n: i64) -> Self {
        QRational(Repr::Small(n, 1))
    }
}

impl From<(i64, i64)> for QRational {
    /// Panics on a zero denominator; intended for literals in tests and tables.
    fn from((n, d): (i64, i64)) -> Self {
        assert!(d != 0, "rational literal with zero denominator");
        make_i128(n as i128, d as i128)
    }
}

impl fmt::Display for QRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{n}"),
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(r) if r.denom().is_one() => write!(f, "{}", r.numer()),
            Repr::Big(r) => write!(f, "{}/{}", r.numer(), r.denom()),
        }
    }
}

impl FromStr for QRational {
    type Err = ExactError;

    /// Accepts `p` or `p/q` with optional sign, e.g. `-3/4`.
    fn from_str(s: &str) -> Result<Self, ExactError> {
        let t = s.trim();
        let bad = || ExactError::InvalidRational(s.to_string());
        match t.split_once('/') {
            Some((n, d)) => {
                let numer = BigInt::from_str(n.trim()).map_err(|_| bad())?;
                let denom = BigInt::from_str(d.trim()).map_err(|_| bad())?;
                QRational::new(numer, denom)
            }
            None => {
                let numer = BigInt::from_str(t).map_err(|_| bad())?;
                Ok(QRational::from_integer(numer))
            }
        }
    }
}

impl PartialOrd for QRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QRational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                // b, d > 0, products fit in i128
                (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl Add for &QRational {
    type Output = QRational;
    fn add(self, rhs: &QRational) -> QRational {
        match (&self.0, &rhs.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                // |a d + c b| < 2^127 and b d < 2^126 for i64 inputs
                make_i128(
                    *a as i128 * *d as i128 + *c as i128 * *b as i128,
                    *b as i128 * *d as i128,
                )
            }
            _ => make_big(self.to_big() + rhs.to_big()),
        }
    }
}

impl Sub for &QRational {
    type Output = QRational;
    fn sub(self, rhs: &QRational) -> QRational {
        match (&self.0, &rhs.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => make_i128(
                *a as i128 * *d as i128 - *c as i128 * *b as i128,
                *b as i128 * *d as i128,
            ),
            _ => make_big(self.to_big() - rhs.to_big()),
        }
    }
}

impl Mul for &QRational {
    type Output = QRational;
    fn mul(self, rhs: &QRational) -> QRational {
        match (&self.0, &rhs.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                make_i128(*a as i128 * *c as i128, *b as i128 * *d as i128)
            }
            _ => make_big(self.to_big() * rhs.to_big()),
        }
    }
}

impl Neg for &QRational {
    type Output = QRational;
    fn neg(self) -> QRational {
        match &self.0 {
            Repr::Small(n, d) => make_i128(-(*n as i128), *d as i128),
            Repr::Big(r) => make_big(-r.clone()),
        }
    }
}

macro_rules! forward_value_ops {
    ($($trait:ident :: $m:ident),*) => {$(
        impl $trait for QRational {
            type Output = QRational;
            fn $m(self, rhs: QRational) -> QRational {
                (&self).$m(&rhs)
            }
        }
        impl $trait<&QRational> for QRational {
            type Output = QRational;
            fn $m(self, rhs: &QRational) -> QRational {
                (&self).$m(rhs)
            }
        }
        impl $trait<QRational> for &QRational {
            type Output = QRational;
            fn $m(self, rhs: QRational) -> QRational {
                self.$m(&rhs)
            }
        }
    )*};
}
forward_value_ops!(Add::add, Sub::sub, Mul::mul);

impl Neg for QRational {
    type Output = QRational;
    fn neg(self) -> QRational {
        -&self
    }
}

impl AddAssign<&QRational> for QRational {
    fn add_assign(&mut self, rhs: &QRational) {
        *self = &*self + rhs;
    }
}

impl SubAssign<&QRational> for QRational {
    fn sub_assign(&mut self, rhs: &QRational) {
        *self = &*self - rhs;
    }
}

impl MulAssign<&QRational> for QRational {
    fn mul_assign(&mut self, rhs: &QRational) {
        *self = &*self * rhs;
    }
}

impl Sum for QRational {
    fn sum<I: Iterator<Item = QRational>>(iter: I) -> QRational {
        iter.fold(QRational::zero(), |acc, x| acc + x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> QRational {
        QRational::from((n, d))
    }

    #[test]
    fn lowest_terms_and_sign() {
        let x = r(4, -6);
        assert_eq!(x, r(-2, 3));
        assert_eq!(x.to_string(), "-2/3");
        assert!(x.denom() > BigInt::from(0));
    }

    #[test]
    fn zero_denominator_rejected() {
        assert!(matches!(
            QRational::new(BigInt::from(1), BigInt::from(0)),
            Err(ExactError::ZeroDenominator)
        ));
        assert!(matches!(
            "1/0".parse::<QRational>(),
            Err(ExactError::ZeroDenominator)
        ));
    }

    #[test]
    fn arithmetic_is_exact() {
        let x = r(1, 3);
        let y = r(1, 6);
        assert_eq!(&x + &y, r(1, 2));
        assert_eq!(&x - &y, r(1, 6));
        assert_eq!(&x * &y, r(1, 18));
        assert_eq!(-&x, r(-1, 3));
    }

    #[test]
    fn overflow_promotes_and_demotes() {
        let huge = QRational::from(i64::MAX);
        let bigger = &huge * &huge;
        assert_eq!(bigger.to_string(), (i64::MAX as i128).pow(2).to_string());
        // dividing the square back down demotes to the inline form again
        let back = QRational::new(bigger.numer(), huge.numer()).unwrap();
        assert_eq!(back, huge);
        // i64::MIN edge cases
        let min = QRational::from(i64::MIN);
        assert_eq!(
            -&min,
            QRational::new(-BigInt::from(i64::MIN), BigInt::one()).unwrap()
        );
        assert_eq!(
            &min + &min,
            QRational::from_integer(BigInt::from(i64::MIN) * 2)
        );
    }

    #[test]
    fn ordering_is_numeric() {
        assert!(r(1, 3) < r(1, 2));
        assert!(r(-1, 2) < r(1, 3));
        let big = QRational::from(i64::MAX) * QRational::from(2);
        assert!(r(1, 1) < big);
    }

    #[test]
    fn parse_round_trip() {
        for s in [
            "0",
            "5",
            "-7",
            "2/3",
            "-11/4",
            "170141183460469231731687303715884105727",
        ] {
            let x: QRational = s.parse().unwrap();
            assert_eq!(x.to_string(), s);
        }
        assert_eq!(" 6/4 ".parse::<QRational>().unwrap(), r(3, 2));
        assert!("1.5".parse::<QRational>().is_err());
        assert!("".parse::<QRational>().is_err());
    }

    #[test]
    fn to_f64_matches() {
        assert_eq!(r(1, 2).to_f64(), 0.5);
        assert_eq!(r(-9, 10).to_f64(), -0.9);
    }
}

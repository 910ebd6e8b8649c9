//! Exact univariate polynomials in the indeterminate `q`.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use super::{ExactError, QRational};

/// A polynomial in `q` with [`QRational`] coefficients, constant term first.
///
/// Canonical form: no trailing zero coefficients; the zero polynomial stores
/// an empty coefficient vector. Equality is structural, which by canonicity
/// coincides with mathematical equality.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct QPoly {
    coeffs: Vec<QRational>,
}

impl QPoly {
    pub fn zero() -> Self {
        QPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        QPoly::constant(QRational::one())
    }

    /// The monomial `q`.
    pub fn q() -> Self {
        QPoly::monomial(QRational::one(), 1)
    }

    pub fn constant(c: QRational) -> Self {
        QPoly::monomial(c, 0)
    }

    /// `c * q^k`.
    pub fn monomial(c: QRational, k: usize) -> Self {
        if c.is_zero() {
            return QPoly::zero();
        }
        let mut coeffs = vec![QRational::zero(); k + 1];
        coeffs[k] = c;
        QPoly { coeffs }
    }

    /// Builds a polynomial from raw coefficients, dropping trailing zeros.
    pub fn from_coeffs(mut coeffs: Vec<QRational>) -> Self {
        while coeffs.last().is_some_and(QRational::is_zero) {
            coeffs.pop();
        }
        QPoly { coeffs }
    }

    pub fn from_i64_coeffs(coeffs: &[i64]) -> Self {
        QPoly::from_coeffs(coeffs.iter().map(|&c| QRational::from(c)).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_one()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Coefficient of `q^k` (zero beyond the stored length).
    pub fn coeff(&self, k: usize) -> QRational {
        self.coeffs.get(k).cloned().unwrap_or_else(QRational::zero)
    }

    pub fn coeffs(&self) -> &[QRational] {
        &self.coeffs
    }

    pub fn scale(&self, c: &QRational) -> QPoly {
        if c.is_zero() {
            return QPoly::zero();
        }
        QPoly {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Multiplies by `q^k`.
    pub fn shift(&self, k: usize) -> QPoly {
        if self.is_zero() {
            return QPoly::zero();
        }
        let mut coeffs = vec![QRational::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        QPoly { coeffs }
    }

    /// Exact Horner evaluation at a rational point.
    pub fn eval(&self, q0: &QRational) -> QRational {
        let mut acc = QRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * q0) + c;
        }
        acc
    }

    /// Evaluation in `f64`; used only by the floating-point Fock oracle.
    pub fn eval_f64(&self, q0: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs.iter().rev() {
            acc = acc * q0 + c.to_f64();
        }
        acc
    }
}

impl Add for &QPoly {
    type Output = QPoly;
    fn add(self, rhs: &QPoly) -> QPoly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = Vec::with_capacity(len);
        for k in 0..len {
            coeffs.push(&self.coeff(k) + &rhs.coeff(k));
        }
        QPoly::from_coeffs(coeffs)
    }
}

impl Sub for &QPoly {
    type Output = QPoly;
    fn sub(self, rhs: &QPoly) -> QPoly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = Vec::with_capacity(len);
        for k in 0..len {
            coeffs.push(&self.coeff(k) - &rhs.coeff(k));
        }
        QPoly::from_coeffs(coeffs)
    }
}

impl Mul for &QPoly {
    type Output = QPoly;
    fn mul(self, rhs: &QPoly) -> QPoly {
        if self.is_zero() || rhs.is_zero() {
            return QPoly::zero();
        }
        let mut coeffs = vec![QRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                coeffs[i + j] += &(a * b);
            }
        }
        QPoly::from_coeffs(coeffs)
    }
}

macro_rules! forward_value_ops {
    ($($trait:ident :: $m:ident),*) => {$(
        impl $trait for QPoly {
            type Output = QPoly;
            fn $m(self, rhs: QPoly) -> QPoly {
                (&self).$m(&rhs)
            }
        }
        impl $trait<&QPoly> for QPoly {
            type Output = QPoly;
            fn $m(self, rhs: &QPoly) -> QPoly {
                (&self).$m(rhs)
            }
        }
        impl $trait<QPoly> for &QPoly {
            type Output = QPoly;
            fn $m(self, rhs: QPoly) -> QPoly {
                self.$m(&rhs)
            }
        }
    )*};
}
forward_value_ops!(Add::add, Sub::sub, Mul::mul);

impl Neg for &QPoly {
    type Output = QPoly;
    fn neg(self) -> QPoly {
        QPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Neg for QPoly {
    type Output = QPoly;
    fn neg(self) -> QPoly {
        -&self
    }
}

impl AddAssign<&QPoly> for QPoly {
    fn add_assign(&mut self, rhs: &QPoly) {
        *self = &*self + rhs;
    }
}

impl Sum for QPoly {
    fn sum<I: Iterator<Item = QPoly>>(iter: I) -> QPoly {
        iter.fold(QPoly::zero(), |acc, p| acc + p)
    }
}

impl fmt::Display for QPoly {
    /// Renders e.g. `5 + 6*q + 3*q^2 + q^3`, `-1/2 - q`, `0`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            match k {
                0 => write!(f, "{mag}")?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{mag}*")?;
                    }
                    if k == 1 {
                        write!(f, "q")?;
                    } else {
                        write!(f, "q^{k}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for QPoly {
    type Err = ExactError;

    /// Parses the grammar printed by `Display`: terms of the form `c`, `c*q`,
    /// `c*q^k`, `q`, `q^k` joined by `+` or `-`.
    fn from_str(s: &str) -> Result<Self, ExactError> {
        let bad = |msg: &str| ExactError::InvalidPoly(s.to_string(), msg.to_string());
        let t = s.trim();
        if t.is_empty() {
            return Err(bad("empty input"));
        }
        let mut result = QPoly::zero();
        let mut rest = t;
        let mut negative = false;
        if let Some(r) = rest.strip_prefix('-') {
            negative = true;
            rest = r.trim_start();
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r.trim_start();
        }
        loop {
            // One term: everything up to the next top-level + or - separator.
            // A '-' directly inside a fraction or exponent cannot occur, and a
            // leading sign has been consumed, so scanning for +/- is safe.
            let end = rest
                .char_indices()
                .find(|&(_, c)| c == '+' || c == '-')
                .map(|(i, _)| i)
                .unwrap_or(rest.len());
            let term = rest[..end].trim();
            if term.is_empty() {
                return Err(bad("empty term"));
            }
            let (coeff_str, qpart) = match term.split_once('*') {
                Some((c, rhs)) => (c.trim(), Some(rhs.trim())),
                None => {
                    if term.starts_with('q') {
                        ("1", Some(term))
                    } else {
                        (term, None)
                    }
                }
            };
            let mut coeff: QRational = coeff_str.parse()?;
            if negative {
                coeff = -coeff;
            }
            let power = match qpart {
                None => 0,
                Some("q") => 1,
                Some(p) => {
                    let digits = p
                        .strip_prefix("q^")
                        .ok_or_else(|| bad("expected q or q^k"))?;
                    digits
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| bad("bad exponent"))?
                }
            };
            result += &QPoly::monomial(coeff, power);
            rest = rest[end..].trim_start();
            if rest.is_empty() {
                break;
            }
            negative = match rest.as_bytes()[0] {
                b'+' => false,
                b'-' => true,
                _ => return Err(bad("expected + or - between terms")),
            };
            rest = rest[1..].trim_start();
        }
        Ok(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(coeffs: &[i64]) -> QPoly {
        QPoly::from_i64_coeffs(coeffs)
    }

    #[test]
    fn add_cancellation() {
        // (1+q) + (2-q) = 3
        assert_eq!(&p(&[1, 1]) + &p(&[2, -1]), p(&[3]));
    }

    #[test]
    fn add_identity() {
        let x = p(&[0, 0, 7]);
        assert_eq!(&QPoly::zero() + &x, x);
    }

    #[test]
    fn add_disjoint_supports() {
        // q^2 + q = q + q^2
        let sum = &QPoly::monomial(QRational::one(), 2) + &QPoly::q();
        assert_eq!(sum, p(&[0, 1, 1]));
    }

    #[test]
    fn mul_difference_of_squares() {
        // (1+q)(1-q) = 1 - q^2
        assert_eq!(&p(&[1, 1]) * &p(&[1, -1]), p(&[1, 0, -1]));
    }

    #[test]
    fn mul_absorbing_zero() {
        assert!((&p(&[3, 1]) * &QPoly::zero()).is_zero());
    }

    #[test]
    fn mul_square() {
        // (2+q)^2 = 4 + 4q + q^2
        assert_eq!(&p(&[2, 1]) * &p(&[2, 1]), p(&[4, 4, 1]));
    }

    #[test]
    fn degree_adds_for_nonzero() {
        let a = p(&[1, 2, 3]);
        let b = p(&[0, 5]);
        assert_eq!(
            (&a * &b).degree(),
            Some(a.degree().unwrap() + b.degree().unwrap())
        );
    }

    #[test]
    fn eval_at_one_counts_pairings() {
        // 5 + 6q + 3q^2 + q^3 at q=1 is 15 = 5!!
        let t3 = p(&[5, 6, 3, 1]);
        assert_eq!(t3.eval(&QRational::one()), QRational::from(15));
    }

    #[test]
    fn eval_at_zero_is_constant_term() {
        let t3 = p(&[5, 6, 3, 1]);
        assert_eq!(t3.eval(&QRational::zero()), QRational::from(5));
    }

    #[test]
    fn eval_at_minus_one() {
        // 2 + q at q = -1
        assert_eq!(p(&[2, 1]).eval(&QRational::from(-1)), QRational::from(1));
    }

    #[test]
    fn canonical_form_drops_trailing_zeros() {
        let x = QPoly::from_coeffs(vec![QRational::one(), QRational::zero(), QRational::zero()]);
        assert_eq!(x.degree(), Some(0));
        let again = QPoly::from_coeffs(x.coeffs().to_vec());
        assert_eq!(x, again);
    }

    #[test]
    fn display_forms() {
        assert_eq!(QPoly::zero().to_string(), "0");
        assert_eq!(p(&[5, 6, 3, 1]).to_string(), "5 + 6*q + 3*q^2 + q^3");
        assert_eq!(p(&[0, -1]).to_string(), "-q");
        assert_eq!(p(&[-2, 0, 1]).to_string(), "-2 + q^2");
        let half = QPoly::monomial(QRational::from((1, 2)), 1);
        assert_eq!(half.to_string(), "1/2*q");
    }

    #[test]
    fn parse_round_trip() {
        for s in [
            "0",
            "5 + 6*q + 3*q^2 + q^3",
            "-q",
            "-2 + q^2",
            "1/2*q",
            "-1/3 - 2/3*q^4",
        ] {
            let x: QPoly = s.parse().unwrap();
            assert_eq!(x.to_string(), s);
        }
        assert_eq!("q^2+q".parse::<QPoly>().unwrap(), p(&[0, 1, 1]));
        assert!("q^".parse::<QPoly>().is_err());
        assert!("2**q".parse::<QPoly>().is_err());
        assert!("".parse::<QPoly>().is_err());
    }
}

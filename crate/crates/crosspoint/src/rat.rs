//! Exact rational scalars.
//!
//! Every quantity in this crate that lives on disk or inside a certificate is
//! a `Rat`: an arbitrary-precision rational kept in canonical form (reduced,
//! positive denominator). There are no floating-point code paths; square
//! roots only ever appear as certified rational lower/upper bounds.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::ParseRatError;

/// Arbitrary-precision rational in canonical form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rat(BigRational);

impl Rat {
    pub fn zero() -> Self {
        Rat(BigRational::zero())
    }

    pub fn one() -> Self {
        Rat(BigRational::one())
    }

    pub fn from_int(n: i64) -> Self {
        Rat(BigRational::from_integer(BigInt::from(n)))
    }

    /// `n / d`. Panics if `d == 0`; intended for literals in code and tests.
    pub fn new(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Rat(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Rat(BigRational::from_integer(n))
    }

    pub fn from_big_ratio(n: BigInt, d: BigInt) -> Result<Self, ParseRatError> {
        if d.is_zero() {
            return Err(ParseRatError::ZeroDenominator);
        }
        Ok(Rat(BigRational::new(n, d)))
    }

    /// `2^k` for possibly negative `k`.
    pub fn pow2(k: i32) -> Self {
        let one = BigInt::one();
        if k >= 0 {
            Rat(BigRational::from_integer(one << k as usize))
        } else {
            Rat(BigRational::new(one.clone(), one << (-k) as usize))
        }
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn signum(&self) -> i32 {
        if self.0.is_positive() {
            1
        } else if self.0.is_negative() {
            -1
        } else {
            0
        }
    }

    pub fn abs(&self) -> Rat {
        Rat(self.0.abs())
    }

    pub fn min(self, other: Rat) -> Rat {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: Rat) -> Rat {
        if self >= other {
            self
        } else {
            other
        }
    }

    pub fn recip(&self) -> Rat {
        assert!(!self.is_zero(), "reciprocal of zero");
        Rat(self.0.recip())
    }

    pub fn square(&self) -> Rat {
        self * self
    }

    pub fn halve(&self) -> Rat {
        Rat(&self.0 / BigRational::from_integer(BigInt::from(2)))
    }

    pub fn mid(a: &Rat, b: &Rat) -> Rat {
        (a + b).halve()
    }

    /// Largest integer multiple of `2^-bits` that is `<= self`.
    pub fn floor_dyadic(&self, bits: u32) -> Rat {
        let scale = BigInt::one() << bits as usize;
        let scaled = &self.0 * BigRational::from_integer(scale.clone());
        Rat(BigRational::new(scaled.floor().to_integer(), scale))
    }

    /// Smallest integer multiple of `2^-bits` that is `>= self`.
    pub fn ceil_dyadic(&self, bits: u32) -> Rat {
        let scale = BigInt::one() << bits as usize;
        let scaled = &self.0 * BigRational::from_integer(scale.clone());
        Rat(BigRational::new(scaled.ceil().to_integer(), scale))
    }

    /// Certified lower bound for sqrt(self): returns `l` with
    /// `l <= sqrt(self)` and `sqrt(self) - l <= 2^(1-bits)` for inputs of
    /// unit scale. Requires `self >= 0`. The input is pre-rounded to a
    /// dyadic below it so the integer square root runs on small operands
    /// regardless of how tangled the rational is.
    pub fn sqrt_lower(&self, bits: u32) -> Rat {
        assert!(!self.is_negative(), "sqrt of negative rational");
        if self.is_zero() {
            return Rat::zero();
        }
        let x = self.floor_dyadic(2 * bits + 4);
        if x.is_zero() || x.is_negative() {
            return Rat::zero();
        }
        // sqrt(p/q) = sqrt(p*q)/q; floor(sqrt(p*q*4^b)) / (q*2^b) differs
        // from the true root by less than 1/(q*2^b) <= 2^-b.
        let p = x.numer();
        let q = x.denom();
        let scaled: BigInt = p * q << (2 * bits as usize);
        let s = scaled.sqrt();
        Rat(BigRational::new(s, q << bits as usize))
    }

    /// Certified upper bound for sqrt(self), error at most `2^(1-bits)` for
    /// inputs of unit scale.
    pub fn sqrt_upper(&self, bits: u32) -> Rat {
        assert!(!self.is_negative(), "sqrt of negative rational");
        if self.is_zero() {
            return Rat::zero();
        }
        let x = self.ceil_dyadic(2 * bits + 4);
        let p = x.numer();
        let q = x.denom();
        let scaled: BigInt = p * q << (2 * bits as usize);
        let s = scaled.sqrt() + BigInt::one();
        Rat(BigRational::new(s, q << bits as usize))
    }

    /// Lossy conversion used only for SVG rendering.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Alias kept separate so algorithmic code never calls the lossy path by
    /// accident; diagnostics only.
    pub fn to_f64_dbg(&self) -> f64 {
        self.to_f64()
    }

    /// Parses "p/q", an integer, or a decimal string like "0.25" / "-1.5".
    pub fn parse(s: &str) -> Result<Rat, ParseRatError> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ParseRatError::Empty);
        }
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n
                .trim()
                .parse()
                .map_err(|_| ParseRatError::BadInteger(n.trim().to_string()))?;
            let d: BigInt = d
                .trim()
                .parse()
                .map_err(|_| ParseRatError::BadInteger(d.trim().to_string()))?;
            return Rat::from_big_ratio(n, d);
        }
        if let Some((int, frac)) = s.split_once('.') {
            let neg = int.starts_with('-');
            let int_part = if int.is_empty() || int == "-" || int == "+" {
                BigInt::zero()
            } else {
                int.parse()
                    .map_err(|_| ParseRatError::BadInteger(int.to_string()))?
            };
            if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(ParseRatError::BadDecimal(s.to_string()));
            }
            let frac_digits = frac.len() as u32;
            let frac_part: BigInt = frac
                .parse()
                .map_err(|_| ParseRatError::BadDecimal(s.to_string()))?;
            let denom = BigInt::from(10u32).pow(frac_digits);
            let mut numer = int_part.abs() * &denom + frac_part;
            if neg {
                numer = -numer;
            }
            return Rat::from_big_ratio(numer, denom);
        }
        let n: BigInt = s
            .parse()
            .map_err(|_| ParseRatError::BadInteger(s.to_string()))?;
        Ok(Rat::from_bigint(n))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl FromStr for Rat {
    type Err = ParseRatError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rat::parse(s)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl<'a, 'b> $trait<&'b Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: &'b Rat) -> Rat {
                Rat(&self.0 $op &rhs.0)
            }
        }
        impl $trait<Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat(self.0 $op rhs.0)
            }
        }
        impl<'a> $trait<&'a Rat> for Rat {
            type Output = Rat;
            fn $method(self, rhs: &'a Rat) -> Rat {
                Rat(self.0 $op &rhs.0)
            }
        }
        impl<'a> $trait<Rat> for &'a Rat {
            type Output = Rat;
            fn $method(self, rhs: Rat) -> Rat {
                Rat(&self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl<'a, 'b> Div<&'b Rat> for &'a Rat {
    type Output = Rat;
    fn div(self, rhs: &'b Rat) -> Rat {
        assert!(!rhs.is_zero(), "division by zero");
        Rat(&self.0 / &rhs.0)
    }
}

impl Div<Rat> for Rat {
    type Output = Rat;
    fn div(self, rhs: Rat) -> Rat {
        (&self).div(&rhs)
    }
}

impl<'a> Div<&'a Rat> for Rat {
    type Output = Rat;
    fn div(self, rhs: &'a Rat) -> Rat {
        (&self).div(rhs)
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-self.0)
    }
}

impl<'a> Neg for &'a Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        Rat(-&self.0)
    }
}

/// Total order helper usable in `min_by`/`max_by` chains.
pub fn cmp_rat(a: &Rat, b: &Rat) -> Ordering {
    a.cmp(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(Rat::parse("3/4").unwrap(), Rat::new(3, 4));
        assert_eq!(Rat::parse("-3/4").unwrap(), Rat::new(-3, 4));
        assert_eq!(Rat::parse("6/8").unwrap(), Rat::new(3, 4));
        assert_eq!(Rat::parse("2").unwrap(), Rat::from_int(2));
        assert_eq!(Rat::parse("0.25").unwrap(), Rat::new(1, 4));
        assert_eq!(Rat::parse("-1.5").unwrap(), Rat::new(-3, 2));
        assert_eq!(Rat::parse("3/-6").unwrap(), Rat::new(-1, 2));
        assert!(Rat::parse("1/0").is_err());
        assert!(Rat::parse("abc").is_err());
        assert!(Rat::parse("1.2.3").is_err());
        assert!(Rat::parse("").is_err());
    }

    #[test]
    fn canonical_form() {
        let r = Rat::new(6, -8);
        assert_eq!(r.numer(), &BigInt::from(-3));
        assert_eq!(r.denom(), &BigInt::from(4));
        assert_eq!(format!("{}", r), "-3/4");
        assert_eq!(format!("{}", Rat::from_int(5)), "5");
    }

    #[test]
    fn dyadic_rounding() {
        let x = Rat::new(5, 7);
        let lo = x.floor_dyadic(4);
        let hi = x.ceil_dyadic(4);
        assert!(lo <= x && x <= hi);
        assert!(&hi - &lo <= Rat::pow2(-4));
        assert_eq!(Rat::new(1, 2).floor_dyadic(1), Rat::new(1, 2));
        assert_eq!(Rat::new(-5, 7).floor_dyadic(2), Rat::new(-3, 4));
    }

    #[test]
    fn sqrt_bounds_bracket() {
        for (n, d) in [(2i64, 1i64), (3, 4), (1, 3), (7, 5), (0, 1)] {
            let x = Rat::new(n, d);
            for bits in [4u32, 16, 40] {
                let lo = x.sqrt_lower(bits);
                let hi = x.sqrt_upper(bits);
                assert!(&lo * &lo <= x, "lo^2 <= x");
                assert!(&hi * &hi >= x, "hi^2 >= x");
                assert!(&hi - &lo <= Rat::pow2(-(bits as i32)) * Rat::from_int(2));
            }
        }
    }

    #[test]
    fn pow2_signs() {
        assert_eq!(Rat::pow2(3), Rat::from_int(8));
        assert_eq!(Rat::pow2(-3), Rat::new(1, 8));
        assert_eq!(Rat::pow2(0), Rat::one());
    }
}

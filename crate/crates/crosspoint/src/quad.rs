//! Exact arithmetic in a single quadratic extension.
//!
//! Circle/line and circle/circle intersections live in fields of the form
//! Q(sqrt(k)). A [`QuadVal`] is `a + b*sqrt(k)` with rational `a`, `b`,
//! `k >= 0`; signs and comparisons are decided exactly, never numerically.
//! Values with different `k` cannot be mixed except through rational bounds.

use crate::rat::Rat;

/// `a + b * sqrt(k)` with `k >= 0`. The radicand is fixed per value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadVal {
    pub a: Rat,
    pub b: Rat,
    pub k: Rat,
}

impl QuadVal {
    pub fn rational(a: Rat) -> Self {
        QuadVal {
            a,
            b: Rat::zero(),
            k: Rat::zero(),
        }
    }

    pub fn new(a: Rat, b: Rat, k: Rat) -> Self {
        assert!(!k.is_negative(), "negative radicand");
        QuadVal { a, b, k }
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero() || self.k.is_zero()
    }

    /// Exact sign of `a + b*sqrt(k)`.
    pub fn signum(&self) -> i32 {
        sign_with_sqrt(&self.a, &self.b, &self.k)
    }

    pub fn is_zero(&self) -> bool {
        self.signum() == 0
    }

    /// Exact comparison against a rational.
    pub fn cmp_rat(&self, r: &Rat) -> std::cmp::Ordering {
        let shifted = QuadVal {
            a: &self.a - r,
            b: self.b.clone(),
            k: self.k.clone(),
        };
        match shifted.signum() {
            s if s < 0 => std::cmp::Ordering::Less,
            0 => std::cmp::Ordering::Equal,
            _ => std::cmp::Ordering::Greater,
        }
    }

    /// Exact comparison of two values over the same radicand.
    pub fn cmp_same_k(&self, other: &QuadVal) -> std::cmp::Ordering {
        assert!(
            self.k == other.k || self.b.is_zero() || other.b.is_zero(),
            "mixed radicands"
        );
        let k = if self.b.is_zero() {
            other.k.clone()
        } else {
            self.k.clone()
        };
        let diff = QuadVal {
            a: &self.a - &other.a,
            b: &self.b - &other.b,
            k,
        };
        match diff.signum() {
            s if s < 0 => std::cmp::Ordering::Less,
            0 => std::cmp::Ordering::Equal,
            _ => std::cmp::Ordering::Greater,
        }
    }

    pub fn add_rat(&self, r: &Rat) -> QuadVal {
        QuadVal {
            a: &self.a + r,
            b: self.b.clone(),
            k: self.k.clone(),
        }
    }

    pub fn scale(&self, r: &Rat) -> QuadVal {
        QuadVal {
            a: &self.a * r,
            b: &self.b * r,
            k: self.k.clone(),
        }
    }

    /// Rational bracket `[lo, hi]` with `hi - lo <= 2^(1-bits)`.
    pub fn rat_bounds(&self, bits: u32) -> (Rat, Rat) {
        if self.b.is_zero() || self.k.is_zero() {
            return (self.a.clone(), self.a.clone());
        }
        let s_lo = self.k.sqrt_lower(bits);
        let s_hi = self.k.sqrt_upper(bits);
        if self.b.is_positive() {
            (&self.a + &self.b * s_lo, &self.a + &self.b * s_hi)
        } else {
            (&self.a + &self.b * s_hi, &self.a + &self.b * s_lo)
        }
    }

    /// Midpoint of a tight rational bracket; for reporting only.
    pub fn approx(&self, bits: u32) -> Rat {
        let (lo, hi) = self.rat_bounds(bits);
        Rat::mid(&lo, &hi)
    }
}

/// Exact sign of `a + b * sqrt(k)` for rational `a`, `b` and `k >= 0`.
pub fn sign_with_sqrt(a: &Rat, b: &Rat, k: &Rat) -> i32 {
    assert!(!k.is_negative(), "negative radicand");
    if b.is_zero() || k.is_zero() {
        return a.signum();
    }
    if a.is_zero() {
        return b.signum();
    }
    let sa = a.signum();
    let sb = b.signum();
    if sa == sb {
        return sa;
    }
    // Opposite signs: |a| vs |b|*sqrt(k) decided by squaring.
    let a2 = a.square();
    let b2k = &b.square() * k;
    if sa > 0 {
        // a > 0, b < 0: positive iff a^2 > b^2 k.
        match a2.cmp(&b2k) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Equal => 0,
            std::cmp::Ordering::Less => -1,
        }
    } else {
        // a < 0, b > 0: positive iff b^2 k > a^2.
        match b2k.cmp(&a2) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Equal => 0,
            std::cmp::Ordering::Less => -1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: (i64, i64), b: (i64, i64), k: (i64, i64)) -> QuadVal {
        QuadVal::new(Rat::new(a.0, a.1), Rat::new(b.0, b.1), Rat::new(k.0, k.1))
    }

    #[test]
    fn signs() {
        // 1 - sqrt(2) < 0, 2 - sqrt(2) > 0, 3/2 - sqrt(9/4) = 0
        assert_eq!(q((1, 1), (-1, 1), (2, 1)).signum(), -1);
        assert_eq!(q((2, 1), (-1, 1), (2, 1)).signum(), 1);
        assert_eq!(q((3, 2), (-1, 1), (9, 4)).signum(), 0);
        assert_eq!(q((-3, 1), (2, 1), (9, 4)).signum(), 0);
        assert_eq!(q((-1, 1), (1, 1), (2, 1)).signum(), 1);
        assert_eq!(q((0, 1), (-5, 1), (3, 1)).signum(), -1);
        assert_eq!(q((7, 1), (0, 1), (3, 1)).signum(), 1);
    }

    #[test]
    fn brackets_contain_value() {
        // sqrt(2) bracketed around 1.41421356...
        let v = q((0, 1), (1, 1), (2, 1));
        let (lo, hi) = v.rat_bounds(20);
        assert!(lo < hi);
        assert!(lo.square() < Rat::from_int(2));
        assert!(hi.square() > Rat::from_int(2));
        assert!(&hi - &lo <= Rat::pow2(-19));
    }

    #[test]
    fn compare_same_radicand() {
        // 1/2 + (1/8) sqrt(2)  >  1/2 + (1/9) sqrt(2)
        let x = q((1, 2), (1, 8), (2, 1));
        let y = q((1, 2), (1, 9), (2, 1));
        assert_eq!(x.cmp_same_k(&y), std::cmp::Ordering::Greater);
        assert_eq!(x.cmp_rat(&Rat::new(1, 2)), std::cmp::Ordering::Greater);
        assert_eq!(x.cmp_rat(&Rat::from_int(1)), std::cmp::Ordering::Less);
    }
}

//! Arbitrary-precision rational numbers.
//!
//! `num_rational::BigRational` already maintains the invariants we need
//! (always reduced, positive denominator, canonical zero), so the engine
//! uses it directly and adds only a few constructors.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

pub type Rational = num_rational::BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses "7", "-7" or "7/3".
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
        None => {
            let n: BigInt = s.parse().ok()?;
            Some(Rational::from_integer(n))
        }
    }
}

/// Renders without a denominator when integral.
pub fn display_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// gcd over Q: gcd(a/b, c/d) as the largest rational dividing both with
/// integer quotients. Zero inputs are ignored; gcd of nothing is 1.
pub fn rational_gcd(values: &[Rational]) -> Rational {
    use num_integer::Integer;
    let mut num_gcd = BigInt::zero();
    let mut den_lcm = BigInt::one();
    for v in values {
        if v.is_zero() {
            continue;
        }
        num_gcd = num_gcd.gcd(&v.numer().abs());
        den_lcm = den_lcm.lcm(v.denom());
    }
    if num_gcd.is_zero() {
        Rational::one()
    } else {
        Rational::new(num_gcd, den_lcm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduced_and_canonical() {
        let r = ratio(6, -4);
        assert_eq!(r, ratio(-3, 2));
        assert!(r.denom() > &BigInt::zero());
        assert_eq!(ratio(0, 5), rat(0));
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(parse_rational("25").unwrap(), rat(25));
        assert_eq!(parse_rational("-3/9").unwrap(), ratio(-1, 3));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(display_rational(&ratio(-1, 3)), "-1/3");
        assert_eq!(display_rational(&rat(7)), "7");
    }

    #[test]
    fn gcd_of_mixed_fractions() {
        // gcd(2/5, 1/5, 1) = 1/5
        let g = rational_gcd(&[ratio(2, 5), ratio(1, 5), rat(1)]);
        assert_eq!(g, ratio(1, 5));
        assert_eq!(rational_gcd(&[]), rat(1));
    }
}

//! Exact arithmetic in the real quadratic field Q(sqrt(D)).
//!
//! A context fixes the discriminant D = p^2 - 4q of a computation session;
//! elements are pairs a + b*sqrt(D) with rational a, b. The characteristic
//! roots tau = (p + sqrt(D))/2 and sigma = (p - sqrt(D))/2 of the recurrence
//! live here, as do the classical alpha, beta and sqrt(5) (the p = 1, q = -1
//! instance). Mixing elements from different contexts is a hard error.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{display_rational, rat, Rational};

/// Shared discriminant context. Cheap to clone.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadCtx {
    disc: Arc<Rational>,
}

impl fmt::Debug for QuadCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "QuadCtx(D={})", display_rational(&self.disc))
    }
}

fn is_rational_square(r: &Rational) -> bool {
    if r.is_negative() {
        return false;
    }
    let sqrt_exact = |n: &BigInt| -> bool {
        let s = n.sqrt();
        &(&s * &s) == n
    };
    sqrt_exact(r.numer()) && sqrt_exact(r.denom())
}

impl QuadCtx {
    /// D must be positive and not the square of a rational.
    pub fn new(disc: Rational) -> Result<Self> {
        if !disc.is_positive() || is_rational_square(&disc) {
            return Err(Error::DegenerateDiscriminant(display_rational(&disc)));
        }
        Ok(QuadCtx { disc: Arc::new(disc) })
    }

    /// Context for the recurrence W_j = p*W_{j-1} - q*W_{j-2}: D = p^2 - 4q.
    pub fn for_recurrence(p: &Rational, q: &Rational) -> Result<Self> {
        QuadCtx::new(p * p - rat(4) * q)
    }

    /// The classical context D = 5 housing alpha, beta and sqrt(5).
    pub fn golden() -> Self {
        QuadCtx::new(rat(5)).expect("5 is a valid discriminant")
    }

    pub fn disc(&self) -> &Rational {
        &self.disc
    }

    pub fn zero(&self) -> QuadExt {
        self.from_parts(rat(0), rat(0))
    }

    pub fn one(&self) -> QuadExt {
        self.from_parts(rat(1), rat(0))
    }

    pub fn from_rational(&self, a: Rational) -> QuadExt {
        self.from_parts(a, rat(0))
    }

    pub fn from_int(&self, a: i64) -> QuadExt {
        self.from_rational(rat(a))
    }

    /// sqrt(D) itself.
    pub fn radical(&self) -> QuadExt {
        self.from_parts(rat(0), rat(1))
    }

    pub fn from_parts(&self, a: Rational, b: Rational) -> QuadExt {
        QuadExt { a, b, ctx: self.clone() }
    }

    /// tau = (p + sqrt(D))/2, the dominant characteristic root.
    pub fn tau(&self, p: &Rational) -> QuadExt {
        self.from_parts(p / rat(2), ratio_half())
    }

    /// sigma = (p - sqrt(D))/2.
    pub fn sigma(&self, p: &Rational) -> QuadExt {
        self.from_parts(p / rat(2), -ratio_half())
    }
}

fn ratio_half() -> Rational {
    crate::rational::ratio(1, 2)
}

/// An element a + b*sqrt(D) of the quadratic field.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QuadExt {
    a: Rational,
    b: Rational,
    ctx: QuadCtx,
}

impl fmt::Debug for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self)
    }
}

impl fmt::Display for QuadExt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            return write!(f, "{}", display_rational(&self.a));
        }
        let rad = format!("sqrt({})", display_rational(self.ctx.disc()));
        let b_part = if self.b == rat(1) {
            rad
        } else if self.b == rat(-1) {
            format!("-{rad}")
        } else {
            format!("{}*{}", display_rational(&self.b), rad)
        };
        if self.a.is_zero() {
            write!(f, "{b_part}")
        } else if self.b.is_negative() {
            write!(f, "{}{}", display_rational(&self.a), b_part)
        } else {
            write!(f, "{}+{}", display_rational(&self.a), b_part)
        }
    }
}

impl QuadExt {
    pub fn ctx(&self) -> &QuadCtx {
        &self.ctx
    }

    /// Rational part a.
    pub fn rat_part(&self) -> &Rational {
        &self.a
    }

    /// Radical coefficient b.
    pub fn rad_part(&self) -> &Rational {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.a.is_one() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn to_rational(&self) -> Option<&Rational> {
        self.b.is_zero().then_some(&self.a)
    }

    fn check_ctx(&self, other: &QuadExt) -> Result<()> {
        if self.ctx == other.ctx {
            Ok(())
        } else {
            Err(Error::MixedContexts(
                display_rational(self.ctx.disc()),
                display_rational(other.ctx.disc()),
            ))
        }
    }

    pub fn add(&self, other: &QuadExt) -> QuadExt {
        self.checked_add(other).expect("mixed quadratic-field contexts")
    }

    pub fn checked_add(&self, other: &QuadExt) -> Result<QuadExt> {
        self.check_ctx(other)?;
        Ok(self.ctx.from_parts(&self.a + &other.a, &self.b + &other.b))
    }

    pub fn sub(&self, other: &QuadExt) -> QuadExt {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> QuadExt {
        self.ctx.from_parts(-self.a.clone(), -self.b.clone())
    }

    /// (a1 + b1 r)(a2 + b2 r) = (a1 a2 + b1 b2 D) + (a1 b2 + a2 b1) r.
    pub fn mul(&self, other: &QuadExt) -> QuadExt {
        self.checked_mul(other).expect("mixed quadratic-field contexts")
    }

    pub fn checked_mul(&self, other: &QuadExt) -> Result<QuadExt> {
        self.check_ctx(other)?;
        let d = self.ctx.disc();
        Ok(self.ctx.from_parts(
            &self.a * &other.a + &self.b * &other.b * d,
            &self.a * &other.b + &other.a * &self.b,
        ))
    }

    pub fn scale(&self, r: &Rational) -> QuadExt {
        self.ctx.from_parts(&self.a * r, &self.b * r)
    }

    /// Field norm a^2 - b^2 D; zero only for the zero element.
    pub fn norm(&self) -> Rational {
        &self.a * &self.a - &self.b * &self.b * self.ctx.disc()
    }

    /// Conjugation a + b*sqrt(D) -> a - b*sqrt(D); realizes the tau/sigma swap.
    pub fn conj(&self) -> QuadExt {
        self.ctx.from_parts(self.a.clone(), -self.b.clone())
    }

    pub fn inv(&self) -> Result<QuadExt> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.norm();
        debug_assert!(!n.is_zero(), "nonzero element has nonzero norm");
        Ok(self.conj().scale(&n.recip()))
    }

    pub fn div(&self, other: &QuadExt) -> Result<QuadExt> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow(&self, e: i64) -> Result<QuadExt> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut acc = self.ctx.one();
        let mut n = e.unsigned_abs();
        let mut sq = base;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&sq);
            }
            sq = sq.mul(&sq);
            n >>= 1;
        }
        Ok(acc)
    }

    /// Numeric value a + b*sqrt(D) as f64 (for ordering heuristics only).
    pub fn to_f64(&self) -> f64 {
        let r = |x: &Rational| -> f64 {
            let n = x.numer().to_string().parse::<f64>().unwrap_or(f64::NAN);
            let d = x.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
            n / d
        };
        r(&self.a) + r(&self.b) * r(self.ctx.disc()).sqrt()
    }
}

//! Multivariate polynomials in symbolic seed values (G0, G1, H0, ...) with
//! coefficients in Q(sqrt(D)).
//!
//! Seed symbols form an open-ended, string-keyed namespace so any number of
//! arbitrary-seed families can coexist in one computation. Monomials are kept
//! in a BTreeMap for a deterministic ordering; zero coefficients are never
//! stored.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::One;

use crate::error::{Error, Result};
use crate::quad::{QuadCtx, QuadExt};
use crate::rational::{display_rational, Rational};

/// Exponent vector: seed symbol -> exponent >= 1.
pub type SeedMono = BTreeMap<String, u32>;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SeedPoly {
    terms: BTreeMap<SeedMono, QuadExt>,
}

impl fmt::Debug for SeedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SeedPoly({})", self)
    }
}

impl fmt::Display for SeedPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (mono, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if mono.is_empty() {
                write!(f, "{c}")?;
            } else {
                let vars: Vec<String> = mono
                    .iter()
                    .map(|(v, e)| if *e == 1 { v.clone() } else { format!("{v}^{e}") })
                    .collect();
                if c.is_one() {
                    write!(f, "{}", vars.join("*"))?;
                } else {
                    write!(f, "({})*{}", c, vars.join("*"))?;
                }
            }
        }
        Ok(())
    }
}

impl SeedPoly {
    pub fn zero() -> Self {
        SeedPoly { terms: BTreeMap::new() }
    }

    pub fn constant(c: QuadExt) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(SeedMono::new(), c);
        }
        SeedPoly { terms }
    }

    pub fn symbol(name: impl Into<String>, ctx: &QuadCtx) -> Self {
        let mut mono = SeedMono::new();
        mono.insert(name.into(), 1);
        let mut terms = BTreeMap::new();
        terms.insert(mono, ctx.one());
        SeedPoly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms.keys().next().unwrap().is_empty())
    }

    /// The constant coefficient if the polynomial is constant.
    pub fn as_constant(&self) -> Option<&QuadExt> {
        if self.terms.is_empty() {
            None // caller handles zero separately; no ctx to conjure one from
        } else if self.is_constant() {
            self.terms.values().next()
        } else {
            None
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SeedMono, &QuadExt)> {
        self.terms.iter()
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().flat_map(|m| m.keys().map(|s| s.as_str()))
    }

    pub fn add(&self, other: &SeedPoly) -> SeedPoly {
        let mut terms = self.terms.clone();
        for (mono, c) in &other.terms {
            match terms.get_mut(mono) {
                Some(existing) => {
                    let sum = existing.add(c);
                    if sum.is_zero() {
                        terms.remove(mono);
                    } else {
                        *existing = sum;
                    }
                }
                None => {
                    terms.insert(mono.clone(), c.clone());
                }
            }
        }
        SeedPoly { terms }
    }

    pub fn neg(&self) -> SeedPoly {
        SeedPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect() }
    }

    pub fn sub(&self, other: &SeedPoly) -> SeedPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &SeedPoly) -> SeedPoly {
        let mut acc: BTreeMap<SeedMono, QuadExt> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut mono = m1.clone();
                for (v, e) in m2 {
                    *mono.entry(v.clone()).or_insert(0) += e;
                }
                let prod = c1.mul(c2);
                match acc.get_mut(&mono) {
                    Some(existing) => {
                        let sum = existing.add(&prod);
                        if sum.is_zero() {
                            acc.remove(&mono);
                        } else {
                            *existing = sum;
                        }
                    }
                    None => {
                        if !prod.is_zero() {
                            acc.insert(mono, prod);
                        }
                    }
                }
            }
        }
        SeedPoly { terms: acc }
    }

    pub fn scale(&self, c: &QuadExt) -> SeedPoly {
        if c.is_zero() {
            return SeedPoly::zero();
        }
        SeedPoly { terms: self.terms.iter().map(|(m, k)| (m.clone(), k.mul(c))).collect() }
    }

    pub fn pow(&self, e: u32) -> SeedPoly {
        let mut acc: Option<SeedPoly> = None;
        for _ in 0..e {
            acc = Some(match acc {
                None => self.clone(),
                Some(a) => a.mul(self),
            });
        }
        acc.unwrap_or_else(|| {
            // empty product is 1; needs a context from self if available
            match self.terms.values().next() {
                Some(c) => SeedPoly::constant(c.ctx().one()),
                None => SeedPoly::zero(), // 0^0 never asked for by callers
            }
        })
    }

    /// Conjugates every coefficient (sqrt(D) -> -sqrt(D)).
    pub fn conj(&self) -> SeedPoly {
        SeedPoly { terms: self.terms.iter().map(|(m, c)| (m.clone(), c.conj())).collect() }
    }

    /// Ring-homomorphic substitution of rational values for all seed symbols.
    pub fn substitute(&self, bindings: &BTreeMap<String, Rational>, ctx: &QuadCtx) -> Result<QuadExt> {
        let mut acc = ctx.zero();
        for (mono, c) in &self.terms {
            let mut term = c.clone();
            for (v, e) in mono {
                let val = bindings.get(v).ok_or_else(|| Error::UnboundSeed(v.clone()))?;
                let mut pe = Rational::one();
                for _ in 0..*e {
                    pe *= val;
                }
                term = term.scale(&pe);
            }
            acc = acc.add(&term);
        }
        Ok(acc)
    }
}

/// Renders a rational as a parenthesized factor when needed.
pub fn display_coef(r: &Rational) -> String {
    display_rational(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, ratio};

    fn ctx() -> QuadCtx {
        QuadCtx::golden()
    }

    fn sym(name: &str) -> SeedPoly {
        SeedPoly::symbol(name, &ctx())
    }

    /// e_G = G0^2 - G1^2 + G0*G1.
    fn e_g() -> SeedPoly {
        let g0 = sym("G0");
        let g1 = sym("G1");
        g0.mul(&g0).sub(&g1.mul(&g1)).add(&g0.mul(&g1))
    }

    #[test]
    fn substitute_fibonacci_seeds() {
        // e_G at (G0, G1) = (0, 1) is -1.
        let mut b = BTreeMap::new();
        b.insert("G0".to_string(), rat(0));
        b.insert("G1".to_string(), rat(1));
        assert_eq!(e_g().substitute(&b, &ctx()).unwrap(), ctx().from_int(-1));
    }

    #[test]
    fn substitute_lucas_seeds() {
        // e_L = 5 for seeds (2, 1).
        let mut b = BTreeMap::new();
        b.insert("G0".to_string(), rat(2));
        b.insert("G1".to_string(), rat(1));
        assert_eq!(e_g().substitute(&b, &ctx()).unwrap(), ctx().from_int(5));
    }

    #[test]
    fn substitute_constant_ignores_bindings() {
        let p = SeedPoly::constant(ctx().from_int(7));
        assert_eq!(p.substitute(&BTreeMap::new(), &ctx()).unwrap(), ctx().from_int(7));
    }

    #[test]
    fn unbound_symbol_errors() {
        let p = sym("Z0");
        assert_eq!(
            p.substitute(&BTreeMap::new(), &ctx()),
            Err(Error::UnboundSeed("Z0".into()))
        );
    }

    #[test]
    fn no_zero_coefficients_stored() {
        let g0 = sym("G0");
        let diff = g0.sub(&g0);
        assert!(diff.is_zero());
        assert_eq!(diff.terms.len(), 0);
        let x = g0.add(&SeedPoly::constant(ctx().from_rational(ratio(1, 2))));
        let y = x.sub(&g0);
        assert!(y.is_constant());
    }

    #[test]
    fn substitution_is_ring_homomorphism() {
        let mut b = BTreeMap::new();
        b.insert("G0".to_string(), ratio(3, 2));
        b.insert("G1".to_string(), rat(-4));
        let x = e_g();
        let y = sym("G1").mul(&sym("G0")).add(&SeedPoly::constant(ctx().radical()));
        let lhs = x.mul(&y).substitute(&b, &ctx()).unwrap();
        let rhs = x.substitute(&b, &ctx()).unwrap().mul(&y.substitute(&b, &ctx()).unwrap());
        assert_eq!(lhs, rhs);
        let lhs = x.add(&y).substitute(&b, &ctx()).unwrap();
        let rhs = x.substitute(&b, &ctx()).unwrap().add(&y.substitute(&b, &ctx()).unwrap());
        assert_eq!(lhs, rhs);
    }
}

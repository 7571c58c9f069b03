//! Laurent polynomials in invertible indeterminates with SeedPoly
//! coefficients: the canonical carrier for Binet expansions.
//!
//! The canonicalizer assigns one variable x_i = tau^{k_i} per free index
//! (plus z_i = q^{k_i} when |q| != 1); exponents may be negative.

use std::collections::BTreeMap;
use std::fmt;

use crate::seedpoly::SeedPoly;

#[derive(Clone, PartialEq, Eq)]
pub struct LaurentPoly {
    nvars: usize,
    terms: BTreeMap<Vec<i64>, SeedPoly>,
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (exps, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "[{}]*({})", exps.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","), c)?;
        }
        Ok(())
    }
}

impl LaurentPoly {
    pub fn zero(nvars: usize) -> Self {
        LaurentPoly { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: SeedPoly) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(vec![0; nvars], c);
        }
        LaurentPoly { nvars, terms }
    }

    /// c * prod_i v_i^{exps[i]}.
    pub fn monomial(exps: Vec<i64>, c: SeedPoly) -> Self {
        let nvars = exps.len();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exps, c);
        }
        LaurentPoly { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &SeedPoly)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &LaurentPoly) -> LaurentPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            match terms.get_mut(e) {
                Some(existing) => {
                    let sum = existing.add(c);
                    if sum.is_zero() {
                        terms.remove(e);
                    } else {
                        *existing = sum;
                    }
                }
                None => {
                    terms.insert(e.clone(), c.clone());
                }
            }
        }
        LaurentPoly { nvars: self.nvars, terms }
    }

    pub fn neg(&self) -> LaurentPoly {
        LaurentPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &LaurentPoly) -> LaurentPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &LaurentPoly) -> LaurentPoly {
        assert_eq!(self.nvars, other.nvars);
        let mut acc: BTreeMap<Vec<i64>, SeedPoly> = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let exps: Vec<i64> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                let prod = c1.mul(c2);
                if prod.is_zero() {
                    continue;
                }
                match acc.get_mut(&exps) {
                    Some(existing) => {
                        let sum = existing.add(&prod);
                        if sum.is_zero() {
                            acc.remove(&exps);
                        } else {
                            *existing = sum;
                        }
                    }
                    None => {
                        acc.insert(exps, prod);
                    }
                }
            }
        }
        LaurentPoly { nvars: self.nvars, terms: acc }
    }

    pub fn scale(&self, c: &SeedPoly) -> LaurentPoly {
        if c.is_zero() {
            return LaurentPoly::zero(self.nvars);
        }
        let mut terms = BTreeMap::new();
        for (e, k) in &self.terms {
            let prod = k.mul(c);
            if !prod.is_zero() {
                terms.insert(e.clone(), prod);
            }
        }
        LaurentPoly { nvars: self.nvars, terms }
    }

    pub fn pow(&self, e: u32) -> LaurentPoly {
        let mut acc: Option<LaurentPoly> = None;
        for _ in 0..e {
            acc = Some(match acc {
                None => self.clone(),
                Some(a) => a.mul(self),
            });
        }
        acc.unwrap_or_else(|| {
            // empty product: 1 needs a one-coefficient; callers only take
            // pow(0) of nonzero polys built from a context.
            match self.terms.values().next() {
                Some(c) => match c.terms().next() {
                    Some((_, q)) => LaurentPoly::constant(self.nvars, SeedPoly::constant(q.ctx().one())),
                    None => LaurentPoly::zero(self.nvars),
                },
                None => LaurentPoly::zero(self.nvars),
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::QuadCtx;
    use crate::seedpoly::SeedPoly;

    fn c(n: i64) -> SeedPoly {
        SeedPoly::constant(QuadCtx::golden().from_int(n))
    }

    #[test]
    fn negative_exponents_invertible() {
        // x * x^-1 = 1
        let x = LaurentPoly::monomial(vec![1], c(1));
        let xinv = LaurentPoly::monomial(vec![-1], c(1));
        assert_eq!(x.mul(&xinv), LaurentPoly::constant(1, c(1)));
    }

    #[test]
    fn normalization_drops_zeros() {
        let x = LaurentPoly::monomial(vec![2, -1], c(3));
        let y = LaurentPoly::monomial(vec![2, -1], c(-3));
        assert!(x.add(&y).is_zero());
    }

    #[test]
    fn distributive_law() {
        let a = LaurentPoly::monomial(vec![1], c(2)).add(&LaurentPoly::monomial(vec![-2], c(5)));
        let b = LaurentPoly::monomial(vec![3], c(-1)).add(&LaurentPoly::constant(1, c(7)));
        let d = LaurentPoly::monomial(vec![0], c(4));
        let lhs = a.mul(&b.add(&d));
        let rhs = a.mul(&b).add(&a.mul(&d));
        assert_eq!(lhs, rhs);
    }
}

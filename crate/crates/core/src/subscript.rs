//! Integer-valued subscript expressions.
//!
//! Subscripts are kept in a canonical "sum of integer-coefficient monomials"
//! form the whole time: a monomial is a sorted product of atoms, where an
//! atom is an index variable or an exponential base^(subscript) with integer
//! base >= 2. This makes structural equality decide affine equality, which
//! the rewrite rules and the prover both rely on.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubAtom {
    Var(String),
    /// base^(exponent), base >= 2.
    Pow(i64, SubscriptExpr),
}

/// Sorted multiset of atoms; [] is the constant monomial.
pub type SubMono = Vec<SubAtom>;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SubscriptExpr {
    terms: BTreeMap<SubMono, i64>,
}

impl fmt::Debug for SubscriptExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl SubscriptExpr {
    pub fn constant(c: i64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0 {
            terms.insert(Vec::new(), c);
        }
        SubscriptExpr { terms }
    }

    pub fn var(name: impl Into<String>) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![SubAtom::Var(name.into())], 1);
        SubscriptExpr { terms }
    }

    fn insert(terms: &mut BTreeMap<SubMono, i64>, mono: SubMono, c: i64) {
        if c == 0 {
            return;
        }
        let entry = terms.entry(mono).or_insert(0);
        *entry += c;
        if *entry == 0 {
            let key: Vec<SubMono> = terms.iter().filter(|(_, v)| **v == 0).map(|(k, _)| k.clone()).collect();
            for k in key {
                terms.remove(&k);
            }
        }
    }

    pub fn add(&self, other: &SubscriptExpr) -> SubscriptExpr {
        let mut terms = self.terms.clone();
        for (m, c) in &other.terms {
            Self::insert(&mut terms, m.clone(), *c);
        }
        SubscriptExpr { terms }
    }

    pub fn neg(&self) -> SubscriptExpr {
        SubscriptExpr { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }

    pub fn sub(&self, other: &SubscriptExpr) -> SubscriptExpr {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &SubscriptExpr) -> SubscriptExpr {
        let mut terms = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mut mono = m1.clone();
                mono.extend(m2.iter().cloned());
                mono.sort();
                Self::insert(&mut terms, mono, c1 * c2);
            }
        }
        SubscriptExpr { terms }
    }

    pub fn scale(&self, c: i64) -> SubscriptExpr {
        self.mul(&SubscriptExpr::constant(c))
    }

    pub fn shift(&self, c: i64) -> SubscriptExpr {
        self.add(&SubscriptExpr::constant(c))
    }

    /// base^(exp) with base >= 2; folds when the exponent is a small constant.
    pub fn int_pow(base: i64, exp: SubscriptExpr) -> Result<SubscriptExpr> {
        if base < 2 {
            return Err(Error::NotDifferentiable(format!(
                "exponential base {base} in subscript must be >= 2"
            )));
        }
        if let Some(c) = exp.as_const() {
            if c >= 0 {
                if let Some(v) = base.checked_pow(c.min(62) as u32) {
                    if c <= 62 {
                        return Ok(SubscriptExpr::constant(v));
                    }
                }
                return Err(Error::SubscriptOverflow);
            }
            return Err(Error::NegativeSubscriptExponent(c));
        }
        let mut terms = BTreeMap::new();
        terms.insert(vec![SubAtom::Pow(base, exp)], 1);
        Ok(SubscriptExpr { terms })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_const(&self) -> Option<i64> {
        match self.terms.len() {
            0 => Some(0),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_empty().then_some(*c)
            }
            _ => None,
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for mono in self.terms.keys() {
            for atom in mono {
                match atom {
                    SubAtom::Var(v) => {
                        out.insert(v.clone());
                    }
                    SubAtom::Pow(_, e) => out.extend(e.vars()),
                }
            }
        }
        out
    }

    pub fn contains_var(&self, name: &str) -> bool {
        self.terms.keys().any(|mono| {
            mono.iter().any(|atom| match atom {
                SubAtom::Var(v) => v == name,
                SubAtom::Pow(_, e) => e.contains_var(name),
            })
        })
    }

    /// Some((constant, var -> coefficient)) when the subscript is affine.
    pub fn affine(&self) -> Option<(i64, BTreeMap<String, i64>)> {
        let mut constant = 0;
        let mut coeffs = BTreeMap::new();
        for (mono, c) in &self.terms {
            match mono.as_slice() {
                [] => constant = *c,
                [SubAtom::Var(v)] => {
                    coeffs.insert(v.clone(), *c);
                }
                _ => return None,
            }
        }
        Some((constant, coeffs))
    }

    pub fn eval(&self, assignment: &BTreeMap<String, i64>) -> Result<i64> {
        let mut total: i64 = 0;
        for (mono, c) in &self.terms {
            let mut term: i64 = *c;
            for atom in mono {
                let v = match atom {
                    SubAtom::Var(v) => *assignment
                        .get(v)
                        .ok_or_else(|| Error::UnboundIndex(v.clone()))?,
                    SubAtom::Pow(base, e) => {
                        let exp = e.eval(assignment)?;
                        if exp < 0 {
                            return Err(Error::NegativeSubscriptExponent(exp));
                        }
                        if exp > 62 {
                            return Err(Error::SubscriptOverflow);
                        }
                        base.checked_pow(exp as u32).ok_or(Error::SubscriptOverflow)?
                    }
                };
                term = term.checked_mul(v).ok_or(Error::SubscriptOverflow)?;
            }
            total = total.checked_add(term).ok_or(Error::SubscriptOverflow)?;
        }
        Ok(total)
    }

    /// Structural partial derivative with respect to an index variable.
    /// Exponentials with wrt-free exponents are constants; a wrt occurring
    /// inside an exponent is unsupported.
    pub fn derivative(&self, wrt: &str) -> Result<SubscriptExpr> {
        let mut acc = SubscriptExpr::constant(0);
        for (mono, c) in &self.terms {
            for atom in mono {
                if let SubAtom::Pow(_, e) = atom {
                    if e.contains_var(wrt) {
                        return Err(Error::NotDifferentiable(format!(
                            "index '{wrt}' occurs in an exponential exponent of a subscript"
                        )));
                    }
                }
            }
            // product rule over the occurrences of wrt in the monomial
            for (i, atom) in mono.iter().enumerate() {
                if matches!(atom, SubAtom::Var(v) if v == wrt) {
                    let mut rest = mono.clone();
                    rest.remove(i);
                    let mut term = BTreeMap::new();
                    Self::insert(&mut term, rest, *c);
                    acc = acc.add(&SubscriptExpr { terms: term });
                }
            }
        }
        Ok(acc)
    }

    /// Substitutes an index variable by a subscript expression.
    pub fn substitute(&self, var: &str, replacement: &SubscriptExpr) -> SubscriptExpr {
        let mut acc = SubscriptExpr::constant(0);
        for (mono, c) in &self.terms {
            let mut term = SubscriptExpr::constant(*c);
            for atom in mono {
                let factor = match atom {
                    SubAtom::Var(v) if v == var => replacement.clone(),
                    SubAtom::Var(v) => SubscriptExpr::var(v.clone()),
                    SubAtom::Pow(b, e) => {
                        SubscriptExpr::int_pow(*b, e.substitute(var, replacement))
                            .expect("base already validated")
                    }
                };
                term = term.mul(&factor);
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// Key ordering subscripts for pivot selection: compares the non-constant
    /// monomials first, the constant offset last, after dropping the given
    /// (summation-bound) variables.
    pub fn pivot_key(&self, drop: &BTreeSet<String>) -> (Vec<(SubMono, i64)>, i64) {
        let dropped = if drop.is_empty() {
            self.clone()
        } else {
            let mut acc = self.clone();
            for v in drop {
                acc = acc.substitute(v, &SubscriptExpr::constant(0));
            }
            acc
        };
        let mut monos = Vec::new();
        let mut constant = 0;
        for (m, c) in &dropped.terms {
            if m.is_empty() {
                constant = *c;
            } else {
                monos.push((m.clone(), *c));
            }
        }
        (monos, constant)
    }
}

impl fmt::Display for SubscriptExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // variables juxtapose (2kj); exponential atoms get explicit stars
        let mono_str = |mono: &SubMono| -> String {
            let mut out = String::new();
            for a in mono {
                match a {
                    SubAtom::Var(v) => out.push_str(v),
                    SubAtom::Pow(b, e) => {
                        if !out.is_empty() {
                            out.push('*');
                        }
                        out.push_str(&format!("{b}^({e})"));
                    }
                }
            }
            out
        };
        // variables first (BTree order), constant offset last
        let mut first = true;
        let mut write_term = |f: &mut fmt::Formatter<'_>, c: i64, body: Option<String>| -> fmt::Result {
            let (sign, mag) = if c < 0 { ("-", -c) } else { ("+", c) };
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, "{sign}")?;
            }
            match body {
                Some(b) if mag == 1 => write!(f, "{b}"),
                Some(b) if b.starts_with(|c: char| c.is_ascii_digit()) => write!(f, "{mag}*{b}"),
                Some(b) => write!(f, "{mag}{b}"),
                None => write!(f, "{mag}"),
            }
        };
        for (mono, c) in self.terms.iter().filter(|(m, _)| !m.is_empty()) {
            write_term(f, *c, Some(mono_str(mono)))?;
        }
        if let Some(c) = self.terms.get(&Vec::new()) {
            write_term(f, *c, None)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> SubscriptExpr {
        SubscriptExpr::var("k")
    }
    fn m() -> SubscriptExpr {
        SubscriptExpr::var("m")
    }

    #[test]
    fn canonical_form_merges() {
        // k + k - 2k = 0
        let e = k().add(&k()).sub(&k().scale(2));
        assert!(e.is_zero());
        // 2k + m - 1 displays variables first
        let e = k().scale(2).add(&m()).shift(-1);
        assert_eq!(e.to_string(), "2k+m-1");
    }

    #[test]
    fn structural_equality_decides_affine_equality() {
        let a = k().scale(2).shift(1);
        let b = k().add(&k()).shift(2).shift(-1);
        assert_eq!(a, b);
    }

    #[test]
    fn eval_and_overflow() {
        let mut asg = BTreeMap::new();
        asg.insert("k".to_string(), 3);
        asg.insert("j".to_string(), 4);
        // k*2^(j) at k=3, j=4 -> 48
        let e = k().mul(&SubscriptExpr::int_pow(2, SubscriptExpr::var("j")).unwrap());
        assert_eq!(e.eval(&asg).unwrap(), 48);
        let mut neg = asg.clone();
        neg.insert("j".to_string(), -1);
        assert!(matches!(e.eval(&neg), Err(Error::NegativeSubscriptExponent(-1))));
    }

    #[test]
    fn derivative_with_chain_factor() {
        // d(2k + m - 1)/dk = 2
        let e = k().scale(2).add(&m()).shift(-1);
        assert_eq!(e.derivative("k").unwrap(), SubscriptExpr::constant(2));
        // d(r + 2kj)/dk = 2j
        let e = SubscriptExpr::var("r").add(&k().mul(&SubscriptExpr::var("j")).scale(2));
        assert_eq!(e.derivative("k").unwrap(), SubscriptExpr::var("j").scale(2));
        // d(k*2^(j))/dj is unsupported
        let e = k().mul(&SubscriptExpr::int_pow(2, SubscriptExpr::var("j")).unwrap());
        assert!(e.derivative("j").is_err());
        assert_eq!(e.derivative("k").unwrap().to_string(), "2^(j)");
    }

    #[test]
    fn substitution_rewrites_everywhere() {
        // (2k+1)[k -> k-1] = 2k-1
        let e = k().scale(2).shift(1);
        assert_eq!(e.substitute("k", &k().shift(-1)), k().scale(2).shift(-1));
        // identity substitution
        assert_eq!(e.substitute("k", &k()), e);
    }

    #[test]
    fn affine_extraction() {
        let e = k().scale(2).add(&m()).shift(-1);
        let (c, coeffs) = e.affine().unwrap();
        assert_eq!(c, -1);
        assert_eq!(coeffs.get("k"), Some(&2));
        assert_eq!(coeffs.get("m"), Some(&1));
        let nonaffine = k().mul(&m());
        assert!(nonaffine.affine().is_none());
    }

    #[test]
    fn pivot_key_ordering() {
        // 0 < k < k+1 < 2k+1
        let zero = SubscriptExpr::constant(0);
        let drop = BTreeSet::new();
        let mut keys = vec![
            k().shift(1).pivot_key(&drop),
            zero.pivot_key(&drop),
            k().scale(2).shift(1).pivot_key(&drop),
            k().pivot_key(&drop),
        ];
        keys.sort();
        assert_eq!(keys[0], zero.pivot_key(&drop));
        assert_eq!(keys[1], k().pivot_key(&drop));
        assert_eq!(keys[2], k().shift(1).pivot_key(&drop));
        // bound variable dropped: k+j with j bound reduces to k
        let mut dropj = BTreeSet::new();
        dropj.insert("j".to_string());
        assert_eq!(k().add(&SubscriptExpr::var("j")).pivot_key(&dropj), k().pivot_key(&dropj));
    }

    #[test]
    fn constant_exponential_folds() {
        let e = SubscriptExpr::int_pow(2, SubscriptExpr::constant(5)).unwrap();
        assert_eq!(e.as_const(), Some(32));
        assert!(SubscriptExpr::int_pow(1, k()).is_err());
        assert!(SubscriptExpr::int_pow(2, SubscriptExpr::constant(-1)).is_err());
    }
}

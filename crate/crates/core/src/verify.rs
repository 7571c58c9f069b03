//! Exact verification by instantiation over integer index grids.
//!
//! Summation identities (and anything else outside the canonicalizer's
//! fragment except arctangents) are checked by exact evaluation of both sides
//! at every admissible grid point. Symbolic seeds stay symbolic: point values
//! are quotients of seed polynomials over Q(sqrt(D)) and equality is decided
//! by cross-multiplication. Points where a denominator vanishes are skipped
//! and counted.

use std::collections::BTreeMap;
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Constraint, Expr, Identity, Parity};
use crate::family::FamilyEnv;
use crate::quad::QuadExt;
use crate::rational::Rational;
use crate::seedpoly::SeedPoly;

/// Inclusive integer ranges per index variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Grid {
    pub ranges: BTreeMap<String, (i64, i64)>,
}

impl Grid {
    pub fn empty() -> Self {
        Grid { ranges: BTreeMap::new() }
    }

    /// Defaults per the verification protocol: indices span [-5, 5], except a
    /// variable named n (a sum length) which spans [0, 4]; explicit lower
    /// bounds from constraints tighten the ranges.
    pub fn default_for(id: &Identity) -> Self {
        let mut ranges = BTreeMap::new();
        for v in &id.free_indices {
            let r = if v == "n" { (0, 4) } else { (-5, 5) };
            ranges.insert(v.clone(), r);
        }
        for c in &id.constraints {
            if let Constraint::AtLeast(v, b) = c {
                if let Some(r) = ranges.get_mut(v) {
                    r.0 = (*b).max(r.0);
                    r.1 = r.1.max(r.0);
                }
            }
        }
        Grid { ranges }
    }

    pub fn with_range(mut self, var: &str, lo: i64, hi: i64) -> Self {
        self.ranges.insert(var.to_string(), (lo, hi));
        self
    }

    /// Parses "k=-5..5,n=0..4".
    pub fn parse(s: &str) -> Result<Self> {
        let mut ranges = BTreeMap::new();
        for part in s.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let (var, range) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad grid component '{part}'")))?;
            let (lo, hi) = range
                .split_once("..")
                .ok_or_else(|| Error::Config(format!("bad grid range '{range}'")))?;
            let lo: i64 = lo.trim().parse().map_err(|_| Error::Config(format!("bad bound '{lo}'")))?;
            let hi: i64 = hi.trim().parse().map_err(|_| Error::Config(format!("bad bound '{hi}'")))?;
            if lo > hi {
                return Err(Error::Config(format!("empty range for '{var}'")));
            }
            ranges.insert(var.trim().to_string(), (lo, hi));
        }
        Ok(Grid { ranges })
    }

    /// All admissible points in lexicographic order of the variable names.
    pub fn points(&self, constraints: &[Constraint]) -> Vec<BTreeMap<String, i64>> {
        let mut points = vec![BTreeMap::new()];
        for (v, (lo, hi)) in &self.ranges {
            let mut next = Vec::with_capacity(points.len() * ((hi - lo + 1) as usize));
            for p in &points {
                for val in *lo..=*hi {
                    let mut q = p.clone();
                    q.insert(v.clone(), val);
                    next.push(q);
                }
            }
            points = next;
        }
        points.retain(|p| {
            constraints.iter().all(|c| match c {
                Constraint::Parity(v, parity) => match p.get(v) {
                    Some(x) => match parity {
                        Parity::Even => x.rem_euclid(2) == 0,
                        Parity::Odd => x.rem_euclid(2) == 1,
                    },
                    None => true,
                },
                Constraint::AtLeast(v, b) => p.get(v).map_or(true, |x| x >= b),
                Constraint::Text(_) => true,
            })
        });
        points
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub assignment: BTreeMap<String, i64>,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub identity: String,
    pub grid: Grid,
    pub points: usize,
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
    pub first_counterexample: Option<Counterexample>,
    pub elapsed_ms: u128,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.fail == 0 && self.pass > 0
    }
}

/// A value: quotient of seed polynomials.
#[derive(Clone, Debug)]
pub struct SeedFrac {
    pub num: SeedPoly,
    pub den: SeedPoly,
}

impl SeedFrac {
    fn scalar(c: QuadExt) -> Self {
        let one = SeedPoly::constant(c.ctx().one());
        SeedFrac { num: SeedPoly::constant(c), den: one }
    }

    fn add(&self, other: &SeedFrac) -> SeedFrac {
        SeedFrac {
            num: self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
    }

    fn mul(&self, other: &SeedFrac) -> SeedFrac {
        SeedFrac { num: self.num.mul(&other.num), den: self.den.mul(&other.den) }
    }

    fn neg(&self) -> SeedFrac {
        SeedFrac { num: self.num.neg(), den: self.den.clone() }
    }

    fn inv(&self) -> Result<SeedFrac> {
        if self.num.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(SeedFrac { num: self.den.clone(), den: self.num.clone() })
    }

    fn pow(&self, e: i64) -> Result<SeedFrac> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let n = e.unsigned_abs() as u32;
        Ok(SeedFrac { num: base.num.pow(n), den: base.den.pow(n) })
    }

    fn eq_value(&self, other: &SeedFrac) -> bool {
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

/// Exact binomial coefficient for any integer top and nonnegative bottom;
/// negative bottom gives 0.
pub fn exact_binomial(a: i64, b: i64) -> Rational {
    if b < 0 {
        return Rational::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..b {
        num *= BigInt::from(a - i);
        den *= BigInt::from(i + 1);
    }
    Rational::new(num, den)
}

pub struct Evaluator<'a> {
    pub env: &'a FamilyEnv,
}

impl<'a> Evaluator<'a> {
    pub fn new(env: &'a FamilyEnv) -> Self {
        Evaluator { env }
    }

    /// Exact evaluation at an integer assignment; symbolic seeds remain
    /// symbolic. DivisionByZero surfaces when a denominator vanishes at the
    /// point (the caller records a skip).
    pub fn eval(&self, e: &Expr, asg: &BTreeMap<String, i64>) -> Result<SeedFrac> {
        let ctx = self.env.ctx();
        Ok(match e {
            Expr::Rat(r) => SeedFrac::scalar(ctx.from_rational(r.clone())),
            Expr::RadicalDelta => SeedFrac::scalar(ctx.radical()),
            Expr::ParamP => SeedFrac::scalar(ctx.from_rational(self.env.p().clone())),
            Expr::ParamQ => SeedFrac::scalar(ctx.from_rational(self.env.q().clone())),
            Expr::Pi | Expr::LnTau | Expr::ImagUnit => {
                return Err(Error::NotNumeric(format!("transcendental node {e:?}")));
            }
            Expr::Arctan(_) => {
                return Err(Error::NotNumeric("arctangent requires numeric verification".into()));
            }
            Expr::DerivSeq(..) | Expr::DerivMinusOne(..) => {
                return Err(Error::MalformedDerivation("marker in evaluation".into()));
            }
            Expr::SeqTerm(fam, h) => {
                let j = h.eval(asg)?;
                let spec = self.env.family(fam)?;
                SeedFrac {
                    num: spec.term_at(j),
                    den: SeedPoly::constant(ctx.one()),
                }
            }
            Expr::TauPow(h) => {
                let j = h.eval(asg)?;
                SeedFrac::scalar(ctx.tau(self.env.p()).pow(j)?)
            }
            Expr::SigmaPow(h) => {
                let j = h.eval(asg)?;
                SeedFrac::scalar(ctx.sigma(self.env.p()).pow(j)?)
            }
            Expr::MinusOnePow(h) => {
                let j = h.eval(asg)?;
                SeedFrac::scalar(ctx.from_int(if j.rem_euclid(2) == 0 { 1 } else { -1 }))
            }
            Expr::ConstPow(b, h) => {
                let j = h.eval(asg)?;
                SeedFrac::scalar(ctx.from_rational(rational_pow(&crate::rational::rat(*b), j)))
            }
            Expr::Index(h) => SeedFrac::scalar(ctx.from_int(h.eval(asg)?)),
            Expr::Binom(a, b) => {
                let av = a.eval(asg)?;
                let bv = b.eval(asg)?;
                SeedFrac::scalar(ctx.from_rational(exact_binomial(av, bv)))
            }
            Expr::Add(xs) => {
                let mut acc = SeedFrac::scalar(ctx.zero());
                for x in xs {
                    acc = acc.add(&self.eval(x, asg)?);
                }
                acc
            }
            Expr::Mul(xs) => {
                let mut acc = SeedFrac::scalar(ctx.one());
                for x in xs {
                    acc = acc.mul(&self.eval(x, asg)?);
                }
                acc
            }
            Expr::Neg(x) => self.eval(x, asg)?.neg(),
            Expr::Div(u, v) => {
                let fv = self.eval(v, asg)?;
                self.eval(u, asg)?.mul(&fv.inv()?)
            }
            Expr::IntPow(u, n) => self.eval(u, asg)?.pow(*n as i64)?,
            Expr::SymPow(u, h) => {
                let j = h.eval(asg)?;
                self.eval(u, asg)?.pow(j)?
            }
            Expr::Sum { var, lo, hi, body } => {
                let lov = lo.eval(asg)?;
                let hiv = hi.eval(asg)?;
                let mut acc = SeedFrac::scalar(ctx.zero());
                let mut inner = asg.clone();
                for j in lov..=hiv {
                    inner.insert(var.clone(), j);
                    acc = acc.add(&self.eval(body, &inner)?);
                }
                acc
            }
        })
    }
}

fn rational_pow(b: &Rational, e: i64) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..e.unsigned_abs() {
        acc *= b;
    }
    if e < 0 {
        acc = acc.recip();
    }
    acc
}

/// Evaluates both sides of the identity at every admissible grid point.
pub fn verify_instances(id: &Identity, grid: &Grid, env: &FamilyEnv) -> Result<VerifyReport> {
    let start = Instant::now();
    let points = grid.points(&id.constraints);
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let ev = Evaluator::new(env);
    enum Outcome {
        Pass,
        Skip,
        Fail(Counterexample),
    }
    let outcomes: Vec<Result<Outcome>> = points
        .par_iter()
        .map(|p| {
            let l = ev.eval(&id.lhs, p);
            let r = ev.eval(&id.rhs, p);
            match (l, r) {
                (Ok(l), Ok(r)) => {
                    if l.eq_value(&r) {
                        Ok(Outcome::Pass)
                    } else {
                        Ok(Outcome::Fail(Counterexample {
                            assignment: p.clone(),
                            lhs: format!("{}/{}", l.num, l.den),
                            rhs: format!("{}/{}", r.num, r.den),
                        }))
                    }
                }
                (Err(Error::DivisionByZero), _) | (_, Err(Error::DivisionByZero)) => {
                    Ok(Outcome::Skip)
                }
                (Err(e), _) | (_, Err(e)) => Err(e),
            }
        })
        .collect();
    let mut pass = 0;
    let mut fail = 0;
    let mut skipped = 0;
    let mut first_counterexample = None;
    // points are in lexicographic order; the first failure is deterministic
    for o in outcomes {
        match o? {
            Outcome::Pass => pass += 1,
            Outcome::Skip => skipped += 1,
            Outcome::Fail(ce) => {
                fail += 1;
                if first_counterexample.is_none() {
                    first_counterexample = Some(ce);
                }
            }
        }
    }
    Ok(VerifyReport {
        identity: id.provenance.clone(),
        grid: grid.clone(),
        points: points.len(),
        pass,
        fail,
        skipped,
        first_counterexample,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_identity;

    fn env() -> FamilyEnv {
        FamilyEnv::standard()
    }

    fn verify(text: &str, constraints: &[&str]) -> VerifyReport {
        let e = env();
        let mut id = parse_identity(text, &e).unwrap();
        for c in constraints {
            id.constraints.push(Constraint::parse(c).unwrap());
        }
        let grid = Grid::default_for(&id);
        verify_instances(&id, &grid, &e).unwrap()
    }

    #[test]
    fn hoggatt_bicknell_passes() {
        // the quartic alternating-sum identity on the default grid (n in 0..2 to stay fast here)
        let e = env();
        let id = parse_identity(
            "sum(j,0,4n+1, (-1)^(j-1)*binom(4n+1,j)*F[j+k]^4) = 25^n*(F[2n+k+1]^4 - F[2n+k]^4)",
            &e,
        )
        .unwrap();
        let grid = Grid::empty().with_range("n", 0, 2).with_range("k", -3, 3);
        let report = verify_instances(&id, &grid, &e).unwrap();
        assert!(report.all_pass(), "{report:?}");
    }

    #[test]
    fn corrupted_sum_fails_with_counterexample() {
        let e = env();
        let id = parse_identity(
            "sum(j,0,4n+1, (-1)^(j-1)*binom(4n+1,j)*F[j+k]^4) = 24^n*(F[2n+k+1]^4 - F[2n+k]^4)",
            &e,
        )
        .unwrap();
        let grid = Grid::empty().with_range("n", 0, 2).with_range("k", -3, 3);
        let report = verify_instances(&id, &grid, &e).unwrap();
        assert!(report.fail > 0);
        let ce = report.first_counterexample.unwrap();
        // smallest failing point in lex order has n >= 1 (n=0 makes 25^n = 24^n = 1)
        assert!(ce.assignment["n"] >= 1);
        // and it is the lexicographically first point: k=-3, n=1
        assert_eq!(ce.assignment["k"], -3);
        assert_eq!(ce.assignment["n"], 1);
    }

    #[test]
    fn parity_filter_applies() {
        // eq with "k even" filter: Long's identity
        let r = verify(
            "sum(j,0,n, binom(n,j)*F[r+2kj]) = L[k]^n*F[r+nk]",
            &["k even"],
        );
        assert!(r.all_pass(), "{r:?}");
        assert!(r.points < 11 * 11 * 5);
    }

    #[test]
    fn symbolic_seeds_stay_symbolic() {
        // Catalan generalization with G symbolic
        let r = verify(
            "F[k+r]*G[k-r+s] + F[k-r]*G[k+r+s] = 2*F[k]*G[k+s] + (-1)^(k+r+1)*F[r]^2*(G[s+1] + G[s-1])",
            &[],
        );
        assert!(r.all_pass(), "{r:?}");
    }

    #[test]
    fn zero_denominators_are_skipped() {
        // 1/F[k] = 1/F[k] skips k=0 where F_0 = 0
        let r = verify("1/F[k] = 1/F[k]", &[]);
        assert_eq!(r.skipped, 1);
        assert_eq!(r.pass + r.skipped, r.points);
    }

    #[test]
    fn empty_grid_errors() {
        let e = env();
        let id = parse_identity("F[k] = F[k]", &e).unwrap();
        let grid = Grid::empty().with_range("k", 2, 3);
        let mut id2 = id.clone();
        id2.constraints.push(Constraint::AtLeast("k".into(), 10));
        assert!(matches!(
            verify_instances(&id2, &grid, &e),
            Err(Error::EmptyGrid)
        ));
    }

    #[test]
    fn rabinowitz_exponential_subscripts() {
        // sum over k*2^j reciprocals with U = F at p=1, q=-1, k >= 1
        let r = verify(
            "sum(j,0,n, 1/U[k2^(j)]) = (1 + U[k-1])/U[k] + (1 - (-1)^k)/U[2k] - U[k2^(n)-1]/U[k2^(n)]",
            &["k >= 1", "n >= 1"],
        );
        assert!(r.all_pass(), "{r:?}");
    }

    #[test]
    fn determinism_identical_reports() {
        let a = verify("F[k+1]^2 + F[k]^2 = F[2k+1]", &[]);
        let b = verify("F[k+1]^2 + F[k]^2 = F[2k+1]", &[]);
        assert_eq!(a.pass, b.pass);
        assert_eq!(a.points, b.points);
        assert_eq!(
            serde_json::to_value(&a.first_counterexample).unwrap(),
            serde_json::to_value(&b.first_counterexample).unwrap()
        );
    }
}

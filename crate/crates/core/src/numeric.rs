//! High-precision numeric evaluation: the fallback for arctangent identities
//! and the finite-difference checks of the derivative facts that justify the
//! whole method. Numeric agreement is evidence, never proof.

use std::collections::BTreeMap;
use std::time::Instant;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Expr, Identity};
use crate::family::FamilyEnv;
use crate::quad::QuadExt;
use crate::rational::Rational;
use crate::verify::Grid;

const RM: RoundingMode = RoundingMode::ToEven;

pub struct NumSession {
    bits: usize,
    cc: Consts,
    pub digits: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct NumericMismatch {
    pub assignment: BTreeMap<String, i64>,
    pub lhs: String,
    pub rhs: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct NumericReport {
    pub identity: String,
    pub grid: Grid,
    pub digits: u32,
    pub points: usize,
    pub pass: usize,
    pub fail: usize,
    pub skipped: usize,
    /// Failures within tolerance of a nonzero multiple of pi: a principal
    /// branch was crossed somewhere. Reported, never wrapped away.
    pub branch_crossings: usize,
    pub first_mismatch: Option<NumericMismatch>,
    pub elapsed_ms: u128,
}

impl NumericReport {
    pub fn all_pass(&self) -> bool {
        self.fail == 0 && self.pass > 0
    }
}

impl NumSession {
    pub fn new(digits: u32) -> Result<Self> {
        if digits < 8 {
            return Err(Error::PrecisionTooLow(digits));
        }
        let bits = (digits as usize) * 10 / 3 + 64;
        let cc = Consts::new().map_err(|e| Error::NotNumeric(format!("constants cache: {e:?}")))?;
        Ok(NumSession { bits, cc, digits })
    }

    pub fn int(&self, v: i64) -> BigFloat {
        BigFloat::from_i64(v, self.bits)
    }

    pub fn rational(&mut self, r: &Rational) -> BigFloat {
        let num = BigFloat::parse(&r.numer().to_string(), Radix::Dec, self.bits, RM, &mut self.cc);
        let den = BigFloat::parse(&r.denom().to_string(), Radix::Dec, self.bits, RM, &mut self.cc);
        num.div(&den, self.bits, RM)
    }

    pub fn quad(&mut self, c: &QuadExt) -> BigFloat {
        let a = self.rational(c.rat_part());
        let b = self.rational(c.rad_part());
        let d = self.rational(c.ctx().disc()).sqrt(self.bits, RM);
        a.add(&b.mul(&d, self.bits, RM), self.bits, RM)
    }

    pub fn pi(&mut self) -> BigFloat {
        self.cc.pi(self.bits, RM)
    }

    pub fn tolerance(&mut self) -> BigFloat {
        // relative tolerance 10^-(digits-4)
        let exp = -(self.digits as i64 - 4);
        BigFloat::parse(&format!("1e{exp}"), Radix::Dec, self.bits, RM, &mut self.cc)
    }

    fn fmt(&mut self, x: &BigFloat) -> String {
        x.format(Radix::Dec, RM, &mut self.cc).unwrap_or_else(|_| format!("{x:?}"))
    }

    fn is_tiny(&mut self, x: &BigFloat) -> bool {
        // guards division: anything below 10^-(digits*2) is treated as zero
        let exp = -(self.digits as i64) * 2;
        let eps = BigFloat::parse(&format!("1e{exp}"), Radix::Dec, self.bits, RM, &mut self.cc);
        x.abs().cmp(&eps) == Some(-1)
    }

    /// Numeric value of an expression at an integer assignment. Families must
    /// have numeric seeds.
    pub fn eval(&mut self, e: &Expr, asg: &BTreeMap<String, i64>, env: &FamilyEnv) -> Result<BigFloat> {
        Ok(match e {
            Expr::Rat(r) => self.rational(r),
            Expr::RadicalDelta => self.rational(env.ctx().disc()).sqrt(self.bits, RM),
            Expr::ParamP => self.rational(env.p()),
            Expr::ParamQ => self.rational(env.q()),
            Expr::SeqTerm(fam, h) => {
                let j = h.eval(asg)?;
                let spec = env.family(fam)?;
                let t = spec.term_at(j);
                let c = t
                    .substitute(&BTreeMap::new(), env.ctx())
                    .map_err(|_| Error::NotNumeric(format!("family {fam} has symbolic seeds")))?;
                self.quad(&c)
            }
            Expr::TauPow(h) => {
                let j = h.eval(asg)?;
                let tau = env.ctx().tau(env.p()).pow(j)?;
                self.quad(&tau)
            }
            Expr::SigmaPow(h) => {
                let j = h.eval(asg)?;
                let sigma = env.ctx().sigma(env.p()).pow(j)?;
                self.quad(&sigma)
            }
            Expr::MinusOnePow(h) => {
                let j = h.eval(asg)?;
                self.int(if j.rem_euclid(2) == 0 { 1 } else { -1 })
            }
            Expr::ConstPow(b, h) => {
                let j = h.eval(asg)?;
                let base = self.int(*b);
                if j >= 0 {
                    base.powi(j as usize, self.bits, RM)
                } else {
                    let inv = self.int(1).div(&base, self.bits, RM);
                    inv.powi((-j) as usize, self.bits, RM)
                }
            }
            Expr::Index(h) => self.int(h.eval(asg)?),
            Expr::Binom(a, b) => {
                let av = a.eval(asg)?;
                let bv = b.eval(asg)?;
                // exact rational then to float
                let r = crate::verify::exact_binomial(av, bv);
                self.rational(&r)
            }
            Expr::Add(xs) => {
                let mut acc = self.int(0);
                for x in xs {
                    let v = self.eval(x, asg, env)?;
                    acc = acc.add(&v, self.bits, RM);
                }
                acc
            }
            Expr::Mul(xs) => {
                let mut acc = self.int(1);
                for x in xs {
                    let v = self.eval(x, asg, env)?;
                    acc = acc.mul(&v, self.bits, RM);
                }
                acc
            }
            Expr::Neg(x) => self.eval(x, asg, env)?.neg(),
            Expr::Div(u, v) => {
                let dv = self.eval(v, asg, env)?;
                if self.is_tiny(&dv) {
                    return Err(Error::DivisionByZero);
                }
                let du = self.eval(u, asg, env)?;
                du.div(&dv, self.bits, RM)
            }
            Expr::IntPow(u, n) => {
                let v = self.eval(u, asg, env)?;
                v.powi(*n as usize, self.bits, RM)
            }
            Expr::SymPow(u, h) => {
                let j = h.eval(asg)?;
                let v = self.eval(u, asg, env)?;
                if j >= 0 {
                    v.powi(j as usize, self.bits, RM)
                } else {
                    if self.is_tiny(&v) {
                        return Err(Error::DivisionByZero);
                    }
                    let inv = self.int(1).div(&v, self.bits, RM);
                    inv.powi((-j) as usize, self.bits, RM)
                }
            }
            Expr::Sum { var, lo, hi, body } => {
                let lov = lo.eval(asg)?;
                let hiv = hi.eval(asg)?;
                let mut acc = self.int(0);
                let mut inner = asg.clone();
                for j in lov..=hiv {
                    inner.insert(var.clone(), j);
                    let v = self.eval(body, &inner, env)?;
                    acc = acc.add(&v, self.bits, RM);
                }
                acc
            }
            Expr::Arctan(x) => {
                let v = self.eval(x, asg, env)?;
                v.atan(self.bits, RM, &mut self.cc)
            }
            Expr::Pi => self.pi(),
            Expr::LnTau => {
                let tau = self.quad(&env.ctx().tau(env.p()));
                tau.ln(self.bits, RM, &mut self.cc)
            }
            Expr::ImagUnit | Expr::DerivSeq(..) | Expr::DerivMinusOne(..) => {
                return Err(Error::NotNumeric(format!("cannot evaluate {e:?}")));
            }
        })
    }
}

/// High-precision floating check of an identity over a grid. Relative
/// tolerance 10^-(digits-4). Never reported as proof.
pub fn numeric_verify(
    id: &Identity,
    digits: u32,
    grid: &Grid,
    env: &FamilyEnv,
) -> Result<NumericReport> {
    let start = Instant::now();
    let mut s = NumSession::new(digits)?;
    let points = grid.points(&id.constraints);
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let tol = s.tolerance();
    let pi = s.pi();
    let mut pass = 0;
    let mut fail = 0;
    let mut skipped = 0;
    let mut branch_crossings = 0;
    let mut first_mismatch = None;
    for p in &points {
        let l = s.eval(&id.lhs, p, env);
        let r = s.eval(&id.rhs, p, env);
        let (l, r) = match (l, r) {
            (Ok(l), Ok(r)) => (l, r),
            (Err(Error::DivisionByZero), _) | (_, Err(Error::DivisionByZero)) => {
                skipped += 1;
                continue;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        };
        let diff = l.sub(&r, s.bits, RM).abs();
        // scale = max(1, |l|, |r|)
        let mut scale = s.int(1);
        for v in [&l, &r] {
            if v.abs().cmp(&scale) == Some(1) {
                scale = v.abs();
            }
        }
        let bound = tol.mul(&scale, s.bits, RM);
        if matches!(diff.cmp(&bound), Some(-1) | Some(0)) {
            pass += 1;
        } else {
            fail += 1;
            // branch check: is the gap a multiple of pi?
            let ratio = diff.div(&pi, s.bits, RM);
            let nearest = ratio.round(0, RM);
            let gap = ratio.sub(&nearest, s.bits, RM).abs();
            if !nearest.is_zero() && gap.cmp(&tol) == Some(-1) {
                branch_crossings += 1;
            }
            if first_mismatch.is_none() {
                first_mismatch = Some(NumericMismatch {
                    assignment: p.clone(),
                    lhs: s.fmt(&l),
                    rhs: s.fmt(&r),
                });
            }
        }
    }
    Ok(NumericReport {
        identity: id.provenance.clone(),
        grid: grid.clone(),
        digits,
        points: points.len(),
        pass,
        fail,
        skipped,
        branch_crossings,
        first_mismatch,
        elapsed_ms: start.elapsed().as_millis(),
    })
}

/// Complex value for function-form checks.
#[derive(Clone)]
struct Cx {
    re: BigFloat,
    im: BigFloat,
}

impl NumSession {
    fn cx_real(&self, re: BigFloat) -> Cx {
        Cx { re, im: self.int(0) }
    }

    fn cx_add(&self, a: &Cx, b: &Cx) -> Cx {
        Cx { re: a.re.add(&b.re, self.bits, RM), im: a.im.add(&b.im, self.bits, RM) }
    }

    fn cx_sub(&self, a: &Cx, b: &Cx) -> Cx {
        Cx { re: a.re.sub(&b.re, self.bits, RM), im: a.im.sub(&b.im, self.bits, RM) }
    }

    fn cx_mul(&self, a: &Cx, b: &Cx) -> Cx {
        Cx {
            re: a.re.mul(&b.re, self.bits, RM).sub(&a.im.mul(&b.im, self.bits, RM), self.bits, RM),
            im: a.re.mul(&b.im, self.bits, RM).add(&a.im.mul(&b.re, self.bits, RM), self.bits, RM),
        }
    }

    fn cx_div(&mut self, a: &Cx, b: &Cx) -> Result<Cx> {
        let n2 = b
            .re
            .mul(&b.re, self.bits, RM)
            .add(&b.im.mul(&b.im, self.bits, RM), self.bits, RM);
        if self.is_tiny(&n2.clone().sqrt(self.bits, RM)) {
            return Err(Error::DivisionByZero);
        }
        let conj = Cx { re: b.re.clone(), im: b.im.neg() };
        let num = self.cx_mul(a, &conj);
        Ok(Cx { re: num.re.div(&n2, self.bits, RM), im: num.im.div(&n2, self.bits, RM) })
    }

    fn cx_abs(&self, a: &Cx) -> BigFloat {
        a.re.mul(&a.re, self.bits, RM)
            .add(&a.im.mul(&a.im, self.bits, RM), self.bits, RM)
            .sqrt(self.bits, RM)
    }

    /// b^x for real b (principal branch when b < 0: |b|^x e^{i pi x}).
    fn cx_real_pow(&mut self, base: &BigFloat, x: &BigFloat) -> Cx {
        let mag = base.abs().ln(self.bits, RM, &mut self.cc).mul(x, self.bits, RM).exp(
            self.bits,
            RM,
            &mut self.cc,
        );
        if matches!(base.sign(), Some(astro_float::Sign::Neg)) {
            let phase = x.mul(&self.pi(), self.bits, RM);
            Cx {
                re: mag.mul(&phase.cos(self.bits, RM, &mut self.cc), self.bits, RM),
                im: mag.mul(&phase.sin(self.bits, RM, &mut self.cc), self.bits, RM),
            }
        } else {
            self.cx_real(mag)
        }
    }
}

/// Real-valued subscript evaluation: index variables may carry non-integer
/// values; exponential exponents must still evaluate to nonnegative integers.
fn eval_subscript_real(
    s: &NumSession,
    h: &crate::subscript::SubscriptExpr,
    asg: &BTreeMap<String, i64>,
    real_var: &str,
    x: &BigFloat,
) -> Result<BigFloat> {
    // decompose via pivot_key: monomials + constant
    let bits = s.bits;
    let (monos, c0) = h.pivot_key(&std::collections::BTreeSet::new());
    let mut total = BigFloat::from_i64(c0, bits);
    for (mono, c) in monos {
        let mut term = BigFloat::from_i64(c, bits);
        for atom in mono {
            match atom {
                crate::subscript::SubAtom::Var(v) => {
                    if v == real_var {
                        term = term.mul(x, bits, RM);
                    } else {
                        let val = *asg.get(&v).ok_or(Error::UnboundIndex(v.clone()))?;
                        term = term.mul(&BigFloat::from_i64(val, bits), bits, RM);
                    }
                }
                crate::subscript::SubAtom::Pow(b, e) => {
                    if e.contains_var(real_var) {
                        return Err(Error::NotNumeric(
                            "real index inside an exponential exponent".into(),
                        ));
                    }
                    let ev = e.eval(asg)?;
                    if ev < 0 {
                        return Err(Error::NegativeSubscriptExponent(ev));
                    }
                    let p = b.checked_pow(ev.min(62) as u32).ok_or(Error::SubscriptOverflow)?;
                    term = term.mul(&BigFloat::from_i64(p, bits), bits, RM);
                }
            }
        }
        total = total.add(&term, bits, RM);
    }
    Ok(total)
}

/// Complex evaluation of a function form: sequence terms become
/// A tau^h + B sigma^h with real h, (-1)^h becomes e^{i pi h}, with one index
/// taking a real value and the rest integers; symbolic seeds are sampled from
/// `seeds`.
fn eval_function_form(
    s: &mut NumSession,
    e: &Expr,
    asg: &BTreeMap<String, i64>,
    real_var: &str,
    x: &BigFloat,
    seeds: &BTreeMap<String, Rational>,
    env: &FamilyEnv,
) -> Result<Cx> {
    let bits = s.bits;
    Ok(match e {
        Expr::Rat(r) => {
            let v = s.rational(r);
            s.cx_real(v)
        }
        Expr::RadicalDelta => {
            let v = s.rational(env.ctx().disc()).sqrt(bits, RM);
            s.cx_real(v)
        }
        Expr::ParamP => {
            let v = s.rational(env.p());
            s.cx_real(v)
        }
        Expr::ParamQ => {
            let v = s.rational(env.q());
            s.cx_real(v)
        }
        Expr::SeqTerm(fam, h) => {
            let spec = env.family(fam)?;
            let hv = eval_subscript_real(s, h, asg, real_var, x)?;
            let crate::sequence::BinetPair { a, b } = spec.binet_coefficients();
            let av = a.substitute(seeds, env.ctx())?;
            let bv = b.substitute(seeds, env.ctx())?;
            let tau = s.quad(&env.ctx().tau(env.p()));
            let sigma = s.quad(&env.ctx().sigma(env.p()));
            let ta = s.cx_real_pow(&tau, &hv);
            let sb = s.cx_real_pow(&sigma, &hv);
            let avf = s.quad(&av);
            let bvf = s.quad(&bv);
            let left = s.cx_mul(&s.cx_real(avf), &ta);
            let right = s.cx_mul(&s.cx_real(bvf), &sb);
            s.cx_add(&left, &right)
        }
        Expr::TauPow(h) => {
            let hv = eval_subscript_real(s, h, asg, real_var, x)?;
            let tau = s.quad(&env.ctx().tau(env.p()));
            s.cx_real_pow(&tau, &hv)
        }
        Expr::SigmaPow(h) => {
            let hv = eval_subscript_real(s, h, asg, real_var, x)?;
            let sigma = s.quad(&env.ctx().sigma(env.p()));
            s.cx_real_pow(&sigma, &hv)
        }
        Expr::MinusOnePow(h) => {
            let hv = eval_subscript_real(s, h, asg, real_var, x)?;
            let minus_one = s.int(-1);
            s.cx_real_pow(&minus_one, &hv)
        }
        Expr::ConstPow(b, h) => {
            let hv = eval_subscript_real(s, h, asg, real_var, x)?;
            let base = s.int(*b);
            s.cx_real_pow(&base, &hv)
        }
        Expr::Index(h) => {
            let hv = eval_subscript_real(s, h, asg, real_var, x)?;
            s.cx_real(hv)
        }
        Expr::Binom(a, b) => {
            if a.contains_var(real_var) || b.contains_var(real_var) {
                return Err(Error::NotNumeric(
                    "real index inside a binomial coefficient".into(),
                ));
            }
            let r = crate::verify::exact_binomial(a.eval(asg)?, b.eval(asg)?);
            let v = s.rational(&r);
            s.cx_real(v)
        }
        Expr::Add(xs) => {
            let mut acc = s.cx_real(s.int(0));
            for t in xs {
                let v = eval_function_form(s, t, asg, real_var, x, seeds, env)?;
                acc = s.cx_add(&acc, &v);
            }
            acc
        }
        Expr::Mul(xs) => {
            let mut acc = s.cx_real(s.int(1));
            for t in xs {
                let v = eval_function_form(s, t, asg, real_var, x, seeds, env)?;
                acc = s.cx_mul(&acc, &v);
            }
            acc
        }
        Expr::Neg(t) => {
            let v = eval_function_form(s, t, asg, real_var, x, seeds, env)?;
            Cx { re: v.re.neg(), im: v.im.neg() }
        }
        Expr::Div(u, v) => {
            let uu = eval_function_form(s, u, asg, real_var, x, seeds, env)?;
            let vv = eval_function_form(s, v, asg, real_var, x, seeds, env)?;
            s.cx_div(&uu, &vv)?
        }
        Expr::IntPow(u, n) => {
            let base = eval_function_form(s, u, asg, real_var, x, seeds, env)?;
            let mut acc = s.cx_real(s.int(1));
            for _ in 0..*n {
                acc = s.cx_mul(&acc, &base);
            }
            acc
        }
        Expr::SymPow(u, h) => {
            if h.contains_var(real_var) {
                return Err(Error::NotNumeric("real index in a symbolic exponent".into()));
            }
            let n = h.eval(asg)?;
            let base = eval_function_form(s, u, asg, real_var, x, seeds, env)?;
            let mut acc = s.cx_real(s.int(1));
            for _ in 0..n.unsigned_abs() {
                acc = s.cx_mul(&acc, &base);
            }
            if n < 0 {
                acc = s.cx_div(&s.cx_real(s.int(1)), &acc)?;
            }
            acc
        }
        Expr::Sum { var, lo, hi, body } => {
            if lo.contains_var(real_var) || hi.contains_var(real_var) {
                return Err(Error::NotNumeric("real index in a summation bound".into()));
            }
            let lov = lo.eval(asg)?;
            let hiv = hi.eval(asg)?;
            let mut acc = s.cx_real(s.int(0));
            let mut inner = asg.clone();
            for j in lov..=hiv {
                inner.insert(var.clone(), j);
                let v = eval_function_form(s, body, &inner, real_var, x, seeds, env)?;
                acc = s.cx_add(&acc, &v);
            }
            acc
        }
        Expr::Arctan(_) => {
            return Err(Error::NotNumeric(
                "arctangent of a complex argument is outside the function-form check".into(),
            ));
        }
        Expr::Pi | Expr::LnTau | Expr::ImagUnit | Expr::DerivSeq(..) | Expr::DerivMinusOne(..) => {
            return Err(Error::NotNumeric(format!("cannot evaluate {e:?}")));
        }
    })
}

/// Checks whether the identity's function form plausibly holds for all real
/// values of `wrt` (the second component's precondition): both sides are
/// evaluated as complex functions at non-integer values of `wrt`, integer
/// samples for the other indices, sampled seeds. Returns false on a decisive
/// mismatch. Points where a denominator vanishes are skipped; if every probe
/// is skipped the check stays permissive (the prover still gates the output).
pub fn function_form_holds_for_real(id: &Identity, wrt: &str, env: &FamilyEnv) -> Result<bool> {
    let mut s = NumSession::new(30)?;
    let bits = s.bits;
    // x samples: 1/2, -2/3, 7/5
    let xs: Vec<BigFloat> = [(1, 2), (-2, 3), (7, 5)]
        .into_iter()
        .map(|(n, d)| {
            BigFloat::from_i64(n, bits).div(&BigFloat::from_i64(d, bits), bits, RM)
        })
        .collect();
    let other_samples: [i64; 2] = [1, -2];
    // distinct seed samples per family so that coincidences between families
    // cannot mask a mismatch
    let mut seeds = BTreeMap::new();
    for (i, fam) in id.families().into_iter().enumerate() {
        let i = i as i64;
        seeds.insert(format!("{fam}0"), crate::rational::rat(2 + 2 * i));
        seeds.insert(format!("{fam}1"), crate::rational::rat(3 + i));
    }
    let others: Vec<String> = id.free_indices.iter().filter(|v| *v != wrt).cloned().collect();
    let diff = id.difference();
    // scale tolerance: 1e-20 relative at 30 digits
    let tol = BigFloat::parse("1e-18", Radix::Dec, bits, RM, &mut s.cc);
    let mut decisive = false;
    for x in &xs {
        for combo in 0..other_samples.len().pow(others.len().min(3) as u32) {
            let mut asg = BTreeMap::new();
            let mut c = combo;
            for v in &others {
                asg.insert(v.clone(), other_samples[c % other_samples.len()]);
                c /= other_samples.len();
            }
            match eval_function_form(&mut s, &diff, &asg, wrt, x, &seeds, env) {
                Ok(gap) => {
                    let lhs_v = eval_function_form(&mut s, &id.lhs, &asg, wrt, x, &seeds, env);
                    let mut scale = s.int(1);
                    if let Ok(l) = lhs_v {
                        let a = s.cx_abs(&l);
                        if a.cmp(&scale) == Some(1) {
                            scale = a;
                        }
                    }
                    let bound = tol.mul(&scale, bits, RM);
                    let g = s.cx_abs(&gap);
                    decisive = true;
                    if g.cmp(&bound) == Some(1) {
                        return Ok(false);
                    }
                }
                Err(Error::DivisionByZero) => continue,
                Err(Error::NotNumeric(_)) => return Ok(true), // cannot probe; stay permissive
                Err(e) => return Err(e),
            }
        }
    }
    let _ = decisive;
    Ok(true)
}

/// Errors of the four derivative facts at integer j, computed by a central
/// finite difference of the complex-valued Fibonacci/Lucas functions
/// f(x) = (alpha^x - beta^x)/sqrt(5), l(x) = alpha^x + beta^x against the
/// closed forms:
///   Re f'(j) = (L_j/sqrt5) ln(alpha)     Im f'(j) = -pi beta^j / sqrt5
///   Re l'(j) = sqrt5 F_j ln(alpha)       Im l'(j) = pi beta^j
/// Returned as |difference| in f64, in the order above.
pub fn derivative_fact_errors(j: i64, digits: u32) -> Result<[f64; 4]> {
    let mut s = NumSession::new(digits)?;
    let env = FamilyEnv::standard();
    let bits = s.bits;
    let sqrt5 = s.int(5).sqrt(bits, RM);
    let alpha = s.int(1).add(&sqrt5, bits, RM).div(&s.int(2), bits, RM);
    let ln_alpha = alpha.ln(bits, RM, &mut s.cc);
    let beta_abs = s.int(1).div(&alpha, bits, RM); // |beta| = 1/alpha
    let ln_beta_abs = beta_abs.ln(bits, RM, &mut s.cc);
    let pi = s.pi();

    // complex f(x), l(x) at real x: beta^x = |beta|^x (cos pi x + i sin pi x)
    let cx_values = |s: &mut NumSession, x: &BigFloat| -> ((BigFloat, BigFloat), (BigFloat, BigFloat)) {
        let ax = x.mul(&ln_alpha, bits, RM).exp(bits, RM, &mut s.cc);
        let bmag = x.mul(&ln_beta_abs, bits, RM).exp(bits, RM, &mut s.cc);
        let phase = x.mul(&pi, bits, RM);
        let bre = bmag.mul(&phase.cos(bits, RM, &mut s.cc), bits, RM);
        let bim = bmag.mul(&phase.sin(bits, RM, &mut s.cc), bits, RM);
        // f = (alpha^x - beta^x)/sqrt5, l = alpha^x + beta^x
        let f_re = ax.sub(&bre, bits, RM).div(&sqrt5, bits, RM);
        let f_im = bim.neg().div(&sqrt5, bits, RM);
        let l_re = ax.add(&bre, bits, RM);
        let l_im = bim;
        ((f_re, f_im), (l_re, l_im))
    };

    // central difference with h = 10^-12
    let h = BigFloat::parse("1e-12", Radix::Dec, bits, RM, &mut s.cc);
    let xj = s.int(j);
    let xp = xj.add(&h, bits, RM);
    let xm = xj.sub(&h, bits, RM);
    let ((fp_re, fp_im), (lp_re, lp_im)) = cx_values(&mut s, &xp);
    let ((fm_re, fm_im), (lm_re, lm_im)) = cx_values(&mut s, &xm);
    let two_h = h.mul(&s.int(2), bits, RM);
    let d = |a: &BigFloat, b: &BigFloat| a.sub(b, bits, RM).div(&two_h, bits, RM);
    let df_re = d(&fp_re, &fm_re);
    let df_im = d(&fp_im, &fm_im);
    let dl_re = d(&lp_re, &lm_re);
    let dl_im = d(&lp_im, &lm_im);

    // closed forms
    let fib = env.family("F").unwrap();
    let lucas = env.family("L").unwrap();
    let num_of = |s: &mut NumSession, p: &crate::seedpoly::SeedPoly| -> BigFloat {
        let c = p.substitute(&BTreeMap::new(), env.ctx()).expect("numeric seeds");
        s.quad(&c)
    };
    let fj = fib.term_at(j);
    let lj = lucas.term_at(j);
    let fj_f = num_of(&mut s, &fj);
    let lj_f = num_of(&mut s, &lj);
    let beta_j = env.ctx().sigma(env.p()).pow(j)?;
    let beta_j_f = s.quad(&beta_j);

    let expect_re_f = lj_f.div(&sqrt5, bits, RM).mul(&ln_alpha, bits, RM);
    let expect_im_f = pi.mul(&beta_j_f, bits, RM).div(&sqrt5, bits, RM).neg();
    let expect_re_l = fj_f.mul(&sqrt5, bits, RM).mul(&ln_alpha, bits, RM);
    let expect_im_l = pi.mul(&beta_j_f, bits, RM);

    let err = |s: &mut NumSession, got: &BigFloat, want: &BigFloat| -> f64 {
        let d = got.sub(want, bits, RM).abs();
        let txt = s.fmt(&d);
        parse_sci(&txt)
    };
    Ok([
        err(&mut s, &df_re, &expect_re_f),
        err(&mut s, &df_im, &expect_im_f),
        err(&mut s, &dl_re, &expect_re_l),
        err(&mut s, &dl_im, &expect_im_l),
    ])
}

fn parse_sci(s: &str) -> f64 {
    s.trim().parse::<f64>().unwrap_or(f64::INFINITY)
}

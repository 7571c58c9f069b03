//! Term collection, scalar normalization and the rewrite simplifier.
//!
//! Expressions are normalized bottom-up into sums of canonical terms, each a
//! Q(sqrt(D)) scalar times an ordered list of factors. The light normal form
//! (constant folding, like-term collection, common-content division across an
//! equation) is what the component transforms return. The full simplifier
//! additionally runs a fixed, ordered rule list of corpus-proved rewrites:
//!   F[h+1] + F[h-1] -> L[h]
//!   L[h+1] + L[h-1] -> 5*F[h]
//!   L[m]*F[n] + L[n]*F[m] -> 2*F[m+n]
//!   L[h]*F[h] -> F[2h]
//! (-1)^h factors are merged additively but never folded to 1, so function
//! forms stay valid for all real arguments.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::expr::{Expr, Identity};
use crate::family::{FamilyEnv, FamilyRole};
use crate::quad::{QuadCtx, QuadExt};
use crate::rational::{rat, rational_gcd, Rational};
use crate::subscript::SubscriptExpr;

/// One canonical term: coef * prod(factors).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NTerm {
    pub coef: QuadExt,
    /// factor -> exponent, in first-occurrence order.
    pub factors: Vec<(Expr, u32)>,
}

impl NTerm {
    pub fn scalar(coef: QuadExt) -> Self {
        NTerm { coef, factors: Vec::new() }
    }

    pub fn push_factor(&mut self, f: Expr, exp: u32) {
        // same-root power factors merge by adding subscript exponents
        let merged = match &f {
            Expr::SigmaPow(h) => self.merge_power(&f, h, exp, 0),
            Expr::TauPow(h) => self.merge_power(&f, h, exp, 1),
            Expr::MinusOnePow(h) => self.merge_power(&f, h, exp, 2),
            _ => false,
        };
        if merged {
            return;
        }
        for (existing, e) in self.factors.iter_mut() {
            if *existing == f {
                *e += exp;
                return;
            }
        }
        self.factors.push((f, exp));
    }

    fn merge_power(&mut self, f: &Expr, h: &SubscriptExpr, exp: u32, kind: u8) -> bool {
        let mut add = SubscriptExpr::constant(0);
        for _ in 0..exp {
            add = add.add(h);
        }
        for (existing, _) in self.factors.iter_mut() {
            let hit = match (kind, &existing) {
                (0, Expr::SigmaPow(h0)) => Some(Expr::SigmaPow(h0.add(&add))),
                (1, Expr::TauPow(h0)) => Some(Expr::TauPow(h0.add(&add))),
                (2, Expr::MinusOnePow(h0)) => Some(Expr::MinusOnePow(h0.add(&add))),
                _ => None,
            };
            if let Some(new) = hit {
                *existing = new;
                return true;
            }
        }
        let single = match kind {
            0 => Expr::SigmaPow(add),
            1 => Expr::TauPow(add),
            2 => Expr::MinusOnePow(add),
            _ => unreachable!(),
        };
        let _ = f;
        self.factors.push((single, 1));
        true
    }

    /// Sorted copy of the factor list: the like-term merge key.
    pub fn key(&self) -> Vec<(Expr, u32)> {
        let mut k = self.factors.clone();
        k.sort();
        k
    }

    pub fn into_expr(self, ctx: &QuadCtx) -> Expr {
        let mut fs: Vec<Expr> = Vec::with_capacity(self.factors.len() + 1);
        if !self.coef.is_one() {
            fs.push(quadext_to_expr(&self.coef, ctx));
        }
        // (-1)-powers, then root powers, then everything else
        let mut signs = Vec::new();
        let mut roots = Vec::new();
        let mut rest = Vec::new();
        for fe in self.factors {
            match &fe.0 {
                Expr::MinusOnePow(_) => signs.push(fe),
                Expr::SigmaPow(_) | Expr::TauPow(_) => roots.push(fe),
                _ => rest.push(fe),
            }
        }
        for (f, e) in signs.into_iter().chain(roots).chain(rest) {
            // sigma^0 and friends vanish
            if e == 0 {
                continue;
            }
            match &f {
                Expr::SigmaPow(h) | Expr::TauPow(h) | Expr::MinusOnePow(h) if h.is_zero() => continue,
                _ => {}
            }
            fs.push(Expr::int_pow(f, e));
        }
        Expr::mul(fs)
    }
}

/// Renders a field element as an expression factor.
pub fn quadext_to_expr(c: &QuadExt, _ctx: &QuadCtx) -> Expr {
    let a = c.rat_part();
    let b = c.rad_part();
    let rad_term = |b: &Rational| -> Expr {
        if b.is_one() {
            Expr::RadicalDelta
        } else {
            Expr::mul2(Expr::Rat(b.clone()), Expr::RadicalDelta)
        }
    };
    if b.is_zero() {
        Expr::Rat(a.clone())
    } else if a.is_zero() {
        rad_term(b)
    } else {
        Expr::add2(Expr::Rat(a.clone()), rad_term(b))
    }
}

/// Splits one multiplicative term into scalar and factors. The input must be
/// free of derivative markers.
pub fn split_term(e: &Expr, ctx: &QuadCtx) -> Result<NTerm> {
    let mut term = NTerm::scalar(ctx.one());
    split_into(e, ctx, &mut term, 1)?;
    Ok(term)
}

fn split_into(e: &Expr, ctx: &QuadCtx, out: &mut NTerm, exp: u32) -> Result<()> {
    match e {
        Expr::Rat(r) => {
            let mut c = ctx.from_rational(r.clone());
            if exp > 1 {
                c = c.pow(exp as i64).expect("positive power");
            }
            out.coef = out.coef.mul(&c);
        }
        Expr::RadicalDelta => {
            let c = ctx.radical().pow(exp as i64).expect("positive power");
            out.coef = out.coef.mul(&c);
        }
        Expr::Neg(inner) => {
            if exp % 2 == 1 {
                out.coef = out.coef.neg();
            }
            split_into(inner, ctx, out, exp)?;
        }
        Expr::Mul(fs) => {
            for f in fs {
                split_into(f, ctx, out, exp)?;
            }
        }
        Expr::IntPow(base, n) => {
            split_into(base, ctx, out, exp * *n)?;
        }
        Expr::Div(num, den) => {
            // pull the denominator's scalar into the coefficient
            let dterm = split_term(den, ctx)?;
            if dterm.coef.is_zero() {
                return Err(Error::DivisionByZero);
            }
            let dinv = dterm.coef.inv()?.pow(exp as i64).expect("positive power");
            out.coef = out.coef.mul(&dinv);
            let den_rest = NTerm { coef: ctx.one(), factors: dterm.factors }.into_expr(ctx);
            match num.as_ref() {
                Expr::Add(_) => {
                    let f = Expr::div(num.as_ref().clone(), den_rest);
                    out.push_factor(f, exp);
                }
                _ => {
                    split_into(num, ctx, out, exp)?;
                    if !den_rest.is_one() {
                        out.push_factor(Expr::div(Expr::one(), den_rest), exp);
                    }
                }
            }
        }
        Expr::Add(_) => {
            // a sum used as a factor stays opaque
            out.push_factor(e.clone(), exp);
        }
        Expr::DerivSeq(..) | Expr::DerivMinusOne(..) | Expr::Pi | Expr::LnTau | Expr::ImagUnit => {
            return Err(Error::MalformedDerivation(format!(
                "transitional node in term collection: {e:?}"
            )));
        }
        _ => out.push_factor(e.clone(), exp),
    }
    Ok(())
}

/// Flattens an expression into canonical terms with like terms merged.
/// Term order follows first occurrence.
pub fn collect_terms(e: &Expr, ctx: &QuadCtx) -> Result<Vec<NTerm>> {
    let raw: Vec<&Expr> = match e {
        Expr::Add(xs) => xs.iter().collect(),
        _ => vec![e],
    };
    let mut terms: Vec<NTerm> = Vec::new();
    for t in raw {
        let nt = split_term(t, ctx)?;
        if nt.coef.is_zero() {
            continue;
        }
        let key = nt.key();
        match terms.iter_mut().find(|x| x.key() == key) {
            Some(existing) => existing.coef = existing.coef.add(&nt.coef),
            None => terms.push(nt),
        }
    }
    terms.retain(|t| !t.coef.is_zero());
    Ok(terms)
}

pub fn rebuild(terms: Vec<NTerm>, ctx: &QuadCtx) -> Expr {
    Expr::add(terms.into_iter().map(|t| t.into_expr(ctx)).collect())
}

/// The common scalar content of a set of coefficients: a divisor that makes
/// them "as integral as possible". Multiplying through by sqrt(D) is applied
/// when it strictly reduces the number of irrational coefficients; the sign
/// follows the first coefficient.
pub fn scalar_content(coefs: &[&QuadExt], ctx: &QuadCtx) -> QuadExt {
    if coefs.is_empty() {
        return ctx.one();
    }
    let irr = |cs: &[QuadExt]| cs.iter().filter(|c| !c.rad_part().is_zero()).count();
    let plain: Vec<QuadExt> = coefs.iter().map(|c| (*c).clone()).collect();
    let rad = ctx.radical();
    let scaled: Vec<QuadExt> = plain.iter().map(|c| c.mul(&rad)).collect();
    let (chosen, unit_inv) = if irr(&scaled) < irr(&plain) {
        (scaled, rad.inv().expect("radical nonzero"))
    } else {
        (plain, ctx.one())
    };
    let mut parts: Vec<Rational> = Vec::new();
    for c in &chosen {
        parts.push(c.rat_part().clone());
        parts.push(c.rad_part().clone());
    }
    let g = rational_gcd(&parts);
    let first = &chosen[0];
    let sign = if first.rat_part().is_zero() {
        if first.rad_part().is_negative() {
            rat(-1)
        } else {
            rat(1)
        }
    } else if first.rat_part().is_negative() {
        rat(-1)
    } else {
        rat(1)
    };
    unit_inv.scale(&(g * sign))
}

/// Bottom-up light normalization: children normalized, constants folded,
/// like terms merged, common content pulled out of sums and quotients.
pub fn normalize_expr(e: &Expr, env: &FamilyEnv) -> Result<Expr> {
    normalize(e, env, false)
}

fn normalize(e: &Expr, env: &FamilyEnv, heavy: bool) -> Result<Expr> {
    let ctx = env.ctx();
    let normalized_children = match e {
        Expr::Add(xs) => {
            let mut ys = Vec::with_capacity(xs.len());
            for x in xs {
                ys.push(normalize(x, env, heavy)?);
            }
            Expr::add(ys)
        }
        Expr::Mul(xs) => {
            let mut ys = Vec::with_capacity(xs.len());
            for x in xs {
                ys.push(normalize(x, env, heavy)?);
            }
            Expr::mul(ys)
        }
        Expr::Neg(x) => Expr::neg(normalize(x, env, heavy)?),
        Expr::Div(num, den) => {
            let n = normalize(num, env, heavy)?;
            let d = normalize(den, env, heavy)?;
            Expr::div(n, d)
        }
        Expr::IntPow(x, n) => Expr::int_pow(normalize(x, env, heavy)?, *n),
        Expr::SymPow(x, s) => Expr::sym_pow(normalize(x, env, heavy)?, s.clone()),
        Expr::Arctan(x) => Expr::arctan(normalize(x, env, heavy)?),
        Expr::Sum { var, lo, hi, body } => {
            let b = normalize(body, env, heavy)?;
            // pull common scalar content out of the summand
            let terms = collect_terms(&b, ctx)?;
            if terms.is_empty() {
                Expr::zero()
            } else {
                let coefs: Vec<&QuadExt> = terms.iter().map(|t| &t.coef).collect();
                let content = scalar_content(&coefs, ctx);
                if content.is_one() {
                    Expr::sum(var.clone(), lo.clone(), hi.clone(), rebuild(terms, ctx))
                } else {
                    let cinv = content.inv().expect("content nonzero");
                    let stripped: Vec<NTerm> = terms
                        .into_iter()
                        .map(|mut t| {
                            t.coef = t.coef.mul(&cinv);
                            t
                        })
                        .collect();
                    Expr::mul2(
                        quadext_to_expr(&content, ctx),
                        Expr::sum(var.clone(), lo.clone(), hi.clone(), rebuild(stripped, ctx)),
                    )
                }
            }
        }
        other => other.clone(),
    };
    // collect at this level
    let mut terms = collect_terms(&normalized_children, ctx)?;
    if heavy && env.is_golden() {
        rewrite_fixpoint(&mut terms, env);
    }
    Ok(rebuild(terms, ctx))
}

/// Equation-level normalization: both sides normalized, then divided by the
/// common scalar content (sign taken from the first left-hand term).
pub fn normalize_identity(id: &Identity, env: &FamilyEnv) -> Result<Identity> {
    normalize_identity_inner(id, env, false)
}

/// The full rewrite simplifier.
pub fn simplify_identity(id: &Identity, env: &FamilyEnv) -> Result<Identity> {
    normalize_identity_inner(id, env, true)
}

pub fn simplify_expr(e: &Expr, env: &FamilyEnv) -> Result<Expr> {
    normalize(e, env, true)
}

fn normalize_identity_inner(id: &Identity, env: &FamilyEnv, heavy: bool) -> Result<Identity> {
    let ctx = env.ctx();
    let lhs = normalize(&id.lhs, env, heavy)?;
    let rhs = normalize(&id.rhs, env, heavy)?;
    let lterms = collect_terms(&lhs, ctx)?;
    let rterms = collect_terms(&rhs, ctx)?;
    let coefs: Vec<&QuadExt> = lterms.iter().chain(rterms.iter()).map(|t| &t.coef).collect();
    let (lhs, rhs) = if coefs.is_empty() {
        (lhs, rhs)
    } else {
        let content = scalar_content(&coefs, ctx);
        if content.is_one() {
            (rebuild(lterms, ctx), rebuild(rterms, ctx))
        } else {
            let cinv = content.inv().expect("content nonzero");
            let strip = |ts: Vec<NTerm>| -> Vec<NTerm> {
                ts.into_iter()
                    .map(|mut t| {
                        t.coef = t.coef.mul(&cinv);
                        t
                    })
                    .collect()
            };
            (rebuild(strip(lterms), ctx), rebuild(strip(rterms), ctx))
        }
    };
    let mut out = Identity {
        lhs,
        rhs,
        free_indices: Vec::new(),
        constraints: id.constraints.clone(),
        provenance: id.provenance.clone(),
    };
    out.refresh_indices();
    Ok(out)
}

// ---- rewrite rules (p=1, q=-1 families) ----

fn role_of(env: &FamilyEnv, name: &str) -> Option<FamilyRole> {
    env.family(name).ok().map(|s| s.role())
}

/// Fixed, ordered rule list applied to a term list until no rule fires.
fn rewrite_fixpoint(terms: &mut Vec<NTerm>, env: &FamilyEnv) {
    for _ in 0..64 {
        let fired = rule_seq_pair(terms, env, FamilyRole::Fibonacci)
            || rule_seq_pair(terms, env, FamilyRole::Lucas)
            || rule_vajda_16a(terms, env)
            || rule_product_double_angle(terms, env);
        terms.retain(|t| !t.coef.is_zero());
        if !fired {
            break;
        }
    }
}

/// F[h+1] + F[h-1] -> L[h]  (role = Fibonacci)
/// L[h+1] + L[h-1] -> 5 F[h] (role = Lucas)
fn rule_seq_pair(terms: &mut Vec<NTerm>, env: &FamilyEnv, role: FamilyRole) -> bool {
    for i in 0..terms.len() {
        for j in 0..terms.len() {
            if i == j {
                continue;
            }
            if terms[i].coef != terms[j].coef {
                continue;
            }
            let (Some((fi, hi)), Some((fj, hj))) =
                (single_seq(&terms[i], env, role), single_seq(&terms[j], env, role))
            else {
                continue;
            };
            if fi != fj {
                continue;
            }
            if rest_key(&terms[i], role, env) != rest_key(&terms[j], role, env) {
                continue;
            }
            let diff = hi.sub(&hj);
            if diff.as_const() != Some(2) {
                continue;
            }
            let mid = hj.shift(1);
            let mut replacement = terms[i].clone();
            replace_seq_factor(&mut replacement, &fi, &hi, role, env, &mid);
            terms[i] = replacement;
            terms.remove(j);
            return true;
        }
    }
    false
}

/// The single SeqTerm factor of the given role with multiplicity 1, if any.
fn single_seq(t: &NTerm, env: &FamilyEnv, role: FamilyRole) -> Option<(String, SubscriptExpr)> {
    let mut found = None;
    for (f, e) in &t.factors {
        if let Expr::SeqTerm(fam, h) = f {
            if role_of(env, fam) == Some(role) {
                if *e != 1 || found.is_some() {
                    return None; // ambiguous
                }
                found = Some((fam.clone(), h.clone()));
            }
        }
    }
    found
}

/// The factor multiset with the rewrite-target family removed.
fn rest_key(t: &NTerm, role: FamilyRole, env: &FamilyEnv) -> Vec<(Expr, u32)> {
    let mut k: Vec<(Expr, u32)> = t
        .factors
        .iter()
        .filter(|(f, _)| !matches!(f, Expr::SeqTerm(fam, _) if role_of(env, fam) == Some(role)))
        .cloned()
        .collect();
    k.sort();
    k
}

fn replace_seq_factor(
    t: &mut NTerm,
    fam: &str,
    h: &SubscriptExpr,
    role: FamilyRole,
    env: &FamilyEnv,
    mid: &SubscriptExpr,
) {
    let partner = env
        .partner_of(fam)
        .map(|s| s.name().to_string())
        .unwrap_or_else(|_| fam.to_string());
    for (f, _) in t.factors.iter_mut() {
        if let Expr::SeqTerm(name, hh) = f {
            if name == fam && hh == h {
                *f = Expr::SeqTerm(partner.clone(), mid.clone());
                break;
            }
        }
    }
    if role == FamilyRole::Lucas {
        t.coef = t.coef.scale(&rat(5));
    }
}

/// L[m]*F[n] + L[n]*F[m] -> 2 F[m+n]
fn rule_vajda_16a(terms: &mut Vec<NTerm>, env: &FamilyEnv) -> bool {
    for i in 0..terms.len() {
        for j in (i + 1)..terms.len() {
            if terms[i].coef != terms[j].coef {
                continue;
            }
            let (Some((_, hf_i, _, hl_i)), Some((_, hf_j, _, hl_j))) =
                (fl_pair(&terms[i], env), fl_pair(&terms[j], env))
            else {
                continue;
            };
            // need F_n*L_m and F_m*L_n with the same residual factors
            if !(hf_i == hl_j && hl_i == hf_j) {
                continue;
            }
            if hf_i == hl_i {
                continue; // same subscript: the in-term rule covers it
            }
            if rest_fl_key(&terms[i], env) != rest_fl_key(&terms[j], env) {
                continue;
            }
            let sum_sub = hf_i.add(&hl_i);
            let fib_name = env
                .family_names()
                .find(|n| role_of(env, n) == Some(FamilyRole::Fibonacci))
                .unwrap_or("F")
                .to_string();
            let mut replacement = NTerm {
                coef: terms[i].coef.scale(&rat(2)),
                factors: terms[i]
                    .factors
                    .iter()
                    .filter(|(f, _)| {
                        !matches!(f, Expr::SeqTerm(fam, _)
                            if matches!(role_of(env, fam), Some(FamilyRole::Fibonacci | FamilyRole::Lucas)))
                    })
                    .cloned()
                    .collect(),
            };
            replacement.push_factor(Expr::SeqTerm(fib_name, sum_sub), 1);
            terms[i] = replacement;
            terms.remove(j);
            return true;
        }
    }
    false
}

/// Exactly one F factor and one L factor, both multiplicity 1.
fn fl_pair(t: &NTerm, env: &FamilyEnv) -> Option<(String, SubscriptExpr, String, SubscriptExpr)> {
    let f = single_seq(t, env, FamilyRole::Fibonacci)?;
    let l = single_seq(t, env, FamilyRole::Lucas)?;
    Some((f.0, f.1, l.0, l.1))
}

fn rest_fl_key(t: &NTerm, env: &FamilyEnv) -> Vec<(Expr, u32)> {
    let mut k: Vec<(Expr, u32)> = t
        .factors
        .iter()
        .filter(|(f, _)| {
            !matches!(f, Expr::SeqTerm(fam, _)
                if matches!(role_of(env, fam), Some(FamilyRole::Fibonacci | FamilyRole::Lucas)))
        })
        .cloned()
        .collect();
    k.sort();
    k
}

/// L[h]^a * F[h]^b -> F[2h] * L[h]^(a-1) * F[h]^(b-1), applied once per pass.
fn rule_product_double_angle(terms: &mut Vec<NTerm>, env: &FamilyEnv) -> bool {
    for t in terms.iter_mut() {
        let mut f_idx = None;
        let mut l_idx = None;
        for (idx, (f, e)) in t.factors.iter().enumerate() {
            if *e == 0 {
                continue;
            }
            if let Expr::SeqTerm(fam, _) = f {
                match role_of(env, fam) {
                    Some(FamilyRole::Fibonacci) => f_idx = f_idx.or(Some(idx)),
                    Some(FamilyRole::Lucas) => l_idx = l_idx.or(Some(idx)),
                    _ => {}
                }
            }
        }
        let (Some(fi), Some(li)) = (f_idx, l_idx) else { continue };
        let (f_sub, fib_name) = match &t.factors[fi].0 {
            Expr::SeqTerm(fam, h) => (h.clone(), fam.clone()),
            _ => unreachable!(),
        };
        let l_sub = match &t.factors[li].0 {
            Expr::SeqTerm(_, h) => h.clone(),
            _ => unreachable!(),
        };
        if f_sub != l_sub {
            continue;
        }
        t.factors[fi].1 -= 1;
        t.factors[li].1 -= 1;
        t.factors.retain(|(_, e)| *e > 0);
        let doubled = f_sub.scale(2);
        let mut nt = t.clone();
        nt.push_factor(Expr::SeqTerm(fib_name, doubled), 1);
        *t = nt;
        return true;
    }
    false
}

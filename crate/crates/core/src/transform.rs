//! The two component transforms.
//!
//! A differentiated identity is linear in its derivative markers. Writing
//! each marker's value as R*ln(tau) + i*pi*S with real R, S, every side
//! decomposes as (plain) + (ln tau part) + (i pi part). The real component
//! keeps the ln-tau part (markers of sequence terms contribute their
//! companion forms; (-1)-power markers are imaginary and drop out) and
//! cancels ln tau. The imaginary component keeps the i-pi part (sequence
//! markers contribute B*sigma^h forms; (-1)-power markers contribute
//! pi*(-1)^h) and cancels pi, yielding a sigma-power identity that can be
//! shift-normalized, conjugate-swapped and recombined through the Binet
//! coefficients into an arbitrary-seed generalization.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use crate::deriv::DerivedForm;
use crate::error::{Error, Result};
use crate::expr::{Expr, Identity};
use crate::family::{FamilyEnv, FamilyRole};
use crate::rational::rat;
use crate::sequence::SequenceSpec;
use crate::simplify::{collect_terms, normalize_identity, quadext_to_expr, NTerm};
use crate::subscript::SubscriptExpr;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Component {
    Real,
    Imag,
}

/// An identity in sigma-power normal form: every additive term (recursively
/// through sums and quotient numerators) carries exactly one sigma power,
/// sigma^0 included.
#[derive(Clone, Debug)]
pub struct SigmaIdentity(pub Identity);

impl SigmaIdentity {
    pub fn identity(&self) -> &Identity {
        &self.0
    }
}

/// plain + comp decomposition of a marker-linear expression.
struct Split {
    plain: Expr,
    comp: Expr,
}

/// The ln-tau coefficient of d/dk X[h]: the companion replacement table.
///   F -> L[h]/sqrt(D)        L -> sqrt(D)*F[h]
///   U -> V[h]/sqrt(D)        V -> sqrt(D)*U[h]
///   gibonacci/Horadam (q=-1) -> (X[h+1] + X[h-1])/sqrt(D)
fn real_rep(spec: &SequenceSpec, h: &SubscriptExpr, env: &FamilyEnv) -> Result<Expr> {
    if *env.q() != rat(-1) {
        return Err(Error::RealPartUnsupportedQ {
            family: spec.name().to_string(),
            q: env.q().to_string(),
        });
    }
    let inv_rad = Expr::div(Expr::one(), Expr::RadicalDelta);
    Ok(match spec.role() {
        FamilyRole::Fibonacci | FamilyRole::LucasU => {
            let partner = env.partner_of(spec.name())?;
            Expr::mul2(Expr::seq(partner.name(), h.clone()), inv_rad)
        }
        FamilyRole::Lucas | FamilyRole::LucasV => {
            let partner = env.partner_of(spec.name())?;
            Expr::mul2(Expr::RadicalDelta, Expr::seq(partner.name(), h.clone()))
        }
        FamilyRole::Gibonacci | FamilyRole::Horadam => Expr::mul2(
            Expr::add2(
                Expr::seq(spec.name(), h.shift(1)),
                Expr::seq(spec.name(), h.shift(-1)),
            ),
            inv_rad,
        ),
    })
}

/// The i-pi coefficient of d/dk X[h]: B_X * sigma^h, expanded so that every
/// term carries a single sigma power. Numeric-seed families fold B_X into an
/// exact field element; symbolic-seed families expand through
/// B*sigma^h = (q*X_0*sigma^{h-1} - X_1*sigma^h)/sqrt(D).
fn imag_rep(spec: &SequenceSpec, h: &SubscriptExpr, env: &FamilyEnv) -> Result<Expr> {
    if env.q().is_positive() {
        return Err(Error::PositiveQ {
            family: spec.name().to_string(),
            q: env.q().to_string(),
        });
    }
    let ctx = env.ctx();
    if !spec.has_symbolic_seeds() {
        // B = (W_0*tau - W_1)/sqrt(D) exactly
        let s0 = spec
            .seed0()
            .as_constant()
            .cloned()
            .unwrap_or_else(|| ctx.zero());
        let s1 = spec
            .seed1()
            .as_constant()
            .cloned()
            .unwrap_or_else(|| ctx.zero());
        let b = s0
            .mul(&spec.tau())
            .sub(&s1)
            .mul(&ctx.radical().inv().expect("radical nonzero"));
        return Ok(Expr::mul2(quadext_to_expr(&b, ctx), Expr::SigmaPow(h.clone())));
    }
    let inv_rad = Expr::div(Expr::one(), Expr::RadicalDelta);
    let q_expr = Expr::Rat(env.q().clone());
    let term0 = Expr::mul(vec![
        q_expr,
        Expr::seq(spec.name(), SubscriptExpr::constant(0)),
        Expr::SigmaPow(h.shift(-1)),
    ]);
    let term1 = Expr::neg(Expr::mul2(
        Expr::seq(spec.name(), SubscriptExpr::constant(1)),
        Expr::SigmaPow(h.clone()),
    ));
    Ok(Expr::mul2(Expr::add2(term0, term1), inv_rad))
}

fn split(e: &Expr, env: &FamilyEnv, component: Component) -> Result<Split> {
    Ok(match e {
        Expr::DerivSeq(fam, h, _) => {
            let spec = env.family(fam)?;
            let comp = match component {
                Component::Real => real_rep(spec, h, env)?,
                Component::Imag => imag_rep(spec, h, env)?,
            };
            Split { plain: Expr::zero(), comp }
        }
        Expr::DerivMinusOne(h, _) => {
            // d/dk (-1)^h = (-1)^h * i*pi * dh/dk with the principal branch:
            // no real ln-tau part, imaginary part pi*(-1)^h.
            let comp = match component {
                Component::Real => Expr::zero(),
                Component::Imag => Expr::MinusOnePow(h.clone()),
            };
            Split { plain: Expr::zero(), comp }
        }
        Expr::Add(xs) => {
            let mut plains = Vec::with_capacity(xs.len());
            let mut comps = Vec::with_capacity(xs.len());
            for x in xs {
                let s = split(x, env, component)?;
                plains.push(s.plain);
                comps.push(s.comp);
            }
            Split { plain: Expr::add(plains), comp: Expr::add(comps) }
        }
        Expr::Neg(x) => {
            let s = split(x, env, component)?;
            Split { plain: Expr::neg(s.plain), comp: Expr::neg(s.comp) }
        }
        Expr::Mul(fs) => {
            let mut acc = Split { plain: Expr::one(), comp: Expr::zero() };
            for f in fs {
                let s = split(f, env, component)?;
                if !acc.comp.is_zero() && !s.comp.is_zero() {
                    return Err(Error::MalformedDerivation(
                        "a term carries two derivative factors".into(),
                    ));
                }
                let comp = Expr::add2(
                    Expr::mul2(acc.plain.clone(), s.comp.clone()),
                    Expr::mul2(acc.comp.clone(), s.plain.clone()),
                );
                acc = Split { plain: Expr::mul2(acc.plain, s.plain), comp };
            }
            acc
        }
        Expr::Div(u, v) => {
            if v.has_markers() {
                return Err(Error::MalformedDerivation(
                    "derivative marker in a denominator".into(),
                ));
            }
            let s = split(u, env, component)?;
            Split {
                plain: Expr::div(s.plain, (**v).clone()),
                comp: Expr::div(s.comp, (**v).clone()),
            }
        }
        Expr::IntPow(u, n) => {
            if u.has_markers() {
                return Err(Error::MalformedDerivation(
                    "derivative marker inside a power".into(),
                ));
            }
            Split { plain: Expr::int_pow((**u).clone(), *n), comp: Expr::zero() }
        }
        Expr::SymPow(u, s) => {
            if u.has_markers() {
                return Err(Error::MalformedDerivation(
                    "derivative marker inside a power".into(),
                ));
            }
            Split { plain: Expr::sym_pow((**u).clone(), s.clone()), comp: Expr::zero() }
        }
        Expr::Sum { var, lo, hi, body } => {
            let s = split(body, env, component)?;
            let mk = |b: Expr| -> Expr {
                if b.is_zero() {
                    Expr::zero()
                } else {
                    Expr::sum(var.clone(), lo.clone(), hi.clone(), b)
                }
            };
            Split { plain: mk(s.plain), comp: mk(s.comp) }
        }
        Expr::Arctan(u) => {
            if u.has_markers() {
                return Err(Error::MalformedDerivation(
                    "derivative marker inside arctan".into(),
                ));
            }
            Split { plain: e.clone(), comp: Expr::zero() }
        }
        Expr::Pi | Expr::LnTau | Expr::ImagUnit => {
            return Err(Error::MalformedDerivation(format!(
                "unexpected transitional node {e:?} in a derived form"
            )));
        }
        plain => Split { plain: plain.clone(), comp: Expr::zero() },
    })
}

fn transform_sides(df: &DerivedForm, env: &FamilyEnv, component: Component) -> Result<(Expr, Expr)> {
    let l = split(&df.lhs, env, component)?;
    let r = split(&df.rhs, env, component)?;
    let lp = crate::simplify::normalize_expr(&l.plain, env)?;
    let rp = crate::simplify::normalize_expr(&r.plain, env)?;
    if !lp.is_zero() || !rp.is_zero() {
        return Err(Error::MalformedDerivation(
            "a derived term carries no derivative factor".into(),
        ));
    }
    Ok((l.comp, r.comp))
}

/// First component: real-part extraction. Yields a new identity in the same
/// families after cancelling ln tau.
pub fn apply_real_part(df: &DerivedForm, env: &FamilyEnv) -> Result<Identity> {
    let (lhs, rhs) = transform_sides(df, env, Component::Real)?;
    let id = Identity {
        lhs,
        rhs,
        free_indices: Vec::new(),
        constraints: df.source.constraints.clone(),
        provenance: format!("real-part d/d{} of [{}]", df.wrt, df.source.provenance),
    };
    let mut out = normalize_identity(&id, env)?;
    out.refresh_indices();
    debug_assert!(!out.lhs.has_markers() && !out.rhs.has_markers());
    Ok(out)
}

/// Second component: imaginary-part extraction. Yields a sigma-power identity
/// after cancelling pi.
pub fn apply_imag_part(df: &DerivedForm, env: &FamilyEnv) -> Result<SigmaIdentity> {
    // Arctangent sources are refused: their function forms generally hold at
    // integers only. The one sanctioned pattern is a rewritten source that
    // retains an even-coefficient (-1)^h factor as its marker of validity for
    // all real arguments; its derivative is already arctan-free.
    let arctan_source = df.source.lhs.has_arctan() || df.source.rhs.has_arctan();
    if arctan_source && !(has_all_real_marker(&df.source) && !df.lhs.has_arctan() && !df.rhs.has_arctan()) {
        return Err(Error::ArctanNotSupported);
    }
    if df.lhs.has_arctan() || df.rhs.has_arctan() {
        return Err(Error::ArctanNotSupported);
    }
    if env.q().is_positive() {
        let family = df
            .source
            .families()
            .into_iter()
            .next()
            .unwrap_or_else(|| "W".to_string());
        return Err(Error::PositiveQ { family, q: env.q().to_string() });
    }
    // the all-real-x precondition: probe the complex function form at
    // non-integer values of the differentiation index (arctan sources were
    // already screened above)
    if !arctan_source && !crate::numeric::function_form_holds_for_real(&df.source, &df.wrt, env)? {
        return Err(Error::IntegerOnlyForm(df.wrt.clone()));
    }
    let (lhs, rhs) = transform_sides(df, env, Component::Imag)?;
    let id = Identity {
        lhs: distribute_sigma_sums(&lhs),
        rhs: distribute_sigma_sums(&rhs),
        free_indices: Vec::new(),
        constraints: df.source.constraints.clone(),
        provenance: format!("imaginary-part d/d{} of [{}]", df.wrt, df.source.provenance),
    };
    let mut out = normalize_identity(&id, env)?;
    // divide out a sigma power shared by every term of a multi-term side
    if let Some(e) = common_side_exponent(&out, env)? {
        if !e.is_zero() {
            let delta = e.neg();
            out.lhs = shift_all_sigma(&out.lhs, &delta, env)?;
            out.rhs = shift_all_sigma(&out.rhs, &delta, env)?;
            out = normalize_identity(&out, env)?;
        }
    }
    out.refresh_indices();
    let sid = SigmaIdentity(out);
    validate_sigma_identity(&sid, env)?;
    Ok(sid)
}

/// Multiplies out any product whose factors include a sum carrying sigma or
/// tau powers: the per-term single-power normal form needs those powers at
/// the top level of each term.
fn distribute_sigma_sums(e: &Expr) -> Expr {
    let has_root = |x: &Expr| x.any(&mut |n| matches!(n, Expr::SigmaPow(_) | Expr::TauPow(_)));
    match e {
        Expr::Add(xs) => Expr::add(xs.iter().map(distribute_sigma_sums).collect()),
        Expr::Neg(x) => Expr::neg(distribute_sigma_sums(x)),
        Expr::Div(a, b) => Expr::div(distribute_sigma_sums(a), (**b).clone()),
        Expr::Sum { var, lo, hi, body } => Expr::Sum {
            var: var.clone(),
            lo: lo.clone(),
            hi: hi.clone(),
            body: Box::new(distribute_sigma_sums(body)),
        },
        Expr::Mul(fs) => {
            let fs: Vec<Expr> = fs.iter().map(distribute_sigma_sums).collect();
            // expand the first root-bearing sum factor, then recurse
            if let Some(pos) = fs
                .iter()
                .position(|f| matches!(f, Expr::Add(_)) && has_root(f))
            {
                let Expr::Add(terms) = &fs[pos] else { unreachable!() };
                let expanded = Expr::add(
                    terms
                        .iter()
                        .map(|t| {
                            let mut factors = fs.clone();
                            factors[pos] = t.clone();
                            Expr::mul(factors)
                        })
                        .collect(),
                );
                distribute_sigma_sums(&expanded)
            } else {
                Expr::mul(fs)
            }
        }
        other => other.clone(),
    }
}

/// Multiplies every term by sigma^delta: an existing sigma carrier (a top
/// level power, or the single root-bearing sum/quotient factor) absorbs the
/// shift; carrier-free terms gain an explicit power.
fn shift_all_sigma(e: &Expr, delta: &SubscriptExpr, env: &FamilyEnv) -> Result<Expr> {
    let ctx = env.ctx();
    let mut out = Vec::new();
    for t in collect_terms(e, ctx)? {
        let mut factors: Vec<(Expr, u32)> = Vec::with_capacity(t.factors.len() + 1);
        let mut shifted = false;
        for (f, m) in t.factors {
            if shifted {
                factors.push((f, m));
                continue;
            }
            match f {
                Expr::SigmaPow(h) => {
                    let mut total = delta.clone();
                    for _ in 0..m {
                        total = total.add(&h);
                    }
                    factors.push((Expr::SigmaPow(total), 1));
                    shifted = true;
                }
                Expr::Sum { ref body, .. } if m == 1 && bears_root(body) => {
                    let Expr::Sum { var, lo, hi, body } = f else { unreachable!() };
                    let b = shift_all_sigma(&body, delta, env)?;
                    factors.push((Expr::sum(var, lo, hi, b), 1));
                    shifted = true;
                }
                Expr::Div(ref num, ref den) if m == 1 && bears_root(num) => {
                    if bears_root(den) {
                        return Err(Error::MissingSigmaPower(
                            "sigma power in a denominator".into(),
                        ));
                    }
                    let n = shift_all_sigma(num, delta, env)?;
                    factors.push((Expr::div(n, (**den).clone()), 1));
                    shifted = true;
                }
                other => factors.push((other, m)),
            }
        }
        if !shifted {
            factors.insert(0, (Expr::SigmaPow(delta.clone()), 1));
        }
        out.push(NTerm { coef: t.coef, factors }.into_expr(ctx));
    }
    Ok(Expr::add(out))
}

/// A retained (-1)^h with every index coefficient even, e.g. (-1)^(2k+1):
/// the marker that an identity's function form was arranged to hold for all
/// real arguments.
fn has_all_real_marker(id: &Identity) -> bool {
    let mut found = false;
    for side in [&id.lhs, &id.rhs] {
        side.visit(&mut |e| {
            if let Expr::MinusOnePow(h) = e {
                if let Some((_, coeffs)) = h.affine() {
                    if !coeffs.is_empty() && coeffs.values().all(|c| c % 2 == 0) {
                        found = true;
                    }
                }
            }
        });
    }
    found
}

/// The shared top-level sigma exponent of a side with >= 2 terms, if any.
fn common_side_exponent(id: &Identity, env: &FamilyEnv) -> Result<Option<SubscriptExpr>> {
    for side in [&id.lhs, &id.rhs] {
        let terms = collect_terms(side, env.ctx())?;
        if terms.len() < 2 {
            continue;
        }
        let mut exps = terms.iter().map(top_level_sigma_exp);
        let first = exps.next().unwrap();
        if first.is_zero() {
            continue;
        }
        if exps.all(|e| e == first) {
            return Ok(Some(first));
        }
    }
    Ok(None)
}

fn top_level_sigma_exp(t: &NTerm) -> SubscriptExpr {
    for (f, e) in &t.factors {
        if let Expr::SigmaPow(h) = f {
            let mut total = SubscriptExpr::constant(0);
            for _ in 0..*e {
                total = total.add(h);
            }
            return total;
        }
    }
    SubscriptExpr::constant(0)
}

/// True for a factor that carries sigma or tau powers somewhere inside.
fn bears_root(f: &Expr) -> bool {
    f.any(&mut |n| matches!(n, Expr::SigmaPow(_) | Expr::TauPow(_)))
}

/// Every expanded term must carry at most one sigma power (sigma^0 counts as
/// none) and no tau powers; a term may carry its power either at the top
/// level or inside exactly one sum/quotient factor.
fn validate_sigma_identity(sid: &SigmaIdentity, env: &FamilyEnv) -> Result<()> {
    for side in [&sid.0.lhs, &sid.0.rhs] {
        validate_sigma_expr(side, env)?;
    }
    Ok(())
}

fn validate_sigma_expr(e: &Expr, env: &FamilyEnv) -> Result<()> {
    for t in collect_terms(e, env.ctx())? {
        let mut carriers = 0;
        for (f, m) in &t.factors {
            match f {
                Expr::SigmaPow(_) => carriers += *m as usize,
                Expr::TauPow(_) => {
                    return Err(Error::MissingSigmaPower(format!("tau power in term: {f:?}")));
                }
                Expr::Sum { body, .. } => {
                    if bears_root(body) {
                        carriers += *m as usize;
                        validate_sigma_expr(body, env)?;
                    }
                }
                Expr::Div(num, den) => {
                    if bears_root(den) {
                        return Err(Error::MissingSigmaPower(
                            "sigma power in a denominator".into(),
                        ));
                    }
                    if bears_root(num) {
                        carriers += *m as usize;
                        validate_sigma_expr(num, env)?;
                    }
                }
                Expr::Add(_) if bears_root(f) => {
                    return Err(Error::MalformedDerivation(
                        "undistributed sum carrying sigma powers".into(),
                    ));
                }
                Expr::Pi | Expr::ImagUnit | Expr::LnTau | Expr::DerivSeq(..) | Expr::DerivMinusOne(..) => {
                    return Err(Error::MalformedDerivation(
                        "transitional node left in sigma identity".into(),
                    ));
                }
                _ => {}
            }
        }
        if carriers > 1 {
            return Err(Error::MalformedDerivation(
                "term with more than one sigma power".into(),
            ));
        }
    }
    Ok(())
}

/// True when some term couples a sigma power to a sequence term through a
/// shared index variable. Recombining such an identity directly would only
/// specialize it; multiplying through by a fresh sigma power first decouples
/// the subscripts and yields the genuine generalization.
pub fn needs_decoupling_shift(sid: &SigmaIdentity, env: &FamilyEnv) -> Result<bool> {
    fn term_couples(t: &NTerm, env: &FamilyEnv) -> Result<bool> {
        let mut sigma_vars: BTreeSet<String> = BTreeSet::new();
        let mut seq_vars: BTreeSet<String> = BTreeSet::new();
        for (f, _) in &t.factors {
            match f {
                Expr::SigmaPow(h) => sigma_vars.extend(h.vars()),
                Expr::SeqTerm(_, h) => seq_vars.extend(h.vars()),
                Expr::Sum { body, .. } => {
                    if expr_couples(body, env)? {
                        return Ok(true);
                    }
                }
                Expr::Div(num, _) => {
                    if expr_couples(num, env)? {
                        return Ok(true);
                    }
                }
                _ => {}
            }
        }
        Ok(!sigma_vars.is_disjoint(&seq_vars))
    }
    fn expr_couples(e: &Expr, env: &FamilyEnv) -> Result<bool> {
        for t in collect_terms(e, env.ctx())? {
            if term_couples(&t, env)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
    Ok(expr_couples(&sid.0.lhs, env)? || expr_couples(&sid.0.rhs, env)?)
}

/// The sigma exponent of every term (sigma^0 included, sums and quotient
/// numerators walked, summation-bound variables zeroed); the
/// lexicographically least is the default pivot.
pub fn default_pivot(sid: &SigmaIdentity, env: &FamilyEnv) -> Result<Option<SubscriptExpr>> {
    let mut bound: BTreeSet<String> = sid.0.lhs.bound_vars();
    bound.extend(sid.0.rhs.bound_vars());
    fn gather(e: &Expr, env: &FamilyEnv, out: &mut Vec<SubscriptExpr>) -> Result<()> {
        for t in collect_terms(e, env.ctx())? {
            let mut carried = false;
            for (f, _) in &t.factors {
                match f {
                    Expr::SigmaPow(_) => {
                        out.push(top_level_sigma_exp(&t));
                        carried = true;
                        break;
                    }
                    Expr::Sum { body, .. } if bears_root(body) => {
                        gather(body, env, out)?;
                        carried = true;
                        break;
                    }
                    Expr::Div(num, _) if bears_root(num) => {
                        gather(num, env, out)?;
                        carried = true;
                        break;
                    }
                    _ => {}
                }
            }
            if !carried {
                out.push(SubscriptExpr::constant(0));
            }
        }
        Ok(())
    }
    let mut exps = Vec::new();
    gather(&sid.0.lhs, env, &mut exps)?;
    gather(&sid.0.rhs, env, &mut exps)?;
    Ok(exps.into_iter().min_by_key(|h| h.pivot_key(&bound)))
}

/// Multiplies both sides by sigma^(fresh - pivot), introducing a fresh free
/// index. The per-term single-sigma-power invariant is preserved.
pub fn shift_normalize(
    sid: &SigmaIdentity,
    fresh: &str,
    pivot: Option<SubscriptExpr>,
    env: &FamilyEnv,
) -> Result<SigmaIdentity> {
    let id = &sid.0;
    if id.free_indices.iter().any(|v| v == fresh)
        || id.lhs.bound_vars().contains(fresh)
        || id.rhs.bound_vars().contains(fresh)
    {
        return Err(Error::NameCollision(fresh.to_string()));
    }
    let pivot = match pivot {
        Some(p) => p,
        None => default_pivot(sid, env)?.unwrap_or_else(|| SubscriptExpr::constant(0)),
    };
    let delta = SubscriptExpr::var(fresh).sub(&pivot);
    if delta.is_zero() {
        return Ok(sid.clone());
    }
    let mut out = Identity {
        lhs: shift_all_sigma(&id.lhs, &delta, env)?,
        rhs: shift_all_sigma(&id.rhs, &delta, env)?,
        free_indices: Vec::new(),
        constraints: id.constraints.clone(),
        provenance: format!("{} [shifted by sigma^({delta})]", id.provenance),
    };
    out.refresh_indices();
    let out = normalize_identity(&out, env)?;
    let sid = SigmaIdentity(out);
    validate_sigma_identity(&sid, env)?;
    Ok(sid)
}

/// The tau/sigma exchange: sigma powers become tau powers and every radical
/// changes sign. An involution on power identities.
pub fn conjugate_swap(id: &Identity) -> Identity {
    fn swap(e: &Expr) -> Expr {
        match e {
            Expr::SigmaPow(h) => Expr::TauPow(h.clone()),
            Expr::TauPow(h) => Expr::SigmaPow(h.clone()),
            Expr::RadicalDelta => Expr::neg(Expr::RadicalDelta),
            Expr::Add(xs) => Expr::add(xs.iter().map(swap).collect()),
            Expr::Mul(xs) => Expr::mul(xs.iter().map(swap).collect()),
            Expr::Neg(x) => Expr::neg(swap(x)),
            Expr::Div(a, b) => Expr::div(swap(a), swap(b)),
            Expr::IntPow(x, n) => Expr::int_pow(swap(x), *n),
            Expr::SymPow(x, s) => Expr::sym_pow(swap(x), s.clone()),
            Expr::Sum { var, lo, hi, body } => Expr::Sum {
                var: var.clone(),
                lo: lo.clone(),
                hi: hi.clone(),
                body: Box::new(swap(body)),
            },
            Expr::Arctan(x) => Expr::arctan(swap(x)),
            other => other.clone(),
        }
    }
    let mut out = Identity {
        lhs: swap(&id.lhs),
        rhs: swap(&id.rhs),
        free_indices: Vec::new(),
        constraints: id.constraints.clone(),
        provenance: format!("{} [tau/sigma swapped]", id.provenance),
    };
    out.refresh_indices();
    out
}

/// Recombination through the Binet coefficients: for each sigma-power term
/// c*sigma^h*R with c = a + b*sqrt(D), emits (a*Z[h] - b*(Z[h+1] - q*Z[h-1]))*R,
/// where Z is a fresh arbitrary-seed family. By the combination lemma this
/// equals A_Z*(conjugate-swapped identity) + B_Z*(this identity), so the
/// result is a valid generalization whenever the input is valid.
pub fn binet_combine(
    sid: &SigmaIdentity,
    fresh_family: &str,
    env: &mut FamilyEnv,
) -> Result<Identity> {
    let id = &sid.0;
    if id.families().contains(fresh_family) {
        return Err(Error::NameCollision(fresh_family.to_string()));
    }
    if !env.has_family(fresh_family) {
        let role = if env.is_golden() { FamilyRole::Gibonacci } else { FamilyRole::Horadam };
        env.declare(fresh_family, role)?;
    } else if !env.family(fresh_family)?.has_symbolic_seeds() {
        return Err(Error::NameCollision(format!(
            "{fresh_family} has fixed seeds; combining needs an arbitrary-seed family"
        )));
    }
    let q = env.q().clone();
    let lhs = combine_expr(&id.lhs, fresh_family, &q, env)?;
    let rhs = combine_expr(&id.rhs, fresh_family, &q, env)?;
    let mut out = Identity {
        lhs,
        rhs,
        free_indices: Vec::new(),
        constraints: id.constraints.clone(),
        provenance: format!("{} [combined into {fresh_family}]", id.provenance),
    };
    out.refresh_indices();
    normalize_identity(&out, env)
}

fn combine_expr(e: &Expr, fam: &str, q: &crate::rational::Rational, env: &FamilyEnv) -> Result<Expr> {
    let ctx = env.ctx();
    let e = distribute_sigma_sums(e);
    let terms = collect_terms(&e, ctx)?;
    let mut out = Vec::with_capacity(terms.len());
    for t in terms {
        let mut exp: Option<SubscriptExpr> = None;
        let mut inner_combined = false;
        let mut residue: Vec<(Expr, u32)> = Vec::new();
        for (f, m) in t.factors {
            match f {
                Expr::SigmaPow(h) => {
                    debug_assert!(exp.is_none());
                    let mut total = SubscriptExpr::constant(0);
                    for _ in 0..m {
                        total = total.add(&h);
                    }
                    exp = Some(total);
                }
                Expr::TauPow(_) => {
                    return Err(Error::MissingSigmaPower(
                        "tau power cannot be recombined; swap it first".into(),
                    ));
                }
                // sigma powers inside a sum or quotient combine in place by
                // linearity, absorbing the term's scalar coefficient (its
                // radical part takes part in the recombination rule);
                // root-free factors are plain residue
                Expr::Sum { ref body, .. } if m == 1 && bears_root(body) && !inner_combined => {
                    let Expr::Sum { var, lo, hi, body } = f else { unreachable!() };
                    let scaled = Expr::mul2(quadext_to_expr(&t.coef, ctx), (*body).clone());
                    let b = combine_expr(&scaled, fam, q, env)?;
                    residue.push((Expr::sum(var, lo, hi, b), 1));
                    inner_combined = true;
                }
                Expr::Div(ref num, ref den) if m == 1 && bears_root(num) && !inner_combined => {
                    if bears_root(den) || den.any(&mut |x| matches!(x, Expr::RadicalDelta)) {
                        return Err(Error::MissingSigmaPower(
                            "sigma power or radical in a denominator".into(),
                        ));
                    }
                    let scaled = Expr::mul2(quadext_to_expr(&t.coef, ctx), (**num).clone());
                    let n = combine_expr(&scaled, fam, q, env)?;
                    residue.push((Expr::div(n, (**den).clone()), 1));
                    inner_combined = true;
                }
                other => residue.push((other, m)),
            }
        }
        if inner_combined {
            if exp.is_some() {
                return Err(Error::MalformedDerivation(
                    "term carries sigma powers both at top level and inside a factor".into(),
                ));
            }
            // the coefficient was absorbed into the combined factor
            out.push(NTerm { coef: ctx.one(), factors: residue }.into_expr(ctx));
            continue;
        }
        let h = exp.unwrap_or_else(|| SubscriptExpr::constant(0));
        let a = t.coef.rat_part().clone();
        let b = t.coef.rad_part().clone();
        let residue_expr = NTerm { coef: ctx.one(), factors: residue }.into_expr(ctx);
        // a*Z[h]
        if !a.is_zero() {
            out.push(Expr::mul(vec![
                Expr::Rat(a),
                residue_expr.clone(),
                Expr::seq(fam, h.clone()),
            ]));
        }
        // -b*(Z[h+1] - q*Z[h-1])
        if !b.is_zero() {
            let lemma = Expr::sub(
                Expr::seq(fam, h.shift(1)),
                Expr::mul2(Expr::Rat(q.clone()), Expr::seq(fam, h.shift(-1))),
            );
            out.push(Expr::mul(vec![Expr::Rat(-b), residue_expr, lemma]));
        }
    }
    Ok(Expr::add(out))
}

//! The canonical-form prover.
//!
//! Sum-free identities with affine subscripts are decided by Binet expansion:
//! every X[c0 + sum c_i k_i] becomes A_X tau^{c0} prod x_i^{c_i}
//! + B_X sigma^{c0} prod (sigma^{k_i})^{c_i} in a Laurent ring with one
//! invertible variable x_i = tau^{k_i} per free index (plus z_i = q^{k_i}
//! when |q| != 1; for q = -1 the z's specialize to parity signs, handled by
//! case splits). (-1)^h factors expand to signs per parity case. Quotients
//! are cleared by cross-multiplication and the cleared denominators are
//! recorded as side conditions. A zero normal form in every admissible
//! parity case certifies the identity wherever no denominator vanishes; a
//! nonzero form is a refutation.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::expr::{Constraint, Expr, Identity, Parity};
use crate::family::FamilyEnv;
use crate::laurent::LaurentPoly;
use crate::printer::{print_expr, PrintOptions};
use crate::quad::QuadExt;
use crate::rational::rat;
use crate::seedpoly::SeedPoly;
use crate::sequence::BinetPair;
use crate::subscript::SubscriptExpr;

/// One parity assignment: index variable -> sign of (-1)^index.
pub type ParityCase = BTreeMap<String, i8>;

#[derive(Clone, Debug)]
pub struct CanonicalForm {
    /// Laurent variables in order: x_i per free index, then z_i when present.
    pub vars: Vec<String>,
    /// Normal form of the numerator per admissible parity case.
    pub cases: Vec<(ParityCase, LaurentPoly)>,
    /// Printed forms of every denominator cleared on the way.
    pub cleared_denominators: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProofVerdict {
    Proved {
        parity_cases: usize,
        /// "valid where these do not vanish"
        side_conditions: Vec<String>,
    },
    Refuted {
        case: ParityCase,
        residue_terms: usize,
    },
}

impl ProofVerdict {
    pub fn is_proved(&self) -> bool {
        matches!(self, ProofVerdict::Proved { .. })
    }
}

struct Canonicalizer<'a> {
    env: &'a FamilyEnv,
    index_order: Vec<String>,
    with_z: bool,
    denominators: Vec<String>,
}

/// num/den pair of Laurent polynomials.
#[derive(Clone)]
struct Frac {
    num: LaurentPoly,
    den: LaurentPoly,
}

impl<'a> Canonicalizer<'a> {
    fn nvars(&self) -> usize {
        if self.with_z {
            self.index_order.len() * 2
        } else {
            self.index_order.len()
        }
    }

    fn one_poly(&self) -> LaurentPoly {
        LaurentPoly::constant(self.nvars(), SeedPoly::constant(self.env.ctx().one()))
    }

    fn scalar(&self, c: QuadExt) -> LaurentPoly {
        LaurentPoly::constant(self.nvars(), SeedPoly::constant(c))
    }

    fn frac_scalar(&self, c: QuadExt) -> Frac {
        Frac { num: self.scalar(c), den: self.one_poly() }
    }

    fn var_index(&self, name: &str) -> usize {
        self.index_order.iter().position(|v| v == name).expect("free index registered")
    }

    /// tau^h as a Laurent monomial (exponent affine in the free indices).
    fn tau_pow(&self, h: &SubscriptExpr) -> Result<LaurentPoly> {
        let (c0, coeffs) = self.affine(h)?;
        let mut exps = vec![0i64; self.nvars()];
        for (v, c) in &coeffs {
            exps[self.var_index(v)] = *c;
        }
        let scale = self.env.ctx().tau(self.env.p()).pow(c0)?;
        Ok(LaurentPoly::monomial(exps, SeedPoly::constant(scale)))
    }

    /// sigma^h: sigma^{k_i} = q^{k_i} * x_i^{-1}, with q^{k_i} a parity sign
    /// for q = -1, the constant 1 for q = 1, and a z variable otherwise.
    fn sigma_pow(&self, h: &SubscriptExpr, case: &ParityCase) -> Result<LaurentPoly> {
        let (c0, coeffs) = self.affine(h)?;
        let n = self.index_order.len();
        let mut exps = vec![0i64; self.nvars()];
        let mut sign = 1i64;
        for (v, c) in &coeffs {
            let i = self.var_index(v);
            exps[i] = -*c;
            if self.with_z {
                exps[n + i] = *c;
            } else if *self.env.q() == rat(-1) {
                let s = *case.get(v).unwrap_or(&1) as i64;
                if c % 2 != 0 && s < 0 {
                    sign = -sign;
                }
            }
            // q = 1: q^{k_i} = 1, nothing to track
        }
        let scale = self
            .env
            .ctx()
            .sigma(self.env.p())
            .pow(c0)?
            .scale(&rat(sign));
        Ok(LaurentPoly::monomial(exps, SeedPoly::constant(scale)))
    }

    /// q^h for the parameter q.
    fn q_pow(&self, h: &SubscriptExpr, case: &ParityCase) -> Result<LaurentPoly> {
        let (c0, coeffs) = self.affine(h)?;
        let n = self.index_order.len();
        let mut exps = vec![0i64; self.nvars()];
        let mut sign = 1i64;
        for (v, c) in &coeffs {
            if self.with_z {
                exps[n + self.var_index(v)] = *c;
            } else if *self.env.q() == rat(-1) {
                let s = *case.get(v).unwrap_or(&1) as i64;
                if c % 2 != 0 && s < 0 {
                    sign = -sign;
                }
            }
        }
        let scale = self
            .env
            .ctx()
            .from_rational(self.env.q().clone())
            .pow(c0)?
            .scale(&rat(sign));
        Ok(LaurentPoly::monomial(exps, SeedPoly::constant(scale)))
    }

    /// (-1)^h per parity case.
    fn minus_one_pow(&self, h: &SubscriptExpr, case: &ParityCase) -> Result<LaurentPoly> {
        let (c0, coeffs) = self.affine(h)?;
        let mut sign = if c0 % 2 == 0 { 1 } else { -1 };
        for (v, c) in &coeffs {
            let s = *case.get(v).unwrap_or(&1) as i64;
            if c % 2 != 0 && s < 0 {
                sign = -sign;
            }
        }
        Ok(self.scalar(self.env.ctx().from_int(sign)))
    }

    fn affine(&self, h: &SubscriptExpr) -> Result<(i64, BTreeMap<String, i64>)> {
        h.affine().ok_or_else(|| {
            Error::NotCanonicalizable(format!("subscript '{h}' is not affine in the free indices"))
        })
    }

    fn eval(&mut self, e: &Expr, case: &ParityCase) -> Result<Frac> {
        Ok(match e {
            Expr::Rat(r) => self.frac_scalar(self.env.ctx().from_rational(r.clone())),
            Expr::RadicalDelta => self.frac_scalar(self.env.ctx().radical()),
            Expr::ParamP => self.frac_scalar(self.env.ctx().from_rational(self.env.p().clone())),
            Expr::ParamQ => self.frac_scalar(self.env.ctx().from_rational(self.env.q().clone())),
            Expr::SeqTerm(fam, h) => {
                let spec = self.env.family(fam)?;
                let BinetPair { a, b } = spec.binet_coefficients();
                let t = self.tau_pow(h)?.scale(&a);
                let s = self.sigma_pow(h, case)?.scale(&b);
                Frac { num: t.add(&s), den: self.one_poly() }
            }
            Expr::TauPow(h) => Frac { num: self.tau_pow(h)?, den: self.one_poly() },
            Expr::SigmaPow(h) => Frac { num: self.sigma_pow(h, case)?, den: self.one_poly() },
            Expr::MinusOnePow(h) => {
                Frac { num: self.minus_one_pow(h, case)?, den: self.one_poly() }
            }
            Expr::Add(xs) => {
                let mut acc = self.frac_scalar(self.env.ctx().zero());
                for x in xs {
                    let f = self.eval(x, case)?;
                    acc = Frac {
                        num: acc.num.mul(&f.den).add(&f.num.mul(&acc.den)),
                        den: acc.den.mul(&f.den),
                    };
                }
                acc
            }
            Expr::Mul(xs) => {
                let mut acc = self.frac_scalar(self.env.ctx().one());
                for x in xs {
                    let f = self.eval(x, case)?;
                    acc = Frac { num: acc.num.mul(&f.num), den: acc.den.mul(&f.den) };
                }
                acc
            }
            Expr::Neg(x) => {
                let f = self.eval(x, case)?;
                Frac { num: f.num.neg(), den: f.den }
            }
            Expr::Div(u, v) => {
                let fu = self.eval(u, case)?;
                let fv = self.eval(v, case)?;
                if fv.num.is_zero() {
                    return Err(Error::ZeroDenominator(
                        print_expr(v, PrintOptions { golden: self.env.is_golden() })
                            .unwrap_or_else(|_| format!("{v:?}")),
                    ));
                }
                self.denominators.push(
                    print_expr(v, PrintOptions { golden: self.env.is_golden() })
                        .unwrap_or_else(|_| format!("{v:?}")),
                );
                Frac { num: fu.num.mul(&fv.den), den: fu.den.mul(&fv.num) }
            }
            Expr::IntPow(u, n) => {
                let f = self.eval(u, case)?;
                Frac { num: f.num.pow(*n), den: f.den.pow(*n) }
            }
            Expr::SymPow(base, h) => {
                // q^h is expressible; anything else with a symbolic exponent is not
                if matches!(base.as_ref(), Expr::ParamQ) {
                    Frac { num: self.q_pow(h, case)?, den: self.one_poly() }
                } else {
                    return Err(Error::NotCanonicalizable(format!(
                        "symbolic exponent on {base:?}"
                    )));
                }
            }
            Expr::Sum { .. } => {
                return Err(Error::NotCanonicalizable(
                    "bounded sum with symbolic bounds".into(),
                ))
            }
            Expr::Arctan(_) => {
                return Err(Error::NotCanonicalizable("arctangent".into()));
            }
            Expr::ConstPow(b, h) => {
                return Err(Error::NotCanonicalizable(format!(
                    "integer-base power {b}^({h})"
                )));
            }
            Expr::Index(h) => {
                return Err(Error::NotCanonicalizable(format!(
                    "bare index value ({h}) outside a subscript"
                )));
            }
            Expr::Pi | Expr::LnTau | Expr::ImagUnit | Expr::DerivSeq(..) | Expr::DerivMinusOne(..) => {
                return Err(Error::NotCanonicalizable(format!("transitional node {e:?}")));
            }
            Expr::Binom(a, b) => {
                return Err(Error::NotCanonicalizable(format!("binomial ({a} choose {b})")));
            }
        })
    }
}

/// Admissible parity assignments given the constraints.
pub fn parity_cases(free: &[String], constraints: &[Constraint]) -> Vec<ParityCase> {
    let mut fixed: BTreeMap<&str, i8> = BTreeMap::new();
    for c in constraints {
        if let Constraint::Parity(v, p) = c {
            fixed.insert(v.as_str(), if *p == Parity::Even { 1 } else { -1 });
        }
    }
    let mut cases = vec![ParityCase::new()];
    for v in free {
        let choices: Vec<i8> = match fixed.get(v.as_str()) {
            Some(s) => vec![*s],
            None => vec![1, -1],
        };
        let mut next = Vec::with_capacity(cases.len() * choices.len());
        for case in &cases {
            for s in &choices {
                let mut c = case.clone();
                c.insert(v.clone(), *s);
                next.push(c);
            }
        }
        cases = next;
    }
    cases
}

/// Canonicalizes an expression (typically lhs - rhs) over every admissible
/// parity case.
pub fn canonicalize(e: &Expr, constraints: &[Constraint], env: &FamilyEnv) -> Result<CanonicalForm> {
    let mut free = e.free_indices();
    free.sort();
    let q = env.q();
    let with_z = *q != rat(-1) && *q != rat(1);
    let mut cz = Canonicalizer { env, index_order: free, with_z, denominators: Vec::new() };
    let mut vars: Vec<String> = cz.index_order.iter().map(|v| format!("x_{v}")).collect();
    if with_z {
        vars.extend(cz.index_order.iter().map(|v| format!("z_{v}")));
    }
    let mut cases = Vec::new();
    for case in parity_cases(&cz.index_order.clone(), constraints) {
        let f = cz.eval(e, &case)?;
        if f.den.is_zero() {
            return Err(Error::ZeroDenominator("cleared denominator vanished".into()));
        }
        cases.push((case, f.num));
    }
    let mut denominators = cz.denominators;
    denominators.sort();
    denominators.dedup();
    Ok(CanonicalForm { vars, cases, cleared_denominators: denominators })
}

/// Decides an identity by canonical forms.
pub fn prove_identity(id: &Identity, env: &FamilyEnv) -> Result<ProofVerdict> {
    let diff = id.difference();
    let form = canonicalize(&diff, &id.constraints, env)?;
    for (case, poly) in &form.cases {
        if !poly.is_zero() {
            return Ok(ProofVerdict::Refuted {
                case: case.clone(),
                residue_terms: poly.num_terms(),
            });
        }
    }
    Ok(ProofVerdict::Proved {
        parity_cases: form.cases.len(),
        side_conditions: form.cleared_denominators,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_identity;

    fn env() -> FamilyEnv {
        FamilyEnv::standard()
    }

    fn prove(text: &str) -> ProofVerdict {
        let e = env();
        let id = parse_identity(text, &e).unwrap();
        prove_identity(&id, &e).unwrap()
    }

    #[test]
    fn double_angle_proves() {
        assert!(prove("F[2k] = L[k]*F[k]").is_proved());
    }

    #[test]
    fn trivial_identity_proves() {
        assert!(prove("F[k] = F[k]").is_proved());
        assert!(prove("F[0] = 0").is_proved());
    }

    #[test]
    fn fundamental_identity_needs_parity() {
        // 5F_k^2 - L_k^2 = (-1)^{k-1} 4: zero in both parity cases
        let v = prove("5*F[k]^2 - L[k]^2 = (-1)^(k-1)*4");
        match v {
            ProofVerdict::Proved { parity_cases, .. } => assert_eq!(parity_cases, 2),
            other => panic!("expected proof, got {other:?}"),
        }
    }

    #[test]
    fn perturbed_identity_refuted() {
        let v = prove("F[2k] = L[k]*F[k] + 1");
        match v {
            ProofVerdict::Refuted { residue_terms, .. } => assert!(residue_terms >= 1),
            other => panic!("expected refutation, got {other:?}"),
        }
    }

    #[test]
    fn docagne_generalization_proves() {
        assert!(prove("F[r+1]*G[k] - F[r]*G[k+1] = (-1)^r*G[k-r]").is_proved());
    }

    #[test]
    fn sigma_power_identities_prove() {
        assert!(prove("beta^(s+1)*F[k+1] + beta^(s)*F[k] = beta^(k+s+1)").is_proved());
        assert!(prove("alpha^(s+1)*F[k+1] + alpha^(s)*F[k] = alpha^(k+s+1)").is_proved());
        assert!(prove("2*beta^(k) = L[k] - sqrtD*F[k]").is_proved());
    }

    #[test]
    fn division_identities_record_side_conditions() {
        let e = env();
        let id = parse_identity(
            "L[2k+1]/(F[2k+1]^2 + 1) = L[2k]/(F[2k]^2 + 1) - L[2k+2]/(F[2k+2]^2 + 1)",
            &e,
        )
        .unwrap();
        match prove_identity(&id, &e).unwrap() {
            ProofVerdict::Proved { side_conditions, .. } => {
                assert!(!side_conditions.is_empty());
            }
            other => panic!("expected proof, got {other:?}"),
        }
    }

    #[test]
    fn horadam_identity_with_params() {
        let e = FamilyEnv::with_params(rat(2), rat(-5)).unwrap();
        let id = parse_identity(
            "Z[r]*W[k+1] - q*Z[r-1]*W[k] = W[1]*Z[k+r] - q*W[0]*Z[k+r-1]",
            &e,
        )
        .unwrap();
        assert!(prove_identity(&id, &e).unwrap().is_proved());
    }

    #[test]
    fn parity_constraint_restricts_cases() {
        let e = env();
        let mut id = parse_identity("F[k+m] + (-1)^m*F[k-m] = L[m]*F[k]", &e).unwrap();
        assert!(prove_identity(&id, &e).unwrap().is_proved());
        // restricting with "m even" halves the case count
        id.constraints.push(Constraint::Parity("m".into(), Parity::Even));
        match prove_identity(&id, &e).unwrap() {
            ProofVerdict::Proved { parity_cases, .. } => assert_eq!(parity_cases, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrongly_restricted_parity_is_detected() {
        // L[k+m] + (-1)^m L[k-m] = 5 F[m] F[k] is false (it equals L_m L_k);
        // restricting m to even must not rescue it
        let e = env();
        let mut id = parse_identity("L[k+m] + (-1)^m*L[k-m] = 5*F[m]*F[k]", &e).unwrap();
        id.constraints.push(Constraint::Parity("m".into(), Parity::Even));
        assert!(!prove_identity(&id, &e).unwrap().is_proved());
    }

    #[test]
    fn non_affine_subscript_routes_to_verifier() {
        let e = env();
        let id = parse_identity("F[2kj] = F[2kj]", &e).unwrap();
        assert!(matches!(prove_identity(&id, &e), Err(Error::NotCanonicalizable(_))));
    }

    #[test]
    fn sums_route_to_verifier() {
        let e = env();
        let id = parse_identity("sum(j,0,n, F[j+k]) = F[k+n+2] - F[k+1]", &e).unwrap();
        assert!(matches!(prove_identity(&id, &e), Err(Error::NotCanonicalizable(_))));
    }

    #[test]
    fn mixed_family_identity_proves() {
        // Howard: F_s G_{k+r} + (-1)^{r-1} F_{s-r} G_k = F_r G_{k+s}
        assert!(prove("F[s]*G[k+r] + (-1)^(r-1)*F[s-r]*G[k] = F[r]*G[k+s]").is_proved());
    }

    #[test]
    fn three_family_identity_proves() {
        assert!(prove(
            "G[k+1]*H[r+1]*I[s+1] = 3*G[k]*H[r]*I[s] + 6*G[k-1]*H[r-1]*I[s-1] - 3*G[k-2]*H[r-2]*I[s-2] - G[k-3]*H[r-3]*I[s-3]"
        )
        .is_proved());
    }

    #[test]
    fn identically_zero_denominator_is_an_error() {
        let e = env();
        let id = parse_identity("F[k]/(F[k] - F[k]) = F[k]", &e).unwrap();
        assert!(matches!(prove_identity(&id, &e), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn q_power_identity_proves_for_general_q() {
        // U[k+1]*U[k-1] - U[k]^2 = -q^(k-1) (Catalan/Cassini for U at r=1)
        let e = FamilyEnv::with_params(rat(2), rat(-5)).unwrap();
        let id = parse_identity("U[k+1]*U[k-1] - U[k]^2 = -q^(k-1)", &e).unwrap();
        assert!(prove_identity(&id, &e).unwrap().is_proved());
    }
}

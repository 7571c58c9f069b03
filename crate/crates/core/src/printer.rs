//! Deterministic, grammar-conformant rendering of expressions and
//! identities. Output text reparses to a structurally equal AST.

use num_traits::Signed;

use crate::error::{Error, Result};
use crate::expr::{Expr, Identity};
use crate::rational::display_rational;

/// Printer options: golden environments spell tau/sigma as alpha/beta.
#[derive(Clone, Copy, Debug, Default)]
pub struct PrintOptions {
    pub golden: bool,
}

pub fn print_expr(e: &Expr, opts: PrintOptions) -> Result<String> {
    check_printable(e)?;
    Ok(expr_string(e, opts))
}

pub fn print_identity(id: &Identity, opts: PrintOptions) -> Result<String> {
    Ok(format!("{} = {}", print_expr(&id.lhs, opts)?, print_expr(&id.rhs, opts)?))
}

fn check_printable(e: &Expr) -> Result<()> {
    let mut bad = None;
    e.visit(&mut |x| {
        if bad.is_none() {
            match x {
                Expr::DerivSeq(..) | Expr::DerivMinusOne(..) => bad = Some("derivative marker"),
                Expr::Pi => bad = Some("pi"),
                Expr::LnTau => bad = Some("ln tau"),
                Expr::ImagUnit => bad = Some("imaginary unit"),
                _ => {}
            }
        }
    });
    match bad {
        Some(node) => Err(Error::MalformedDerivation(format!(
            "transitional node ({node}) cannot appear in a printed identity"
        ))),
        None => Ok(()),
    }
}

fn tau_name(opts: PrintOptions) -> &'static str {
    if opts.golden {
        "alpha"
    } else {
        "tau"
    }
}

fn sigma_name(opts: PrintOptions) -> &'static str {
    if opts.golden {
        "beta"
    } else {
        "sigma"
    }
}

/// True for nodes that print as self-delimiting units.
fn is_atomic(e: &Expr) -> bool {
    matches!(
        e,
        Expr::SeqTerm(..)
            | Expr::TauPow(_)
            | Expr::SigmaPow(_)
            | Expr::MinusOnePow(_)
            | Expr::RadicalDelta
            | Expr::ParamP
            | Expr::ParamQ
            | Expr::Binom(..)
            | Expr::Sum { .. }
            | Expr::Arctan(_)
            | Expr::ConstPow(..)
            | Expr::Index(_)
            | Expr::IntPow(..)
            | Expr::SymPow(..)
    ) || matches!(e, Expr::Rat(r) if !r.is_negative() && r.is_integer())
}

fn atom_string(e: &Expr, opts: PrintOptions) -> String {
    if is_atomic(e) {
        expr_string(e, opts)
    } else {
        format!("({})", expr_string(e, opts))
    }
}

/// A factor in a product: atoms and negations stand alone; sums, products
/// and quotients get parentheses.
fn factor_string(e: &Expr, opts: PrintOptions) -> String {
    match e {
        Expr::Neg(inner) => format!("(-{})", atom_string(inner, opts)),
        Expr::Rat(r) if r.is_negative() || !r.is_integer() => {
            format!("({})", display_rational(r))
        }
        _ => atom_string(e, opts),
    }
}

fn expr_string(e: &Expr, opts: PrintOptions) -> String {
    use num_traits::Signed;
    match e {
        Expr::SeqTerm(fam, h) => format!("{fam}[{h}]"),
        Expr::TauPow(h) => format!("{}^({h})", tau_name(opts)),
        Expr::SigmaPow(h) => format!("{}^({h})", sigma_name(opts)),
        Expr::MinusOnePow(h) => {
            let hs = h.to_string();
            if hs.chars().all(|c| c.is_ascii_lowercase()) {
                format!("(-1)^{hs}")
            } else {
                format!("(-1)^({hs})")
            }
        }
        Expr::RadicalDelta => "sqrtD".to_string(),
        Expr::Pi => "<pi>".to_string(),
        Expr::LnTau => "<ln_tau>".to_string(),
        Expr::ImagUnit => "<i>".to_string(),
        Expr::ParamP => "p".to_string(),
        Expr::ParamQ => "q".to_string(),
        Expr::Rat(r) => display_rational(r),
        Expr::Add(terms) => {
            let mut out = String::new();
            for (i, t) in terms.iter().enumerate() {
                let (neg, body) = if is_visually_negative(t) {
                    (true, term_string(&Expr::neg(t.clone()), opts))
                } else {
                    (false, term_string(t, opts))
                };
                if i == 0 {
                    if neg {
                        out.push('-');
                    }
                } else {
                    out.push_str(if neg { " - " } else { " + " });
                }
                out.push_str(&body);
            }
            out
        }
        Expr::Mul(factors) => factors
            .iter()
            .map(|f| factor_string(f, opts))
            .collect::<Vec<_>>()
            .join("*"),
        Expr::Div(num, den) => {
            let n = match num.as_ref() {
                Expr::Add(_) => format!("({})", expr_string(num, opts)),
                Expr::Neg(inner) => format!("-{}", atom_string(inner, opts)),
                Expr::Rat(r) if r.is_negative() || !r.is_integer() => {
                    if r.is_integer() {
                        display_rational(r)
                    } else {
                        format!("({})", display_rational(r))
                    }
                }
                Expr::Mul(_) | Expr::Div(..) => expr_string(num, opts),
                _ => atom_string(num, opts),
            };
            format!("{n}/{}", factor_string(den, opts))
        }
        Expr::Neg(inner) => format!("-{}", atom_string(inner, opts)),
        Expr::IntPow(base, e) => format!("{}^{e}", atom_base_string(base, opts)),
        Expr::SymPow(base, exp) => {
            let es = exp.to_string();
            let simple = es.chars().all(|c| c.is_ascii_lowercase());
            if simple {
                format!("{}^{es}", atom_base_string(base, opts))
            } else {
                format!("{}^({es})", atom_base_string(base, opts))
            }
        }
        Expr::ConstPow(b, exp) => {
            let es = exp.to_string();
            let simple = es.chars().all(|c| c.is_ascii_lowercase());
            if simple {
                format!("{b}^{es}")
            } else {
                format!("{b}^({es})")
            }
        }
        Expr::Index(h) => h.to_string(),
        Expr::Binom(a, b) => format!("binom({a},{b})"),
        Expr::Sum { var, lo, hi, body } => {
            format!("sum({var},{lo},{hi},{})", expr_string(body, opts))
        }
        Expr::Arctan(x) => format!("arctan({})", expr_string(x, opts)),
        Expr::DerivSeq(fam, h, wrt) => format!("<d{fam}[{h}]/d{wrt}>"),
        Expr::DerivMinusOne(h, wrt) => format!("<d(-1)^({h})/d{wrt}>"),
    }
}

fn leading_negative(fs: &[Expr]) -> bool {
    matches!(fs.first(), Some(Expr::Rat(r)) if num_traits::Signed::is_negative(r))
}

/// Terms that would print with a leading minus; the Add printer folds the
/// sign into the separator instead.
fn is_visually_negative(e: &Expr) -> bool {
    use num_traits::Signed;
    match e {
        Expr::Neg(_) => true,
        Expr::Rat(r) => r.is_negative(),
        Expr::Mul(fs) => leading_negative(fs),
        Expr::Div(num, _) => is_visually_negative(num),
        _ => false,
    }
}

/// Product/quotient-level rendering inside a sum term.
fn term_string(e: &Expr, opts: PrintOptions) -> String {
    match e {
        Expr::Mul(_) | Expr::Div(..) => expr_string(e, opts),
        _ => atom_string(e, opts),
    }
}

/// Power bases: sequence terms stay bare, anything else is parenthesized.
fn atom_base_string(e: &Expr, opts: PrintOptions) -> String {
    match e {
        Expr::SeqTerm(..) => expr_string(e, opts),
        Expr::Rat(r) if !r.is_integer() || num_traits::Signed::is_negative(r) => {
            format!("({})", display_rational(r))
        }
        Expr::Rat(r) => display_rational(r),
        _ => format!("({})", expr_string(e, opts)),
    }
}

impl std::fmt::Display for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", expr_string(self, PrintOptions { golden: true }))
    }
}

impl std::fmt::Display for Identity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

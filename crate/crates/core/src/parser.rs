//! Recursive-descent parser for the identity grammar.
//!
//! identity  := expr "=" expr
//! expr      := term (("+"|"-") term)*
//! term      := factor (("*"|"/") factor)*
//! factor    := atom ("^" exponent)? | "-" factor
//! atom      := FAMILY "[" subscript "]" | "alpha^(" s ")" | "beta^(" s ")"
//!            | "tau^(" s ")" | "sigma^(" s ")" | "(-1)^(" s ")" | "sqrtD"
//!            | "binom(" s "," s ")" | "sum(" var "," s "," s "," expr ")"
//!            | "arctan(" expr ")" | INT | INT "^" exponent | "p" | "q"
//!            | "(" expr ")"
//! exponent  := INT | var | "(" subscript ")"
//! subscript := linear expression over index variables with +, -, *,
//!              juxtaposition, and INTBASE^(subscript)
//!
//! Families must be declared in the environment; index variables are single
//! lowercase letters (p and q are reserved parameter names). Errors carry
//! byte positions.

use crate::error::{Error, Result};
use crate::expr::{Expr, Identity};
use crate::family::FamilyEnv;
use crate::subscript::SubscriptExpr;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(i64),
    /// Uppercase-initial identifier: a family name.
    Family(String),
    /// Lowercase identifier run (may be a keyword or a string of index vars).
    Word(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Equals,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
            }
            '0'..='9' => {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                let v: i64 = src[i..j]
                    .parse()
                    .map_err(|_| Error::Parse { pos: start, msg: "integer literal too large".into() })?;
                toks.push((Tok::Int(v), start));
                i = j;
            }
            'A'..='Z' => {
                // family names may carry digits (Z2 from iterated combining)
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_alphanumeric() {
                    j += 1;
                }
                toks.push((Tok::Family(src[i..j].to_string()), start));
                i = j;
            }
            'a'..='z' => {
                // keywords and index-variable runs; digits terminate the word
                // so that k2^(j) lexes as k * 2^(j)
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_alphabetic() {
                    j += 1;
                }
                toks.push((Tok::Word(src[i..j].to_string()), start));
                i = j;
            }
            '+' => {
                toks.push((Tok::Plus, start));
                i += 1;
            }
            '-' => {
                toks.push((Tok::Minus, start));
                i += 1;
            }
            '*' => {
                toks.push((Tok::Star, start));
                i += 1;
            }
            '/' => {
                toks.push((Tok::Slash, start));
                i += 1;
            }
            '^' => {
                toks.push((Tok::Caret, start));
                i += 1;
            }
            '(' => {
                toks.push((Tok::LParen, start));
                i += 1;
            }
            ')' => {
                toks.push((Tok::RParen, start));
                i += 1;
            }
            '[' => {
                toks.push((Tok::LBracket, start));
                i += 1;
            }
            ']' => {
                toks.push((Tok::RBracket, start));
                i += 1;
            }
            ',' => {
                toks.push((Tok::Comma, start));
                i += 1;
            }
            '=' => {
                toks.push((Tok::Equals, start));
                i += 1;
            }
            other => {
                return Err(Error::Parse { pos: start, msg: format!("unexpected character '{other}'") });
            }
        }
    }
    Ok(toks)
}

const KEYWORDS: &[&str] = &["alpha", "beta", "tau", "sigma", "sum", "binom", "arctan", "sqrtD", "p", "q"];

pub struct Parser<'a> {
    env: &'a FamilyEnv,
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

pub fn parse_identity(text: &str, env: &FamilyEnv) -> Result<Identity> {
    let mut p = Parser::new(text, env)?;
    let lhs = p.expr()?;
    p.expect(Tok::Equals, "expected '=' between identity sides")?;
    let rhs = p.expr()?;
    p.expect_end()?;
    Ok(Identity::new(lhs, rhs))
}

pub fn parse_expr(text: &str, env: &FamilyEnv) -> Result<Expr> {
    let mut p = Parser::new(text, env)?;
    let e = p.expr()?;
    p.expect_end()?;
    Ok(e)
}

/// Parses a bare subscript expression, e.g. a pivot override.
pub fn parse_subscript(text: &str, env: &FamilyEnv) -> Result<SubscriptExpr> {
    let mut p = Parser::new(text, env)?;
    let s = p.subscript()?;
    p.expect_end()?;
    Ok(s)
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, env: &'a FamilyEnv) -> Result<Self> {
        let toks = lex(text)?;
        let end = text.len();
        Ok(Parser { env, toks, pos: 0, end })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek_at(&self, n: usize) -> Option<&Tok> {
        self.toks.get(self.pos + n).map(|(t, _)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { pos: self.here(), msg: msg.into() })
    }

    fn expect(&mut self, tok: Tok, msg: &str) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(msg)
        }
    }

    fn expect_end(&self) -> Result<()> {
        if self.pos == self.toks.len() {
            Ok(())
        } else {
            Err(Error::Parse { pos: self.here(), msg: "unexpected trailing input".into() })
        }
    }

    // ---- expression grammar ----

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    terms.push(self.term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    terms.push(Expr::neg(self.term()?));
                }
                _ => break,
            }
        }
        Ok(Expr::add(terms))
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = Expr::mul2(acc, rhs);
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let rhs = self.factor()?;
                    acc = Expr::div(acc, rhs);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(Expr::neg(self.factor()?));
        }
        let atom = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let exp = self.exponent()?;
            return Ok(Expr::sym_pow(atom, exp));
        }
        Ok(atom)
    }

    /// INT | single index variable | "(" subscript ")".
    fn exponent(&mut self) -> Result<SubscriptExpr> {
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                Ok(SubscriptExpr::constant(v))
            }
            Some(Tok::Word(w)) => {
                self.index_vars_product(&w)
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let s = self.subscript()?;
                self.expect(Tok::RParen, "expected ')' after exponent")?;
                Ok(s)
            }
            _ => self.err("expected an exponent"),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::Caret) {
                    self.pos += 1;
                    let exp = self.exponent()?;
                    return Expr::const_pow(v, exp)
                        .map_err(|e| Error::Parse { pos: self.here(), msg: e.to_string() });
                }
                Ok(Expr::int(v))
            }
            Some(Tok::Family(name)) => {
                self.pos += 1;
                if !self.env.has_family(&name) {
                    return Err(Error::Parse {
                        pos: self.here().saturating_sub(name.len()),
                        msg: format!("unknown sequence family '{name}'"),
                    });
                }
                self.expect(Tok::LBracket, "expected '[' after family name")?;
                let sub = self.subscript()?;
                self.expect(Tok::RBracket, "expected ']' after subscript")?;
                Ok(Expr::seq(name, sub))
            }
            Some(Tok::Word(w)) => self.keyword_atom(&w),
            Some(Tok::LParen) => {
                // "(-1)^" lookahead: LParen Minus Int(1) RParen Caret
                if self.peek_at(1) == Some(&Tok::Minus)
                    && self.peek_at(2) == Some(&Tok::Int(1))
                    && self.peek_at(3) == Some(&Tok::RParen)
                    && self.peek_at(4) == Some(&Tok::Caret)
                {
                    self.pos += 5;
                    let s = self.exponent()?;
                    return Ok(Expr::MinusOnePow(s));
                }
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "expected ')'")?;
                Ok(e)
            }
            _ => self.err("expected an expression atom"),
        }
    }

    fn keyword_atom(&mut self, w: &str) -> Result<Expr> {
        match w {
            "alpha" | "beta" => {
                if !self.env.is_golden() {
                    return self.err(format!(
                        "'{w}' is only available when p=1, q=-1; use tau/sigma"
                    ));
                }
                self.pos += 1;
                let s = self.root_power_subscript(w)?;
                Ok(if w == "alpha" { Expr::TauPow(s) } else { Expr::SigmaPow(s) })
            }
            "tau" | "sigma" => {
                self.pos += 1;
                let s = self.root_power_subscript(w)?;
                Ok(if w == "tau" { Expr::TauPow(s) } else { Expr::SigmaPow(s) })
            }
            "sqrtD" => {
                self.pos += 1;
                Ok(Expr::RadicalDelta)
            }
            "p" => {
                self.pos += 1;
                Ok(Expr::ParamP)
            }
            "q" => {
                self.pos += 1;
                Ok(Expr::ParamQ)
            }
            "binom" => {
                self.pos += 1;
                self.expect(Tok::LParen, "expected '(' after binom")?;
                let a = self.subscript()?;
                self.expect(Tok::Comma, "expected ',' in binom")?;
                let b = self.subscript()?;
                self.expect(Tok::RParen, "expected ')' after binom")?;
                Ok(Expr::Binom(a, b))
            }
            "arctan" => {
                self.pos += 1;
                self.expect(Tok::LParen, "expected '(' after arctan")?;
                let e = self.expr()?;
                self.expect(Tok::RParen, "expected ')' after arctan")?;
                Ok(Expr::arctan(e))
            }
            "sum" => {
                self.pos += 1;
                self.expect(Tok::LParen, "expected '(' after sum")?;
                let var = match self.bump() {
                    Some(Tok::Word(v)) if v.len() == 1 && !KEYWORDS.contains(&v.as_str()) => v,
                    _ => return self.err("expected a single-letter summation variable"),
                };
                self.expect(Tok::Comma, "expected ',' after summation variable")?;
                let lo = self.subscript()?;
                self.expect(Tok::Comma, "expected ',' after lower bound")?;
                let hi = self.subscript()?;
                self.expect(Tok::Comma, "expected ',' after upper bound")?;
                let body = self.expr()?;
                self.expect(Tok::RParen, "expected ')' closing sum")?;
                Ok(Expr::sum(var, lo, hi, body))
            }
            v if v.len() == 1 => {
                // a bare index variable as an integer-valued factor
                self.pos += 1;
                Ok(Expr::index_var(v))
            }
            other => self.err(format!("unknown name '{other}' in expression position")),
        }
    }

    fn root_power_subscript(&mut self, root: &str) -> Result<SubscriptExpr> {
        self.expect(Tok::Caret, &format!("expected '^' after {root}"))?;
        self.expect(Tok::LParen, &format!("expected '(' after {root}^"))?;
        let s = self.subscript()?;
        self.expect(Tok::RParen, &format!("expected ')' closing {root} exponent"))?;
        Ok(s)
    }

    // ---- subscript grammar ----

    fn subscript(&mut self) -> Result<SubscriptExpr> {
        let mut acc = self.sub_term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.sub_term()?);
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.sub_term()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn sub_term(&mut self) -> Result<SubscriptExpr> {
        let mut acc = self.sub_factor()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc.mul(&self.sub_factor()?);
                }
                // juxtaposition: 2k, kj, (2n+1)k, k2^(j)
                Some(Tok::Int(_)) | Some(Tok::Word(_)) | Some(Tok::LParen) => {
                    acc = acc.mul(&self.sub_factor()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn sub_factor(&mut self) -> Result<SubscriptExpr> {
        match self.peek().cloned() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(self.sub_factor()?.neg())
            }
            Some(Tok::Int(v)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::Caret) {
                    self.pos += 1;
                    let e = self.exponent()?;
                    return SubscriptExpr::int_pow(v, e)
                        .map_err(|e| Error::Parse { pos: self.here(), msg: e.to_string() });
                }
                Ok(SubscriptExpr::constant(v))
            }
            Some(Tok::Word(w)) => self.index_vars_product(&w),
            Some(Tok::LParen) => {
                self.pos += 1;
                let s = self.subscript()?;
                self.expect(Tok::RParen, "expected ')' in subscript")?;
                Ok(s)
            }
            _ => self.err("expected a subscript factor"),
        }
    }

    /// A lowercase word in subscript position is a juxtaposed product of
    /// single-letter index variables ("kj" = k*j). The reserved parameter
    /// names p and q cannot be indices.
    fn index_vars_product(&mut self, word: &str) -> Result<SubscriptExpr> {
        if KEYWORDS.contains(&word) {
            return self.err(format!("'{word}' cannot be used as an index variable"));
        }
        self.pos += 1;
        let mut acc = SubscriptExpr::constant(1);
        for ch in word.chars() {
            if ch == 'p' || ch == 'q' {
                return self.err(format!("'{ch}' is a reserved parameter name, not an index"));
            }
            if !ch.is_ascii_lowercase() {
                return self.err(format!("'{ch}' is not a valid index variable"));
            }
            acc = acc.mul(&SubscriptExpr::var(ch.to_string()));
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::printer::{print_identity, PrintOptions};

    fn env() -> FamilyEnv {
        FamilyEnv::standard()
    }

    fn roundtrip(text: &str) {
        let e = env();
        let id = parse_identity(text, &e).unwrap();
        let printed = print_identity(&id, PrintOptions { golden: e.is_golden() }).unwrap();
        let reparsed = parse_identity(&printed, &e).unwrap();
        assert_eq!(id.lhs, reparsed.lhs, "lhs of {text} via {printed}");
        assert_eq!(id.rhs, reparsed.rhs, "rhs of {text} via {printed}");
    }

    #[test]
    fn double_angle_parses() {
        let id = parse_identity("F[2k] = L[k]*F[k]", &env()).unwrap();
        assert_eq!(id.free_indices, vec!["k"]);
        assert_eq!(id.lhs, Expr::seq("F", SubscriptExpr::var("k").scale(2)));
        assert_eq!(
            id.rhs,
            Expr::mul2(
                Expr::seq("L", SubscriptExpr::var("k")),
                Expr::seq("F", SubscriptExpr::var("k"))
            )
        );
    }

    #[test]
    fn constant_identity() {
        let id = parse_identity("F[0] = 0", &env()).unwrap();
        assert!(id.free_indices.is_empty());
        assert!(id.rhs.is_zero());
    }

    #[test]
    fn hoggatt_bicknell_sum_parses() {
        let text = "sum(j,0,4n+1, (-1)^(j-1)*binom(4n+1,j)*F[j+k]^4) = 25^n*(F[2n+k+1]^4 - F[2n+k]^4)";
        let id = parse_identity(text, &env()).unwrap();
        assert_eq!(id.free_indices, vec!["n", "k"]);
        roundtrip(text);
    }

    #[test]
    fn multiplication_formula_roundtrip() {
        roundtrip("L[k+m] + (-1)^m*L[k-m] = L[m]*L[k]");
        roundtrip("F[k+m] + (-1)^(m)*F[k-m] = L[m]*F[k]");
    }

    #[test]
    fn howard_free_indices() {
        let id = parse_identity(
            "F[s]*G[k+r] + (-1)^(r-1)*F[s-r]*G[k] = F[r]*G[k+s]",
            &env(),
        )
        .unwrap();
        let mut sorted = id.free_indices.clone();
        sorted.sort();
        assert_eq!(sorted, vec!["k", "r", "s"]);
    }

    #[test]
    fn unknown_family_is_positioned_error() {
        let err = parse_identity("Q[k] = 0", &env()).unwrap_err();
        match err {
            Error::Parse { msg, .. } => assert!(msg.contains("unknown sequence family")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_identity("F[2k = L[k]*F[k]", &env()).unwrap_err();
        match err {
            Error::Parse { pos, .. } => assert!(pos > 0),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn juxtaposition_in_subscripts() {
        let id = parse_identity("F[r+2kj] = F[r+2*k*j]", &env()).unwrap();
        assert_eq!(id.lhs, id.rhs);
        let id = parse_identity("U[k2^(j)] = U[k*2^(j)]", &env()).unwrap();
        assert_eq!(id.lhs, id.rhs);
        let id = parse_identity("F[(2n+1)k] = F[2nk+k]", &env()).unwrap();
        assert_eq!(id.lhs, id.rhs);
    }

    #[test]
    fn symbolic_exponents() {
        let id = parse_identity("L[k]^n = L[k]^(n)", &env()).unwrap();
        assert_eq!(id.lhs, id.rhs);
        roundtrip("sum(j,0,n, binom(n,j)*F[r+2kj]) = L[k]^n*F[r+nk]");
        roundtrip("L[k]^(2j)*F[k] = F[k]*L[k]^(2j)");
    }

    #[test]
    fn reserved_parameter_names() {
        assert!(parse_identity("F[p] = 0", &env()).is_err());
        // but p and q are fine as expression constants
        let generic = FamilyEnv::with_params(crate::rational::rat(2), crate::rational::rat(-5)).unwrap();
        let id = parse_identity("W[k+1]*p - q*W[k] = W[k+2]", &generic).unwrap();
        assert!(id.lhs.any(&mut |e| matches!(e, Expr::ParamQ)));
    }

    #[test]
    fn alpha_requires_golden_env() {
        let generic = FamilyEnv::with_params(crate::rational::rat(2), crate::rational::rat(-5)).unwrap();
        assert!(parse_identity("alpha^(k) = 0", &generic).is_err());
        assert!(parse_identity("tau^(k)*sigma^(k) = q^k", &generic).is_ok());
        roundtrip("alpha^(s+1)*F[k+1] + alpha^(s)*F[k] = alpha^(k+s+1)");
    }

    #[test]
    fn arctan_and_divisions_roundtrip() {
        roundtrip("arctan(1/F[2k+1]) = arctan(1/F[2k]) - arctan(1/F[2k+2])");
        roundtrip("L[2k+1]/(F[2k+1]^2 + 1) = L[2k]/(F[2k]^2 + 1) - L[2k+2]/(F[2k+2]^2 + 1)");
    }

    #[test]
    fn corpus_shapes_roundtrip() {
        roundtrip("5*F[k]^2 - L[k]^2 = (-1)^(k-1)*4");
        roundtrip("F[k+1]*G[s+1] + F[k]*G[s] = G[k+s+1]");
        roundtrip("beta^(s+1)*F[k+1] + beta^(s)*F[k] = beta^(k+s+1)");
        roundtrip("G[k-2]*G[k-1]*G[k+1]*G[k+2] = G[k]^4 - (-1)^(2k)*(G[0]^2 - G[1]^2 + G[0]*G[1])^2");
        roundtrip("sum(j,0,n, 2^j*V[k2^(j)]/U[k2^(j)]^2) = (2*(-1)^(k) + V[k])/U[k]^2");
        roundtrip("sqrtD^2*U[k+r] = sqrtD*sqrtD*U[k+r]");
    }
}

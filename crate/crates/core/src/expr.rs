//! The identity expression language.
//!
//! Expressions are trees over sequence terms with subscript expressions,
//! tau/sigma powers, (-1)-powers, the radical sqrt(D), bounded sums,
//! binomials, arctangents, and rational constants. The formal derivative
//! markers DerivSeq / DerivMinusOne exist only between differentiation and a
//! component transform and are rejected by the printer and the provers.
//!
//! Smart constructors perform light folding (flattening nested sums and
//! products, dropping neutral elements, folding rational-only arithmetic) so
//! that parse-print round trips are stable. (-1)^h factors are never folded,
//! even for provably even h: the second component needs the function form to
//! remain valid for all real arguments.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{rat, Rational};
use crate::subscript::SubscriptExpr;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    /// X[h]: term of a declared family at a subscript.
    SeqTerm(String, SubscriptExpr),
    /// tau^(h) (alpha when p=1, q=-1).
    TauPow(SubscriptExpr),
    /// sigma^(h) (beta when p=1, q=-1).
    SigmaPow(SubscriptExpr),
    /// (-1)^(h); kept separate from SigmaPow because its derivative rule
    /// introduces the i*pi factor.
    MinusOnePow(SubscriptExpr),
    /// sqrt(p^2 - 4q).
    RadicalDelta,
    Pi,
    LnTau,
    ImagUnit,
    /// The recurrence parameters as literal constants.
    ParamP,
    ParamQ,
    Rat(Rational),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    /// Literal nonnegative integer power.
    IntPow(Box<Expr>, u32),
    /// Power with a subscript-expression exponent, e.g. L[k]^n.
    SymPow(Box<Expr>, SubscriptExpr),
    /// INTBASE^(subscript) as a standalone factor, e.g. 25^n.
    ConstPow(i64, SubscriptExpr),
    /// A bare index variable used as an integer-valued factor (the n in
    /// n*L[k]^n). Always holds a single-variable subscript.
    Index(SubscriptExpr),
    Binom(SubscriptExpr, SubscriptExpr),
    Sum {
        var: String,
        lo: SubscriptExpr,
        hi: SubscriptExpr,
        body: Box<Expr>,
    },
    Arctan(Box<Expr>),
    /// d/d(wrt) X[h]: formal marker produced by the differentiator.
    DerivSeq(String, SubscriptExpr, String),
    /// d/d(wrt) (-1)^(h): formal marker.
    DerivMinusOne(SubscriptExpr, String),
}

impl Expr {
    pub fn int(n: i64) -> Expr {
        Expr::Rat(rat(n))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Rat(r) if r.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Rat(r) if r.is_one())
    }

    pub fn seq(family: impl Into<String>, h: SubscriptExpr) -> Expr {
        Expr::SeqTerm(family.into(), h)
    }

    pub fn index_var(name: impl Into<String>) -> Expr {
        Expr::Index(SubscriptExpr::var(name))
    }

    /// The integer value of a subscript expression as an expression factor,
    /// decomposed so that Index nodes only ever hold single variables.
    pub fn from_subscript(s: &SubscriptExpr) -> Expr {
        use crate::subscript::SubAtom;
        if let Some(c) = s.as_const() {
            return Expr::int(c);
        }
        let (monos, c0) = s.pivot_key(&BTreeSet::new());
        let mut terms: Vec<Expr> = Vec::new();
        for (mono, c) in monos {
            let mut factors: Vec<Expr> = vec![Expr::int(c)];
            for atom in mono {
                match atom {
                    SubAtom::Var(v) => factors.push(Expr::index_var(v)),
                    SubAtom::Pow(b, e) => factors.push(Expr::ConstPow(b, e)),
                }
            }
            terms.push(Expr::mul(factors));
        }
        if c0 != 0 {
            terms.push(Expr::int(c0));
        }
        Expr::add(terms)
    }

    /// Flattens nested sums, drops zeros, folds rational constants.
    pub fn add(terms: Vec<Expr>) -> Expr {
        let mut out: Vec<Expr> = Vec::new();
        let mut const_acc = Rational::zero();
        let mut has_const = false;
        let walk = |t: Expr, out: &mut Vec<Expr>, const_acc: &mut Rational, has_const: &mut bool| {
            match t {
                Expr::Rat(r) => {
                    if !r.is_zero() {
                        *const_acc += r;
                        *has_const = true;
                    }
                }
                other => out.push(other),
            }
        };
        for t in terms {
            match t {
                Expr::Add(inner) => {
                    for x in inner {
                        walk(x, &mut out, &mut const_acc, &mut has_const);
                    }
                }
                other => walk(other, &mut out, &mut const_acc, &mut has_const),
            }
        }
        if has_const && !const_acc.is_zero() {
            out.push(Expr::Rat(const_acc));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::Add(out),
        }
    }

    pub fn add2(a: Expr, b: Expr) -> Expr {
        Expr::add(vec![a, b])
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::add(vec![a, Expr::neg(b)])
    }

    /// Flattens nested products, folds rationals, annihilates on zero,
    /// and pulls an inner Neg out front.
    pub fn mul(factors: Vec<Expr>) -> Expr {
        let mut out: Vec<Expr> = Vec::new();
        let mut const_acc = Rational::one();
        let mut negate = false;
        let mut stack: Vec<Expr> = factors.into_iter().rev().collect();
        while let Some(f) = stack.pop() {
            match f {
                Expr::Mul(inner) => {
                    for x in inner.into_iter().rev() {
                        stack.push(x);
                    }
                }
                Expr::Neg(inner) => {
                    negate = !negate;
                    stack.push(*inner);
                }
                Expr::Rat(r) => {
                    if r.is_zero() {
                        return Expr::zero();
                    }
                    const_acc *= r;
                }
                other => out.push(other),
            }
        }
        if negate {
            const_acc = -const_acc;
        }
        if !const_acc.is_one() {
            out.insert(0, Expr::Rat(const_acc));
        }
        let product = match out.len() {
            0 => Expr::one(),
            1 => out.pop().unwrap(),
            _ => Expr::Mul(out),
        };
        product
    }

    pub fn mul2(a: Expr, b: Expr) -> Expr {
        Expr::mul(vec![a, b])
    }

    /// Negation normalizes through sums, products and quotients so that Neg
    /// only ever wraps atomic factors; keeps printing unambiguous.
    pub fn neg(e: Expr) -> Expr {
        match e {
            Expr::Rat(r) => Expr::Rat(-r),
            Expr::Neg(inner) => *inner,
            Expr::Add(xs) => Expr::add(xs.into_iter().map(Expr::neg).collect()),
            Expr::Mul(xs) => {
                let mut fs = vec![Expr::int(-1)];
                fs.extend(xs);
                Expr::mul(fs)
            }
            Expr::Div(a, b) => Expr::div(Expr::neg(*a), *b),
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn div(num: Expr, den: Expr) -> Expr {
        if num.is_zero() && !den.is_zero() {
            return Expr::zero();
        }
        if let (Expr::Rat(a), Expr::Rat(b)) = (&num, &den) {
            if !b.is_zero() {
                return Expr::Rat(a / b);
            }
        }
        if den.is_one() {
            return num;
        }
        Expr::Div(Box::new(num), Box::new(den))
    }

    pub fn int_pow(base: Expr, e: u32) -> Expr {
        match e {
            0 => Expr::one(),
            1 => base,
            _ => match base {
                Expr::Rat(r) => {
                    let mut acc = Rational::one();
                    for _ in 0..e {
                        acc *= &r;
                    }
                    Expr::Rat(acc)
                }
                Expr::IntPow(inner, e0) => Expr::IntPow(inner, e0 * e),
                other => Expr::IntPow(Box::new(other), e),
            },
        }
    }

    pub fn sym_pow(base: Expr, e: SubscriptExpr) -> Expr {
        match e.as_const() {
            Some(c) if (0..=64).contains(&c) => Expr::int_pow(base, c as u32),
            _ => Expr::SymPow(Box::new(base), e),
        }
    }

    pub fn const_pow(base: i64, e: SubscriptExpr) -> Result<Expr> {
        if base < 2 {
            return Err(Error::Config(format!("integer power base {base} must be >= 2")));
        }
        if let Some(c) = e.as_const() {
            let r = rat(base);
            let mut acc = Rational::one();
            for _ in 0..c.unsigned_abs().min(512) {
                acc *= &r;
            }
            if c < 0 {
                acc = acc.recip();
            }
            return Ok(Expr::Rat(acc));
        }
        Ok(Expr::ConstPow(base, e))
    }

    pub fn sum(var: impl Into<String>, lo: SubscriptExpr, hi: SubscriptExpr, body: Expr) -> Expr {
        Expr::Sum { var: var.into(), lo, hi, body: Box::new(body) }
    }

    pub fn arctan(e: Expr) -> Expr {
        Expr::Arctan(Box::new(e))
    }

    /// All subscripts appearing anywhere, with the bound variables active at
    /// that point. Drives free-variable analysis.
    fn walk_subscripts<'a>(&'a self, bound: &mut Vec<String>, f: &mut impl FnMut(&'a SubscriptExpr, &[String])) {
        match self {
            Expr::SeqTerm(_, h)
            | Expr::TauPow(h)
            | Expr::SigmaPow(h)
            | Expr::MinusOnePow(h)
            | Expr::ConstPow(_, h)
            | Expr::Index(h)
            | Expr::DerivMinusOne(h, _)
            | Expr::DerivSeq(_, h, _) => f(h, bound),
            Expr::SymPow(b, h) => {
                f(h, bound);
                b.walk_subscripts(bound, f);
            }
            Expr::Binom(a, b) => {
                f(a, bound);
                f(b, bound);
            }
            Expr::Sum { var, lo, hi, body } => {
                f(lo, bound);
                f(hi, bound);
                bound.push(var.clone());
                body.walk_subscripts(bound, f);
                bound.pop();
            }
            Expr::Add(xs) | Expr::Mul(xs) => {
                for x in xs {
                    x.walk_subscripts(bound, f);
                }
            }
            Expr::Div(a, b) => {
                a.walk_subscripts(bound, f);
                b.walk_subscripts(bound, f);
            }
            Expr::Neg(x) | Expr::IntPow(x, _) | Expr::Arctan(x) => x.walk_subscripts(bound, f),
            Expr::RadicalDelta
            | Expr::Pi
            | Expr::LnTau
            | Expr::ImagUnit
            | Expr::ParamP
            | Expr::ParamQ
            | Expr::Rat(_) => {}
        }
    }

    /// Free index variables in first-occurrence order.
    pub fn free_indices(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let mut bound_stack = Vec::new();
        self.walk_subscripts(&mut bound_stack, &mut |h, bound| {
            for v in h.vars() {
                if !bound.contains(&v) && seen.insert(v.clone()) {
                    out.push(v);
                }
            }
        });
        out
    }

    pub fn contains_free(&self, var: &str) -> bool {
        self.free_indices().iter().any(|v| v == var)
    }

    /// Names of all families referenced.
    pub fn families(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::SeqTerm(fam, _) | Expr::DerivSeq(fam, _, _) = e {
                out.insert(fam.clone());
            }
        });
        out
    }

    /// Bound summation variables anywhere in the tree.
    pub fn bound_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Sum { var, .. } = e {
                out.insert(var.clone());
            }
        });
        out
    }

    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Add(xs) | Expr::Mul(xs) => {
                for x in xs {
                    x.visit(f);
                }
            }
            Expr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Neg(x) | Expr::IntPow(x, _) | Expr::SymPow(x, _) | Expr::Arctan(x) => x.visit(f),
            Expr::Sum { body, .. } => body.visit(f),
            _ => {}
        }
    }

    pub fn any(&self, pred: &mut impl FnMut(&Expr) -> bool) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if pred(e) {
                found = true;
            }
        });
        found
    }

    pub fn has_markers(&self) -> bool {
        self.any(&mut |e| matches!(e, Expr::DerivSeq(..) | Expr::DerivMinusOne(..)))
    }

    pub fn has_arctan(&self) -> bool {
        self.any(&mut |e| matches!(e, Expr::Arctan(_)))
    }

    /// Rebuilds the tree with every subscript mapped through `f`.
    /// Uses the smart constructors, so results stay lightly normalized.
    pub fn map_subscripts(&self, f: &impl Fn(&SubscriptExpr) -> SubscriptExpr) -> Expr {
        match self {
            Expr::SeqTerm(fam, h) => Expr::SeqTerm(fam.clone(), f(h)),
            Expr::TauPow(h) => Expr::TauPow(f(h)),
            Expr::SigmaPow(h) => Expr::SigmaPow(f(h)),
            Expr::MinusOnePow(h) => Expr::MinusOnePow(f(h)),
            Expr::ConstPow(b, h) => Expr::ConstPow(*b, f(h)),
            Expr::Index(h) => Expr::from_subscript(&f(h)),
            Expr::SymPow(b, h) => Expr::sym_pow(b.map_subscripts(f), f(h)),
            Expr::Binom(a, b) => Expr::Binom(f(a), f(b)),
            Expr::Sum { var, lo, hi, body } => Expr::Sum {
                var: var.clone(),
                lo: f(lo),
                hi: f(hi),
                body: Box::new(body.map_subscripts(f)),
            },
            Expr::Add(xs) => Expr::add(xs.iter().map(|x| x.map_subscripts(f)).collect()),
            Expr::Mul(xs) => Expr::mul(xs.iter().map(|x| x.map_subscripts(f)).collect()),
            Expr::Div(a, b) => Expr::div(a.map_subscripts(f), b.map_subscripts(f)),
            Expr::Neg(x) => Expr::neg(x.map_subscripts(f)),
            Expr::IntPow(x, e) => Expr::int_pow(x.map_subscripts(f), *e),
            Expr::Arctan(x) => Expr::arctan(x.map_subscripts(f)),
            Expr::DerivSeq(fam, h, wrt) => Expr::DerivSeq(fam.clone(), f(h), wrt.clone()),
            Expr::DerivMinusOne(h, wrt) => Expr::DerivMinusOne(f(h), wrt.clone()),
            leaf => leaf.clone(),
        }
    }
}

/// Parity restriction attached to an identity ("m even"/"m odd"), plus an
/// escape hatch for conditions the engine only reports.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Constraint {
    Parity(String, Parity),
    /// Lower bound var >= value; used for sum limits like n >= 0.
    AtLeast(String, i64),
    Text(String),
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Parity(v, Parity::Even) => write!(f, "{v} even"),
            Constraint::Parity(v, Parity::Odd) => write!(f, "{v} odd"),
            Constraint::AtLeast(v, n) => write!(f, "{v} >= {n}"),
            Constraint::Text(t) => write!(f, "{t}"),
        }
    }
}

impl Constraint {
    pub fn parse(s: &str) -> Result<Constraint> {
        let s = s.trim();
        if let Some(v) = s.strip_suffix(" even") {
            return Ok(Constraint::Parity(v.trim().to_string(), Parity::Even));
        }
        if let Some(v) = s.strip_suffix(" odd") {
            return Ok(Constraint::Parity(v.trim().to_string(), Parity::Odd));
        }
        if let Some((v, n)) = s.split_once(">=") {
            let n: i64 = n
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad bound in constraint '{s}'")))?;
            return Ok(Constraint::AtLeast(v.trim().to_string(), n));
        }
        Ok(Constraint::Text(s.to_string()))
    }
}

/// An identity lhs = rhs with free indices and constraints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Identity {
    pub lhs: Expr,
    pub rhs: Expr,
    pub free_indices: Vec<String>,
    pub constraints: Vec<Constraint>,
    pub provenance: String,
}

impl Identity {
    pub fn new(lhs: Expr, rhs: Expr) -> Identity {
        Identity::with_provenance(lhs, rhs, String::new())
    }

    pub fn with_provenance(lhs: Expr, rhs: Expr, provenance: impl Into<String>) -> Identity {
        let mut free = lhs.free_indices();
        for v in rhs.free_indices() {
            if !free.contains(&v) {
                free.push(v);
            }
        }
        Identity {
            lhs,
            rhs,
            free_indices: free,
            constraints: Vec::new(),
            provenance: provenance.into(),
        }
    }

    pub fn with_constraints(mut self, constraints: Vec<Constraint>) -> Identity {
        self.constraints = constraints;
        self
    }

    pub fn families(&self) -> BTreeSet<String> {
        let mut out = self.lhs.families();
        out.extend(self.rhs.families());
        out
    }

    /// Recomputes the free-index set after a structural edit.
    pub fn refresh_indices(&mut self) {
        let mut free = self.lhs.free_indices();
        for v in self.rhs.free_indices() {
            if !free.contains(&v) {
                free.push(v);
            }
        }
        self.free_indices = free;
    }

    /// lhs - rhs, the expression the prover sends to canonical form.
    pub fn difference(&self) -> Expr {
        Expr::sub(self.lhs.clone(), self.rhs.clone())
    }

    /// Rewrites every occurrence of `var` in subscripts by `replacement`.
    /// Capture of a summation-bound variable is an error.
    pub fn substitute_index(&self, var: &str, replacement: &SubscriptExpr) -> Result<Identity> {
        let mut bound = self.lhs.bound_vars();
        bound.extend(self.rhs.bound_vars());
        for v in replacement.vars() {
            if bound.contains(&v) {
                return Err(Error::NameCollision(v));
            }
        }
        let f = |h: &SubscriptExpr| h.substitute(var, replacement);
        let mut out = Identity {
            lhs: self.lhs.map_subscripts(&f),
            rhs: self.rhs.map_subscripts(&f),
            free_indices: Vec::new(),
            constraints: self
                .constraints
                .iter()
                .filter(|c| !matches!(c, Constraint::Parity(v, _) | Constraint::AtLeast(v, _) if v == var))
                .cloned()
                .collect(),
            provenance: self.provenance.clone(),
        };
        out.refresh_indices();
        Ok(out)
    }
}

//! Sequence family declarations and the per-identity environment.
//!
//! Every identity is parsed and transformed against an environment that fixes
//! the recurrence parameters (p, q), the quadratic-field context D = p^2-4q,
//! and the declared families. One environment means one field context, so
//! cross-field arithmetic cannot happen silently.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::quad::QuadCtx;
use crate::rational::{rat, Rational};
use crate::sequence::SequenceSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FamilyRole {
    /// F: p=1, q=-1, seeds (0, 1).
    Fibonacci,
    /// L: p=1, q=-1, seeds (2, 1).
    Lucas,
    /// Lucas sequence of the first kind: seeds (0, 1).
    LucasU,
    /// Lucas sequence of the second kind: seeds (2, p).
    LucasV,
    /// p=1, q=-1, arbitrary symbolic seeds.
    Gibonacci,
    /// General second-order recurrence with symbolic seeds.
    Horadam,
}

impl FamilyRole {
    pub fn parse(s: &str) -> Option<FamilyRole> {
        match s {
            "fib" | "F" => Some(FamilyRole::Fibonacci),
            "lucas" | "L" => Some(FamilyRole::Lucas),
            "U" | "ulucas" => Some(FamilyRole::LucasU),
            "V" | "vlucas" => Some(FamilyRole::LucasV),
            "gib" | "gibonacci" => Some(FamilyRole::Gibonacci),
            "horadam" | "W" => Some(FamilyRole::Horadam),
            _ => None,
        }
    }
}

#[derive(Clone)]
pub struct FamilyEnv {
    p: Rational,
    q: Rational,
    ctx: QuadCtx,
    families: BTreeMap<String, SequenceSpec>,
}

impl FamilyEnv {
    pub fn new(p: Rational, q: Rational) -> Result<Self> {
        if p == rat(0) || q == rat(0) {
            return Err(Error::Config("recurrence parameters p and q must be nonzero".into()));
        }
        let ctx = QuadCtx::for_recurrence(&p, &q)?;
        Ok(FamilyEnv { p, q, ctx, families: BTreeMap::new() })
    }

    /// The classical p=1, q=-1 environment with F, L, U, V, W and the
    /// gibonacci alphabet declared. Used for inline CLI input.
    pub fn standard() -> Self {
        let mut env = FamilyEnv::new(rat(1), rat(-1)).unwrap();
        for (name, role) in [
            ("F", FamilyRole::Fibonacci),
            ("L", FamilyRole::Lucas),
            ("U", FamilyRole::LucasU),
            ("V", FamilyRole::LucasV),
            ("W", FamilyRole::Horadam),
        ] {
            env.declare(name, role).unwrap();
        }
        for name in ["G", "H", "I", "J", "M", "N", "E", "Z"] {
            env.declare(name, FamilyRole::Gibonacci).unwrap();
        }
        env
    }

    /// Environment with given parameters and the U, V, W, Z families; for
    /// p=1, q=-1 this is extended like `standard`.
    pub fn with_params(p: Rational, q: Rational) -> Result<Self> {
        if p == rat(1) && q == rat(-1) {
            return Ok(FamilyEnv::standard());
        }
        let mut env = FamilyEnv::new(p, q)?;
        env.declare("U", FamilyRole::LucasU)?;
        env.declare("V", FamilyRole::LucasV)?;
        env.declare("W", FamilyRole::Horadam)?;
        env.declare("Z", FamilyRole::Horadam)?;
        Ok(env)
    }

    pub fn p(&self) -> &Rational {
        &self.p
    }

    pub fn q(&self) -> &Rational {
        &self.q
    }

    pub fn ctx(&self) -> &QuadCtx {
        &self.ctx
    }

    /// True for the classical p=1, q=-1 parameters (alpha/beta spelling).
    pub fn is_golden(&self) -> bool {
        self.p == rat(1) && self.q == rat(-1)
    }

    pub fn declare(&mut self, name: &str, role: FamilyRole) -> Result<()> {
        if self.families.contains_key(name) {
            return Err(Error::DuplicateFamily(name.to_string()));
        }
        let spec = SequenceSpec::for_role(name, role, &self.p, &self.q, &self.ctx)?;
        self.families.insert(name.to_string(), spec);
        Ok(())
    }

    pub fn family(&self, name: &str) -> Result<&SequenceSpec> {
        self.families.get(name).ok_or_else(|| Error::UnknownFamily(name.to_string()))
    }

    pub fn has_family(&self, name: &str) -> bool {
        self.families.contains_key(name)
    }

    pub fn family_names(&self) -> impl Iterator<Item = &str> {
        self.families.keys().map(|s| s.as_str())
    }

    /// The sibling family used by the real-part rule: F<->L, U<->V.
    pub fn partner_of(&self, name: &str) -> Result<&SequenceSpec> {
        let spec = self.family(name)?;
        let partner_role = match spec.role() {
            FamilyRole::Fibonacci => FamilyRole::Lucas,
            FamilyRole::Lucas => FamilyRole::Fibonacci,
            FamilyRole::LucasU => FamilyRole::LucasV,
            FamilyRole::LucasV => FamilyRole::LucasU,
            _ => return self.family(name),
        };
        self.families
            .values()
            .find(|s| s.role() == partner_role)
            .ok_or_else(|| Error::Config(format!("partner family for '{name}' is not declared")))
    }
}

impl std::fmt::Debug for FamilyEnv {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "FamilyEnv(p={}, q={}, families=[{}])",
            self.p,
            self.q,
            self.families.keys().cloned().collect::<Vec<_>>().join(", ")
        )
    }
}

//! Exact symbolic engine for second-order recurrence identities.
//!
//! The engine works with Lucas-type sequences W_j = p*W_{j-1} - q*W_{j-2}
//! (Fibonacci, Lucas, gibonacci and Horadam families) and mechanizes a
//! calculus-based scheme for producing new identities from known ones:
//! subscripts are treated as real variables, the identity is differentiated
//! with respect to a free index, and either the real part (new identities in
//! the same families) or the imaginary part (sigma-power identities that
//! recombine into arbitrary-seed generalizations) is extracted.
//!
//! Everything is exact: rationals are arbitrary precision, the characteristic
//! roots tau and sigma live in the quadratic field Q(sqrt(p^2-4q)), and
//! symbolic seeds are carried as multivariate polynomials. Candidate
//! identities are decided by canonical Laurent normal forms with parity
//! case-splits, or checked by exact instantiation over index grids; a
//! high-precision numeric fallback covers arctangent identities.

pub mod canonical;
pub mod corpus;
pub mod deriv;
pub mod error;
pub mod expr;
pub mod family;
pub mod laurent;
pub mod numeric;
pub mod parser;
pub mod pipeline;
pub mod printer;
pub mod quad;
pub mod rational;
pub mod seedpoly;
pub mod sequence;
pub mod simplify;
pub mod subscript;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use expr::{Constraint, Expr, Identity, Parity};
pub use family::{FamilyEnv, FamilyRole};
pub use quad::{QuadCtx, QuadExt};
pub use rational::Rational;
pub use seedpoly::SeedPoly;
pub use sequence::SequenceSpec;
pub use subscript::SubscriptExpr;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    // -- exact arithmetic --
    #[error("degenerate discriminant {0}: must be positive and not a rational square")]
    DegenerateDiscriminant(String),
    #[error("mixed quadratic-field contexts: {0} vs {1}")]
    MixedContexts(String, String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("unbound seed symbol '{0}' in substitution")]
    UnboundSeed(String),

    // -- parsing --
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("unknown sequence family '{0}'")]
    UnknownFamily(String),
    #[error("family '{0}' already declared")]
    DuplicateFamily(String),

    // -- subscripts and evaluation --
    #[error("unbound index variable '{0}'")]
    UnboundIndex(String),
    #[error("subscript evaluation overflow")]
    SubscriptOverflow,
    #[error("negative exponent {0} in integer-base power inside a subscript")]
    NegativeSubscriptExponent(i64),

    // -- differentiation --
    #[error("index '{0}' is not free in the identity")]
    NotAFreeIndex(String),
    #[error("cannot differentiate: {0}")]
    NotDifferentiable(String),

    // -- component transforms --
    #[error("malformed derivation: {0}")]
    MalformedDerivation(String),
    #[error("imaginary-part extraction requires q < 0, but family '{family}' has q = {q}")]
    PositiveQ { family: String, q: String },
    #[error("real-part rule is only available for q = -1 families; '{family}' has q = {q}")]
    RealPartUnsupportedQ { family: String, q: String },
    #[error("arctan-bearing form: rewrite it to one valid for all real arguments first")]
    ArctanNotSupported,
    #[error("function form does not hold for all real values of '{0}'; the imaginary component does not apply")]
    IntegerOnlyForm(String),
    #[error("name '{0}' collides with an existing index or family")]
    NameCollision(String),
    #[error("term without a sigma power: {0}")]
    MissingSigmaPower(String),
    #[error("derivation produced no new identity (both sides are identical)")]
    NoNewIdentity,

    // -- prover / verifier --
    #[error("not canonicalizable: {0}")]
    NotCanonicalizable(String),
    #[error("denominator is identically zero: {0}")]
    ZeroDenominator(String),
    #[error("empty admissible grid")]
    EmptyGrid,
    #[error("precision must be at least 8 digits, got {0}")]
    PrecisionTooLow(u32),
    #[error("cannot evaluate numerically: {0}")]
    NotNumeric(String),

    // -- corpus / cli --
    #[error("corpus error in {file}: {msg}")]
    Corpus { file: String, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

//! Crate-wide error type.

/// Errors raised by constructions and evaluations in this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input matrix failed a Hermiticity check.
    #[error("non-Hermitian input: {0}")]
    NonHermitianInput(String),

    /// Imaginary-time arguments violate the cyclic ordering
    /// `tau_1 <= ... <= tau_n <= tau_1 + beta`.
    #[error("cyclic order violated: {0}")]
    OrderViolation(String),

    /// A generator set is not closed under the star operation.
    #[error("star closure failed: {0}")]
    StarClosure(String),

    /// A reflection-positivity half-word has a time outside `(0, beta/2)`.
    #[error("time outside (0, beta/2): {0}")]
    ReflectionRange(String),

    /// A complex-time sample lies outside the closed tube.
    #[error("sample outside the closed tube: {0}")]
    TubeViolation(String),

    /// A word basis would exceed the configured size cap.
    #[error("word basis too large: {0}")]
    SizeLimit(String),

    /// A Gram matrix is negative beyond tolerance, signalling a
    /// non-compliant oracle.
    #[error("gram matrix violates positivity: {0}")]
    OraclePsdViolation(String),

    /// Quotienting by the Gram kernel removed every direction.
    #[error("quotient of a non-empty basis has rank zero")]
    RankZero,

    /// No basis word survives the imaginary-time shift.
    #[error("shift domain is empty")]
    EmptyDomain,

    /// A transfer-operator eigenvalue is not positive; the sampling is
    /// insufficient or the oracle is not KMS.
    #[error("transfer eigenvalue not positive: {0}")]
    NonPositiveSemigroup(String),

    /// A star-reflected word is missing from the basis.
    #[error("star reflection leaves the basis: {0}")]
    Closure(String),

    /// A represented operator exceeds its declared norm bound.
    #[error("operator norm contract violated: {0}")]
    NormViolation(String),

    /// The defining linear system for the Tomita operator S is singular,
    /// i.e. the vacuum vector is not separating.
    #[error("GNS vacuum is not separating")]
    SeparatingFailure,

    /// A quadrature error estimate exceeds the requested tolerance.
    #[error("quadrature error estimate {estimate:.3e} exceeds {tolerance:.3e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    /// The truncated-Fock cross-check of a quasi-free oracle failed.
    #[error("truncated Fock cross-check disagrees by {0:.3e}")]
    Truncation(f64),

    /// Invalid experiment configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

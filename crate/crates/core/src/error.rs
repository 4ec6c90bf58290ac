use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the toolkit.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("bad reduction at {ell}: the model's discriminant is divisible by {ell}")]
    BadReduction { ell: u64 },

    #[error("singular Weierstrass model (discriminant 0)")]
    SingularCurve,

    #[error("no trace of Frobenius available for ell = {ell}")]
    MissingTrace { ell: u64 },

    #[error("traces unavailable for {} prime(s), first {}", .primes.len(), .primes.first().copied().unwrap_or(0))]
    InsufficientTraceData { primes: Vec<u64> },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("trace table key {0} is not prime")]
    NonPrimeKey(u64),

    #[error("duplicate trace table entry for ell = {0}")]
    DuplicateKey(u64),

    #[error("line {line}: value {value} out of range")]
    ValueOutOfRange { line: usize, value: String },

    #[error("matrix is not invertible modulo {modulus}")]
    NotInvertible { modulus: u64 },

    #[error("tame relation sigma*tau*sigma^-1 = tau^ell fails")]
    RelationViolated,

    #[error("precision p^{precision} cannot separate an exponent {exponent} summand from a divisible one")]
    PrecisionInsufficient { precision: u32, exponent: u32 },

    #[error(
        "hypothesis violated: prime {ell} divides the base level and is congruent to +-1 mod p"
    )]
    HypothesisViolated { ell: u64 },

    #[error("negative dimension for {0}")]
    NegativeDimension(String),

    #[error("enumeration produced {count} elements, cap is {cap}")]
    CapExceeded { count: u64, cap: u64 },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code used by the command-line front end.
    ///
    /// 2 = configuration error, 3 = trace data insufficiency,
    /// 4 = hypothesis violation, 1 = anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::Config(_)
            | Error::InvalidParameter(_)
            | Error::Parse { .. }
            | Error::NonPrimeKey(_)
            | Error::DuplicateKey(_)
            | Error::ValueOutOfRange { .. }
            | Error::SingularCurve
            | Error::NegativeDimension(_) => 2,
            Error::MissingTrace { .. } | Error::InsufficientTraceData { .. } => 3,
            Error::HypothesisViolated { .. } => 4,
            _ => 1,
        }
    }
}

use thiserror::Error;

/// Crate-wide error type.
///
/// The three coarse classes map to process exit codes in the CLI harness:
/// domain violations (1), malformed input or bad arguments (2), numeric
/// failures (3).
#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter breaks a structural invariant.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation was called with arguments outside its contract.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A drift/jump pair failed a verifiable condition; the witness is in the report.
    #[error("domain condition violated: {0}")]
    ConditionViolation(String),

    /// The gradient-based condition variant was invoked on a model with jumps.
    #[error("gradient-condition variant requires a jump-free model (intensity is {intensity})")]
    JumpsPresent { intensity: f64 },

    /// State left the representable range during integration.
    #[error("numeric blow-up at step {step} (t = {time}): non-finite state")]
    NumericBlowup { step: usize, time: f64 },

    /// A density ratio was exactly zero or non-finite where positivity is required.
    #[error("support violation: {at}")]
    SupportViolation { at: String },

    /// A path weight is -inf because a jump landed where the target measure has no mass.
    #[error("singular path weight: jump of size {jump:?} has zero target density")]
    SingularWeight { jump: Vec<f64> },

    /// Transition-density estimate degenerated (zero bandwidth).
    #[error("degenerate bandwidth on coordinate {coordinate}")]
    ZeroBandwidth { coordinate: usize },

    /// A sampler block stopped moving (or accepted everything) after warmup.
    #[error("tuning failure: block '{block}' acceptance rate {rate} after warmup")]
    TuningFailure { block: &'static str, rate: f64 },

    /// A serialized artifact could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(format!("json at line {}, column {}: {e}", e.line(), e.column()))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Exit-code class used by the CLI: 1 domain, 2 input, 3 numeric.
    pub fn exit_class(&self) -> i32 {
        match self {
            Error::ConditionViolation(_) => 1,
            Error::InvalidParameter(_)
            | Error::InvalidInput(_)
            | Error::JumpsPresent { .. }
            | Error::Parse(_)
            | Error::Io(_) => 2,
            Error::NumericBlowup { .. }
            | Error::SupportViolation { .. }
            | Error::SingularWeight { .. }
            | Error::ZeroBandwidth { .. }
            | Error::TuningFailure { .. } => 3,
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate coupling: omega1 = omega2 = 0, the dark state is undefined")]
    DegenerateCoupling,

    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("invalid integration window [{start}, {end}]")]
    InvalidWindow { start: f64, end: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("step-size failure: norm drift {norm_drift:e} exceeds tolerance {tolerance:e} at step {step:e}")]
    StepSize {
        norm_drift: f64,
        tolerance: f64,
        step: f64,
    },

    #[error("at (delta1 = {delta1}, delta2 = {delta2}): {source}")]
    AtDetuning {
        delta1: f64,
        delta2: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("at sensor quantity {x}: {source}")]
    AtQuantity {
        x: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("threshold unachievable: max |dP3/d(delta)| = {max_slope} over the scanned range is below {threshold}")]
    ThresholdUnachievable { threshold: f64, max_slope: f64 },

    #[error("deposited mass must be non-negative, got {0} g")]
    NegativeMass(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::StepSize { .. } | Error::ThresholdUnachievable { .. } => true,
            Error::AtDetuning { source, .. } | Error::AtQuantity { source, .. } => {
                source.is_numerical()
            }
            _ => false,
        }
    }
}

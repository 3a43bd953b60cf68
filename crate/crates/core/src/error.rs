use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The misfit is not differentiable at the requested point.
    #[error("nonsmooth point: {0}")]
    Nonsmooth(&'static str),

    #[error("{0} misfit has no convex conjugate")]
    NoConjugate(&'static str),

    #[error("`{op}` is not supported for the {kind} regularizer")]
    Unsupported { op: &'static str, kind: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot parse descriptor `{input}`: {reason}")]
    Parse { input: String, reason: String },

    #[error("value function is not differentiable at this sample")]
    NotDifferentiable,

    #[error("Newton step needs a negative slope, got {0}")]
    NonDescent(f64),

    #[error("sigma = {sigma} is below the attainable misfit floor {floor}")]
    Unreachable { sigma: f64, floor: f64 },

    #[error("brute-force oracle limited to n <= {max}, got n = {n}")]
    TooLarge { n: usize, max: usize },
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("{what}: argument {value} is outside the domain")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Adaptive quadrature hit its refinement limit.
    #[error("quadrature on [{a}, {b}] did not converge after {depth} bisections")]
    NonConvergence { a: f64, b: f64, depth: u32 },

    /// A Fourier coefficient came out significantly negative, which means the
    /// sampled function is not the characteristic function of a distribution.
    #[error("line k={k} has negative intensity {value}")]
    NonPhysical { k: i64, value: f64 },

    #[error("characteristic function at theta=0 is {value}, expected 1")]
    NotNormalized { value: f64 },

    /// The computed window holds less mass than required.
    #[error("computed window holds total intensity {total}, below {required}")]
    Truncation { total: f64, required: f64 },

    #[error("spectra computed at different transit times ({a} vs {b})")]
    IncompatibleTau { a: f64, b: f64 },
}

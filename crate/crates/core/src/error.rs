use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad parameters or violated preconditions.
    Input,
    /// Problem size beyond the configured caps.
    Capacity,
    /// Solver failure or an energy too close to the spectrum.
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cube too large: {sites} sites exceeds the cap of {cap}")]
    CubeTooLarge { sites: u128, cap: usize },

    #[error("matrix of dimension {dim} exceeds the dense limit of {limit}")]
    DenseTooLarge { dim: usize, limit: usize },

    #[error("scale too deep: L_{k} does not fit in 63 bits")]
    ScaleTooDeep { k: usize },

    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field region too small for cube projection: no value at site {site:?}")]
    FieldCoverage { site: Vec<i64> },

    #[error("conditional independence unavailable: {law} disorder has no independent sample mean")]
    ConditionalIndependenceUnavailable { law: &'static str },

    #[error("signed disorder not admissible here: {0}")]
    SignedDisorder(String),

    #[error("cube centers too close: symmetrized distance {actual} < required {required}")]
    Separation { actual: u64, required: u64 },

    #[error("eigensolve failed (matrix fingerprint {fingerprint})")]
    EigensolveFailed { fingerprint: String },

    #[error("resonant energy {energy}: distance to spectrum {distance:e} is below the floor {floor:e}")]
    ResonantEnergy { energy: f64, distance: f64, floor: f64 },

    #[error("eta too large: eta = {eta} but dist(E, spectrum) = {distance}")]
    EtaTooLarge { eta: f64, distance: f64 },

    #[error("iterative solve stalled at relative residual {residual:e}")]
    NoConvergence { residual: f64 },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::CubeTooLarge { .. } | Error::DenseTooLarge { .. } | Error::ScaleTooDeep { .. } => {
                ErrorCategory::Capacity
            }
            Error::EigensolveFailed { .. }
            | Error::ResonantEnergy { .. }
            | Error::NoConvergence { .. } => ErrorCategory::Numeric,
            _ => ErrorCategory::Input,
        }
    }
}

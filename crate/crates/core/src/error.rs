use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("time {t} outside the protocol interval [0, {tf}]")]
    OutOfRange { t: f64, tf: f64 },

    /// `R(t)` (or a matrix derived from it) is singular or not positive-definite.
    #[error("design singularity at t = {t}: {reason}")]
    DesignSingularity { t: f64, reason: String },

    /// The solved potential matrix is not real-symmetric to tolerance.
    #[error("design violation at t = {t}: potential matrix residual {residual:e} is not real-symmetric")]
    DesignViolation { t: f64, residual: f64 },

    #[error("integration accuracy: coefficient relation residual {residual:e} exceeds {tolerance:e}")]
    IntegrationAccuracy { residual: f64, tolerance: f64 },

    #[error("no perfect transfer in [{lo}, {hi}]: smallest b = {b_min:e} at lambda = {lambda_at_min}")]
    NoPerfectTransfer {
        lo: f64,
        hi: f64,
        lambda_at_min: f64,
        b_min: f64,
    },

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("propagation quality: {0}")]
    PropagationQuality(String),

    #[error("phase-space mesh misses {tail_mass:e} of the Wigner weight")]
    MeshCoverage { tail_mass: f64 },

    #[error("at lambda = {lambda}: {source}")]
    AtLambda {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_lambda(self, lambda: f64) -> Self {
        match self {
            e @ Error::AtLambda { .. } => e,
            e => Error::AtLambda {
                lambda,
                source: Box::new(e),
            },
        }
    }

    /// Strips any `AtLambda` annotation.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLambda { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_design_failure(&self) -> bool {
        matches!(
            self.root(),
            Error::DesignSingularity { .. } | Error::DesignViolation { .. }
        )
    }
}

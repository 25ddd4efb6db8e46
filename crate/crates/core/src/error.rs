use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coefficient surface: {0}")]
    Surface(String),

    #[error("invalid turbine parameters: {0}")]
    Parameters(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("generator speed {omega} rad/s below validity limit {omega_min} rad/s")]
    Singularity { omega: f64, omega_min: f64 },

    #[error("no equilibrium: required Cp {required:.6} not attainable at tip-speed ratio {lambda:.4} (attainable range [{min:.6}, {max:.6}])")]
    NoEquilibrium {
        required: f64,
        lambda: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid synthesis input: {0}")]
    Synthesis(String),

    #[error("semidefinite program infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure in SDP solver: {0}")]
    NumericalFailure(String),

    #[error("certification failed: {0}")]
    CertificationFailure(String),

    #[error("simulation aborted at t = {time:.3} s (step {step}): {reason}")]
    SimulationAbort {
        time: f64,
        step: usize,
        reason: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}

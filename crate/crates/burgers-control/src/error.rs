//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate seed layout: {0}")]
    DegenerateLayout(String),

    #[error("invalid particle field: {0}")]
    InvalidField(String),

    #[error("invalid kernel spec: {0}")]
    InvalidKernel(String),

    #[error("weight collapse at particle {index}: updated weight {value:e}")]
    WeightCollapse { index: usize, value: f64 },

    #[error("particle crossing between indices {0} and {1}")]
    ParticleCrossing(usize, usize),

    #[error("mass matrix factorization failed ({0}); particles may be near-coincident")]
    SingularMass(String),

    #[error("adaptive quadrature did not converge within depth limit {depth}")]
    QuadratureNonConvergence { depth: usize },

    #[error("solution blew up at step {step}: |y| = {value:e} exceeds cap {cap:e}")]
    BlowUp { step: usize, value: f64, cap: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("cannot fit slope: {0}")]
    DegenerateFit(String),

    #[error("singular system in H1(0,T) Riesz solve")]
    SingularSystem,

    #[error("reference solution contaminated by boundary: max |y| = {value:e} at x = ±L")]
    BoundaryContamination { value: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

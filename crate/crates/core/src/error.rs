use thiserror::Error;

/// Errors raised by the model construction, dynamics and analysis layers.
#[derive(Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range (bound-state count {len})")]
    Index { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("quadrature did not converge: max entry change {max_change:.3e} at ({row}, {col})")]
    Quadrature { max_change: f64, row: usize, col: usize },

    #[error(
        "state not representable in the bound subspace: continuum weight {deficit:.3e} >= threshold {threshold:.3e}"
    )]
    Dissociation { deficit: f64, threshold: f64 },

    #[error("degenerate coupling: |<0|X|1>| = {0:.3e}")]
    DegenerateCoupling(f64),

    #[error("density matrix has eigenvalue {0:.3e} below the positivity tolerance")]
    NegativeEigenvalue(f64),

    #[error("positivity violated at t = {time}: minimum eigenvalue {min_eig:.3e}")]
    Positivity { time: f64, min_eig: f64 },

    #[error("integration unstable at t = {time}: trace error {trace_err:.3e}; reduce dt")]
    Unstable { time: f64, trace_err: f64 },

    #[error("integration aborted; last good sample at t = {last_good_time}: {cause}")]
    Aborted {
        cause: Box<Error>,
        last_good_time: f64,
        last_good: Option<Box<crate::density::DensityMatrix>>,
    },

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

// Debug mirrors Display so an aborted run does not dump the whole state.
impl std::fmt::Debug for Error {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Display::fmt(self, f)
    }
}

pub type Result<T> = std::result::Result<T, Error>;

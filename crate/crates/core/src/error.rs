use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("hermitian eigensolver did not converge on a {0}x{0} matrix")]
    EigenNonConvergence(usize),

    #[error("symbol `{0}` has unbounded q0-support and no declared truncation")]
    UnboundedSupport(String),

    #[error("symbol `{0}` has no beta-derivative evaluator")]
    MissingDerivative(String),

    #[error("{0} is not representable on the grid: {1}")]
    NotRepresentable(String, String),

    #[error("candidate is not hermitian: {0}")]
    NotHermitian(String),

    #[error("distributional candidate `{0}` cannot be routed to the numeric kernel path")]
    Distributional(String),

    #[error("candidate `{0}` is not in the causal cone (margin {1:.3e})")]
    NotInCone(String, f64),

    #[error("representation sign mismatch: {0} vs {1}")]
    SignMismatch(i8, i8),

    #[error("state error: {0}")]
    InvalidState(String),

    #[error("expectation value has imaginary part {imag:.3e} above tolerance {tol:.3e}")]
    ImaginaryExpectation { imag: f64, tol: f64 },

    #[error("support leaves the grid: {0}")]
    SupportEscape(String),

    #[error("time step {dt} violates stability bound {bound}")]
    Cfl { dt: f64, bound: f64 },

    #[error("trajectory error: {0}")]
    Trajectory(String),

    #[error("overflow guard: |s/kappa| = {0} exceeds 700")]
    Overflow(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

use alloc::string::String;

/// Every failure the core can report.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{what} = {value} outside [{lo}, {hi}]")]
    Range {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error(
        "linear solve did not converge: {iterations} iterations, relative residual {residual:e}"
    )]
    Solver { iterations: usize, residual: f64 },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("frequency undefined for the zero state")]
    UndefinedFrequency,
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("fit failure: {0}")]
    Fit(String),
    #[error("conjugate gradients stopped after {iterations} iterations at relative residual {residual:e}")]
    Convergence { iterations: usize, residual: f64 },
    #[error("no passing kappa after {doublings} doublings (last kappa {last_kappa:e}, |Psi(T)|/|Psi0| = {last_ratio:e})")]
    Calibration {
        doublings: usize,
        last_kappa: f64,
        last_ratio: f64,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("{what} did not converge: {detail}")]
    NonConvergent { what: &'static str, detail: String },
    #[error("precision loss in {what}: residual {residual:.3e} (raise the working precision)")]
    PrecisionLoss { what: &'static str, residual: f64 },
    #[error("degenerate skew normalization g_{index} = {g:.3e}")]
    Degenerate { index: usize, g: f64 },
    #[error("x = {x} lies outside the tabulated domain [{lo}, {hi}]")]
    DomainError { x: f64, lo: f64, hi: f64 },
    #[error("singular quaternion cell in {what}")]
    Singular { what: String },
    #[error("index out of range: {0}")]
    IndexError(String),
    #[error("Cauchy transform needs |Im x| >= {min}, got Im x = {im}")]
    OnRealAxis { im: f64, min: f64 },
    #[error("truncation too small: {0}")]
    Truncation(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

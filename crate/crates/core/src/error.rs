use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("missing field `{0}`")]
    Missing(&'static str),
    #[error("field `{field}`: {reason}")]
    Domain { field: &'static str, reason: String },
    #[error("scaling relation `{relation}` violated (residual {residual})")]
    Scaling { relation: &'static str, residual: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("bad radial bounds: need 0 < rho_min < rho_max, got [{0}, {1}]")]
    Bounds(f64, f64),
    #[error("radial grid needs at least 8 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("unsupported dimension n = {0} (only 2 and 3)")]
    Dimension(u32),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite sample at flat index {0}")]
    NonFinite(usize),
    #[error("weight |x|^{alpha} is not integrable near the origin in L^{p} (alpha*p + n - 1 = {exponent} <= -1)")]
    WeightNotIntegrable { alpha: f64, p: f64, exponent: f64 },
    #[error("field format: {0}")]
    Format(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("configuration: {0}")]
    Config(String),
    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the failure is a configuration problem (as opposed to a
    /// numerical one).
    pub fn is_config(&self) -> bool {
        !matches!(self, Error::NonConvergence(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("geometry resolution error at {node}: {reason}")]
    GeometryResolution { node: String, reason: String },
    #[error("patch error at {node}: {reason}")]
    Patch { node: String, reason: String },
    #[error("stencil error: source node {node} is not populated")]
    Stencil { node: String },
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("singular matrix: pivot {pivot:e} at column {column} (scale {scale:e})")]
    Singular { column: usize, pivot: f64, scale: f64 },
    #[error("matrix is not positive definite at column {0}")]
    NotPositiveDefinite(usize),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("rate undefined: {0}")]
    RateUndefined(String),
    #[error("instability at step {step}: max norm {norm:e}")]
    Instability { step: usize, norm: f64 },
    #[error("resonance: Mie coefficient denominator vanishes for order {0}")]
    Resonance(i64),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config serialize error: {0}")]
    Serialize(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

/// Errors produced by the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("disparity {value} at pixel (x={x}, y={y}) is outside [0, {max}]")]
    DisparityRange { x: usize, y: usize, value: f64, max: f64 },

    #[error("column at pixel (x={x}, y={y}) sums to {sum}, expected 1")]
    NotNormalized { x: usize, y: usize, sum: f64 },

    #[error("negative probability {value} at pixel (x={x}, y={y})")]
    NegativeProbability { x: usize, y: usize, value: f64 },

    #[error("timestep {t} outside [{min}, {max}]")]
    Timestep { t: usize, min: usize, max: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("unsupported format {path}: {reason}")]
    Unsupported { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;

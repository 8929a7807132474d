use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: PNG decode failed: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("{path}: multi-channel input ({channels} channels) is not supported")]
    MultiChannel { path: PathBuf, channels: usize },
    #[error("{path}: unsupported bit depth {depth}")]
    UnsupportedBitDepth { path: PathBuf, depth: u8 },
    #[error("{path}: invalid mask value {value} at ({x}, {y})")]
    InvalidMaskValue {
        path: PathBuf,
        value: u16,
        x: usize,
        y: usize,
    },
    #[error("malformed raster text: {0}")]
    RasterText(String),
    #[error("invalid dimensions {width}x{height} for {len} samples")]
    Dimensions { width: usize, height: usize, len: usize },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("program parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid program: {0}")]
    InvalidProgram(String),
    #[error("evaluation failed at node {node}: {source}")]
    Eval {
        node: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("empty class: training set needs at least one object and one background pixel")]
    EmptyClass,
    #[error("no learnable structure: no weak hypothesis beat chance")]
    NoLearnableStructure,
    #[error("model format: {0}")]
    Model(String),
    #[error("empty ground truth: no objects to evaluate against")]
    EmptyGroundTruth,
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("split leakage: {0}")]
    SplitLeakage(String),
    #[error("config: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("non-finite box coordinate in {0:?}")]
    NonFinite([f64; 4]),
    #[error("negative box extent (w={w}, h={h})")]
    NegativeExtent { w: f64, h: f64 },
    #[error("canvas must have positive dimensions, got {w}x{h}")]
    EmptyCanvas { w: u32, h: u32 },
    #[error("unknown element class {0:?}")]
    UnknownClass(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SequenceError {
    #[error("fixed sequence length must be at least 1")]
    ZeroLength,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("raster is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch { want_w: u32, want_h: u32, got_w: u32, got_h: u32 },
    #[error("raster value {value} at {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
    #[error("raster needs {expected} values, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("metric {0} missing from report")]
    MissingMetric(&'static str),
    #[error("report invariant violated: {0}")]
    Invariant(String),
}

/// A problem with one annotation record; ingestion can continue past it.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot decode image {path}: {source}")]
    Image { path: PathBuf, source: image::ImageError },
    #[error("{path}: image is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    Dimensions { path: PathBuf, want_w: u32, want_h: u32, got_w: u32, got_h: u32 },
    #[error(transparent)]
    Record(#[from] RecordError),
    #[error("bad header: {0}")]
    Header(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("infeasible generator spec: {0}")]
    Infeasible(String),
    #[error("{requested} elements requested but the grid has only {cells} cells")]
    Capacity { requested: usize, cells: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

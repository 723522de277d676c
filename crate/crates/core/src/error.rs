use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported PGM variant {magic:?} in {path} (only binary P5 is read)")]
    UnsupportedPgm { path: PathBuf, magic: String },
    #[error("malformed PGM header in {path}: {reason}")]
    MalformedPgm { path: PathBuf, reason: String },
    #[error("PGM maxval {maxval} in {path} is not 255")]
    UnsupportedMaxval { path: PathBuf, maxval: u32 },
    #[error("truncated PGM payload in {path}: expected {expected} bytes, found {found}")]
    TruncatedPgm {
        path: PathBuf,
        expected: usize,
        found: usize,
    },
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("contour needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("seed ({x}, {y}) lies outside the {width}x{height} frame")]
    SeedOutOfBounds {
        x: i64,
        y: i64,
        width: usize,
        height: usize,
    },
    #[error("region grew to {pixels} pixels, above the leak limit of {limit}; the seed escaped the lumen")]
    Leak { pixels: usize, limit: usize },
    #[error("mask is empty")]
    EmptyMask,
    #[error("mask touches the frame border; pad the frame before tracing")]
    MaskTouchesBorder,
    #[error("degenerate contour: {0}")]
    DegenerateContour(String),
    #[error("point ({x}, {y}) lies outside the sampling grid")]
    PointOutOfBounds { x: f64, y: f64 },
    #[error("contour interior contains no pixels")]
    EmptyInterior,
    #[error("linear system is singular (pivot {pivot:e} at row {row})")]
    Singular { row: usize, pivot: f64 },
    #[error("both masks are empty; overlap is undefined")]
    BothMasksEmpty,
    #[error("frame index {index} out of range 0..{len}")]
    FrameIndexOutOfRange { index: usize, len: usize },
    #[error("ellipse exceeds the frame bounds: {0}")]
    EllipseOutOfBounds(String),
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("no usable seed for frame {0}")]
    NoUsableSeed(usize),
    #[error("malformed CSV {path} line {line}: {reason}")]
    MalformedCsv {
        path: PathBuf,
        line: usize,
        reason: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

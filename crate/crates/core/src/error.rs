use std::path::PathBuf;

use thiserror::Error;

use crate::roi::Region;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value outside domain: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("landmark file {path}: {reason}")]
    LandmarkParse { path: PathBuf, reason: String },

    #[error("{region} extraction failed: {reason}")]
    RegionExtraction { region: Region, reason: String },

    #[error("no image corner is clear of the face; background crop unavailable")]
    BackgroundUnavailable,

    #[error("insufficient pixels: {count} valid, {needed} required")]
    InsufficientPixels { count: usize, needed: usize },

    #[error("metric unavailable: {region} failed: {source}")]
    MetricUnavailable {
        region: Region,
        #[source]
        source: Box<Error>,
    },

    #[error("skin segmentation failed: {0}")]
    SegmentationFailed(String),

    #[error("insufficient skin pixels after outlier removal: {count} < {needed}")]
    InsufficientSkin { count: usize, needed: usize },

    #[error("background too dark for normalization (channel mean {mean:.4} < {floor})")]
    BackgroundTooDark { mean: f64, floor: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("insufficient data: {got} items, at least {needed} required")]
    InsufficientData { got: usize, needed: usize },

    #[error("NMF initialization failed: {0}")]
    InitFailed(String),

    #[error("numerical failure at iteration {iteration}")]
    NumericalFailure { iteration: usize },

    #[error("degenerate metric: {0}")]
    DegenerateMetric(String),

    #[error("no subject has two or more images")]
    NoRepeatedSubjects,

    #[error("label histograms need at least two distinct labels, found {0}")]
    NotEnoughLabels(usize),

    #[error("{fraction:.3} of pixels clipped (limit {limit})")]
    Clipping { fraction: f64, limit: f64 },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

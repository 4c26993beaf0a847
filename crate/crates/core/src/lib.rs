//! Per-image skin-tone metrics and the machinery around them.
//!
//! * [`ita`]: Individual Typology Angle from CIE-Lab.
//! * [`rsr`]: Relative Skin Reflectance, a pooled PCA axis in RGB.
//! * [`sreds`]: dichromatic separation of skin patches by rank-2 [`nmf`]
//!   followed by [`kpca`] over the diffuse bases.
//!
//! [`synth`] renders ground-truth data from the dichromatic reflection
//! model, and [`eval`] implements the intra-subject variability protocol.

pub mod color;
pub mod config;
pub mod error;
pub mod eval;
pub mod image;
pub mod ita;
pub mod kpca;
pub mod nmf;
pub mod record;
pub mod roi;
pub mod rsr;
pub mod skinseg;
pub mod sreds;
pub mod synth;
pub mod vec3;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use record::{Metric, MetricRecord};

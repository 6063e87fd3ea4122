//! Foveation-aware quality assessment for omnidirectional images.
//!
//! The pipeline runs from HMD viewing geometry and retina-zone maps,
//! through viewport extraction and non-uniform-quality stimulus synthesis,
//! to full-reference metrics, the zone-weighted score and logistic MOS
//! evaluation.

pub mod error;
pub mod eval;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod projection;
pub mod raster;
pub mod stimulus;
pub mod synthetic;
pub mod zwf;

pub use error::{Error, Result};

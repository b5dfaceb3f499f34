//! Texture-based 2D object classification.
//!
//! The pipeline resizes and grayscales an image, extracts gray-level
//! co-occurrence (GLCM) statistics and local binary pattern (LBP)
//! histograms, and classifies the resulting vectors with k-nearest
//! neighbors, a random forest, or a soft-voting ensemble of the two.
//!
//! ```text
//! image -> imaging::resize -> ┬─ imaging::quantize -> glcm block ─┐
//!                             └─ lbp histogram ───────────────────┴─> features -> classify -> eval
//! ```

pub mod classify;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod features;
pub mod glcm;
pub mod imaging;
pub mod lbp;
pub mod seed;

pub use classify::{ClassScores, EnsembleModel, KnnModel, Model, RfConfig, RfModel};
pub use features::{FeatureVariant, FeatureVector, Standardizer};
pub use glcm::{Aggregation, GlcmAngle, GlcmFeatures, GlcmMatrix, GlcmOffset};
pub use imaging::{GrayImage, QuantizedImage, RgbImage};
pub use lbp::{LbpHistogram, LbpMode};

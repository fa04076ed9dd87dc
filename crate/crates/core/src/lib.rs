//! Appearance-based activity recognition core.
//!
//! The pipeline runs in four stages, each in its own module:
//!
//! 1. [`segmentation`]: temporal-median background model, foreground silhouette,
//!    bounding extremes and the centroid-anchored 140×130 crop.
//! 2. [`image`]: grayscale conversion, histogram equalization and per-image
//!    standardization into an [`ImageVector`](image::ImageVector).
//! 3. [`subspace`]: total scatter matrix, symmetric eigendecomposition and
//!    projection onto the `d` leading eigenvectors.
//! 4. [`sequence`]: dynamic time warping between feature sequences and
//!    first-nearest-neighbor classification, with [`evaluation`] on top.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, dataset
//! ingestion and the command-line tool live in the `actrec` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

mod error;
pub mod evaluation;
pub mod image;
pub mod linalg;
pub mod segmentation;
pub mod sequence;
pub mod subspace;

pub use error::{Error, Result};
pub use evaluation::{ConfusionMatrix, EvaluationReport, Protocol};
pub use image::{ColorImage, GrayImage, Image, ImageVector, Rgb};
pub use segmentation::{BackgroundModel, BoundingExtremes, Centroid, SegmentationParams, SilhouetteMap};
pub use sequence::{FeatureSequence, MatchResult};
pub use subspace::{EigenSystem, ScatterMatrix, SubspaceModel, TrainingClip, TrainingSet};

/// Crop height in pixels.
pub const CROP_HEIGHT: usize = 140;
/// Crop width in pixels.
pub const CROP_WIDTH: usize = 130;
/// Length of a normalized image vector, `CROP_HEIGHT * CROP_WIDTH`.
pub const VECTOR_LEN: usize = CROP_HEIGHT * CROP_WIDTH;

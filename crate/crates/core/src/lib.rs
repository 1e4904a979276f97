//! Unsupervised game-theoretic salient object detection.
//!
//! Superpixels are players in a two-strategy polymatrix game whose payoffs
//! combine a center prior, an objectness prior and affinity-based support.
//! Replicator dynamics find a mixed equilibrium in a color space and in a
//! deep feature space; an iterative random walk that fuses the two spaces'
//! graphs refines both results before they are combined and averaged over
//! several superpixel scales.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, parallel drivers
//! and the command-line tool live in the `salgame` crate.

#![no_std]

extern crate alloc;

pub mod color;
pub mod error;
pub mod eval;
pub mod features;
pub mod game;
pub mod image;
pub mod linalg;
pub mod pipeline;
pub mod randomwalk;
pub mod segmentation;

pub use error::{Error, Result};
pub use features::{AffinityMatrix, FeatureKind, FeatureSpace, FeatureTensor};
pub use game::{Equilibrium, GameInstance, InitKind, MixedProfile, PayoffParams, Priors};
pub use image::{BinaryMask, RgbImage, SaliencyMap};
pub use pipeline::{PipelineConfig, Stage};
pub use randomwalk::{StochasticMatrix, WalkMatrices, WalkState};
pub use segmentation::Segmentation;

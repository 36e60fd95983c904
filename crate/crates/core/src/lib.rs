//! Learned per-embedding iconicity scores.
//!
//! A small fully connected network `r(f) ∈ (0, 1)` is trained in a Siamese
//! arrangement on identity-labelled embedding pairs with the hinge
//! `max(0, y (Δ - r(f1) r(f2) cos α))`. Records that rarely match their
//! own identity end up with low scores. The scores then weight template
//! members for verification and can be correlated with image covariates.
//!
//! The crate is `no_std` and needs only `alloc`; file formats and the
//! command-line tool live in the `iconicity` crate.

#![no_std]

extern crate alloc;

pub mod embeddings;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod loss;
pub mod mlp;
pub mod pairs;
pub mod pooling;
pub mod protocol;
pub mod rng;
pub mod synth;
pub mod train;

pub use embeddings::{
    cosine_similarity, feature_norm_score, l2_normalize, Dataset, EmbeddingRecord,
};
pub use error::{Error, Result};
pub use mlp::{MlpConfig, MlpParams};
pub use pairs::{EpochPlan, Label, Pair};
pub use pooling::{PoolMethod, PooledFeature, Template};
pub use synth::{DegradationMode, SynthConfig};
pub use train::{TrainConfig, TrainOutcome};

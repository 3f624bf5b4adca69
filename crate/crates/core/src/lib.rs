//! Posterior re-scoring of classifier logits.
//!
//! A trained classifier's raw logits are usually squashed through softmax,
//! which looks only at the logit vector in front of it. This crate instead
//! scores each class by how the vector's own logit ranks within that
//! class's training-time logit distribution: per-class likelihoods are
//! CDFs of Gaussian kernel density estimates, optional priors are CDFs of
//! normalized histograms, and the resulting terms are smoothed and
//! normalized into a score vector ([`inference`]). A seeded genetic search
//! tunes the bandwidths, histogram resolutions, and smoothing floor
//! against a validation split by minimizing `(1 - F1) + FPR` ([`tuner`]).
//!
//! Supporting pieces: evaluation metrics ([`metrics`]), file formats for
//! logit tables, fitted models, and search histories ([`dataio`]), and
//! LiDAR tooling that crops a point cloud to a camera-space box, separates
//! the foreground cluster, and resamples it to a fixed size
//! ([`pointcloud`]).
//!
//! Everything numeric is generic over the scalar type through [`Real`];
//! the `*64`/`*32` aliases below pick a precision. All randomized steps
//! take explicit seeds and run deterministically.

pub mod dataio;
pub mod density;
pub mod error;
pub mod inference;
pub mod metrics;
pub mod pointcloud;
pub mod scalar;
pub mod tuner;

pub use dataio::{
    load_model, read_logits, save_model, write_logits, write_scores, LogitTable, ModelArtifact,
    Provenance, ScoreRow, MODEL_FORMAT_VERSION,
};
pub use density::{KdeModel, NhModel};
pub use error::{Error, Result};
pub use inference::{argmax_class, softmax, BayesScorer, FitCondition, LogitSample, Mode, Rule};
pub use metrics::{confusion_matrix, evaluate, EvalReport};
pub use pointcloud::{BBox2D, CalibrationSet, Point, PointCloud};
pub use scalar::Real;
pub use tuner::{fitness, tune, tune_with, GaConfig, HyperParams, SearchBounds, TuneResult};

/// Double-precision aliases, the default choice.
pub type KdeModel64 = KdeModel<f64>;
pub type NhModel64 = NhModel<f64>;
pub type BayesScorer64 = BayesScorer<f64>;
pub type LogitSample64 = LogitSample<f64>;
pub type EvalReport64 = EvalReport<f64>;
pub type HyperParams64 = HyperParams<f64>;
pub type PointCloud64 = PointCloud<f64>;

/// Single-precision aliases for memory-bound workloads.
pub type KdeModel32 = KdeModel<f32>;
pub type NhModel32 = NhModel<f32>;
pub type BayesScorer32 = BayesScorer<f32>;
pub type LogitSample32 = LogitSample<f32>;
pub type EvalReport32 = EvalReport<f32>;
pub type HyperParams32 = HyperParams<f32>;
pub type PointCloud32 = PointCloud<f32>;

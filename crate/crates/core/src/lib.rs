//! Semiparametric out-of-distribution detection.
//!
//! A [`ComboodDetector`] fits two models on in-distribution features:
//!
//! * a regularized Mahalanobis model on Yeo-Johnson-standardized per-layer
//!   activation extrema, giving the parametric confidence `mc`;
//! * an exact k-th nearest-neighbor model on L2-normalized penultimate
//!   embeddings, giving the nonparametric confidence `kc`.
//!
//! The detection score is `kc + mc`; higher means more in-distribution.
//! [`metrics`] evaluates scores (AUROC, AUPR, FPR@TPR, McNemar), [`bench`]
//! times inference, and [`synth`] generates seeded Gaussian scenarios.

pub mod bench;
pub mod cli;
pub mod dataio;
pub mod detector;
pub mod error;
pub mod knn;
pub mod mahalanobis;
pub mod matrix;
pub mod metrics;
pub mod synth;
pub mod transform;

pub use detector::{ComboodDetector, Decision, DetectorConfig, ScoreTriple};
pub use error::{Error, Result};
pub use knn::KnnModel;
pub use mahalanobis::MahalanobisModel;
pub use matrix::FeatureMatrix;
pub use transform::FittedTransform;

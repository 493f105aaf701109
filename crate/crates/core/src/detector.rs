//! The fused detector: Yeo-Johnson + regularized Mahalanobis on extrema
//! features, k-NN on normalized embeddings, and the summed confidence score.
//!
//! Higher scores mean "more in-distribution". A sample is declared ID when its
//! score is at or above the calibrated threshold.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::{self, KnnModel, DEFAULT_K, KD_EPS};
use crate::mahalanobis::{MahalanobisModel, DEFAULT_REG_C};
use crate::matrix::FeatureMatrix;
use crate::transform::FittedTransform;

/// Minimum number of ID validation scores accepted by calibration.
pub const MIN_CALIBRATION_SCORES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub reg_c: f64,
    pub k: usize,
    pub target_tpr: f64,
    pub clamp_eps: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            reg_c: DEFAULT_REG_C,
            k: DEFAULT_K,
            target_tpr: 0.95,
            clamp_eps: KD_EPS,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.reg_c.is_finite() && self.reg_c >= 0.0) {
            return Err(Error::InvalidConfig(format!("reg_c must be >= 0, got {}", self.reg_c)));
        }
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be >= 1".into()));
        }
        if !(self.target_tpr > 0.0 && self.target_tpr < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "target_tpr must lie in (0, 1), got {}",
                self.target_tpr
            )));
        }
        if !(self.clamp_eps.is_finite() && self.clamp_eps > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "clamp_eps must be > 0, got {}",
                self.clamp_eps
            )));
        }
        Ok(())
    }
}

/// Component confidences and their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreTriple {
    pub kc: f64,
    pub mc: f64,
    pub score: f64,
}

impl ScoreTriple {
    pub fn new(kc: f64, mc: f64) -> Self {
        Self { kc, mc, score: kc + mc }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    InDistribution,
    OutOfDistribution,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::InDistribution => "ID",
            Decision::OutOfDistribution => "OOD",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComboodDetector {
    config: DetectorConfig,
    transform: FittedTransform,
    maha: MahalanobisModel,
    knn: KnnModel,
    threshold: Option<f64>,
}

impl ComboodDetector {
    /// Fits both components on ID training data. The two matrices need not
    /// have matching row counts.
    pub fn fit(
        extrema_train: &FeatureMatrix,
        embed_train: &FeatureMatrix,
        config: DetectorConfig,
    ) -> Result<Self> {
        config.validate()?;
        let transform = FittedTransform::fit(extrema_train)?;
        let standardized = transform.apply(extrema_train)?;
        let maha = MahalanobisModel::fit(&standardized, config.reg_c)?;
        let knn = KnnModel::build(knn::normalize_rows(embed_train)?, config.k)?;
        Ok(Self {
            config,
            transform,
            maha,
            knn,
            threshold: None,
        })
    }

    /// Assembles a detector from previously fitted parts, checking that their
    /// dimensions agree.
    pub fn from_parts(
        config: DetectorConfig,
        transform: FittedTransform,
        maha: MahalanobisModel,
        knn: KnnModel,
        threshold: Option<f64>,
    ) -> Result<Self> {
        config.validate()?;
        if maha.dim() != transform.n_features() {
            return Err(Error::dims(
                "Mahalanobis dimension vs transform width",
                transform.n_features(),
                maha.dim(),
            ));
        }
        if knn.k() != config.k {
            return Err(Error::dims("k-NN k vs config k", config.k, knn.k()));
        }
        if maha.reg_c() != config.reg_c {
            return Err(Error::InvalidConfig(format!(
                "Mahalanobis C {} disagrees with config C {}",
                maha.reg_c(),
                config.reg_c
            )));
        }
        if threshold.is_some_and(|t| !t.is_finite()) {
            return Err(Error::InvalidConfig("threshold must be finite".into()));
        }
        Ok(Self {
            config,
            transform,
            maha,
            knn,
            threshold,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn transform(&self) -> &FittedTransform {
        &self.transform
    }

    pub fn mahalanobis(&self) -> &MahalanobisModel {
        &self.maha
    }

    pub fn knn(&self) -> &KnnModel {
        &self.knn
    }

    pub fn extrema_dim(&self) -> usize {
        self.maha.dim()
    }

    /// Embedding dimensionality `n` used in the k-NN confidence.
    pub fn n_embed(&self) -> usize {
        self.knn.dim()
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    /// Regularized Mahalanobis distance of a raw extrema vector.
    pub fn mahalanobis_distance(&self, extrema_x: &[f64]) -> Result<f64> {
        self.maha.distance(&self.transform.apply_row(extrema_x)?)
    }

    /// Parametric confidence `mc` of a raw extrema vector.
    pub fn parametric_confidence(&self, extrema_x: &[f64]) -> Result<f64> {
        Ok(self.maha.confidence(self.mahalanobis_distance(extrema_x)?))
    }

    /// k-th neighbor distance of a raw (unnormalized) embedding.
    pub fn kth_distance(&self, embed_x: &[f64]) -> Result<f64> {
        if embed_x.len() != self.n_embed() {
            return Err(Error::dims("embedding width", self.n_embed(), embed_x.len()));
        }
        let z = knn::normalize(embed_x).ok_or(Error::ZeroNorm {
            row: 0,
            norm: embed_x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        })?;
        self.knn.kth_distance(&z)
    }

    /// Nonparametric confidence `kc` of a raw embedding.
    pub fn nonparametric_confidence(&self, embed_x: &[f64]) -> Result<f64> {
        let kd = self.kth_distance(embed_x)?;
        Ok(knn::kc_score(kd, self.n_embed(), self.config.clamp_eps))
    }

    pub fn score(&self, extrema_x: &[f64], embed_x: &[f64]) -> Result<ScoreTriple> {
        let mc = self.parametric_confidence(extrema_x)?;
        let kc = self.nonparametric_confidence(embed_x)?;
        Ok(ScoreTriple::new(kc, mc))
    }

    /// Same as [`score`](Self::score), with the two components evaluated on
    /// separate rayon tasks.
    pub fn score_parallel(&self, extrema_x: &[f64], embed_x: &[f64]) -> Result<ScoreTriple> {
        let (mc, kc) = rayon::join(
            || self.parametric_confidence(extrema_x),
            || self.nonparametric_confidence(embed_x),
        );
        Ok(ScoreTriple::new(kc?, mc?))
    }

    /// Scores paired rows in parallel across samples on the current rayon pool.
    /// Output order matches input order.
    pub fn score_batch(
        &self,
        extrema: &FeatureMatrix,
        embed: &FeatureMatrix,
    ) -> Result<Vec<ScoreTriple>> {
        if extrema.rows() != embed.rows() {
            return Err(Error::dims(
                "paired test rows (extrema vs embeddings)",
                extrema.rows(),
                embed.rows(),
            ));
        }
        (0..extrema.rows())
            .into_par_iter()
            .map(|i| self.score(extrema.row(i), embed.row(i)))
            .collect()
    }

    /// Sets the threshold so that a `target_tpr` fraction of the given ID
    /// validation scores are at or above it.
    pub fn calibrate(&mut self, id_validation_scores: &[f64]) -> Result<f64> {
        let t = calibration_threshold(id_validation_scores, self.config.target_tpr)?;
        self.threshold = Some(t);
        Ok(t)
    }

    pub fn set_threshold(&mut self, threshold: Option<f64>) {
        self.threshold = threshold;
    }

    pub fn decide(&self, s: &ScoreTriple) -> Result<Decision> {
        let t = self.threshold.ok_or(Error::Uncalibrated)?;
        Ok(if s.score >= t {
            Decision::InDistribution
        } else {
            Decision::OutOfDistribution
        })
    }
}

/// Number of top-ranked scores that must be kept to reach `tpr` of `n`.
pub(crate) fn required_count(n: usize, tpr: f64) -> usize {
    // the slack absorbs products like 0.95 * 100 = 95.00000000000001
    ((tpr * n as f64 - 1e-9).ceil() as usize).clamp(1, n)
}

/// Order-statistic threshold: the `ceil(tpr · n)`-th largest score. No
/// interpolation.
pub fn calibration_threshold(scores: &[f64], tpr: f64) -> Result<f64> {
    if scores.len() < MIN_CALIBRATION_SCORES {
        return Err(Error::TooFewRows {
            context: "threshold calibration".into(),
            needed: MIN_CALIBRATION_SCORES,
            got: scores.len(),
        });
    }
    if !(tpr > 0.0 && tpr < 1.0) {
        return Err(Error::InvalidConfig(format!("target_tpr must lie in (0, 1), got {tpr}")));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::InvalidConfig(format!("non-finite validation score {bad}")));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted[required_count(sorted.len(), tpr) - 1])
}

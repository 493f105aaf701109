//! Exact k-th nearest-neighbor distance over L2-normalized embeddings.

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

pub const DEFAULT_K: usize = 50;
/// Floor applied to `kd` before taking its logarithm.
pub const KD_EPS: f64 = 1e-12;

const ZERO_NORM: f64 = 1e-12;
const NORM_TOL: f64 = 1e-6;

/// Divides `v` by its L2 norm.
pub fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let norm = l2_norm(v);
    (norm >= ZERO_NORM).then(|| v.iter().map(|x| x / norm).collect())
}

/// Normalizes every row to unit L2 norm.
pub fn normalize_rows(x: &FeatureMatrix) -> Result<FeatureMatrix> {
    let mut values = Vec::with_capacity(x.rows() * x.cols());
    for (row, r) in x.iter_rows().enumerate() {
        match normalize(r) {
            Some(n) => values.extend(n),
            None => return Err(Error::ZeroNorm { row, norm: l2_norm(r) }),
        }
    }
    let out = FeatureMatrix::new(x.rows(), x.cols(), values)?;
    match x.ids() {
        Some(ids) => out.with_ids(ids.to_vec()),
        None => Ok(out),
    }
}

/// Nonparametric confidence `-sqrt(n) · ln(max(kd, ε))`.
pub fn kc_score(kd: f64, n: usize, eps: f64) -> f64 {
    -(n as f64).sqrt() * kd.max(eps).ln()
}

/// Normalized training embeddings plus the neighbor rank `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    train: FeatureMatrix,
    k: usize,
}

impl KnnModel {
    /// Builds the model from already-normalized rows.
    pub fn build(train: FeatureMatrix, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if k > train.rows() {
            return Err(Error::TooFewRows {
                context: format!("k-NN with k = {k}"),
                needed: k,
                got: train.rows(),
            });
        }
        for (row, r) in train.iter_rows().enumerate() {
            let norm = l2_norm(r);
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::NotNormalized { row, norm });
            }
        }
        Ok(Self { train, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.train.cols()
    }

    pub fn train(&self) -> &FeatureMatrix {
        &self.train
    }

    /// Euclidean distance from a unit-norm query to its k-th closest training
    /// row (1-indexed, duplicates counted separately).
    pub fn kth_distance(&self, z: &[f64]) -> Result<f64> {
        self.kth_distance_with_k(z, self.k)
    }

    pub fn kth_distance_with_k(&self, z: &[f64], k: usize) -> Result<f64> {
        if z.len() != self.dim() {
            return Err(Error::dims("k-NN query width", self.dim(), z.len()));
        }
        if k == 0 || k > self.train.rows() {
            return Err(Error::InvalidConfig(format!(
                "k = {k} outside 1..={}",
                self.train.rows()
            )));
        }
        let norm = l2_norm(z);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { row: 0, norm });
        }
        let mut d2: Vec<f64> = self
            .train
            .iter_rows()
            .map(|r| r.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum())
            .collect();
        let (_, kth, _) = d2.select_nth_unstable_by(k - 1, f64::total_cmp);
        Ok(kth.sqrt())
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

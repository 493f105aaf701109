//! Regularized Mahalanobis model: a single unsupervised Gaussian fit with a
//! constant added to the covariance diagonal.
//!
//! The regularized covariance `M' = M + C·I` is held only as its Cholesky
//! factor; distances are computed by forward substitution.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

pub const DEFAULT_REG_C: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MahalanobisModel {
    mu: Vec<f64>,
    reg_c: f64,
    /// Lower-triangular factor of `M'`, row-major `dim x dim`, upper part zero.
    chol: Vec<f64>,
    logdet: f64,
    dim: usize,
}

impl MahalanobisModel {
    /// Fits mean and sample covariance (divisor `rows - 1`) and factors `M + C·I`.
    pub fn fit(x: &FeatureMatrix, reg_c: f64) -> Result<Self> {
        check_reg_c(reg_c)?;
        if x.rows() < 2 {
            return Err(Error::TooFewRows {
                context: "Mahalanobis fit".into(),
                needed: 2,
                got: x.rows(),
            });
        }
        let cov = regularized_covariance(x, reg_c);
        let dim = x.cols();
        let mu = column_means(x);
        let chol = cholesky(&cov, dim).map_err(|(pivot, value)| Error::NotPositiveDefinite {
            pivot,
            value,
            reg_c,
        })?;
        let logdet = logdet_from_factor(&chol, dim);
        Ok(Self {
            mu,
            reg_c,
            chol,
            logdet,
            dim,
        })
    }

    /// Rebuilds a model from stored parts, re-checking every invariant.
    pub fn from_parts(mu: Vec<f64>, reg_c: f64, chol: Vec<f64>, logdet: f64) -> Result<Self> {
        check_reg_c(reg_c)?;
        let dim = mu.len();
        if dim == 0 {
            return Err(Error::Empty("Mahalanobis mean has no entries".into()));
        }
        if chol.len() != dim * dim {
            return Err(Error::dims("Cholesky factor size", dim * dim, chol.len()));
        }
        if mu.iter().chain(&chol).any(|v| !v.is_finite()) {
            return Err(Error::CorruptArchive("non-finite Mahalanobis parameter".into()));
        }
        for i in 0..dim {
            if chol[i * dim + i] <= 0.0 {
                return Err(Error::CorruptArchive(format!(
                    "Cholesky diagonal entry {i} is not positive"
                )));
            }
            if chol[i * dim + i + 1..(i + 1) * dim].iter().any(|&v| v != 0.0) {
                return Err(Error::CorruptArchive(format!(
                    "Cholesky factor row {i} has entries above the diagonal"
                )));
            }
        }
        let expected = logdet_from_factor(&chol, dim);
        if (expected - logdet).abs() > 1e-12 * expected.abs().max(1.0) {
            return Err(Error::CorruptArchive(format!(
                "stored log-determinant {logdet} disagrees with factor ({expected})"
            )));
        }
        Ok(Self {
            mu,
            reg_c,
            chol,
            logdet,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mean(&self) -> &[f64] {
        &self.mu
    }

    pub fn reg_c(&self) -> f64 {
        self.reg_c
    }

    pub fn cholesky_factor(&self) -> &[f64] {
        &self.chol
    }

    /// `ln det M'`.
    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    /// Regularized Mahalanobis distance `sqrt((x-μ)ᵀ M'⁻¹ (x-μ))`.
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::dims("Mahalanobis input width", self.dim, x.len()));
        }
        let n = self.dim;
        let mut z = vec![0.0; n];
        // L z = x - μ
        for i in 0..n {
            let row = &self.chol[i * n..i * n + i];
            let acc: f64 = row.iter().zip(&z).map(|(l, zj)| l * zj).sum();
            z[i] = (x[i] - self.mu[i] - acc) / self.chol[i * n + i];
        }
        Ok(z.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Gaussian log-density confidence for a distance: `-md²/2 - ½ ln det(2π M')`.
    pub fn confidence(&self, md: f64) -> f64 {
        mc_score(md, self.dim, self.logdet)
    }
}

/// Parametric confidence score, evaluated entirely in the log domain.
pub fn mc_score(md: f64, dim: usize, logdet: f64) -> f64 {
    -0.5 * md * md - 0.5 * (dim as f64 * (2.0 * PI).ln() + logdet)
}

fn check_reg_c(reg_c: f64) -> Result<()> {
    if !(reg_c >= 0.0 && reg_c.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "regularization constant must be finite and >= 0, got {reg_c}"
        )));
    }
    Ok(())
}

fn column_means(x: &FeatureMatrix) -> Vec<f64> {
    let mut mu = vec![0.0; x.cols()];
    for r in x.iter_rows() {
        for (m, v) in mu.iter_mut().zip(r) {
            *m += v;
        }
    }
    let n = x.rows() as f64;
    mu.iter_mut().for_each(|m| *m /= n);
    mu
}

/// Sample covariance plus `reg_c` on the diagonal, row-major.
pub(crate) fn regularized_covariance(x: &FeatureMatrix, reg_c: f64) -> Vec<f64> {
    let d = x.cols();
    let mu = column_means(x);
    let mut cov = vec![0.0; d * d];
    let mut centered = vec![0.0; d];
    for r in x.iter_rows() {
        for (c, (v, m)) in centered.iter_mut().zip(r.iter().zip(&mu)) {
            *c = v - m;
        }
        for i in 0..d {
            for j in 0..=i {
                cov[i * d + j] += centered[i] * centered[j];
            }
        }
    }
    let denom = (x.rows() - 1) as f64;
    for i in 0..d {
        for j in 0..=i {
            let v = cov[i * d + j] / denom;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
        cov[i * d + i] += reg_c;
    }
    cov
}

/// Cholesky–Banachiewicz factorization. On failure returns the failing pivot
/// index and its (non-positive) value.
fn cholesky(a: &[f64], n: usize) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let dot: f64 = (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum();
            if i == j {
                let pivot = a[i * n + i] - dot;
                // relative floor catches rank deficiency lost in rounding
                let scale = a[i * n + i].abs().max(f64::MIN_POSITIVE);
                if !(pivot > scale * 1e-14) {
                    return Err((i, pivot));
                }
                l[i * n + i] = pivot.sqrt();
            } else {
                l[i * n + j] = (a[i * n + j] - dot) / l[j * n + j];
            }
        }
    }
    Ok(l)
}

fn logdet_from_factor(l: &[f64], n: usize) -> f64 {
    2.0 * (0..n).map(|i| l[i * n + i].ln()).sum::<f64>()
}

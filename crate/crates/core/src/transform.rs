//! Yeo-Johnson power transform with per-feature standardization.
//!
//! Each column gets its own λ, chosen by maximizing the Yeo-Johnson profile
//! log-likelihood, after which the transformed column is shifted and scaled to
//! zero mean and unit (population) standard deviation.

use log::warn;

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

/// Lower clamp for a column's standard deviation.
pub const STD_EPS: f64 = 1e-12;

pub const LAMBDA_MIN: f64 = -5.0;
pub const LAMBDA_MAX: f64 = 5.0;
const LAMBDA_TOL: f64 = 1e-6;
const GRID_POINTS: usize = 21;

/// Yeo-Johnson transform of a single value.
///
/// The λ = 0 and λ = 2 branches are the analytic limits of the power branches;
/// `exp_m1`/`ln_1p` keep the power branches accurate near those seams.
pub fn yeo_johnson(x: f64, lambda: f64) -> f64 {
    if lambda == 1.0 {
        return x;
    }
    if x >= 0.0 {
        let l = x.ln_1p();
        if lambda == 0.0 {
            l
        } else {
            (lambda * l).exp_m1() / lambda
        }
    } else {
        let l = (-x).ln_1p();
        let p = 2.0 - lambda;
        if lambda == 2.0 {
            -l
        } else {
            -(p * l).exp_m1() / p
        }
    }
}

/// Inverse of [`yeo_johnson`]. Returns `None` when `y` lies outside the
/// transform's range for this λ (possible for λ < 0 or λ > 2).
pub fn yeo_johnson_inverse(y: f64, lambda: f64) -> Option<f64> {
    if lambda == 1.0 {
        return Some(y);
    }
    let x = if y >= 0.0 {
        if lambda == 0.0 {
            y.exp_m1()
        } else {
            let base = lambda * y;
            if base <= -1.0 {
                return None;
            }
            (base.ln_1p() / lambda).exp_m1()
        }
    } else {
        let p = 2.0 - lambda;
        if lambda == 2.0 {
            -(-y).exp_m1()
        } else {
            let base = -p * y;
            if base <= -1.0 {
                return None;
            }
            -(base.ln_1p() / p).exp_m1()
        }
    };
    x.is_finite().then_some(x)
}

/// Profile log-likelihood of λ for one column (up to an additive constant):
///
/// `ll(λ) = -n/2 · ln σ²(λ) + (λ - 1) · Σ sign(x_i) · ln(|x_i| + 1)`
///
/// where σ²(λ) is the population variance of the transformed column. The
/// second term is the log-Jacobian of the transform.
pub fn profile_log_likelihood(column: &[f64], lambda: f64) -> f64 {
    let n = column.len() as f64;
    let transformed: Vec<f64> = column.iter().map(|&x| yeo_johnson(x, lambda)).collect();
    let (_, var) = mean_var(&transformed);
    let jacobian: f64 = column.iter().map(|&x| x.signum() * x.abs().ln_1p()).sum();
    -0.5 * n * var.ln() + (lambda - 1.0) * jacobian
}

/// Learned per-feature transform state.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedTransform {
    lambdas: Vec<f64>,
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl FittedTransform {
    /// Assembles a transform from explicit parameters.
    pub fn from_parts(lambdas: Vec<f64>, means: Vec<f64>, stds: Vec<f64>) -> Result<Self> {
        let n = lambdas.len();
        if n == 0 {
            return Err(Error::Empty("transform has no features".into()));
        }
        if means.len() != n {
            return Err(Error::dims("transform means", n, means.len()));
        }
        if stds.len() != n {
            return Err(Error::dims("transform stds", n, stds.len()));
        }
        let all = lambdas.iter().chain(&means).chain(&stds);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("transform parameters must be finite".into()));
        }
        if stds.iter().any(|&s| s <= 0.0) {
            return Err(Error::InvalidConfig("transform stds must be positive".into()));
        }
        Ok(Self {
            lambdas,
            means,
            stds,
        })
    }

    /// Fits one λ and standardization pair per column.
    ///
    /// Constant columns get λ = 1, mean = the constant and std = [`STD_EPS`],
    /// so they map to zero.
    pub fn fit(x: &FeatureMatrix) -> Result<Self> {
        if x.rows() < 2 {
            return Err(Error::TooFewRows {
                context: "power transform fit".into(),
                needed: 2,
                got: x.rows(),
            });
        }
        let mut lambdas = Vec::with_capacity(x.cols());
        let mut means = Vec::with_capacity(x.cols());
        let mut stds = Vec::with_capacity(x.cols());
        for j in 0..x.cols() {
            let column = x.column(j);
            if column.iter().all(|&v| v == column[0]) {
                warn!("feature {j} is constant ({}); std clamped to {STD_EPS:e}", column[0]);
                lambdas.push(1.0);
                means.push(column[0]);
                stds.push(STD_EPS);
                continue;
            }
            let lambda = fit_lambda(&column);
            let transformed: Vec<f64> = column.iter().map(|&v| yeo_johnson(v, lambda)).collect();
            let (mean, var) = mean_var(&transformed);
            lambdas.push(lambda);
            means.push(mean);
            stds.push(var.sqrt().max(STD_EPS));
        }
        Ok(Self {
            lambdas,
            means,
            stds,
        })
    }

    pub fn n_features(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    /// Transforms and standardizes a single feature vector.
    pub fn apply_row(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features() {
            return Err(Error::dims("transform input width", self.n_features(), x.len()));
        }
        Ok(x.iter()
            .enumerate()
            .map(|(j, &v)| (yeo_johnson(v, self.lambdas[j]) - self.means[j]) / self.stds[j])
            .collect())
    }

    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.cols() != self.n_features() {
            return Err(Error::dims("transform input width", self.n_features(), x.cols()));
        }
        let mut values = Vec::with_capacity(x.rows() * x.cols());
        for r in x.iter_rows() {
            values.extend(self.apply_row(r)?);
        }
        let out = FeatureMatrix::new(x.rows(), x.cols(), values)?;
        match x.ids() {
            Some(ids) => out.with_ids(ids.to_vec()),
            None => Ok(out),
        }
    }

    /// Maps a standardized vector back to raw feature space.
    pub fn invert_row(&self, z: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.n_features() {
            return Err(Error::dims("transform inverse width", self.n_features(), z.len()));
        }
        z.iter()
            .enumerate()
            .map(|(j, &v)| {
                let y = v * self.stds[j] + self.means[j];
                yeo_johnson_inverse(y, self.lambdas[j]).ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "value {y} is outside the range of the transform for feature {j}"
                    ))
                })
            })
            .collect()
    }
}

/// Maximizes the profile log-likelihood over λ ∈ [-5, 5]: a 21-point grid
/// localizes the bracket, then Brent's method refines it.
fn fit_lambda(column: &[f64]) -> f64 {
    let objective = |l: f64| {
        let ll = profile_log_likelihood(column, l);
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    };
    let step = (LAMBDA_MAX - LAMBDA_MIN) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| LAMBDA_MIN + step * i as f64).collect();
    let best = grid
        .iter()
        .enumerate()
        .min_by(|a, b| objective(*a.1).total_cmp(&objective(*b.1)))
        .map(|(i, _)| i)
        .unwrap();
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(GRID_POINTS - 1)];
    brent_minimize(objective, lo, hi, LAMBDA_TOL)
}

/// Brent's method (golden section with parabolic steps) on `[a, b]`.
pub(crate) fn brent_minimize<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const GOLDEN: f64 = 0.381_966_011_250_105_1;
    const MAX_ITER: usize = 200;

    let mut x = a + GOLDEN * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for _ in 0..MAX_ITER {
        let m = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-10;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = f(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            (v, fv) = (w, fw);
            (w, fw) = (x, fx);
            (x, fx) = (u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv) = (w, fw);
                (w, fw) = (u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    x
}

/// Two-pass mean and population variance.
fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

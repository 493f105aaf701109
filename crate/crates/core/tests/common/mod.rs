//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's numeric code paths.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Gauss {
    rng: ChaCha8Rng,
}

impl Gauss {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.rng.next_u64() % n as u64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn exponential(&mut self) -> f64 {
        -(1.0 - self.uniform()).ln()
    }

    pub fn normals(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }

    pub fn rows(&mut self, n: usize, d: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.normals(d)).collect()
    }

    pub fn unit_rows(&mut self, n: usize, d: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| unit(&self.normals(d))).collect()
    }
}

pub fn unit(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

/// Textbook four-branch Yeo-Johnson with plain `powf`/`ln`.
pub fn textbook_yeo_johnson(x: f64, l: f64) -> f64 {
    if x >= 0.0 {
        if l == 0.0 {
            (x + 1.0).ln()
        } else {
            ((x + 1.0).powf(l) - 1.0) / l
        }
    } else if l == 2.0 {
        -(-x + 1.0).ln()
    } else {
        -((-x + 1.0).powf(2.0 - l) - 1.0) / (2.0 - l)
    }
}

pub fn textbook_log_likelihood(col: &[f64], l: f64) -> f64 {
    let n = col.len() as f64;
    let y: Vec<f64> = col.iter().map(|&x| textbook_yeo_johnson(x, l)).collect();
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let jac: f64 = col
        .iter()
        .map(|&x| if x >= 0.0 { (x + 1.0).ln() } else { -(-x + 1.0).ln() })
        .sum();
    -n / 2.0 * var.ln() + (l - 1.0) * jac
}

/// Grid-search MLE for λ over {-5, -4.9, ..., 5}.
pub fn grid_lambda(col: &[f64]) -> f64 {
    (0..=100)
        .map(|i| -5.0 + 0.1 * i as f64)
        .map(|l| (l, textbook_log_likelihood(col, l)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0
}

pub fn mean_cov(rows: &[Vec<f64>]) -> (Vec<f64>, DMatrix<f64>) {
    let n = rows.len();
    let d = rows[0].len();
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let mean: Vec<f64> = (0..d).map(|j| x.column(j).sum() / n as f64).collect();
    let centered = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    (mean, cov)
}

/// `sqrt((x-μ)ᵀ (M + C I)⁻¹ (x-μ))` with an explicit inverse.
pub fn naive_mahalanobis(mean: &[f64], cov: &DMatrix<f64>, c: f64, x: &[f64]) -> f64 {
    let d = mean.len();
    let m = cov + DMatrix::identity(d, d) * c;
    let inv = m.try_inverse().expect("invertible");
    let diff = DMatrix::from_fn(d, 1, |i, _| x[i] - mean[i]);
    (diff.transpose() * inv * diff)[(0, 0)].sqrt()
}

/// Literal `log(exp(-md²/2) / sqrt(det(2π M')))`.
pub fn naive_mc(md: f64, cov: &DMatrix<f64>, c: f64) -> f64 {
    let d = cov.nrows();
    let m = (cov + DMatrix::identity(d, d) * c) * (2.0 * std::f64::consts::PI);
    ((-md * md / 2.0).exp() / m.determinant().sqrt()).ln()
}

/// k-th smallest Euclidean distance by sorting all of them.
pub fn brute_kth(train: &[Vec<f64>], z: &[f64], k: usize) -> f64 {
    let mut d: Vec<f64> = train
        .iter()
        .map(|r| r.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .collect();
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    d[k - 1]
}

pub fn naive_kc(kd: f64, n: usize) -> f64 {
    -(n as f64).sqrt() * kd.max(1e-12).ln()
}

/// Pair-counting AUROC over all `n_id · n_ood` pairs.
pub fn pair_auroc(id: &[f64], ood: &[f64]) -> f64 {
    let mut wins = 0usize;
    let mut ties = 0usize;
    for &a in id {
        for &b in ood {
            if a > b {
                wins += 1;
            } else if a == b {
                ties += 1;
            }
        }
    }
    (wins as f64 + 0.5 * ties as f64) / (id.len() * ood.len()) as f64
}

/// Upper tail of χ²(1) at `x` by Simpson integration of the density in
/// `u = sqrt(t)`, which turns it into `2 ∫_{√x}^∞ φ(u) du`.
pub fn chi2_1_tail_numeric(x: f64) -> f64 {
    let a = x.sqrt();
    let b = a + 40.0;
    let n = 200_000;
    let h = (b - a) / n as f64;
    let phi = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = phi(a) + phi(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * phi(a + i as f64 * h);
    }
    2.0 * s * h / 3.0
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Random SPD matrix `A Aᵀ / d + 0.1 I` of size `d`.
pub fn random_spd(g: &mut Gauss, d: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| g.normal());
    &a * a.transpose() / d as f64 + DMatrix::identity(d, d) * 0.1
}

//! Seeded Gaussian near/far-OOD scenarios with known ground truth.
//!
//! Both feature streams are drawn from a fixed multivariate normal with an
//! AR(1) covariance `Σ_ij = ρ^|i-j|` (ρ = [`AR_RHO`]). Extrema features are
//! centered at the origin; embeddings are centered at [`EMBED_CENTER`] times
//! the all-ones unit vector, giving them a dominant shared direction (as
//! non-negative penultimate activations have) so that their L2-normalized
//! directions form a cluster.
//! OOD samples add `shift` along the first coordinate axis and multiply the
//! covariance by `cov_scale`.
//!
//! Randomness is ChaCha20 (`rand_chacha`) seeded with `seed` via
//! `seed_from_u64`, one stream per matrix (see [`Stream`]). Standard normals
//! come from the Box-Muller transform over 53-bit uniforms
//! `u = (next_u64 >> 11) · 2⁻⁵³`, both outputs of each pair used in order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

pub const AR_RHO: f64 = 0.5;
pub const EMBED_CENTER: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub dim_extrema: usize,
    pub dim_embed: usize,
    pub n_train: usize,
    pub n_id_test: usize,
    pub n_ood_test: usize,
    pub ood_mean_shift: f64,
    pub ood_cov_scale: f64,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            dim_extrema: 8,
            dim_embed: 16,
            n_train: 2000,
            n_id_test: 2000,
            n_ood_test: 2000,
            ood_mean_shift: 8.0,
            ood_cov_scale: 1.0,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("dim_extrema", self.dim_extrema),
            ("dim_embed", self.dim_embed),
            ("n_train", self.n_train),
            ("n_id_test", self.n_id_test),
            ("n_ood_test", self.n_ood_test),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be >= 1")));
        }
        if !self.ood_mean_shift.is_finite() {
            return Err(Error::InvalidConfig("ood_mean_shift must be finite".into()));
        }
        if !(self.ood_cov_scale.is_finite() && self.ood_cov_scale > 0.0) {
            return Err(Error::InvalidConfig("ood_cov_scale must be > 0".into()));
        }
        Ok(())
    }
}

/// ChaCha20 stream index of each generated matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    TrainExtrema = 0,
    TrainEmbed = 1,
    IdExtrema = 2,
    IdEmbed = 3,
    OodExtrema = 4,
    OodEmbed = 5,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub train_extrema: FeatureMatrix,
    pub train_embed: FeatureMatrix,
    pub id_extrema: FeatureMatrix,
    pub id_embed: FeatureMatrix,
    pub ood_extrema: FeatureMatrix,
    pub ood_embed: FeatureMatrix,
}

impl Scenario {
    /// `(file stem, matrix)` pairs in stream order.
    pub fn named(&self) -> [(&'static str, &FeatureMatrix); 6] {
        [
            ("train_extrema", &self.train_extrema),
            ("train_embed", &self.train_embed),
            ("id_extrema", &self.id_extrema),
            ("id_embed", &self.id_embed),
            ("ood_extrema", &self.ood_extrema),
            ("ood_embed", &self.ood_embed),
        ]
    }
}

pub fn generate(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let id = Shift { offset: 0.0, scale: 1.0 };
    let ood = Shift {
        offset: spec.ood_mean_shift,
        scale: spec.ood_cov_scale,
    };
    let ex = |stream, n, s| sample(spec.seed, stream, n, spec.dim_extrema, 0.0, s);
    let em = |stream, n, s| sample(spec.seed, stream, n, spec.dim_embed, EMBED_CENTER, s);
    Ok(Scenario {
        train_extrema: ex(Stream::TrainExtrema, spec.n_train, id)?,
        train_embed: em(Stream::TrainEmbed, spec.n_train, id)?,
        id_extrema: ex(Stream::IdExtrema, spec.n_id_test, id)?,
        id_embed: em(Stream::IdEmbed, spec.n_id_test, id)?,
        ood_extrema: ex(Stream::OodExtrema, spec.n_ood_test, ood)?,
        ood_embed: em(Stream::OodEmbed, spec.n_ood_test, ood)?,
    })
}

/// Mean of the ID distribution for a stream of width `dim` centered at `center`.
pub fn id_mean(dim: usize, center: f64) -> Vec<f64> {
    vec![center / (dim as f64).sqrt(); dim]
}

/// ID covariance `ρ^|i-j|`, row-major.
pub fn id_covariance(dim: usize) -> Vec<f64> {
    let mut c = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            c[i * dim + j] = AR_RHO.powi((i as i32 - j as i32).abs());
        }
    }
    c
}

#[derive(Clone, Copy)]
struct Shift {
    offset: f64,
    scale: f64,
}

fn sample(
    seed: u64,
    stream: Stream,
    n: usize,
    dim: usize,
    center: f64,
    shift: Shift,
) -> Result<FeatureMatrix> {
    let mut normals = NormalStream::new(seed, stream);
    let mean = id_mean(dim, center);
    let sd = shift.scale.sqrt();
    let innovation = (1.0 - AR_RHO * AR_RHO).sqrt();
    let mut values = Vec::with_capacity(n * dim);
    for _ in 0..n {
        // AR(1) recursion realizes the Cholesky factor of ρ^|i-j|
        let mut prev = 0.0;
        for (j, m) in mean.iter().enumerate() {
            let z = normals.next();
            let v = if j == 0 { z } else { AR_RHO * prev + innovation * z };
            prev = v;
            let offset = if j == 0 { shift.offset } else { 0.0 };
            values.push(m + offset + sd * v);
        }
    }
    FeatureMatrix::new(n, dim, values)
}

struct NormalStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl NormalStream {
    fn new(seed: u64, stream: Stream) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        Self { rng, spare: None }
    }

    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

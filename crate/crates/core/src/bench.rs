//! Per-sample inference timing.

use std::hint::black_box;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::detector::{ComboodDetector, ScoreTriple};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExecutionMode {
    /// Components evaluated one after the other; the whole sample is timed.
    Serial,
    /// Components evaluated on separate rayon tasks; a sample costs the slower
    /// component plus the fusion step.
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub mode: ExecutionMode,
    pub samples: usize,
    pub repeats: usize,
    /// Per-sample statistics averaged over repeats, in milliseconds.
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p95_ms: f64,
    /// Mean per-sample time of each repeat.
    pub run_means_ms: Vec<f64>,
}

/// Times scoring of every paired test row `repeats` times after one untimed
/// warm-up pass.
pub fn bench_inference(
    d: &ComboodDetector,
    test_extrema: &FeatureMatrix,
    test_embed: &FeatureMatrix,
    repeats: usize,
    mode: ExecutionMode,
) -> Result<BenchReport> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be >= 1".into()));
    }
    if test_extrema.rows() != test_embed.rows() {
        return Err(Error::dims(
            "paired test rows (extrema vs embeddings)",
            test_extrema.rows(),
            test_embed.rows(),
        ));
    }
    let n = test_extrema.rows();
    for i in 0..n {
        black_box(d.score(test_extrema.row(i), test_embed.row(i))?);
    }

    let mut means = Vec::with_capacity(repeats);
    let mut medians = Vec::with_capacity(repeats);
    let mut p95s = Vec::with_capacity(repeats);
    let mut times = vec![0.0; n];
    for _ in 0..repeats {
        for (i, t) in times.iter_mut().enumerate() {
            let x = test_extrema.row(i);
            let e = test_embed.row(i);
            *t = match mode {
                ExecutionMode::Serial => {
                    let start = Instant::now();
                    black_box(d.score(black_box(x), black_box(e))?);
                    start.elapsed()
                }
                ExecutionMode::Parallel => time_parallel(d, x, e)?,
            }
            .as_secs_f64()
                * 1e3;
        }
        let mut sorted = times.clone();
        sorted.sort_by(f64::total_cmp);
        means.push(times.iter().sum::<f64>() / n as f64);
        medians.push(median(&sorted));
        p95s.push(nearest_rank(&sorted, 0.95));
    }

    let avg = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(BenchReport {
        mode,
        samples: n,
        repeats,
        mean_ms: avg(&means),
        median_ms: avg(&medians),
        p95_ms: avg(&p95s),
        run_means_ms: means,
    })
}

fn time_parallel(d: &ComboodDetector, x: &[f64], e: &[f64]) -> Result<Duration> {
    let ((mc, t_m), (kc, t_k)) = rayon::join(
        || {
            let start = Instant::now();
            let r = d.parametric_confidence(black_box(x));
            (r, start.elapsed())
        },
        || {
            let start = Instant::now();
            let r = d.nonparametric_confidence(black_box(e));
            (r, start.elapsed())
        },
    );
    let (mc, kc) = (mc?, kc?);
    let start = Instant::now();
    black_box(ScoreTriple::new(black_box(kc), black_box(mc)));
    Ok(t_m.max(t_k) + start.elapsed())
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

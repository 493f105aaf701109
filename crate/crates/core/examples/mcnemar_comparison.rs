// Paired significance test between the k-NN-only detector and the fused
// detector, each thresholded at 95% ID true-positive rate.
//
// ```bash
// cargo run --release --example mcnemar_comparison
// ```

use combood::detector::calibration_threshold;
use combood::metrics::mcnemar;
use combood::synth::{self, ScenarioSpec};
use combood::{ComboodDetector, DetectorConfig, ScoreTriple};

pub fn run_example() -> combood::Result<()> {
    let s = synth::generate(&ScenarioSpec {
        n_train: 1500,
        n_id_test: 1000,
        n_ood_test: 1000,
        ood_mean_shift: 1.5,
        ood_cov_scale: 1.2,
        seed: 12,
        ..Default::default()
    })?;
    let detector = ComboodDetector::fit(&s.train_extrema, &s.train_embed, DetectorConfig::default())?;
    let id = detector.score_batch(&s.id_extrema, &s.id_embed)?;
    let ood = detector.score_batch(&s.ood_extrema, &s.ood_embed)?;

    // per-sample correctness of a thresholded score: ID kept, OOD rejected
    let correctness = |f: fn(&ScoreTriple) -> f64| -> combood::Result<Vec<bool>> {
        let id_scores: Vec<f64> = id.iter().map(f).collect();
        let t = calibration_threshold(&id_scores, 0.95)?;
        Ok(id
            .iter()
            .map(|x| f(x) >= t)
            .chain(ood.iter().map(|x| f(x) < t))
            .collect())
    };
    let knn_only = correctness(|t| t.kc)?;
    let fused = correctness(|t| t.score)?;
    let acc = |v: &[bool]| v.iter().filter(|&&c| c).count() as f64 / v.len() as f64;
    println!("accuracy: k-NN only {:.4}, fused {:.4}", acc(&knn_only), acc(&fused));

    let test = mcnemar(&fused, &knn_only)?;
    println!(
        "McNemar: b={} c={} statistic={:.4} p={:.3e}",
        test.b, test.c, test.statistic, test.p_value
    );
    Ok(())
}

fn main() -> combood::Result<()> {
    run_example()
}

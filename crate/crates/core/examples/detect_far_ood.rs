// End-to-end detection on a synthetic far-OOD scenario: fit with a held-out
// calibration split, score ID and OOD test sets, and evaluate.
//
// ```bash
// cargo run --release --example detect_far_ood
// ```

use combood::cli::fit_with_calibration;
use combood::metrics;
use combood::synth::{self, ScenarioSpec};
use combood::{Decision, DetectorConfig};

pub fn run_example() -> combood::Result<()> {
    let spec = ScenarioSpec {
        n_train: 1000,
        n_id_test: 500,
        n_ood_test: 500,
        ood_mean_shift: 8.0,
        seed: 1,
        ..Default::default()
    };
    let s = synth::generate(&spec)?;

    let detector = fit_with_calibration(&s.train_extrema, &s.train_embed, DetectorConfig::default(), 0.1)?;
    println!(
        "fitted: extrema dim {}, embedding dim {}, threshold {:.4}",
        detector.extrema_dim(),
        detector.n_embed(),
        detector.threshold().unwrap()
    );

    let id = detector.score_batch(&s.id_extrema, &s.id_embed)?;
    let ood = detector.score_batch(&s.ood_extrema, &s.ood_embed)?;
    let flagged = ood
        .iter()
        .filter(|t| matches!(detector.decide(t), Ok(Decision::OutOfDistribution)))
        .count();
    println!("OOD samples rejected: {flagged}/{}", ood.len());

    let id_scores: Vec<f64> = id.iter().map(|t| t.score).collect();
    let ood_scores: Vec<f64> = ood.iter().map(|t| t.score).collect();
    let report = metrics::evaluate(&id_scores, &ood_scores, 0.95)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    assert!(report.auroc > 0.99);
    Ok(())
}

fn main() -> combood::Result<()> {
    run_example()
}

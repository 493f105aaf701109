// Compares the fused score with each component alone on a near-OOD scenario.
//
// ```bash
// cargo run --release --example near_ood_fusion
// ```

use combood::metrics::auroc;
use combood::synth::{self, ScenarioSpec};
use combood::{ComboodDetector, DetectorConfig, ScoreTriple};

pub fn run_example() -> combood::Result<()> {
    let spec = ScenarioSpec {
        n_train: 1500,
        n_id_test: 1000,
        n_ood_test: 1000,
        ood_mean_shift: 1.5,
        ood_cov_scale: 1.2,
        seed: 3,
        ..Default::default()
    };
    let s = synth::generate(&spec)?;
    let detector = ComboodDetector::fit(&s.train_extrema, &s.train_embed, DetectorConfig::default())?;
    let id = detector.score_batch(&s.id_extrema, &s.id_embed)?;
    let ood = detector.score_batch(&s.ood_extrema, &s.ood_embed)?;

    let pick = |f: fn(&ScoreTriple) -> f64| -> combood::Result<f64> {
        let a: Vec<f64> = id.iter().map(f).collect();
        let b: Vec<f64> = ood.iter().map(f).collect();
        auroc(&a, &b)
    };
    println!("k-NN only        AUROC {:.4}", pick(|t| t.kc)?);
    println!("Mahalanobis only AUROC {:.4}", pick(|t| t.mc)?);
    println!("fused            AUROC {:.4}", pick(|t| t.score)?);
    Ok(())
}

fn main() -> combood::Result<()> {
    run_example()
}

// Per-sample inference time with the two components run serially and on
// separate tasks.
//
// ```bash
// cargo run --release --example inference_benchmark
// ```

use combood::bench::{bench_inference, ExecutionMode};
use combood::synth::{self, ScenarioSpec};
use combood::{ComboodDetector, DetectorConfig};

pub fn run_example() -> combood::Result<()> {
    let s = synth::generate(&ScenarioSpec {
        dim_embed: 64,
        n_train: 2000,
        n_id_test: 100,
        n_ood_test: 1,
        seed: 4,
        ..Default::default()
    })?;
    let detector = ComboodDetector::fit(&s.train_extrema, &s.train_embed, DetectorConfig::default())?;
    for mode in [ExecutionMode::Serial, ExecutionMode::Parallel] {
        let r = bench_inference(&detector, &s.id_extrema, &s.id_embed, 3, mode)?;
        println!("{}", serde_json::to_string(&r)?);
    }
    Ok(())
}

fn main() -> combood::Result<()> {
    run_example()
}

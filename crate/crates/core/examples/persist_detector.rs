// Writes feature matrices as `.npy`, fits from the files, saves the detector
// to a `.combood` archive and checks the reloaded detector scores identically.
//
// ```bash
// cargo run --example persist_detector
// ```

use combood::dataio::{self, MatrixFormat};
use combood::synth::{self, ScenarioSpec};
use combood::{ComboodDetector, DetectorConfig};

pub fn run_example() -> combood::Result<()> {
    let dir = tempfile::tempdir()?;
    let s = synth::generate(&ScenarioSpec {
        n_train: 200,
        n_id_test: 20,
        n_ood_test: 20,
        seed: 9,
        ..Default::default()
    })?;
    for (stem, m) in s.named() {
        dataio::save_matrix(dir.path().join(format!("{stem}.npy")), m, MatrixFormat::Npy)?;
    }

    let extrema = dataio::load_matrix_auto(dir.path().join("train_extrema.npy"))?;
    let embed = dataio::load_matrix_auto(dir.path().join("train_embed.npy"))?;
    let cfg = DetectorConfig { k: 10, ..Default::default() };
    let detector = ComboodDetector::fit(&extrema, &embed, cfg)?;

    let path = dir.path().join("detector.combood");
    dataio::save_detector(&detector, &path)?;
    let reloaded = dataio::load_detector(&path)?;
    println!(
        "archive: {} bytes",
        std::fs::metadata(&path)?.len()
    );

    let a = detector.score_batch(&s.ood_extrema, &s.ood_embed)?;
    let b = reloaded.score_batch(&s.ood_extrema, &s.ood_embed)?;
    assert_eq!(a, b);
    println!("first OOD sample: {:?}", b[0]);
    Ok(())
}

fn main() -> combood::Result<()> {
    run_example()
}

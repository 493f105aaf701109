// AUROC of the regularized Mahalanobis component alone as the diagonal
// regularization constant C goes from 0 (plain Mahalanobis) to 1e6 (scaled L2).
//
// ```bash
// cargo run --release --example regularization_sweep
// ```

use combood::cli::{regularization_sweep, DEFAULT_SWEEP_GRID};
use combood::synth::{self, ScenarioSpec};

pub fn run_example() -> combood::Result<()> {
    let s = synth::generate(&ScenarioSpec {
        n_train: 1000,
        n_id_test: 500,
        n_ood_test: 500,
        ood_mean_shift: 2.0,
        seed: 5,
        ..Default::default()
    })?;
    let rows = regularization_sweep(&s.train_extrema, &s.id_extrema, &s.ood_extrema, &DEFAULT_SWEEP_GRID)?;
    println!("{:>10}  auroc", "C");
    for r in rows {
        println!("{:>10}  {:.4}", r.reg_c, r.auroc);
    }
    Ok(())
}

fn main() -> combood::Result<()> {
    run_example()
}

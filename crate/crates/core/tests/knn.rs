mod common;

use combood::knn::{kc_score, normalize_rows, KnnModel, KD_EPS};
use combood::FeatureMatrix;
use common::{brute_kth, naive_kc, unit, Gauss};
use proptest::prelude::*;

fn model(rows: &[Vec<f64>], k: usize) -> KnnModel {
    KnnModel::build(FeatureMatrix::from_rows(rows).unwrap(), k).unwrap()
}

#[test]
fn random_bank_matches_brute_force() {
    let mut g = Gauss::new(31);
    let train = g.unit_rows(50, 8);
    let m = model(&train, 5);
    for _ in 0..20 {
        let z = unit(&g.normals(8));
        let ours = m.kth_distance(&z).unwrap();
        let reference = brute_kth(&train, &z, 5);
        assert!((ours - reference).abs() <= 1e-12, "{ours} vs {reference}");
        assert!((kc_score(ours, 50, KD_EPS) - naive_kc(reference, 50)).abs() <= 1e-9);
    }
}

#[test]
fn kth_distance_is_monotone_in_k() {
    let mut g = Gauss::new(32);
    let train = g.unit_rows(60, 6);
    let m = model(&train, 1);
    for _ in 0..10 {
        let z = unit(&g.normals(6));
        let mut prev = 0.0;
        for k in 1..=60 {
            let kd = m.kth_distance_with_k(&z, k).unwrap();
            assert!(kd >= prev);
            prev = kd;
        }
    }
}

#[test]
fn normalization_rejects_zero_rows() {
    let x = FeatureMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
    assert!(normalize_rows(&x).is_err());
}

#[test]
fn unnormalized_bank_is_rejected() {
    let x = FeatureMatrix::from_rows(&[vec![1.0, 1.0]]).unwrap();
    assert!(KnnModel::build(x, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_against_sorting(seed in 0u64..10_000, n in 1usize..80, d in 1usize..10) {
        let mut g = Gauss::new(seed);
        let train = g.unit_rows(n, d);
        let k = 1 + g.below(n);
        let m = model(&train, k);
        let z = unit(&g.normals(d));
        let ours = m.kth_distance(&z).unwrap();
        let reference = brute_kth(&train, &z, k);
        prop_assert!((ours - reference).abs() <= 1e-12);
    }

    #[test]
    fn confidence_never_rises_with_distance(a in 0.0f64..2.0, b in 0.0f64..2.0, n in 1usize..10_000) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(kc_score(lo, n, KD_EPS) >= kc_score(hi, n, KD_EPS));
    }
}

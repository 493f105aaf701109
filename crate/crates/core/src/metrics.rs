//! Detection-quality metrics. ID is the positive class throughout and higher
//! scores mean "more in-distribution".

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::detector::required_count;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auroc: f64,
    pub aupr: f64,
    pub fpr_at_tpr: f64,
    pub n_id: usize,
    pub n_ood: usize,
}

/// AUROC, AUPR (ID positive) and FPR at the given TPR.
pub fn evaluate(id_scores: &[f64], ood_scores: &[f64], tpr: f64) -> Result<EvalReport> {
    Ok(EvalReport {
        auroc: auroc(id_scores, ood_scores)?,
        aupr: aupr(id_scores, ood_scores)?,
        fpr_at_tpr: fpr_at_tpr(id_scores, ood_scores, tpr)?,
        n_id: id_scores.len(),
        n_ood: ood_scores.len(),
    })
}

fn check(id_scores: &[f64], ood_scores: &[f64]) -> Result<()> {
    if id_scores.is_empty() {
        return Err(Error::Empty("no ID scores".into()));
    }
    if ood_scores.is_empty() {
        return Err(Error::Empty("no OOD scores".into()));
    }
    for (col, list) in [id_scores, ood_scores].iter().enumerate() {
        if let Some(row) = list.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite { row, col, value: list[row] });
        }
    }
    Ok(())
}

/// Mann-Whitney AUROC: `(#{id > ood} + ½ #{id == ood}) / (n_id · n_ood)`.
pub fn auroc(id_scores: &[f64], ood_scores: &[f64]) -> Result<f64> {
    check(id_scores, ood_scores)?;
    let mut ood = ood_scores.to_vec();
    ood.sort_by(f64::total_cmp);
    // twice the midrank credit, kept integral
    let doubled: u64 = id_scores
        .iter()
        .map(|&s| {
            let below = ood.partition_point(|&o| o < s) as u64;
            let tied = ood.partition_point(|&o| o <= s) as u64 - below;
            2 * below + tied
        })
        .sum();
    let pairs = 2 * id_scores.len() as u64 * ood_scores.len() as u64;
    Ok(doubled as f64 / pairs as f64)
}

/// Average precision with ID as the positive class: a descending sweep over
/// distinct score values, summing `Δrecall · precision` per tie group.
pub fn aupr(id_scores: &[f64], ood_scores: &[f64]) -> Result<f64> {
    check(id_scores, ood_scores)?;
    let mut all: Vec<(f64, bool)> = id_scores
        .iter()
        .map(|&s| (s, true))
        .chain(ood_scores.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));

    let n_id = id_scores.len() as f64;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut area = 0.0;
    let mut i = 0;
    while i < all.len() {
        let v = all[i].0;
        while i < all.len() && all[i].0 == v {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / n_id;
        let precision = tp as f64 / (tp + fp) as f64;
        area += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(area)
}

/// False-positive rate at the strictest threshold that keeps at least `tpr`
/// of the ID scores (score ≥ threshold counts as ID).
pub fn fpr_at_tpr(id_scores: &[f64], ood_scores: &[f64], tpr: f64) -> Result<f64> {
    check(id_scores, ood_scores)?;
    if !(tpr > 0.0 && tpr < 1.0) {
        return Err(Error::InvalidConfig(format!("tpr must lie in (0, 1), got {tpr}")));
    }
    let mut id = id_scores.to_vec();
    id.sort_by(|a, b| b.total_cmp(a));
    let threshold = id[required_count(id.len(), tpr) - 1];
    let fp = ood_scores.iter().filter(|&&s| s >= threshold).count();
    Ok(fp as f64 / ood_scores.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McNemar {
    /// Samples A got right and B got wrong.
    pub b: usize,
    /// Samples A got wrong and B got right.
    pub c: usize,
    pub statistic: f64,
    pub p_value: f64,
}

/// Continuity-corrected McNemar test on paired per-sample correctness.
pub fn mcnemar(correct_a: &[bool], correct_b: &[bool]) -> Result<McNemar> {
    if correct_a.len() != correct_b.len() {
        return Err(Error::dims("McNemar paired lengths", correct_a.len(), correct_b.len()));
    }
    if correct_a.is_empty() {
        return Err(Error::Empty("McNemar needs at least one sample".into()));
    }
    let b = correct_a.iter().zip(correct_b).filter(|(a, b)| **a && !**b).count();
    let c = correct_a.iter().zip(correct_b).filter(|(a, b)| !**a && **b).count();
    Ok(mcnemar_from_counts(b, c))
}

/// `(|b - c| - 1)² / (b + c)` against χ²(1). No discordance gives (0, 1).
pub fn mcnemar_from_counts(b: usize, c: usize) -> McNemar {
    if b + c == 0 {
        return McNemar {
            b,
            c,
            statistic: 0.0,
            p_value: 1.0,
        };
    }
    let diff = (b as f64 - c as f64).abs() - 1.0;
    let statistic = diff * diff / (b + c) as f64;
    let chi2 = ChiSquared::new(1.0).expect("one degree of freedom is valid");
    McNemar {
        b,
        c,
        statistic,
        p_value: chi2.sf(statistic),
    }
}

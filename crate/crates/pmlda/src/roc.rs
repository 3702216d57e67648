//! Pixel-level receiver operating characteristic curves.

use crate::error::{invalid, Result};
use crate::segmentation::MembershipMap;

/// An ROC curve from (0, 0) to (1, 1) with its trapezoidal area.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// (false-positive rate, true-positive rate) points, monotone
    /// non-decreasing in both coordinates.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
    /// Cutoffs that produced the points, from +inf down to -inf; a score
    /// counts as positive when it is >= the cutoff.
    pub thresholds: Vec<f64>,
}

/// Sweeps thresholds over the distinct scores and accumulates the curve.
/// Tied scores move along a shared diagonal segment, so the trapezoidal
/// area equals concordant-pair counting with ties worth one half.
pub fn roc_curve(scores: &[f64], truth: &[bool]) -> Result<RocCurve> {
    if scores.len() != truth.len() {
        return Err(invalid("scores and truth must have equal length"));
    }
    if scores.is_empty() {
        return Err(invalid("scores must be non-empty"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(invalid("scores must not contain NaN"));
    }
    let positives = truth.iter().filter(|&&t| t).count();
    let negatives = truth.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(invalid("truth must contain both classes"));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let score = scores[order[i]];
        let (mut tie_tp, mut tie_fp) = (0usize, 0usize);
        while i < order.len() && scores[order[i]] == score {
            if truth[order[i]] {
                tie_tp += 1;
            } else {
                tie_fp += 1;
            }
            i += 1;
        }
        let prev = (fp as f64 / negatives as f64, tp as f64 / positives as f64);
        tp += tie_tp;
        fp += tie_fp;
        let next = (fp as f64 / negatives as f64, tp as f64 / positives as f64);
        auc += (next.0 - prev.0) * (next.1 + prev.1) * 0.5;
        points.push(next);
        thresholds.push(score);
    }
    if *points.last().unwrap() != (1.0, 1.0) {
        points.push((1.0, 1.0));
    }
    thresholds.push(f64::NEG_INFINITY);
    Ok(RocCurve { points, auc, thresholds })
}

/// Picks the topic whose membership map best detects the truth mask, or
/// validates a caller-chosen override. Evaluation uses covered pixels only;
/// ties break toward the lowest topic index.
pub fn pick_topic_for_class(
    map: &MembershipMap,
    truth: &[bool],
    override_topic: Option<usize>,
) -> Result<usize> {
    if truth.len() != map.height * map.width {
        return Err(invalid("truth mask size must match the map"));
    }
    if let Some(t) = override_topic {
        if t >= map.k {
            return Err(invalid("override topic out of range"));
        }
        return Ok(t);
    }
    let covered: Vec<usize> = (0..truth.len()).filter(|&p| map.covered[p]).collect();
    let masked: Vec<bool> = covered.iter().map(|&p| truth[p]).collect();
    let mut best = None;
    for topic in 0..map.k {
        let scores: Vec<f64> = covered.iter().map(|&p| map.values[p * map.k + topic]).collect();
        let auc = roc_curve(&scores, &masked)?.auc;
        match best {
            None => best = Some((topic, auc)),
            Some((_, best_auc)) if auc > best_auc => best = Some((topic, auc)),
            _ => {}
        }
    }
    Ok(best.expect("at least one topic").0)
}

//! Metrics for grounded and referring segmentation (IoU, cIoU, gIoU, mIoU,
//! AP50, Recall), IoU-based cross-matching of predictions to ground truth,
//! and the mutated-expression stability study.

mod assign;

pub use assign::max_weight_assignment;

use crate::promptmine::BinaryMask;
use crate::segmentor::GroundedSegmentation;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("mask shapes differ: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("empty dataset")]
    EmptyDataset,
}

/// One prediction/ground-truth pair.
#[derive(Debug, Clone)]
pub struct EvalPair {
    pub prediction: BinaryMask,
    pub ground_truth: BinaryMask,
    pub phrase: String,
    pub image_id: String,
    pub caption_id: usize,
}

/// Intersection over union; two empty masks score 1.0 (the no-target
/// convention, see `giou`).
pub fn iou(a: &BinaryMask, b: &BinaryMask) -> Result<f64, EvalError> {
    if (a.height(), a.width()) != (b.height(), b.width()) {
        return Err(EvalError::ShapeMismatch(
            (a.height(), a.width()),
            (b.height(), b.width()),
        ));
    }
    let union = a.union_count(b);
    if union == 0 {
        return Ok(1.0);
    }
    Ok(a.intersection_count(b) as f64 / union as f64)
}

/// Cumulative IoU: total intersection over total union across the dataset.
pub fn ciou(pairs: &[EvalPair]) -> Result<f64, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut inter = 0usize;
    let mut union = 0usize;
    for p in pairs {
        if (p.prediction.height(), p.prediction.width())
            != (p.ground_truth.height(), p.ground_truth.width())
        {
            return Err(EvalError::ShapeMismatch(
                (p.prediction.height(), p.prediction.width()),
                (p.ground_truth.height(), p.ground_truth.width()),
            ));
        }
        inter += p.prediction.intersection_count(&p.ground_truth);
        union += p.prediction.union_count(&p.ground_truth);
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Generalized IoU: mean per-pair IoU, scoring no-target pairs by the
/// gRefCOCO convention (empty GT and empty prediction 1.0, empty GT with
/// any predicted pixels 0.0).
pub fn giou(pairs: &[EvalPair]) -> Result<f64, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut total = 0.0;
    for p in pairs {
        total += pair_score(&p.prediction, &p.ground_truth)?;
    }
    Ok(total / pairs.len() as f64)
}

fn pair_score(prediction: &BinaryMask, ground_truth: &BinaryMask) -> Result<f64, EvalError> {
    if ground_truth.true_count() == 0 {
        return Ok(if prediction.true_count() == 0 {
            1.0
        } else {
            0.0
        });
    }
    iou(prediction, ground_truth)
}

/// A matched prediction with its IoU and the segmentor confidence used for
/// AP ranking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub iou: f64,
    pub confidence: f64,
}

/// Cross-matching outcome for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    /// (prediction index, ground-truth index, IoU) triples.
    pub pairs: Vec<(usize, usize, f64)>,
    pub unmatched_predictions: Vec<usize>,
    pub unmatched_ground_truths: Vec<usize>,
}

/// One-to-one assignment between predictions and ground truths maximizing
/// total IoU; leftovers on either side are listed unmatched.
pub fn cross_match(
    predictions: &GroundedSegmentation,
    ground_truths: &[(String, BinaryMask)],
) -> Result<Assignment, EvalError> {
    let mut weights = Vec::with_capacity(predictions.records.len());
    for record in &predictions.records {
        let mut row = Vec::with_capacity(ground_truths.len());
        for (_, gt) in ground_truths {
            // A prediction and GT at different resolutions never match.
            let w = if (record.mask.height(), record.mask.width()) == (gt.height(), gt.width()) {
                raw_iou(&record.mask, gt)
            } else {
                0.0
            };
            row.push(w);
        }
        weights.push(row);
    }

    let pairs_idx = max_weight_assignment(&weights);
    let mut matched_preds = vec![false; predictions.records.len()];
    let mut matched_gts = vec![false; ground_truths.len()];
    let mut pairs = Vec::with_capacity(pairs_idx.len());
    for (r, c) in pairs_idx {
        matched_preds[r] = true;
        matched_gts[c] = true;
        pairs.push((r, c, weights[r][c]));
    }
    pairs.sort_by_key(|&(r, _, _)| r);

    Ok(Assignment {
        pairs,
        unmatched_predictions: (0..matched_preds.len())
            .filter(|&i| !matched_preds[i])
            .collect(),
        unmatched_ground_truths: (0..matched_gts.len())
            .filter(|&i| !matched_gts[i])
            .collect(),
    })
}

/// Plain intersection/union with empty-empty scoring 0 weight; only used to
/// build assignment matrices where an empty-empty match must not attract.
fn raw_iou(a: &BinaryMask, b: &BinaryMask) -> f64 {
    let union = a.union_count(b);
    if union == 0 {
        return 0.0;
    }
    a.intersection_count(b) as f64 / union as f64
}

/// Average precision at IoU >= 0.5, ranked by segmentor confidence with the
/// all-point interpolated precision envelope. `unmatched_confidences` are
/// false positives with no assigned ground truth. Confidence ties rank true
/// positives first: the metric stays independent of dataset order even for
/// backends emitting a constant confidence (the mock always does).
pub fn ap50(
    matches: &[MatchedPair],
    unmatched_confidences: &[f64],
    total_ground_truths: usize,
) -> Result<f64, EvalError> {
    if total_ground_truths == 0 {
        return Err(EvalError::EmptyDataset);
    }
    let mut ranked: Vec<(f64, bool)> = matches
        .iter()
        .map(|m| (m.confidence, m.iou >= 0.5))
        .chain(unmatched_confidences.iter().map(|&c| (c, false)))
        .collect();
    ranked.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("finite confidence")
            .then(b.1.cmp(&a.1))
    });

    let mut tp = 0usize;
    let mut recalls = Vec::with_capacity(ranked.len());
    let mut precisions = Vec::with_capacity(ranked.len());
    for (rank, (_, is_tp)) in ranked.iter().enumerate() {
        if *is_tp {
            tp += 1;
        }
        recalls.push(tp as f64 / total_ground_truths as f64);
        precisions.push(tp as f64 / (rank + 1) as f64);
    }
    for i in (0..precisions.len().saturating_sub(1)).rev() {
        precisions[i] = precisions[i].max(precisions[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (r, p) in recalls.iter().zip(&precisions) {
        if *r > prev_recall {
            ap += (r - prev_recall) * p;
            prev_recall = *r;
        }
    }
    Ok(ap)
}

/// Recall at IoU >= 0.5: matched true positives over all ground truths.
pub fn recall50(matches: &[MatchedPair], total_ground_truths: usize) -> Result<f64, EvalError> {
    if total_ground_truths == 0 {
        return Err(EvalError::EmptyDataset);
    }
    let tp = matches.iter().filter(|m| m.iou >= 0.5).count();
    Ok(tp as f64 / total_ground_truths as f64)
}

/// Mean IoU over matched pairs.
pub fn miou(matches: &[MatchedPair]) -> Result<f64, EvalError> {
    if matches.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    Ok(matches.iter().map(|m| m.iou).sum::<f64>() / matches.len() as f64)
}

// ---------------------------------------------------------------------------
// Stability study
// ---------------------------------------------------------------------------

/// Difficulty bucket of one image under caption mutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StabilityBucket {
    Easy,
    Medium,
    Hard,
}

/// Bucket thresholds. The defaults are artifact choices, not reported
/// values; override via config when calibrating against a reference run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StabilityThresholds {
    pub easy_mean: f64,
    pub easy_std: f64,
    pub hard_mean: f64,
    pub hard_std: f64,
}

impl Default for StabilityThresholds {
    fn default() -> Self {
        Self {
            easy_mean: 0.75,
            easy_std: 0.10,
            hard_mean: 0.5,
            hard_std: 0.25,
        }
    }
}

impl StabilityThresholds {
    pub fn bucket(&self, mean: f64, std: f64) -> StabilityBucket {
        if mean >= self.easy_mean && std <= self.easy_std {
            StabilityBucket::Easy
        } else if mean < self.hard_mean || std > self.hard_std {
            StabilityBucket::Hard
        } else {
            StabilityBucket::Medium
        }
    }
}

/// Per-image IoU statistics across caption variants. The raw series is
/// kept for scatter plots and independent re-computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageStability {
    pub image_id: String,
    pub iou_mean: f64,
    pub iou_std: f64,
    pub captions: usize,
    pub bucket: StabilityBucket,
    pub ious: Vec<f64>,
}

/// Mean and population standard deviation of IoU across each image's
/// caption variants. A single-caption image gets std 0 with a warning.
pub fn stability_study(
    iou_by_image: &BTreeMap<String, Vec<f64>>,
    thresholds: &StabilityThresholds,
) -> Result<Vec<ImageStability>, EvalError> {
    if iou_by_image.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut out = Vec::with_capacity(iou_by_image.len());
    for (image_id, ious) in iou_by_image {
        if ious.is_empty() {
            continue;
        }
        if ious.len() == 1 {
            log::warn!("image {image_id}: single caption, std undefined, reporting 0");
        }
        let n = ious.len() as f64;
        let mean = ious.iter().sum::<f64>() / n;
        let var = ious.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        out.push(ImageStability {
            image_id: image_id.clone(),
            iou_mean: mean,
            iou_std: std,
            captions: ious.len(),
            bucket: thresholds.bucket(mean, std),
            ious: ious.clone(),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

/// Metric values for one benchmark run; absent metrics were not part of the
/// task's protocol.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub ciou: Option<f64>,
    pub giou: Option<f64>,
    pub miou: Option<f64>,
    pub ap50: Option<f64>,
    pub recall: Option<f64>,
    pub per_image: Vec<ImageStability>,
    pub records_evaluated: usize,
    pub records_failed: usize,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-column text table, one metric per row.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<12} {:>10}\n", "metric", "value"));
        out.push_str(&format!("{:-<12} {:-<10}\n", "", ""));
        let mut row = |name: &str, v: &Option<f64>| {
            if let Some(v) = v {
                out.push_str(&format!("{name:<12} {v:>10.4}\n"));
            }
        };
        row("cIoU", &self.ciou);
        row("gIoU", &self.giou);
        row("mIoU", &self.miou);
        row("AP50", &self.ap50);
        row("Recall", &self.recall);
        out.push_str(&format!(
            "{:<12} {:>10}\n{:<12} {:>10}\n",
            "evaluated", self.records_evaluated, "failed", self.records_failed
        ));
        out
    }

    /// Per-image stability scatter data as CSV (one row per image).
    pub fn stability_csv(&self) -> String {
        let mut out = String::from("image_id,iou_mean,iou_std,captions,bucket\n");
        for row in &self.per_image {
            out.push_str(&format!(
                "{},{:.6},{:.6},{},{:?}\n",
                row.image_id, row.iou_mean, row.iou_std, row.captions, row.bucket
            ));
        }
        out
    }
}

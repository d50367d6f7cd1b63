//! Segment-matching evaluation and biometric error rates.
//!
//! Predicted and ground-truth segments are matched one-to-one, greedily in
//! descending temporal-IoU order, among same-label pairs whose IoU reaches
//! the threshold (inclusive; pairs sitting exactly on the threshold are
//! counted in the report so the strict-inequality convention can be
//! audited). Matched pairs are true positives; leftover predictions and
//! ground truth are false positives and false negatives.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::detect::{SegmentLabel, TemporalSegment};
use crate::liveness::{ClassLabel, LivenessDecision};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("need at least one attack and one bona fide sample")]
    OneClassOnly,
}

/// Intersection-over-union of two half-open intervals; 0 for disjoint or
/// merely touching segments.
pub fn temporal_iou(a: &TemporalSegment, b: &TemporalSegment) -> f64 {
    let lo = a.onset_us.max(b.onset_us);
    let hi = a.offset_us.min(b.offset_us);
    let intersection = hi.saturating_sub(lo);
    let union = a.duration_us() + b.duration_us() - intersection;
    if union == 0 {
        return 0.0;
    }
    intersection as f64 / union as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub pred_index: usize,
    pub gt_index: usize,
    pub iou: f64,
}

/// Outcome of matching one prediction list against one ground-truth list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    pub iou_threshold: f64,
    pub pairs: Vec<MatchedPair>,
    pub true_positives: BTreeMap<SegmentLabel, usize>,
    pub false_positives: BTreeMap<SegmentLabel, usize>,
    pub false_negatives: BTreeMap<SegmentLabel, usize>,
    /// Candidate pairs whose IoU equals the threshold exactly (matched or
    /// not): nonzero means the inclusive convention was load-bearing.
    pub threshold_ties: usize,
}

impl MatchResult {
    fn count(map: &BTreeMap<SegmentLabel, usize>) -> usize {
        map.values().sum()
    }

    pub fn total_true_positives(&self) -> usize {
        Self::count(&self.true_positives)
    }

    pub fn total_false_positives(&self) -> usize {
        Self::count(&self.false_positives)
    }

    pub fn total_false_negatives(&self) -> usize {
        Self::count(&self.false_negatives)
    }
}

/// Greedy one-to-one matching in descending IoU order (ties broken by
/// earlier prediction onset, then ground-truth onset, then list position).
/// Only same-label pairs with IoU ≥ `iou_threshold` are candidates.
pub fn match_segments(
    pred: &[TemporalSegment],
    gt: &[TemporalSegment],
    iou_threshold: f64,
) -> MatchResult {
    assert!((0.0..=1.0).contains(&iou_threshold), "threshold must lie in [0, 1]");
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    let mut threshold_ties = 0usize;
    for (i, p) in pred.iter().enumerate() {
        for (j, g) in gt.iter().enumerate() {
            if p.label != g.label {
                continue;
            }
            let iou = temporal_iou(p, g);
            if iou == iou_threshold {
                threshold_ties += 1;
            }
            if iou >= iou_threshold && iou > 0.0 {
                candidates.push((iou, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .expect("IoU is finite")
            .then(pred[a.1].onset_us.cmp(&pred[b.1].onset_us))
            .then(gt[a.2].onset_us.cmp(&gt[b.2].onset_us))
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut pred_used = vec![false; pred.len()];
    let mut gt_used = vec![false; gt.len()];
    let mut pairs = Vec::new();
    for (iou, i, j) in candidates {
        if !pred_used[i] && !gt_used[j] {
            pred_used[i] = true;
            gt_used[j] = true;
            pairs.push(MatchedPair { pred_index: i, gt_index: j, iou });
        }
    }

    let mut true_positives: BTreeMap<SegmentLabel, usize> = BTreeMap::new();
    let mut false_positives: BTreeMap<SegmentLabel, usize> = BTreeMap::new();
    let mut false_negatives: BTreeMap<SegmentLabel, usize> = BTreeMap::new();
    for s in pred.iter().chain(gt) {
        true_positives.entry(s.label).or_insert(0);
        false_positives.entry(s.label).or_insert(0);
        false_negatives.entry(s.label).or_insert(0);
    }
    for pair in &pairs {
        *true_positives.entry(pred[pair.pred_index].label).or_insert(0) += 1;
    }
    for (i, p) in pred.iter().enumerate() {
        if !pred_used[i] {
            *false_positives.entry(p.label).or_insert(0) += 1;
        }
    }
    for (j, g) in gt.iter().enumerate() {
        if !gt_used[j] {
            *false_negatives.entry(g.label).or_insert(0) += 1;
        }
    }

    MatchResult { iou_threshold, pairs, true_positives, false_positives, false_negatives, threshold_ties }
}

/// Harmonic mean of precision and recall (both in percent); 0 when both
/// vanish.
pub fn harmonic_f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Per-class confusion counts and derived rates, in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True when a 0/0 ratio was defined to 0 for this class.
    pub empty: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationReport {
    pub iou_threshold: f64,
    pub per_class: BTreeMap<SegmentLabel, ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub matched_pairs: Vec<MatchedPair>,
    pub threshold_ties: usize,
    /// True when any ratio anywhere fell back to the 0/0 convention.
    pub empty: bool,
}

/// Precision/recall/F1 per class plus their unweighted macro average.
pub fn segmentation_metrics(result: &MatchResult) -> SegmentationReport {
    let mut per_class: BTreeMap<SegmentLabel, ClassMetrics> = BTreeMap::new();
    for (&label, &tp) in &result.true_positives {
        let fp = result.false_positives.get(&label).copied().unwrap_or(0);
        let fn_ = result.false_negatives.get(&label).copied().unwrap_or(0);
        let empty = tp + fp == 0 || tp + fn_ == 0;
        let precision = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 * 100.0 };
        let recall = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 * 100.0 };
        per_class.insert(
            label,
            ClassMetrics {
                true_positives: tp,
                false_positives: fp,
                false_negatives: fn_,
                precision,
                recall,
                f1: harmonic_f1(precision, recall),
                empty,
            },
        );
    }
    let n = per_class.len() as f64;
    let (macro_precision, macro_recall, macro_f1) = if per_class.is_empty() {
        (0.0, 0.0, 0.0)
    } else {
        (
            per_class.values().map(|c| c.precision).sum::<f64>() / n,
            per_class.values().map(|c| c.recall).sum::<f64>() / n,
            per_class.values().map(|c| c.f1).sum::<f64>() / n,
        )
    };
    SegmentationReport {
        iou_threshold: result.iou_threshold,
        empty: per_class.is_empty() || per_class.values().any(|c| c.empty),
        per_class,
        macro_precision,
        macro_recall,
        macro_f1,
        matched_pairs: result.pairs.clone(),
        threshold_ties: result.threshold_ties,
    }
}

/// Liveness error rates, in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiometricReport {
    pub top1_accuracy: f64,
    /// Attacks accepted as genuine.
    pub apcer: f64,
    /// Genuine samples rejected as attacks.
    pub bpcer: f64,
    pub acer: f64,
}

impl BiometricReport {
    /// Builds a report from already-computed rates; the ACER identity
    /// `acer = (apcer + bpcer) / 2` is enforced here.
    pub fn from_rates(top1_accuracy: f64, apcer: f64, bpcer: f64) -> BiometricReport {
        BiometricReport { top1_accuracy, apcer, bpcer, acer: (apcer + bpcer) / 2.0 }
    }
}

/// APCER/BPCER/ACER and top-1 accuracy over labeled decisions. The label
/// is the true class; `ClassLabel::Replay` samples are the attacks.
pub fn biometric_metrics(
    decisions: &[(LivenessDecision, ClassLabel)],
) -> Result<BiometricReport, EvalError> {
    let attacks = decisions.iter().filter(|(_, l)| *l == ClassLabel::Replay).count();
    let genuine = decisions.len() - attacks;
    if attacks == 0 || genuine == 0 {
        return Err(EvalError::OneClassOnly);
    }
    let attacks_accepted = decisions
        .iter()
        .filter(|(d, l)| *l == ClassLabel::Replay && d.verdict == ClassLabel::Genuine)
        .count();
    let genuine_rejected = decisions
        .iter()
        .filter(|(d, l)| *l == ClassLabel::Genuine && d.verdict == ClassLabel::Replay)
        .count();
    let correct = decisions.iter().filter(|(d, l)| d.verdict == *l).count();
    Ok(BiometricReport::from_rates(
        correct as f64 / decisions.len() as f64 * 100.0,
        attacks_accepted as f64 / attacks as f64 * 100.0,
        genuine_rejected as f64 / genuine as f64 * 100.0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(onset: u64, offset: u64, label: SegmentLabel) -> TemporalSegment {
        TemporalSegment { onset_us: onset, offset_us: offset, label, score: 1.0 }
    }

    fn blink(onset: u64, offset: u64) -> TemporalSegment {
        seg(onset, offset, SegmentLabel::Blink)
    }

    fn saccade(onset: u64, offset: u64) -> TemporalSegment {
        seg(onset, offset, SegmentLabel::Saccade)
    }

    #[test]
    fn iou_interval_arithmetic() {
        let a = blink(0, 100);
        assert_eq!(temporal_iou(&a, &a), 1.0);
        assert_eq!(temporal_iou(&blink(0, 100), &blink(200, 300)), 0.0);
        let third = temporal_iou(&blink(0, 100), &blink(50, 150));
        assert!((third - 50.0 / 150.0).abs() < 1e-15);
        // Touching intervals share no half-open overlap.
        assert_eq!(temporal_iou(&blink(0, 50), &blink(50, 100)), 0.0);
        // Containment: [25,100] inside [0,100].
        assert_eq!(temporal_iou(&blink(0, 100), &blink(25, 100)), 0.75);
    }

    #[test]
    fn iou_symmetry_and_range_on_generated_intervals() {
        let mut state = 0x9e37_79b9_7f4a_7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..500 {
            let a0 = next() % 1_000;
            let b0 = next() % 1_000;
            let a = blink(a0, a0 + 1 + next() % 300);
            let b = blink(b0, b0 + 1 + next() % 300);
            let ab = temporal_iou(&a, &b);
            assert_eq!(ab, temporal_iou(&b, &a));
            assert!((0.0..=1.0).contains(&ab));
        }
    }

    #[test]
    fn perfect_prediction_matches_everything() {
        let gt = vec![blink(0, 100), saccade(200, 250), blink(300, 500)];
        let result = match_segments(&gt, &gt, 0.5);
        assert_eq!(result.total_true_positives(), 3);
        assert_eq!(result.total_false_positives(), 0);
        assert_eq!(result.total_false_negatives(), 0);
        assert_eq!(result.true_positives[&SegmentLabel::Blink], 2);
        assert_eq!(result.true_positives[&SegmentLabel::Saccade], 1);
        assert!(result.pairs.iter().all(|p| p.iou == 1.0));
    }

    #[test]
    fn two_predictions_one_ground_truth() {
        // IoUs 0.75 and 0.5: the closer prediction wins, the other is a FP.
        let pred = vec![blink(25, 100), blink(50, 100)];
        let gt = vec![blink(0, 100)];
        let result = match_segments(&pred, &gt, 0.5);
        assert_eq!(result.total_true_positives(), 1);
        assert_eq!(result.total_false_positives(), 1);
        assert_eq!(result.total_false_negatives(), 0);
        assert_eq!(result.pairs[0].pred_index, 0);
        assert_eq!(result.pairs[0].iou, 0.75);
    }

    #[test]
    fn labels_never_cross_match() {
        let pred = vec![saccade(0, 100)];
        let gt = vec![blink(0, 100)];
        let result = match_segments(&pred, &gt, 0.5);
        assert_eq!(result.total_true_positives(), 0);
        assert_eq!(result.false_positives[&SegmentLabel::Saccade], 1);
        assert_eq!(result.false_negatives[&SegmentLabel::Blink], 1);
    }

    #[test]
    fn counting_identities_hold() {
        let pred = vec![blink(0, 90), blink(100, 200), saccade(250, 300), blink(400, 480)];
        let gt = vec![blink(10, 95), saccade(240, 310), blink(600, 700)];
        let result = match_segments(&pred, &gt, 0.5);
        assert_eq!(result.total_true_positives() + result.total_false_positives(), pred.len());
        assert_eq!(result.total_true_positives() + result.total_false_negatives(), gt.len());
        assert!(result.total_true_positives() <= pred.len().min(gt.len()));
    }

    #[test]
    fn threshold_is_inclusive_and_ties_are_flagged() {
        // [0,100] vs [0,50]: intersection 50, union 100 → exactly 0.5.
        let pred = vec![blink(0, 50)];
        let gt = vec![blink(0, 100)];
        let result = match_segments(&pred, &gt, 0.5);
        assert_eq!(result.total_true_positives(), 1);
        assert_eq!(result.threshold_ties, 1);

        let clean = match_segments(&[blink(0, 100)], &gt, 0.5);
        assert_eq!(clean.threshold_ties, 0);
    }

    #[test]
    fn counts_are_input_order_invariant() {
        let pred = vec![blink(0, 90), blink(100, 200), blink(140, 260)];
        let gt = vec![blink(10, 95), blink(120, 230)];
        let forward = match_segments(&pred, &gt, 0.5);
        let shuffled_pred = vec![pred[2], pred[0], pred[1]];
        let shuffled_gt = vec![gt[1], gt[0]];
        let backward = match_segments(&shuffled_pred, &shuffled_gt, 0.5);
        assert_eq!(forward.true_positives, backward.true_positives);
        assert_eq!(forward.false_positives, backward.false_positives);
        assert_eq!(forward.false_negatives, backward.false_negatives);
    }

    #[test]
    fn duplicate_predictions_resolve_to_one_match() {
        let pred = vec![blink(10, 20), blink(10, 20)];
        let gt = vec![blink(10, 20)];
        let result = match_segments(&pred, &gt, 0.5);
        assert_eq!(result.total_true_positives(), 1);
        assert_eq!(result.total_false_positives(), 1);
    }

    #[test]
    fn f1_identities() {
        let f1 = harmonic_f1(97.62, 93.18);
        assert!((f1 - 95.35).abs() < 0.01);
        assert_eq!(f1, 95.34833962264152);
        // Equal precision and recall collapse to the same value.
        assert_eq!(harmonic_f1(89.65, 89.65), 89.65);
        assert_eq!(harmonic_f1(0.0, 0.0), 0.0);
    }

    #[test]
    fn metrics_from_counts() {
        let pred = vec![blink(0, 90), blink(100, 200), blink(300, 310)];
        let gt = vec![blink(10, 95), blink(105, 195), blink(400, 500), blink(600, 700)];
        let report = segmentation_metrics(&match_segments(&pred, &gt, 0.5));
        let m = &report.per_class[&SegmentLabel::Blink];
        assert_eq!((m.true_positives, m.false_positives, m.false_negatives), (2, 1, 2));
        assert!((m.precision - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.recall, 50.0);
        assert!(!m.empty);
        // One class: macro equals the class metrics.
        assert_eq!(report.macro_precision, m.precision);
        assert_eq!(report.macro_f1, m.f1);
    }

    #[test]
    fn macro_average_is_unweighted() {
        // Blink: P=100, R=100. Saccade: P=0 (one FP), R=0 (one FN).
        let pred = vec![blink(0, 100), saccade(500, 550)];
        let gt = vec![blink(0, 100), saccade(800, 880)];
        let report = segmentation_metrics(&match_segments(&pred, &gt, 0.5));
        assert_eq!(report.macro_precision, 50.0);
        assert_eq!(report.macro_recall, 50.0);
        assert_eq!(report.macro_f1, 50.0);
        assert!(!report.per_class[&SegmentLabel::Blink].empty);
        assert!(!report.per_class[&SegmentLabel::Saccade].empty);
    }

    #[test]
    fn empty_inputs_use_zero_convention_with_flag() {
        let report = segmentation_metrics(&match_segments(&[], &[], 0.5));
        assert_eq!(report.macro_precision, 0.0);
        assert_eq!(report.macro_recall, 0.0);
        assert_eq!(report.macro_f1, 0.0);
        assert!(report.empty);
        assert!(report.per_class.is_empty());

        // Predictions without ground truth: recall is 0/0 for that class.
        let report = segmentation_metrics(&match_segments(&[blink(0, 10)], &[], 0.5));
        let m = &report.per_class[&SegmentLabel::Blink];
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert!(m.empty && report.empty);
    }

    fn decision(verdict: ClassLabel) -> LivenessDecision {
        LivenessDecision { verdict, score: if verdict == ClassLabel::Genuine { 0.9 } else { 0.1 } }
    }

    #[test]
    fn biometric_rates_from_counts() {
        // 10 attacks with 3 accepted, 5 genuine with 1 rejected.
        let mut decisions = Vec::new();
        for i in 0..10 {
            let verdict = if i < 3 { ClassLabel::Genuine } else { ClassLabel::Replay };
            decisions.push((decision(verdict), ClassLabel::Replay));
        }
        for i in 0..5 {
            let verdict = if i < 1 { ClassLabel::Replay } else { ClassLabel::Genuine };
            decisions.push((decision(verdict), ClassLabel::Genuine));
        }
        let report = biometric_metrics(&decisions).unwrap();
        assert_eq!(report.apcer, 30.0);
        assert_eq!(report.bpcer, 20.0);
        assert_eq!(report.acer, 25.0);
        assert_eq!(report.top1_accuracy, 11.0 / 15.0 * 100.0);
    }

    #[test]
    fn biometric_extremes() {
        let perfect: Vec<_> = (0..8)
            .map(|i| {
                let label = if i % 2 == 0 { ClassLabel::Genuine } else { ClassLabel::Replay };
                (decision(label), label)
            })
            .collect();
        let report = biometric_metrics(&perfect).unwrap();
        assert_eq!((report.apcer, report.bpcer, report.acer), (0.0, 0.0, 0.0));
        assert_eq!(report.top1_accuracy, 100.0);

        let all_accepted: Vec<_> = (0..8)
            .map(|i| {
                let label = if i % 2 == 0 { ClassLabel::Genuine } else { ClassLabel::Replay };
                (decision(ClassLabel::Genuine), label)
            })
            .collect();
        let report = biometric_metrics(&all_accepted).unwrap();
        assert_eq!(report.apcer, 100.0);
        assert_eq!(report.bpcer, 0.0);
        assert_eq!(report.acer, 50.0);
    }

    #[test]
    fn biometric_requires_both_classes() {
        let one_sided: Vec<_> =
            (0..4).map(|_| (decision(ClassLabel::Genuine), ClassLabel::Genuine)).collect();
        assert_eq!(biometric_metrics(&one_sided).unwrap_err(), EvalError::OneClassOnly);
        assert_eq!(biometric_metrics(&[]).unwrap_err(), EvalError::OneClassOnly);
    }

    #[test]
    fn acer_identity_through_from_rates() {
        let rows = [(4.20, 5.10, 4.65), (6.90, 8.10, 7.50), (10.20, 8.50, 9.35)];
        for (apcer, bpcer, acer) in rows {
            let report = BiometricReport::from_rates(100.0, apcer, bpcer);
            assert_eq!(report.acer, acer);
        }
        // This row lands one ulp off the decimal literal; the identity holds
        // to relative 1e-12.
        let report = BiometricReport::from_rates(100.0, 8.20, 7.60);
        assert!((report.acer - 7.90).abs() / 7.90 < 1e-12);
    }

    #[test]
    fn report_json_round_trip() {
        let pred = vec![blink(0, 90), saccade(200, 240)];
        let gt = vec![blink(10, 95), saccade(195, 250)];
        let report = segmentation_metrics(&match_segments(&pred, &gt, 0.5));
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"blink\""));
        assert!(json.contains("\"macro_f1\""));
        let back: SegmentationReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}

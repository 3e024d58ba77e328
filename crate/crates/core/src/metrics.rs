//! Confusion-matrix metrics, ROC/AUC, and the detector evaluation protocols.
//!
//! Positive class = adversarial throughout.

use crate::detector::{extract_features, score, DetectorModel};
use crate::error::{Error, Result};
use crate::types::{AttackFamily, ConfusionMatrix, ImageBatch};
use crate::Classifier;

/// Tallies a binary confusion matrix; positive = adversarial.
pub fn confusion(pred: &[bool], truth: &[bool]) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::Size(format!(
            "pred length {} != truth length {}",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Size("empty prediction vector".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (true, true) => cm.true_pos += 1,
            (true, false) => cm.false_pos += 1,
            (false, false) => cm.true_neg += 1,
            (false, true) => cm.false_neg += 1,
        }
    }
    Ok(cm)
}

/// Accuracy (TP+TN)/(TP+FP+TN+FN).
pub fn acc(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Empty("confusion matrix has no samples".into()));
    }
    Ok((cm.true_pos + cm.true_neg) as f64 / total as f64)
}

/// True-positive rate TP/(TP+FN).
pub fn tpr(cm: &ConfusionMatrix) -> Result<f64> {
    let denom = cm.true_pos + cm.false_neg;
    if denom == 0 {
        return Err(Error::Empty("no positive samples".into()));
    }
    Ok(cm.true_pos as f64 / denom as f64)
}

/// False-positive rate FP/(TN+FP).
pub fn fpr(cm: &ConfusionMatrix) -> Result<f64> {
    let denom = cm.true_neg + cm.false_pos;
    if denom == 0 {
        return Err(Error::Empty("no negative samples".into()));
    }
    Ok(cm.false_pos as f64 / denom as f64)
}

/// Area under the ROC curve.
///
/// Sweeps the unique score thresholds from high to low, accumulating
/// (FPR, TPR) points, and integrates by the trapezoid rule. Tied scores
/// advance both rates at once, which credits ties with half weight —
/// identical to the pairwise comparison P(s⁺ > s⁻) + ½·P(s⁺ = s⁻).
pub fn roc_auc(scores: &[f64], truth: &[bool]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::Size(format!(
            "scores length {} != truth length {}",
            scores.len(),
            truth.len()
        )));
    }
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Data(
            "roc_auc needs both classes present".into(),
        ));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Data("scores contain NaN or Inf".into()));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut auc = 0.0;
    let mut tp = 0u64;
    let mut fp = 0u64;
    let mut prev_tp = 0u64;
    let mut prev_fp = 0u64;
    let mut i = 0;
    while i < order.len() {
        // Consume the whole tie group before emitting a curve point.
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if truth[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        auc += (fp - prev_fp) as f64 * (tp + prev_tp) as f64 / 2.0;
        prev_tp = tp;
        prev_fp = fp;
    }
    Ok(auc / (pos as f64 * neg as f64))
}

/// Detector quality on one clean/adversarial test pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorReport {
    pub auc: f64,
    pub acc: f64,
    pub cm: ConfusionMatrix,
    pub n_clean: usize,
    pub n_adv: usize,
}

/// Scores a balanced clean-vs-adversarial test set and reports AUC
/// (threshold-free) plus Acc at the detector's own threshold.
pub fn evaluate_detector(
    detector: &DetectorModel,
    plain: &Classifier,
    robust: &Classifier,
    clean_test: &ImageBatch,
    adv_test: &ImageBatch,
) -> Result<DetectorReport> {
    if clean_test.is_empty() || adv_test.is_empty() {
        return Err(Error::Size("evaluation sets must be non-empty".into()));
    }
    let clean_feats = extract_features(plain, robust, clean_test)?;
    let adv_feats = extract_features(plain, robust, adv_test)?;

    let mut scores = score(detector, &clean_feats)?;
    scores.extend(score(detector, &adv_feats)?);
    let mut truth = vec![false; clean_test.len()];
    truth.extend(vec![true; adv_test.len()]);

    let auc = roc_auc(&scores, &truth)?;
    let pred: Vec<bool> = scores.iter().map(|&s| s >= detector.threshold).collect();
    let cm = confusion(&pred, &truth)?;
    Ok(DetectorReport {
        auc,
        acc: acc(&cm)?,
        cm,
        n_clean: clean_test.len(),
        n_adv: adv_test.len(),
    })
}

/// One row of the unseen-attack protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferRow {
    pub eval_attack: AttackFamily,
    pub seen: bool,
    /// None for the seen (excluded) family.
    pub report: Option<DetectorReport>,
}

/// Evaluates a detector trained on a single attack family against other
/// families. The seen family must be flagged for exclusion; its row is
/// emitted with no metrics.
#[allow(clippy::too_many_arguments)]
pub fn transfer_eval(
    detector: &DetectorModel,
    plain: &Classifier,
    robust: &Classifier,
    trained_on: AttackFamily,
    eval_sets: &[(AttackFamily, &ImageBatch)],
    clean_test: &ImageBatch,
    exclude_seen: bool,
) -> Result<Vec<TransferRow>> {
    let mut rows = Vec::with_capacity(eval_sets.len());
    for (family, adv) in eval_sets {
        if *family == trained_on {
            if !exclude_seen {
                return Err(Error::Config(format!(
                    "evaluation list includes the training family {family} without the exclusion flag"
                )));
            }
            rows.push(TransferRow {
                eval_attack: *family,
                seen: true,
                report: None,
            });
            continue;
        }
        let report = evaluate_detector(detector, plain, robust, clean_test, adv)?;
        rows.push(TransferRow {
            eval_attack: *family,
            seen: false,
            report: Some(report),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::distributions::{Distribution, Uniform};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Brute-force pairwise oracle: P(score_pos > score_neg) + 0.5 P(tie).
    pub(crate) fn pairwise_auc(scores: &[f64], truth: &[bool]) -> f64 {
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for (i, &ti) in truth.iter().enumerate() {
            if !ti {
                continue;
            }
            for (j, &tj) in truth.iter().enumerate() {
                if tj {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
        wins / pairs
    }

    #[test]
    fn confusion_counts_match_definition() {
        let cm = confusion(&[true, true, false, false], &[true, true, false, false]).unwrap();
        assert_eq!(
            cm,
            ConfusionMatrix {
                true_pos: 2,
                true_neg: 2,
                false_pos: 0,
                false_neg: 0
            }
        );
    }

    #[test]
    fn confusion_all_wrong_positive() {
        let n = 5;
        let cm = confusion(&vec![true; n], &vec![false; n]).unwrap();
        assert_eq!(cm.false_pos, n as u64);
        assert_eq!(cm.total(), n as u64);
    }

    #[test]
    fn confusion_rejects_mismatched_lengths() {
        match confusion(&[true], &[true, false]) {
            Err(Error::Size(_)) => {}
            other => panic!("expected SizeError, got {other:?}"),
        }
    }

    #[test]
    fn acc_exact_values() {
        let perfect = ConfusionMatrix {
            true_pos: 50,
            true_neg: 50,
            false_pos: 0,
            false_neg: 0,
        };
        assert_eq!(acc(&perfect).unwrap(), 1.0);
        let mixed = ConfusionMatrix {
            true_pos: 3,
            false_neg: 1,
            false_pos: 2,
            true_neg: 4,
        };
        assert_eq!(acc(&mixed).unwrap(), 0.7);
        let empty = ConfusionMatrix::default();
        assert!(matches!(acc(&empty), Err(Error::Empty(_))));
    }

    #[test]
    fn tpr_fpr_exact_values() {
        let cm = ConfusionMatrix {
            true_pos: 4,
            false_neg: 1,
            false_pos: 0,
            true_neg: 5,
        };
        assert_eq!(tpr(&cm).unwrap(), 0.8);
        assert_eq!(fpr(&cm).unwrap(), 0.0);
        let no_pos = ConfusionMatrix {
            true_pos: 0,
            false_neg: 0,
            false_pos: 1,
            true_neg: 1,
        };
        assert!(matches!(tpr(&no_pos), Err(Error::Empty(_))));
    }

    #[test]
    fn auc_perfect_separation() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let truth = [true, true, false, false];
        assert_eq!(roc_auc(&scores, &truth).unwrap(), 1.0);
        let inverted = [false, false, true, true];
        assert_eq!(roc_auc(&scores, &inverted).unwrap(), 0.0);
    }

    #[test]
    fn auc_matches_pairwise_oracle_on_fixed_case() {
        let scores = [0.1, 0.4, 0.35, 0.8];
        let truth = [false, false, true, true];
        let expect = pairwise_auc(&scores, &truth);
        assert!((roc_auc(&scores, &truth).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn auc_constant_scores_is_half() {
        let scores = [0.3; 6];
        let truth = [true, false, true, false, true, false];
        assert!((roc_auc(&scores, &truth).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn auc_rejects_single_class() {
        assert!(matches!(
            roc_auc(&[0.3, 0.3], &[true, true]),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn auc_matches_pairwise_oracle_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let dist = Uniform::new(0.0, 1.0);
        for n in [2usize, 3, 10, 57, 200] {
            for _ in 0..20 {
                let mut scores: Vec<f64> =
                    (0..n).map(|_| dist.sample(&mut rng)).collect();
                // Force ties sometimes.
                if n > 4 {
                    scores[1] = scores[0];
                    scores[3] = scores[2];
                }
                let mut truth: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
                truth[0] = true;
                truth[n - 1] = false;
                let expect = pairwise_auc(&scores, &truth);
                let got = roc_auc(&scores, &truth).unwrap();
                assert!(
                    (got - expect).abs() < 1e-9,
                    "n={n}: got {got}, oracle {expect}"
                );
            }
        }
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dist = Uniform::new(-3.0, 3.0);
        let scores: Vec<f64> = (0..60).map(|_| dist.sample(&mut rng)).collect();
        let truth: Vec<bool> = (0..60).map(|i| i % 3 == 0).collect();
        let base = roc_auc(&scores, &truth).unwrap();
        let squashed: Vec<f64> = scores.iter().map(|&s| 1.0 / (1.0 + (-3.0 * s).exp())).collect();
        assert!((roc_auc(&squashed, &truth).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn auc_relabel_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let dist = Uniform::new(0.0, 1.0);
        let scores: Vec<f64> = (0..40).map(|_| dist.sample(&mut rng)).collect();
        let truth: Vec<bool> = (0..40).map(|i| i % 2 == 0).collect();
        let flipped: Vec<bool> = truth.iter().map(|t| !t).collect();
        let a = roc_auc(&scores, &truth).unwrap();
        let b = roc_auc(&scores, &flipped).unwrap();
        assert!((a + b - 1.0).abs() < 1e-12);
    }
}

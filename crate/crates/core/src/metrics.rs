//! Precision, recall and F1 as used for all reported comparisons.

use crate::error::{Error, Result};

/// tp / (tp + fp); defined as 0 when nothing was predicted positive.
pub fn precision(tp: usize, fp: usize) -> f64 {
    if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    }
}

/// tp / p; undefined (error) when the evaluation set has no positives.
pub fn recall(tp: usize, p: usize) -> Result<f64> {
    if p == 0 {
        return Err(Error::NoPositivesInTest);
    }
    Ok(tp as f64 / p as f64)
}

/// Harmonic mean of precision and recall; 0 when both are 0 so degenerate
/// classifiers stay comparable.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// F1 of predicted-positive flags against true-positive flags.
pub fn f1_from_predictions(predicted_target: &[bool], is_target: &[bool]) -> Result<Scores> {
    debug_assert_eq!(predicted_target.len(), is_target.len());
    let mut tp = 0;
    let mut fp = 0;
    let mut p = 0;
    for (&pred, &truth) in predicted_target.iter().zip(is_target) {
        if truth {
            p += 1;
            if pred {
                tp += 1;
            }
        } else if pred {
            fp += 1;
        }
    }
    let precision = precision(tp, fp);
    let recall = recall(tp, p)?;
    Ok(Scores { precision, recall, f1: f1(precision, recall) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_arithmetic() {
        // tp=3, fp=1, p=4 → precision 0.75, recall 0.75, F1 0.75.
        let pr = precision(3, 1);
        let rc = recall(3, 4).unwrap();
        assert_eq!(pr, 0.75);
        assert_eq!(rc, 0.75);
        assert_eq!(f1(pr, rc), 0.75);
    }

    #[test]
    fn perfect_predictor() {
        assert_eq!(f1(1.0, 1.0), 1.0);
    }

    #[test]
    fn all_positive_classifier_formula() {
        // Everything predicted positive on p positives of n total:
        // recall 1, precision p/n, F1 = 2p/(n+p).
        let n = 10usize;
        let p = 3usize;
        let pr = precision(p, n - p);
        let rc = recall(p, p).unwrap();
        let expected = 2.0 * p as f64 / (n + p) as f64;
        assert!((f1(pr, rc) - expected).abs() < 1e-15);
    }

    #[test]
    fn degenerate_conventions() {
        assert_eq!(precision(0, 0), 0.0);
        assert!(matches!(recall(0, 0), Err(Error::NoPositivesInTest)));
        assert_eq!(f1(0.0, 0.0), 0.0);
    }

    #[test]
    fn f1_symmetric_in_arguments() {
        for &(a, b) in &[(0.2, 0.9), (0.5, 0.5), (0.0, 0.7), (1.0, 0.3)] {
            assert_eq!(f1(a, b), f1(b, a));
        }
    }
}

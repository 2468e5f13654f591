//! Evaluation metrics: per-class F1, the sentiment macro-F1 over the positive
//! and negative classes, prevalence-weighted dialog-act F1, and Cohen's kappa.

mod kappa;
mod report;

pub use kappa::{cohen_kappa, KappaReport};
pub use report::{evaluate_pairs, MetricsReport, TaskScores};

use serde::{Deserialize, Serialize};

use crate::corpus::SentimentLabel;
use crate::error::{Error, Result};

/// Square count matrix, rows = gold class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let k = labels.len();
        Self {
            labels,
            counts: vec![0; k * k],
        }
    }

    pub fn with_classes(k: usize) -> Self {
        Self::new((0..k).map(|i| i.to_string()).collect())
    }

    /// Builds from row-major counts.
    pub fn from_counts(labels: Vec<String>, counts: Vec<u64>) -> Result<Self> {
        let k = labels.len();
        if counts.len() != k * k {
            return Err(Error::Shape(format!("{} counts for {k} classes", counts.len())));
        }
        Ok(Self { labels, counts })
    }

    pub fn from_pairs(k: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut cm = Self::with_classes(k);
        for (g, p) in pairs {
            cm.add(g, p)?;
        }
        Ok(cm)
    }

    pub fn add(&mut self, gold: usize, predicted: usize) -> Result<()> {
        let k = self.k();
        if gold >= k || predicted >= k {
            return Err(Error::Validation(format!(
                "class pair ({gold}, {predicted}) outside 0..{k}"
            )));
        }
        self.counts[gold * k + predicted] += 1;
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, gold: usize, predicted: usize) -> u64 {
        self.counts[gold * self.k() + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, gold: usize) -> u64 {
        (0..self.k()).map(|j| self.get(gold, j)).sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        (0..self.k()).map(|i| self.get(i, predicted)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 per class; every 0/0 is taken as 0.
pub fn f1_per_class(cm: &ConfusionMatrix) -> Vec<ClassScores> {
    (0..cm.k())
        .map(|c| {
            let tp = cm.get(c, c);
            let precision = ratio(tp, cm.col_sum(c));
            let recall = ratio(tp, cm.row_sum(c));
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassScores {
                precision,
                recall,
                f1,
                support: cm.row_sum(c),
            }
        })
        .collect()
}

/// Mean of the positive and negative F1 scores. Neutral predictions still
/// count against positive and negative precision.
pub fn sentiment_macro_f1(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.k() != SentimentLabel::COUNT {
        return Err(Error::Shape(format!("sentiment matrix needs 3 classes, got {}", cm.k())));
    }
    let s = f1_per_class(cm);
    Ok((s[SentimentLabel::Positive.index()].f1 + s[SentimentLabel::Negative.index()].f1) / 2.0)
}

/// Unweighted mean F1 over all classes.
pub fn macro_f1(cm: &ConfusionMatrix) -> f64 {
    let s = f1_per_class(cm);
    if s.is_empty() {
        return 0.0;
    }
    s.iter().map(|c| c.f1).sum::<f64>() / s.len() as f64
}

/// `Σ_k (gold share of k) · F1_k`, with shares taken from the evaluated set.
pub fn da_weighted_f1(cm: &ConfusionMatrix) -> f64 {
    let total = cm.total();
    if total == 0 {
        return 0.0;
    }
    f1_per_class(cm)
        .iter()
        .map(|c| c.support as f64 / total as f64 * c.f1)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(k: usize, counts: &[u64]) -> ConfusionMatrix {
        ConfusionMatrix::from_counts((0..k).map(|i| i.to_string()).collect(), counts.to_vec())
            .unwrap()
    }

    #[test]
    fn diagonal_is_perfect() {
        let m = cm(3, &[4, 0, 0, 0, 2, 0, 0, 0, 7]);
        assert!(f1_per_class(&m).iter().all(|c| c.f1 == 1.0));
        assert_eq!(sentiment_macro_f1(&m).unwrap(), 1.0);
        assert_eq!(da_weighted_f1(&m), 1.0);
    }

    #[test]
    fn single_predicted_column() {
        // everything predicted as class 1; gold counts 2, 5, 3
        let m = cm(3, &[0, 2, 0, 0, 5, 0, 0, 3, 0]);
        let s = f1_per_class(&m);
        assert_eq!(s[1].recall, 1.0);
        assert!((s[1].precision - 0.5).abs() < 1e-15);
        assert_eq!(s[0].f1, 0.0);
        assert_eq!(s[2].f1, 0.0);
    }

    #[test]
    fn all_neutral_sentiment_scores_zero() {
        // gold pos 26, neg 31, neu 43, all predicted neutral
        let m = cm(3, &[0, 0, 26, 0, 0, 31, 0, 0, 43]);
        assert_eq!(sentiment_macro_f1(&m).unwrap(), 0.0);
        // the three-class macro average is the only non-zero reading
        let f_neu = 2.0 * 0.43 / 1.43;
        assert!((macro_f1(&m) - f_neu / 3.0).abs() < 1e-12);
    }

    #[test]
    fn crafted_sentiment_macro() {
        // positive: tp 1, fp 1, fn 1 -> F1 0.5
        // negative: tp 7, fp 3, fn 3 -> F1 0.7
        let m = cm(3, &[1, 1, 0, 1, 7, 2, 0, 2, 5]);
        let s = f1_per_class(&m);
        assert!((s[0].f1 - 0.5).abs() < 1e-12, "{:?}", s[0]);
        assert!((s[1].f1 - 0.7).abs() < 1e-12, "{:?}", s[1]);
        assert!((sentiment_macro_f1(&m).unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn weighted_two_class_by_hand() {
        // gold a: 6 (4 right, 2 -> b); gold b: 4 (1 -> a, 3 right)
        // F1_a = 2*4/(2*4+1+2) = 8/11, F1_b = 6/9, weights .6 / .4
        let m = cm(2, &[4, 2, 1, 3]);
        let expected = 0.6 * 8.0 / 11.0 + 0.4 * 6.0 / 9.0;
        assert!((da_weighted_f1(&m) - expected).abs() < 1e-12);
    }

    #[test]
    fn empty_and_out_of_range() {
        assert_eq!(da_weighted_f1(&ConfusionMatrix::with_classes(15)), 0.0);
        assert!(ConfusionMatrix::from_pairs(2, [(0, 2)]).is_err());
        assert!(sentiment_macro_f1(&ConfusionMatrix::with_classes(2)).is_err());
    }
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{da_weighted_f1, f1_per_class, macro_f1, sentiment_macro_f1, ClassScores, ConfusionMatrix};
use crate::corpus::{DialogActLabel, SentimentLabel};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScores {
    pub labels: Vec<String>,
    pub per_class: Vec<ClassScores>,
    pub confusion: ConfusionMatrix,
    pub scored: u64,
}

impl TaskScores {
    fn from_cm(cm: ConfusionMatrix) -> Self {
        Self {
            labels: cm.labels().to_vec(),
            per_class: f1_per_class(&cm),
            scored: cm.total(),
            confusion: cm,
        }
    }
}

/// Scores for both tasks over one evaluated set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sentiment_macro_f1: f64,
    /// Mean F1 over all three sentiment classes, reported alongside.
    pub sentiment_macro_f1_3class: f64,
    pub da_weighted_f1: f64,
    pub sentiment: TaskScores,
    pub dialog_act: TaskScores,
}

/// Scores (gold, predicted) pairs. Posts without a gold label for a task
/// are skipped for that task.
pub fn evaluate_pairs(
    pairs: impl IntoIterator<
        Item = (
            (Option<SentimentLabel>, Option<DialogActLabel>),
            (SentimentLabel, DialogActLabel),
        ),
    >,
) -> Result<MetricsReport> {
    let mut sent = ConfusionMatrix::new(SentimentLabel::ALL.iter().map(|s| s.name().to_owned()).collect());
    let mut da = ConfusionMatrix::new(DialogActLabel::ALL.iter().map(|d| d.code().to_string()).collect());
    for ((gs, gd), (ps, pd)) in pairs {
        if let Some(g) = gs {
            sent.add(g.index(), ps.index())?;
        }
        if let Some(g) = gd {
            da.add(g.index(), pd.index())?;
        }
    }
    Ok(MetricsReport {
        sentiment_macro_f1: sentiment_macro_f1(&sent)?,
        sentiment_macro_f1_3class: macro_f1(&sent),
        da_weighted_f1: da_weighted_f1(&da),
        sentiment: TaskScores::from_cm(sent),
        dialog_act: TaskScores::from_cm(da),
    })
}

impl MetricsReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Human-readable summary table.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "sentiment macro-F1 (pos/neg): {:.4}", self.sentiment_macro_f1);
        let _ = writeln!(out, "sentiment macro-F1 (3-class): {:.4}", self.sentiment_macro_f1_3class);
        let _ = writeln!(out, "dialog-act weighted F1:       {:.4}", self.da_weighted_f1);
        for (title, task) in [("sentiment", &self.sentiment), ("dialog act", &self.dialog_act)] {
            let _ = writeln!(out, "\n{title} ({} posts)", task.scored);
            let _ = writeln!(out, "{:<10} {:>9} {:>9} {:>9} {:>8}", "label", "precision", "recall", "f1", "support");
            for (l, c) in task.labels.iter().zip(&task.per_class) {
                let _ = writeln!(
                    out,
                    "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>8}",
                    l, c.precision, c.recall, c.f1, c.support
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        use DialogActLabel as D;
        use SentimentLabel as S;
        let data = [(S::Positive, D::I), (S::Negative, D::Q), (S::Neutral, D::A)];
        let r = evaluate_pairs(data.iter().map(|&(s, d)| ((Some(s), Some(d)), (s, d)))).unwrap();
        assert_eq!(r.sentiment_macro_f1, 1.0);
        assert_eq!(r.da_weighted_f1, 1.0);
        assert_eq!(r.sentiment.scored, 3);
        let json: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(json["da_weighted_f1"], 1.0);
        assert!(r.to_table().contains("dialog-act weighted F1"));
    }

    #[test]
    fn missing_gold_is_skipped() {
        use DialogActLabel as D;
        use SentimentLabel as S;
        let r = evaluate_pairs([((None, Some(D::I)), (S::Positive, D::I))]).unwrap();
        assert_eq!(r.sentiment.scored, 0);
        assert_eq!(r.dialog_act.scored, 1);
    }
}

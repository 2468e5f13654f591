//! Multi-task training with label masking, model selection over learning
//! rates, restarts and epochs, cross-validation and the label-budget
//! transfer experiments.

mod cv;
mod fit;
mod transfer;

pub use cv::{cross_validate, CvReport, FoldReport};
pub use fit::{fit, FitOutcome, FitReport, RunSummary};
pub use transfer::{
    budgeted_split, curve_csv, transfer_experiment, Budget, Regime, RunReport, TestScores, POOR_LABEL_CAP,
};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Var};
use crate::corpus::EncodedDialog;
use crate::error::{Error, Result};
use crate::metrics::{evaluate_pairs, MetricsReport};
use crate::model::{DialogOutputs, HierarchicalModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetTask {
    Sentiment,
    DialogAct,
}

impl fmt::Display for TargetTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetTask::Sentiment => "sentiment",
            TargetTask::DialogAct => "dialog_act",
        })
    }
}

impl TargetTask {
    /// The metric this task is judged by: sentiment macro-F1 over positive and
    /// negative, or prevalence-weighted dialog-act F1.
    pub fn score(self, report: &MetricsReport) -> f64 {
        match self {
            TargetTask::Sentiment => report.sentiment_macro_f1,
            TargetTask::DialogAct => report.da_weighted_f1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub sentiment: f64,
    pub dialog_act: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            sentiment: 1.0,
            dialog_act: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr_grid: Vec<f64>,
    pub max_epochs: usize,
    /// Random initializations per learning rate.
    pub restarts: usize,
    pub seed: u64,
    pub target_task: TargetTask,
    pub loss_weights: LossWeights,
    /// Stop a run after this many epochs without a dev improvement.
    pub patience: Option<usize>,
    /// Worker threads for independent runs. Results do not depend on it.
    pub jobs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr_grid: vec![0.1, 0.01, 0.001],
            max_epochs: 500,
            restarts: 2,
            seed: 1,
            target_task: TargetTask::Sentiment,
            loss_weights: LossWeights::default(),
            patience: None,
            jobs: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lr_grid.is_empty() || self.lr_grid.iter().any(|&lr| !(lr > 0.0 && lr.is_finite())) {
            return Err(Error::Validation(format!("bad learning-rate grid {:?}", self.lr_grid)));
        }
        if self.restarts == 0 || self.max_epochs == 0 || self.jobs == 0 {
            return Err(Error::Validation("restarts, max_epochs and jobs must be >= 1".into()));
        }
        let w = self.loss_weights;
        if !(w.sentiment >= 0.0 && w.dialog_act >= 0.0) || w.sentiment + w.dialog_act == 0.0 {
            return Err(Error::Validation(format!("bad loss weights {w:?}")));
        }
        Ok(())
    }
}

/// `Σ_posts w_s·CE(sentiment) + w_d·CE(dialog act)`, where a post without a
/// gold label for a task contributes nothing for that task. Returns `None`
/// when no term applies (the dialog carries no usable label).
pub fn multitask_loss(
    g: &mut Graph<'_>,
    outputs: &DialogOutputs,
    gold: &EncodedDialog,
    weights: LossWeights,
) -> Result<Option<Var>> {
    let n = g.dims(outputs.sentiment).0;
    if gold.len() != n || g.dims(outputs.dialog_act).0 != n {
        return Err(Error::Shape(format!("{} gold posts for {n} output rows", gold.len())));
    }
    let mut terms = Vec::with_capacity(2);
    let tasks = [
        (outputs.sentiment, gold.sentiment.iter().map(|s| s.map(|s| s.index())).collect::<Vec<_>>(), weights.sentiment),
        (outputs.dialog_act, gold.dialog_act.iter().map(|d| d.map(|d| d.index())).collect(), weights.dialog_act),
    ];
    for (logits, labels, w) in tasks {
        if w == 0.0 || labels.iter().all(Option::is_none) {
            continue;
        }
        let ce = g.cross_entropy_rows(logits, &labels)?;
        terms.push(if w == 1.0 { ce } else { g.scale(ce, w)? });
    }
    match terms.as_slice() {
        [] => Ok(None),
        [t] => Ok(Some(*t)),
        _ => g.sum(&terms).map(Some),
    }
}

/// Scores a model on dialogs with gold labels. Unlabeled posts are skipped
/// per task.
pub fn evaluate(model: &HierarchicalModel, dialogs: &[EncodedDialog]) -> Result<MetricsReport> {
    let mut pairs = Vec::new();
    for d in dialogs {
        let preds = model.predict(&d.posts)?;
        for (t, p) in preds.into_iter().enumerate() {
            pairs.push(((d.sentiment[t], d.dialog_act[t]), p));
        }
    }
    evaluate_pairs(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::ParamStore;
    use crate::corpus::{DialogActLabel, SentimentLabel};
    use crate::model::{Mode, ModelConfig};

    fn dialog(sent: Vec<Option<SentimentLabel>>, da: Vec<Option<DialogActLabel>>) -> EncodedDialog {
        EncodedDialog {
            posts: (0..sent.len()).map(|i| vec![1 + i % 3, 2]).collect(),
            sentiment: sent,
            dialog_act: da,
        }
    }

    fn model() -> HierarchicalModel {
        HierarchicalModel::new(ModelConfig::with_dims(6, 3, 0.0), 4).unwrap()
    }

    #[test]
    fn all_labels_absent_gives_no_loss() {
        let m = model();
        let d = dialog(vec![None, None], vec![None, None]);
        let mut g = Graph::new(&m.params);
        let out = m.forward(&mut g, &d.posts, Mode::Inference).unwrap();
        assert!(multitask_loss(&mut g, &out, &d, LossWeights::default()).unwrap().is_none());
    }

    #[test]
    fn zero_model_single_post_loss() {
        let mut m = model();
        for p in m.params.iter_mut() {
            p.value.fill(0.0);
        }
        let d = dialog(vec![Some(SentimentLabel::Negative)], vec![Some(DialogActLabel::W)]);
        let mut g = Graph::new(&m.params);
        let out = m.forward(&mut g, &d.posts, Mode::Inference).unwrap();
        let loss = multitask_loss(&mut g, &out, &d, LossWeights::default()).unwrap().unwrap();
        assert!((g.scalar(loss) - (3f64.ln() + 15f64.ln())).abs() < 1e-12);
    }

    fn loss_and_grads(m: &HierarchicalModel, d: &EncodedDialog, w: LossWeights) -> (f64, ParamStore) {
        let mut g = Graph::new(&m.params);
        let out = m.forward(&mut g, &d.posts, Mode::Inference).unwrap();
        let loss = multitask_loss(&mut g, &out, d, w).unwrap().unwrap();
        let grads = g.backward(loss).unwrap();
        let value = g.scalar(loss);
        let mut ps = m.params.clone();
        ps.zero_grads();
        ps.accumulate(&grads);
        (value, ps)
    }

    #[test]
    fn withheld_sentiment_equals_dialog_act_only_loss() {
        let m = model();
        use DialogActLabel as D;
        use SentimentLabel as S;
        let full = dialog(vec![Some(S::Positive), Some(S::Neutral)], vec![Some(D::Q), Some(D::W)]);
        let masked = EncodedDialog {
            sentiment: vec![None, None],
            ..full.clone()
        };
        let da_only = LossWeights {
            sentiment: 0.0,
            dialog_act: 1.0,
        };
        let (l1, g1) = loss_and_grads(&m, &masked, LossWeights::default());
        let (l2, g2) = loss_and_grads(&m, &full, da_only);
        assert_eq!(l1, l2);
        for (a, b) in g1.iter().zip(g2.iter()) {
            assert_eq!(a.grad, b.grad, "{}", a.name);
        }
    }

    #[test]
    fn misaligned_gold_is_an_error() {
        let m = model();
        let d = dialog(vec![Some(SentimentLabel::Positive)], vec![None]);
        let mut g = Graph::new(&m.params);
        let out = m.forward(&mut g, &[vec![1], vec![2]], Mode::Inference).unwrap();
        assert!(multitask_loss(&mut g, &out, &d, LossWeights::default()).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            lr_grid: vec![],
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            restarts: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}

use serde::{Deserialize, Serialize};

use super::{fit, FitReport, TrainConfig};
use crate::corpus::{encode_all, tree_folds, LinearDialog, Vocabulary};
use crate::error::Result;
use crate::model::ModelConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_size: usize,
    pub dev_size: usize,
    pub fit: FitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldReport>,
    pub mean_dev_metric: f64,
    pub mean_dev_size: f64,
}

/// Runs [`fit`] once per fold, each fold serving as dev for a model trained
/// on the others. Folds never split a reply tree.
pub fn cross_validate(
    dialogs: &[LinearDialog],
    vocab: &Vocabulary,
    model_config: &ModelConfig,
    config: &TrainConfig,
    folds: usize,
) -> Result<CvReport> {
    let assignment = tree_folds(dialogs, folds, config.seed)?;
    let encoded = encode_all(dialogs, vocab);
    let mut reports = Vec::with_capacity(folds);
    for (k, dev_idx) in assignment.iter().enumerate() {
        let mut in_dev = vec![false; dialogs.len()];
        for &i in dev_idx {
            in_dev[i] = true;
        }
        let dev: Vec<_> = dev_idx.iter().map(|&i| encoded[i].clone()).collect();
        let train: Vec<_> = (0..dialogs.len())
            .filter(|&i| !in_dev[i])
            .map(|i| encoded[i].clone())
            .collect();
        let fold_config = TrainConfig {
            seed: crate::rng::derive_seed(config.seed, k as u64),
            ..config.clone()
        };
        let outcome = fit(&train, &dev, model_config, &fold_config)?;
        reports.push(FoldReport {
            fold: k,
            train_size: train.len(),
            dev_size: dev.len(),
            fit: outcome.report,
        });
    }
    let n = reports.len() as f64;
    Ok(CvReport {
        mean_dev_metric: reports.iter().map(|r| r.fit.dev_metric).sum::<f64>() / n,
        mean_dev_size: reports.iter().map(|r| r.dev_size as f64).sum::<f64>() / n,
        folds: reports,
    })
}

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{evaluate, multitask_loss, TargetTask, TrainConfig};
use crate::autodiff::{sgd_step, Graph, ParamStore};
use crate::corpus::EncodedDialog;
use crate::error::{Error, Result};
use crate::model::{HierarchicalModel, Mode, ModelConfig};
use crate::rng;

/// Per-dialog losses above this abort the run as diverged.
pub const DIVERGENCE_LOSS: f64 = 1e6;

/// One (learning rate, restart) training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub lr: f64,
    pub restart: usize,
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_dev_metric: f64,
    /// Mean per-dialog training loss at each epoch.
    pub train_loss: Vec<f64>,
    pub diverged: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub target_task: TargetTask,
    pub lr: f64,
    pub restart: usize,
    pub epoch: usize,
    pub dev_metric: f64,
    pub runs: Vec<RunSummary>,
}

impl FitReport {
    pub fn diverged_runs(&self) -> usize {
        self.runs.iter().filter(|r| r.diverged.is_some()).count()
    }
}

pub struct FitOutcome {
    pub model: HierarchicalModel,
    pub report: FitReport,
}

struct RunResult {
    summary: RunSummary,
    best: Option<ParamStore>,
}

fn has_target_labels(dev: &[EncodedDialog], task: TargetTask) -> bool {
    dev.iter().any(|d| match task {
        TargetTask::Sentiment => d.sentiment.iter().any(Option::is_some),
        TargetTask::DialogAct => d.dialog_act.iter().any(Option::is_some),
    })
}

fn train_run(
    train: &[EncodedDialog],
    dev: &[EncodedDialog],
    model_config: &ModelConfig,
    config: &TrainConfig,
    lr: f64,
    restart: usize,
    run_index: usize,
) -> Result<RunResult> {
    let seed = rng::derive_seed(config.seed, run_index as u64);
    let mut model = HierarchicalModel::new(model_config.clone(), seed)?;
    let mut rng = rng::seeded(rng::derive_seed(seed, u64::MAX));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut summary = RunSummary {
        lr,
        restart,
        seed,
        epochs_run: 0,
        best_epoch: 0,
        best_dev_metric: f64::NEG_INFINITY,
        train_loss: Vec::new(),
        diverged: None,
    };
    let mut best = None;

    'epochs: for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &order {
            let d = &train[i];
            let step = (|| -> Result<Option<f64>> {
                let mut g = Graph::new(&model.params);
                let out = model.forward(&mut g, &d.posts, Mode::Train(&mut rng))?;
                let Some(loss) = multitask_loss(&mut g, &out, d, config.loss_weights)? else {
                    return Ok(None);
                };
                let value = g.scalar(loss);
                if !(value <= DIVERGENCE_LOSS) {
                    return Err(Error::Divergence(format!("loss {value} at epoch {epoch}")));
                }
                let grads = g.backward(loss)?;
                drop(g);
                model.params.accumulate(&grads);
                sgd_step(&mut model.params, lr)?;
                Ok(Some(value))
            })();
            match step {
                Ok(v) => total += v.unwrap_or(0.0),
                Err(e) if e.is_numeric() => {
                    summary.diverged = Some(e.to_string());
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
        }
        summary.epochs_run = epoch;
        summary.train_loss.push(total / train.len().max(1) as f64);

        let metric = match evaluate(&model, dev) {
            Ok(r) => config.target_task.score(&r),
            Err(e) if e.is_numeric() => {
                summary.diverged = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        if metric > summary.best_dev_metric {
            summary.best_dev_metric = metric;
            summary.best_epoch = epoch;
            best = Some(model.params.clone());
        }
        if metric >= 1.0 {
            // nothing later can beat a perfect dev score
            break;
        }
        if let Some(p) = config.patience {
            if epoch - summary.best_epoch >= p {
                break;
            }
        }
    }
    if summary.diverged.is_some() {
        best = None;
    }
    Ok(RunResult { summary, best })
}

/// Trains one model per (learning rate, restart) pair, tracking the dev score
/// of the target task after every epoch, and keeps the parameters of the
/// single best (run, epoch). Ties go to the earlier run and epoch.
///
/// Runs that diverge are recorded and skipped; if every run diverges the
/// result is [`Error::Divergence`]. Test data is never consulted.
pub fn fit(
    train: &[EncodedDialog],
    dev: &[EncodedDialog],
    model_config: &ModelConfig,
    config: &TrainConfig,
) -> Result<FitOutcome> {
    config.validate()?;
    model_config.validate()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::Validation("training and dev sets must be non-empty".into()));
    }
    if !has_target_labels(dev, config.target_task) {
        return Err(Error::Validation(format!(
            "dev set has no {} labels to select on",
            config.target_task
        )));
    }
    let runs: Vec<(usize, f64, usize)> = config
        .lr_grid
        .iter()
        .flat_map(|&lr| (0..config.restarts).map(move |r| (lr, r)))
        .enumerate()
        .map(|(i, (lr, r))| (i, lr, r))
        .collect();
    let exec = |&(i, lr, r): &(usize, f64, usize)| train_run(train, dev, model_config, config, lr, r, i);
    let results: Vec<Result<RunResult>> = if config.jobs > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
        pool.install(|| runs.par_iter().map(exec).collect())
    } else {
        runs.iter().map(exec).collect()
    };

    let mut summaries = Vec::with_capacity(results.len());
    let mut chosen: Option<(usize, ParamStore)> = None;
    for result in results {
        let RunResult { summary, best } = result?;
        if let Some(params) = best {
            let better = chosen
                .as_ref()
                .is_none_or(|(j, _)| summary.best_dev_metric > summaries_metric(&summaries, *j));
            if better {
                chosen = Some((summaries.len(), params));
            }
        }
        summaries.push(summary);
    }
    let Some((idx, params)) = chosen else {
        return Err(Error::Divergence(format!(
            "all {} runs diverged: {}",
            summaries.len(),
            summaries.iter().filter_map(|s| s.diverged.as_deref()).collect::<Vec<_>>().join("; ")
        )));
    };
    let s: &RunSummary = &summaries[idx];
    let report = FitReport {
        target_task: config.target_task,
        lr: s.lr,
        restart: s.restart,
        epoch: s.best_epoch,
        dev_metric: s.best_dev_metric,
        runs: summaries.clone(),
    };
    let model = HierarchicalModel::from_params(model_config.clone(), params)?;
    Ok(FitOutcome { model, report })
}

fn summaries_metric(summaries: &[RunSummary], i: usize) -> f64 {
    summaries[i].best_dev_metric
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{DialogActLabel as Da, SentimentLabel as S};

    fn toy() -> EncodedDialog {
        EncodedDialog {
            posts: vec![vec![1, 2, 3], vec![4, 5], vec![2, 6, 7, 1]],
            sentiment: vec![Some(S::Negative), Some(S::Positive), Some(S::Neutral)],
            dialog_act: vec![Some(Da::Q), Some(Da::A), Some(Da::I)],
        }
    }

    fn small_model() -> ModelConfig {
        ModelConfig::with_dims(8, 8, 0.0)
    }

    #[test]
    fn one_lr_one_restart_is_one_run() {
        let cfg = TrainConfig {
            lr_grid: vec![0.1],
            restarts: 1,
            max_epochs: 1,
            ..Default::default()
        };
        let out = fit(&[toy()], &[toy()], &small_model(), &cfg).unwrap();
        assert_eq!(out.report.runs.len(), 1);
        assert_eq!(out.report.runs[0].epochs_run, 1);
        assert_eq!(out.report.epoch, 1);
    }

    #[test]
    fn memorizes_a_single_dialog() {
        for target_task in [TargetTask::Sentiment, TargetTask::DialogAct] {
            let cfg = TrainConfig {
                max_epochs: 300,
                restarts: 1,
                target_task,
                ..Default::default()
            };
            let out = fit(&[toy()], &[toy()], &small_model(), &cfg).unwrap();
            assert_eq!(out.report.dev_metric, 1.0, "{target_task}");
            let r = evaluate(&out.model, &[toy()]).unwrap();
            assert_eq!(target_task.score(&r), 1.0);
        }
    }

    #[test]
    fn fixed_seed_is_reproducible_serial_and_parallel() {
        let cfg = TrainConfig {
            lr_grid: vec![0.1, 0.01],
            max_epochs: 5,
            ..Default::default()
        };
        let a = fit(&[toy()], &[toy()], &small_model(), &cfg).unwrap();
        let b = fit(&[toy()], &[toy()], &small_model(), &TrainConfig { jobs: 3, ..cfg.clone() }).unwrap();
        assert_eq!(a.report, b.report);
        for (pa, pb) in a.model.params.iter().zip(b.model.params.iter()) {
            assert_eq!(pa.value, pb.value);
        }
    }

    #[test]
    fn all_runs_diverging_is_an_error() {
        let cfg = TrainConfig {
            lr_grid: vec![1e12],
            restarts: 1,
            max_epochs: 3,
            ..Default::default()
        };
        let err = fit(&[toy()], &[toy()], &small_model(), &cfg).err().unwrap();
        assert!(err.is_numeric(), "{err}");
    }

    #[test]
    fn dev_without_target_labels_rejected() {
        let mut dev = toy();
        dev.sentiment = vec![None; 3];
        assert!(fit(&[toy()], &[dev], &small_model(), &TrainConfig::default()).is_err());
    }
}

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{evaluate, fit, LossWeights, TargetTask, TrainConfig};
use crate::corpus::{encode_all, LinearDialog, Vocabulary};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::rng;

/// Number of dialogs (training plus dev) that keep their labels for a task
/// in a "poor" regime.
pub const POOR_LABEL_CAP: usize = 38;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    BothRich,
    SentimentPoor,
    DialogActPoor,
    BothPoor,
    MonoTask,
}

impl Regime {
    pub const ALL: [Regime; 5] = [
        Regime::BothRich,
        Regime::SentimentPoor,
        Regime::DialogActPoor,
        Regime::BothPoor,
        Regime::MonoTask,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Regime::BothRich => "both-rich",
            Regime::SentimentPoor => "sentiment-poor",
            Regime::DialogActPoor => "dialog-act-poor",
            Regime::BothPoor => "both-poor",
            Regime::MonoTask => "mono-task",
        }
    }

    /// Label budgets at `b` selected dialogs.
    pub fn budget(self, b: usize) -> Budget {
        let poor = Some(b.min(POOR_LABEL_CAP));
        let (s, d) = match self {
            Regime::BothRich | Regime::MonoTask => (None, None),
            Regime::SentimentPoor => (poor, None),
            Regime::DialogActPoor => (None, poor),
            Regime::BothPoor => (poor, poor),
        };
        Budget {
            n_sentiment_dialogs: s,
            n_da_dialogs: d,
        }
    }

    /// The task selection is judged on. Regimes that starve one task report
    /// that task; the others defer to the configured target.
    pub fn target_task(self, configured: TargetTask) -> TargetTask {
        match self {
            Regime::SentimentPoor => TargetTask::Sentiment,
            Regime::DialogActPoor => TargetTask::DialogAct,
            _ => configured,
        }
    }

    /// Mono-task drops the auxiliary head from the loss.
    pub fn loss_weights(self, target: TargetTask, base: LossWeights) -> LossWeights {
        match (self, target) {
            (Regime::MonoTask, TargetTask::Sentiment) => LossWeights {
                dialog_act: 0.0,
                ..base
            },
            (Regime::MonoTask, TargetTask::DialogAct) => LossWeights {
                sentiment: 0.0,
                ..base
            },
            _ => base,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| {
                Error::Validation(format!(
                    "unknown regime {s:?} (expected one of {})",
                    Regime::ALL.map(Regime::name).join(", ")
                ))
            })
    }
}

/// How many selected dialogs keep each task's labels. `None` is unlimited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub n_sentiment_dialogs: Option<usize>,
    pub n_da_dialogs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestScores {
    pub sent_f1: f64,
    pub da_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub regime: Regime,
    pub budget: usize,
    pub label_budget: Budget,
    pub seed: u64,
    pub target_task: TargetTask,
    pub lr: f64,
    pub epoch: usize,
    pub dev_metric: f64,
    pub train_size: usize,
    pub dev_size: usize,
    pub diverged_runs: usize,
    pub test: TestScores,
}

/// Carves a budgeted training/dev pair out of `pool`.
///
/// Trees are shuffled with `seed` and their dialogs taken in that order until
/// `b` are selected. Whole trees from the end of the selection form the dev
/// set (about a tenth of `b`, at least one dialog); when that would leave no
/// training data, dev is the training set itself. Each task's labels survive
/// on the first `n` dialogs of dev followed by training, where `n` comes from
/// the regime's budget, and are removed everywhere else.
pub fn budgeted_split(
    pool: &[LinearDialog],
    b: usize,
    regime: Regime,
    seed: u64,
) -> Result<(Vec<LinearDialog>, Vec<LinearDialog>)> {
    if b == 0 || b > pool.len() {
        return Err(Error::Validation(format!(
            "budget {b} outside 1..={} available dialogs",
            pool.len()
        )));
    }
    let mut trees: Vec<&str> = Vec::new();
    let mut by_tree: HashMap<&str, Vec<&LinearDialog>> = HashMap::new();
    for d in pool {
        by_tree
            .entry(d.source_tree_id.as_str())
            .or_insert_with(|| {
                trees.push(d.source_tree_id.as_str());
                Vec::new()
            })
            .push(d);
    }
    trees.shuffle(&mut rng::seeded(seed));

    // selected dialogs grouped by tree, in selection order
    let mut groups: Vec<Vec<LinearDialog>> = Vec::new();
    let mut taken = 0;
    for t in &trees {
        if taken == b {
            break;
        }
        let group: Vec<LinearDialog> = by_tree[t].iter().take(b - taken).map(|d| (*d).clone()).collect();
        taken += group.len();
        groups.push(group);
    }

    let want_dev = ((b as f64 / 10.0).round() as usize).max(1);
    let mut dev_groups = 0;
    let mut dev_count = 0;
    while dev_count < want_dev && dev_groups < groups.len() {
        dev_count += groups[groups.len() - 1 - dev_groups].len();
        dev_groups += 1;
    }
    let (mut train, mut dev): (Vec<LinearDialog>, Vec<LinearDialog>) = if dev_groups == groups.len() {
        let all: Vec<LinearDialog> = groups.into_iter().flatten().collect();
        (all.clone(), all)
    } else {
        let split = groups.len() - dev_groups;
        let dev = groups.split_off(split).into_iter().flatten().collect();
        (groups.into_iter().flatten().collect(), dev)
    };

    let budget = regime.budget(b);
    let same = train == dev;
    withhold(&mut dev, &mut train, same, budget);
    Ok((train, dev))
}

fn withhold(dev: &mut [LinearDialog], train: &mut [LinearDialog], same: bool, budget: Budget) {
    let strip = |dialogs: &mut [LinearDialog], keep: usize, sentiment: bool| {
        for d in dialogs.iter_mut().skip(keep) {
            for p in &mut d.posts {
                if sentiment {
                    p.sentiment = None;
                } else {
                    p.dialog_act = None;
                }
            }
        }
    };
    for (limit, sentiment) in [(budget.n_sentiment_dialogs, true), (budget.n_da_dialogs, false)] {
        let Some(n) = limit else { continue };
        if same {
            strip(dev, n, sentiment);
            strip(train, n, sentiment);
        } else {
            let in_dev = n.min(dev.len());
            strip(dev, in_dev, sentiment);
            strip(train, n - in_dev, sentiment);
        }
    }
}

/// Trains one model per budget point under `regime` and scores it on `test`.
///
/// Test data is touched once per point, after model selection.
pub fn transfer_experiment(
    pool: &[LinearDialog],
    test: &[LinearDialog],
    vocab: &Vocabulary,
    regime: Regime,
    budgets: &[usize],
    model_config: &ModelConfig,
    config: &TrainConfig,
) -> Result<Vec<RunReport>> {
    if budgets.is_empty() {
        return Err(Error::Validation("budget list is empty".into()));
    }
    if budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation(format!("budgets {budgets:?} must be strictly ascending")));
    }
    if let Some(&b) = budgets.iter().find(|&&b| b == 0 || b > pool.len()) {
        return Err(Error::Validation(format!(
            "budget {b} outside 1..={} available dialogs",
            pool.len()
        )));
    }
    if test.is_empty() {
        return Err(Error::Validation("test set is empty".into()));
    }
    let target = regime.target_task(config.target_task);
    let run_config = TrainConfig {
        target_task: target,
        loss_weights: regime.loss_weights(target, config.loss_weights),
        ..config.clone()
    };
    let test_enc = encode_all(test, vocab);
    let mut out = Vec::with_capacity(budgets.len());
    for &b in budgets {
        let (train, dev) = budgeted_split(pool, b, regime, config.seed)?;
        let outcome = fit(&encode_all(&train, vocab), &encode_all(&dev, vocab), model_config, &run_config)?;
        let scores = evaluate(&outcome.model, &test_enc)?;
        out.push(RunReport {
            regime,
            budget: b,
            label_budget: regime.budget(b),
            seed: config.seed,
            target_task: target,
            lr: outcome.report.lr,
            epoch: outcome.report.epoch,
            dev_metric: outcome.report.dev_metric,
            train_size: train.len(),
            dev_size: dev.len(),
            diverged_runs: outcome.report.diverged_runs(),
            test: TestScores {
                sent_f1: scores.sentiment_macro_f1,
                da_f1: scores.da_weighted_f1,
            },
        });
    }
    Ok(out)
}

/// Renders reports as `regime,budget,seed,lr,epoch,sent_f1,da_f1` rows.
pub fn curve_csv(reports: &[RunReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["regime", "budget", "seed", "lr", "epoch", "sent_f1", "da_f1"])?;
    for r in reports {
        w.write_record([
            r.regime.to_string(),
            r.budget.to_string(),
            r.seed.to_string(),
            r.lr.to_string(),
            r.epoch.to_string(),
            format!("{:.6}", r.test.sent_f1),
            format!("{:.6}", r.test.da_f1),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

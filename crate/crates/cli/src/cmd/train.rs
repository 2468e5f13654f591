use serde::Serialize;

use dialsent_core::config::ExperimentConfig;
use dialsent_core::corpus::{encode_all, tree_folds, write_prediction_tsv, LinearDialog, Vocabulary};
use dialsent_core::metrics::MetricsReport;
use dialsent_core::training::{evaluate, fit, FitReport};
use dialsent_core::autodiff::write_checkpoint;

use crate::data::{load_dialogs, require};
use crate::settings::resolve_config;
use crate::{CliResult, ExperimentArgs, RunDir};

#[derive(Debug, Serialize)]
pub struct TrainReport {
    pub train_dialogs: usize,
    pub dev_dialogs: usize,
    pub dev_source: String,
    pub vocabulary: usize,
    pub parameters: usize,
    pub fit: FitReport,
    pub dev: MetricsReport,
    pub test: Option<MetricsReport>,
}

/// Uses the dev corpus when given, otherwise holds out the first of
/// `folds` tree-level folds of the training data.
fn split_dev(
    config: &ExperimentConfig,
    train: Vec<LinearDialog>,
) -> CliResult<(Vec<LinearDialog>, Vec<LinearDialog>, String)> {
    if let Some(path) = &config.dev_corpus {
        let dev = load_dialogs(path, config.lowercase)?;
        return Ok((train, dev, path.display().to_string()));
    }
    let folds = tree_folds(&train, config.folds, config.seed)?;
    let mut is_dev = vec![false; train.len()];
    for &i in &folds[0] {
        is_dev[i] = true;
    }
    let (dev, rest): (Vec<_>, Vec<_>) = train.into_iter().zip(is_dev).partition(|(_, d)| *d);
    Ok((
        rest.into_iter().map(|(d, _)| d).collect(),
        dev.into_iter().map(|(d, _)| d).collect(),
        format!("fold 0 of {}", config.folds),
    ))
}

pub fn run(a: ExperimentArgs) -> CliResult {
    let config = resolve_config(&a, std::env::vars())?;
    let train_all = load_dialogs(require(&config.train_corpus, "train_corpus")?, config.lowercase)?;
    let (train, dev, dev_source) = split_dev(&config, train_all)?;
    let vocab = Vocabulary::build(&train, config.min_count)?;
    let model_config = config.model_config(vocab.len());
    let outcome = fit(&encode_all(&train, &vocab), &encode_all(&dev, &vocab), &model_config, &config.train)?;
    let dev_scores = evaluate(&outcome.model, &encode_all(&dev, &vocab))?;

    let mut dir = RunDir::create(&config.out_dir, "train")?;
    dir.write("config.txt", config.to_key_values())?;
    dir.write("vocab.txt", vocab.to_text())?;
    dir.write("model.cfg", model_config.to_key_values())?;
    dir.write("checkpoint.txt", write_checkpoint(&outcome.model.params))?;

    let test = match &config.test_corpus {
        None => None,
        Some(path) => {
            let test = load_dialogs(path, config.lowercase)?;
            let encoded = encode_all(&test, &vocab);
            let predictions = encoded
                .iter()
                .map(|d| outcome.model.predict(&d.posts))
                .collect::<dialsent_core::Result<Vec<_>>>()?;
            dir.write("test_predictions.tsv", write_prediction_tsv(&test, &predictions))?;
            Some(evaluate(&outcome.model, &encoded)?)
        }
    };
    let report = TrainReport {
        train_dialogs: train.len(),
        dev_dialogs: dev.len(),
        dev_source,
        vocabulary: vocab.len(),
        parameters: outcome.model.parameter_count(),
        fit: outcome.report,
        dev: dev_scores,
        test,
    };
    dir.write_json("report.json", &report)?;
    println!(
        "selected lr {} restart {} epoch {}: dev {} {:.4}",
        report.fit.lr, report.fit.restart, report.fit.epoch, report.fit.target_task, report.fit.dev_metric
    );
    if let Some(t) = &report.test {
        print!("test\n{}", t.to_table());
    }
    dir.finish(serde_json::json!({ "seed": config.seed, "diverged_runs": report.fit.diverged_runs() }))
}

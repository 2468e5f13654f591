use std::path::PathBuf;

use clap::Args;

use dialsent_core::autodiff::read_checkpoint;
use dialsent_core::config::KeyValues;
use dialsent_core::corpus::{encode_all, read_linear_tsv, write_prediction_tsv, Vocabulary};
use dialsent_core::metrics::{evaluate_pairs, MetricsReport};
use dialsent_core::model::{HierarchicalModel, ModelConfig};
use dialsent_core::Error;

use crate::data::load_dialogs;
use crate::{CliError, CliResult, RunDir};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Directory written by `train` (checkpoint, model config, vocabulary).
    #[arg(long, requires = "test", conflicts_with = "predictions")]
    pub model: Option<PathBuf>,
    /// Corpus to score with `--model`.
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Linearized TSV with predicted-label columns to score directly.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn read(path: &std::path::Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e).into())
}

pub fn load_model(dir: &std::path::Path) -> CliResult<(HierarchicalModel, Vocabulary, bool)> {
    let config = ModelConfig::from_key_values(&read(&dir.join("model.cfg"))?)?;
    let params = read_checkpoint(&read(&dir.join("checkpoint.txt"))?)?;
    let vocab = Vocabulary::load(&dir.join("vocab.txt"))?;
    let lowercase = match dir.join("config.txt") {
        p if p.exists() => KeyValues::load(&p)?.get_or("lowercase", false)?,
        _ => false,
    };
    if vocab.len() != config.vocab_size {
        return Err(Error::Validation(format!(
            "vocabulary has {} entries, model expects {}",
            vocab.len(),
            config.vocab_size
        ))
        .into());
    }
    Ok((HierarchicalModel::from_params(config, params)?, vocab, lowercase))
}

pub fn run(a: EvalArgs) -> CliResult {
    let mut dir = RunDir::create(&a.out, "eval")?;
    let report: MetricsReport = match (&a.model, &a.test, &a.predictions) {
        (Some(model_dir), Some(test), None) => {
            let (model, vocab, lowercase) = load_model(model_dir)?;
            let dialogs = load_dialogs(test, lowercase)?;
            let encoded = encode_all(&dialogs, &vocab);
            let predictions = encoded
                .iter()
                .map(|d| model.predict(&d.posts))
                .collect::<dialsent_core::Result<Vec<_>>>()?;
            dir.write("predictions.tsv", write_prediction_tsv(&dialogs, &predictions))?;
            evaluate_pairs(dialogs.iter().zip(&predictions).flat_map(|(d, p)| {
                d.posts.iter().zip(p).map(|(post, &pred)| ((post.sentiment, post.dialog_act), pred))
            }))?
        }
        (None, None, Some(path)) => {
            let records = read_linear_tsv(path)?;
            let mut pairs = Vec::new();
            for r in &records {
                let preds = r.predictions.as_ref().ok_or_else(|| {
                    Error::Validation(format!("{}: branch {} has no prediction columns", path.display(), r.dialog.id))
                })?;
                for (post, &pred) in r.dialog.posts.iter().zip(preds) {
                    pairs.push(((post.sentiment, post.dialog_act), pred));
                }
            }
            evaluate_pairs(pairs)?
        }
        _ => return Err(CliError::usage("give either --model with --test, or --predictions")),
    };
    dir.write("metrics.json", report.to_json()? + "\n")?;
    let table = report.to_table();
    dir.write("metrics.txt", &table)?;
    print!("{table}");
    dir.finish(serde_json::json!({}))
}

use std::fmt::Write as _;

use dialsent_core::corpus::Vocabulary;
use dialsent_core::training::{curve_csv, transfer_experiment};

use crate::data::{load_dialogs, require};
use crate::settings::resolve_config;
use crate::{CliResult, ExperimentArgs, RunDir};

pub fn run(a: ExperimentArgs) -> CliResult {
    let config = resolve_config(&a, std::env::vars())?;
    let pool = load_dialogs(require(&config.train_corpus, "train_corpus")?, config.lowercase)?;
    let test = load_dialogs(require(&config.test_corpus, "test_corpus")?, config.lowercase)?;
    // token text carries no labels, so the whole pool defines the vocabulary
    let vocab = Vocabulary::build(&pool, config.min_count)?;
    let reports = transfer_experiment(
        &pool,
        &test,
        &vocab,
        config.regime,
        &config.budgets,
        &config.model_config(vocab.len()),
        &config.train,
    )?;
    let mut dir = RunDir::create(&config.out_dir, "transfer")?;
    dir.write("config.txt", config.to_key_values())?;
    dir.write("vocab.txt", vocab.to_text())?;
    dir.write("curve.csv", curve_csv(&reports)?)?;
    dir.write_json("runs.json", &reports)?;
    let mut table = String::from("regime           budget  lr      epoch  sent_f1  da_f1\n");
    for r in &reports {
        let _ = writeln!(
            table,
            "{:<16} {:>6}  {:<6}  {:>5}  {:.4}   {:.4}",
            r.regime.name(),
            r.budget,
            r.lr,
            r.epoch,
            r.test.sent_f1,
            r.test.da_f1
        );
    }
    print!("{table}");
    dir.finish(serde_json::json!({ "seed": config.seed, "regime": config.regime.name() }))
}

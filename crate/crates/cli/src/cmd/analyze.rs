use std::path::PathBuf;

use clap::Args;

use dialsent_core::analysis::{agreement_table, change_rates, positional_sentiment, TransitionTable};

use crate::data::load_dialogs;
use crate::{CliResult, RunDir};

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Fully labeled tree-TSV or CSV corpus.
    pub input: PathBuf,
    /// Additive smoothing for the transition probabilities.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(a: AnalyzeArgs) -> CliResult {
    let dialogs = load_dialogs(&a.input, false)?;
    let table = TransitionTable::build(&dialogs, a.alpha)?;
    let rates = change_rates(&dialogs);
    let positional = positional_sentiment(&dialogs);
    let agreement = agreement_table(&table.agreement_report());

    let mut dir = RunDir::create(&a.out, "analyze")?;
    dir.write("transitions.csv", table.to_csv()?)?;
    dir.write("transitions_plot.csv", table.to_plot_csv()?)?;
    dir.write("agreement.txt", &agreement)?;
    dir.write_json("change_rates.json", &rates)?;
    dir.write("positional.csv", positional.to_csv()?)?;
    println!(
        "change rate: sentiment {:.4} over {} pairs, dialog act {:.4} over {} pairs",
        rates.sentiment, rates.sentiment_pairs, rates.dialog_act, rates.dialog_act_pairs
    );
    print!("{agreement}");
    dir.finish(serde_json::json!({ "input": a.input.display().to_string(), "alpha": a.alpha }))
}

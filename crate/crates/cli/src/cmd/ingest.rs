use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use dialsent_core::corpus::{
    linearize_all, write_linear_tsv, write_tree_tsv, DialogActLabel, DialogTree, SentimentLabel, Vocabulary,
};

use crate::data::load_trees;
use crate::{CliResult, RunDir};

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Tree-TSV corpus, or a headered CSV export (`.csv`).
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Minimum token count for the vocabulary.
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
}

#[derive(Debug, Serialize)]
pub struct LabelShare {
    pub label: String,
    pub count: u64,
    pub percent: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_percent: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct CorpusStats {
    pub trees: usize,
    pub dialogs: usize,
    /// Distinct posts kept after dropping removed dialog acts.
    pub posts: usize,
    pub removed_posts: usize,
    /// Posts summed over dialogs, shared prefixes counted once per branch.
    pub linearized_posts: usize,
    pub vocabulary: usize,
    pub sentiment: Vec<LabelShare>,
    pub dialog_act: Vec<LabelShare>,
    pub withheld_sentiment: u64,
    pub withheld_dialog_act: u64,
}

fn shares(counts: &[u64], names: impl Iterator<Item = String>, reference: Option<&[f64]>) -> Vec<LabelShare> {
    let total: u64 = counts.iter().sum();
    names
        .zip(counts)
        .enumerate()
        .map(|(i, (label, &count))| LabelShare {
            label,
            count,
            percent: if total == 0 { 0.0 } else { 100.0 * count as f64 / total as f64 },
            reference_percent: reference.map(|r| r[i]),
        })
        .collect()
}

pub fn corpus_stats(trees: &[DialogTree], min_count: usize) -> dialsent_core::Result<CorpusStats> {
    let dialogs = linearize_all(trees);
    let vocab = Vocabulary::build(&dialogs, min_count)?;
    let kept: BTreeSet<&str> = dialogs.iter().flat_map(|d| d.post_ids()).collect();
    let mut sent = [0u64; 3];
    let mut da = [0u64; DialogActLabel::COUNT];
    let (mut ws, mut wd, mut removed) = (0, 0, 0);
    for t in trees {
        for p in t.posts() {
            if p.removed {
                removed += 1;
                continue;
            }
            match p.sentiment {
                Some(s) => sent[s.index()] += 1,
                None => ws += 1,
            }
            match p.dialog_act {
                Some(d) => da[d.index()] += 1,
                None => wd += 1,
            }
        }
    }
    Ok(CorpusStats {
        trees: trees.len(),
        dialogs: dialogs.len(),
        posts: kept.len(),
        removed_posts: removed,
        linearized_posts: dialogs.iter().map(|d| d.len()).sum(),
        vocabulary: vocab.len() - 1,
        sentiment: shares(&sent, SentimentLabel::ALL.iter().map(|s| s.name().to_owned()), None),
        dialog_act: shares(
            &da,
            DialogActLabel::ALL.iter().map(|d| d.code().to_string()),
            Some(&DialogActLabel::CORPUS_PERCENT),
        ),
        withheld_sentiment: ws,
        withheld_dialog_act: wd,
    })
}

pub fn stats_table(s: &CorpusStats) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "trees {}  dialogs {}  posts {}  removed {}", s.trees, s.dialogs, s.posts, s.removed_posts);
    let _ = writeln!(out, "linearized posts {}  vocabulary {}", s.linearized_posts, s.vocabulary);
    let _ = writeln!(out, "\nsentiment      count      %");
    for l in &s.sentiment {
        let _ = writeln!(out, "{:<10} {:>9} {:>6.1}", l.label, l.count, l.percent);
    }
    let _ = writeln!(out, "\ndialog act     count      %   corpus %");
    for l in &s.dialog_act {
        let _ = writeln!(
            out,
            "{:<10} {:>9} {:>6.1} {:>10.1}",
            l.label,
            l.count,
            l.percent,
            l.reference_percent.unwrap_or(f64::NAN)
        );
    }
    out
}

pub fn run(a: IngestArgs) -> CliResult {
    let trees = load_trees(&a.input)?;
    let dialogs = linearize_all(&trees);
    let vocab = Vocabulary::build(&dialogs, a.min_count)?;
    let stats = corpus_stats(&trees, a.min_count)?;
    let mut dir = RunDir::create(&a.out, "ingest")?;
    dir.write("trees.tsv", write_tree_tsv(&trees))?;
    dir.write("dialogs.tsv", write_linear_tsv(&dialogs))?;
    dir.write("vocab.txt", vocab.to_text())?;
    dir.write_json("stats.json", &stats)?;
    let table = stats_table(&stats);
    dir.write("stats.txt", &table)?;
    print!("{table}");
    dir.finish(serde_json::json!({ "input": a.input.display().to_string(), "min_count": a.min_count }))
}

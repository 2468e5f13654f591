//! Tree-TSV corpus format and the linearized variant.
//!
//! Tree-TSV, one post per line, six tab-separated columns:
//!
//! ```text
//! tree_id  post_id  reply_to|-  sentiment(+|-|*|?)  dialog_act(27 codes|?)  tokens
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. `?` marks a withheld
//! label. The linearized format prefixes `branch_id` and a 0-based
//! `turn_index`; prediction files append predicted sentiment and dialog act.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::labels::{parse_da_field, parse_sentiment_field, DaAnnotation, DialogActLabel, SentimentLabel};
use super::tree::{build_trees, DialogTree, LabeledPost, LinearDialog};
use crate::error::{Error, Result};

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_post(cols: &[&str], origin: &str, line: usize) -> Result<LabeledPost> {
    let at = |message: String| Error::Parse {
        path: origin.to_owned(),
        line,
        message,
    };
    let [post_id, reply_to, sent, da, text] = cols else {
        unreachable!("caller passes five columns")
    };
    if post_id.is_empty() {
        return Err(at("empty post_id".into()));
    }
    let sentiment = parse_sentiment_field(sent).map_err(|e| at(e.to_string()))?;
    let (dialog_act, removed) = match parse_da_field(da).map_err(|e| at(e.to_string()))? {
        DaAnnotation::Label(l) => (Some(l), false),
        DaAnnotation::Removed => (None, true),
        DaAnnotation::Withheld => (None, false),
    };
    let tokens: Vec<String> = text.split(' ').filter(|t| !t.is_empty()).map(str::to_owned).collect();
    if tokens.is_empty() {
        return Err(at(format!("post {post_id} has no tokens")));
    }
    Ok(LabeledPost {
        post_id: (*post_id).to_owned(),
        reply_to: (*reply_to != "-").then(|| (*reply_to).to_owned()),
        tokens,
        sentiment,
        dialog_act,
        removed,
    })
}

/// Parses tree-TSV text. `origin` names the source in error messages.
pub fn parse_tree_tsv(text: &str, origin: &str) -> Result<Vec<DialogTree>> {
    let mut rows = Vec::new();
    for (line, l) in content_lines(text) {
        let cols: Vec<&str> = l.splitn(6, '\t').collect();
        if cols.len() != 6 {
            return Err(Error::Parse {
                path: origin.to_owned(),
                line,
                message: format!("expected 6 tab-separated columns, found {}", cols.len()),
            });
        }
        if cols[0].is_empty() {
            return Err(Error::Parse {
                path: origin.to_owned(),
                line,
                message: "empty tree_id".into(),
            });
        }
        rows.push((cols[0].to_owned(), parse_post(&cols[1..], origin, line)?));
    }
    build_trees(rows)
}

/// Reads a tree-TSV corpus file.
pub fn parse_corpus(path: &Path) -> Result<Vec<DialogTree>> {
    parse_tree_tsv(&read(path)?, &path.display().to_string())
}

fn sent_code(s: Option<SentimentLabel>) -> char {
    s.map_or('?', SentimentLabel::code)
}

fn da_code(p: &LabeledPost) -> char {
    if p.removed {
        'Z'
    } else {
        p.dialog_act.map_or('?', DialogActLabel::code)
    }
}

fn push_post(out: &mut String, p: &LabeledPost) {
    let _ = write!(
        out,
        "{}\t{}\t{}\t{}\t{}",
        p.post_id,
        p.reply_to.as_deref().unwrap_or("-"),
        sent_code(p.sentiment),
        da_code(p),
        p.tokens.join(" ")
    );
}

/// Serializes trees back to tree-TSV. Merged labels are written in their
/// retained form; removed dialog acts are written as `Z`.
pub fn write_tree_tsv(trees: &[DialogTree]) -> String {
    let mut out = String::new();
    for t in trees {
        for p in t.posts() {
            let _ = write!(out, "{}\t", t.id);
            push_post(&mut out, p);
            out.push('\n');
        }
    }
    out
}

pub fn write_linear_tsv(dialogs: &[LinearDialog]) -> String {
    write_linear_impl(dialogs, None)
}

/// Linearized TSV with two extra columns holding predicted labels.
pub fn write_prediction_tsv(
    dialogs: &[LinearDialog],
    predictions: &[Vec<(SentimentLabel, DialogActLabel)>],
) -> String {
    write_linear_impl(dialogs, Some(predictions))
}

fn write_linear_impl(
    dialogs: &[LinearDialog],
    predictions: Option<&[Vec<(SentimentLabel, DialogActLabel)>]>,
) -> String {
    let mut out = String::new();
    for (d_idx, d) in dialogs.iter().enumerate() {
        for (t, p) in d.posts.iter().enumerate() {
            let _ = write!(out, "{}\t{}\t{}\t", d.id, t, d.source_tree_id);
            push_post(&mut out, p);
            if let Some(preds) = predictions {
                let (s, a) = preds[d_idx][t];
                let _ = write!(out, "\t{}\t{}", s.code(), a.code());
            }
            out.push('\n');
        }
    }
    out
}

/// A linearized dialog read back from disk, optionally with predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRecord {
    pub dialog: LinearDialog,
    pub predictions: Option<Vec<(SentimentLabel, DialogActLabel)>>,
}

/// Parses linearized TSV (8 columns) or prediction TSV (10 columns).
pub fn parse_linear_tsv(text: &str, origin: &str) -> Result<Vec<LinearRecord>> {
    let mut records: Vec<LinearRecord> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    for (line, l) in content_lines(text) {
        let at = |message: String| Error::Parse {
            path: origin.to_owned(),
            line,
            message,
        };
        let cols: Vec<&str> = l.split('\t').collect();
        if cols.len() != 8 && cols.len() != 10 {
            return Err(at(format!("expected 8 or 10 tab-separated columns, found {}", cols.len())));
        }
        let turn: usize = cols[1]
            .parse()
            .map_err(|_| at(format!("bad turn index {:?}", cols[1])))?;
        let post = parse_post(&cols[3..8], origin, line)?;
        let pred = if cols.len() == 10 {
            let s = parse_sentiment_field(cols[8])
                .map_err(|e| at(e.to_string()))?
                .ok_or_else(|| at("predicted sentiment cannot be withheld".into()))?;
            let a = match parse_da_field(cols[9]).map_err(|e| at(e.to_string()))? {
                DaAnnotation::Label(l) => l,
                _ => return Err(at("predicted dialog act must be a retained label".into())),
            };
            Some((s, a))
        } else {
            None
        };
        let idx = *by_id.entry(cols[0].to_owned()).or_insert_with(|| {
            records.push(LinearRecord {
                dialog: LinearDialog {
                    id: cols[0].to_owned(),
                    source_tree_id: cols[2].to_owned(),
                    leaf_id: String::new(),
                    posts: Vec::new(),
                },
                predictions: pred.map(|_| Vec::new()),
            });
            records.len() - 1
        });
        let rec = &mut records[idx];
        if turn != rec.dialog.posts.len() {
            return Err(at(format!(
                "branch {} expects turn {}, found {turn}",
                cols[0],
                rec.dialog.posts.len()
            )));
        }
        match (&mut rec.predictions, pred) {
            (Some(v), Some(p)) => v.push(p),
            (None, None) => {}
            _ => return Err(at("mixed prediction and plain rows in one branch".into())),
        }
        rec.dialog.leaf_id = post.post_id.clone();
        rec.dialog.posts.push(post);
    }
    Ok(records)
}

pub fn read_linear_tsv(path: &Path) -> Result<Vec<LinearRecord>> {
    parse_linear_tsv(&read(path)?, &path.display().to_string())
}

/// Converts a headered CSV export (columns `tree_id`, `post_id`, `reply_to`,
/// `sentiment`, `dialog_act`, `text`) into trees. Text is split on whitespace.
pub fn convert_csv(path: &Path) -> Result<Vec<DialogTree>> {
    #[derive(serde::Deserialize)]
    struct Row {
        tree_id: String,
        post_id: String,
        reply_to: Option<String>,
        sentiment: String,
        dialog_act: String,
        text: String,
    }
    let origin = path.display().to_string();
    let mut reader = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row?;
        let reply = row.reply_to.filter(|r| !r.is_empty()).unwrap_or_else(|| "-".into());
        let text = row.text.split_whitespace().collect::<Vec<_>>().join(" ");
        let cols = [
            row.post_id.as_str(),
            reply.as_str(),
            row.sentiment.trim(),
            row.dialog_act.trim(),
            text.as_str(),
        ];
        rows.push((row.tree_id, parse_post(&cols, &origin, i + 2)?));
    }
    build_trees(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::linearize_all;

    #[test]
    fn singleton_tree() {
        let trees = parse_tree_tsv("d1\tp1\t-\t-\tI\thello world\n", "mem").unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].len(), 1);
        let p = trees[0].root();
        assert_eq!(p.tokens, ["hello", "world"]);
        assert_eq!(p.sentiment, Some(SentimentLabel::Negative));
        assert_eq!(p.dialog_act, Some(DialogActLabel::I));
    }

    #[test]
    fn comments_blank_lines_and_withheld() {
        let text = "# header\n\nd1\tp1\t-\t?\t?\ta\nd1\tp2\tp1\t+\tY\tb c\n";
        let trees = parse_tree_tsv(text, "mem").unwrap();
        let p1 = trees[0].get("p1").unwrap();
        assert_eq!((p1.sentiment, p1.dialog_act), (None, None));
        assert_eq!(trees[0].get("p2").unwrap().dialog_act, Some(DialogActLabel::A));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_tree_tsv("d1\tp1\t-\t-\tI\n", "f.tsv").unwrap_err();
        assert!(err.to_string().starts_with("f.tsv:1:"), "{err}");
        let err = parse_tree_tsv("\nd1\tp1\t-\t!\tI\tx\n", "f.tsv").unwrap_err();
        assert!(err.to_string().starts_with("f.tsv:2:"), "{err}");
        let err = parse_tree_tsv("d1\tp1\t-\t-\tI\t  \n", "f.tsv").unwrap_err();
        assert!(err.to_string().contains("no tokens"), "{err}");
        let err = parse_tree_tsv("d1\tp1\t-\t-\tI\tx\nd1\tp3\tp9\t-\tI\ty\n", "f").unwrap_err();
        assert!(err.to_string().contains("dangling reply_to p9"), "{err}");
    }

    #[test]
    fn removed_codes_are_kept_in_tree_and_dropped_in_branches() {
        let text = "d\ta\t-\t-\tI\tx\nd\tb\ta\t-\tU\ty\nd\tc\tb\t+\tA\tz\n";
        let trees = parse_tree_tsv(text, "mem").unwrap();
        assert!(trees[0].get("b").unwrap().removed);
        let dialogs = linearize_all(&trees);
        assert_eq!(dialogs[0].post_ids().collect::<Vec<_>>(), ["a", "c"]);
        // round trip keeps the removal marker
        let again = parse_tree_tsv(&write_tree_tsv(&trees), "mem").unwrap();
        assert_eq!(again, trees);
    }

    #[test]
    fn linear_round_trip_with_predictions() {
        let text = "d\ta\t-\t-\tI\tx\nd\tb\ta\t+\tQ\ty y\nd\tc\ta\t*\tA\tz\n";
        let dialogs = linearize_all(&parse_tree_tsv(text, "mem").unwrap());
        let plain = parse_linear_tsv(&write_linear_tsv(&dialogs), "mem").unwrap();
        assert_eq!(plain.iter().map(|r| r.dialog.clone()).collect::<Vec<_>>(), dialogs);
        assert!(plain.iter().all(|r| r.predictions.is_none()));

        let preds: Vec<Vec<_>> = dialogs
            .iter()
            .map(|d| vec![(SentimentLabel::Neutral, DialogActLabel::I); d.len()])
            .collect();
        let recs = parse_linear_tsv(&write_prediction_tsv(&dialogs, &preds), "mem").unwrap();
        assert_eq!(recs[1].predictions.as_ref().unwrap(), &preds[1]);
    }

    #[test]
    fn linear_rejects_turn_gaps() {
        let err = parse_linear_tsv("b\t1\td\ta\t-\t-\tI\tx\n", "m").unwrap_err();
        assert!(err.to_string().contains("expects turn 0"), "{err}");
    }
}

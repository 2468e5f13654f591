//! Corpus analyses: sentiment transitions conditioned on the current dialog
//! act, label-change rates and positional sentiment trends, plus a synthetic
//! corpus generator with known transition structure.

mod synthetic;

pub use synthetic::{generate, preferred_sentiment, SyntheticSpec};

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::corpus::{DialogActLabel, LinearDialog, SentimentLabel};
use crate::error::{Error, Result};

/// Written in place of log(0).
pub const NEG_INF_SENTINEL: &str = "-inf";

/// The sentiment a post follows: the previous post's, or none at turn 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrevSentiment {
    Start,
    Positive,
    Negative,
    Neutral,
}

impl PrevSentiment {
    pub const ALL: [PrevSentiment; 4] = [Self::Start, Self::Positive, Self::Negative, Self::Neutral];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Start => "start",
            Self::Positive => "positive",
            Self::Negative => "negative",
            Self::Neutral => "neutral",
        }
    }

    pub fn after(s: SentimentLabel) -> Self {
        match s {
            SentimentLabel::Positive => Self::Positive,
            SentimentLabel::Negative => Self::Negative,
            SentimentLabel::Neutral => Self::Neutral,
        }
    }
}

impl fmt::Display for PrevSentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

type Counts = [[[u64; 3]; DialogActLabel::COUNT]; 4];

/// Counts of (previous sentiment, current dialog act, current sentiment) with
/// additive smoothing `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    pub alpha: f64,
    counts: Counts,
}

impl TransitionTable {
    /// Accumulates transitions over every post of every dialog. All posts
    /// must carry both labels.
    pub fn build(dialogs: &[LinearDialog], alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::Validation(format!("smoothing constant {alpha} must be >= 0")));
        }
        let mut counts = [[[0u64; 3]; DialogActLabel::COUNT]; 4];
        for d in dialogs {
            let mut prev = PrevSentiment::Start;
            for p in &d.posts {
                let (Some(s), Some(da)) = (p.sentiment, p.dialog_act) else {
                    return Err(Error::Validation(format!(
                        "post {} in dialog {} is missing a label",
                        p.post_id, d.id
                    )));
                };
                counts[prev.index()][da.index()][s.index()] += 1;
                prev = PrevSentiment::after(s);
            }
        }
        Ok(Self { alpha, counts })
    }

    pub fn count(&self, prev: PrevSentiment, da: DialogActLabel, s: SentimentLabel) -> u64 {
        self.counts[prev.index()][da.index()][s.index()]
    }

    pub fn row_total(&self, prev: PrevSentiment, da: DialogActLabel) -> u64 {
        self.counts[prev.index()][da.index()].iter().sum()
    }

    /// p(s | da, prev); `None` when the row has no mass.
    pub fn prob(&self, prev: PrevSentiment, da: DialogActLabel, s: SentimentLabel) -> Option<f64> {
        let denom = self.row_total(prev, da) as f64 + 3.0 * self.alpha;
        (denom > 0.0).then(|| (self.count(prev, da, s) as f64 + self.alpha) / denom)
    }

    pub fn log_prob(&self, prev: PrevSentiment, da: DialogActLabel, s: SentimentLabel) -> Option<f64> {
        self.prob(prev, da, s).map(f64::ln)
    }

    fn defined_rows(&self) -> impl Iterator<Item = (PrevSentiment, DialogActLabel, SentimentLabel, f64)> + '_ {
        PrevSentiment::ALL.into_iter().flat_map(move |prev| {
            DialogActLabel::ALL.into_iter().flat_map(move |da| {
                SentimentLabel::ALL
                    .into_iter()
                    .filter_map(move |s| self.prob(prev, da, s).map(|p| (prev, da, s, p)))
            })
        })
    }

    /// `prev_sent,da,sent,count,log_prob`, one row per cell of a row with mass.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["prev_sent", "da", "sent", "count", "log_prob"])?;
        for (prev, da, s, p) in self.defined_rows() {
            w.write_record([
                prev.name().to_owned(),
                da.code().to_string(),
                s.name().to_owned(),
                self.count(prev, da, s).to_string(),
                format_log(p),
            ])?;
        }
        finish_csv(w)
    }

    /// Long format for plotting one histogram panel per previous sentiment:
    /// `panel,da,sent,prob,log_prob,support`.
    pub fn to_plot_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["panel", "da", "sent", "prob", "log_prob", "support"])?;
        for (prev, da, s, p) in self.defined_rows() {
            w.write_record([
                prev.name().to_owned(),
                da.code().to_string(),
                s.name().to_owned(),
                format!("{p:.6}"),
                format_log(p),
                self.row_total(prev, da).to_string(),
            ])?;
        }
        finish_csv(w)
    }

    /// How often each dialog act keeps, flips or neutralizes a polar
    /// previous sentiment.
    pub fn agreement_report(&self) -> Vec<AgreementRow> {
        let mut out = Vec::new();
        for da in DialogActLabel::ALL {
            for (prev, same, other) in [
                (PrevSentiment::Positive, SentimentLabel::Positive, SentimentLabel::Negative),
                (PrevSentiment::Negative, SentimentLabel::Negative, SentimentLabel::Positive),
            ] {
                let n = self.row_total(prev, da);
                if n == 0 {
                    continue;
                }
                let share = |s| self.count(prev, da, s) as f64 / n as f64;
                out.push(AgreementRow {
                    da,
                    prev,
                    support: n,
                    keep: share(same),
                    flip: share(other),
                    neutralize: share(SentimentLabel::Neutral),
                });
            }
        }
        out
    }
}

fn format_log(p: f64) -> String {
    if p == 0.0 {
        NEG_INF_SENTINEL.to_owned()
    } else {
        format!("{:.6}", p.ln())
    }
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub da: DialogActLabel,
    pub prev: PrevSentiment,
    pub support: u64,
    pub keep: f64,
    pub flip: f64,
    pub neutralize: f64,
}

pub fn agreement_table(rows: &[AgreementRow]) -> String {
    let mut out = String::from("da  prev      support  keep   flip   neutral\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<3} {:<9} {:>7}  {:.3}  {:.3}  {:.3}",
            r.da.code(),
            r.prev.name(),
            r.support,
            r.keep,
            r.flip,
            r.neutralize
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChangeRates {
    pub sentiment: f64,
    pub dialog_act: f64,
    pub sentiment_pairs: u64,
    pub dialog_act_pairs: u64,
}

/// Fraction of adjacent labeled post pairs whose label differs, per task.
/// A task with no labeled pairs gets rate 0.
pub fn change_rates(dialogs: &[LinearDialog]) -> ChangeRates {
    let (mut s_changed, mut s_pairs, mut d_changed, mut d_pairs) = (0u64, 0u64, 0u64, 0u64);
    for d in dialogs {
        for w in d.posts.windows(2) {
            if let (Some(a), Some(b)) = (w[0].sentiment, w[1].sentiment) {
                s_pairs += 1;
                s_changed += u64::from(a != b);
            }
            if let (Some(a), Some(b)) = (w[0].dialog_act, w[1].dialog_act) {
                d_pairs += 1;
                d_changed += u64::from(a != b);
            }
        }
    }
    let rate = |c: u64, n: u64| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    ChangeRates {
        sentiment: rate(s_changed, s_pairs),
        dialog_act: rate(d_changed, d_pairs),
        sentiment_pairs: s_pairs,
        dialog_act_pairs: d_pairs,
    }
}

pub const POSITION_BINS: usize = 10;

/// Sentiment distributions by position in the dialog, each in
/// [`SentimentLabel::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionalSentiment {
    pub first: [f64; 3],
    pub last: [f64; 3],
    /// Relative position `t / (n - 1)` cut into ten equal bins; single-post
    /// dialogs fall in the first bin.
    pub bins: Vec<[f64; 3]>,
    pub bin_support: Vec<u64>,
}

pub fn positional_sentiment(dialogs: &[LinearDialog]) -> PositionalSentiment {
    let mut first = [0u64; 3];
    let mut last = [0u64; 3];
    let mut bins = vec![[0u64; 3]; POSITION_BINS];
    for d in dialogs {
        let n = d.posts.len();
        if let Some(s) = d.posts.first().and_then(|p| p.sentiment) {
            first[s.index()] += 1;
        }
        if let Some(s) = d.posts.last().and_then(|p| p.sentiment) {
            last[s.index()] += 1;
        }
        for (t, p) in d.posts.iter().enumerate() {
            let Some(s) = p.sentiment else { continue };
            let bin = if n == 1 {
                0
            } else {
                ((POSITION_BINS * t) / (n - 1)).min(POSITION_BINS - 1)
            };
            bins[bin][s.index()] += 1;
        }
    }
    let norm = |c: [u64; 3]| {
        let total: u64 = c.iter().sum();
        if total == 0 {
            [0.0; 3]
        } else {
            c.map(|x| x as f64 / total as f64)
        }
    };
    PositionalSentiment {
        first: norm(first),
        last: norm(last),
        bin_support: bins.iter().map(|b| b.iter().sum()).collect(),
        bins: bins.into_iter().map(norm).collect(),
    }
}

impl PositionalSentiment {
    /// `position,positive,negative,neutral,support` with rows `first`, `last`
    /// and one per bin labeled by its lower bound in percent.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["position", "positive", "negative", "neutral", "support"])?;
        let row = |w: &mut csv::Writer<Vec<u8>>, name: String, d: &[f64; 3], n: String| {
            w.write_record([name, format!("{:.6}", d[0]), format!("{:.6}", d[1]), format!("{:.6}", d[2]), n])
        };
        row(&mut w, "first".into(), &self.first, String::new())?;
        row(&mut w, "last".into(), &self.last, String::new())?;
        for (i, (b, n)) in self.bins.iter().zip(&self.bin_support).enumerate() {
            row(&mut w, format!("{}", i * 100 / POSITION_BINS), b, n.to_string())?;
        }
        finish_csv(w)
    }
}

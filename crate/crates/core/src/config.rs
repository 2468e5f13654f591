//! `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Any key may be overridden by an
//! environment variable named `DIALSENT_<KEY>` (upper case), and command-line
//! flags override both.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::training::{LossWeights, Regime, TargetTask, TrainConfig};

pub const ENV_PREFIX: &str = "DIALSENT_";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    origin: String,
    entries: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: origin.to_owned(),
                    line: i + 1,
                    message: format!("expected key=value, got {line:?}"),
                });
            };
            entries.insert(k.trim().to_owned(), v.trim().to_owned());
        }
        Ok(Self {
            origin: origin.to_owned(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(key.to_owned(), value.into());
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Applies `DIALSENT_<KEY>` variables from `vars` for every key in `known`.
    pub fn apply_env<'a>(&mut self, known: &[&str], vars: impl IntoIterator<Item = (String, String)>) {
        let vars: BTreeMap<String, String> = vars.into_iter().collect();
        for key in known {
            let name = format!("{ENV_PREFIX}{}", key.to_uppercase());
            if let Some(v) = vars.get(&name) {
                self.set(key, v.clone());
            }
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                Error::Validation(format!("{}: cannot parse {key} = {v:?}", self.origin))
            }),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::Validation(format!("{}: missing key {key}", self.origin)))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => parse_list(v).map(Some),
        }
    }
}

pub fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Validation(format!("bad list item {s:?}"))))
        .collect()
}

/// Everything a CLI run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub train_corpus: Option<PathBuf>,
    pub dev_corpus: Option<PathBuf>,
    pub test_corpus: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub jobs: usize,
    pub min_count: usize,
    pub lowercase: bool,
    pub folds: usize,
    pub embed_dim: usize,
    pub lstm_hidden: usize,
    pub dialog_hidden: usize,
    pub dropout: f64,
    pub train: TrainConfig,
    pub regime: Regime,
    pub budgets: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let m = ModelConfig::new(1);
        Self {
            train_corpus: None,
            dev_corpus: None,
            test_corpus: None,
            out_dir: PathBuf::from("runs/default"),
            seed: 1,
            jobs: 1,
            min_count: 1,
            lowercase: false,
            folds: 10,
            embed_dim: m.embed_dim,
            lstm_hidden: m.lstm_hidden,
            dialog_hidden: m.dialog_hidden,
            dropout: m.dropout,
            train: TrainConfig::default(),
            regime: Regime::BothRich,
            budgets: vec![1, 10, 50, 100, 150, 200, 239],
        }
    }
}

impl ExperimentConfig {
    pub const KEYS: &'static [&'static str] = &[
        "train_corpus",
        "dev_corpus",
        "test_corpus",
        "out_dir",
        "seed",
        "jobs",
        "min_count",
        "lowercase",
        "folds",
        "embed_dim",
        "lstm_hidden",
        "dialog_hidden",
        "dropout",
        "lr_grid",
        "max_epochs",
        "restarts",
        "patience",
        "target_task",
        "sentiment_weight",
        "dialog_act_weight",
        "regime",
        "budgets",
    ];

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        if let Some(unknown) = kv.keys().find(|k| !Self::KEYS.contains(k)) {
            return Err(Error::Validation(format!("unknown config key {unknown:?}")));
        }
        let d = Self::default();
        let path = |k: &str| kv.raw(k).filter(|s| !s.is_empty()).map(PathBuf::from);
        let seed = kv.get_or("seed", d.seed)?;
        let jobs = kv.get_or("jobs", d.jobs)?;
        let patience = match kv.raw("patience") {
            None | Some("") | Some("none") => None,
            Some(_) => Some(kv.require("patience")?),
        };
        let train = TrainConfig {
            lr_grid: kv.list("lr_grid")?.unwrap_or(d.train.lr_grid),
            max_epochs: kv.get_or("max_epochs", d.train.max_epochs)?,
            restarts: kv.get_or("restarts", d.train.restarts)?,
            seed,
            target_task: kv.get_or("target_task", d.train.target_task)?,
            loss_weights: LossWeights {
                sentiment: kv.get_or("sentiment_weight", d.train.loss_weights.sentiment)?,
                dialog_act: kv.get_or("dialog_act_weight", d.train.loss_weights.dialog_act)?,
            },
            patience,
            jobs,
        };
        train.validate()?;
        let c = Self {
            train_corpus: path("train_corpus"),
            dev_corpus: path("dev_corpus"),
            test_corpus: path("test_corpus"),
            out_dir: path("out_dir").unwrap_or(d.out_dir),
            seed,
            jobs,
            min_count: kv.get_or("min_count", d.min_count)?,
            lowercase: kv.get_or("lowercase", d.lowercase)?,
            folds: kv.get_or("folds", d.folds)?,
            embed_dim: kv.get_or("embed_dim", d.embed_dim)?,
            lstm_hidden: kv.get_or("lstm_hidden", d.lstm_hidden)?,
            dialog_hidden: kv.get_or("dialog_hidden", d.dialog_hidden)?,
            dropout: kv.get_or("dropout", d.dropout)?,
            train,
            regime: kv.get_or("regime", d.regime)?,
            budgets: kv.list("budgets")?.unwrap_or(d.budgets),
        };
        c.model_config(1).validate()?;
        if c.min_count == 0 || c.folds < 2 || c.jobs == 0 {
            return Err(Error::Validation("min_count and jobs must be >= 1, folds >= 2".into()));
        }
        Ok(c)
    }

    pub fn model_config(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            embed_dim: self.embed_dim,
            lstm_hidden: self.lstm_hidden,
            dialog_hidden: self.dialog_hidden,
            dropout: self.dropout,
            ..ModelConfig::new(vocab_size)
        }
    }

    /// Full snapshot in `key=value` form; parsing it back yields `self`.
    pub fn to_key_values(&self) -> String {
        let p = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        let join = |xs: Vec<String>| xs.join(",");
        let t = &self.train;
        let rows: Vec<(&str, String)> = vec![
            ("train_corpus", p(&self.train_corpus)),
            ("dev_corpus", p(&self.dev_corpus)),
            ("test_corpus", p(&self.test_corpus)),
            ("out_dir", self.out_dir.display().to_string()),
            ("seed", self.seed.to_string()),
            ("jobs", self.jobs.to_string()),
            ("min_count", self.min_count.to_string()),
            ("lowercase", self.lowercase.to_string()),
            ("folds", self.folds.to_string()),
            ("embed_dim", self.embed_dim.to_string()),
            ("lstm_hidden", self.lstm_hidden.to_string()),
            ("dialog_hidden", self.dialog_hidden.to_string()),
            ("dropout", self.dropout.to_string()),
            ("lr_grid", join(t.lr_grid.iter().map(f64::to_string).collect())),
            ("max_epochs", t.max_epochs.to_string()),
            ("restarts", t.restarts.to_string()),
            ("patience", t.patience.map_or("none".into(), |p| p.to_string())),
            ("target_task", t.target_task.to_string()),
            ("sentiment_weight", t.loss_weights.sentiment.to_string()),
            ("dialog_act_weight", t.loss_weights.dialog_act.to_string()),
            ("regime", self.regime.to_string()),
            ("budgets", join(self.budgets.iter().map(usize::to_string).collect())),
        ];
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

impl FromStr for TargetTask {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sentiment" => Ok(TargetTask::Sentiment),
            "dialog_act" | "dialog-act" => Ok(TargetTask::DialogAct),
            _ => Err(Error::Validation(format!("unknown target task {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_lists() {
        let kv = KeyValues::parse("# c\n\nseed = 4\nlr_grid=0.1, 0.01\n", "t").unwrap();
        assert_eq!(kv.require::<u64>("seed").unwrap(), 4);
        assert_eq!(kv.list::<f64>("lr_grid").unwrap().unwrap(), [0.1, 0.01]);
        assert!(KeyValues::parse("oops\n", "t").is_err());
        assert!(kv.require::<u64>("missing").is_err());
    }

    #[test]
    fn env_overrides_known_keys() {
        let mut kv = KeyValues::parse("seed=1\n", "t").unwrap();
        kv.apply_env(
            ExperimentConfig::KEYS,
            [
                ("DIALSENT_SEED".to_owned(), "9".to_owned()),
                ("DIALSENT_BOGUS".to_owned(), "x".to_owned()),
            ],
        );
        assert_eq!(kv.raw("seed"), Some("9"));
        assert_eq!(kv.raw("bogus"), None);
    }

    #[test]
    fn snapshot_round_trips() {
        let kv = KeyValues::parse(
            "seed=7\nregime=sentiment-poor\nbudgets=1,10\nmax_epochs=3\npatience=2\ntrain_corpus=a.tsv\n",
            "t",
        )
        .unwrap();
        let c = ExperimentConfig::from_key_values(&kv).unwrap();
        assert_eq!(c.regime, Regime::SentimentPoor);
        assert_eq!(c.train.patience, Some(2));
        assert_eq!(c.train.seed, 7);
        let again =
            ExperimentConfig::from_key_values(&KeyValues::parse(&c.to_key_values(), "s").unwrap())
                .unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(ExperimentConfig::from_key_values(&KeyValues::parse("colour=red\n", "t").unwrap()).is_err());
        assert!(ExperimentConfig::from_key_values(&KeyValues::parse("dropout=1.5\n", "t").unwrap()).is_err());
        assert!(ExperimentConfig::from_key_values(&KeyValues::parse("lr_grid=\n", "t").unwrap()).is_err());
    }
}

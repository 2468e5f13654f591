use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::config::KeyValues;
use crate::corpus::{DialogActLabel, SentimentLabel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub lstm_hidden: usize,
    pub dialog_hidden: usize,
    pub dropout: f64,
    pub n_sentiment: usize,
    pub n_da: usize,
}

impl ModelConfig {
    /// 100-dimensional embeddings and hidden states, dropout 0.4.
    pub fn new(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            embed_dim: 100,
            lstm_hidden: 100,
            dialog_hidden: 100,
            dropout: 0.4,
            n_sentiment: SentimentLabel::COUNT,
            n_da: DialogActLabel::COUNT,
        }
    }

    /// Same shape everywhere: embeddings, LSTM and dialog RNN all `dim` wide.
    pub fn with_dims(vocab_size: usize, dim: usize, dropout: f64) -> Self {
        Self {
            embed_dim: dim,
            lstm_hidden: dim,
            dialog_hidden: dim,
            dropout,
            ..Self::new(vocab_size)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [self.vocab_size, self.embed_dim, self.lstm_hidden, self.dialog_hidden];
        if dims.contains(&0) {
            return Err(Error::Validation(format!("model dimensions must be >= 1: {self:?}")));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Validation(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.n_sentiment != SentimentLabel::COUNT || self.n_da != DialogActLabel::COUNT {
            return Err(Error::Validation("label counts are fixed at 3 and 15".into()));
        }
        Ok(())
    }

    /// Closed-form weight count:
    /// `V·e + 2·(4h·(e + h + 1)) + H·(2h + H + 1) + Σ_{k∈{3,15}} (H·(H + 1) + k·(H + 1))`.
    pub fn parameter_count(&self) -> usize {
        let (v, e, h, hd) = (self.vocab_size, self.embed_dim, self.lstm_hidden, self.dialog_hidden);
        let lstm = 4 * h * (e + h + 1);
        let dialog = hd * (2 * h + hd + 1);
        let head = |k: usize| hd * (hd + 1) + k * (hd + 1);
        v * e + 2 * lstm + dialog + head(self.n_sentiment) + head(self.n_da)
    }

    pub fn to_key_values(&self) -> String {
        let mut m = BTreeMap::new();
        m.insert("vocab_size", self.vocab_size.to_string());
        m.insert("embed_dim", self.embed_dim.to_string());
        m.insert("lstm_hidden", self.lstm_hidden.to_string());
        m.insert("dialog_hidden", self.dialog_hidden.to_string());
        m.insert("dropout", self.dropout.to_string());
        m.insert("n_sentiment", self.n_sentiment.to_string());
        m.insert("n_da", self.n_da.to_string());
        m.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn from_key_values(text: &str) -> Result<Self> {
        let kv = KeyValues::parse(text, "model config")?;
        let c = Self {
            vocab_size: kv.require("vocab_size")?,
            embed_dim: kv.require("embed_dim")?,
            lstm_hidden: kv.require("lstm_hidden")?,
            dialog_hidden: kv.require("dialog_hidden")?,
            dropout: kv.require("dropout")?,
            n_sentiment: kv.get_or("n_sentiment", SentimentLabel::COUNT)?,
            n_da: kv.get_or("n_da", DialogActLabel::COUNT)?,
        };
        c.validate()?;
        Ok(c)
    }
}

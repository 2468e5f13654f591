use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::tree::LinearDialog;
use crate::error::{Error, Result};

pub const UNK: &str = "<unk>";
pub const UNK_INDEX: usize = 0;

/// Token to index map with `<unk>` at index 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds from training dialogs. Tokens are ordered by descending count,
    /// ties broken lexicographically; tokens seen fewer than `min_count` times
    /// map to `<unk>`. Shared branch prefixes are counted once per post.
    pub fn build(train: &[LinearDialog], min_count: usize) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Validation("cannot build a vocabulary from no dialogs".into()));
        }
        if min_count == 0 {
            return Err(Error::Validation("min_count must be at least 1".into()));
        }
        let mut seen = std::collections::HashSet::new();
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for d in train {
            for p in &d.posts {
                if !seen.insert((d.source_tree_id.as_str(), p.post_id.as_str())) {
                    continue;
                }
                for t in &p.tokens {
                    *counts.entry(t.as_str()).or_default() += 1;
                }
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(t, c)| c >= min_count && t != UNK)
            .collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        Ok(Self::from_tokens(
            std::iter::once(UNK.to_owned()).chain(ranked.into_iter().map(|(t, _)| t.to_owned())),
        ))
    }

    fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let tokens: Vec<String> = tokens.into_iter().collect();
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, index }
    }

    /// Number of entries including `<unk>`.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn index_of(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK_INDEX)
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.index_of(t)).collect()
    }

    pub fn decode(&self, indices: &[usize]) -> Vec<&str> {
        indices.iter().map(|&i| self.token(i).unwrap_or(UNK)).collect()
    }

    /// One token per line in index order.
    pub fn to_text(&self) -> String {
        let mut s = self.tokens.join("\n");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let tokens: Vec<String> = text.lines().map(str::to_owned).collect();
        if tokens.first().map(String::as_str) != Some(UNK) {
            return Err(Error::Validation(format!("vocabulary must start with {UNK}")));
        }
        let v = Self::from_tokens(tokens);
        if v.index.len() != v.tokens.len() {
            return Err(Error::Validation("vocabulary has duplicate tokens".into()));
        }
        Ok(v)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

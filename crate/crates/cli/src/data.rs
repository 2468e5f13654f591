use std::path::Path;

use dialsent_core::corpus::{convert_csv, linearize_all, parse_corpus, DialogTree, LinearDialog};

use crate::{CliError, CliResult};

/// Reads tree-TSV, or a headered CSV export when the extension is `.csv`.
pub fn load_trees(path: &Path) -> CliResult<Vec<DialogTree>> {
    let trees = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        convert_csv(path)?
    } else {
        parse_corpus(path)?
    };
    if trees.is_empty() {
        return Err(dialsent_core::Error::Validation(format!("{}: corpus is empty", path.display())).into());
    }
    Ok(trees)
}

pub fn load_dialogs(path: &Path, lowercase: bool) -> CliResult<Vec<LinearDialog>> {
    let mut dialogs = linearize_all(&load_trees(path)?);
    if lowercase {
        for d in &mut dialogs {
            for p in &mut d.posts {
                for t in &mut p.tokens {
                    *t = t.to_lowercase();
                }
            }
        }
    }
    Ok(dialogs)
}

pub fn require<'a>(path: &'a Option<std::path::PathBuf>, key: &str) -> CliResult<&'a Path> {
    path.as_deref()
        .ok_or_else(|| CliError::usage(format!("no {key} given (config key {key} or --{} flag)", key.replace('_', "-"))))
}

use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::tree::{linearize_all, DialogTree, LinearDialog};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSet {
    pub train: Vec<LinearDialog>,
    pub dev: Vec<LinearDialog>,
    pub test: Vec<LinearDialog>,
}

/// Assigns whole trees to train/dev/test so no post crosses splits.
///
/// Trees are shuffled with `seed`; the first `round(n * ratios.0)` go to
/// train, the next `round(n * ratios.1)` to dev, the rest to test.
pub fn make_splits(trees: &[DialogTree], ratios: (f64, f64, f64), seed: u64) -> Result<SplitSet> {
    if trees.is_empty() {
        return Err(Error::Validation("cannot split an empty corpus".into()));
    }
    let (r_train, r_dev, r_test) = ratios;
    if [r_train, r_dev, r_test].iter().any(|r| !(0.0..=1.0).contains(r))
        || (r_train + r_dev + r_test - 1.0).abs() > 1e-9
    {
        return Err(Error::Validation(format!("split ratios {ratios:?} must be in [0,1] and sum to 1")));
    }
    let mut order: Vec<usize> = (0..trees.len()).collect();
    order.shuffle(&mut rng::seeded(seed));
    let n = trees.len() as f64;
    let n_train = (n * r_train).round() as usize;
    let n_dev = ((n * r_dev).round() as usize).min(trees.len() - n_train);
    let pick = |range: &[usize]| -> Vec<DialogTree> { range.iter().map(|&i| trees[i].clone()).collect() };
    Ok(SplitSet {
        train: linearize_all(&pick(&order[..n_train])),
        dev: linearize_all(&pick(&order[n_train..n_train + n_dev])),
        test: linearize_all(&pick(&order[n_train + n_dev..])),
    })
}

/// Partitions dialogs into `folds` groups without splitting any source tree.
///
/// Trees are visited in seeded-shuffle order and each goes to the fold that
/// currently holds the fewest dialogs (lowest index on ties). Returns dialog
/// indices per fold, each in input order.
pub fn tree_folds(dialogs: &[LinearDialog], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds == 0 {
        return Err(Error::Validation("fold count must be positive".into()));
    }
    if dialogs.len() < folds {
        return Err(Error::Validation(format!(
            "{} dialogs cannot fill {folds} folds",
            dialogs.len()
        )));
    }
    let mut groups: Vec<(&str, Vec<usize>)> = Vec::new();
    let mut by_tree: HashMap<&str, usize> = HashMap::new();
    for (i, d) in dialogs.iter().enumerate() {
        let g = *by_tree.entry(d.source_tree_id.as_str()).or_insert_with(|| {
            groups.push((d.source_tree_id.as_str(), Vec::new()));
            groups.len() - 1
        });
        groups[g].1.push(i);
    }
    if groups.len() < folds {
        return Err(Error::Validation(format!(
            "{} trees cannot fill {folds} folds",
            groups.len()
        )));
    }
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.shuffle(&mut rng::seeded(seed));
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); folds];
    for g in order {
        let target = (0..folds).min_by_key(|&f| (out[f].len(), f)).unwrap();
        out[target].extend_from_slice(&groups[g].1);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

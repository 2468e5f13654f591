use std::collections::HashMap;
use std::hash::Hash;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaReport {
    pub kappa: f64,
    /// Raw agreement p_o.
    pub observed: f64,
    /// Chance agreement p_e from the product of marginals.
    pub expected: f64,
}

/// Cohen's kappa `(p_o - p_e) / (1 - p_e)` between two annotations of the
/// same items. When chance agreement is 1 (both annotators used one and the
/// same label), kappa is 1 for perfect agreement and undefined otherwise.
pub fn cohen_kappa<T: Eq + Hash>(a: &[T], b: &[T]) -> Result<KappaReport> {
    if a.len() != b.len() {
        return Err(Error::Validation(format!(
            "annotations differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Validation("kappa of zero items".into()));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count();
    let mut ma: HashMap<&T, usize> = HashMap::new();
    let mut mb: HashMap<&T, usize> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *ma.entry(x).or_default() += 1;
        *mb.entry(y).or_default() += 1;
    }
    let observed = agree as f64 / n;
    let expected: f64 = ma
        .iter()
        .map(|(k, &ca)| ca as f64 * mb.get(k).copied().unwrap_or(0) as f64)
        .sum::<f64>()
        / (n * n);
    let kappa = if (1.0 - expected).abs() < 1e-15 {
        if observed == 1.0 {
            1.0
        } else {
            return Err(Error::Validation("kappa undefined: chance agreement is 1".into()));
        }
    } else {
        (observed - expected) / (1.0 - expected)
    };
    Ok(KappaReport {
        kappa,
        observed,
        expected,
    })
}

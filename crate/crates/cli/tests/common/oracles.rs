//! Naive recount implementations, written independently of the library's
//! confusion-matrix code, used as reference values.

use std::collections::BTreeSet;

/// Expands a row-major count matrix into (gold, predicted) pairs.
pub fn expand(k: usize, counts: &[u64]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for g in 0..k {
        for p in 0..k {
            for _ in 0..counts[g * k + p] {
                out.push((g, p));
            }
        }
    }
    out
}

/// F1 of one class as `2 tp / (2 tp + fp + fn)`, zero when undefined.
pub fn class_f1(class: usize, pairs: &[(usize, usize)]) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for &(g, p) in pairs {
        match (g == class, p == class) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        0.0
    } else {
        2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
    }
}

/// Positive is class 0, negative class 1.
pub fn sentiment_macro_f1(pairs: &[(usize, usize)]) -> f64 {
    (class_f1(0, pairs) + class_f1(1, pairs)) / 2.0
}

pub fn weighted_f1(k: usize, pairs: &[(usize, usize)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    (0..k)
        .map(|c| {
            let share = pairs.iter().filter(|(g, _)| *g == c).count() as f64 / pairs.len() as f64;
            share * class_f1(c, pairs)
        })
        .sum()
}

/// `None` when chance agreement is 1 and the annotators disagree somewhere.
pub fn kappa(a: &[u8], b: &[u8]) -> Option<f64> {
    let n = a.len() as f64;
    let labels: BTreeSet<u8> = a.iter().chain(b).copied().collect();
    let po = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let pe: f64 = labels
        .iter()
        .map(|l| {
            let ca = a.iter().filter(|x| *x == l).count() as f64;
            let cb = b.iter().filter(|x| *x == l).count() as f64;
            (ca / n) * (cb / n)
        })
        .sum();
    if pe == 1.0 {
        return (po == 1.0).then_some(1.0);
    }
    Some((po - pe) / (1.0 - pe))
}

use criterion::{criterion_group, criterion_main, Criterion};
use rand::Rng;

use dialsent_core::analysis::TransitionTable;
use dialsent_core::corpus::{linearize_all, DialogActLabel};
use dialsent_core::analysis::{generate, SyntheticSpec};
use dialsent_core::metrics::{cohen_kappa, da_weighted_f1, ConfusionMatrix};
use dialsent_core::rng;

fn metrics(c: &mut Criterion) {
    let mut r = rng::seeded(0);
    let pairs: Vec<(usize, usize)> = (0..10_000)
        .map(|_| (r.random_range(0..DialogActLabel::COUNT), r.random_range(0..DialogActLabel::COUNT)))
        .collect();
    c.bench_function("da_weighted_f1_10k", |b| {
        b.iter(|| da_weighted_f1(&ConfusionMatrix::from_pairs(DialogActLabel::COUNT, pairs.iter().copied()).unwrap()))
    });
    let (a, g): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
    c.bench_function("cohen_kappa_10k", |b| b.iter(|| cohen_kappa(&a, &g).unwrap()));

    let spec = SyntheticSpec {
        n_trees: 1000,
        min_posts: 4,
        max_posts: 12,
        ..Default::default()
    };
    let dialogs = linearize_all(&generate(&spec, 0).unwrap());
    c.bench_function("transition_table_1k_dialogs", |b| b.iter(|| TransitionTable::build(&dialogs, 1.0).unwrap()));
}

criterion_group!(benches, metrics);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dialsent_core::autodiff::{sgd_step, Graph};
use dialsent_core::model::{HierarchicalModel, Mode, ModelConfig};
use dialsent_core::rng;
use dialsent_core::training::{multitask_loss, LossWeights};

fn forward_backward(c: &mut Criterion) {
    let (vocab, dialogs) = dialsent_bench::dialogs(4, 12, 12);
    let dialog = &dialogs[0];
    let mut group = c.benchmark_group("dialog_12_posts");
    for dim in [16, 100] {
        let config = ModelConfig::with_dims(vocab.len(), dim, 0.2);
        let mut model = HierarchicalModel::new(config, 1).unwrap();
        group.bench_with_input(BenchmarkId::new("predict", dim), &dim, |b, _| {
            b.iter(|| model.predict(&dialog.posts).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("train_step", dim), &dim, |b, _| {
            let mut r = rng::seeded(2);
            b.iter(|| {
                let mut g = Graph::new(&model.params);
                let out = model.forward(&mut g, &dialog.posts, Mode::Train(&mut r)).unwrap();
                let loss = multitask_loss(&mut g, &out, dialog, LossWeights::default()).unwrap().unwrap();
                let grads = g.backward(loss).unwrap();
                drop(g);
                model.params.accumulate(&grads);
                sgd_step(&mut model.params, 1e-4).unwrap();
            })
        });
    }
    group.finish();
}

criterion_group!(benches, forward_backward);
criterion_main!(benches);

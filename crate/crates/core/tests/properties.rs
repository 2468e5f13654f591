use std::collections::HashSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;

use dialsent_core::analysis::{change_rates, TransitionTable};
use dialsent_core::autodiff::{Graph, ParamStore, Tensor};
use dialsent_core::corpus::{
    linearize, linearize_all, make_splits, parse_tree_tsv, post_id_set, tree_folds, write_tree_tsv, DialogActLabel,
    DialogTree, LabeledPost, LinearDialog, SentimentLabel, Vocabulary,
};
use dialsent_core::metrics::{da_weighted_f1, sentiment_macro_f1, ConfusionMatrix};
use dialsent_core::rng;

/// Random forest shape: for each post, the index of its parent (always an
/// earlier post) or `None` for the root.
fn tree_strategy(max_posts: usize) -> impl Strategy<Value = Vec<Option<usize>>> {
    (1..=max_posts).prop_flat_map(|n| {
        let parents: Vec<BoxedStrategy<Option<usize>>> = (0..n)
            .map(|i| if i == 0 { Just(None).boxed() } else { (0..i).prop_map(Some).boxed() })
            .collect();
        parents
    })
}

fn labeled_tree(id: &str, parents: &[Option<usize>], labels: &[(usize, usize)]) -> DialogTree {
    let posts = parents
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (s, d) = labels[i % labels.len()];
            LabeledPost::new(
                format!("{id}-{i}"),
                p.map(|p| format!("{id}-{p}")).as_deref(),
                &format!("tok{} tok{}", i % 5, (i * 7) % 11),
                SentimentLabel::from_index(s),
                DialogActLabel::from_index(d),
            )
        })
        .collect();
    DialogTree::from_posts(id, posts).unwrap()
}

fn forest() -> impl Strategy<Value = Vec<DialogTree>> {
    prop::collection::vec((tree_strategy(12), prop::collection::vec((0..3usize, 0..15usize), 1..6)), 1..25)
        .prop_map(|specs| {
            specs
                .iter()
                .enumerate()
                .map(|(t, (parents, labels))| labeled_tree(&format!("t{t}"), parents, labels))
                .collect()
        })
}

fn cm_strategy(k: usize) -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(0..50u64, k * k)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn one_dialog_per_leaf_each_a_root_path(parents in tree_strategy(30)) {
        let tree = labeled_tree("t", &parents, &[(0, 0)]);
        let dialogs = linearize(&tree);
        prop_assert_eq!(dialogs.len(), tree.leaves().count());
        for d in &dialogs {
            prop_assert_eq!(&d.posts[0].post_id, &tree.root().post_id);
            prop_assert_eq!(&d.posts.last().unwrap().post_id, &d.leaf_id);
            for w in d.posts.windows(2) {
                prop_assert_eq!(w[1].reply_to.as_deref(), Some(w[0].post_id.as_str()));
            }
        }
        let leaves: HashSet<_> = dialogs.iter().map(|d| d.leaf_id.clone()).collect();
        prop_assert_eq!(leaves.len(), dialogs.len());
    }

    #[test]
    fn splits_never_share_posts(trees in forest(), seed in any::<u64>()) {
        let s = make_splits(&trees, (0.6, 0.2, 0.2), seed).unwrap();
        let (a, b, c) = (post_id_set(&s.train), post_id_set(&s.dev), post_id_set(&s.test));
        prop_assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
        prop_assert_eq!(s.train.len() + s.dev.len() + s.test.len(), linearize_all(&trees).len());
    }

    #[test]
    fn folds_partition_without_splitting_trees(trees in forest(), seed in any::<u64>(), folds in 1..6usize) {
        let dialogs = linearize_all(&trees);
        let n_trees = trees.len();
        match tree_folds(&dialogs, folds, seed) {
            Err(_) => prop_assert!(n_trees < folds || dialogs.len() < folds),
            Ok(parts) => {
                let mut all: Vec<usize> = parts.iter().flatten().copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..dialogs.len()).collect::<Vec<_>>());
                for (i, p) in parts.iter().enumerate() {
                    let trees_i: HashSet<_> = p.iter().map(|&d| &dialogs[d].source_tree_id).collect();
                    for q in &parts[i + 1..] {
                        prop_assert!(q.iter().all(|&d| !trees_i.contains(&dialogs[d].source_tree_id)));
                    }
                }
            }
        }
    }

    #[test]
    fn vocabulary_ignores_dialog_order(trees in forest(), seed in any::<u64>()) {
        let dialogs = linearize_all(&trees);
        let mut shuffled = dialogs.clone();
        shuffled.shuffle(&mut rng::seeded(seed));
        let a = Vocabulary::build(&dialogs, 1).unwrap();
        let b = Vocabulary::build(&shuffled, 1).unwrap();
        prop_assert_eq!(a.to_text(), b.to_text());
    }

    #[test]
    fn tree_tsv_round_trips(trees in forest()) {
        let text = write_tree_tsv(&trees);
        let back = parse_tree_tsv(&text, "memory").unwrap();
        prop_assert_eq!(back, trees);
    }

    #[test]
    fn metrics_ignore_pair_order(counts in cm_strategy(3), seed in any::<u64>()) {
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for g in 0..3 {
            for p in 0..3 {
                pairs.extend(std::iter::repeat_n((g, p), counts[g * 3 + p] as usize));
            }
        }
        let a = ConfusionMatrix::from_pairs(3, pairs.clone()).unwrap();
        pairs.shuffle(&mut rng::seeded(seed));
        let b = ConfusionMatrix::from_pairs(3, pairs).unwrap();
        prop_assert_eq!(sentiment_macro_f1(&a).unwrap(), sentiment_macro_f1(&b).unwrap());
        prop_assert_eq!(da_weighted_f1(&a), da_weighted_f1(&b));
    }

    #[test]
    fn metrics_lie_in_unit_interval(counts in cm_strategy(15)) {
        let m = ConfusionMatrix::from_counts((0..15).map(|i| i.to_string()).collect(), counts).unwrap();
        let f = da_weighted_f1(&m);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
    }

    #[test]
    fn cross_entropy_is_shift_invariant(
        logits in prop::collection::vec(-5.0..5.0f64, 4),
        gold in 0..4usize,
        shift in -50.0..50.0f64,
    ) {
        let ps = ParamStore::new();
        let mut g = Graph::new(&ps);
        let a = g.input(Tensor::vector(logits.clone()).unwrap());
        let b = g.input(Tensor::vector(logits.iter().map(|x| x + shift).collect()).unwrap());
        let la = g.softmax_cross_entropy(a, gold).unwrap();
        let lb = g.softmax_cross_entropy(b, gold).unwrap();
        prop_assert!((g.scalar(la) - g.scalar(lb)).abs() < 1e-9);
    }

    #[test]
    fn backward_is_additive(w in prop::collection::vec(-2.0..2.0f64, 6), x in prop::collection::vec(-2.0..2.0f64, 3)) {
        let mut ps = ParamStore::new();
        let id = ps.add("w", Tensor::matrix(2, 3, w).unwrap()).unwrap();
        let build = |g: &mut Graph<'_>, which: u8| {
            let wv = g.param(id);
            let xv = g.input(Tensor::matrix(3, 1, x.clone()).unwrap());
            let y = g.matmul(wv, xv).unwrap();
            let f1 = {
                let t = g.tanh(y).unwrap();
                g.sum_all(t).unwrap()
            };
            let f2 = {
                let s = g.sigmoid(y).unwrap();
                let sq = g.mul(s, s).unwrap();
                g.sum_all(sq).unwrap()
            };
            match which {
                0 => f1,
                1 => f2,
                _ => g.sum(&[f1, f2]).unwrap(),
            }
        };
        let grad = |which| {
            let mut g = Graph::new(&ps);
            let loss = build(&mut g, which);
            g.backward(loss).unwrap().dense(id, &ps)
        };
        let (a, b, ab) = (grad(0), grad(1), grad(2));
        for i in 0..6 {
            prop_assert!((a[i] + b[i] - ab[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn transition_rows_are_stochastic(trees in forest(), alpha in prop_oneof![Just(0.0), 0.0..2.0f64]) {
        let dialogs = linearize_all(&trees);
        let t = TransitionTable::build(&dialogs, alpha).unwrap();
        for prev in dialsent_core::analysis::PrevSentiment::ALL {
            for da in DialogActLabel::ALL {
                let ps: Vec<f64> = SentimentLabel::ALL.iter().filter_map(|&s| t.prob(prev, da, s)).collect();
                if !ps.is_empty() {
                    prop_assert!((ps.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn transitions_ignore_dialog_order(trees in forest(), seed in any::<u64>()) {
        let dialogs = linearize_all(&trees);
        let mut shuffled = dialogs.clone();
        shuffled.shuffle(&mut rng::seeded(seed));
        prop_assert_eq!(
            TransitionTable::build(&dialogs, 0.0).unwrap(),
            TransitionTable::build(&shuffled, 0.0).unwrap()
        );
    }

    #[test]
    fn change_rates_ignore_order_and_relabeling(trees in forest(), seed in any::<u64>()) {
        let dialogs = linearize_all(&trees);
        let base = change_rates(&dialogs);
        let mut r = rng::seeded(seed);
        let mut shuffled = dialogs.clone();
        shuffled.shuffle(&mut r);
        prop_assert_eq!(change_rates(&shuffled), base);
        let mut sp: Vec<usize> = (0..3).collect();
        let mut dp: Vec<usize> = (0..15).collect();
        sp.shuffle(&mut r);
        dp.shuffle(&mut r);
        let relabeled: Vec<LinearDialog> = dialogs
            .iter()
            .map(|d| {
                let mut d = d.clone();
                for p in &mut d.posts {
                    p.sentiment = p.sentiment.and_then(|s| SentimentLabel::from_index(sp[s.index()]));
                    p.dialog_act = p.dialog_act.and_then(|a| DialogActLabel::from_index(dp[a.index()]));
                }
                d
            })
            .collect();
        prop_assert_eq!(change_rates(&relabeled), base);
    }
}

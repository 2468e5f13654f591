//! Shared fixtures for the benchmarks.

use dialsent_core::analysis::{generate, SyntheticSpec};
use dialsent_core::corpus::{encode_all, linearize_all, EncodedDialog, Vocabulary};

/// Encoded synthetic dialogs with chains of `min_posts..=max_posts` posts.
pub fn dialogs(n_trees: usize, min_posts: usize, max_posts: usize) -> (Vocabulary, Vec<EncodedDialog>) {
    let spec = SyntheticSpec {
        n_trees,
        min_posts,
        max_posts,
        ..Default::default()
    };
    let linear = linearize_all(&generate(&spec, 0).expect("valid spec"));
    let vocab = Vocabulary::build(&linear, 1).expect("non-empty corpus");
    let encoded = encode_all(&linear, &vocab);
    (vocab, encoded)
}

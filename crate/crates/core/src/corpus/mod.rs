//! Corpus handling: parsing, reply trees, linearization, label normalization,
//! vocabulary and leak-free splits.

mod labels;
mod split;
mod tree;
mod tsv;
mod vocab;

pub use labels::{
    normalize_da_code, DaAnnotation, DialogActLabel, NormalizedDialogAct, RawDialogActCode,
    SentimentLabel,
};
pub use split::{make_splits, tree_folds, SplitSet};
pub use tree::{build_trees, linearize, linearize_all, post_id_set, DialogTree, LabeledPost, LinearDialog};
pub use tsv::{
    convert_csv, parse_corpus, parse_linear_tsv, parse_tree_tsv, read_linear_tsv, write_linear_tsv,
    write_prediction_tsv, write_tree_tsv, LinearRecord,
};
pub use vocab::{Vocabulary, UNK, UNK_INDEX};

use serde::{Deserialize, Serialize};

/// A dialog mapped to vocabulary indices, ready for the model. Post lengths
/// stay ragged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedDialog {
    pub posts: Vec<Vec<usize>>,
    pub sentiment: Vec<Option<SentimentLabel>>,
    pub dialog_act: Vec<Option<DialogActLabel>>,
}

impl EncodedDialog {
    pub fn len(&self) -> usize {
        self.posts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.posts.is_empty()
    }
}

pub fn encode_dialog(d: &LinearDialog, vocab: &Vocabulary) -> EncodedDialog {
    EncodedDialog {
        posts: d.posts.iter().map(|p| vocab.encode(&p.tokens)).collect(),
        sentiment: d.posts.iter().map(|p| p.sentiment).collect(),
        dialog_act: d.posts.iter().map(|p| p.dialog_act).collect(),
    }
}

pub fn encode_all(dialogs: &[LinearDialog], vocab: &Vocabulary) -> Vec<EncodedDialog> {
    dialogs.iter().map(|d| encode_dialog(d, vocab)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_keeps_ragged_shape() {
        let d = LinearDialog {
            id: "b".into(),
            source_tree_id: "t".into(),
            leaf_id: "q".into(),
            posts: vec![
                LabeledPost::new("p", None, "a b", Some(SentimentLabel::Neutral), None),
                LabeledPost::new("q", Some("p"), "a zzz c", None, Some(DialogActLabel::A)),
            ],
        };
        let v = Vocabulary::build(std::slice::from_ref(&d), 1).unwrap();
        let e = encode_dialog(&d, &v);
        assert_eq!(e.posts[0].len(), 2);
        assert_eq!(e.posts[1].len(), 3);
        assert_eq!(e.sentiment, [Some(SentimentLabel::Neutral), None]);
        assert_eq!(e.dialog_act, [None, Some(DialogActLabel::A)]);

        let small = Vocabulary::build(
            &[LinearDialog { posts: vec![d.posts[0].clone()], ..d.clone() }],
            1,
        )
        .unwrap();
        assert_eq!(small.encode(&["a".into(), "zzz".into()]), [small.index_of("a"), 0]);
    }
}

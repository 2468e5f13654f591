use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::PrevSentiment;
use crate::corpus::{DialogActLabel, DialogTree, LabeledPost, SentimentLabel};
use crate::error::{Error, Result};
use crate::rng;

/// Parameters of the synthetic reply-tree generator.
///
/// Dialog acts are drawn from the corpus prior. A post's sentiment is the
/// dialog act's preferred sentiment with weight `coupling`, the parent's
/// sentiment with weight `persistence` (the preferred one at the root) and
/// uniform with weight `noise`. Each post carries one cue word for its dialog
/// act, with probability `sentiment_cue_rate` one cue word for its sentiment,
/// and a few filler words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_trees: usize,
    pub min_posts: usize,
    pub max_posts: usize,
    /// Chance that a post replies to a random earlier post instead of the
    /// latest one. Zero gives chains.
    pub branching: f64,
    pub coupling: f64,
    pub persistence: f64,
    pub noise: f64,
    pub da_cue_pool: usize,
    pub sentiment_cue_pool: usize,
    pub sentiment_cue_rate: f64,
    pub filler_pool: usize,
    pub filler_words: (usize, usize),
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_trees: 100,
            min_posts: 2,
            max_posts: 8,
            branching: 0.0,
            coupling: 0.75,
            persistence: 0.15,
            noise: 0.10,
            da_cue_pool: 8,
            sentiment_cue_pool: 40,
            sentiment_cue_rate: 0.3,
            filler_pool: 30,
            filler_words: (2, 5),
        }
    }
}

/// The sentiment each dialog act pulls towards in generated data.
pub fn preferred_sentiment(da: DialogActLabel) -> SentimentLabel {
    use DialogActLabel::*;
    match da {
        A | E | S | F | H | T => SentimentLabel::Positive,
        D | R | J | M => SentimentLabel::Negative,
        Q | O | I | W | V => SentimentLabel::Neutral,
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.coupling, self.persistence, self.noise];
        if weights.iter().any(|w| !(0.0..=1.0).contains(w)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(
                "coupling, persistence and noise must be in [0,1] and sum to 1".into(),
            ));
        }
        if self.min_posts == 0 || self.min_posts > self.max_posts {
            return Err(Error::Validation("need 1 <= min_posts <= max_posts".into()));
        }
        if !(0.0..=1.0).contains(&self.branching) || !(0.0..=1.0).contains(&self.sentiment_cue_rate) {
            return Err(Error::Validation("rates must be in [0,1]".into()));
        }
        if self.da_cue_pool == 0 || self.sentiment_cue_pool == 0 || self.filler_pool == 0 {
            return Err(Error::Validation("word pools must be non-empty".into()));
        }
        if self.filler_words.0 > self.filler_words.1 {
            return Err(Error::Validation("filler word range is inverted".into()));
        }
        Ok(())
    }

    /// The generating distribution p(s | da, prev) in [`SentimentLabel::ALL`] order.
    pub fn sentiment_distribution(&self, prev: PrevSentiment, da: DialogActLabel) -> [f64; 3] {
        let pref = preferred_sentiment(da);
        let carried = match prev {
            PrevSentiment::Start => pref,
            PrevSentiment::Positive => SentimentLabel::Positive,
            PrevSentiment::Negative => SentimentLabel::Negative,
            PrevSentiment::Neutral => SentimentLabel::Neutral,
        };
        let mut p = [self.noise / 3.0; 3];
        p[pref.index()] += self.coupling;
        p[carried.index()] += self.persistence;
        p
    }
}

/// Generates `spec.n_trees` labeled reply trees named `syn{i}`.
pub fn generate(spec: &SyntheticSpec, seed: u64) -> Result<Vec<DialogTree>> {
    spec.validate()?;
    let mut rng = rng::seeded(seed);
    let da_dist = WeightedIndex::new(DialogActLabel::corpus_distribution()).expect("prior is positive");
    let mut trees = Vec::with_capacity(spec.n_trees);
    for t in 0..spec.n_trees {
        let n = rng.random_range(spec.min_posts..=spec.max_posts);
        let mut posts: Vec<LabeledPost> = Vec::with_capacity(n);
        for i in 0..n {
            let parent = match i {
                0 => None,
                _ if spec.branching > 0.0 && rng.random_bool(spec.branching) => Some(rng.random_range(0..i)),
                _ => Some(i - 1),
            };
            let da = DialogActLabel::ALL[da_dist.sample(&mut rng)];
            let prev = parent
                .and_then(|p| posts[p].sentiment)
                .map_or(PrevSentiment::Start, PrevSentiment::after);
            let s_dist = WeightedIndex::new(spec.sentiment_distribution(prev, da)).expect("weights sum to 1");
            let s = SentimentLabel::ALL[s_dist.sample(&mut rng)];

            let mut words = vec![format!("{}{}", da.code().to_ascii_lowercase(), rng.random_range(0..spec.da_cue_pool))];
            if rng.random_bool(spec.sentiment_cue_rate) {
                words.push(format!("{}{}", &s.name()[..3], rng.random_range(0..spec.sentiment_cue_pool)));
            }
            for _ in 0..rng.random_range(spec.filler_words.0..=spec.filler_words.1) {
                words.push(format!("w{}", rng.random_range(0..spec.filler_pool)));
            }
            let cut = rng.random_range(0..words.len());
            words.rotate_left(cut);
            let parent_id = parent.map(|p| format!("syn{t}.{p}"));
            posts.push(LabeledPost::new(
                format!("syn{t}.{i}"),
                parent_id.as_deref(),
                &words.join(" "),
                Some(s),
                Some(da),
            ));
        }
        trees.push(DialogTree::from_posts(format!("syn{t}"), posts)?);
    }
    Ok(trees)
}

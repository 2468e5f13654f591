//! The two-level hierarchical network.
//!
//! Each post's word embeddings run through a bidirectional LSTM; the final
//! hidden states of both directions are concatenated into one post vector.
//! A tanh RNN runs over the post vectors of a dialog, and its state at every
//! post feeds two MLP heads (affine, ReLU, affine) producing sentiment and
//! dialog-act logits. Posts and dialogs keep their own lengths; nothing is
//! padded.

mod config;

pub use config::ModelConfig;

use rand::Rng as _;

use crate::autodiff::{grad_check, Axis, GradCheckReport, Graph, OpKind, ParamId, ParamStore, Tensor, Var};
use crate::corpus::{DialogActLabel, SentimentLabel};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Forward-pass mode. Dropout is active only in training.
pub enum Mode<'r> {
    Train(&'r mut Rng),
    Inference,
}

impl Mode<'_> {
    fn dropout(&mut self, g: &mut Graph<'_>, x: Var, rate: f64) -> Result<Var> {
        match self {
            Mode::Train(rng) => g.dropout(x, rate, true, rng),
            Mode::Inference => Ok(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmParams {
    /// input → gates, `input_dim × 4h`, gate blocks ordered input, forget, output, candidate
    pub w_x: ParamId,
    /// hidden → gates, `h × 4h`
    pub w_h: ParamId,
    pub b: ParamId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadParams {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamIds {
    pub embedding: ParamId,
    pub post_fwd: LstmParams,
    pub post_bwd: LstmParams,
    pub dialog_w_x: ParamId,
    pub dialog_w_h: ParamId,
    pub dialog_b: ParamId,
    pub sentiment_head: HeadParams,
    pub da_head: HeadParams,
}

/// Per-post logits for one dialog.
#[derive(Debug, Clone, Copy)]
pub struct DialogOutputs {
    /// `n_posts × 3`
    pub sentiment: Var,
    /// `n_posts × 15`
    pub dialog_act: Var,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalModel {
    pub config: ModelConfig,
    pub params: ParamStore,
    pub ids: ParamIds,
}

fn glorot(rows: usize, cols: usize, rng: &mut Rng) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.random_range(-limit..=limit)).collect();
    Tensor::matrix(rows, cols, data).expect("finite init")
}

impl HierarchicalModel {
    /// Fresh parameters: Glorot-uniform matrices, zero biases, LSTM forget
    /// gate biases at 1.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = crate::rng::seeded(seed);
        let mut ps = ParamStore::new();
        let c = &config;
        let embedding = ps.add("embedding", glorot(c.vocab_size, c.embed_dim, &mut rng))?;
        let lstm = |ps: &mut ParamStore, rng: &mut Rng, prefix: &str| -> Result<LstmParams> {
            let h = c.lstm_hidden;
            let w_x = ps.add(format!("{prefix}.w_x"), glorot(c.embed_dim, 4 * h, rng))?;
            let w_h = ps.add(format!("{prefix}.w_h"), glorot(h, 4 * h, rng))?;
            let mut bias = vec![0.0; 4 * h];
            bias[h..2 * h].fill(1.0);
            let b = ps.add(format!("{prefix}.b"), Tensor::vector(bias)?)?;
            Ok(LstmParams { w_x, w_h, b })
        };
        let post_fwd = lstm(&mut ps, &mut rng, "post_fwd")?;
        let post_bwd = lstm(&mut ps, &mut rng, "post_bwd")?;
        let hd = c.dialog_hidden;
        let dialog_w_x = ps.add("dialog.w_x", glorot(2 * c.lstm_hidden, hd, &mut rng))?;
        let dialog_w_h = ps.add("dialog.w_h", glorot(hd, hd, &mut rng))?;
        let dialog_b = ps.add("dialog.b", Tensor::zeros(&[hd]))?;
        let head = |ps: &mut ParamStore, rng: &mut Rng, prefix: &str, k: usize| -> Result<HeadParams> {
            Ok(HeadParams {
                w1: ps.add(format!("{prefix}.w1"), glorot(hd, hd, rng))?,
                b1: ps.add(format!("{prefix}.b1"), Tensor::zeros(&[hd]))?,
                w2: ps.add(format!("{prefix}.w2"), glorot(hd, k, rng))?,
                b2: ps.add(format!("{prefix}.b2"), Tensor::zeros(&[k]))?,
            })
        };
        let sentiment_head = head(&mut ps, &mut rng, "head_sentiment", c.n_sentiment)?;
        let da_head = head(&mut ps, &mut rng, "head_dialog_act", c.n_da)?;
        let ids = ParamIds {
            embedding,
            post_fwd,
            post_bwd,
            dialog_w_x,
            dialog_w_h,
            dialog_b,
            sentiment_head,
            da_head,
        };
        debug_assert_eq!(ps.num_weights(), config.parameter_count());
        Ok(Self {
            config,
            params: ps,
            ids,
        })
    }

    /// Rebuilds a model around loaded parameters, checking names and shapes.
    pub fn from_params(config: ModelConfig, params: ParamStore) -> Result<Self> {
        let mut fresh = Self::new(config, 0)?;
        fresh.params.copy_values_from(&params)?;
        Ok(fresh)
    }

    pub fn parameter_count(&self) -> usize {
        self.params.num_weights()
    }

    /// Runs one LSTM direction over the embedded tokens and returns the final
    /// hidden state (`1 × h`). `reverse` walks the post right to left.
    fn lstm(&self, g: &mut Graph<'_>, p: LstmParams, embedded: Var, reverse: bool) -> Result<Var> {
        let h = self.config.lstm_hidden;
        let (len, _) = g.dims(embedded);
        let (w_x, w_h, b) = (g.param(p.w_x), g.param(p.w_h), g.param(p.b));
        let proj = g.matmul(embedded, w_x)?;
        let proj = g.add(proj, b)?;
        let mut state: Option<(Var, Var)> = None;
        let steps: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new((0..len).rev())
        } else {
            Box::new(0..len)
        };
        for t in steps {
            let x_t = g.slice_rows(proj, t, 1)?;
            let pre = match state {
                None => x_t,
                Some((h_prev, _)) => {
                    let rec = g.matmul(h_prev, w_h)?;
                    g.add(x_t, rec)?
                }
            };
            let gates = g.slice_cols(pre, 0, 3 * h)?;
            let gates = g.sigmoid(gates)?;
            let i = g.slice_cols(gates, 0, h)?;
            let f = g.slice_cols(gates, h, h)?;
            let o = g.slice_cols(gates, 2 * h, h)?;
            let cand = g.slice_cols(pre, 3 * h, h)?;
            let cand = g.tanh(cand)?;
            let ig = g.mul(i, cand)?;
            let c = match state {
                None => ig,
                Some((_, c_prev)) => {
                    let fc = g.mul(f, c_prev)?;
                    g.add(fc, ig)?
                }
            };
            let tc = g.tanh(c)?;
            let h_t = g.mul(o, tc)?;
            state = Some((h_t, c));
        }
        Ok(state.expect("non-empty post").0)
    }

    /// Post vector `[h_forward_final, h_backward_final]`, shape `1 × 2h`.
    pub fn encode_post(&self, g: &mut Graph<'_>, tokens: &[usize]) -> Result<Var> {
        if tokens.is_empty() {
            return Err(Error::Validation("cannot encode an empty post".into()));
        }
        let embedded = g.embedding(self.ids.embedding, tokens)?;
        let fwd = self.lstm(g, self.ids.post_fwd, embedded, false)?;
        let bwd = self.lstm(g, self.ids.post_bwd, embedded, true)?;
        g.concat(fwd, bwd, Axis::Cols)
    }

    /// `h_t = tanh(W_h h_{t-1} + W_x x_t + b)` from `h_0 = 0`, one state per
    /// row of `post_vectors`; returns the states stacked (`n × dialog_hidden`).
    pub fn encode_dialog(&self, g: &mut Graph<'_>, post_vectors: Var) -> Result<Var> {
        let (n, _) = g.dims(post_vectors);
        let (w_x, w_h, b) = (
            g.param(self.ids.dialog_w_x),
            g.param(self.ids.dialog_w_h),
            g.param(self.ids.dialog_b),
        );
        let proj = g.matmul(post_vectors, w_x)?;
        let proj = g.add(proj, b)?;
        let mut states = Vec::with_capacity(n);
        for t in 0..n {
            let x_t = g.slice_rows(proj, t, 1)?;
            let pre = match states.last() {
                None => x_t,
                Some(&h_prev) => {
                    let rec = g.matmul(h_prev, w_h)?;
                    g.add(x_t, rec)?
                }
            };
            states.push(g.tanh(pre)?);
        }
        g.stack_rows(&states)
    }

    fn head(&self, g: &mut Graph<'_>, p: HeadParams, states: Var) -> Result<Var> {
        let (w1, b1, w2, b2) = (g.param(p.w1), g.param(p.b1), g.param(p.w2), g.param(p.b2));
        let hidden = g.matmul(states, w1)?;
        let hidden = g.add(hidden, b1)?;
        let hidden = g.relu(hidden)?;
        let out = g.matmul(hidden, w2)?;
        g.add(out, b2)
    }

    /// Full forward pass over one dialog given as token indices per post.
    pub fn forward(&self, g: &mut Graph<'_>, posts: &[Vec<usize>], mut mode: Mode<'_>) -> Result<DialogOutputs> {
        if posts.is_empty() {
            return Err(Error::Validation("cannot run the model on an empty dialog".into()));
        }
        let rate = self.config.dropout;
        let vectors = posts
            .iter()
            .map(|p| self.encode_post(g, p))
            .collect::<Result<Vec<_>>>()?;
        let stacked = g.stack_rows(&vectors)?;
        let stacked = mode.dropout(g, stacked, rate)?;
        let states = self.encode_dialog(g, stacked)?;
        let states = mode.dropout(g, states, rate)?;
        Ok(DialogOutputs {
            sentiment: self.head(g, self.ids.sentiment_head, states)?,
            dialog_act: self.head(g, self.ids.da_head, states)?,
        })
    }

    /// Inference-mode logits as plain rows: `(sentiment, dialog_act)` per post.
    pub fn logits(&self, posts: &[Vec<usize>]) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        let mut g = Graph::new(&self.params);
        let out = self.forward(&mut g, posts, Mode::Inference)?;
        let (s, d) = (g.value(out.sentiment), g.value(out.dialog_act));
        let (ks, kd) = (self.config.n_sentiment, self.config.n_da);
        Ok((0..posts.len())
            .map(|t| (s[t * ks..(t + 1) * ks].to_vec(), d[t * kd..(t + 1) * kd].to_vec()))
            .collect())
    }

    /// Argmax labels per post.
    pub fn predict(&self, posts: &[Vec<usize>]) -> Result<Vec<(SentimentLabel, DialogActLabel)>> {
        Ok(self
            .logits(posts)?
            .iter()
            .map(|(s, d)| {
                (
                    SentimentLabel::from_index(argmax(s)).expect("3 sentiment logits"),
                    DialogActLabel::from_index(argmax(d)).expect("15 dialog act logits"),
                )
            })
            .collect())
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Finite-difference check of the whole model on a two-post dialog, with
/// small dimensions and every weight jittered off its initial value so no
/// gradient is trivially zero. Dropout is off.
pub fn model_grad_check(eps: f64, fault: Option<OpKind>) -> Result<GradCheckReport> {
    let config = ModelConfig {
        vocab_size: 5,
        embed_dim: 3,
        lstm_hidden: 2,
        dialog_hidden: 3,
        dropout: 0.0,
        n_sentiment: 3,
        n_da: 15,
    };
    let mut model = HierarchicalModel::new(config, 13)?;
    let mut rng = crate::rng::seeded(99);
    for p in model.params.iter_mut() {
        for v in p.value.data_mut() {
            *v += rng.random_range(-0.3..0.3);
        }
    }
    let shape = model.clone();
    let posts = vec![vec![1, 2, 3], vec![4]];
    grad_check(&mut model.params, eps, |g| {
        if let Some(k) = fault {
            g.inject_fault(k);
        }
        let out = shape.forward(g, &posts, Mode::Inference)?;
        let ls = g.cross_entropy_rows(out.sentiment, &[Some(0), Some(1)])?;
        let ld = g.cross_entropy_rows(out.dialog_act, &[Some(2), Some(9)])?;
        g.sum(&[ls, ld])
    })
}

#[cfg(test)]
mod tests;

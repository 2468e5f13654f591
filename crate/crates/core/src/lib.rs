//! Joint dialog-act and sentiment recognition on threaded social-media
//! dialogs with a two-level hierarchical recurrent network.
//!
//! - [`corpus`]: tree-TSV parsing, reply trees, linearization, vocabulary, splits
//! - [`autodiff`]: reverse-mode differentiation, SGD, gradient checking, checkpoints
//! - [`model`]: bi-LSTM post encoder, dialog RNN and the two classification heads
//! - [`training`]: multi-task loss, model selection, cross-validation, transfer regimes
//! - [`metrics`]: F1 variants and Cohen's kappa
//! - [`analysis`]: sentiment transition tables, label dynamics, synthetic corpora

pub mod analysis;
pub mod autodiff;
pub mod config;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod training;

pub use error::{Error, Result};

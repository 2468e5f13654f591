//! Minimal reverse-mode automatic differentiation over dense `f64` tensors.

mod checkpoint;
mod gradcheck;
mod graph;
mod param;
mod suite;
mod tensor;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_HEADER};
pub use gradcheck::{grad_check, relative_error, GradCheckReport, RELATIVE_FLOOR};
pub use graph::{Axis, Graph, OpKind, Var};
pub use param::{sgd_step, Gradients, ParamId, ParamStore, Parameter};
pub use suite::{op_suite, SuiteEntry};
pub use tensor::Tensor;

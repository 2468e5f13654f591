use std::collections::HashMap;

use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A trainable tensor with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
}

/// Named parameters in registration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Parameter>,
    by_name: HashMap<String, ParamId>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::Validation(format!("duplicate parameter {name}")));
        }
        let id = ParamId(self.params.len());
        let grad = Tensor::zeros(value.shape());
        self.by_name.insert(name.clone(), id);
        self.params.push(Parameter { name, value, grad });
        Ok(id)
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied()
    }

    pub fn by_name(&self, name: &str) -> Option<&Parameter> {
        self.id(name).map(|id| self.get(id))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar weights.
    pub fn num_weights(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// Adds a backward pass's gradients into `grad`.
    pub fn accumulate(&mut self, grads: &Gradients) {
        for (p, g) in self.params.iter_mut().zip(&grads.per_param) {
            match g {
                None => {}
                Some(ParamGrad::Dense(g)) => {
                    for (a, b) in p.grad.data_mut().iter_mut().zip(g) {
                        *a += b;
                    }
                }
                Some(ParamGrad::Rows { width, rows }) => {
                    let data = p.grad.data_mut();
                    for (&r, g) in rows {
                        for (a, b) in data[r * width..(r + 1) * width].iter_mut().zip(g) {
                            *a += b;
                        }
                    }
                }
            }
        }
    }

    /// Copies values from another store with identical names and shapes.
    pub fn copy_values_from(&mut self, other: &ParamStore) -> Result<()> {
        if self.params.len() != other.params.len() {
            return Err(Error::Shape("parameter stores differ in size".into()));
        }
        for (a, b) in self.params.iter_mut().zip(&other.params) {
            if a.name != b.name || a.value.shape() != b.value.shape() {
                return Err(Error::Shape(format!(
                    "parameter {} {:?} vs {} {:?}",
                    a.name,
                    a.value.shape(),
                    b.name,
                    b.value.shape()
                )));
            }
            a.value.data_mut().copy_from_slice(b.value.data());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum ParamGrad {
    Dense(Vec<f64>),
    /// Sparse rows of a matrix, keyed by row index (embedding gradients).
    Rows {
        width: usize,
        rows: std::collections::BTreeMap<usize, Vec<f64>>,
    },
}

/// Parameter gradients produced by one backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub(crate) per_param: Vec<Option<ParamGrad>>,
}

impl Gradients {
    /// Dense gradient of one parameter; zeros if it was not reached.
    pub fn dense(&self, id: ParamId, store: &ParamStore) -> Vec<f64> {
        let n = store.get(id).value.len();
        match self.per_param.get(id.0).and_then(Option::as_ref) {
            None => vec![0.0; n],
            Some(ParamGrad::Dense(g)) => g.clone(),
            Some(ParamGrad::Rows { width, rows }) => {
                let mut out = vec![0.0; n];
                for (&r, g) in rows {
                    out[r * width..(r + 1) * width].copy_from_slice(g);
                }
                out
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.per_param.iter().flatten().all(|g| match g {
            ParamGrad::Dense(v) => v.iter().all(|x| x.is_finite()),
            ParamGrad::Rows { rows, .. } => rows.values().flatten().all(|x| x.is_finite()),
        })
    }
}

/// Plain gradient descent: `value -= lr * grad`, then gradients are zeroed.
pub fn sgd_step(params: &mut ParamStore, lr: f64) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::Validation(format!("learning rate must be positive, got {lr}")));
    }
    for p in params.iter_mut() {
        let grad = p.grad.data();
        for (v, g) in p.value.data_mut().iter_mut().zip(grad) {
            *v -= lr * g;
        }
        if p.value.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sgd update of {}", p.name)));
        }
    }
    params.zero_grads();
    Ok(())
}

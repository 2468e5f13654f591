//! The computation tape.
//!
//! Forward operations append nodes to a [`Graph`]; [`Graph::backward`] walks
//! the nodes in exact reverse order, visiting each once, and returns the
//! parameter gradients. Parameter values are borrowed from a [`ParamStore`]
//! rather than copied onto the tape.

use std::collections::BTreeMap;

use rand::Rng as _;

use super::param::{Gradients, ParamGrad, ParamId, ParamStore};
use super::tensor::{check_finite, Tensor};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

#[derive(Debug)]
enum Op {
    Input,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    AddBias(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    Concat(Var, Var, Axis),
    StackRows(Vec<Var>),
    SliceRows(Var, usize),
    SliceCols(Var, usize),
    Embedding(ParamId, Vec<usize>),
    Dropout(Var, Vec<f64>),
    /// Row-wise softmax probabilities cached for the backward pass.
    CrossEntropy {
        logits: Var,
        probs: Vec<f64>,
        gold: Vec<Option<usize>>,
    },
    Sum(Vec<Var>),
    SumAll(Var),
}

#[derive(Debug)]
struct Node {
    op: Op,
    shape: Vec<usize>,
    /// Empty for parameter nodes, whose values live in the store.
    value: Vec<f64>,
}

/// Operation families, used to name gradient-check results and to inject
/// deliberate backward faults in negative-control tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    MatMul,
    Add,
    Mul,
    Scale,
    Sigmoid,
    Tanh,
    Relu,
    Concat,
    Slice,
    Embedding,
    Dropout,
    CrossEntropy,
    Sum,
}

impl OpKind {
    pub const ALL: [OpKind; 13] = [
        OpKind::MatMul,
        OpKind::Add,
        OpKind::Mul,
        OpKind::Scale,
        OpKind::Sigmoid,
        OpKind::Tanh,
        OpKind::Relu,
        OpKind::Concat,
        OpKind::Slice,
        OpKind::Embedding,
        OpKind::Dropout,
        OpKind::CrossEntropy,
        OpKind::Sum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::MatMul => "matmul",
            OpKind::Add => "add",
            OpKind::Mul => "mul",
            OpKind::Scale => "scale",
            OpKind::Sigmoid => "sigmoid",
            OpKind::Tanh => "tanh",
            OpKind::Relu => "relu",
            OpKind::Concat => "concat",
            OpKind::Slice => "slice",
            OpKind::Embedding => "embedding",
            OpKind::Dropout => "dropout",
            OpKind::CrossEntropy => "cross_entropy",
            OpKind::Sum => "sum",
        }
    }
}

impl std::str::FromStr for OpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OpKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown op {s:?}")))
    }
}

fn dims_of(shape: &[usize]) -> (usize, usize) {
    match shape {
        [] => (1, 1),
        [n] => (1, *n),
        [r, c] => (*r, *c),
        _ => unreachable!("at most two extents"),
    }
}

pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<Var>>,
    fault: Option<OpKind>,
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self {
            params,
            nodes: Vec::new(),
            param_nodes: vec![None; params.len()],
            fault: None,
        }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Corrupts the backward rule of one operation family (scaled by 1.5).
    /// Only for verifying that gradient checks catch wrong gradients.
    #[doc(hidden)]
    pub fn inject_fault(&mut self, kind: OpKind) {
        self.fault = Some(kind);
    }

    fn faulty(&self, kind: OpKind) -> f64 {
        if self.fault == Some(kind) {
            1.5
        } else {
            1.0
        }
    }

    pub fn value(&self, v: Var) -> &[f64] {
        match self.nodes[v.0].op {
            Op::Param(id) => self.params.get(id).value.data(),
            _ => &self.nodes[v.0].value,
        }
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn dims(&self, v: Var) -> (usize, usize) {
        dims_of(&self.nodes[v.0].shape)
    }

    pub fn tensor(&self, v: Var) -> Tensor {
        Tensor::new(self.shape(v).to_vec(), self.value(v).to_vec()).expect("tape values are finite")
    }

    pub fn scalar(&self, v: Var) -> f64 {
        self.value(v)[0]
    }

    fn push(&mut self, op: Op, shape: Vec<usize>, value: Vec<f64>, name: &str) -> Result<Var> {
        check_finite(&value, name)?;
        self.nodes.push(Node { op, shape, value });
        Ok(Var(self.nodes.len() - 1))
    }

    /// A constant; no gradient flows into it.
    pub fn input(&mut self, t: Tensor) -> Var {
        let shape = t.shape().to_vec();
        self.nodes.push(Node {
            op: Op::Input,
            shape,
            value: t.into_data(),
        });
        Var(self.nodes.len() - 1)
    }

    pub fn zeros(&mut self, shape: &[usize]) -> Var {
        self.input(Tensor::zeros(shape))
    }

    /// The node for a parameter; repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_nodes[id.0] {
            return v;
        }
        let shape = self.params.get(id).value.shape().to_vec();
        self.nodes.push(Node {
            op: Op::Param(id),
            shape,
            value: Vec::new(),
        });
        let v = Var(self.nodes.len() - 1);
        self.param_nodes[id.0] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.dims(a);
        let (k2, n) = self.dims(b);
        if self.shape(a).len() != 2 || self.shape(b).len() != 2 || k != k2 {
            return Err(Error::Shape(format!(
                "matmul {:?} x {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        let mut out = vec![0.0; m * n];
        let (av, bv) = (self.value(a), self.value(b));
        for i in 0..m {
            let row = &mut out[i * n..(i + 1) * n];
            for p in 0..k {
                let x = av[i * k + p];
                if x == 0.0 {
                    continue;
                }
                for (o, w) in row.iter_mut().zip(&bv[p * n..(p + 1) * n]) {
                    *o += x * w;
                }
            }
        }
        self.push(Op::MatMul(a, b), vec![m, n], out, "matmul")
    }

    /// Elementwise sum. `b` may also be a vector matching the last extent of
    /// `a`, in which case it is added to every row.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sa == sb {
            let out = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x + y).collect();
            return self.push(Op::Add(a, b), sa, out, "add");
        }
        let (_, cols) = dims_of(&sa);
        if sb.len() == 1 && sb[0] == cols && !sa.is_empty() {
            let bias = self.value(b);
            let out = self
                .value(a)
                .chunks(cols)
                .flat_map(|row| row.iter().zip(bias).map(|(x, y)| x + y))
                .collect();
            return self.push(Op::AddBias(a, b), sa, out, "add");
        }
        Err(Error::Shape(format!("add {sa:?} + {sb:?}")))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::Shape(format!("mul {:?} * {:?}", self.shape(a), self.shape(b))));
        }
        let out = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).collect();
        self.push(Op::Mul(a, b), self.shape(a).to_vec(), out, "mul")
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Result<Var> {
        let out = self.value(a).iter().map(|x| x * c).collect();
        self.push(Op::Scale(a, c), self.shape(a).to_vec(), out, "scale")
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).iter().map(|&x| sigmoid(x)).collect();
        self.push(Op::Sigmoid(a), self.shape(a).to_vec(), out, "sigmoid")
    }

    pub fn tanh(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).iter().map(|x| x.tanh()).collect();
        self.push(Op::Tanh(a), self.shape(a).to_vec(), out, "tanh")
    }

    /// `max(0, x)`; the subgradient at 0 is taken as 0.
    pub fn relu(&mut self, a: Var) -> Result<Var> {
        let out = self.value(a).iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect();
        self.push(Op::Relu(a), self.shape(a).to_vec(), out, "relu")
    }

    /// Concatenation. For vectors the only axis is [`Axis::Rows`] (axis 0),
    /// which joins their entries end to end.
    pub fn concat(&mut self, a: Var, b: Var, axis: Axis) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        let err = || Error::Shape(format!("concat {sa:?} ++ {sb:?} along {axis:?}"));
        let (shape, out) = match (sa.as_slice(), sb.as_slice(), axis) {
            ([n], [m], Axis::Rows) => {
                (vec![n + m], [self.value(a), self.value(b)].concat())
            }
            ([r1, c1], [r2, c2], Axis::Rows) if c1 == c2 => {
                (vec![r1 + r2, *c1], [self.value(a), self.value(b)].concat())
            }
            ([r1, c1], [r2, c2], Axis::Cols) if r1 == r2 => {
                let (av, bv) = (self.value(a), self.value(b));
                let out = (0..*r1)
                    .flat_map(|i| {
                        av[i * c1..(i + 1) * c1].iter().chain(&bv[i * c2..(i + 1) * c2]).copied()
                    })
                    .collect();
                (vec![*r1, c1 + c2], out)
            }
            _ => return Err(err()),
        };
        self.push(Op::Concat(a, b, axis), shape, out, "concat")
    }

    /// Stacks row vectors (1×n matrices or length-n vectors) into a matrix.
    pub fn stack_rows(&mut self, rows: &[Var]) -> Result<Var> {
        let Some(&first) = rows.first() else {
            return Err(Error::Shape("stack of zero rows".into()));
        };
        let (_, n) = self.dims(first);
        let mut out = Vec::with_capacity(rows.len() * n);
        for &r in rows {
            if self.dims(r) != (1, n) {
                return Err(Error::Shape(format!("stack row {:?}, expected width {n}", self.shape(r))));
            }
            out.extend_from_slice(self.value(r));
        }
        self.push(Op::StackRows(rows.to_vec()), vec![rows.len(), n], out, "stack_rows")
    }

    /// Rows `start..start + count` of a matrix.
    pub fn slice_rows(&mut self, a: Var, start: usize, count: usize) -> Result<Var> {
        let (r, c) = self.dims(a);
        if self.shape(a).len() != 2 || start + count > r || count == 0 {
            return Err(Error::Shape(format!("rows {start}..{} of {:?}", start + count, self.shape(a))));
        }
        let out = self.value(a)[start * c..(start + count) * c].to_vec();
        self.push(Op::SliceRows(a, start), vec![count, c], out, "slice_rows")
    }

    /// Columns `start..start + count` of a matrix.
    pub fn slice_cols(&mut self, a: Var, start: usize, count: usize) -> Result<Var> {
        let (r, c) = self.dims(a);
        if self.shape(a).len() != 2 || start + count > c || count == 0 {
            return Err(Error::Shape(format!("cols {start}..{} of {:?}", start + count, self.shape(a))));
        }
        let av = self.value(a);
        let out = (0..r).flat_map(|i| av[i * c + start..i * c + start + count].iter().copied()).collect();
        self.push(Op::SliceCols(a, start), vec![r, count], out, "slice_cols")
    }

    /// Gathers rows of an embedding matrix.
    pub fn embedding(&mut self, table: ParamId, indices: &[usize]) -> Result<Var> {
        let t = &self.params.get(table).value;
        let (v, d) = t.dims();
        if t.shape().len() != 2 {
            return Err(Error::Shape(format!("embedding table {:?}", t.shape())));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= v) {
            return Err(Error::Validation(format!("embedding index {bad} out of range 0..{v}")));
        }
        if indices.is_empty() {
            return Err(Error::Shape("embedding lookup of zero indices".into()));
        }
        let data = t.data();
        let out = indices.iter().flat_map(|&i| data[i * d..(i + 1) * d].iter().copied()).collect();
        self.push(Op::Embedding(table, indices.to_vec()), vec![indices.len(), d], out, "embedding")
    }

    /// Inverted dropout: in training each entry is zeroed with probability
    /// `rate` and survivors are scaled by `1 / (1 - rate)`; otherwise identity.
    pub fn dropout(&mut self, a: Var, rate: f64, training: bool, rng: &mut Rng) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Validation(format!("dropout rate {rate} outside [0, 1)")));
        }
        if !training || rate == 0.0 {
            return Ok(a);
        }
        let keep = 1.0 / (1.0 - rate);
        let mask: Vec<f64> = (0..self.value(a).len())
            .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let out = self.value(a).iter().zip(&mask).map(|(x, m)| x * m).collect();
        self.push(Op::Dropout(a, mask), self.shape(a).to_vec(), out, "dropout")
    }

    /// `-log softmax(logits)[gold]` for a single logit vector, computed with
    /// max subtraction.
    pub fn softmax_cross_entropy(&mut self, logits: Var, gold: usize) -> Result<Var> {
        let (r, _) = self.dims(logits);
        if r != 1 {
            return Err(Error::Shape(format!("logits {:?} are not a vector", self.shape(logits))));
        }
        self.cross_entropy_rows(logits, &[Some(gold)])
    }

    /// Summed cross-entropy over the rows of a logit matrix. Rows whose gold
    /// class is `None` contribute nothing.
    pub fn cross_entropy_rows(&mut self, logits: Var, gold: &[Option<usize>]) -> Result<Var> {
        let (r, k) = self.dims(logits);
        if gold.len() != r {
            return Err(Error::Shape(format!("{} gold labels for {r} logit rows", gold.len())));
        }
        if k < 2 {
            return Err(Error::Shape(format!("cross-entropy needs at least 2 classes, got {k}")));
        }
        if let Some(bad) = gold.iter().flatten().find(|&&g| g >= k) {
            return Err(Error::Validation(format!("gold class {bad} out of range 0..{k}")));
        }
        let lv = self.value(logits);
        let mut probs = vec![0.0; r * k];
        let mut loss = 0.0;
        for i in 0..r {
            let row = &lv[i * k..(i + 1) * k];
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = row.iter().map(|x| (x - max).exp()).sum();
            for (p, x) in probs[i * k..(i + 1) * k].iter_mut().zip(row) {
                *p = (x - max).exp() / z;
            }
            if let Some(g) = gold[i] {
                loss += z.ln() - (row[g] - max);
            }
        }
        self.push(
            Op::CrossEntropy {
                logits,
                probs,
                gold: gold.to_vec(),
            },
            vec![],
            vec![loss],
            "cross_entropy",
        )
    }

    /// Sum of same-shaped nodes.
    pub fn sum(&mut self, terms: &[Var]) -> Result<Var> {
        let Some(&first) = terms.first() else {
            return Ok(self.input(Tensor::scalar(0.0)?));
        };
        let shape = self.shape(first).to_vec();
        let mut out = vec![0.0; self.value(first).len()];
        for &t in terms {
            if self.shape(t) != shape.as_slice() {
                return Err(Error::Shape(format!("sum of {shape:?} and {:?}", self.shape(t))));
            }
            for (o, x) in out.iter_mut().zip(self.value(t)) {
                *o += x;
            }
        }
        self.push(Op::Sum(terms.to_vec()), shape, out, "sum")
    }

    /// Sum of all entries, as a scalar.
    pub fn sum_all(&mut self, a: Var) -> Result<Var> {
        let total = self.value(a).iter().sum();
        self.push(Op::SumAll(a), vec![], vec![total], "sum_all")
    }

    /// Reverse pass from a scalar node. Gradients of every parameter reached
    /// from `loss` are returned; add them into the store with
    /// [`ParamStore::accumulate`].
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(Error::Shape(format!(
                "backward needs a scalar, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Vec<f64>> = (0..=loss.0).map(|_| Vec::new()).collect();
        grads[loss.0] = vec![1.0];
        let mut out = Gradients {
            per_param: vec![None; self.params.len()],
        };

        fn acc(grads: &mut [Vec<f64>], v: Var, len: usize) -> &mut [f64] {
            let g = &mut grads[v.0];
            if g.is_empty() {
                *g = vec![0.0; len];
            }
            g
        }

        for i in (0..=loss.0).rev() {
            let g = std::mem::take(&mut grads[i]);
            if g.is_empty() {
                continue;
            }
            let node = &self.nodes[i];
            match &node.op {
                Op::Input => {}
                Op::Param(id) => add_dense(&mut out.per_param[id.0], g),
                Op::MatMul(a, b) => {
                    let f = self.faulty(OpKind::MatMul);
                    let ((m, k), (_, n)) = (self.dims(*a), self.dims(*b));
                    let (av, bv) = (self.value(*a), self.value(*b));
                    let ga = acc(&mut grads, *a, m * k);
                    for r in 0..m {
                        let grow = &g[r * n..(r + 1) * n];
                        for p in 0..k {
                            let brow = &bv[p * n..(p + 1) * n];
                            let dot: f64 = grow.iter().zip(brow).map(|(x, y)| x * y).sum();
                            ga[r * k + p] += f * dot;
                        }
                    }
                    let gb = acc(&mut grads, *b, k * n);
                    for r in 0..m {
                        let grow = &g[r * n..(r + 1) * n];
                        for p in 0..k {
                            let x = av[r * k + p];
                            if x == 0.0 {
                                continue;
                            }
                            for (o, y) in gb[p * n..(p + 1) * n].iter_mut().zip(grow) {
                                *o += x * y;
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    let f = self.faulty(OpKind::Add);
                    for v in [a, b] {
                        for (o, x) in acc(&mut grads, *v, g.len()).iter_mut().zip(&g) {
                            *o += f * x;
                        }
                    }
                }
                Op::AddBias(a, b) => {
                    let f = self.faulty(OpKind::Add);
                    for (o, x) in acc(&mut grads, *a, g.len()).iter_mut().zip(&g) {
                        *o += x;
                    }
                    let cols = self.value(*b).len();
                    let gb = acc(&mut grads, *b, cols);
                    for row in g.chunks(cols) {
                        for (o, x) in gb.iter_mut().zip(row) {
                            *o += f * x;
                        }
                    }
                }
                Op::Mul(a, b) => {
                    let f = self.faulty(OpKind::Mul);
                    let (av, bv) = (self.value(*a), self.value(*b));
                    for (o, (x, y)) in acc(&mut grads, *a, g.len()).iter_mut().zip(g.iter().zip(bv)) {
                        *o += f * x * y;
                    }
                    for (o, (x, y)) in acc(&mut grads, *b, g.len()).iter_mut().zip(g.iter().zip(av)) {
                        *o += x * y;
                    }
                }
                Op::Scale(a, c) => {
                    let f = self.faulty(OpKind::Scale);
                    for (o, x) in acc(&mut grads, *a, g.len()).iter_mut().zip(&g) {
                        *o += f * c * x;
                    }
                }
                Op::Sigmoid(a) => {
                    let f = self.faulty(OpKind::Sigmoid);
                    for (o, (x, s)) in acc(&mut grads, *a, g.len()).iter_mut().zip(g.iter().zip(&node.value)) {
                        *o += f * x * s * (1.0 - s);
                    }
                }
                Op::Tanh(a) => {
                    let f = self.faulty(OpKind::Tanh);
                    for (o, (x, t)) in acc(&mut grads, *a, g.len()).iter_mut().zip(g.iter().zip(&node.value)) {
                        *o += f * x * (1.0 - t * t);
                    }
                }
                Op::Relu(a) => {
                    let f = self.faulty(OpKind::Relu);
                    let av = self.value(*a);
                    for (o, (x, z)) in acc(&mut grads, *a, g.len()).iter_mut().zip(g.iter().zip(av)) {
                        if *z > 0.0 {
                            *o += f * x;
                        }
                    }
                }
                Op::Concat(a, b, axis) => {
                    let f = self.faulty(OpKind::Concat);
                    let (la, lb) = (self.value(*a).len(), self.value(*b).len());
                    match (axis, self.shape(*a).len()) {
                        (Axis::Cols, 2) => {
                            let ((r, c1), (_, c2)) = (self.dims(*a), self.dims(*b));
                            let ga = acc(&mut grads, *a, la);
                            for i in 0..r {
                                for j in 0..c1 {
                                    ga[i * c1 + j] += f * g[i * (c1 + c2) + j];
                                }
                            }
                            let gb = acc(&mut grads, *b, lb);
                            for i in 0..r {
                                for j in 0..c2 {
                                    gb[i * c2 + j] += g[i * (c1 + c2) + c1 + j];
                                }
                            }
                        }
                        _ => {
                            for (o, x) in acc(&mut grads, *a, la).iter_mut().zip(&g[..la]) {
                                *o += f * x;
                            }
                            for (o, x) in acc(&mut grads, *b, lb).iter_mut().zip(&g[la..]) {
                                *o += x;
                            }
                        }
                    }
                }
                Op::StackRows(rows) => {
                    let f = self.faulty(OpKind::Concat);
                    let n = g.len() / rows.len();
                    for (k, r) in rows.iter().enumerate() {
                        for (o, x) in acc(&mut grads, *r, n).iter_mut().zip(&g[k * n..(k + 1) * n]) {
                            *o += f * x;
                        }
                    }
                }
                Op::SliceRows(a, start) => {
                    let f = self.faulty(OpKind::Slice);
                    let (_, c) = self.dims(*a);
                    let la = self.value(*a).len();
                    let ga = acc(&mut grads, *a, la);
                    for (o, x) in ga[start * c..start * c + g.len()].iter_mut().zip(&g) {
                        *o += f * x;
                    }
                }
                Op::SliceCols(a, start) => {
                    let f = self.faulty(OpKind::Slice);
                    let (r, c) = self.dims(*a);
                    let count = g.len() / r;
                    let ga = acc(&mut grads, *a, r * c);
                    for i in 0..r {
                        for j in 0..count {
                            ga[i * c + start + j] += f * g[i * count + j];
                        }
                    }
                }
                Op::Embedding(id, indices) => {
                    let f = self.faulty(OpKind::Embedding);
                    let (_, d) = self.params.get(*id).value.dims();
                    let mut rows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
                    for (k, &row) in indices.iter().enumerate() {
                        let dst = rows.entry(row).or_insert_with(|| vec![0.0; d]);
                        for (o, x) in dst.iter_mut().zip(&g[k * d..(k + 1) * d]) {
                            *o += f * x;
                        }
                    }
                    add_rows(&mut out.per_param[id.0], d, rows, self.params.get(*id).value.len());
                }
                Op::Dropout(a, mask) => {
                    let f = self.faulty(OpKind::Dropout);
                    for (o, (x, m)) in acc(&mut grads, *a, g.len()).iter_mut().zip(g.iter().zip(mask)) {
                        *o += f * x * m;
                    }
                }
                Op::CrossEntropy { logits, probs, gold } => {
                    let f = self.faulty(OpKind::CrossEntropy);
                    let (_, k) = self.dims(*logits);
                    let up = g[0];
                    let gl = acc(&mut grads, *logits, probs.len());
                    for (row, gold) in gold.iter().enumerate() {
                        let Some(gold) = gold else { continue };
                        for c in 0..k {
                            let onehot = if c == *gold { 1.0 } else { 0.0 };
                            gl[row * k + c] += f * up * (probs[row * k + c] - onehot);
                        }
                    }
                }
                Op::SumAll(a) => {
                    let f = self.faulty(OpKind::Sum);
                    let la = self.value(*a).len();
                    for o in acc(&mut grads, *a, la).iter_mut() {
                        *o += f * g[0];
                    }
                }
                Op::Sum(terms) => {
                    let f = self.faulty(OpKind::Sum);
                    for t in terms {
                        for (o, x) in acc(&mut grads, *t, g.len()).iter_mut().zip(&g) {
                            *o += f * x;
                        }
                    }
                }
            }
        }
        if !out.is_finite() {
            return Err(Error::NonFinite("backward pass".into()));
        }
        Ok(out)
    }
}

fn add_dense(slot: &mut Option<ParamGrad>, g: Vec<f64>) {
    match slot {
        None => *slot = Some(ParamGrad::Dense(g)),
        Some(ParamGrad::Dense(d)) => d.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
        Some(ParamGrad::Rows { width, rows }) => {
            let mut d = g;
            for (&r, v) in rows.iter() {
                d[r * *width..(r + 1) * *width].iter_mut().zip(v).for_each(|(a, b)| *a += b);
            }
            *slot = Some(ParamGrad::Dense(d));
        }
    }
}

fn add_rows(slot: &mut Option<ParamGrad>, width: usize, new: BTreeMap<usize, Vec<f64>>, len: usize) {
    match slot {
        None => *slot = Some(ParamGrad::Rows { width, rows: new }),
        Some(ParamGrad::Rows { rows, .. }) => {
            for (r, v) in new {
                let dst = rows.entry(r).or_insert_with(|| vec![0.0; width]);
                dst.iter_mut().zip(&v).for_each(|(a, b)| *a += b);
            }
        }
        Some(ParamGrad::Dense(d)) => {
            debug_assert_eq!(d.len(), len);
            for (r, v) in new {
                d[r * width..(r + 1) * width].iter_mut().zip(&v).for_each(|(a, b)| *a += b);
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

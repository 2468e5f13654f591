//! A fixed battery of gradient checks, one per operation family.

use serde::Serialize;

use super::gradcheck::{grad_check, GradCheckReport};
use super::graph::{Axis, Graph, OpKind, Var};
use super::param::{ParamId, ParamStore};
use super::tensor::Tensor;
use crate::error::Result;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteEntry {
    pub name: String,
    pub report: GradCheckReport,
}

fn random(rows: usize, cols: usize, seed: u64) -> Tensor {
    use rand::Rng as _;
    let mut r = rng::seeded(seed);
    let data = (0..rows * cols).map(|_| r.random_range(-1.0..1.0)).collect();
    Tensor::matrix(rows, cols, data).expect("finite values")
}

/// Reduces `v` to a scalar through fixed random weights so every entry of
/// `v` receives a distinct upstream gradient.
fn project(g: &mut Graph<'_>, v: Var, seed: u64) -> Result<Var> {
    let (r, c) = g.dims(v);
    let w = g.input(random(r, c, seed));
    let w = if g.shape(v).len() == 2 {
        w
    } else {
        g.input(Tensor::vector(g.value(w).to_vec())?)
    };
    let p = g.mul(v, w)?;
    g.sum_all(p)
}

fn check(
    name: &str,
    shapes: &[(usize, usize)],
    eps: f64,
    fault: Option<OpKind>,
    body: impl Fn(&mut Graph<'_>, &[Var]) -> Result<Var>,
) -> Result<SuiteEntry> {
    let mut ps = ParamStore::new();
    let ids: Vec<ParamId> = shapes
        .iter()
        .enumerate()
        .map(|(i, &(r, c))| {
            let t = random(r.max(1), c, 100 + i as u64);
            // zero rows stands for a plain vector
            let t = if r == 0 { Tensor::vector(t.data().to_vec())? } else { t };
            ps.add(format!("{name}.x{i}"), t)
        })
        .collect::<Result<_>>()?;
    let report = grad_check(&mut ps, eps, |g| {
        if let Some(k) = fault {
            g.inject_fault(k);
        }
        let xs: Vec<Var> = ids.iter().map(|&id| g.param(id)).collect();
        let y = body(g, &xs)?;
        if g.shape(y).is_empty() {
            Ok(y)
        } else {
            project(g, y, 7)
        }
    })?;
    Ok(SuiteEntry {
        name: name.to_owned(),
        report,
    })
}

/// Checks every operation on small random inputs. `fault` corrupts one
/// operation's backward rule for negative-control runs.
pub fn op_suite(eps: f64, fault: Option<OpKind>) -> Result<Vec<SuiteEntry>> {
    let mut out = vec![
        check("matmul", &[(2, 3), (3, 4)], eps, fault, |g, x| g.matmul(x[0], x[1]))?,
        check("add", &[(2, 3), (2, 3)], eps, fault, |g, x| g.add(x[0], x[1]))?,
        check("add_bias", &[(3, 4), (0, 4)], eps, fault, |g, x| g.add(x[0], x[1]))?,
        check("mul", &[(2, 3), (2, 3)], eps, fault, |g, x| g.mul(x[0], x[1]))?,
        check("scale", &[(2, 3)], eps, fault, |g, x| g.scale(x[0], -1.7))?,
        check("sigmoid", &[(2, 3)], eps, fault, |g, x| g.sigmoid(x[0]))?,
        check("tanh", &[(2, 3)], eps, fault, |g, x| g.tanh(x[0]))?,
        check("relu", &[(3, 4)], eps, fault, |g, x| g.relu(x[0]))?,
        check("concat_cols", &[(2, 3), (2, 2)], eps, fault, |g, x| g.concat(x[0], x[1], Axis::Cols))?,
        check("concat_rows", &[(2, 3), (1, 3)], eps, fault, |g, x| g.concat(x[0], x[1], Axis::Rows))?,
        check("stack_rows", &[(1, 3), (1, 3), (1, 3)], eps, fault, |g, x| g.stack_rows(x))?,
        check("slice_rows", &[(4, 3)], eps, fault, |g, x| g.slice_rows(x[0], 1, 2))?,
        check("slice_cols", &[(2, 5)], eps, fault, |g, x| g.slice_cols(x[0], 1, 3))?,
        check("dropout", &[(3, 4)], eps, fault, |g, x| {
            // a fixed mask: the same seed on every evaluation
            g.dropout(x[0], 0.4, true, &mut rng::seeded(5))
        })?,
        check("cross_entropy", &[(3, 5)], eps, fault, |g, x| {
            g.cross_entropy_rows(x[0], &[Some(1), None, Some(4)])
        })?,
        check("sum", &[(2, 3), (2, 3), (2, 3)], eps, fault, |g, x| g.sum(x))?,
        check("sum_all", &[(2, 3)], eps, fault, |g, x| g.sum_all(x[0]))?,
    ];
    // embedding rows are gathered from a parameter table
    let mut ps = ParamStore::new();
    let table = ps.add("embedding.table", random(5, 3, 11))?;
    let report = grad_check(&mut ps, eps, |g| {
        if let Some(k) = fault {
            g.inject_fault(k);
        }
        let e = g.embedding(table, &[4, 0, 4, 2])?;
        project(g, e, 3)
    })?;
    out.push(SuiteEntry {
        name: "embedding".into(),
        report,
    });
    Ok(out)
}

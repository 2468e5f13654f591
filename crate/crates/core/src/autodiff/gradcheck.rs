//! Central finite-difference verification of analytic gradients.

use serde::Serialize;

use super::graph::{Graph, Var};
use super::param::ParamStore;
use crate::error::{Error, Result};

/// Denominator floor for the relative error, so that coordinates whose true
/// gradient is ~0 are compared absolutely instead of amplifying rounding noise.
pub const RELATIVE_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub coordinates: usize,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(RELATIVE_FLOOR)
}

/// Compares the tape's gradient of `f` against central differences
/// `(f(θ + eps) - f(θ - eps)) / (2 eps)` for every coordinate of every
/// parameter. `f` must build a scalar loss on the graph it is given and be
/// deterministic.
pub fn grad_check<F>(params: &mut ParamStore, eps: f64, f: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<'_>) -> Result<Var>,
{
    if !(eps > 0.0) {
        return Err(Error::Validation(format!("eps must be positive, got {eps}")));
    }
    let analytic = {
        let mut g = Graph::new(params);
        let loss = f(&mut g)?;
        let grads = g.backward(loss)?;
        params
            .iter()
            .enumerate()
            .map(|(i, _)| grads.dense(super::ParamId(i), params))
            .collect::<Vec<_>>()
    };
    let eval = |params: &ParamStore| -> Result<f64> {
        let mut g = Graph::new(params);
        let loss = f(&mut g)?;
        Ok(g.scalar(loss))
    };
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        coordinates: 0,
    };
    for p in 0..params.len() {
        let id = super::ParamId(p);
        for k in 0..params.get(id).value.len() {
            let orig = params.get(id).value.data()[k];
            params.get_mut(id).value.data_mut()[k] = orig + eps;
            let plus = eval(params);
            params.get_mut(id).value.data_mut()[k] = orig - eps;
            let minus = eval(params);
            params.get_mut(id).value.data_mut()[k] = orig;
            let numeric = (plus? - minus?) / (2.0 * eps);
            let a = analytic[p][k];
            let err = relative_error(a, numeric);
            report.coordinates += 1;
            if err > report.max_rel_error || report.worst_param.is_empty() {
                report.max_rel_error = err;
                report.worst_param = params.get(id).name.clone();
                report.worst_index = k;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tensor;

    #[test]
    fn linear_function_is_exact() {
        let mut ps = ParamStore::new();
        let w = ps.add("w", Tensor::matrix(1, 3, vec![0.5, -1.0, 2.0]).unwrap()).unwrap();
        let r = grad_check(&mut ps, 1e-3, |g| {
            let x = g.input(Tensor::matrix(3, 1, vec![1.0, 2.0, 3.0]).unwrap());
            let w = g.param(w);
            let y = g.matmul(w, x)?;
            g.sum(&[y])
        })
        .unwrap();
        assert!(r.max_rel_error < 1e-10, "{r:?}");
        assert_eq!(r.coordinates, 3);
    }

    #[test]
    fn quadratic_is_exact_up_to_rounding() {
        let mut ps = ParamStore::new();
        let w = ps.add("w", Tensor::vector(vec![0.3, -1.7, 1.1]).unwrap()).unwrap();
        // f(w) = sum(3 w^2 + w)
        let r = grad_check(&mut ps, 1e-3, |g| {
            let w = g.param(w);
            let sq = g.mul(w, w)?;
            let three = g.scale(sq, 3.0)?;
            let s = g.add(three, w)?;
            g.sum_all(s)
        })
        .unwrap();
        assert!(r.max_rel_error < 1e-8, "{r:?}");
    }

    #[test]
    fn rejects_bad_eps() {
        let mut ps = ParamStore::new();
        assert!(grad_check(&mut ps, 0.0, |g| Ok(g.zeros(&[]))).is_err());
    }
}

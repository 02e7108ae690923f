//! Dual coordinate descent for the L1-loss linear SVM
//!
//! ```text
//! min_w  1/2 |w|^2 + C sum_i max(0, 1 - y_i w.x_i)
//! ```
//!
//! through its box-constrained dual `0 <= alpha_i <= C`, one coordinate at a
//! time with the closed-form clipped Newton step. The primal vector
//! `w = sum_i alpha_i y_i x_i` is maintained incrementally. With a bias the
//! rows are augmented by a constant 1 and the bias is regularized like any
//! other weight.
//!
//! The same routine solves the proximal subproblems of consensus training,
//! where the regularizer is centred on a vector `v` instead of the origin:
//! `w = v + sum_i alpha_i y_i x_i`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::data::check_two_classes;
use super::source::{MatrixRows, RowSource};
use super::{Dataset, SvmModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcdParams {
    pub c: f64,
    pub tol: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub bias: bool,
}

impl DcdParams {
    pub fn new(c: f64, tol: f64) -> Self {
        Self {
            c,
            tol,
            max_epochs: 1000,
            seed: 0,
            bias: true,
        }
    }

    pub fn max_epochs(mut self, epochs: usize) -> Self {
        self.max_epochs = epochs;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn bias(mut self, bias: bool) -> Self {
        self.bias = bias;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!("C must be positive, got {}", self.c)));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Per-epoch diagnostics, recorded only when requested since the
/// consistency check costs a full pass over the data.
#[derive(Debug, Clone, Default)]
pub struct DcdTrace {
    /// Dual objective (maximization form) after each epoch.
    pub dual_objective: Vec<f64>,
    /// `|w - v - sum alpha_i y_i x_i|_inf` after each epoch.
    pub consistency: Vec<f64>,
    /// Largest projected-gradient magnitude seen during each epoch.
    pub max_violation: Vec<f64>,
    /// Dual variables at termination.
    pub alpha: Vec<f64>,
}

pub(crate) struct Solution {
    pub w: Vec<f64>,
    pub alpha: Vec<f64>,
    pub epochs: usize,
    pub converged: bool,
}

pub(crate) struct Problem<'a> {
    pub labels: &'a [f64],
    /// Box bound on every dual variable.
    pub upper: f64,
    /// Centre of the regularizer; zero when `None`.
    pub offset: Option<&'a [f64]>,
    pub tol: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub bias: bool,
}

#[inline]
fn dot(row: &[f64], w: &[f64], bias: bool) -> f64 {
    let s: f64 = row.iter().zip(w).map(|(a, b)| a * b).sum();
    if bias {
        s + w[row.len()]
    } else {
        s
    }
}

#[inline]
fn axpy(row: &[f64], scale: f64, w: &mut [f64], bias: bool) {
    for (wj, xj) in w.iter_mut().zip(row) {
        *wj += scale * xj;
    }
    if bias {
        w[row.len()] += scale;
    }
}

/// `offset + sum_i alpha_i y_i x_i`.
fn primal_from_dual<S: RowSource>(
    src: &mut S,
    labels: &[f64],
    alpha: &[f64],
    offset: Option<&[f64]>,
    bias: bool,
) -> Result<Vec<f64>> {
    let dim = src.cols() + bias as usize;
    let mut w = offset.map_or_else(|| vec![0.0; dim], <[f64]>::to_vec);
    for (i, (&a, &y)) in alpha.iter().zip(labels).enumerate() {
        if a != 0.0 {
            axpy(src.row(i)?, a * y, &mut w, bias);
        }
    }
    Ok(w)
}

pub(crate) fn solve<S: RowSource>(
    src: &mut S,
    problem: &Problem<'_>,
    warm_alpha: Option<Vec<f64>>,
    mut trace: Option<&mut DcdTrace>,
) -> Result<Solution> {
    let n = src.rows();
    let bias = problem.bias;
    let dim = src.cols() + bias as usize;
    if problem.labels.len() != n {
        return Err(Error::Dimension(format!(
            "{} labels for {n} rows",
            problem.labels.len()
        )));
    }
    if let Some(v) = problem.offset {
        if v.len() != dim {
            return Err(Error::Dimension(format!(
                "offset has {} entries, expected {dim}",
                v.len()
            )));
        }
    }

    let mut q = Vec::with_capacity(n);
    for i in 0..n {
        let row = src.row(i)?;
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i * row.len() + j));
        }
        q.push(row.iter().map(|v| v * v).sum::<f64>() + bias as u8 as f64);
    }

    let mut alpha = match warm_alpha {
        Some(a) if a.len() == n => a.into_iter().map(|v| v.clamp(0.0, problem.upper)).collect(),
        _ => vec![0.0; n],
    };
    let mut w = if alpha.iter().any(|&a| a != 0.0) {
        primal_from_dual(src, problem.labels, &alpha, problem.offset, bias)?
    } else {
        problem.offset.map_or_else(|| vec![0.0; dim], <[f64]>::to_vec)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut epochs = 0;
    let mut converged = false;
    while epochs < problem.max_epochs {
        order.shuffle(&mut rng);
        let mut max_pg: f64 = 0.0;
        for &i in &order {
            let row = src.row(i)?;
            let y = problem.labels[i];
            let g = y * dot(row, &w, bias) - 1.0;
            let a = alpha[i];
            let pg = if a <= 0.0 {
                g.min(0.0)
            } else if a >= problem.upper {
                g.max(0.0)
            } else {
                g
            };
            max_pg = max_pg.max(pg.abs());
            if pg == 0.0 {
                continue;
            }
            let next = if q[i] > 0.0 {
                (a - g / q[i]).clamp(0.0, problem.upper)
            } else if g < 0.0 {
                // zero row: the dual is linear in alpha_i
                problem.upper
            } else {
                0.0
            };
            if next != a {
                axpy(row, (next - a) * y, &mut w, bias);
                alpha[i] = next;
            }
        }
        epochs += 1;

        if let Some(t) = trace.as_deref_mut() {
            let reference = primal_from_dual(src, problem.labels, &alpha, problem.offset, bias)?;
            let consistency = w.iter().zip(&reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            t.consistency.push(consistency);
            t.dual_objective.push(dual_objective(&w, &alpha, problem.offset));
            t.max_violation.push(max_pg);
        }
        if max_pg < problem.tol {
            converged = true;
            break;
        }
    }
    if let Some(t) = trace {
        t.alpha = alpha.clone();
    }
    Ok(Solution {
        w,
        alpha,
        epochs,
        converged,
    })
}

/// `sum alpha - 1/2 |u|^2 - v.u` with `u = w - v`.
fn dual_objective(w: &[f64], alpha: &[f64], offset: Option<&[f64]>) -> f64 {
    let sum_alpha: f64 = alpha.iter().sum();
    match offset {
        None => sum_alpha - 0.5 * w.iter().map(|v| v * v).sum::<f64>(),
        Some(v) => {
            let (mut uu, mut vu) = (0.0, 0.0);
            for (wi, vi) in w.iter().zip(v) {
                let u = wi - vi;
                uu += u * u;
                vu += vi * u;
            }
            sum_alpha - 0.5 * uu - vu
        }
    }
}

/// `1/2 |w|^2 + C sum_i max(0, 1 - y_i w.x_i)`.
pub fn primal_objective<S: RowSource>(src: &mut S, labels: &[f64], w: &[f64], c: f64, bias: bool) -> Result<f64> {
    if w.len() != src.cols() + bias as usize {
        return Err(Error::Dimension(format!(
            "weight vector of {} for {} columns",
            w.len(),
            src.cols()
        )));
    }
    let mut loss = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        loss += (1.0 - y * dot(src.row(i)?, w, bias)).max(0.0);
    }
    Ok(0.5 * w.iter().map(|v| v * v).sum::<f64>() + c * loss)
}

pub fn dcd_train(data: &Dataset, params: &DcdParams) -> Result<SvmModel> {
    dcd_train_source(&mut MatrixRows(&data.features), &data.labels, params)
}

/// Like [`dcd_train`], also returning per-epoch diagnostics.
pub fn dcd_train_traced(data: &Dataset, params: &DcdParams) -> Result<(SvmModel, DcdTrace)> {
    let mut trace = DcdTrace::default();
    let model = train_impl(&mut MatrixRows(&data.features), &data.labels, params, Some(&mut trace))?;
    Ok((model, trace))
}

/// Trains from any row source, e.g. a [`FeatureFile`](crate::store::FeatureFile)
/// streamed from disk. Given the same rows and seed the result is
/// bit-identical to in-memory training.
pub fn dcd_train_source<S: RowSource>(src: &mut S, labels: &[f64], params: &DcdParams) -> Result<SvmModel> {
    train_impl(src, labels, params, None)
}

fn train_impl<S: RowSource>(
    src: &mut S,
    labels: &[f64],
    params: &DcdParams,
    trace: Option<&mut DcdTrace>,
) -> Result<SvmModel> {
    params.validate()?;
    check_two_classes(labels)?;
    let problem = Problem {
        labels,
        upper: params.c,
        offset: None,
        tol: params.tol,
        max_epochs: params.max_epochs,
        seed: params.seed,
        bias: params.bias,
    };
    let sol = solve(src, &problem, None, trace)?;
    let objective = primal_objective(src, labels, &sol.w, params.c, params.bias)?;
    Ok(SvmModel {
        w: sol.w,
        bias: params.bias,
        c: params.c,
        tol: params.tol,
        iterations_run: sol.epochs,
        objective,
        converged: sol.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::FeatureMatrix;

    fn dataset(rows: &[[f64; 2]], labels: &[f64]) -> Dataset {
        Dataset::new(FeatureMatrix::from_rows(rows).unwrap(), labels.to_vec()).unwrap()
    }

    #[test]
    fn two_point_problem() {
        let data = Dataset::new(FeatureMatrix::new(2, 1, vec![1.0, -1.0]).unwrap(), vec![1.0, -1.0]).unwrap();
        let model = dcd_train(&data, &DcdParams::new(10.0, 1e-12).bias(false)).unwrap();
        assert!((model.w()[0] - 1.0).abs() < 1e-12);
        let d = model.decision_values(&data.features).unwrap();
        assert!((d[0] - 1.0).abs() < 1e-12 && (d[1] + 1.0).abs() < 1e-12);
        assert!((model.objective() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_class_is_rejected() {
        let data = dataset(&[[1.0, 0.0], [2.0, 1.0]], &[1.0, 1.0]);
        assert!(matches!(
            dcd_train(&data, &DcdParams::new(1.0, 1e-3)),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn non_finite_is_rejected() {
        let data = dataset(&[[1.0, f64::INFINITY], [2.0, 1.0]], &[1.0, -1.0]);
        assert!(matches!(
            dcd_train(&data, &DcdParams::new(1.0, 1e-3)),
            Err(Error::NonFinite(1))
        ));
    }

    #[test]
    fn bad_parameters() {
        let data = dataset(&[[1.0, 0.0], [2.0, 1.0]], &[1.0, -1.0]);
        assert!(dcd_train(&data, &DcdParams::new(0.0, 1e-3)).is_err());
        assert!(dcd_train(&data, &DcdParams::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn zero_row_without_bias() {
        let data = dataset(&[[0.0, 0.0], [1.0, 1.0], [-1.0, -1.0]], &[1.0, 1.0, -1.0]);
        let params = DcdParams::new(2.0, 1e-12).bias(false);
        let (model, trace) = dcd_train_traced(&data, &params).unwrap();
        assert!(model.converged());
        assert_eq!(trace.alpha[0], 2.0);
        assert_eq!(model.decision_values(&data.features).unwrap()[0], 0.0);
    }

    #[test]
    fn trace_is_monotone_and_consistent() {
        let rows: Vec<[f64; 2]> = (0..30)
            .map(|i| {
                let t = i as f64 * 0.7;
                [t.sin() * 2.0 + (i % 2) as f64, t.cos()]
            })
            .collect();
        let labels: Vec<f64> = (0..30).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let data = dataset(&rows, &labels);
        let (model, trace) = dcd_train_traced(&data, &DcdParams::new(1.0, 1e-9)).unwrap();
        assert!(model.converged());
        for pair in trace.dual_objective.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-12);
        }
        assert!(trace.consistency.iter().all(|&c| c <= 1e-10));
        assert!(trace.alpha.iter().all(|&a| (0.0..=1.0).contains(&a)));
        // primal and dual meet at the optimum
        let dual = *trace.dual_objective.last().unwrap();
        assert!((model.objective() - dual).abs() < 1e-6 * model.objective());
    }
}

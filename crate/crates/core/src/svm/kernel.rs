//! Small dense kernel SVM, used only as a reference for explicit feature maps.

use super::data::check_two_classes;
use super::FeatureMatrix;
use crate::error::{Error, Result};

pub trait Kernel: Sync {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64;
}

/// `k(a, b) = (a.b)^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnaryQuadratic;

impl Kernel for UnaryQuadratic {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        d * d
    }
}

/// Kernel machine trained by cyclic dual coordinate descent over a dense
/// Gram matrix. With `bias` the kernel is augmented by a constant 1, matching
/// the augmented-bias linear solver.
#[derive(Debug, Clone)]
pub struct KernelSvm<K> {
    kernel: K,
    support: FeatureMatrix,
    coef: Vec<f64>,
    bias: bool,
    epochs: usize,
}

impl<K: Kernel> KernelSvm<K> {
    pub fn train(
        kernel: K,
        features: &FeatureMatrix,
        labels: &[f64],
        c: f64,
        tol: f64,
        max_epochs: usize,
        bias: bool,
    ) -> Result<Self> {
        let n = features.rows();
        if labels.len() != n {
            return Err(Error::Dimension(format!("{} labels for {n} rows", labels.len())));
        }
        check_two_classes(labels)?;
        features.check_finite()?;
        let extra = if bias { 1.0 } else { 0.0 };
        let mut gram = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let k = kernel.eval(features.row(i), features.row(j)) + extra;
                gram[i * n + j] = k;
                gram[j * n + i] = k;
            }
        }

        let mut alpha = vec![0.0; n];
        // f_i = sum_j alpha_j y_j K_ij
        let mut f = vec![0.0; n];
        let mut epochs = 0;
        while epochs < max_epochs {
            let mut max_pg: f64 = 0.0;
            for i in 0..n {
                let g = labels[i] * f[i] - 1.0;
                let a = alpha[i];
                let pg = if a <= 0.0 {
                    g.min(0.0)
                } else if a >= c {
                    g.max(0.0)
                } else {
                    g
                };
                max_pg = max_pg.max(pg.abs());
                if pg == 0.0 {
                    continue;
                }
                let q = gram[i * n + i];
                let next = if q > 0.0 {
                    (a - g / q).clamp(0.0, c)
                } else if g < 0.0 {
                    c
                } else {
                    0.0
                };
                let delta = (next - a) * labels[i];
                if delta != 0.0 {
                    for (fj, kij) in f.iter_mut().zip(&gram[i * n..(i + 1) * n]) {
                        *fj += delta * kij;
                    }
                    alpha[i] = next;
                }
            }
            epochs += 1;
            if max_pg < tol {
                break;
            }
        }

        let coef: Vec<f64> = alpha.iter().zip(labels).map(|(a, y)| a * y).collect();
        Ok(Self {
            kernel,
            support: features.clone(),
            coef,
            bias,
            epochs,
        })
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        let extra = if self.bias { 1.0 } else { 0.0 };
        self.support
            .iter_rows()
            .zip(&self.coef)
            .filter(|(_, &c)| c != 0.0)
            .map(|(s, &c)| c * (self.kernel.eval(s, x) + extra))
            .sum()
    }

    pub fn decision_values(&self, features: &FeatureMatrix) -> Result<Vec<f64>> {
        if features.cols() != self.support.cols() {
            return Err(Error::Dimension(format!(
                "{} columns for a {}-column kernel machine",
                features.cols(),
                self.support.cols()
            )));
        }
        Ok(features.iter_rows().map(|r| self.decision(r)).collect())
    }
}

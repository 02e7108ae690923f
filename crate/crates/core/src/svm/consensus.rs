//! Global-consensus ADMM over example shards.
//!
//! ```text
//! w_k <- argmin (C/rho) sum_{i in k} hinge_i(w) + 1/2 |w - (z - u_k)|^2
//! z   <- rho sum_k (w_k + u_k) / (1 + K rho)
//! u_k <- u_k + w_k - z
//! ```
//!
//! Local problems are solved by dual coordinate descent, warm-started from the
//! previous round's dual variables. Shards run concurrently; each round ends
//! with a barrier at the `z` update.

use rayon::prelude::*;

use super::data::check_two_classes;
use super::dcd::{primal_objective, solve, DcdParams, Problem};
use super::source::MatrixRows;
use super::{Dataset, SvmModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ShardPlan {
    shard_count: usize,
    assignment: Vec<usize>,
    pub rho: f64,
    pub max_rounds: usize,
}

impl ShardPlan {
    pub const DEFAULT_RHO: f64 = 1.0;
    pub const DEFAULT_MAX_ROUNDS: usize = 50;

    /// Explicit example-to-shard map.
    pub fn new(assignment: Vec<usize>, shard_count: usize) -> Result<Self> {
        let plan = Self {
            shard_count,
            assignment,
            rho: Self::DEFAULT_RHO,
            max_rounds: Self::DEFAULT_MAX_ROUNDS,
        };
        plan.validate()?;
        Ok(plan)
    }

    /// Example `i` goes to shard `i * shard_count / examples`, so shards are
    /// contiguous blocks of nearly equal size.
    pub fn contiguous(examples: usize, shard_count: usize) -> Result<Self> {
        Self::new(
            (0..examples).map(|i| i * shard_count / examples.max(1)).collect(),
            shard_count,
        )
    }

    /// Example `i` goes to shard `i % shard_count`. Labels that repeat with a
    /// period dividing `shard_count` give single-class shards, which still
    /// converge but much more slowly; prefer [`ShardPlan::contiguous`] then.
    pub fn round_robin(examples: usize, shard_count: usize) -> Result<Self> {
        Self::new((0..examples).map(|i| i % shard_count.max(1)).collect(), shard_count)
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_max_rounds(mut self, rounds: usize) -> Self {
        self.max_rounds = rounds;
        self
    }

    pub fn shard_count(&self) -> usize {
        self.shard_count
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn shards(&self) -> Vec<Vec<usize>> {
        let mut shards = vec![Vec::new(); self.shard_count];
        for (i, &s) in self.assignment.iter().enumerate() {
            shards[s].push(i);
        }
        shards
    }

    pub fn validate(&self) -> Result<()> {
        if self.shard_count == 0 {
            return Err(Error::InvalidArgument("shard count must be at least 1".into()));
        }
        if let Some(&bad) = self.assignment.iter().find(|&&s| s >= self.shard_count) {
            return Err(Error::InvalidArgument(format!(
                "example assigned to shard {bad} of {}",
                self.shard_count
            )));
        }
        if let Some(empty) = self.shards().iter().position(Vec::is_empty) {
            return Err(Error::InvalidArgument(format!("shard {empty} is empty")));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidArgument("max_rounds must be at least 1".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "rho must be positive, got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// Per-round residuals and objective of the consensus iterate.
#[derive(Debug, Clone, Default)]
pub struct ConsensusTrace {
    /// `sqrt(sum_k |w_k - z|^2)`.
    pub primal_residual: Vec<f64>,
    /// `rho sqrt(K) |z - z_prev|`.
    pub dual_residual: Vec<f64>,
    /// Primal objective of `z` on the full data.
    pub objective: Vec<f64>,
}

struct Shard {
    data: Dataset,
    alpha: Option<Vec<f64>>,
    w: Vec<f64>,
    u: Vec<f64>,
}

/// Consensus training. `params.max_epochs` bounds each local solve and
/// `params.tol` is both the local and the residual tolerance.
pub fn consensus_train(data: &Dataset, plan: &ShardPlan, params: &DcdParams) -> Result<(SvmModel, ConsensusTrace)> {
    params.validate()?;
    plan.validate()?;
    if plan.assignment.len() != data.len() {
        return Err(Error::Dimension(format!(
            "plan covers {} examples, data has {}",
            plan.assignment.len(),
            data.len()
        )));
    }
    check_two_classes(&data.labels)?;
    data.features.check_finite()?;

    let dim = data.dim() + params.bias as usize;
    let k = plan.shard_count as f64;
    let rho = plan.rho;
    let mut shards: Vec<Shard> = plan
        .shards()
        .iter()
        .map(|idx| Shard {
            data: data.subset(idx),
            alpha: None,
            w: vec![0.0; dim],
            u: vec![0.0; dim],
        })
        .collect();

    let mut z = vec![0.0; dim];
    let mut trace = ConsensusTrace::default();
    let mut rounds = 0;
    let mut converged = false;
    while rounds < plan.max_rounds {
        let z_ref = &z;
        shards
            .par_iter_mut()
            .enumerate()
            .try_for_each(|(s, shard)| -> Result<()> {
                let v: Vec<f64> = z_ref.iter().zip(&shard.u).map(|(z, u)| z - u).collect();
                let problem = Problem {
                    labels: &shard.data.labels,
                    upper: params.c / rho,
                    offset: Some(&v),
                    tol: params.tol,
                    max_epochs: params.max_epochs,
                    seed: params.seed.wrapping_add(s as u64),
                    bias: params.bias,
                };
                let sol = solve(
                    &mut MatrixRows(&shard.data.features),
                    &problem,
                    shard.alpha.take(),
                    None,
                )?;
                shard.w = sol.w;
                shard.alpha = Some(sol.alpha);
                Ok(())
            })?;

        let z_prev = std::mem::replace(&mut z, vec![0.0; dim]);
        for shard in &shards {
            for ((zj, wj), uj) in z.iter_mut().zip(&shard.w).zip(&shard.u) {
                *zj += wj + uj;
            }
        }
        let scale = rho / (1.0 + k * rho);
        z.iter_mut().for_each(|v| *v *= scale);

        let mut r2 = 0.0;
        for shard in &mut shards {
            for ((uj, wj), zj) in shard.u.iter_mut().zip(&shard.w).zip(&z) {
                let d = wj - zj;
                r2 += d * d;
                *uj += d;
            }
        }
        let dz: f64 = z
            .iter()
            .zip(&z_prev)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let r = r2.sqrt();
        let s = rho * k.sqrt() * dz;
        rounds += 1;
        trace.primal_residual.push(r);
        trace.dual_residual.push(s);
        trace.objective.push(primal_objective(
            &mut MatrixRows(&data.features),
            &data.labels,
            &z,
            params.c,
            params.bias,
        )?);
        if r < params.tol && s < params.tol {
            converged = true;
            break;
        }
    }

    let objective = *trace.objective.last().expect("at least one round");
    Ok((
        SvmModel {
            w: z,
            bias: params.bias,
            c: params.c,
            tol: params.tol,
            iterations_run: rounds,
            objective,
            converged,
        },
        trace,
    ))
}

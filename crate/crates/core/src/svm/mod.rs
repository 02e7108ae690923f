//! Linear SVM training and prediction.

mod consensus;
mod data;
mod dcd;
mod kernel;
mod model;
mod reweight;
mod source;

pub use consensus::{consensus_train, ConsensusTrace, ShardPlan};
pub use data::{Dataset, FeatureMatrix};
pub use dcd::{dcd_train, dcd_train_source, dcd_train_traced, primal_objective, DcdParams, DcdTrace};
pub use kernel::{Kernel, KernelSvm, UnaryQuadratic};
pub use model::SvmModel;
pub use reweight::{margin_reweighting_check, product_decision, ReweightReport};
pub use source::{ExtractedRows, MatrixRows, RowSource};

use crate::error::Result;

/// Decision values `w.x` for every row.
pub fn predict(model: &SvmModel, features: &FeatureMatrix) -> Result<Vec<f64>> {
    model.decision_values(features)
}

/// Fraction of rows whose decision sign matches the label (zero counts as
/// negative).
pub fn accuracy(decisions: &[f64], labels: &[f64]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let correct = decisions
        .iter()
        .zip(labels)
        .filter(|(d, y)| (**d > 0.0) == (**y > 0.0))
        .count();
    correct as f64 / labels.len() as f64
}

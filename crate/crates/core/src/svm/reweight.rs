//! A linear machine on `L (x ⊗ x)` is a linear machine on `x ⊗ x` with
//! weights `L^T v`; the change of variables only reshapes the margin. With
//! `L = I` it is a kernel machine with `k(a, b) = (a.b)^2`.

use super::kernel::{KernelSvm, UnaryQuadratic};
use super::{dcd_train, Dataset, DcdParams, FeatureMatrix, SvmModel};
use crate::error::{Error, Result};
use crate::hog::{apply_projection, ProjectionMatrix};
use crate::image::Image;

#[derive(Debug, Clone)]
pub struct ReweightReport {
    /// Model `v` trained on `L (x ⊗ x)`.
    pub model: SvmModel,
    /// `L^T v` over pixel products (bias excluded).
    pub lifted: Vec<f64>,
    /// `max_i |w.(x_i ⊗ x_i) - v.L(x_i ⊗ x_i)|`.
    pub absorption_deviation: f64,
    /// Largest decision-value gap to the quadratic-kernel reference; only
    /// computed when `L` is the identity.
    pub kernel_deviation: Option<f64>,
    pub notes: Vec<String>,
}

/// `w.(x ⊗ x)` with `w` indexed by `p * D + q`.
pub fn product_decision(w: &[f64], x: &[f64]) -> f64 {
    let d = x.len();
    debug_assert_eq!(w.len(), d * d);
    let mut s = 0.0;
    for (p, &xp) in x.iter().enumerate() {
        if xp == 0.0 {
            continue;
        }
        let row: f64 = w[p * d..(p + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum();
        s += xp * row;
    }
    s
}

fn is_identity(l: &ProjectionMatrix) -> bool {
    l.rows() == l.cols()
        && l.nnz() == l.rows()
        && l.matrix()
            .outer_iterator()
            .enumerate()
            .all(|(r, row)| row.iter().all(|(c, &v)| c == r && v == 1.0))
}

pub fn margin_reweighting_check(
    l: &ProjectionMatrix,
    images: &[Image],
    labels: &[f64],
    params: &DcdParams,
) -> Result<ReweightReport> {
    if images.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} images for {} labels",
            images.len(),
            labels.len()
        )));
    }
    let rows = images
        .iter()
        .map(|im| apply_projection(l, im).map(|h| h.values))
        .collect::<Result<Vec<_>>>()?;
    let data = Dataset::new(FeatureMatrix::from_rows(&rows)?, labels.to_vec())?;
    let model = dcd_train(&data, params)?;
    let v = &model.w()[..model.input_dim()];
    let lifted = l.transpose_mul(v);

    let b = model.bias_value();
    let mut absorption_deviation: f64 = 0.0;
    let mut lifted_values = Vec::with_capacity(images.len());
    for (im, phi) in images.iter().zip(&rows) {
        let via_products = product_decision(&lifted, im.data()) + b;
        absorption_deviation = absorption_deviation.max((via_products - model.decision(phi)).abs());
        lifted_values.push(via_products);
    }

    let mut notes = vec!["equivalence checked on decision values; (L^T L)^-1 is never formed".to_string()];
    let kernel_deviation = if is_identity(l) {
        let pixels = FeatureMatrix::from_rows(&images.iter().map(Image::data).collect::<Vec<_>>())?;
        let reference = KernelSvm::train(
            UnaryQuadratic,
            &pixels,
            labels,
            params.c,
            params.tol,
            params.max_epochs,
            params.bias,
        )?;
        let reference = reference.decision_values(&pixels)?;
        Some(
            reference
                .iter()
                .zip(&lifted_values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    } else {
        notes.push("L is not the identity; kernel reference skipped".to_string());
        None
    };

    Ok(ReweightReport {
        model,
        lifted,
        absorption_deviation,
        kernel_deviation,
        notes,
    })
}

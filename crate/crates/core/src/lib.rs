//! Feature extraction and linear classification built around writing HOG as
//! a fixed linear map of local pixel products.
//!
//! - [`image`]: grayscale images, filtering, pooling, spectra
//! - [`hog`]: Gabor-bank HOG, its explicit projection matrix, and a classic
//!   gradient-histogram baseline
//! - [`quad`]: full and compact local quadratic features
//! - [`svm`]: dual coordinate descent, consensus training, model files
//! - [`synth`]: 1/f noise, structured images, similarity warps
//! - [`experiments`]: the noise, alignment sweep and detection studies

pub mod error;
pub mod experiments;
pub mod hog;
pub mod image;
pub mod quad;
pub mod store;
pub mod svm;
pub mod synth;

pub use error::{Error, Result};

/// A descriptor or flattened feature map.
pub type FeatureVector = Vec<f64>;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable that overrides the configured worker count.
pub const WORKERS_ENV: &str = "HOGQUAD_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    NoiseVsStructured,
    AlignmentSweep,
    DetectDesk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Pixels,
    HogBaseline,
    HogConv,
    HogReform,
    Quad,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 5] = [
        Self::Pixels,
        Self::HogBaseline,
        Self::HogConv,
        Self::HogReform,
        Self::Quad,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Pixels => "pixels",
            Self::HogBaseline => "hog_baseline",
            Self::HogConv => "hog_conv",
            Self::HogReform => "hog_reform",
            Self::Quad => "quad",
        }
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown feature `{s}`")))
    }
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::NoiseVsStructured => "noise_vs_structured",
            Self::AlignmentSweep => "alignment_sweep",
            Self::DetectDesk => "detect_desk",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub feature: FeatureKind,
    /// Quad window radius; when absent the sweep ties it to the RMS level.
    pub window_radius: Option<usize>,
    pub train_sizes: Vec<usize>,
    pub rms_levels: Vec<f64>,
    #[serde(rename = "C", alias = "c")]
    pub c: f64,
    pub tol: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub patch_size: usize,
    /// Test examples; for the sweep, warped copies per held-out identity.
    pub test_size: usize,
    pub output_dir: Option<PathBuf>,
    pub corpus_dir: Option<PathBuf>,
    /// Feature matrices larger than this many bytes are not held in memory.
    pub memory_budget: u64,
    /// Stream oversized feature matrices from a container file instead of
    /// recomputing rows on every visit.
    pub spill_to_disk: bool,
    pub workers: Option<usize>,
}

/// Partial config as read from a TOML file; unset keys keep the defaults of
/// the chosen experiment.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    experiment: Option<ExperimentKind>,
    feature: Option<FeatureKind>,
    window_radius: Option<usize>,
    train_sizes: Option<Vec<usize>>,
    rms_levels: Option<Vec<f64>>,
    #[serde(rename = "C", alias = "c")]
    c: Option<f64>,
    tol: Option<f64>,
    max_epochs: Option<usize>,
    seed: Option<u64>,
    patch_size: Option<usize>,
    test_size: Option<usize>,
    output_dir: Option<PathBuf>,
    corpus_dir: Option<PathBuf>,
    memory_budget: Option<u64>,
    spill_to_disk: Option<bool>,
    workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn defaults(experiment: ExperimentKind) -> Self {
        let base = Self {
            experiment,
            feature: FeatureKind::Quad,
            window_radius: None,
            train_sizes: vec![2000],
            rms_levels: vec![0.0],
            c: 1e-2,
            tol: 1e-2,
            max_epochs: 500,
            seed: 0,
            patch_size: 16,
            test_size: 2000,
            output_dir: None,
            corpus_dir: None,
            memory_budget: 2 << 30,
            spill_to_disk: false,
            workers: None,
        };
        match experiment {
            ExperimentKind::NoiseVsStructured => Self {
                window_radius: Some(1),
                c: 1.0,
                ..base
            },
            ExperimentKind::AlignmentSweep => Self {
                train_sizes: vec![300, 1500, 15000],
                rms_levels: vec![0.0, 2.0, 5.0, 10.0],
                c: 3.0,
                patch_size: 32,
                test_size: 20,
                ..base
            },
            ExperimentKind::DetectDesk => Self {
                train_sizes: vec![100],
                rms_levels: vec![1.0],
                c: 1.0,
                patch_size: 32,
                test_size: 50,
                window_radius: Some(1),
                ..base
            },
        }
    }

    /// Reads a TOML file. `experiment` must be set either in the file or by
    /// `fallback`.
    pub fn from_toml_str(text: &str, fallback: Option<ExperimentKind>) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let experiment = file
            .experiment
            .or(fallback)
            .ok_or_else(|| Error::Config("`experiment` is not set".into()))?;
        let d = Self::defaults(experiment);
        let cfg = Self {
            experiment,
            feature: file.feature.unwrap_or(d.feature),
            window_radius: file.window_radius.or(d.window_radius),
            train_sizes: file.train_sizes.unwrap_or(d.train_sizes),
            rms_levels: file.rms_levels.unwrap_or(d.rms_levels),
            c: file.c.unwrap_or(d.c),
            tol: file.tol.unwrap_or(d.tol),
            max_epochs: file.max_epochs.unwrap_or(d.max_epochs),
            seed: file.seed.unwrap_or(d.seed),
            patch_size: file.patch_size.unwrap_or(d.patch_size),
            test_size: file.test_size.unwrap_or(d.test_size),
            output_dir: file.output_dir.or(d.output_dir),
            corpus_dir: file.corpus_dir.or(d.corpus_dir),
            memory_budget: file.memory_budget.unwrap_or(d.memory_budget),
            spill_to_disk: file.spill_to_disk.unwrap_or(d.spill_to_disk),
            workers: file.workers.or(d.workers),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, fallback: Option<ExperimentKind>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?, fallback)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_sizes.is_empty() {
            return Err(Error::Config("train_sizes is empty".into()));
        }
        if self.train_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("train_sizes must be strictly ascending".into()));
        }
        if self.train_sizes[0] == 0 {
            return Err(Error::Config("train sizes must be positive".into()));
        }
        if self.rms_levels.is_empty() {
            return Err(Error::Config("rms_levels is empty".into()));
        }
        if self.rms_levels.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::Config("rms levels must be finite and non-negative".into()));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be positive".into()));
        }
        if self.patch_size < crate::synth::MIN_PATCH_SIZE {
            return Err(Error::Config(format!("patch_size {} is too small", self.patch_size)));
        }
        if self.test_size == 0 {
            return Err(Error::Config("test_size must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be positive".into()));
        }
        Ok(())
    }

    /// Configured worker count, overridden by [`WORKERS_ENV`].
    pub fn worker_count(&self) -> Result<usize> {
        match std::env::var(WORKERS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(Error::Config(format!("{WORKERS_ENV}={v} is not a positive integer"))),
            },
            Err(_) => Ok(self
                .workers
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))),
        }
    }

    pub(crate) fn dcd_params(&self) -> crate::svm::DcdParams {
        crate::svm::DcdParams::new(self.c, self.tol)
            .max_epochs(self.max_epochs)
            .seed(self.seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_overrides_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            "experiment = \"alignment_sweep\"\nfeature = \"hog_baseline\"\nC = 0.5\ntrain_sizes = [10, 20]\n",
            None,
        )
        .unwrap();
        assert_eq!(cfg.feature, FeatureKind::HogBaseline);
        assert_eq!(cfg.c, 0.5);
        assert_eq!(cfg.train_sizes, vec![10, 20]);
        assert_eq!(cfg.rms_levels, vec![0.0, 2.0, 5.0, 10.0]);
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml(), None).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        let parse = |s: &str| ExperimentConfig::from_toml_str(s, Some(ExperimentKind::AlignmentSweep));
        assert!(parse("train_sizes = [20, 10]").is_err());
        assert!(parse("train_sizes = []").is_err());
        assert!(parse("rms_levels = [-1.0]").is_err());
        assert!(parse("C = 0.0").is_err());
        assert!(parse("tol = -1.0").is_err());
        assert!(parse("colour = 3").is_err());
        assert!(parse("feature = \"sift\"").is_err());
        assert!(ExperimentConfig::from_toml_str("", None).is_err());
        assert!(parse("").is_ok());
    }

    #[test]
    fn feature_names_round_trip() {
        for k in FeatureKind::ALL {
            assert_eq!(k.name().parse::<FeatureKind>().unwrap(), k);
        }
    }
}

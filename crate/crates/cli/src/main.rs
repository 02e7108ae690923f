use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hogquad::experiments::{
    all_passed, detect_checks, emit_csv, noise_checks, run_alignment_sweep, run_detect_desk, run_noise_vs_structured,
    sweep_checks, verify_checks, verify_compact, verify_reformulation, write_pr_curves, Check, ExperimentConfig,
    ExperimentKind, FeatureKind, RunOutput, WORKERS_ENV,
};
use hogquad::synth::write_manifest;

/// Feature extraction and linear SVM experiments on synthetic images.
#[derive(Debug, Parser)]
#[command(name = "hogquad", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Structured patches against matched-spectrum pink noise.
    Noise(ConfigArgs),
    /// Accuracy over misalignment levels and training-set sizes.
    Sweep(ConfigArgs),
    /// Silhouettes against clutter, scored by precision-recall.
    Detect(ConfigArgs),
    /// HOG reformulation and compact quad feature equivalence suites.
    Verify(VerifyArgs),
}

/// Overrides applied on top of the experiment defaults or `--config`.
#[derive(Debug, Args)]
struct ConfigArgs {
    /// TOML file with any subset of the config keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    feature: Option<FeatureKind>,
    #[arg(long)]
    window_radius: Option<usize>,
    /// Comma-separated, ascending.
    #[arg(long, value_delimiter = ',')]
    train_sizes: Option<Vec<usize>>,
    /// Comma-separated RMS point errors.
    #[arg(long, value_delimiter = ',')]
    rms_levels: Option<Vec<f64>>,
    #[arg(short = 'C', long = "c")]
    c: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    patch_size: Option<usize>,
    #[arg(long)]
    test_size: Option<usize>,
    /// Where results, manifest and curves are written [default: results].
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    corpus_dir: Option<PathBuf>,
    /// Bytes of feature matrix kept in memory before streaming.
    #[arg(long)]
    memory_budget: Option<u64>,
    #[arg(long)]
    spill_to_disk: bool,
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Random images for the reformulation suite.
    #[arg(long, default_value_t = 100)]
    reform_images: usize,
    /// Random 6x6 images for the compact feature suite.
    #[arg(long, default_value_t = 50)]
    compact_images: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ConfigArgs {
    fn resolve(self, kind: ExperimentKind) -> hogquad::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path, Some(kind))?,
            None => ExperimentConfig::defaults(kind),
        };
        if cfg.experiment != kind {
            return Err(hogquad::Error::Config(format!(
                "config file is for {}, not {kind}",
                cfg.experiment
            )));
        }
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            )*};
        }
        set!(
            feature,
            train_sizes,
            rms_levels,
            c,
            tol,
            max_epochs,
            seed,
            patch_size,
            test_size,
            memory_budget
        );
        if self.window_radius.is_some() {
            cfg.window_radius = self.window_radius;
        }
        if self.corpus_dir.is_some() {
            cfg.corpus_dir = self.corpus_dir;
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        cfg.spill_to_disk |= self.spill_to_disk;
        cfg.output_dir = Some(self.output_dir.or(cfg.output_dir).unwrap_or_else(|| "results".into()));
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_outputs(cfg: &ExperimentConfig, out: &RunOutput) -> hogquad::Result<PathBuf> {
    let dir = cfg.output_dir.clone().expect("resolved configs have an output dir");
    fs::create_dir_all(&dir)?;
    let name = cfg.experiment.name();
    emit_csv(&out.rows, &dir.join(format!("{name}.csv")))?;
    write_manifest(&dir.join(format!("{name}_manifest.tsv")), &out.manifest)?;
    if !out.curves.is_empty() {
        write_pr_curves(&out.curves, &dir.join(format!("{name}_pr.csv")))?;
    }
    fs::write(dir.join(format!("{name}_config.toml")), cfg.to_toml())?;
    Ok(dir)
}

fn print_rows(out: &RunOutput) {
    println!(
        "{:<30} {:<13} {:>7} {:>5} {:>8} {:>9} {:>9}",
        "experiment", "feature", "train", "rms", "accuracy", "dim", "seconds"
    );
    for r in &out.rows {
        println!(
            "{:<30} {:<13} {:>7} {:>5} {:>8.4} {:>9} {:>9.2}",
            r.experiment, r.feature, r.train_size, r.rms_level, r.test_accuracy, r.feature_dim, r.train_seconds
        );
    }
    for c in &out.curves {
        println!("{} break-even error {:.4}", c.feature, c.eer);
    }
}

fn report(checks: &[Check]) -> ExitCode {
    for c in checks {
        println!("{c}");
    }
    if checks.is_empty() {
        println!("no acceptance assertion applies to this run");
        ExitCode::SUCCESS
    } else if all_passed(checks) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run_experiment(
    args: ConfigArgs,
    kind: ExperimentKind,
    run: fn(&ExperimentConfig) -> hogquad::Result<RunOutput>,
    checks: fn(&RunOutput) -> Vec<Check>,
) -> hogquad::Result<ExitCode> {
    let cfg = args.resolve(kind)?;
    let out = run(&cfg)?;
    print_rows(&out);
    let dir = write_outputs(&cfg, &out)?;
    println!("wrote {}", dir.display());
    Ok(report(&checks(&out)))
}

fn run(cli: Cli) -> hogquad::Result<ExitCode> {
    match cli.command {
        Command::Noise(args) => run_experiment(args, ExperimentKind::NoiseVsStructured, run_noise_vs_structured, |o| {
            noise_checks(&o.rows)
        }),
        Command::Sweep(args) => run_experiment(args, ExperimentKind::AlignmentSweep, run_alignment_sweep, |o| {
            sweep_checks(&o.rows)
        }),
        Command::Detect(args) => run_experiment(args, ExperimentKind::DetectDesk, run_detect_desk, |o| {
            detect_checks(&o.curves)
        }),
        Command::Verify(args) => {
            let reports = [
                verify_reformulation(args.reform_images, args.seed)?,
                verify_compact(args.compact_images, 6, args.seed)?,
            ];
            Ok(report(&verify_checks(&reports)))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

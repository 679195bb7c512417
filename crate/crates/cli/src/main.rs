//! `dbcfr` command-line tool: synthesise datasets, enrol galleries, identify
//! probes and run threshold sweeps.
//!
//! Exit codes: 0 success (or accepted probe), 1 rejected probe, 2 error.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dbcfr::eval::{threshold_grid, DEFAULT_GRID};
use dbcfr::imageio::read_gray;
use dbcfr::pipeline::{dump_subbands, Failure};
use dbcfr::{
    identify, make_split, open_dataset, synth_dataset, Gallery, Pipeline, PipelineConfig,
    SynthParams,
};

use config::ConfigFile;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(dbcfr::Error),
}

impl From<dbcfr::Error> for CliError {
    fn from(e: dbcfr::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "dbcfr",
    version,
    about = "Face identification with directional binary codes"
)]
struct Cli {
    /// Flat key=value file supplying defaults for any long flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a deterministic synthetic face dataset.
    Synth(SynthArgs),
    /// Extract features for the gallery part of a split and save them.
    Enroll(EnrollArgs),
    /// Identify one probe image against a saved gallery.
    Identify(IdentifyArgs),
    /// Sweep thresholds and report FRR, FAR, recognition rate and EER.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// [default: 20]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    subjects: Option<u64>,
    /// Images per subject [default: 14]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    images: Option<u64>,
    /// Noise level in [0, 1] [default: 0.05]
    #[arg(long)]
    noise: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// Side of the normalised face [default: 100]
    #[arg(long)]
    image_size: Option<usize>,
    /// Side of a code cell on the LL band [default: 5]
    #[arg(long)]
    cell_size: Option<usize>,
    /// Derivative distance [default: 1]
    #[arg(long)]
    distance: Option<usize>,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Dataset root (manifest.json or one directory per subject).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Gallery images per enrolled subject [default: 13]
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    gallery_per_subject: Option<u64>,
    /// Number of enrolled subjects.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    enrolled: Option<u64>,
    /// Fail when any image cannot be processed.
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Args)]
struct EnrollArgs {
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Gallery file to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IdentifyArgs {
    /// Gallery file written by `enroll`.
    #[arg(long)]
    gallery: Option<PathBuf>,
    /// Probe image (PNG or PGM).
    #[arg(long)]
    probe: Option<PathBuf>,
    /// Accept when the nearest distance is at most this.
    #[arg(long)]
    threshold: Option<f64>,
    /// Also write the probe's four subbands as PGM into this directory.
    #[arg(long)]
    dump_subbands: Option<PathBuf>,
    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// [default: 0]
    #[arg(long)]
    grid_start: Option<f64>,
    /// [default: 1.2]
    #[arg(long)]
    grid_stop: Option<f64>,
    /// [default: 0.05]
    #[arg(long)]
    grid_step: Option<f64>,
    /// Evaluate a single threshold instead of a grid.
    #[arg(long)]
    threshold: Option<f64>,
    /// Report CSV to write.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for two-column FRR/FAR plot data.
    #[arg(long)]
    plot_data: Option<PathBuf>,
}

fn pipeline_config(args: &PipelineArgs, cfg: &ConfigFile) -> CliResult<Pipeline> {
    let defaults = PipelineConfig::default();
    let config = PipelineConfig {
        image_size: cfg
            .pick(args.image_size, "image-size")?
            .unwrap_or(defaults.image_size),
        cell_size: cfg
            .pick(args.cell_size, "cell-size")?
            .unwrap_or(defaults.cell_size),
        distance: cfg
            .pick(args.distance, "distance")?
            .unwrap_or(defaults.distance),
    };
    Pipeline::new(config).map_err(|e| CliError::Usage(e.to_string()))
}

fn positive(value: u64, key: &str) -> CliResult<usize> {
    if value == 0 {
        return Err(CliError::Usage(format!("--{key} must be at least 1")));
    }
    Ok(value as usize)
}

fn report_failures(failures: &[Failure], strict: bool) -> CliResult<()> {
    for f in failures {
        eprintln!("skipped {}: {}", f.path.display(), f.error);
    }
    if strict && !failures.is_empty() {
        return Err(CliError::Usage(format!(
            "{} image(s) failed under --strict",
            failures.len()
        )));
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| {
        CliError::Core(dbcfr::Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    })
}

struct ResolvedSplit {
    manifest: dbcfr::DatasetManifest,
    split: dbcfr::Split,
    strict: bool,
}

/// `default_enrolled` receives the number of eligible subjects.
fn resolve_split(
    args: &SplitArgs,
    cfg: &ConfigFile,
    default_enrolled: impl Fn(usize) -> usize,
) -> CliResult<ResolvedSplit> {
    let root: PathBuf = cfg.require(args.dataset.clone(), "dataset")?;
    let manifest = open_dataset(&root)?;
    let per_subject = positive(
        cfg.pick(args.gallery_per_subject, "gallery-per-subject")?
            .unwrap_or(13),
        "gallery-per-subject",
    )?;
    let eligible = manifest.subjects.iter().filter(|s| s.enrolled).count();
    let enrolled = match cfg.pick(args.enrolled, "enrolled")? {
        Some(n) => positive(n, "enrolled")?,
        None => default_enrolled(eligible),
    };
    let split = make_split(&manifest, enrolled, per_subject)?;
    let strict = args.strict || cfg.get::<bool>("strict")?.unwrap_or(false);
    Ok(ResolvedSplit {
        manifest,
        split,
        strict,
    })
}

fn cmd_synth(args: &SynthArgs, cfg: &ConfigFile) -> CliResult<()> {
    let params = SynthParams {
        seed: cfg.pick(args.seed, "seed")?.unwrap_or(1),
        n_subjects: positive(
            cfg.pick(args.subjects, "subjects")?.unwrap_or(20),
            "subjects",
        )?,
        images_per_subject: positive(cfg.pick(args.images, "images")?.unwrap_or(14), "images")?,
        noise_level: cfg.pick(args.noise, "noise")?.unwrap_or(0.05),
    };
    if !(0.0..=1.0).contains(&params.noise_level) {
        return Err(CliError::Usage("--noise must lie in [0, 1]".into()));
    }
    let out: PathBuf = cfg.require(args.out.clone(), "out")?;
    let manifest = synth_dataset(&out, &params)?;
    println!(
        "wrote {} images for {} subjects to {}",
        manifest.image_count(),
        manifest.subjects.len(),
        out.display()
    );
    Ok(())
}

fn cmd_enroll(args: &EnrollArgs, cfg: &ConfigFile) -> CliResult<()> {
    let pipeline = pipeline_config(&args.pipeline, cfg)?;
    let out: PathBuf = cfg.require(args.out.clone(), "out")?;
    let resolved = resolve_split(&args.split, cfg, |eligible| eligible)?;
    let enrollment = pipeline.enroll(&resolved.manifest, &resolved.split)?;
    report_failures(&enrollment.failures, resolved.strict)?;
    enrollment.gallery.write(&out)?;
    println!(
        "gallery: {} entries written to {}",
        enrollment.gallery.len(),
        out.display()
    );
    Ok(())
}

/// Returns whether the probe was accepted.
fn cmd_identify(args: &IdentifyArgs, cfg: &ConfigFile) -> CliResult<bool> {
    let pipeline = pipeline_config(&args.pipeline, cfg)?;
    let gallery_path: PathBuf = cfg.require(args.gallery.clone(), "gallery")?;
    let probe_path: PathBuf = cfg.require(args.probe.clone(), "probe")?;
    let threshold: f64 = cfg.require(args.threshold, "threshold")?;
    if threshold.is_nan() || threshold < 0.0 {
        return Err(CliError::Usage("--threshold must be non-negative".into()));
    }
    let gallery = Gallery::read(&gallery_path)?;
    let image = read_gray(&probe_path)?;
    if let Some(dir) = cfg.pick(args.dump_subbands.clone(), "dump-subbands")? {
        let stem = probe_path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("probe");
        dump_subbands(&pipeline.subbands(&image)?, &dir, stem)?;
    }
    let features = pipeline.features(&image)?;
    let result = identify(&features, &gallery, threshold)?;
    println!(
        "subject={} image={} distance={} decision={}",
        result.best_subject,
        result.best_image,
        result.distance,
        if result.accepted { "accept" } else { "reject" }
    );
    Ok(result.accepted)
}

fn cmd_evaluate(args: &EvaluateArgs, cfg: &ConfigFile) -> CliResult<()> {
    let pipeline = pipeline_config(&args.pipeline, cfg)?;
    let out: PathBuf = cfg.require(args.out.clone(), "out")?;
    // without --enrolled, hold out a fifth of the subjects as impostors
    let resolved = resolve_split(&args.split, cfg, |eligible| {
        eligible.saturating_sub((eligible / 5).max(1)).max(1)
    })?;
    let thresholds = match cfg.pick(args.threshold, "threshold")? {
        Some(t) => vec![t],
        None => {
            let (start, stop, step) = DEFAULT_GRID;
            threshold_grid(
                cfg.pick(args.grid_start, "grid-start")?.unwrap_or(start),
                cfg.pick(args.grid_stop, "grid-stop")?.unwrap_or(stop),
                cfg.pick(args.grid_step, "grid-step")?.unwrap_or(step),
            )
            .map_err(|e| CliError::Usage(e.to_string()))?
        }
    };
    let evaluation = pipeline
        .evaluate(&resolved.manifest, &resolved.split, &thresholds)
        .map_err(|e| match e {
            dbcfr::Error::Eval(m) => CliError::Usage(format!(
                "{m} (check --enrolled and --gallery-per-subject against the dataset)"
            )),
            other => other.into(),
        })?;
    report_failures(&evaluation.failures, resolved.strict)?;
    let report = &evaluation.report;
    write_file(&out, &report.to_csv())?;
    if let Some(dir) = cfg.pick(args.plot_data.clone(), "plot-data")? {
        fs::create_dir_all(&dir).map_err(|e| {
            CliError::Core(dbcfr::Error::Io {
                path: dir.clone(),
                source: e,
            })
        })?;
        write_file(&dir.join("frr.dat"), &report.frr_curve())?;
        write_file(&dir.join("far.dat"), &report.far_curve())?;
    }
    println!(
        "gallery={} genuine={} impostor={}",
        report.counts.gallery_size, report.counts.genuine_probes, report.counts.impostor_probes
    );
    println!("{:>9} {:>8} {:>8} {:>8}", "threshold", "frr", "far", "rr%");
    for r in &report.rows {
        println!(
            "{:>9.4} {:>8.4} {:>8.4} {:>8.2}",
            r.threshold, r.frr, r.far, r.rr_percent
        );
    }
    println!("{}", report.eer_line().trim_start_matches("# "));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match cli.config.as_deref().map(ConfigFile::load).transpose() {
        Ok(cfg) => cfg.unwrap_or_default(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match &cli.command {
        Command::Synth(a) => cmd_synth(a, &cfg).map(|_| true),
        Command::Enroll(a) => cmd_enroll(a, &cfg).map(|_| true),
        Command::Identify(a) => cmd_identify(a, &cfg),
        Command::Evaluate(a) => cmd_evaluate(a, &cfg).map(|_| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

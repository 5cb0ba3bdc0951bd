//! Command-line surface: `simulate`, `process`, `train`, `report`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use spraycell_core::classifier::{KnnClassifier, ProfileClass, TrainingSample, TrainingSet};
use spraycell_core::features::FeatureReport;
use spraycell_core::simulator::{scenario_suite, write_suite, Rig, SuiteManifest, SUITE_MANIFEST};

use crate::config::PipelineConfig;
use crate::exit::{fail, ExitStatus, WithStatus};
use crate::pipeline::{process_scan, scan_features, ProcessOptions, Resources, FEATURES_FILE};
use crate::report::{RunReport, REPORT_FILE};
use crate::sink::FileSink;

pub const DEFAULT_SCAN_ROOT: &str = "scans";
pub const DEFAULT_OUTPUT_ROOT: &str = "output";
pub const TRAINING_FILE: &str = "training.json";

#[derive(Debug, Parser)]
#[command(name = "spraycell", version, about = "Laser-scan conveyor workpieces and plan their spray coating")]
pub struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory [simulate: scans, others: output].
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,
    /// Single seed for simulation noise and plane-fit sampling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Compute everything but write only the report.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Dispatch plans even when the neighbor vote is split.
    #[arg(long, global = true)]
    pub allow_uncertain: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a suite of synthetic scans with ground truth.
    Simulate(SimulateArgs),
    /// Reconstruct, classify and plan one scan directory or a whole suite.
    Process(ProcessArgs),
    /// Build a training set and report its leave-one-out accuracy.
    Train(TrainArgs),
    /// Summarize reports.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// `all` or a comma list of class ids.
    #[arg(long, default_value = "all")]
    pub classes: String,
    /// `all` or a comma list of size keys such as `model_1`.
    #[arg(long, default_value = "all")]
    pub sizes: String,
    /// Comma list of pitch angles in degrees.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub tilts: Option<Vec<f64>>,
    /// Comma list of seeds; `--seed` gives a single one.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Pixel noise sigma, in gray levels.
    #[arg(long)]
    pub pixel_noise: Option<f64>,
    /// Depth noise sigma, in millimeters.
    #[arg(long)]
    pub depth_noise_mm: Option<f64>,
    /// Wave amplitude, in millimeters.
    #[arg(long)]
    pub amplitude_mm: Option<f64>,
    /// Wave period, in millimeters.
    #[arg(long)]
    pub period_mm: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ProcessArgs {
    /// Scan directory, or a suite root containing `suite.json`.
    pub scan: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled feature files: a list of `{"features": [h, v], "label": id}`
    /// records, or a training-set file.
    pub files: Vec<PathBuf>,
    /// Label every scenario of a simulated suite by its true class.
    #[arg(long, value_name = "DIR")]
    pub suite: Option<PathBuf>,
    /// Neighbors to consult [default: config `k`].
    #[arg(long)]
    pub k: Option<usize>,
    /// Training-set file to write [default: <output>/training.json].
    #[arg(long, value_name = "PATH")]
    pub write: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A report file, a scan output directory, or an output root.
    pub path: Option<PathBuf>,
    /// Print canonical JSON instead of summary lines.
    #[arg(long)]
    pub json: bool,
}

/// Runs a parsed command line; errors carry their exit status.
pub fn run(cli: Cli) -> Result<ExitStatus> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path).status(ExitStatus::Usage)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.features.sample_seed = seed;
    }
    let output = |default: &str| cli.output.clone().unwrap_or_else(|| PathBuf::from(default));
    match &cli.command {
        Command::Simulate(args) => simulate(&config, args, cli.seed, &output(DEFAULT_SCAN_ROOT)),
        Command::Process(args) => {
            let options = ProcessOptions {
                dry_run: cli.dry_run,
                allow_uncertain: cli.allow_uncertain,
            };
            process(&config, &args.scan, &output(DEFAULT_OUTPUT_ROOT), options)
        }
        Command::Train(args) => train(&config, args, &output(DEFAULT_OUTPUT_ROOT), cli.dry_run),
        Command::Report(args) => {
            let path = args.path.clone().unwrap_or_else(|| output(DEFAULT_OUTPUT_ROOT));
            report(&path, args.json)
        }
    }
}

fn parse_classes(list: &str) -> Result<Vec<ProfileClass>> {
    if list == "all" {
        return Ok(ProfileClass::BUILTIN.to_vec());
    }
    list.split(',')
        .map(|s| s.trim().parse::<ProfileClass>().status(ExitStatus::Usage))
        .collect()
}

pub fn simulate(config: &PipelineConfig, args: &SimulateArgs, seed: Option<u64>, root: &Path) -> Result<ExitStatus> {
    let resources = Resources::load(config)?;
    let mut request = config.simulate.clone();
    request.classes = parse_classes(&args.classes)?;
    request.sizes = if args.sizes == "all" {
        resources.catalog.size_keys()
    } else {
        args.sizes.split(',').map(|s| s.trim().to_string()).collect()
    };
    if let Some(t) = &args.tilts {
        request.tilts_deg = t.clone();
    }
    match (&args.seeds, seed) {
        (Some(_), Some(_)) => return Err(fail(ExitStatus::Usage, "give either --seed or --seeds, not both")),
        (Some(s), None) => request.seeds = s.clone(),
        (None, Some(s)) => request.seeds = vec![s],
        (None, None) => {}
    }
    if let Some(v) = args.pixel_noise {
        request.pixel_noise_sigma = v;
    }
    if let Some(v) = args.depth_noise_mm {
        request.depth_noise_sigma = v * 1e-3;
    }
    if let Some(v) = args.amplitude_mm {
        request.wave_amplitude = v * 1e-3;
    }
    if let Some(v) = args.period_mm {
        request.wave_period = v * 1e-3;
    }
    let rig = Rig {
        reference: resources.reference,
        ..Rig::default()
    };
    let scenarios = scenario_suite(&resources.catalog, &request, &rig.reference).status(ExitStatus::Usage)?;
    let manifest = write_suite(root, &scenarios, &rig).with_context(|| format!("writing suite to {}", root.display()))?;
    for s in &manifest.scenarios {
        println!("{:<40} {:>5} frames  {}", s.id, s.frames, root.join(&s.dir).display());
    }
    println!("{} scenarios written to {}", manifest.scenarios.len(), root.display());
    Ok(ExitStatus::Ok)
}

/// Scan directories named by a suite root, or the single directory given.
fn scan_dirs(path: &Path) -> Result<Vec<PathBuf>> {
    if path.join(SUITE_MANIFEST).is_file() {
        let suite = SuiteManifest::load(path).status(ExitStatus::Usage)?;
        Ok(suite.scenarios.iter().map(|s| path.join(&s.dir)).collect())
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

pub fn process(config: &PipelineConfig, scan: &Path, out_root: &Path, options: ProcessOptions) -> Result<ExitStatus> {
    let dirs = scan_dirs(scan)?;
    let resources = Resources::load(config)?;
    let mut worst = ExitStatus::Ok;
    for dir in &dirs {
        let report = process_scan(dir, out_root, config, &resources, options, &mut FileSink)?;
        println!("{}", report.summary_line());
        for w in &report.warnings {
            eprintln!("warning: {}: {w}", report.scan_id);
        }
        if let Some(e) = &report.error {
            eprintln!("error: {}: {e}", report.scan_id);
        }
        if worst == ExitStatus::Ok {
            worst = report.status;
        }
    }
    Ok(worst)
}

fn suite_samples(config: &PipelineConfig, suite_root: &Path, out_root: &Path) -> Result<Vec<TrainingSample>> {
    let suite = SuiteManifest::load(suite_root).status(ExitStatus::Usage)?;
    let reference = config.vertical_reference()?;
    let mut samples = Vec::with_capacity(suite.scenarios.len());
    for entry in &suite.scenarios {
        let cached = out_root.join(&entry.id).join(FEATURES_FILE);
        let features = if cached.is_file() {
            let text = std::fs::read_to_string(&cached)?;
            serde_json::from_str::<FeatureReport>(&text)
                .with_context(|| format!("parsing {}", cached.display()))?
                .vector()
        } else {
            scan_features(suite_root.join(&entry.dir), config, &reference)
                .with_context(|| format!("scenario {}", entry.id))?
                .vector
        };
        samples.push(TrainingSample::new(features.profile(), entry.class.clone()));
    }
    Ok(samples)
}

pub fn train(config: &PipelineConfig, args: &TrainArgs, out_root: &Path, dry_run: bool) -> Result<ExitStatus> {
    let k = args.k.unwrap_or(config.k);
    if args.files.is_empty() && args.suite.is_none() {
        return Err(fail(ExitStatus::Usage, "give labeled feature files or --suite"));
    }
    let mut samples = Vec::new();
    for file in &args.files {
        let text = std::fs::read_to_string(file)
            .with_context(|| format!("reading {}", file.display()))
            .status(ExitStatus::Usage)?;
        let set = TrainingSet::from_json(&text, k).with_context(|| format!("in {}", file.display()))?;
        samples.extend(set.samples);
    }
    if let Some(root) = &args.suite {
        samples.extend(suite_samples(config, root, out_root)?);
    }
    let classifier = KnnClassifier::from_samples(samples, k)?;
    if classifier.len() < k {
        return Err(spraycell_core::classifier::ClassifierError::TooFewSamples {
            got: classifier.len(),
            need: k,
        }
        .into());
    }
    let classes: std::collections::BTreeSet<_> = classifier.samples().iter().map(|s| s.label.to_string()).collect();
    println!(
        "{} samples, {} classes ({}), k = {k}",
        classifier.len(),
        classes.len(),
        classes.into_iter().collect::<Vec<_>>().join(", ")
    );
    match classifier.leave_one_out() {
        Ok(loo) => {
            println!(
                "leave-one-out accuracy: {:.1}% ({}/{}, effective k = {})",
                loo.accuracy * 100.0,
                loo.total - loo.misclassified.len(),
                loo.total,
                loo.effective_k
            );
            for i in &loo.misclassified {
                let s = &classifier.samples()[*i];
                println!("  misclassified sample {i}: {} {:?}", s.label, s.features);
            }
            for w in &loo.warnings {
                eprintln!("warning: {w}");
            }
        }
        Err(e) => eprintln!("warning: leave-one-out skipped: {e}"),
    }
    let path = args.write.clone().unwrap_or_else(|| out_root.join(TRAINING_FILE));
    if dry_run {
        println!("dry run: training set not written");
    } else {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        TrainingSet::from_classifier(&classifier)
            .save(&path)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("training set written to {}", path.display());
    }
    Ok(ExitStatus::Ok)
}

/// Report files under `path`, sorted.
fn report_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if path.join(REPORT_FILE).is_file() {
        return Ok(vec![path.join(REPORT_FILE)]);
    }
    let mut files = Vec::new();
    if path.is_dir() {
        for entry in std::fs::read_dir(path)? {
            let candidate = entry?.path().join(REPORT_FILE);
            if candidate.is_file() {
                files.push(candidate);
            }
        }
    }
    files.sort();
    if files.is_empty() {
        bail!(fail(ExitStatus::Usage, format!("no reports found under {}", path.display())));
    }
    Ok(files)
}

pub fn report(path: &Path, json: bool) -> Result<ExitStatus> {
    let reports = report_files(path)?
        .iter()
        .map(RunReport::load)
        .collect::<Result<Vec<_>>>()?;
    if json {
        for r in &reports {
            println!("{}", r.canonical_json());
        }
        return Ok(ExitStatus::Ok);
    }
    let mut counts = std::collections::BTreeMap::new();
    for r in &reports {
        println!("{}", r.summary_line());
        *counts.entry(r.status).or_insert(0usize) += 1;
    }
    let tally: Vec<String> = counts.iter().map(|(s, n)| format!("{n} {s}")).collect();
    println!("{} reports: {}", reports.len(), tally.join(", "));
    Ok(ExitStatus::Ok)
}

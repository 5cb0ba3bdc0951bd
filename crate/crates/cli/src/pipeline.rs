//! Scan directory to report: reconstruct, extract, classify, match, plan.
//!
//! Plans are expressed in the scan frame: world coordinates of the plate at
//! the first frame.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use rayon::prelude::*;
use spraycell_core::classifier::{KnnClassifier, MatchOutcome, ModelCatalog, TrainingSet};
use spraycell_core::features::{extract_features, FeatureReport, Features};
use spraycell_core::frame::{ScanManifest, MANIFEST_FILE};
use spraycell_core::geometry::Calibration;
use spraycell_core::nalgebra::{Point3, Vector3};
use spraycell_core::planner::{apply_slope_correction, instantiate, select_template, JobFile};
use spraycell_core::pose::VerticalReference;
use spraycell_core::reconstruction::{write_ply, CellState, ConveyorModel, FillAxis, HeightMatrix, ScanBuilder};
use spraycell_core::simulator::{GroundTruthRecord, CALIBRATION_FILE, GROUND_TRUTH_FILE};

use crate::config::PipelineConfig;
use crate::exit::{fail, status_of, ExitStatus, WithStatus};
use crate::report::{ReconstructionSummary, RunReport, TruthCheck};
use crate::sink::PlanSink;

pub const CLOUD_FILE: &str = "cloud.ply";
pub const HEIGHTMAP_FILE: &str = "heightmap.bin";
pub const FEATURES_FILE: &str = "features.json";

/// Frames read and reconstructed per parallel batch.
const BATCH: usize = 64;

/// Catalog, classifier and reference shared by every scan of a run.
#[derive(Debug, Clone)]
pub struct Resources {
    pub catalog: ModelCatalog,
    pub classifier: Option<KnnClassifier>,
    pub reference: VerticalReference,
}

impl Resources {
    pub fn load(config: &PipelineConfig) -> Result<Self> {
        let mut catalog = match &config.paths.catalog {
            Some(path) => ModelCatalog::load(path).with_context(|| format!("loading catalog {}", path.display()))?,
            None => ModelCatalog::default(),
        };
        if let Some(t) = config.match_tolerance {
            catalog.match_tolerance = t;
        }
        let classifier = match &config.paths.training {
            Some(path) => Some(
                TrainingSet::load(path, config.k)
                    .and_then(|t| t.classifier())
                    .with_context(|| format!("loading training set {}", path.display()))?,
            ),
            None => None,
        };
        Ok(Self {
            catalog,
            classifier,
            reference: config.vertical_reference()?,
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProcessOptions {
    pub dry_run: bool,
    pub allow_uncertain: bool,
}

/// A scan directory with its manifest and calibration loaded.
#[derive(Debug, Clone)]
pub struct ScanInput {
    pub dir: PathBuf,
    pub manifest: ScanManifest,
    pub calibration: Calibration,
}

impl ScanInput {
    /// Missing or empty directories and bad manifests are usage errors.
    pub fn manifest(dir: impl AsRef<Path>) -> Result<ScanManifest> {
        let dir = dir.as_ref();
        if !dir.is_dir() {
            return Err(fail(ExitStatus::Usage, format!("scan directory {} does not exist", dir.display())));
        }
        if !dir.join(MANIFEST_FILE).is_file() {
            return Err(fail(
                ExitStatus::Usage,
                format!("{} has no {MANIFEST_FILE}; not a scan directory", dir.display()),
            ));
        }
        ScanManifest::load(dir)
            .with_context(|| format!("reading scan manifest in {}", dir.display()))
            .status(ExitStatus::Usage)
    }

    pub fn calibration(dir: impl AsRef<Path>, config: &PipelineConfig) -> Result<Calibration> {
        let path = config.paths.calibration.clone().unwrap_or_else(|| dir.as_ref().join(CALIBRATION_FILE));
        Calibration::load(&path)
            .with_context(|| format!("loading calibration {}", path.display()))
            .status(ExitStatus::Calibration)
    }

    pub fn load(dir: impl AsRef<Path>, config: &PipelineConfig) -> Result<Self> {
        let dir = dir.as_ref();
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: Self::manifest(dir)?,
            calibration: Self::calibration(dir, config)?,
        })
    }
}

/// Raw and hole-filled height matrices of one scan.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub raw: HeightMatrix,
    pub filled: HeightMatrix,
    pub summary: ReconstructionSummary,
}

pub fn reconstruct(input: &ScanInput, config: &PipelineConfig) -> Result<Reconstruction> {
    let m = &input.manifest;
    let axis = Vector3::from(m.conveyor.motion_axis);
    let conveyor = ConveyorModel::new(m.conveyor.speed_m_per_min, m.frame_rate_hz, axis)
        .context("manifest conveyor")
        .status(ExitStatus::Usage)?;
    let first = m.read_frame(&input.dir, &m.frames[0]).context("reading first frame")?;
    let (w, h) = (first.width as f64, first.height as f64);
    let u0 = m.frames.iter().map(|f| f.roi_origin[0]).min().unwrap_or(0) as f64;
    let v0 = m.frames.iter().map(|f| f.roi_origin[1]).min().unwrap_or(0) as f64;
    let u1 = m.frames.iter().map(|f| f.roi_origin[0]).max().unwrap_or(0) as f64 + w - 1.0;
    let v1 = m.frames.iter().map(|f| f.roi_origin[1]).max().unwrap_or(0) as f64 + h - 1.0;
    let frame_count = m.frames.last().map_or(0, |f| f.index + 1);
    let mut builder = ScanBuilder::new(&input.calibration, conveyor, [[u0, v0], [u1, v1]], frame_count, &config.scan)
        .context("sizing the height matrix")?;
    for chunk in m.frames.chunks(BATCH) {
        let frames = chunk
            .par_iter()
            .map(|r| m.read_frame(&input.dir, r).with_context(|| format!("reading frame {}", r.file)))
            .collect::<Result<Vec<_>>>()?;
        builder.add_frames(&frames);
    }
    let (diagnostics, stats, frames) = (builder.diagnostics, builder.stats, builder.frames);
    let raw = builder.into_matrix();
    if raw.valid_count() == 0 {
        return Err(anyhow!("no laser points were reconstructed from {} frames", frames));
    }
    let filled = fill(&raw, config.max_gap);
    let summary = ReconstructionSummary {
        frames,
        rows: filled.rows(),
        cols: filled.cols(),
        cell_size: filled.cell_size(),
        measured_cells: filled.count(CellState::Measured),
        interpolated_cells: filled.count(CellState::Interpolated),
        profiles: diagnostics,
        accumulate: stats,
    };
    Ok(Reconstruction { raw, filled, summary })
}

/// Fills short gaps along rows, then along columns. The column pass closes
/// rows skipped where the surface is sampled more coarsely than one cell.
pub fn fill(raw: &HeightMatrix, max_gap: usize) -> HeightMatrix {
    raw.fill_holes(max_gap).fill_holes_along(FillAxis::Columns, max_gap)
}

/// Features of a scan directory, for training.
pub fn scan_features(dir: impl AsRef<Path>, config: &PipelineConfig, reference: &VerticalReference) -> Result<Features> {
    let input = ScanInput::load(dir, config)?;
    let rec = reconstruct(&input, config)?;
    extract_features(&rec.filled, &config.features, reference).context("extracting features")
}

/// Center of the border's bounding box, lifted onto the fitted plane.
pub fn plate_center(features: &Features, matrix: &HeightMatrix) -> Point3<f64> {
    let [[i0, i1], [j0, j1]] = features.border.bounding_box().unwrap_or([[0, 0], [0, 0]]);
    let s = matrix.cell_size();
    let y = matrix.y_min() + s * (i0 + i1) as f64 / 2.0;
    let z = matrix.z_min() - s * (j0 + j1) as f64 / 2.0;
    Point3::new(features.fit.depth_at(y, z), y, z)
}

fn elapsed_ms(t: Instant) -> f64 {
    (t.elapsed().as_secs_f64() * 1e6).round() / 1e3
}

fn truth_check(dir: &Path, report: &RunReport) -> Result<Option<TruthCheck>> {
    let path = dir.join(GROUND_TRUTH_FILE);
    if !path.is_file() {
        return Ok(None);
    }
    let t = GroundTruthRecord::load(&path).with_context(|| format!("reading {}", path.display()))?;
    let (Some(dims), Some(tilt)) = (report.dimensions, report.tilt_deg) else {
        return Ok(None);
    };
    Ok(Some(TruthCheck {
        class_correct: report.class.as_ref() == Some(&t.class),
        model_correct: report.model_id.as_deref() == Some(t.model_id.as_str()),
        dimension_error: [(dims[0] - t.length).abs() / t.length, (dims[1] - t.width).abs() / t.width],
        tilt_error_deg: [tilt[0] - t.tilt_deg[0], tilt[1] - t.tilt_deg[1]],
        class: t.class,
        model_id: t.model_id,
        dimensions: [t.length, t.width],
        tilt_deg: t.tilt_deg,
    }))
}

/// Processes one scan directory into `out_dir`.
///
/// Errors before the manifest is read are returned; later stage failures
/// are recorded in the report, which is always written.
pub fn process_scan(
    scan_dir: impl AsRef<Path>,
    out_root: impl AsRef<Path>,
    config: &PipelineConfig,
    resources: &Resources,
    options: ProcessOptions,
    sink: &mut dyn PlanSink,
) -> Result<RunReport> {
    let scan_dir = scan_dir.as_ref();
    let manifest = ScanInput::manifest(scan_dir)?;
    let out_dir = out_root.as_ref().join(&manifest.scan_id);
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let mut report = RunReport::new(&manifest.scan_id);
    let total = Instant::now();
    let result = run_stages(scan_dir, manifest, &out_dir, config, resources, options, sink, &mut report);
    if let Err(e) = result {
        report.set_status(status_of(&e));
        report.error = Some(format!("{e:#}"));
    }
    match truth_check(scan_dir, &report) {
        Ok(t) => report.truth = t,
        Err(e) => report.warnings.push(format!("ground truth ignored: {e:#}")),
    }
    report.timings_ms.insert("total".into(), elapsed_ms(total));
    report.save(&out_dir)?;
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn run_stages(
    scan_dir: &Path,
    manifest: ScanManifest,
    out_dir: &Path,
    config: &PipelineConfig,
    resources: &Resources,
    options: ProcessOptions,
    sink: &mut dyn PlanSink,
    report: &mut RunReport,
) -> Result<()> {
    let t = Instant::now();
    let input = ScanInput {
        dir: scan_dir.to_path_buf(),
        calibration: ScanInput::calibration(scan_dir, config)?,
        manifest,
    };
    let rec = reconstruct(&input, config)?;
    report.reconstruction = Some(rec.summary.clone());
    report.timings_ms.insert("reconstruct".into(), elapsed_ms(t));

    let t = Instant::now();
    let features = extract_features(&rec.filled, &config.features, &resources.reference).context("extracting features")?;
    let feature_report = FeatureReport::from(&features);
    report.features = Some(feature_report.clone());
    report.dimensions = Some([features.vector.length, features.vector.width]);
    report.tilt_deg = Some(features.fit.tilt.degrees());
    report.timings_ms.insert("features".into(), elapsed_ms(t));
    if !options.dry_run {
        write_ply(out_dir.join(CLOUD_FILE), &rec.filled.to_point_cloud())?;
        rec.filled.save(out_dir.join(HEIGHTMAP_FILE))?;
        std::fs::write(out_dir.join(FEATURES_FILE), serde_json::to_string_pretty(&feature_report)?)?;
        report.artifacts.extend([CLOUD_FILE.to_string(), HEIGHTMAP_FILE.into(), FEATURES_FILE.into()]);
    }

    let t = Instant::now();
    let classifier = resources
        .classifier
        .as_ref()
        .ok_or_else(|| fail(ExitStatus::Untrained, "no training set configured (set paths.training)"))?;
    let c = classifier.classify(&features.vector.profile()).context("classifying")?;
    report.class = Some(c.class.clone());
    report.confidence = Some(c.confidence);
    report.neighbors = c.neighbors.iter().map(|n| n.label.clone()).collect();
    report.timings_ms.insert("classify".into(), elapsed_ms(t));

    let t = Instant::now();
    let [length, width] = [features.vector.length, features.vector.width];
    let outcome = resources.catalog.match_model(&c.class, length, width);
    report.model_id = outcome.model_id().map(str::to_string);
    report.match_outcome = Some(outcome.clone());
    report.timings_ms.insert("match".into(), elapsed_ms(t));

    let uncertain = c.confidence < 1.0;
    if uncertain && !options.allow_uncertain {
        return Err(fail(
            ExitStatus::Uncertain,
            format!("neighbor vote split (confidence {:.2}); plan withheld", c.confidence),
        ));
    }
    if let MatchOutcome::NoMatch { nearest, relative_error } = &outcome {
        let detail = match (nearest, relative_error) {
            (Some(n), Some(e)) => format!("; nearest {n} at {:.1}%", e * 100.0),
            _ => String::new(),
        };
        return Err(fail(
            ExitStatus::NoMatch,
            format!("no {} model within {:.1}%{detail}", c.class, resources.catalog.match_tolerance * 100.0),
        ));
    }

    let t = Instant::now();
    let template = select_template(&c.class, &config.planner)?;
    let center = plate_center(&features, &rec.filled);
    let plan = instantiate(&template, length, width, &resources.reference)?.placed_at(&center);
    let pivot = spraycell_core::features::PlaneFit {
        centroid: center,
        ..features.fit
    };
    let plan = apply_slope_correction(&plan, &pivot, config.planner.max_fit_residual)?;
    let job = JobFile::new(&plan, outcome.model_id(), &features.fit.tilt);
    report.timings_ms.insert("plan".into(), elapsed_ms(t));
    if uncertain {
        report.warnings.push(format!(
            "plan dispatched with confidence {:.2} because --allow-uncertain is set",
            c.confidence
        ));
    }
    if options.dry_run {
        report.warnings.push("dry run: plan not written".into());
        return Ok(());
    }
    let files = sink.dispatch(out_dir, &job)?;
    report.plan = files.first().cloned();
    report.artifacts.extend(files);
    Ok(())
}

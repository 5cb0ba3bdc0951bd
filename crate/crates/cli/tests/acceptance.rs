//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use spraycell_cli::pipeline::fill;
use spraycell_cli::RunReport;
use spraycell_core::classifier::{
    KnnClassifier, MatchOutcome, ModelCatalog, ProfileClass, TrainingSample, STANDARD_SIZES,
};
use spraycell_core::features::{extract_features, fit_plane_svd, FeatureConfig, Features};
use spraycell_core::geometry::{intersect_ray_plane, LaserPlane, Ray};
use spraycell_core::nalgebra::{Point3, Vector3};
use spraycell_core::pose::{Tilt, VerticalReference};
use spraycell_core::reconstruction::{HeightMatrix, ScanBuilder, ScanConfig};
use spraycell_core::simulator::{
    generate_surface, render_scan_with, scenario_suite, GroundTruth, Rig, Scenario, SuiteRequest, SurfaceSpec,
};

type Outcome = Result<String, String>;

/// Raw matrix of one rendered scan, with the staged ground truth.
fn scan(spec: &SurfaceSpec, rig: &Rig) -> (HeightMatrix, GroundTruth) {
    let truth = generate_surface(spec, &rig.reference).expect("valid spec");
    let staged = rig.stage(&truth).expect("plate reaches the laser");
    let mut builder = ScanBuilder::new(&rig.calibration(), rig.conveyor, rig.window(), staged.frames, &ScanConfig::default())
        .expect("matrix sized");
    render_scan_with(&staged, rig, |f| {
        builder.add_frame(&f);
        Ok(())
    })
    .expect("scan renders");
    (builder.into_matrix(), staged.truth)
}

struct Measured {
    scenario: Scenario,
    features: Features,
}

fn run_suite(request: &SuiteRequest) -> Vec<Measured> {
    let rig = Rig::default();
    let scenarios = scenario_suite(&ModelCatalog::default(), request, &rig.reference).expect("suite");
    scenarios
        .into_iter()
        .map(|scenario| {
            let (raw, _) = scan(&scenario.spec, &rig);
            let features = extract_features(&fill(&raw, 5), &FeatureConfig::default(), &rig.reference)
                .unwrap_or_else(|e| panic!("{}: {e}", scenario.id));
            Measured { scenario, features }
        })
        .collect()
}

fn dimension_errors(suite: &[Measured]) -> Vec<f64> {
    suite
        .iter()
        .flat_map(|m| {
            let s = &m.scenario.spec;
            let v = &m.features.vector;
            [(v.length - s.length).abs() / s.length, (v.width - s.width).abs() / s.width]
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn max(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

fn dimension_accuracy(noisy: &[Measured], clean: &[Measured]) -> Outcome {
    let (en, ec) = (dimension_errors(noisy), dimension_errors(clean));
    let detail = format!(
        "noisy mean {:.3}% (max {:.3}%, {} scans), noise-free mean {:.3}% (max {:.3}%, {} scans)",
        mean(&en) * 100.0,
        max(&en) * 100.0,
        noisy.len(),
        mean(&ec) * 100.0,
        max(&ec) * 100.0,
        clean.len()
    );
    if mean(&en) <= 0.02 && mean(&ec) <= 0.005 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn classification(noisy: &[Measured]) -> Outcome {
    let samples = noisy
        .iter()
        .map(|m| TrainingSample::new(m.features.vector.profile(), m.scenario.spec.class.clone()))
        .collect();
    let loo = KnnClassifier::from_samples(samples, 3)
        .and_then(|c| c.leave_one_out())
        .map_err(|e| e.to_string())?;
    let missed: Vec<&str> = loo.misclassified.iter().map(|&i| noisy[i].scenario.id.as_str()).collect();
    let detail = format!(
        "leave-one-out k = 3: {:.1}% of {} ({} missed{})",
        loo.accuracy * 100.0,
        loo.total,
        missed.len(),
        if missed.is_empty() { String::new() } else { format!(": {}", missed.join(", ")) }
    );
    if missed.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn feature_separation(suites: &[&[Measured]]) -> Outcome {
    let all: Vec<&Measured> = suites.iter().flat_map(|s| s.iter()).collect();
    let mut failures = Vec::new();
    let (mut min_h, mut min_v) = (f64::INFINITY, f64::INFINITY);
    let mut dominant = f64::INFINITY;
    for m in &all {
        let v = &m.features.vector;
        match m.scenario.spec.class {
            ProfileClass::HorizontalWavy => {
                min_h = min_h.min(v.var_horiz / v.var_vert);
                dominant = dominant.min(v.var_horiz);
                if v.var_horiz < 3.0 * v.var_vert {
                    failures.push(m.scenario.id.clone());
                }
            }
            ProfileClass::VerticalWavy => {
                min_v = min_v.min(v.var_vert / v.var_horiz);
                dominant = dominant.min(v.var_vert);
                if v.var_vert < 3.0 * v.var_horiz {
                    failures.push(m.scenario.id.clone());
                }
            }
            _ => {}
        }
    }
    let mut smooth_max: f64 = 0.0;
    for m in all.iter().filter(|m| m.scenario.spec.class == ProfileClass::Smooth) {
        let v = &m.features.vector;
        smooth_max = smooth_max.max(v.var_horiz.max(v.var_vert));
        if v.var_horiz.max(v.var_vert) >= 0.2 * dominant {
            failures.push(m.scenario.id.clone());
        }
    }
    let detail = format!(
        "min horizontal ratio {min_h:.2}, min vertical ratio {min_v:.2}, smooth max {smooth_max:.4} mm^2 vs 20% of \
         smallest dominant {:.3} mm^2 over {} scans",
        0.2 * dominant,
        all.len()
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; failing: {}", failures.join(", ")))
    }
}

fn plane_fit_speed() -> Outcome {
    let reference = VerticalReference::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let noise = Normal::new(0.0, 0.0005).unwrap();
    let normal = Tilt::from_degrees(5.0, 0.0).normal(&reference);
    let up = reference.up().into_inner();
    let side = normal.cross(&up).normalize();
    let up = side.cross(&normal);
    let points: Vec<Point3<f64>> = (0..1000)
        .map(|_| {
            let (a, b) = (rng.random_range(-0.4..0.4), rng.random_range(-0.2..0.2));
            Point3::from(a * up + b * side + noise.sample(&mut rng) * normal)
        })
        .collect();
    let mut times = Vec::with_capacity(100);
    let mut fit = None;
    for _ in 0..100 {
        let t = Instant::now();
        fit = Some(fit_plane_svd(std::hint::black_box(&points), &reference).map_err(|e| e.to_string())?);
        times.push(t.elapsed().as_secs_f64() * 1e3);
    }
    times.sort_by(f64::total_cmp);
    let median = (times[49] + times[50]) / 2.0;
    let pitch = fit.unwrap().tilt.degrees()[0];
    let detail = format!("median {median:.3} ms over 100 fits of 1000 points, recovered pitch {pitch:.3} deg");
    if median <= 10.0 && (pitch - 5.0).abs() <= 0.5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Bisection root of `n . (o + t w) - d` on a bracketing interval.
fn bisect_plane(ray: &Ray, plane: &LaserPlane) -> Option<Point3<f64>> {
    let f = |t: f64| plane.signed_distance(&ray.at(t));
    let (mut lo, mut hi) = (0.0, 1.0);
    while f(lo).signum() == f(hi).signum() {
        hi *= 2.0;
        if hi > 1e6 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) == 0.0 {
            return Some(ray.at(mid));
        }
        if f(mid).signum() == f(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(ray.at(0.5 * (lo + hi)))
}

fn unit(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if v.norm() > 0.1 && v.norm() <= 1.0 {
            return v.normalize();
        }
    }
}

fn triangulation_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut cases, mut worst) = (0, 0.0f64);
    while cases < 1000 {
        let anchor = Point3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let plane = LaserPlane::new(anchor, unit(&mut rng)).unwrap();
        let origin = Point3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let ray = Ray::new(origin, unit(&mut rng)).unwrap();
        let (Ok(hit), Some(oracle)) = (intersect_ray_plane(&ray, &plane), bisect_plane(&ray, &plane)) else {
            continue;
        };
        if ray.direction.dot(&plane.normal()).abs() < 0.05 {
            continue;
        }
        worst = worst.max((hit.point - oracle).norm());
        cases += 1;
    }
    let mut worst_cell: f64 = 0.0;
    for _ in 0..10_000 {
        let cell = rng.random_range(0.0005..0.005);
        let (rows, cols) = (rng.random_range(10..400), rng.random_range(10..400));
        let (y_min, z_min) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let m = HeightMatrix::new(rows, cols, cell, y_min, z_min).unwrap();
        let p = Point3::new(
            rng.random_range(-0.1..0.1),
            y_min + rng.random_range(0.0..(rows as f64 - 0.5) * cell),
            z_min - rng.random_range(0.0..(cols as f64 - 0.5) * cell),
        );
        let Some((i, j)) = m.cell_of(&p) else {
            return Err(format!("point {p:?} fell outside its matrix"));
        };
        let q = m.world(i, j, p.x);
        worst_cell = worst_cell.max((q.y - p.y).abs().max((q.z - p.z).abs()) / cell);
    }
    let detail = format!(
        "{cases} ray/plane cases, worst deviation {worst:.2e} m; 10000 cell round trips, worst {worst_cell:.4} cells"
    );
    if worst <= 1e-9 && worst_cell <= 0.5 + 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Exhaustive search over every entry of the class.
fn match_oracle(catalog: &ModelCatalog, class: &ProfileClass, length: f64, width: f64) -> MatchOutcome {
    let mut best: Option<(f64, &str)> = None;
    for e in catalog.entries.iter().filter(|e| &e.class == class) {
        let err = ((length - e.length).abs() / e.length).max((width - e.width).abs() / e.width);
        let better = match best {
            None => true,
            Some((b, id)) => err < b || (err == b && e.model_id.as_str() < id),
        };
        if better {
            best = Some((err, &e.model_id));
        }
    }
    match best {
        Some((err, id)) if err <= catalog.match_tolerance => MatchOutcome::Matched {
            model_id: id.to_string(),
            relative_error: err,
        },
        Some((err, id)) => MatchOutcome::NoMatch {
            nearest: Some(id.to_string()),
            relative_error: Some(err),
        },
        None => MatchOutcome::NoMatch {
            nearest: None,
            relative_error: None,
        },
    }
}

fn size_matching() -> Outcome {
    let catalog = ModelCatalog::default();
    let mut wrong = Vec::new();
    let mut checked = 0;
    for class in ProfileClass::BUILTIN {
        for (size, length, width) in STANDARD_SIZES {
            let expected = catalog.by_size(&class, size).unwrap().model_id.clone();
            for (fl, fw) in [(1.0, 1.0), (1.02, 1.0), (0.98, 1.0), (1.0, 1.02), (1.0, 0.98), (1.02, 1.02), (0.98, 0.98), (1.02, 0.98), (0.98, 1.02)] {
                checked += 1;
                if catalog.match_model(&class, length * fl, width * fw).model_id() != Some(expected.as_str()) {
                    wrong.push(format!("{expected} x ({fl}, {fw})"));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut disagree = 0;
    let mut matched = 0;
    for _ in 0..10_000 {
        let class = ProfileClass::BUILTIN[rng.random_range(0..3)].clone();
        let (l, w) = (rng.random_range(0.45..0.9), rng.random_range(0.3..0.55));
        let got = catalog.match_model(&class, l, w);
        matched += got.model_id().is_some() as usize;
        if got != match_oracle(&catalog, &class, l, w) {
            disagree += 1;
        }
    }
    let detail = format!(
        "{checked} exact and +/-2% lookups, {} wrong; oracle disagreements {disagree} of 10000 ({matched} matched)",
        wrong.len()
    );
    if wrong.is_empty() && disagree == 0 {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", wrong.join(", ")))
    }
}

fn occlusion() -> Outcome {
    let spec = SurfaceSpec {
        wave_amplitude: 0.0078,
        wave_period: 0.024,
        ..SurfaceSpec::new(ProfileClass::HorizontalWavy, 0.6, 0.4)
    };
    let rig = Rig::default();
    let (raw, truth) = scan(&spec, &rig);
    let filled = raw.fill_holes(5);
    let inset = 0.003;
    let (mut cells, mut holes, mut far, mut valid_after) = (0usize, 0usize, 0usize, 0usize);
    for i in 0..raw.rows() {
        for j in 0..raw.cols() {
            let l = truth.to_local(&raw.world(i, j, truth.centroid.x));
            if l.y.abs() >= spec.length / 2.0 - inset || l.z.abs() >= spec.width / 2.0 - inset {
                continue;
            }
            cells += 1;
            valid_after += filled.is_valid(i, j) as usize;
            if !raw.is_valid(i, j) {
                holes += 1;
                far += ((std::f64::consts::TAU * l.z / spec.wave_period).cos() < 0.0) as usize;
            }
        }
    }
    let (hole_frac, far_frac, after) =
        (holes as f64 / cells as f64, far as f64 / holes.max(1) as f64, valid_after as f64 / cells as f64);
    let detail = format!(
        "{:.1}% of interior cells empty before filling, {:.1}% of them on the far wave flank; valid after filling {:.2}%",
        hole_frac * 100.0,
        far_frac * 100.0,
        after * 100.0
    );
    if hole_frac > 0.05 && far_frac >= 0.9 && after >= 0.98 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_spraycell"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("`{}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)))
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let sim = |name: &str| {
        cli(&[
            "simulate", "--output", s(&root.join(name)), "--sizes", "model_5", "--tilts", "5", "--seed", "9",
            "--pixel-noise", "2", "--depth-noise-mm", "0.5",
        ])
    };
    sim("scans_a")?;
    sim("scans_b")?;
    let training = root.join("training.json");
    cli(&["train", "--suite", s(&root.join("scans_a")), "--k", "1", "--write", s(&training), "--output", s(&root.join("out_a"))])?;
    let config = root.join("config.toml");
    std::fs::write(&config, "k = 1\n[paths]\ntraining = \"training.json\"\n").map_err(|e| e.to_string())?;
    for run in ["a", "b"] {
        let scans = root.join(format!("scans_{run}"));
        cli(&["process", "--config", s(&config), "--output", s(&root.join(format!("out_{run}"))), s(&scans)])?;
    }
    let ids = ["smooth_model_5_t5_s9", "horizontal_wavy_model_5_t5_s9", "vertical_wavy_model_5_t5_s9"];
    for id in ids {
        let load = |run: &str| RunReport::load(root.join(format!("out_{run}")).join(id).join("report.json"));
        let (a, b) = (load("a").map_err(|e| e.to_string())?, load("b").map_err(|e| e.to_string())?);
        if a.canonical_json() != b.canonical_json() {
            return Err(format!("{id}: canonical reports differ"));
        }
        if a.exit_code != 0 {
            return Err(format!("{id}: status {}", a.status));
        }
    }
    Ok(format!("{} scans simulated and processed twice; canonical reports byte-identical", ids.len()))
}

fn main() {
    let started = Instant::now();
    let noisy_request = SuiteRequest {
        tilts_deg: vec![0.0, 5.0],
        seeds: vec![0, 1, 2],
        pixel_noise_sigma: 2.0,
        depth_noise_sigma: 0.0005,
        ..SuiteRequest::default()
    };
    let clean_request = SuiteRequest {
        seeds: vec![0],
        pixel_noise_sigma: 0.0,
        depth_noise_sigma: 0.0,
        ..noisy_request.clone()
    };
    let noisy = run_suite(&noisy_request);
    let clean = run_suite(&clean_request);
    let slope = || -> Outcome {
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for m in noisy.iter().chain(&clean) {
            let want = m.scenario.spec.tilt.degrees();
            let got = m.features.fit.tilt.degrees();
            worst = worst.max((got[0] - want[0]).abs()).max((got[1] - want[1]).abs());
            count += 1;
        }
        let detail = format!("worst pitch/yaw error {worst:.3} deg over {count} scans (tilts 0 and 5 deg)");
        if worst <= 0.5 {
            Ok(detail)
        } else {
            Err(detail)
        }
    };
    let results: Vec<(&str, Outcome)> = vec![
        ("dimension accuracy", dimension_accuracy(&noisy, &clean)),
        ("classification", classification(&noisy)),
        ("feature separation", feature_separation(&[&noisy, &clean])),
        ("plane-fit speed", plane_fit_speed()),
        ("slope recovery", slope()),
        ("triangulation oracle", triangulation_oracle()),
        ("size matching", size_matching()),
        ("occlusion", occlusion()),
        ("determinism", determinism()),
    ];
    let mut failed = 0;
    for (n, (name, outcome)) in results.iter().enumerate() {
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {detail}", n + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed in {:.0} s",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

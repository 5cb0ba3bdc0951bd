//! Laser-line frame renderer.
//!
//! Each frame casts a fan of laser rays from the laser anchor through the
//! sheet, keeps the first surface crossing of each ray, drops points the
//! camera cannot see, and draws the projected curve as a Gaussian line.

use nalgebra::{Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{GroundTruth, Rig, SimError, Staged};
use crate::frame::Frame;
use crate::geometry::Pixel;

const MARCH_STEP: f64 = 4e-4;
const FRAME_CHUNK: u64 = 64;

/// A lit surface point and where the camera sees it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSample {
    /// World position at the time of the frame, including depth noise.
    pub point: Point3<f64>,
    pub pixel: Pixel,
}

/// Local-coordinate parametrization of a straight path, `l(t) = l0 + t l1`.
struct Path<'a> {
    truth: &'a GroundTruth,
    l0: Vector3<f64>,
    l1: Vector3<f64>,
}

impl<'a> Path<'a> {
    fn new(truth: &'a GroundTruth, origin: &Point3<f64>, dir: &Vector3<f64>) -> Self {
        let l0 = truth.to_local(origin);
        let l1 = truth.to_local(&(origin + dir)) - l0;
        Self { truth, l0, l1 }
    }

    fn height(&self, t: f64) -> f64 {
        let l = self.l0 + self.l1 * t;
        l.x - self.truth.local_height(l.y, l.z)
    }

    fn inside(&self, t: f64) -> bool {
        let l = self.l0 + self.l1 * t;
        self.truth.contains(l.y, l.z)
    }

    /// Parameter interval where the path is within the wave slab.
    fn slab(&self, t_min: f64, t_max: f64) -> Option<(f64, f64)> {
        let h = self.truth.spec.wave_amplitude + 1e-4;
        let (a, b) = (self.l0.x, self.l1.x);
        let (lo, hi) = if b.abs() < 1e-15 {
            if a.abs() > h {
                return None;
            }
            (t_min, t_max)
        } else {
            let (t0, t1) = ((-h - a) / b, (h - a) / b);
            (t0.min(t1).max(t_min), t0.max(t1).min(t_max))
        };
        (lo < hi).then_some((lo, hi))
    }

    /// First crossing of the sheet inside the plate outline, with whether it
    /// was approached from the front.
    fn first_crossing(&self, t_min: f64, t_max: f64) -> Option<(f64, bool)> {
        let (lo, hi) = self.slab(t_min, t_max)?;
        let steps = ((hi - lo) / MARCH_STEP).ceil().max(1.0) as usize;
        let mut t_prev = lo;
        let mut f_prev = self.height(lo);
        for s in 1..=steps {
            let t = lo + (hi - lo) * s as f64 / steps as f64;
            let f = self.height(t);
            if (f_prev > 0.0) != (f > 0.0) {
                let (mut a, mut b) = (t_prev, t);
                for _ in 0..60 {
                    let mid = 0.5 * (a + b);
                    if (self.height(mid) > 0.0) == (f_prev > 0.0) {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                let root = 0.5 * (a + b);
                if self.inside(root) {
                    return Some((root, f_prev > 0.0));
                }
            }
            t_prev = t;
            f_prev = f;
        }
        None
    }
}

fn visible_from(truth: &GroundTruth, point: &Point3<f64>, eye: &Point3<f64>) -> bool {
    let d = eye - point;
    let len = d.norm();
    let dir = d / len;
    let path = Path::new(truth, point, &dir);
    let eps = 1e-6;
    path.height(eps) > 0.0 && path.first_crossing(eps, len).is_none()
}

/// The plate as it stands at frame `index`.
pub fn truth_at(staged: &GroundTruth, rig: &Rig, index: u64) -> GroundTruth {
    staged.clone().with_centroid(staged.centroid + rig.conveyor.offset(index))
}

/// Laser samples of one frame in fan order; `None` where a ray misses the
/// plate, meets its back, or lands where the camera cannot see.
pub fn trace_frame(staged: &GroundTruth, rig: &Rig, index: u64) -> Vec<Option<LineSample>> {
    let truth = truth_at(staged, rig, index);
    let corners = truth.bounding_corners();
    let sides = corners.map(|p| rig.laser.signed_distance(&p) > 0.0);
    if sides.iter().all(|&s| s) || sides.iter().all(|&s| !s) {
        return Vec::new();
    }
    let n = rig.laser.normal().into_inner();
    let m = rig.conveyor.motion_axis().into_inner();
    let along = n.cross(&m).normalize();
    let across = n.cross(&along);
    let across = across / across.dot(&rig.reference.normal());
    let anchor = rig.laser.anchor();
    let t0 = truth.centroid - m * (rig.laser.signed_distance(&truth.centroid) / n.dot(&m));
    let forward = (t0 - anchor).normalize();
    let angles = corners.map(|p| {
        let q = p - n * rig.laser.signed_distance(&p) - anchor;
        along.dot(&q).atan2(forward.dot(&q))
    });
    let step = rig.arc_step / (t0 - anchor).norm();
    let lo = angles.iter().cloned().fold(f64::INFINITY, f64::min) - 10.0 * step;
    let hi = angles.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 10.0 * step;
    let rays = ((hi - lo) / step).ceil() as usize + 1;

    let sigma = truth.spec.depth_noise_sigma;
    let mut rng = ChaCha8Rng::seed_from_u64(truth.spec.seed);
    rng.set_stream(2 * index + 1);
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).expect("finite sigma");

    let eye = rig.camera.center();
    (0..rays)
        .map(|k| {
            let theta = lo + k as f64 * step;
            let dir = forward * theta.cos() + along * theta.sin();
            let path = Path::new(&truth, &anchor, &dir);
            let (t, front) = path.first_crossing(0.0, f64::MAX)?;
            if !front {
                return None;
            }
            let hit = anchor + dir * t;
            if !visible_from(&truth, &hit, &eye) {
                return None;
            }
            let point = if sigma > 0.0 { hit + across * noise.sample(&mut rng) } else { hit };
            let pixel = rig.camera.project(&point).ok()?;
            Some(LineSample { point, pixel })
        })
        .collect()
}

/// Draws the traced curve into the sensor window as intensities; also
/// returns the number of window columns it crosses.
fn rasterize(samples: &[Option<LineSample>], rig: &Rig) -> (Vec<f64>, usize) {
    let [u0, v0] = rig.roi_origin;
    let [w, h] = rig.roi_size;
    let mut image = vec![0.0; w * h];
    let sigma = rig.line_sigma_px;
    let reach = 4.0 * sigma;
    let mut columns = 0;
    for pair in samples.windows(2) {
        let (Some(a), Some(b)) = (pair[0], pair[1]) else { continue };
        let (a, b) = if a.pixel.u <= b.pixel.u { (a.pixel, b.pixel) } else { (b.pixel, a.pixel) };
        if b.u - a.u > 2.0 {
            continue;
        }
        let first = a.u.ceil().max(u0 as f64) as i64;
        let last = b.u.floor().min((u0 + w - 1) as f64) as i64;
        for c in first..=last {
            let t = if b.u > a.u { (c as f64 - a.u) / (b.u - a.u) } else { 0.0 };
            let v = a.v + t * (b.v - a.v);
            let r0 = (v - reach).ceil().max(v0 as f64) as i64;
            let r1 = (v + reach).floor().min((v0 + h - 1) as f64) as i64;
            if r0 <= r1 {
                columns += 1;
            }
            for r in r0..=r1 {
                let i = (r as usize - v0) * w + (c as usize - u0);
                let value = rig.line_peak * (-(r as f64 - v).powi(2) / (2.0 * sigma * sigma)).exp();
                if value > image[i] {
                    image[i] = value;
                }
            }
        }
    }
    (image, columns)
}

fn quantize(image: Vec<f64>, truth: &GroundTruth, rig: &Rig, index: u64) -> Frame {
    let [w, h] = rig.roi_size;
    let sigma = truth.spec.pixel_noise_sigma;
    let pixels: Vec<u8> = if sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(truth.spec.seed);
        rng.set_stream(2 * index);
        let noise = Normal::new(0.0, sigma).expect("finite sigma");
        image
            .into_iter()
            .map(|v| (v + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
            .collect()
    } else {
        image.into_iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect()
    };
    Frame::new(w, h, pixels)
        .expect("sized buffer")
        .with_index(index, index as f64 / rig.conveyor.frame_rate_hz())
        .with_roi_origin(rig.roi_origin)
}

/// Renders frame `index` and reports how many columns show the line.
pub fn render_frame(staged: &GroundTruth, rig: &Rig, index: u64) -> (Frame, usize) {
    let (image, columns) = rasterize(&trace_frame(staged, rig, index), rig);
    (quantize(image, staged, rig, index), columns)
}

/// Renders every frame of a staged scan in index order, passing each to
/// `sink`. Fails with [`SimError::NeverVisible`] if no frame shows the line.
pub fn render_scan_with<F>(staged: &Staged, rig: &Rig, mut sink: F) -> Result<(), SimError>
where
    F: FnMut(Frame) -> Result<(), SimError>,
{
    let mut lit = 0;
    let mut start = 0;
    while start < staged.frames {
        let end = (start + FRAME_CHUNK).min(staged.frames);
        let chunk: Vec<(Frame, usize)> = (start..end)
            .into_par_iter()
            .map(|i| render_frame(&staged.truth, rig, i))
            .collect();
        for (frame, n) in chunk {
            lit += n;
            sink(frame)?;
        }
        start = end;
    }
    if lit == 0 {
        return Err(SimError::NeverVisible);
    }
    Ok(())
}

pub fn render_scan(staged: &Staged, rig: &Rig) -> Result<Vec<Frame>, SimError> {
    let mut frames = Vec::with_capacity(staged.frames as usize);
    render_scan_with(staged, rig, |f| {
        frames.push(f);
        Ok(())
    })?;
    Ok(frames)
}

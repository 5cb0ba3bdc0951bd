use nalgebra::{Point3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::classifier::ProfileClass;
use crate::pose::{Tilt, VerticalReference};

pub const DEFAULT_WAVE_AMPLITUDE: f64 = 0.005;
pub const DEFAULT_WAVE_PERIOD: f64 = 0.08;

/// Synthetic workpiece description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub class: ProfileClass,
    pub length: f64,
    pub width: f64,
    pub wave_amplitude: f64,
    pub wave_period: f64,
    pub tilt: Tilt,
    pub depth_noise_sigma: f64,
    pub pixel_noise_sigma: f64,
    pub seed: u64,
}

impl SurfaceSpec {
    /// Noise-free, untilted plate with the default wave (none when smooth).
    pub fn new(class: ProfileClass, length: f64, width: f64) -> Self {
        let wave_amplitude = if class == ProfileClass::Smooth { 0.0 } else { DEFAULT_WAVE_AMPLITUDE };
        Self {
            class,
            length,
            width,
            wave_amplitude,
            wave_period: DEFAULT_WAVE_PERIOD,
            tilt: Tilt::default(),
            depth_noise_sigma: 0.0,
            pixel_noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if let ProfileClass::Other(id) = &self.class {
            return Err(SimError::UnknownClass(id.clone()));
        }
        let checks = [
            ("length", self.length > 0.0 && self.length.is_finite()),
            ("width", self.width > 0.0 && self.width.is_finite()),
            ("wave_amplitude", self.wave_amplitude >= 0.0 && self.wave_amplitude.is_finite()),
            ("wave_period", self.wave_period > 0.0 && self.wave_period.is_finite()),
            ("tilt", self.tilt.pitch.is_finite() && self.tilt.yaw.is_finite()),
            ("depth_noise_sigma", self.depth_noise_sigma >= 0.0 && self.depth_noise_sigma.is_finite()),
            ("pixel_noise_sigma", self.pixel_noise_sigma >= 0.0 && self.pixel_noise_sigma.is_finite()),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((field, _)) => Err(SimError::InvalidSpec(format!("{field} out of range"))),
            None => Ok(()),
        }
    }
}

/// A plate with known geometry.
///
/// Local coordinates `(h, a, b)` measure height along the ideal normal,
/// position along `up` and position along `normal x up`. The untilted
/// surface is `h = A sin(2 pi s / period)` with `s = b` for horizontal-wavy
/// and `s = a` for vertical-wavy plates, over `|a| <= length / 2`,
/// `|b| <= width / 2`. The tilt rotates it about the centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub spec: SurfaceSpec,
    pub centroid: Point3<f64>,
    pub reference: VerticalReference,
    rotation: Rotation3<f64>,
    axes: [Vector3<f64>; 3],
}

pub fn generate_surface(spec: &SurfaceSpec, reference: &VerticalReference) -> Result<GroundTruth, SimError> {
    spec.validate()?;
    let n = reference.normal().into_inner();
    let up = reference.up().into_inner();
    Ok(GroundTruth {
        spec: spec.clone(),
        centroid: Point3::origin(),
        reference: *reference,
        rotation: spec.tilt.rotation(reference),
        axes: [n, up, n.cross(&up)],
    })
}

impl GroundTruth {
    pub fn with_centroid(mut self, centroid: Point3<f64>) -> Self {
        self.centroid = centroid;
        self
    }

    pub fn class(&self) -> &ProfileClass {
        &self.spec.class
    }

    pub fn dimensions(&self) -> [f64; 2] {
        [self.spec.length, self.spec.width]
    }

    pub fn tilt(&self) -> Tilt {
        self.spec.tilt
    }

    /// Tilted plate normal.
    pub fn normal(&self) -> Vector3<f64> {
        self.rotation * self.axes[0]
    }

    /// Untilted height at in-plane position `(a, b)`.
    pub fn local_height(&self, a: f64, b: f64) -> f64 {
        let s = match self.spec.class {
            ProfileClass::HorizontalWavy => b,
            ProfileClass::VerticalWavy => a,
            _ => return 0.0,
        };
        self.spec.wave_amplitude * (std::f64::consts::TAU * s / self.spec.wave_period).sin()
    }

    pub fn contains(&self, a: f64, b: f64) -> bool {
        a.abs() <= self.spec.length / 2.0 && b.abs() <= self.spec.width / 2.0
    }

    /// Local `(h, a, b)` of a point given in the frame-0 world.
    pub fn to_local(&self, p: &Point3<f64>) -> Vector3<f64> {
        let v = self.rotation.inverse() * (p - self.centroid);
        Vector3::new(v.dot(&self.axes[0]), v.dot(&self.axes[1]), v.dot(&self.axes[2]))
    }

    pub fn from_local(&self, h: f64, a: f64, b: f64) -> Point3<f64> {
        self.centroid + self.rotation * (h * self.axes[0] + a * self.axes[1] + b * self.axes[2])
    }

    pub fn surface_point(&self, a: f64, b: f64) -> Point3<f64> {
        self.from_local(self.local_height(a, b), a, b)
    }

    /// Height of `p` above the surface along the tilted normal, or `None`
    /// outside the plate outline.
    pub fn height_above(&self, p: &Point3<f64>) -> Option<f64> {
        let l = self.to_local(p);
        self.contains(l.y, l.z).then(|| l.x - self.local_height(l.y, l.z))
    }

    /// World depth `x` of the surface seen along the reference normal at
    /// world `(y, z)`, or `None` off the plate.
    pub fn depth_at(&self, y: f64, z: f64) -> Option<f64> {
        let n = self.reference.normal().into_inner();
        let base = Point3::new(0.0, y, z) - n * n.dot(&Point3::new(0.0, y, z).coords);
        let start = self.centroid.coords.dot(&n);
        let g = |t: f64| {
            let l = self.to_local(&(base + n * t));
            l.x - self.local_height(l.y, l.z)
        };
        let span = self.spec.wave_amplitude + 0.5 * self.spec.length.max(self.spec.width);
        let (mut lo, mut hi) = (start - span - 1e-3, start + span + 1e-3);
        if g(lo) > 0.0 || g(hi) < 0.0 {
            return None;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        let l = self.to_local(&(base + n * t));
        self.contains(l.y, l.z).then_some(t)
    }

    /// Corners of the box enclosing the plate, in the frame-0 world.
    pub fn bounding_corners(&self) -> [Point3<f64>; 8] {
        let (a, b, h) = (self.spec.length / 2.0, self.spec.width / 2.0, self.spec.wave_amplitude + 1e-4);
        std::array::from_fn(|k| {
            let s = |bit: usize| if k & bit == 0 { -1.0 } else { 1.0 };
            self.from_local(s(1) * h, s(2) * a, s(4) * b)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn truth(class: ProfileClass, tilt: Tilt) -> GroundTruth {
        let spec = SurfaceSpec {
            tilt,
            ..SurfaceSpec::new(class, 0.8, 0.4)
        };
        generate_surface(&spec, &VerticalReference::default()).unwrap()
    }

    #[test]
    fn smooth_is_flat_before_tilt() {
        let t = truth(ProfileClass::Smooth, Tilt::default());
        for (a, b) in [(0.0, 0.0), (0.3, -0.1), (-0.39, 0.19)] {
            assert_eq!(t.local_height(a, b), 0.0);
            assert!(t.depth_at(a, b).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn wave_range_is_amplitude() {
        let t = truth(ProfileClass::HorizontalWavy, Tilt::default());
        let hs: Vec<f64> = (0..=4000).map(|k| t.local_height(0.0, -0.2 + 0.4 * k as f64 / 4000.0)).collect();
        let max = hs.iter().cloned().fold(f64::MIN, f64::max);
        let min = hs.iter().cloned().fold(f64::MAX, f64::min);
        assert!((max - 0.005).abs() < 1e-9 && (min + 0.005).abs() < 1e-9);
        assert!(hs.iter().all(|h| h.abs() <= 0.005));
        let v = truth(ProfileClass::VerticalWavy, Tilt::default());
        assert_eq!(v.local_height(0.3, 0.0), t.local_height(0.0, 0.3));
    }

    #[test]
    fn sinusoid_variance_over_whole_periods() {
        let t = truth(ProfileClass::HorizontalWavy, Tilt::default());
        let n = 32_000;
        let hs: Vec<f64> = (0..n).map(|k| t.local_height(0.0, 0.32 * k as f64 / n as f64)).collect();
        let mean = hs.iter().sum::<f64>() / n as f64;
        let var = hs.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((var - 0.005f64.powi(2) / 2.0).abs() < 1e-10);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = SurfaceSpec::new(ProfileClass::Smooth, 0.5, 0.3);
        s.wave_period = 0.0;
        assert!(s.validate().is_err());
        assert!(SurfaceSpec::new(ProfileClass::Other("x".into()), 0.5, 0.3).validate().is_err());
        assert!(SurfaceSpec::new(ProfileClass::Smooth, -0.5, 0.3).validate().is_err());
    }

    proptest! {
        #[test]
        fn surface_points_have_zero_height(
            pitch in -8.0f64..8.0, yaw in -8.0f64..8.0,
            a in -0.4f64..0.4, b in -0.2f64..0.2, vertical in any::<bool>(),
        ) {
            let class = if vertical { ProfileClass::VerticalWavy } else { ProfileClass::HorizontalWavy };
            let t = truth(class, Tilt::from_degrees(pitch, yaw)).with_centroid(Point3::new(0.01, 0.02, -0.3));
            let p = t.surface_point(a, b);
            prop_assert!(t.height_above(&p).unwrap().abs() < 1e-12);
            let d = t.depth_at(p.y, p.z);
            prop_assert!(d.is_some_and(|d| (d - p.x).abs() < 1e-9), "{:?} {}", d, p.x);
        }

        #[test]
        fn tilt_rotates_normal(pitch in -8.0f64..8.0, yaw in -8.0f64..8.0) {
            let tilt = Tilt::from_degrees(pitch, yaw);
            let t = truth(ProfileClass::Smooth, tilt);
            prop_assert!((t.normal() - tilt.normal(&VerticalReference::default())).norm() < 1e-12);
        }
    }
}

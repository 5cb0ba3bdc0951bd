use nalgebra::{Isometry3, Matrix3, Point3, Rotation3, Translation3, UnitQuaternion, Vector3};

use super::{PlanError, SprayTemplate, StrokeDirection};
use crate::features::PlaneFit;
use crate::pose::VerticalReference;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Point3<f64>,
    pub orientation: UnitQuaternion<f64>,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SprayPlan {
    pub template: SprayTemplate,
    /// Plate `(length, width)` the plan was sized for.
    pub dimensions: [f64; 2],
    pub strokes: usize,
    pub poses: Vec<Pose>,
    pub total_path_length: f64,
    /// Maps the ideal workpiece frame to the measured pose.
    pub workpiece_frame: Isometry3<f64>,
    pub reference: VerticalReference,
}

/// Number of strokes needed to cover `extent` with at most `spacing` between
/// neighbouring strokes.
pub fn stroke_count(extent: f64, spacing: f64) -> usize {
    (extent / spacing - 1e-9).ceil().max(0.0) as usize + 1
}

/// Lays out a boustrophedon raster over the plate inflated by the margin.
pub fn instantiate(
    template: &SprayTemplate,
    length: f64,
    width: f64,
    reference: &VerticalReference,
) -> Result<SprayPlan, PlanError> {
    template.validate()?;
    if !(length > 0.0 && width > 0.0 && length.is_finite() && width.is_finite()) {
        return Err(PlanError::InvalidDimensions { length, width });
    }
    let m = template.margin;
    let (along, cross) = match template.stroke_direction {
        StrokeDirection::Vertical => (length + 2.0 * m, width + 2.0 * m),
        StrokeDirection::Horizontal => (width + 2.0 * m, length + 2.0 * m),
    };
    let strokes = stroke_count(cross, template.stroke_spacing);
    let pitch = cross / (strokes - 1) as f64;

    let mut corners = Vec::with_capacity(2 * strokes);
    for k in 0..strokes {
        let c = -cross / 2.0 + k as f64 * pitch;
        let (start, end) = if k % 2 == 0 { (-along / 2.0, along / 2.0) } else { (along / 2.0, -along / 2.0) };
        corners.push((start, c));
        corners.push((end, c));
    }

    let normal = reference.normal().into_inner();
    let up = reference.up().into_inner();
    let side = normal.cross(&up);
    let (along_axis, cross_axis) = match template.stroke_direction {
        StrokeDirection::Vertical => (up, side),
        StrokeDirection::Horizontal => (side, up),
    };
    let orientation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[
        normal, up, side,
    ])));
    let to_world = |(a, c): (f64, f64)| Point3::from(a * along_axis + c * cross_axis + template.standoff * normal);

    let mut poses = vec![Pose {
        position: to_world(corners[0]),
        orientation,
        speed: template.travel_speed,
    }];
    for w in corners.windows(2) {
        let (p0, p1) = (to_world(w[0]), to_world(w[1]));
        let n = ((p1 - p0).norm() / template.pose_step).ceil().max(1.0) as usize;
        for s in 1..=n {
            let t = s as f64 / n as f64;
            poses.push(Pose {
                position: p0 + (p1 - p0) * t,
                orientation,
                speed: template.travel_speed,
            });
        }
    }
    Ok(SprayPlan {
        template: template.clone(),
        dimensions: [length, width],
        strokes,
        total_path_length: path_length(&poses),
        poses,
        workpiece_frame: Isometry3::identity(),
        reference: *reference,
    })
}

fn path_length(poses: &[Pose]) -> f64 {
    poses.windows(2).map(|w| (w[1].position - w[0].position).norm()).sum()
}

impl SprayPlan {
    /// Applies a rigid motion to every pose and to the workpiece frame.
    pub fn transformed(&self, motion: &Isometry3<f64>) -> SprayPlan {
        let poses: Vec<Pose> = self
            .poses
            .iter()
            .map(|p| Pose {
                position: motion * p.position,
                orientation: motion.rotation * p.orientation,
                speed: p.speed,
            })
            .collect();
        SprayPlan {
            total_path_length: path_length(&poses),
            poses,
            workpiece_frame: motion * self.workpiece_frame,
            ..self.clone()
        }
    }

    /// Moves the plate center to `center`.
    pub fn placed_at(&self, center: &Point3<f64>) -> SprayPlan {
        self.transformed(&Isometry3::from_parts(Translation3::from(center.coords), UnitQuaternion::identity()))
    }

    /// Surface normal the plan currently faces.
    pub fn surface_normal(&self) -> Vector3<f64> {
        self.workpiece_frame.rotation * self.reference.normal().into_inner()
    }
}

/// Rotates the plan about the fitted centroid by the smallest rotation taking
/// the reference normal to the fitted normal.
pub fn apply_slope_correction(plan: &SprayPlan, fit: &PlaneFit, max_residual: f64) -> Result<SprayPlan, PlanError> {
    if !(fit.rms_residual <= max_residual) {
        return Err(PlanError::ImplausibleFit {
            rms: fit.rms_residual,
            limit: max_residual,
        });
    }
    let r = plan.reference.normal().into_inner();
    let rotation = UnitQuaternion::rotation_between(&r, &fit.normal).unwrap_or_else(UnitQuaternion::identity);
    let c = fit.centroid.coords;
    let motion = Isometry3::from_parts(Translation3::from(c - rotation * c), rotation);
    Ok(plan.transformed(&motion))
}

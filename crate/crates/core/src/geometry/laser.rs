use nalgebra::{DMatrix, Point3, Unit, Vector3};

use super::camera::Ray;
use super::GeometryError;

/// The plane swept by the line laser: `w_n . P = d` with `d = w_n . P_L0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserPlane {
    anchor: Point3<f64>,
    normal: Unit<Vector3<f64>>,
    offset: f64,
}

impl LaserPlane {
    /// Normalizes `normal`; fails on a zero or non-finite vector.
    pub fn new(anchor: Point3<f64>, normal: Vector3<f64>) -> Result<Self, GeometryError> {
        let n = normal.norm();
        if !(n.is_finite() && n > 0.0) || anchor.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::InvalidDirection);
        }
        let normal = Unit::new_unchecked(normal / n);
        Ok(Self {
            anchor,
            normal,
            offset: normal.dot(&anchor.coords),
        })
    }

    pub fn anchor(&self) -> Point3<f64> {
        self.anchor
    }

    pub fn normal(&self) -> Unit<Vector3<f64>> {
        self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed distance, positive on the side the normal points to.
    pub fn signed_distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }
}

/// Result of a ray/plane intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intersection {
    pub point: Point3<f64>,
    pub t: f64,
}

/// Closed-form ray/plane triangulation.
pub fn intersect_ray_plane(ray: &Ray, plane: &LaserPlane) -> Result<Intersection, GeometryError> {
    let denom = plane.normal.dot(&ray.direction);
    if denom.abs() <= 1e-9 {
        return Err(GeometryError::ParallelRay);
    }
    let t = (plane.offset - plane.normal.dot(&ray.origin.coords)) / denom;
    if t < 0.0 {
        return Err(GeometryError::BehindCamera { t });
    }
    Ok(Intersection {
        point: ray.at(t),
        t,
    })
}

/// Least-squares plane through measured laser points.
///
/// The normal is the right singular vector of the centered point matrix with
/// the smallest singular value, oriented so that `normal . facing >= 0`.
pub fn calibrate_laser_plane(
    points: &[Point3<f64>],
    facing: &Vector3<f64>,
) -> Result<LaserPlane, GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::TooFewPoints { got: points.len() });
    }
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / n;
    let centered = DMatrix::from_fn(points.len(), 3, |r, c| points[r][c] - centroid[c]);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.ok_or(GeometryError::CollinearPoints)?;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let (largest, middle) = (svd.singular_values[order[0]], svd.singular_values[order[1]]);
    if !(largest > 0.0) || middle / largest <= 1e-9 {
        return Err(GeometryError::CollinearPoints);
    }
    let row = v_t.row(order[2]);
    let mut normal = Vector3::new(row[0], row[1], row[2]);
    if normal.dot(facing) < 0.0 {
        normal = -normal;
    }
    LaserPlane::new(Point3::from(centroid), normal)
}

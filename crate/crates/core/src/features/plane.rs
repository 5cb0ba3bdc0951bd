use nalgebra::{DMatrix, Point3, Vector3};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::border::Component;
use super::FeatureError;
use crate::pose::{Tilt, VerticalReference};
use crate::reconstruction::HeightMatrix;

/// Default number of cells sampled for the plane fit.
pub const PLANE_SAMPLE_SIZE: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierFilter {
    pub kept: Vec<Point3<f64>>,
    pub kept_fraction: f64,
}

/// Drops points whose depth `x` is more than `multiplier` scaled MADs from
/// the median depth. The MAD is scaled by 1.4826 to estimate a Gaussian sigma.
pub fn remove_outliers(points: &[Point3<f64>], multiplier: f64) -> Result<OutlierFilter, FeatureError> {
    if points.len() < 10 {
        return Err(FeatureError::TooFewPoints { got: points.len() });
    }
    let mut depths: Vec<f64> = points.iter().map(|p| p.x).collect();
    let median = median_in_place(&mut depths);
    let mut deviations: Vec<f64> = points.iter().map(|p| (p.x - median).abs()).collect();
    let mad = 1.4826 * median_in_place(&mut deviations);
    let limit = multiplier * mad;
    let kept: Vec<_> = points.iter().copied().filter(|p| (p.x - median).abs() <= limit).collect();
    Ok(OutlierFilter {
        kept_fraction: kept.len() as f64 / points.len() as f64,
        kept,
    })
}

fn median_in_place(v: &mut [f64]) -> f64 {
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    pub centroid: Point3<f64>,
    /// Unit normal, oriented toward the reference normal.
    pub normal: Vector3<f64>,
    pub rms_residual: f64,
    pub tilt: Tilt,
}

impl PlaneFit {
    /// Depth `x` of the plane at `(y, z)`.
    pub fn depth_at(&self, y: f64, z: f64) -> f64 {
        let c = self.centroid;
        c.x - (self.normal.y * (y - c.y) + self.normal.z * (z - c.z)) / self.normal.x
    }
}

/// Total least-squares plane by SVD of the centered point matrix.
pub fn fit_plane_svd(points: &[Point3<f64>], reference: &VerticalReference) -> Result<PlaneFit, FeatureError> {
    if points.len() < 3 {
        return Err(FeatureError::TooFewPoints { got: points.len() });
    }
    let n = points.len();
    let centroid = points.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n as f64;
    let centered = DMatrix::from_fn(n, 3, |r, c| points[r][c] - centroid[c]);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.ok_or(FeatureError::DegenerateGeometry)?;
    let s = &svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    if !(s[order[0]] > 0.0) || s[order[1]] / s[order[0]] <= 1e-9 {
        return Err(FeatureError::DegenerateGeometry);
    }
    let row = v_t.row(order[2]);
    let mut normal = Vector3::new(row[0], row[1], row[2]).normalize();
    if normal.dot(&reference.normal()) < 0.0 {
        normal = -normal;
    }
    Ok(PlaneFit {
        centroid: Point3::from(centroid),
        normal,
        rms_residual: s[order[2]] / (n as f64).sqrt(),
        tilt: Tilt::from_normal(&normal, reference),
    })
}

/// Up to `count` surface points drawn uniformly without replacement from
/// the component, with a fixed seed so repeated runs agree.
pub fn sample_surface_points(matrix: &HeightMatrix, component: &Component, count: usize, seed: u64) -> Vec<Point3<f64>> {
    let cells: Vec<(usize, usize)> = component.cells().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks: Vec<usize> = if cells.len() <= count {
        (0..cells.len()).collect()
    } else {
        sample(&mut rng, cells.len(), count).into_vec()
    };
    picks.sort_unstable();
    picks
        .into_iter()
        .filter_map(|k| {
            let (i, j) = cells[k];
            matrix.depth(i, j).map(|d| matrix.world(i, j, d))
        })
        .collect()
}

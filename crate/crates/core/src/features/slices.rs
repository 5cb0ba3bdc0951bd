use serde::{Deserialize, Serialize};

use super::border::{largest_component, Component};
use super::plane::PlaneFit;
use super::FeatureError;
use crate::reconstruction::HeightMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceDirection {
    /// Bands of rows (constant `y` range), each spanning the full width.
    Horizontal,
    /// Bands of columns (constant `z` range), each spanning the full height.
    Vertical,
}

/// Mean per-slice depth variance over the largest component eroded by two
/// cells, in mm^2.
pub fn slice_variance(matrix: &HeightMatrix, direction: SliceDirection, num_slices: usize) -> Result<f64, FeatureError> {
    let region = largest_component(matrix)?.eroded(2);
    slice_variance_in(matrix, &region, direction, num_slices, None)
}

/// Mean per-slice population variance of depth over `region`. With `level`,
/// depths are measured from the fitted plane instead of the `x = 0` plane.
pub fn slice_variance_in(
    matrix: &HeightMatrix,
    region: &Component,
    direction: SliceDirection,
    num_slices: usize,
    level: Option<&PlaneFit>,
) -> Result<f64, FeatureError> {
    let num_slices = num_slices.max(1);
    let (mut lo, mut hi) = (usize::MAX, 0usize);
    for (i, j) in region.cells() {
        let k = match direction {
            SliceDirection::Horizontal => i,
            SliceDirection::Vertical => j,
        };
        lo = lo.min(k);
        hi = hi.max(k);
    }
    if lo > hi {
        return Err(FeatureError::NoValidCells);
    }
    let span = hi - lo + 1;
    // Welford accumulators per slice: (count, mean, sum of squared deviations).
    let mut acc = vec![(0usize, 0.0f64, 0.0f64); num_slices];
    for (i, j) in region.cells() {
        let Some(d) = matrix.depth(i, j) else { continue };
        let d = match level {
            Some(fit) => {
                let p = matrix.world(i, j, d);
                d - fit.depth_at(p.y, p.z)
            }
            None => d,
        };
        let k = match direction {
            SliceDirection::Horizontal => i,
            SliceDirection::Vertical => j,
        };
        let slot = &mut acc[(k - lo) * num_slices / span];
        slot.0 += 1;
        let delta = d - slot.1;
        slot.1 += delta / slot.0 as f64;
        slot.2 += delta * (d - slot.1);
    }
    let variances: Vec<f64> = acc.iter().filter(|s| s.0 > 0).map(|s| s.2 / s.0 as f64).collect();
    if variances.is_empty() {
        return Err(FeatureError::NoValidCells);
    }
    Ok(variances.iter().sum::<f64>() / variances.len() as f64 * 1e6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruction::CellState;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn filled(rows: usize, cols: usize, depth: impl Fn(usize, usize) -> f64) -> HeightMatrix {
        let mut m = HeightMatrix::new(rows, cols, 0.001, 0.0, 0.0).unwrap();
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, depth(i, j), CellState::Measured);
            }
        }
        m
    }

    #[test]
    fn constant_depth_has_zero_variance() {
        let m = filled(40, 30, |_, _| 0.123);
        for dir in [SliceDirection::Horizontal, SliceDirection::Vertical] {
            for n in [1, 7, 20] {
                assert!(slice_variance(&m, dir, n).unwrap().abs() < 1e-18);
            }
        }
    }

    #[test]
    fn sinusoid_across_slices_tends_to_half_amplitude_squared() {
        let a = 0.005;
        // 80-cell wave period, 5 whole periods inside the eroded region.
        let m = filled(44, 404, |_, j| a * (2.0 * PI * (j as f64 - 2.0) / 80.0).sin());
        let v = slice_variance(&m, SliceDirection::Horizontal, 4).unwrap();
        // Dense-sum oracle over one period of samples.
        let dense = (0..80).map(|k| (a * (2.0 * PI * k as f64 / 80.0).sin()).powi(2)).sum::<f64>() / 80.0 * 1e6;
        assert!((v - dense).abs() < 1e-9, "{v} vs {dense}");
        assert!((dense - a * a / 2.0 * 1e6).abs() < 1e-9);
        assert!(slice_variance(&m, SliceDirection::Vertical, 400).unwrap() < 1e-18);
    }

    #[test]
    fn leveling_removes_tilt() {
        let m = filled(30, 30, |i, j| 0.01 * i as f64 - 0.02 * j as f64);
        let region = largest_component(&m).unwrap().eroded(2);
        let fit = PlaneFit {
            centroid: m.world(0, 0, 0.0),
            normal: nalgebra::Vector3::new(1.0, -10.0, -20.0).normalize(),
            rms_residual: 0.0,
            tilt: Default::default(),
        };
        let raw = slice_variance_in(&m, &region, SliceDirection::Horizontal, 5, None).unwrap();
        let level = slice_variance_in(&m, &region, SliceDirection::Horizontal, 5, Some(&fit)).unwrap();
        assert!(raw > 1.0 && level < 1e-12, "{raw} {level}");
    }

    #[test]
    fn empty_region_errors() {
        let m = filled(3, 3, |_, _| 0.0);
        assert!(matches!(slice_variance(&m, SliceDirection::Vertical, 2), Err(FeatureError::NoValidCells)));
    }

    proptest! {
        #[test]
        fn offset_invariant_and_quadratic_scaling(
            seed_depths in proptest::collection::vec(-0.01f64..0.01, 20 * 16),
            offset in -1.0f64..1.0,
            scale in 0.1f64..10.0,
            slices in 1usize..12,
        ) {
            let base = filled(20, 16, |i, j| seed_depths[i * 16 + j]);
            let shifted = filled(20, 16, |i, j| seed_depths[i * 16 + j] + offset);
            let scaled = filled(20, 16, |i, j| seed_depths[i * 16 + j] * scale);
            for dir in [SliceDirection::Horizontal, SliceDirection::Vertical] {
                let v = slice_variance(&base, dir, slices).unwrap();
                prop_assert!(v >= 0.0);
                prop_assert!((slice_variance(&shifted, dir, slices).unwrap() - v).abs() <= 1e-9 * (1.0 + v));
                let s = slice_variance(&scaled, dir, slices).unwrap();
                prop_assert!((s - v * scale * scale).abs() <= 1e-9 * (1.0 + s));
            }
        }
    }
}

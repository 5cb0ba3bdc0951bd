use serde::{Deserialize, Serialize};

use super::border::BorderSet;
use super::plane::PlaneFit;
use crate::pose::VerticalReference;
use crate::reconstruction::HeightMatrix;

/// Measured size. `length >= width`; `vertical` and `horizontal` keep the
/// extents along `up` and across it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dimensions {
    pub length: f64,
    pub width: f64,
    pub vertical: f64,
    pub horizontal: f64,
}

impl Dimensions {
    pub fn from_extents(vertical: f64, horizontal: f64) -> Self {
        Self {
            length: vertical.max(horizontal),
            width: vertical.min(horizontal),
            vertical,
            horizontal,
        }
    }
}

/// Axis-aligned bounding box of the border cells, one full cell per index.
pub fn estimate_dimensions(border: &BorderSet, matrix: &HeightMatrix) -> Dimensions {
    let Some([[i0, i1], [j0, j1]]) = border.bounding_box() else {
        return Dimensions::from_extents(0.0, 0.0);
    };
    let s = matrix.cell_size();
    Dimensions::from_extents((i1 - i0 + 1) as f64 * s, (j1 - j0 + 1) as f64 * s)
}

/// Bounding box of the border measured along the fitted plane's in-plane
/// `up` and `side` axes, undoing the foreshortening of a tilted workpiece.
pub fn estimate_dimensions_on_plane(
    border: &BorderSet,
    matrix: &HeightMatrix,
    fit: &PlaneFit,
    reference: &VerticalReference,
) -> Dimensions {
    let rotation = fit.tilt.rotation(reference);
    let up = rotation * reference.up().into_inner();
    let side = rotation * reference.side().into_inner();
    let mut ext = [[f64::INFINITY, f64::NEG_INFINITY]; 2];
    for &(i, j) in &border.cells {
        let Some(d) = matrix.depth(i, j) else { continue };
        let p = matrix.world(i, j, d) - fit.centroid;
        for (e, axis) in ext.iter_mut().zip([up, side]) {
            let v = p.dot(&axis);
            *e = [e[0].min(v), e[1].max(v)];
        }
    }
    if ext[0][0] > ext[0][1] {
        return Dimensions::from_extents(0.0, 0.0);
    }
    let s = matrix.cell_size();
    Dimensions::from_extents(ext[0][1] - ext[0][0] + s, ext[1][1] - ext[1][0] + s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{extract_border, fit_plane_svd, largest_component, trace_border};
    use crate::reconstruction::CellState;
    use proptest::prelude::*;

    fn rect(rows: usize, cols: usize, pad: usize, depth: impl Fn(usize, usize) -> f64) -> HeightMatrix {
        let mut m = HeightMatrix::new(rows + 2 * pad, cols + 2 * pad, 0.001, 0.0, 0.0).unwrap();
        for i in pad..pad + rows {
            for j in pad..pad + cols {
                m.set(i, j, depth(i, j), CellState::Measured);
            }
        }
        m
    }

    #[test]
    fn exact_rectangle() {
        let m = rect(800, 400, 3, |_, _| 0.0);
        let d = estimate_dimensions(&extract_border(&m).unwrap(), &m);
        assert!((d.length - 0.8).abs() < 1e-12 && (d.width - 0.4).abs() < 1e-12);
        assert!((d.vertical - 0.8).abs() < 1e-12);
    }

    #[test]
    fn width_longer_than_height_is_reordered() {
        let m = rect(20, 50, 1, |_, _| 0.0);
        let d = estimate_dimensions(&extract_border(&m).unwrap(), &m);
        assert!((d.length - 0.05).abs() < 1e-12 && (d.horizontal - 0.05).abs() < 1e-12);
    }

    #[test]
    fn on_plane_undoes_foreshortening() {
        let reference = VerticalReference::default();
        let pitch = 5f64.to_radians();
        // Rows sample y; a plate of true length L spans L cos(pitch) in y.
        let rows = (0.3 * pitch.cos() / 0.001).round() as usize;
        let m = rect(rows, 200, 2, |i, _| i as f64 * 0.001 * pitch.tan());
        let component = largest_component(&m).unwrap();
        let border = trace_border(&component);
        let pts: Vec<_> = component.cells().map(|(i, j)| m.world(i, j, m.depth(i, j).unwrap())).collect();
        let fit = fit_plane_svd(&pts, &reference).unwrap();
        assert!((fit.tilt.pitch + pitch).abs() < 1e-9, "{:?}", fit.tilt);
        let flat = estimate_dimensions(&border, &m);
        let on_plane = estimate_dimensions_on_plane(&border, &m, &fit, &reference);
        assert!((flat.length - 0.3).abs() > 0.001);
        assert!((on_plane.length - 0.3).abs() < 0.0011, "{}", on_plane.length);
        assert!((on_plane.width - 0.2).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn superset_border_never_shrinks(
            cells in proptest::collection::vec((0usize..50, 0usize..50), 1..20),
            extra in proptest::collection::vec((0usize..50, 0usize..50), 0..10),
        ) {
            let m = HeightMatrix::new(50, 50, 0.001, 0.0, 0.0).unwrap();
            let a = BorderSet { perimeter_len: cells.len(), cells: cells.clone() };
            let mut all = cells.clone();
            all.extend(extra);
            let b = BorderSet { perimeter_len: all.len(), cells: all };
            let (da, db) = (estimate_dimensions(&a, &m), estimate_dimensions(&b, &m));
            prop_assert!(db.vertical >= da.vertical && db.horizontal >= da.horizontal);
        }
    }
}

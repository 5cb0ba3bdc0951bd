use std::io::{Read, Write};
use std::path::Path;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::{ConveyorModel, ReconstructionError, ScanExtent};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum CellState {
    #[default]
    Empty = 0,
    Measured = 1,
    Interpolated = 2,
}

impl CellState {
    pub fn is_valid(self) -> bool {
        self != CellState::Empty
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(Self::Empty),
            1 => Some(Self::Measured),
            2 => Some(Self::Interpolated),
            _ => None,
        }
    }
}

/// Direction along which [`HeightMatrix::fill_holes_along`] interpolates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillAxis {
    /// Fixed `i`, varying `j`.
    Rows,
    /// Fixed `j`, varying `i`.
    Columns,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccumulateStats {
    pub placed: usize,
    pub out_of_bounds: usize,
    /// Points that landed on an already measured cell.
    pub collisions: usize,
}

impl std::ops::AddAssign for AccumulateStats {
    fn add_assign(&mut self, o: Self) {
        self.placed += o.placed;
        self.out_of_bounds += o.out_of_bounds;
        self.collisions += o.collisions;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeightMatrix {
    rows: usize,
    cols: usize,
    cell_size: f64,
    y_min: f64,
    z_min: f64,
    depth: Vec<f64>,
    state: Vec<CellState>,
}

impl HeightMatrix {
    pub fn new(rows: usize, cols: usize, cell_size: f64, y_min: f64, z_min: f64) -> Result<Self, ReconstructionError> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(ReconstructionError::InvalidCellSize(cell_size));
        }
        Ok(Self {
            rows,
            cols,
            cell_size,
            y_min,
            z_min,
            depth: vec![0.0; rows * cols],
            state: vec![CellState::Empty; rows * cols],
        })
    }

    /// Smallest matrix covering `extent`. `z_min` is the largest `z`, since
    /// `j` grows toward negative `z`.
    pub fn covering(extent: &ScanExtent, cell_size: f64) -> Result<Self, ReconstructionError> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(ReconstructionError::InvalidCellSize(cell_size));
        }
        let rows = ((extent.y[1] - extent.y[0]) / cell_size).ceil() as usize + 1;
        let cols = ((extent.z[1] - extent.z[0]) / cell_size).ceil() as usize + 1;
        Self::new(rows, cols, cell_size, extent.y[0], extent.z[1])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn z_min(&self) -> f64 {
        self.z_min
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.cols + j
    }

    #[inline]
    pub fn state(&self, i: usize, j: usize) -> CellState {
        self.state[self.at(i, j)]
    }

    #[inline]
    pub fn is_valid(&self, i: usize, j: usize) -> bool {
        self.state(i, j).is_valid()
    }

    /// Depth of a valid cell.
    #[inline]
    pub fn depth(&self, i: usize, j: usize) -> Option<f64> {
        let k = self.at(i, j);
        self.state[k].is_valid().then(|| self.depth[k])
    }

    pub fn set(&mut self, i: usize, j: usize, depth: f64, state: CellState) {
        let k = self.at(i, j);
        self.depth[k] = if state.is_valid() { depth } else { 0.0 };
        self.state[k] = state;
    }

    pub fn clear(&mut self, i: usize, j: usize) {
        self.set(i, j, 0.0, CellState::Empty);
    }

    pub fn valid_count(&self) -> usize {
        self.state.iter().filter(|s| s.is_valid()).count()
    }

    pub fn count(&self, state: CellState) -> usize {
        self.state.iter().filter(|&&s| s == state).count()
    }

    /// World point of cell `(i, j)` at the given depth.
    pub fn world(&self, i: usize, j: usize, depth: f64) -> Point3<f64> {
        Point3::new(
            depth,
            self.y_min + self.cell_size * i as f64,
            self.z_min - self.cell_size * j as f64,
        )
    }

    /// Nearest cell for a workpiece-frame point, `None` outside the matrix.
    pub fn cell_of(&self, p: &Point3<f64>) -> Option<(usize, usize)> {
        let i = ((p.y - self.y_min) / self.cell_size).round();
        let j = ((self.z_min - p.z) / self.cell_size).round();
        let inside = |v: f64, n: usize| v >= 0.0 && v < n as f64;
        (inside(i, self.rows) && inside(j, self.cols)).then_some((i as usize, j as usize))
    }

    /// Adds the points triangulated in frame `frame_index`. Where several
    /// points share a cell the one nearest the camera (largest `x`) wins.
    pub fn accumulate(&mut self, points: &[Point3<f64>], frame_index: u64, conveyor: &ConveyorModel) -> AccumulateStats {
        let shift = conveyor.offset(frame_index);
        let mut stats = AccumulateStats::default();
        for p in points {
            let q = p - shift;
            let Some((i, j)) = self.cell_of(&q) else {
                stats.out_of_bounds += 1;
                continue;
            };
            let k = self.at(i, j);
            stats.placed += 1;
            if self.state[k] == CellState::Measured {
                stats.collisions += 1;
                if q.x <= self.depth[k] {
                    continue;
                }
            }
            self.depth[k] = q.x;
            self.state[k] = CellState::Measured;
        }
        stats
    }

    /// One world point per valid cell, row-major.
    pub fn to_point_cloud(&self) -> Vec<Point3<f64>> {
        let mut out = Vec::with_capacity(self.valid_count());
        for i in 0..self.rows {
            for j in 0..self.cols {
                if let Some(d) = self.depth(i, j) {
                    out.push(self.world(i, j, d));
                }
            }
        }
        out
    }

    /// Linearly interpolates empty runs of at most `max_gap` cells along rows.
    pub fn fill_holes(&self, max_gap: usize) -> Self {
        self.fill_holes_along(FillAxis::Rows, max_gap)
    }

    pub fn fill_holes_along(&self, axis: FillAxis, max_gap: usize) -> Self {
        let mut out = self.clone();
        if max_gap == 0 {
            return out;
        }
        let (lines, len) = match axis {
            FillAxis::Rows => (self.rows, self.cols),
            FillAxis::Columns => (self.cols, self.rows),
        };
        let cell = |line: usize, k: usize| match axis {
            FillAxis::Rows => (line, k),
            FillAxis::Columns => (k, line),
        };
        for line in 0..lines {
            let mut last_valid: Option<usize> = None;
            for k in 0..len {
                let (i, j) = cell(line, k);
                if !self.is_valid(i, j) {
                    continue;
                }
                if let Some(prev) = last_valid {
                    let gap = k - prev - 1;
                    if gap > 0 && gap <= max_gap {
                        let (pi, pj) = cell(line, prev);
                        let a = self.depth[self.at(pi, pj)];
                        let b = self.depth[self.at(i, j)];
                        for m in 1..=gap {
                            let t = m as f64 / (gap + 1) as f64;
                            let (fi, fj) = cell(line, prev + m);
                            out.set(fi, fj, a + (b - a) * t, CellState::Interpolated);
                        }
                    }
                }
                last_valid = Some(k);
            }
        }
        out
    }

    /// Binary snapshot: little-endian header `rows: u64, cols: u64, S_c: f64,
    /// y_min: f64, z_min: f64`, then row-major depths (`f64`) and cell states
    /// (`u8`).
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<(), ReconstructionError> {
        w.write_all(&(self.rows as u64).to_le_bytes())?;
        w.write_all(&(self.cols as u64).to_le_bytes())?;
        for v in [self.cell_size, self.y_min, self.z_min] {
            w.write_all(&v.to_le_bytes())?;
        }
        for d in &self.depth {
            w.write_all(&d.to_le_bytes())?;
        }
        let states: Vec<u8> = self.state.iter().map(|&s| s as u8).collect();
        w.write_all(&states)?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self, ReconstructionError> {
        let mut b8 = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8], ReconstructionError> {
            r.read_exact(&mut b8)?;
            Ok(b8)
        };
        let rows = u64::from_le_bytes(next(&mut r)?) as usize;
        let cols = u64::from_le_bytes(next(&mut r)?) as usize;
        let cell_size = f64::from_le_bytes(next(&mut r)?);
        let y_min = f64::from_le_bytes(next(&mut r)?);
        let z_min = f64::from_le_bytes(next(&mut r)?);
        let n = rows
            .checked_mul(cols)
            .filter(|&n| n <= 1 << 32)
            .ok_or_else(|| ReconstructionError::Snapshot(format!("implausible size {rows}x{cols}")))?;
        let mut m = Self::new(rows, cols, cell_size, y_min, z_min)?;
        let mut raw = vec![0u8; n * 8];
        r.read_exact(&mut raw)?;
        for (d, chunk) in m.depth.iter_mut().zip(raw.chunks_exact(8)) {
            *d = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        let mut states = vec![0u8; n];
        r.read_exact(&mut states)?;
        for (s, &b) in m.state.iter_mut().zip(&states) {
            *s = CellState::from_byte(b).ok_or_else(|| ReconstructionError::Snapshot(format!("bad cell state {b}")))?;
        }
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ReconstructionError> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_snapshot(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ReconstructionError> {
        Self::read_snapshot(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    fn conveyor() -> ConveyorModel {
        ConveyorModel::new(1.0, 30.0, Vector3::z()).unwrap()
    }

    fn grid() -> HeightMatrix {
        HeightMatrix::new(50, 60, 0.001, -0.02, 0.03).unwrap()
    }

    #[test]
    fn empty_points_leave_matrix_unchanged() {
        let mut m = grid();
        let before = m.clone();
        assert_eq!(m.accumulate(&[], 3, &conveyor()), AccumulateStats::default());
        assert_eq!(m, before);
    }

    #[test]
    fn origin_point_lands_in_first_cell() {
        let mut m = grid();
        m.accumulate(&[Point3::new(0.1, -0.02, 0.03)], 0, &conveyor());
        assert_eq!(m.depth(0, 0), Some(0.1));
        assert_eq!(m.valid_count(), 1);
    }

    #[test]
    fn frame_shift_moves_points_back() {
        let c = conveyor();
        let mut m = grid();
        let p = Point3::new(0.05, 0.0, 0.0) + c.offset(90);
        m.accumulate(&[p], 90, &c);
        assert_eq!(m.cell_of(&Point3::new(0.05, 0.0, 0.0)).and_then(|(i, j)| m.depth(i, j)), Some(0.05));
    }

    #[test]
    fn collisions_keep_nearest_to_camera() {
        let mut m = grid();
        let c = conveyor();
        let stats = m.accumulate(&[Point3::new(0.1, 0.0, 0.0), Point3::new(0.3, 0.0, 0.0), Point3::new(0.2, 0.0, 0.0)], 0, &c);
        assert_eq!(stats.collisions, 2);
        assert_eq!(m.depth(20, 30), Some(0.3));
    }

    #[test]
    fn out_of_bounds_are_tallied() {
        let mut m = grid();
        let stats = m.accumulate(&[Point3::new(0.0, 5.0, 0.0), Point3::new(0.0, 0.0, 0.0)], 0, &conveyor());
        assert_eq!((stats.placed, stats.out_of_bounds), (1, 1));
    }

    #[test]
    fn fill_interpolates_short_gaps_only() {
        let mut m = HeightMatrix::new(2, 8, 0.001, 0.0, 0.0).unwrap();
        m.set(0, 0, 0.10, CellState::Measured);
        m.set(0, 3, 0.13, CellState::Measured);
        m.set(1, 0, 0.10, CellState::Measured);
        m.set(1, 7, 0.10, CellState::Measured);
        assert_eq!(m.fill_holes(0), m);
        let f = m.fill_holes(2);
        assert!((f.depth(0, 1).unwrap() - 0.11).abs() < 1e-15);
        assert!((f.depth(0, 2).unwrap() - 0.12).abs() < 1e-15);
        assert_eq!(f.state(0, 1), CellState::Interpolated);
        assert!(!f.is_valid(1, 3));
        assert!(!f.is_valid(0, 5));
    }

    #[test]
    fn fill_along_columns() {
        let mut m = HeightMatrix::new(4, 1, 0.001, 0.0, 0.0).unwrap();
        m.set(0, 0, 1.0, CellState::Measured);
        m.set(3, 0, 4.0, CellState::Measured);
        let f = m.fill_holes_along(FillAxis::Columns, 2);
        assert_eq!(f.depth(1, 0), Some(2.0));
        assert_eq!(m.fill_holes(5), m);
    }

    #[test]
    fn snapshot_round_trip() {
        let mut m = grid();
        m.set(3, 4, 0.25, CellState::Measured);
        m.set(3, 5, -0.5, CellState::Interpolated);
        let mut buf = Vec::new();
        m.write_snapshot(&mut buf).unwrap();
        assert_eq!(buf.len(), 40 + 50 * 60 * 9);
        assert_eq!(&buf[..8], &50u64.to_le_bytes());
        assert_eq!(HeightMatrix::read_snapshot(&buf[..]).unwrap(), m);
        assert!(HeightMatrix::read_snapshot(&buf[..100]).is_err());
    }

    #[test]
    fn all_empty_cloud() {
        assert!(grid().to_point_cloud().is_empty());
    }

    proptest! {
        #[test]
        fn eq8_round_trip(
            pts in proptest::collection::vec((-0.5f64..0.5, -0.0199f64..0.0285, -0.0285f64..0.0299), 1..40),
            frame in 0u64..500,
        ) {
            let c = conveyor();
            let mut m = grid();
            let points: Vec<_> = pts.iter().map(|&(x, y, z)| Point3::new(x, y, z) + c.offset(frame)).collect();
            let stats = m.accumulate(&points, frame, &c);
            prop_assert_eq!(stats.out_of_bounds, 0);
            let cloud = m.to_point_cloud();
            let half = m.cell_size() / 2.0 + 1e-12;
            for &(x, y, z) in &pts {
                let (i, j) = m.cell_of(&Point3::new(x, y, z)).unwrap();
                let q = m.world(i, j, m.depth(i, j).unwrap());
                prop_assert!(cloud.contains(&q));
                prop_assert!((q.y - y).abs() <= half && (q.z - z).abs() <= half);
                prop_assert!(q.x >= x);
            }
        }

        #[test]
        fn distinct_cells_are_order_free(
            cells in proptest::collection::btree_set((0usize..50, 0usize..60), 1..30),
            depth in -0.1f64..0.1,
            rotate in 0usize..30,
        ) {
            let c = conveyor();
            let m0 = grid();
            let mut pts: Vec<_> = cells.iter().enumerate()
                .map(|(k, &(i, j))| m0.world(i, j, depth + k as f64 * 1e-3))
                .collect();
            let mut a = m0.clone();
            a.accumulate(&pts, 0, &c);
            let r = rotate % pts.len();
            pts.rotate_left(r);
            pts.reverse();
            let mut b = m0.clone();
            b.accumulate(&pts, 0, &c);
            prop_assert_eq!(&a, &b);
            prop_assert!(a.fill_holes(3).valid_count() >= a.valid_count());
        }
    }
}

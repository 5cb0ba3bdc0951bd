use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::reconstruction::HeightMatrix;

/// Cells of the largest 8-connected valid region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    rows: usize,
    cols: usize,
    mask: Vec<bool>,
    size: usize,
}

impl Component {
    #[inline]
    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.rows && j < self.cols && self.mask[i * self.cols + j]
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols;
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(move |(k, _)| (k / cols, k % cols))
    }

    /// Cells whose whole `(2r+1)^2` neighborhood lies in the component.
    pub fn eroded(&self, r: usize) -> Component {
        // Separable erosion: run lengths along rows, then along columns.
        let (rows, cols) = (self.rows, self.cols);
        let erode_line = |get: &dyn Fn(usize) -> bool, n: usize| -> Vec<bool> {
            let mut out = vec![false; n];
            let mut run_start = 0;
            for k in 0..=n {
                if k == n || !get(k) {
                    let end = k;
                    if end > run_start + 2 * r {
                        for o in out.iter_mut().take(end - r).skip(run_start + r) {
                            *o = true;
                        }
                    }
                    run_start = k + 1;
                }
            }
            out
        };
        let mut horiz = vec![false; rows * cols];
        for i in 0..rows {
            let line = erode_line(&|j| self.mask[i * cols + j], cols);
            horiz[i * cols..(i + 1) * cols].copy_from_slice(&line);
        }
        let mut mask = vec![false; rows * cols];
        for j in 0..cols {
            let line = erode_line(&|i| horiz[i * cols + j], rows);
            for (i, v) in line.into_iter().enumerate() {
                mask[i * cols + j] = v;
            }
        }
        let size = mask.iter().filter(|&&m| m).count();
        Component { rows, cols, mask, size }
    }
}

/// Largest 8-connected component of valid cells. Ties go to the component
/// reached first in row-major order.
pub fn largest_component(matrix: &HeightMatrix) -> Result<Component, FeatureError> {
    let (rows, cols) = (matrix.rows(), matrix.cols());
    let mut label = vec![0u32; rows * cols];
    let mut queue = VecDeque::new();
    let (mut best_label, mut best_size, mut next) = (0u32, 0usize, 0u32);
    for start in 0..rows * cols {
        if label[start] != 0 || !matrix.is_valid(start / cols, start % cols) {
            continue;
        }
        next += 1;
        label[start] = next;
        queue.push_back(start);
        let mut size = 0;
        while let Some(k) = queue.pop_front() {
            size += 1;
            let (i, j) = ((k / cols) as isize, (k % cols) as isize);
            for (di, dj) in NEIGHBORS {
                let (ni, nj) = (i + di, j + dj);
                if ni < 0 || nj < 0 || ni >= rows as isize || nj >= cols as isize {
                    continue;
                }
                let nk = ni as usize * cols + nj as usize;
                if label[nk] == 0 && matrix.is_valid(ni as usize, nj as usize) {
                    label[nk] = next;
                    queue.push_back(nk);
                }
            }
        }
        if size > best_size {
            best_size = size;
            best_label = next;
        }
    }
    if best_size == 0 {
        return Err(FeatureError::EmptyMatrix);
    }
    Ok(Component {
        rows,
        cols,
        mask: label.iter().map(|&l| l == best_label).collect(),
        size: best_size,
    })
}

/// Clockwise (on screen, `i` downward) starting from the west neighbor.
const NEIGHBORS: [(isize, isize); 8] = [(0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1)];

/// Closed boundary traversal of the largest valid component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BorderSet {
    /// Boundary cells `(i, j)` in clockwise traversal order. Cells on
    /// one-cell-wide necks appear once per visit.
    pub cells: Vec<(usize, usize)>,
    pub perimeter_len: usize,
}

impl BorderSet {
    /// `[[i_min, i_max], [j_min, j_max]]`.
    pub fn bounding_box(&self) -> Option<[[usize; 2]; 2]> {
        let mut it = self.cells.iter();
        let &(i0, j0) = it.next()?;
        Some(it.fold([[i0, i0], [j0, j0]], |[ri, rj], &(i, j)| {
            [[ri[0].min(i), ri[1].max(i)], [rj[0].min(j), rj[1].max(j)]]
        }))
    }
}

pub fn extract_border(matrix: &HeightMatrix) -> Result<BorderSet, FeatureError> {
    Ok(trace_border(&largest_component(matrix)?))
}

/// Moore-neighbor tracing with Jacob's stopping criterion: stop when the
/// start cell is re-entered from the same direction it was first left.
pub fn trace_border(component: &Component) -> BorderSet {
    let start = component.cells().next().expect("component is non-empty");
    let inside = |i: isize, j: isize| i >= 0 && j >= 0 && component.contains(i as usize, j as usize);
    let (si, sj) = (start.0 as isize, start.1 as isize);
    let mut cells = vec![start];
    // The raster-order first cell always has its west neighbor outside.
    let (mut pi, mut pj) = (si, sj);
    let mut back = 0usize;
    let mut first_move: Option<usize> = None;
    loop {
        let found = (0..8).map(|s| (back + s) % 8).find(|&d| {
            let (di, dj) = NEIGHBORS[d];
            inside(pi + di, pj + dj)
        });
        let Some(d) = found else {
            break; // isolated cell
        };
        if (pi, pj) == (si, sj) {
            match first_move {
                None => first_move = Some(d),
                Some(m) if m == d => {
                    cells.pop();
                    break;
                }
                _ => {}
            }
        }
        let (di, dj) = NEIGHBORS[d];
        // Backtrack: the neighbor examined just before `d`, seen from the new cell.
        let (bi, bj) = (pi + NEIGHBORS[(d + 7) % 8].0, pj + NEIGHBORS[(d + 7) % 8].1);
        pi += di;
        pj += dj;
        back = NEIGHBORS
            .iter()
            .position(|&(oi, oj)| (pi + oi, pj + oj) == (bi, bj))
            .expect("backtrack cell is a neighbor");
        cells.push((pi as usize, pj as usize));
    }
    let perimeter_len = cells.len();
    BorderSet { cells, perimeter_len }
}

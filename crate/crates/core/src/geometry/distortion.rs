//! Brown radial-tangential lens distortion (k1, k2, p1, p2).
//!
//! The model acts on normalized image coordinates:
//!
//! ```text
//! r2 = x^2 + y^2
//! xd = x (1 + k1 r2 + k2 r2^2) + 2 p1 x y + p2 (r2 + 2 x^2)
//! yd = y (1 + k1 r2 + k2 r2^2) + p1 (r2 + 2 y^2) + 2 p2 x y
//! ```

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::GeometryError;

pub(crate) const MAX_UNDISTORT_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Distortion {
    pub k1: f64,
    pub k2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl Distortion {
    pub fn new(k1: f64, k2: f64, p1: f64, p2: f64) -> Self {
        Self { k1, k2, p1, p2 }
    }

    pub fn from_array(c: [f64; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.k1, self.k2, self.p1, self.p2]
    }

    pub fn is_zero(&self) -> bool {
        self.k1 == 0.0 && self.k2 == 0.0 && self.p1 == 0.0 && self.p2 == 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|c| c.is_finite())
    }

    /// Forward model on normalized coordinates.
    pub fn distort(&self, p: Vector2<f64>) -> Vector2<f64> {
        let (x, y) = (p.x, p.y);
        let r2 = x * x + y * y;
        let radial = 1.0 + self.k1 * r2 + self.k2 * r2 * r2;
        Vector2::new(
            x * radial + 2.0 * self.p1 * x * y + self.p2 * (r2 + 2.0 * x * x),
            y * radial + self.p1 * (r2 + 2.0 * y * y) + 2.0 * self.p2 * x * y,
        )
    }

    fn jacobian(&self, p: Vector2<f64>) -> Matrix2<f64> {
        let (x, y) = (p.x, p.y);
        let r2 = x * x + y * y;
        let radial = 1.0 + self.k1 * r2 + self.k2 * r2 * r2;
        // d(radial)/dx = (k1 + 2 k2 r2) * 2x
        let dr = self.k1 + 2.0 * self.k2 * r2;
        let dxd_dx = radial + x * dr * 2.0 * x + 2.0 * self.p1 * y + self.p2 * 6.0 * x;
        let dxd_dy = x * dr * 2.0 * y + 2.0 * self.p1 * x + self.p2 * 2.0 * y;
        let dyd_dx = y * dr * 2.0 * x + self.p1 * 2.0 * x + 2.0 * self.p2 * y;
        let dyd_dy = radial + y * dr * 2.0 * y + self.p1 * 6.0 * y + 2.0 * self.p2 * x;
        Matrix2::new(dxd_dx, dxd_dy, dyd_dx, dyd_dy)
    }

    /// Inverts the forward model with Newton iterations.
    ///
    /// `tolerance` is in normalized units; iteration stops once the update
    /// step falls below it.
    pub fn undistort(&self, target: Vector2<f64>, tolerance: f64) -> Result<Vector2<f64>, GeometryError> {
        if self.is_zero() {
            return Ok(target);
        }
        let mut p = target;
        for _ in 0..MAX_UNDISTORT_ITERATIONS {
            let residual = self.distort(p) - target;
            let step = self
                .jacobian(p)
                .try_inverse()
                .map(|inv| inv * residual)
                .ok_or(GeometryError::NoConvergence { iterations: 0 })?;
            p -= step;
            if !p.x.is_finite() || !p.y.is_finite() {
                break;
            }
            if step.norm() < tolerance {
                return Ok(p);
            }
        }
        Err(GeometryError::NoConvergence {
            iterations: MAX_UNDISTORT_ITERATIONS,
        })
    }
}

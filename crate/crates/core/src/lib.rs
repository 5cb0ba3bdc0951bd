//! Scan-to-plan pipeline for conveyor-borne workpieces.
//!
//! Laser-line camera frames are triangulated into a height matrix, from
//! which size, border, slope and profile features are extracted. A KNN
//! classifier picks the profile class, the catalog resolves the model, and
//! the planner emits a spray plan scaled to the measured size and corrected
//! for the measured slope. The simulator renders synthetic scans with known
//! ground truth.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod features;
pub mod frame;
pub mod geometry;
pub mod planner;
pub mod pose;
pub mod reconstruction;
pub mod simulator;

pub use nalgebra;

use serde::{Deserialize, Serialize};

use super::PlanError;
use crate::classifier::ProfileClass;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrokeDirection {
    /// Strokes run along `up`; the raster advances along the plate width.
    Vertical,
    /// Strokes run across the plate; the raster advances along its length.
    Horizontal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprayTemplate {
    pub class: ProfileClass,
    pub stroke_direction: StrokeDirection,
    pub stroke_spacing: f64,
    pub standoff: f64,
    pub travel_speed: f64,
    pub margin: f64,
    /// Largest distance between consecutive poses.
    pub pose_step: f64,
}

impl SprayTemplate {
    pub fn validate(&self) -> Result<(), PlanError> {
        let fields = [
            ("stroke_spacing", self.stroke_spacing),
            ("standoff", self.standoff),
            ("travel_speed", self.travel_speed),
            ("margin", self.margin),
            ("pose_step", self.pose_step),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PlanError::InvalidTemplate(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub stroke_spacing: f64,
    pub standoff: f64,
    pub travel_speed: f64,
    pub margin: f64,
    pub pose_step: f64,
    /// Plans are withheld when the plane fit residual exceeds this (m).
    pub max_fit_residual: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            stroke_spacing: 0.10,
            standoff: 0.20,
            travel_speed: 0.5,
            margin: 0.05,
            pose_step: 0.01,
            max_fit_residual: 0.005,
        }
    }
}

/// Horizontal-wavy plates are coated with vertical strokes and vertical-wavy
/// plates with horizontal ones; smooth plates default to vertical strokes.
pub fn select_template(class: &ProfileClass, config: &PlannerConfig) -> Result<SprayTemplate, PlanError> {
    let stroke_direction = match class {
        ProfileClass::HorizontalWavy | ProfileClass::Smooth => StrokeDirection::Vertical,
        ProfileClass::VerticalWavy => StrokeDirection::Horizontal,
        ProfileClass::Other(id) => return Err(PlanError::UnknownClass(id.clone())),
    };
    let template = SprayTemplate {
        class: class.clone(),
        stroke_direction,
        stroke_spacing: config.stroke_spacing,
        standoff: config.standoff,
        travel_speed: config.travel_speed,
        margin: config.margin,
        pose_step: config.pose_step,
    };
    template.validate()?;
    Ok(template)
}

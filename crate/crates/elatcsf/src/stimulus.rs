use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Spatial footprint of a flickering patch, in degrees of visual angle.
///
/// A disc is centered at `eccentricity` degrees along the horizontal
/// meridian; points inside it are reached by polar offsets from that center.
/// A rectangle is centered on fixation and then displaced horizontally by
/// `eccentricity`, which covers both foveal screens and off-axis panels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Geometry {
    Disc {
        /// Radius, degrees.
        radius: f64,
        /// Distance of the disc center from fixation, degrees.
        eccentricity: f64,
    },
    Rect {
        /// Horizontal extent, degrees.
        width: f64,
        /// Vertical extent, degrees.
        height: f64,
        /// Horizontal displacement of the rectangle center, degrees.
        eccentricity: f64,
    },
}

impl Geometry {
    pub fn disc(radius: f64, eccentricity: f64) -> Self {
        Geometry::Disc { radius, eccentricity }
    }

    pub fn rect(width: f64, height: f64, eccentricity: f64) -> Self {
        Geometry::Rect { width, height, eccentricity }
    }

    /// Disc of the given area centered on fixation.
    pub fn foveal_disc_of_area(area: f64) -> Self {
        Geometry::Disc {
            radius: (area / std::f64::consts::PI).sqrt(),
            eccentricity: 0.0,
        }
    }

    pub fn area(&self) -> f64 {
        match *self {
            Geometry::Disc { radius, .. } => std::f64::consts::PI * radius * radius,
            Geometry::Rect { width, height, .. } => width * height,
        }
    }

    pub fn eccentricity(&self) -> f64 {
        match *self {
            Geometry::Disc { eccentricity, .. } | Geometry::Rect { eccentricity, .. } => {
                eccentricity
            }
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: String| Err(ModelError::Stimulus { reason });
        match *self {
            Geometry::Disc { radius, eccentricity } => {
                if !(radius.is_finite() && radius >= 0.0) {
                    return bad(format!("disc radius {radius} must be finite and >= 0"));
                }
                if !(eccentricity.is_finite() && eccentricity >= 0.0) {
                    return bad(format!("eccentricity {eccentricity} must be finite and >= 0"));
                }
            }
            Geometry::Rect { width, height, eccentricity } => {
                if !(width.is_finite() && width >= 0.0) {
                    return bad(format!("rect width {width} must be finite and >= 0"));
                }
                if !(height.is_finite() && height >= 0.0) {
                    return bad(format!("rect height {height} must be finite and >= 0"));
                }
                if !(eccentricity.is_finite() && eccentricity >= 0.0) {
                    return bad(format!("eccentricity {eccentricity} must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }
}

/// A steady patch: where it sits and how bright it is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub geometry: Geometry,
    /// Mean luminance, cd/m^2.
    pub luminance: f64,
}

impl Field {
    pub fn new(geometry: Geometry, luminance: f64) -> Self {
        Self { geometry, luminance }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.geometry.validate()?;
        if !(self.luminance.is_finite() && self.luminance > 0.0) {
            return Err(ModelError::Stimulus {
                reason: format!("luminance {} cd/m^2 must be finite and > 0", self.luminance),
            });
        }
        Ok(())
    }
}

/// A flickering patch: a field modulated at a single temporal frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub field: Field,
    /// Flicker frequency, Hz.
    pub frequency: f64,
}

impl Stimulus {
    pub fn new(field: Field, frequency: f64) -> Self {
        Self { field, frequency }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.field.validate()?;
        if !(self.frequency.is_finite() && self.frequency >= 0.0) {
            return Err(ModelError::Stimulus {
                reason: format!("frequency {} Hz must be finite and >= 0", self.frequency),
            });
        }
        Ok(())
    }
}

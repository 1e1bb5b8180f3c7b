//! Application sweeps built on the sensitivity model.
//!
//! Two consumers with the same underlying question ("how visible is this
//! flicker?") but different framings: headset makers want the critical
//! flicker-fusion frequency of a full field of view as brightness scales up,
//! and lighting designers want relative sensitivity across the modulation
//! frequencies a luminaire can emit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cff::{predict_cff, CffPrediction};
use crate::error::{ApplicationError, DataError};
use crate::params::ModelParams;
use crate::quadrature::QuadratureSpec;
use crate::stimulus::{Field, Geometry, Stimulus};
use crate::summation;
use crate::tcsf::FREQUENCY_SCALE_MIN_LUMINANCE;

/// Field of view and brightness envelope of a head-mounted display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadsetSpec {
    pub name: String,
    pub fov_width_deg: f64,
    pub fov_height_deg: f64,
    /// Peak panel luminance; informational, not enforced by the sweep.
    pub max_luminance_cdm2: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeadsetFile {
    headset: Vec<HeadsetSpec>,
}

/// Load `[[headset]]` entries from a TOML file.
pub fn load_headsets(path: &Path) -> Result<Vec<HeadsetSpec>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: HeadsetFile = toml::from_str(&text).map_err(|e| DataError::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    if file.headset.is_empty() {
        return Err(DataError::Empty {
            path: path.to_path_buf(),
        });
    }
    let mut seen = std::collections::BTreeSet::new();
    for h in &file.headset {
        if h.name.is_empty() {
            return Err(DataError::Parse {
                path: path.to_path_buf(),
                reason: "headset with an empty name".into(),
            });
        }
        if !seen.insert(h.name.clone()) {
            return Err(DataError::DuplicateName {
                name: h.name.clone(),
            });
        }
        for (field, value) in [
            ("fov_width_deg", h.fov_width_deg),
            ("fov_height_deg", h.fov_height_deg),
            ("max_luminance_cdm2", h.max_luminance_cdm2),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(DataError::Parse {
                    path: path.to_path_buf(),
                    reason: format!("headset `{}`: {field} must be positive", h.name),
                });
            }
        }
    }
    Ok(file.headset)
}

/// Critical flicker-fusion frequency of a headset's full field of view at
/// each luminance, for full-on/off modulation (contrast 1).
///
/// Luminances below the model's clamp floor are refused rather than silently
/// evaluated at the clamp.
pub fn headset_cff_curve(
    params: &ModelParams,
    headset: &HeadsetSpec,
    luminances: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<(f64, CffPrediction)>, ApplicationError> {
    if luminances.is_empty() {
        return Err(ApplicationError::InvalidGrid {
            reason: "no luminances to evaluate".into(),
        });
    }
    if let Some(low) = luminances
        .iter()
        .find(|l| !l.is_finite() || **l < FREQUENCY_SCALE_MIN_LUMINANCE)
    {
        return Err(ApplicationError::InvalidGrid {
            reason: format!(
                "luminance {low} cd/m^2 is below the {FREQUENCY_SCALE_MIN_LUMINANCE} cd/m^2 floor \
                 of the luminance-frequency scaling"
            ),
        });
    }
    let mut curve = Vec::with_capacity(luminances.len());
    for &luminance in luminances {
        let field = Field {
            geometry: Geometry::rect(headset.fov_width_deg, headset.fov_height_deg, 0.0),
            luminance,
        };
        curve.push((luminance, predict_cff(params, &field, 1.0, quad)?));
    }
    Ok(curve)
}

/// A uniformly modulated patch of lit surface, as a disc of equivalent area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LightingCondition {
    pub area_deg2: f64,
    pub eccentricity_deg: f64,
    pub luminance_cdm2: f64,
}

impl LightingCondition {
    fn stimulus(&self, frequency: f64) -> Stimulus {
        let radius = (self.area_deg2 / std::f64::consts::PI).sqrt();
        Stimulus {
            field: Field {
                geometry: Geometry::disc(radius, self.eccentricity_deg),
                luminance: self.luminance_cdm2,
            },
            frequency,
        }
    }
}

/// Sensitivity of `condition` across `frequencies`, normalized by the peak
/// sensitivity of `reference` over the same grid.
///
/// Sharing one reference lets several conditions (dimmer, larger, more
/// peripheral) be compared on a common relative scale where the reference
/// peaks at 1.
pub fn lighting_sensitivity_curve(
    params: &ModelParams,
    condition: &LightingCondition,
    reference: &LightingCondition,
    frequencies: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<f64>, ApplicationError> {
    if frequencies.is_empty() {
        return Err(ApplicationError::InvalidGrid {
            reason: "no frequencies to evaluate".into(),
        });
    }
    if let Some(bad) = frequencies.iter().find(|f| !f.is_finite() || **f < 0.0) {
        return Err(ApplicationError::InvalidGrid {
            reason: format!("frequency {bad} Hz is not usable"),
        });
    }
    let mut peak = 0.0f64;
    for &frequency in frequencies {
        let s = summation::sensitivity(params, &reference.stimulus(frequency), quad)
            .map_err(|e| ApplicationError::InvalidReference {
                reason: e.to_string(),
            })?;
        peak = peak.max(s);
    }
    if !(peak > 0.0) {
        return Err(ApplicationError::InvalidReference {
            reason: "reference condition has zero peak sensitivity".into(),
        });
    }
    let mut curve = Vec::with_capacity(frequencies.len());
    for &frequency in frequencies {
        let s = summation::sensitivity(params, &condition.stimulus(frequency), quad)?;
        curve.push(s / peak);
    }
    Ok(curve)
}

//! Spatial pooling over extended fields: pointwise sensitivity is raised to
//! the summation exponent, integrated over the patch, normalized by the
//! threshold energy, and brought back by the inverse power. Larger patches
//! therefore help, but with strongly diminishing returns.

use crate::error::ModelError;
use crate::params::ModelParams;
use crate::quadrature::{self, Quadrature, QuadratureSpec};
use crate::stimulus::{Geometry, Stimulus};
use crate::tcsf::PointwiseEval;

/// Sensitivity of an extended stimulus together with the pooled energy and
/// the quadrature diagnostics behind it.
#[derive(Debug, Clone, Copy)]
pub struct SensitivityEstimate {
    pub sensitivity: f64,
    /// Integral of pointwise sensitivity^beta over the patch, before the
    /// threshold-energy normalization.
    pub energy: f64,
    pub quadrature: Quadrature,
}

/// Retinal eccentricity of a point at polar offset (r, theta) from a disc
/// center that itself sits `center` degrees from fixation.
pub fn disc_eccentricity(center: f64, r: f64, theta: f64) -> f64 {
    (center * center + r * r + 2.0 * center * r * theta.cos()).max(0.0).sqrt()
}

/// Retinal eccentricity of a point at (x, y) in a rectangle whose center is
/// displaced `center` degrees horizontally from fixation.
pub fn rect_eccentricity(center: f64, x: f64, y: f64) -> f64 {
    let dx = x + center;
    (dx * dx + y * y).sqrt()
}

/// Pooled sensitivity of a flickering patch.
pub fn sensitivity(
    p: &ModelParams,
    stim: &Stimulus,
    quad: &QuadratureSpec,
) -> Result<f64, ModelError> {
    Ok(sensitivity_detailed(p, stim, quad)?.sensitivity)
}

/// As [`sensitivity`], but keeps the raw energy integral and quadrature
/// diagnostics. A zero-area patch pools no energy and scores zero without
/// touching the integrator.
pub fn sensitivity_detailed(
    p: &ModelParams,
    stim: &Stimulus,
    quad: &QuadratureSpec,
) -> Result<SensitivityEstimate, ModelError> {
    p.validate()?;
    stim.validate()?;
    if stim.field.geometry.area() == 0.0 {
        return Ok(SensitivityEstimate {
            sensitivity: 0.0,
            energy: 0.0,
            quadrature: Quadrature {
                value: 0.0,
                error_estimate: None,
                converged: true,
                refinements: 0,
            },
        });
    }
    let eval = PointwiseEval::new(p, stim.field.luminance)?;
    let omega = stim.frequency;
    let beta = p.beta;
    let q = match stim.field.geometry {
        Geometry::Disc { radius, eccentricity } => quadrature::integrate_disc(
            quad,
            radius,
            |r, theta| eval.at(omega, disc_eccentricity(eccentricity, r, theta)).powf(beta),
        )?,
        Geometry::Rect { width, height, eccentricity } => quadrature::integrate_rect(
            quad,
            width,
            height,
            |x, y| eval.at(omega, rect_eccentricity(eccentricity, x, y)).powf(beta),
        )?,
    };
    Ok(SensitivityEstimate {
        sensitivity: (q.value / p.e_thr).powf(1.0 / beta),
        energy: q.value,
        quadrature: q,
    })
}

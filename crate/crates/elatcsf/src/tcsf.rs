//! Pointwise sensitivity: the temporal kernel plus the luminance and
//! eccentricity extensions. Everything here is a plain function of frequency,
//! luminance, and retinal eccentricity; spatial pooling over extended fields
//! lives in `summation`.

use crate::error::ModelError;
use crate::params::{ModelParams, TcsfIdmsParams};

/// Temporal contrast sensitivity kernel: magnitude of the difference of an
/// excitatory and an inhibitory low-pass filter cascade at frequency `omega`
/// (Hz). Even in `omega`; the two cascades are evaluated in polar form to
/// avoid complex arithmetic.
pub fn tcsf_idms(p: &TcsfIdmsParams, omega: f64) -> f64 {
    let a = 2.0 * std::f64::consts::PI * omega * p.tau;
    // (1 + i a)^(-n) has modulus (1 + a^2)^(-n/2) and phase -n atan(a).
    let m1 = (1.0 + a * a).powf(-p.n1 / 2.0);
    let phi1 = -p.n1 * a.atan();
    let b = p.kappa * a;
    let m2 = (1.0 + b * b).powf(-p.n2 / 2.0);
    let phi2 = -p.n2 * b.atan();
    let re = m1 * phi1.cos() - p.zeta * m2 * phi2.cos();
    let im = m1 * phi1.sin() - p.zeta * m2 * phi2.sin();
    p.xi * re.hypot(im)
}

/// Luminance gain: rises from scotopic levels and saturates for bright
/// fields. Caller guarantees `luminance > 0`.
pub fn luminance_sensitivity(p: &ModelParams, luminance: f64) -> f64 {
    debug_assert!(luminance > 0.0);
    p.k1_lum * (1.0 + p.k2_lum / luminance).powf(-p.k3_lum)
}

/// Luminance floor below which the frequency divisor is held constant. The
/// divisor was calibrated down to this level; extrapolating the log term
/// further would drive it toward zero and blow up the scaled frequency.
pub const FREQUENCY_SCALE_MIN_LUMINANCE: f64 = 0.1;

/// Divisor applied to the frequency axis as luminance falls: the sensitive
/// band shifts toward lower frequencies in dim light. Clamped below
/// [`FREQUENCY_SCALE_MIN_LUMINANCE`]; errors if a fitted parameter set makes
/// the divisor non-positive.
pub fn luminance_frequency_scale(p: &ModelParams, luminance: f64) -> Result<f64, ModelError> {
    debug_assert!(luminance > 0.0);
    let clamped = luminance.max(FREQUENCY_SCALE_MIN_LUMINANCE);
    let d = p.b1_omega + p.k1_omega * clamped.log10();
    if !(d.is_finite() && d > 0.0) {
        return Err(ModelError::DegenerateLuminance { luminance, scale: d });
    }
    Ok(d)
}

/// Eccentricity gain: sensitivity decays exponentially (in log10 units) with
/// distance from fixation.
pub fn eccentricity_sensitivity(p: &ModelParams, eccentricity: f64) -> f64 {
    debug_assert!(eccentricity >= 0.0);
    10f64.powf(-p.k1_ecc * eccentricity)
}

/// Frequency warp with eccentricity: the frequency axis is compressed toward
/// the pivot `omega_p` as eccentricity grows, which moves the peak of the
/// sensitive band upward in the periphery. Can come out negative near zero
/// frequency; the kernel is even, so callers feed the magnitude onward.
pub fn eccentric_frequency(p: &ModelParams, omega: f64, eccentricity: f64) -> f64 {
    (omega - p.omega_p) / (1.0 + p.k2_omega * eccentricity) + p.omega_p
}

/// Pointwise extended sensitivity at a single retinal location: temporal
/// kernel on the luminance-scaled, eccentricity-warped frequency axis, times
/// the luminance and eccentricity gains.
pub fn el_tcsf(
    p: &ModelParams,
    omega: f64,
    luminance: f64,
    eccentricity: f64,
) -> Result<f64, ModelError> {
    Ok(PointwiseEval::new(p, luminance)?.at(omega, eccentricity))
}

/// Precomputed per-field factors for the inner quadrature loop: the luminance
/// gain and frequency divisor depend only on the field, not on the retinal
/// position being sampled.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PointwiseEval<'a> {
    p: &'a ModelParams,
    s_lum: f64,
    d_inv: f64,
}

impl<'a> PointwiseEval<'a> {
    pub fn new(p: &'a ModelParams, luminance: f64) -> Result<Self, ModelError> {
        let d = luminance_frequency_scale(p, luminance)?;
        Ok(Self {
            p,
            s_lum: luminance_sensitivity(p, luminance),
            d_inv: 1.0 / d,
        })
    }

    pub fn at(&self, omega: f64, eccentricity: f64) -> f64 {
        let warped = eccentric_frequency(self.p, omega, eccentricity);
        self.s_lum
            * eccentricity_sensitivity(self.p, eccentricity)
            * tcsf_idms(&self.p.tcsf, warped.abs() * self.d_inv)
    }
}

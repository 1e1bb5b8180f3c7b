//! Critical flicker frequency: the highest frequency at which a patch
//! flickering at a given contrast is still visible, i.e. the largest root of
//! log(pooled sensitivity * contrast) inside a calibrated frequency bracket.

use crate::error::ModelError;
use crate::params::ModelParams;
use crate::quadrature::QuadratureSpec;
use crate::stimulus::{Field, Stimulus};
use crate::summation;

/// Search bracket. Sensitivity data below 8 Hz is dominated by the low-pass
/// shoulder where the visibility boundary is not a crossing, and no dataset
/// reaches past 200 Hz.
pub const CFF_BRACKET_MIN_HZ: f64 = 8.0;
pub const CFF_BRACKET_MAX_HZ: f64 = 200.0;

/// Outcome of a CFF search: either a bracketed root, or a verdict that the
/// visibility boundary sits outside the bracket entirely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CffPrediction {
    Cff(f64),
    /// The patch is invisible even at the bottom of the bracket.
    BelowBracket,
    /// The patch is still visible at the top of the bracket.
    AboveBracket,
}

impl CffPrediction {
    /// Numeric value with out-of-bracket verdicts pinned to the bracket
    /// edges, which is how error metrics count them.
    pub fn clamped_hz(self) -> f64 {
        match self {
            CffPrediction::Cff(hz) => hz,
            CffPrediction::BelowBracket => CFF_BRACKET_MIN_HZ,
            CffPrediction::AboveBracket => CFF_BRACKET_MAX_HZ,
        }
    }
}

/// Finds the largest frequency in the bracket where pooled sensitivity
/// crosses 1/contrast. A 1 Hz scan locates the topmost sign change of the
/// log visibility margin, then Brent's method refines it to ~1e-9 Hz. If the
/// margin is still positive at the top of the bracket the flicker is visible
/// beyond it; if it is negative everywhere the flicker never becomes visible.
pub fn predict_cff(
    p: &ModelParams,
    field: &Field,
    contrast: f64,
    quad: &QuadratureSpec,
) -> Result<CffPrediction, ModelError> {
    field.validate()?;
    if !(contrast > 0.0 && contrast <= 1.0) {
        return Err(ModelError::Stimulus {
            reason: format!("contrast {contrast} must lie in (0, 1]"),
        });
    }
    let ln_contrast = contrast.ln();
    let margin = |omega: f64| -> Result<f64, ModelError> {
        let s = summation::sensitivity(p, &Stimulus::new(*field, omega), quad)?;
        Ok(s.ln() + ln_contrast)
    };

    // The scan grid is 1 Hz; the pooled sensitivity varies on a scale of
    // tens of Hz, so no sign change can hide between grid points.
    let n = (CFF_BRACKET_MAX_HZ - CFF_BRACKET_MIN_HZ) as usize;
    let mut g = Vec::with_capacity(n + 1);
    for i in 0..=n {
        g.push(margin(CFF_BRACKET_MIN_HZ + i as f64)?);
    }
    if g[n] > 0.0 {
        return Ok(CffPrediction::AboveBracket);
    }
    for i in (0..n).rev() {
        if g[i] * g[i + 1] <= 0.0 && !(g[i] == 0.0 && g[i + 1] == 0.0) {
            let a = CFF_BRACKET_MIN_HZ + i as f64;
            let root = brent(&margin, a, a + 1.0, g[i], g[i + 1], 1e-9)?;
            return Ok(CffPrediction::Cff(root));
        }
    }
    Ok(CffPrediction::BelowBracket)
}

/// Brent root refinement on a bracketing interval: inverse quadratic
/// interpolation guarded by bisection. `fa` and `fb` must straddle zero.
fn brent<F>(f: &F, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, tol: f64) -> Result<f64, ModelError>
where
    F: Fn(f64) -> Result<f64, ModelError>,
{
    debug_assert!(fa * fb <= 0.0);
    let mut c = b;
    let mut fc = fb;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Try inverse quadratic interpolation (secant when a == c).
            let s = fb / fa;
            let (mut pp, mut q) = if a == c {
                (2.0 * xm * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if pp > 0.0 {
                q = -q;
            }
            pp = pp.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * pp < min1.min(min2) {
                e = d;
                d = pp / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b)?;
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stimulus::Geometry;

    fn disc_field(radius: f64, luminance: f64, ecc: f64) -> Field {
        Field::new(Geometry::disc(radius, ecc), luminance)
    }

    #[test]
    fn frozen_disc_cff() {
        let p = ModelParams::fitted();
        let quad = QuadratureSpec::default();
        // Disc of area 0.79 deg^2 at 100 cd/m^2, full contrast.
        let f = disc_field(0.501463, 100.0, 0.0);
        match predict_cff(&p, &f, 1.0, &quad).unwrap() {
            CffPrediction::Cff(hz) => assert!((hz - 59.8564095).abs() < 1e-4, "got {hz}"),
            other => panic!("expected a root, got {other:?}"),
        }
    }

    #[test]
    fn root_reproduces_unit_sensitivity() {
        let p = ModelParams::fitted();
        let quad = QuadratureSpec::default();
        let f = disc_field(1.0, 100.0, 0.0);
        let CffPrediction::Cff(hz) = predict_cff(&p, &f, 1.0, &quad).unwrap() else {
            panic!("expected a root");
        };
        let s = summation::sensitivity(&p, &Stimulus::new(f, hz), &quad).unwrap();
        assert!(s.log10().abs() < 1e-6, "log10 S at root = {}", s.log10());
    }

    #[test]
    fn contrast_shifts_the_root_down() {
        let p = ModelParams::fitted();
        let quad = QuadratureSpec::default();
        let f = disc_field(1.0, 100.0, 0.0);
        let full = predict_cff(&p, &f, 1.0, &quad).unwrap().clamped_hz();
        let half = predict_cff(&p, &f, 0.5, &quad).unwrap().clamped_hz();
        assert!(half < full);
    }

    #[test]
    fn luminance_raises_cff() {
        // Higher luminance pushes the visibility boundary up in frequency.
        let p = ModelParams::fitted();
        let quad = QuadratureSpec::default();
        let mut prev = 0.0;
        for lum in [1.0, 10.0, 100.0, 1000.0] {
            let hz = predict_cff(&p, &disc_field(1.0, lum, 0.0), 1.0, &quad)
                .unwrap()
                .clamped_hz();
            assert!(hz > prev, "L={lum}: {hz} <= {prev}");
            prev = hz;
        }
    }

    #[test]
    fn out_of_bracket_verdicts() {
        let quad = QuadratureSpec::default();
        // A barely-visible stimulus at minute contrast never crosses
        // threshold inside the bracket.
        let p = ModelParams::fitted();
        let f = disc_field(0.05, 0.2, 0.0);
        assert_eq!(predict_cff(&p, &f, 0.001, &quad).unwrap(), CffPrediction::BelowBracket);
        assert_eq!(CffPrediction::BelowBracket.clamped_hz(), CFF_BRACKET_MIN_HZ);
        // An absurdly amplified kernel is still visible at the top.
        let mut loud = ModelParams::fitted();
        loud.tcsf.xi = 1e12;
        let f = disc_field(2.0, 100.0, 0.0);
        assert_eq!(predict_cff(&loud, &f, 1.0, &quad).unwrap(), CffPrediction::AboveBracket);
        assert_eq!(CffPrediction::AboveBracket.clamped_hz(), CFF_BRACKET_MAX_HZ);
    }

    #[test]
    fn bad_contrast_is_rejected() {
        let p = ModelParams::fitted();
        let quad = QuadratureSpec::default();
        let f = disc_field(1.0, 100.0, 0.0);
        assert!(predict_cff(&p, &f, 0.0, &quad).is_err());
        assert!(predict_cff(&p, &f, 1.5, &quad).is_err());
    }

    #[test]
    fn brent_solves_a_plain_function() {
        // cos(x) - x has its root near 0.739085.
        let f = |x: f64| Ok(x.cos() - x);
        let root = brent(&f, 0.0, 1.0, 1.0, 1.0f64.cos() - 1.0, 1e-12).unwrap();
        assert!((root - 0.7390851332151607).abs() < 1e-9);
    }
}

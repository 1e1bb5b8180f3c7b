//! Flicker from variable-refresh-rate switching.
//!
//! A VRR display that alternates between two refresh rates modulates its
//! light output: every frame starts with a short luminance dip (the driving
//! signature of the panel), and frames at the low rate space those dips
//! further apart than frames at the high rate. Alternating between the rates
//! at `switch_hz` therefore puts flicker energy at the switch frequency and
//! its harmonics, on top of the (usually invisible) refresh harmonics.
//!
//! This module synthesizes such waveforms, extracts the flicker contrast at
//! the switch frequency from the spectrum, interpolates measured contrast
//! tables, and intersects those contrasts with the sensitivity model to
//! report the flicker-free refresh range of a display.

use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{DataError, VrrError};
use crate::params::ModelParams;
use crate::quadrature::{pairwise_sum, QuadratureSpec};
use crate::stimulus::{Field, Geometry, Stimulus};
use crate::summation;

/// Relative slack when checking that a window holds an integer number of
/// switch cycles. Windows that fail this check would smear the switch line
/// across neighbouring bins and underestimate the contrast.
const CYCLE_TOLERANCE: f64 = 1e-6;

/// Frequency scan used to find the peak sensitivity of a display's field of
/// view. 0.5 Hz steps resolve the peak to well under the rate-grid spacing.
const FLICKER_SCAN_MIN_HZ: f64 = 0.5;
const FLICKER_SCAN_MAX_HZ: f64 = 120.0;
const FLICKER_SCAN_STEP_HZ: f64 = 0.5;

/// A sampled luminance trace in cd/m^2.
#[derive(Debug, Clone, PartialEq)]
pub struct LuminanceWaveform {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
}

impl LuminanceWaveform {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    /// Mean luminance over the window.
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.samples) / self.samples.len() as f64
    }
}

/// Recipe for a synthetic VRR luminance trace.
///
/// The trace alternates between `rr_low_hz` and `rr_high_hz`, spending half a
/// switch period on each, starting on the low rate at t = 0. Each frame
/// opens with a dip of depth `dip_depth` (fraction of the plateau level)
/// lasting `dip_width_s`. The finished trace is rescaled so its mean equals
/// `mean_luminance` exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VrrWaveformSpec {
    pub rr_low_hz: f64,
    pub rr_high_hz: f64,
    /// Alternation frequency between the two rates.
    pub switch_hz: f64,
    pub mean_luminance: f64,
    /// Fractional luminance lost during each dip, in [0, 1].
    pub dip_depth: f64,
    pub dip_width_s: f64,
    pub sample_rate_hz: f64,
    pub duration_s: f64,
}

impl VrrWaveformSpec {
    fn validate(&self) -> Result<(), VrrError> {
        let invalid = |reason: String| Err(VrrError::InvalidWaveform { reason });
        let fields = [
            ("rr_low_hz", self.rr_low_hz),
            ("rr_high_hz", self.rr_high_hz),
            ("switch_hz", self.switch_hz),
            ("mean_luminance", self.mean_luminance),
            ("sample_rate_hz", self.sample_rate_hz),
            ("duration_s", self.duration_s),
        ];
        for (name, value) in fields {
            if !value.is_finite() || value <= 0.0 {
                return invalid(format!("{name} must be positive and finite, got {value}"));
            }
        }
        if self.rr_low_hz > self.rr_high_hz {
            return invalid(format!(
                "rr_low_hz = {} exceeds rr_high_hz = {}",
                self.rr_low_hz, self.rr_high_hz
            ));
        }
        if !self.dip_depth.is_finite() || !(0.0..=1.0).contains(&self.dip_depth) {
            return invalid(format!("dip_depth must lie in [0, 1], got {}", self.dip_depth));
        }
        if !self.dip_width_s.is_finite() || self.dip_width_s < 0.0 {
            return invalid(format!("dip_width_s must be >= 0, got {}", self.dip_width_s));
        }
        // A dip at least as long as the fastest frame would swallow it whole.
        if self.dip_width_s * self.rr_high_hz >= 1.0 {
            return invalid(format!(
                "dip_width_s = {} covers an entire frame at {} Hz",
                self.dip_width_s, self.rr_high_hz
            ));
        }
        Ok(())
    }
}

/// Synthesize the luminance trace described by `spec`.
///
/// Dips are phase-locked to global time (frame k of rate R starts at k/R
/// seconds), so a window holding whole switch periods is exactly periodic
/// and the spectrum of the switch line is leakage-free.
pub fn synthesize_vrr_waveform(spec: &VrrWaveformSpec) -> Result<LuminanceWaveform, VrrError> {
    spec.validate()?;
    let count = (spec.duration_s * spec.sample_rate_hz).round();
    if !(2.0..=1e9).contains(&count) {
        return Err(VrrError::InvalidWaveform {
            reason: format!("window of {count} samples is outside [2, 1e9]"),
        });
    }
    let n = count as usize;
    let two_switch = 2.0 * spec.switch_hz;
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let t = k as f64 / spec.sample_rate_hz;
        let half = (t * two_switch).floor() as i64;
        let rate = if half % 2 == 0 {
            spec.rr_low_hz
        } else {
            spec.rr_high_hz
        };
        let phase = t * rate;
        let in_dip = phase - phase.floor() < spec.dip_width_s * rate;
        samples.push(if in_dip { 1.0 - spec.dip_depth } else { 1.0 });
    }
    // Pin the mean exactly; the dip duty cycle depends on the rate mix, so
    // the unscaled mean is not a closed form.
    let raw_mean = pairwise_sum(&samples) / n as f64;
    let scale = spec.mean_luminance / raw_mean;
    for s in &mut samples {
        *s *= scale;
    }
    Ok(LuminanceWaveform {
        samples,
        sample_rate_hz: spec.sample_rate_hz,
    })
}

/// One-sided amplitude spectrum of a real waveform.
///
/// `amplitudes[k]` is the amplitude of the component at `k * resolution_hz`:
/// the DC entry is the mean, interior bins carry the full sinusoid amplitude
/// (both DFT halves combined), and the Nyquist bin of an even-length window
/// is left unpaired.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSpectrum {
    pub resolution_hz: f64,
    /// Number of time samples the spectrum came from.
    pub window_len: usize,
    pub amplitudes: Vec<f64>,
}

impl AmplitudeSpectrum {
    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.resolution_hz
    }

    /// Bin index of `hz`, or None when it does not sit on the grid
    /// (within [`CYCLE_TOLERANCE`] of a bin) or lies at/beyond Nyquist.
    pub fn bin_of(&self, hz: f64) -> Option<usize> {
        let exact = hz / self.resolution_hz;
        let bin = exact.round();
        if (exact - bin).abs() > CYCLE_TOLERANCE || bin < 1.0 {
            return None;
        }
        let bin = bin as usize;
        (2 * bin < self.window_len).then_some(bin)
    }
}

pub fn amplitude_spectrum(waveform: &LuminanceWaveform) -> Result<AmplitudeSpectrum, VrrError> {
    let n = waveform.samples.len();
    if n < 2 || !waveform.sample_rate_hz.is_finite() || waveform.sample_rate_hz <= 0.0 {
        return Err(VrrError::InvalidWaveform {
            reason: "spectrum needs at least 2 samples and a positive sample rate".into(),
        });
    }
    let mut buf: Vec<Complex<f64>> = waveform
        .samples
        .iter()
        .map(|&s| Complex::new(s, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let mut amplitudes = Vec::with_capacity(half + 1);
    amplitudes.push(buf[0].norm() / n as f64);
    for (k, bin) in buf.iter().enumerate().take(half + 1).skip(1) {
        // The conjugate half doubles every interior bin; an even-length
        // window has a lone Nyquist bin at k == n/2.
        let pair = if 2 * k == n { 1.0 } else { 2.0 };
        amplitudes.push(pair * bin.norm() / n as f64);
    }
    Ok(AmplitudeSpectrum {
        resolution_hz: waveform.sample_rate_hz / n as f64,
        window_len: n,
        amplitudes,
    })
}

/// Flicker contrast at `switch_hz`: the amplitude of that spectral line
/// divided by the mean luminance.
///
/// Requires the window to hold a whole number of switch cycles (within
/// [`CYCLE_TOLERANCE`]); anything else leaks the line into neighbouring bins
/// and the single-bin readout would undercount it.
pub fn extract_flicker_contrast(
    waveform: &LuminanceWaveform,
    switch_hz: f64,
) -> Result<f64, VrrError> {
    if !switch_hz.is_finite() || switch_hz <= 0.0 {
        return Err(VrrError::InvalidWaveform {
            reason: format!("switch frequency must be positive, got {switch_hz}"),
        });
    }
    let spectrum = amplitude_spectrum(waveform)?;
    let cycles = switch_hz * waveform.duration_s();
    if (cycles - cycles.round()).abs() > CYCLE_TOLERANCE {
        return Err(VrrError::NonIntegerCycles { cycles });
    }
    let bin = spectrum
        .bin_of(switch_hz)
        .ok_or(VrrError::BinOutOfRange { f_rrs: switch_hz })?;
    let mean = waveform.mean();
    if !(mean.is_finite() && mean > 0.0) {
        return Err(VrrError::InvalidWaveform {
            reason: format!("mean luminance must be positive, got {mean}"),
        });
    }
    Ok(spectrum.amplitudes[bin] / mean)
}

/// Measured (or synthesized) flicker contrast tabulated on a full
/// luminance x refresh-rate grid. Lookups interpolate bilinearly in
/// (log10 luminance, rate) and refuse to extrapolate.
#[derive(Debug, Clone, PartialEq)]
pub struct VrrContrastModel {
    luminances: Vec<f64>,
    rates: Vec<f64>,
    /// Row i holds the contrasts for luminances[i] across all rates.
    table: Vec<Vec<f64>>,
}

/// Column layout of a contrast-table CSV.
pub const VRR_CSV_HEADER: [&str; 3] = ["mean_luminance_cdm2", "f_rrs_hz", "contrast"];

impl VrrContrastModel {
    pub fn from_grid(
        luminances: Vec<f64>,
        rates: Vec<f64>,
        table: Vec<Vec<f64>>,
    ) -> Result<Self, VrrError> {
        let bad = |reason: String| Err(VrrError::IrregularGrid { reason });
        for (name, axis) in [("luminance", &luminances), ("rate", &rates)] {
            if axis.len() < 2 {
                return bad(format!("need at least two tabulated {name} values"));
            }
            if axis.iter().any(|v| !v.is_finite() || *v <= 0.0) {
                return bad(format!("{name} axis must be positive and finite"));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("{name} axis must be strictly ascending"));
            }
        }
        if table.len() != luminances.len() {
            return bad(format!(
                "table has {} rows for {} luminances",
                table.len(),
                luminances.len()
            ));
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != rates.len() {
                return bad(format!(
                    "row {} has {} entries for {} rates",
                    i,
                    row.len(),
                    rates.len()
                ));
            }
            if let Some(c) = row.iter().find(|c| !c.is_finite() || !(0.0..=1.0).contains(*c)) {
                return bad(format!("contrast {c} is outside [0, 1]"));
            }
        }
        Ok(Self {
            luminances,
            rates,
            table,
        })
    }

    /// Load a table from CSV with columns [`VRR_CSV_HEADER`]. Rows may come
    /// in any order but must cover every (luminance, rate) combination
    /// exactly once.
    pub fn from_csv(path: &Path) -> Result<Self, VrrError> {
        let file = std::fs::File::open(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(file);
        let csv_err = |source: csv::Error| DataError::Csv {
            path: path.to_path_buf(),
            source,
        };
        let headers = rdr.headers().map_err(csv_err)?;
        if headers.len() != VRR_CSV_HEADER.len()
            || headers.iter().zip(VRR_CSV_HEADER).any(|(a, b)| a != b)
        {
            return Err(DataError::SchemaMismatch {
                path: path.to_path_buf(),
                expected: VRR_CSV_HEADER.join(","),
                found: headers.iter().collect::<Vec<_>>().join(","),
            }
            .into());
        }
        let mut triples = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            let field = |idx: usize| -> Result<f64, VrrError> {
                record
                    .get(idx)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| {
                        DataError::Parse {
                            path: path.to_path_buf(),
                            reason: format!(
                                "line {line}: cannot parse `{}` as a number",
                                VRR_CSV_HEADER[idx]
                            ),
                        }
                        .into()
                    })
            };
            triples.push((field(0)?, field(1)?, field(2)?));
        }
        if triples.is_empty() {
            return Err(DataError::Empty {
                path: path.to_path_buf(),
            }
            .into());
        }
        Self::from_triples(&triples)
    }

    /// Assemble a grid from unordered (luminance, rate, contrast) rows.
    pub fn from_triples(triples: &[(f64, f64, f64)]) -> Result<Self, VrrError> {
        let mut luminances: Vec<f64> = triples.iter().map(|t| t.0).collect();
        let mut rates: Vec<f64> = triples.iter().map(|t| t.1).collect();
        for axis in [&mut luminances, &mut rates] {
            if axis.iter().any(|v| !v.is_finite()) {
                return Err(VrrError::IrregularGrid {
                    reason: "non-finite axis value".into(),
                });
            }
            axis.sort_by(|a, b| a.partial_cmp(b).unwrap());
            axis.dedup();
        }
        if triples.len() != luminances.len() * rates.len() {
            return Err(VrrError::IrregularGrid {
                reason: format!(
                    "{} rows cannot tile a {} x {} grid",
                    triples.len(),
                    luminances.len(),
                    rates.len()
                ),
            });
        }
        let mut table = vec![vec![f64::NAN; rates.len()]; luminances.len()];
        for &(lum, rate, contrast) in triples {
            // Exact comparison is safe: the axis values came from these rows.
            let i = luminances.iter().position(|&v| v == lum).unwrap();
            let j = rates.iter().position(|&v| v == rate).unwrap();
            if !table[i][j].is_nan() {
                return Err(VrrError::IrregularGrid {
                    reason: format!("duplicate entry for ({lum} cd/m^2, {rate} Hz)"),
                });
            }
            table[i][j] = contrast;
        }
        Self::from_grid(luminances, rates, table)
    }

    pub fn luminances(&self) -> &[f64] {
        &self.luminances
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Bilinear interpolation in (log10 luminance, rate). Queries outside
    /// the tabulated rectangle are refused rather than extrapolated.
    pub fn contrast(&self, luminance: f64, rate: f64) -> Result<f64, VrrError> {
        if !luminance.is_finite() || !rate.is_finite() {
            return Err(VrrError::OutsideGrid { luminance, rate });
        }
        let cell = |xs: &[f64], x: f64| locate(xs, x).ok_or(VrrError::OutsideGrid { luminance, rate });
        let i = cell(&self.luminances, luminance)?;
        let j = cell(&self.rates, rate)?;
        // Luminance blends in log space; sensitivity-related quantities vary
        // roughly linearly over decades, not over cd/m^2.
        let lu = |x: f64| x.log10();
        let w = (lu(luminance) - lu(self.luminances[i]))
            / (lu(self.luminances[i + 1]) - lu(self.luminances[i]));
        let v = (rate - self.rates[j]) / (self.rates[j + 1] - self.rates[j]);
        let c00 = self.table[i][j];
        let c01 = self.table[i][j + 1];
        let c10 = self.table[i + 1][j];
        let c11 = self.table[i + 1][j + 1];
        Ok((1.0 - w) * ((1.0 - v) * c00 + v * c01) + w * ((1.0 - v) * c10 + v * c11))
    }
}

/// Bracketing cell for `x` in ascending `xs`: returns i with
/// xs[i] <= x <= xs[i+1]. The top edge maps into the last cell.
fn locate(xs: &[f64], x: f64) -> Option<usize> {
    let last = xs.len() - 1;
    if x < xs[0] || x > xs[last] {
        return None;
    }
    match xs.iter().rposition(|&v| v <= x) {
        Some(i) if i == last => Some(last - 1),
        Some(i) => Some(i),
        None => None,
    }
}

/// Physical description of a display panel, assuming square pixels.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplaySpec {
    pub diagonal_inches: f64,
    pub width_px: u32,
    pub height_px: u32,
    pub rr_min_hz: f64,
    pub rr_max_hz: f64,
    pub viewing_distance_m: f64,
}

impl DisplaySpec {
    pub fn validate(&self) -> Result<(), VrrError> {
        let invalid = |reason: String| Err(VrrError::InvalidDisplay { reason });
        if !self.diagonal_inches.is_finite() || self.diagonal_inches <= 0.0 {
            return invalid(format!("diagonal must be positive, got {}", self.diagonal_inches));
        }
        if self.width_px == 0 || self.height_px == 0 {
            return invalid("pixel dimensions must be nonzero".into());
        }
        if !self.viewing_distance_m.is_finite() || self.viewing_distance_m <= 0.0 {
            return invalid(format!(
                "viewing distance must be positive, got {}",
                self.viewing_distance_m
            ));
        }
        if !self.rr_min_hz.is_finite() || !self.rr_max_hz.is_finite() || self.rr_min_hz <= 0.0 {
            return invalid("refresh range must be positive and finite".into());
        }
        if self.rr_min_hz > self.rr_max_hz {
            return invalid(format!(
                "rr_min_hz = {} exceeds rr_max_hz = {}",
                self.rr_min_hz, self.rr_max_hz
            ));
        }
        Ok(())
    }

    /// Angular size (width, height) in degrees at the viewing distance.
    pub fn field_of_view(&self) -> Result<(f64, f64), VrrError> {
        self.validate()?;
        let diag_m = self.diagonal_inches * 0.0254;
        let aspect = (self.width_px as f64).hypot(self.height_px as f64);
        let width_m = diag_m * self.width_px as f64 / aspect;
        let height_m = diag_m * self.height_px as f64 / aspect;
        let angle = |extent_m: f64| {
            2.0 * (extent_m / (2.0 * self.viewing_distance_m)).atan().to_degrees()
        };
        Ok((angle(width_m), angle(height_m)))
    }
}

/// Outcome of [`flicker_free_range`] for one display and contrast table.
#[derive(Debug, Clone, PartialEq)]
pub struct FlickerFreeReport {
    /// Tabulated luminances the analysis ran at.
    pub luminances: Vec<f64>,
    /// Tabulated rates inside the display's refresh range.
    pub rates: Vec<f64>,
    /// Visibility threshold contrast per luminance: the reciprocal of the
    /// peak sensitivity of the full-screen field over the scan band.
    pub thresholds: Vec<f64>,
    /// Per luminance, the lowest refresh rate from which everything up to
    /// the top of the range stays below threshold. `Some(rr_min)` means the
    /// whole range is safe; `None` means even the top rate flickers.
    pub lowest_safe_hz: Vec<Option<f64>>,
    /// True when every luminance has a bound and the bounds do not increase
    /// with luminance.
    pub monotone_non_increasing: bool,
}

/// Find, per tabulated luminance, the refresh range of `display` that keeps
/// VRR switching below the visibility threshold.
///
/// The threshold at each luminance is 1 / max sensitivity of the full-screen
/// field across 0.5..120 Hz. Tabulated rates at or above threshold are
/// unsafe; the reported bound interpolates the crossing between the last
/// unsafe rate and the all-safe tail.
pub fn flicker_free_range(
    params: &ModelParams,
    display: &DisplaySpec,
    model: &VrrContrastModel,
    quad: &QuadratureSpec,
) -> Result<FlickerFreeReport, VrrError> {
    let (fov_w, fov_h) = display.field_of_view()?;
    let rates: Vec<f64> = model
        .rates
        .iter()
        .copied()
        .filter(|r| (display.rr_min_hz..=display.rr_max_hz).contains(r))
        .collect();
    if rates.is_empty() {
        return Err(VrrError::EmptyRateWindow {
            rr_min: display.rr_min_hz,
            rr_max: display.rr_max_hz,
        });
    }
    let steps = ((FLICKER_SCAN_MAX_HZ - FLICKER_SCAN_MIN_HZ) / FLICKER_SCAN_STEP_HZ).round();
    let mut thresholds = Vec::with_capacity(model.luminances.len());
    let mut lowest_safe = Vec::with_capacity(model.luminances.len());
    for &luminance in &model.luminances {
        let field = Field {
            geometry: Geometry::rect(fov_w, fov_h, 0.0),
            luminance,
        };
        let mut peak = 0.0f64;
        for step in 0..=steps as usize {
            let stimulus = Stimulus {
                field,
                frequency: FLICKER_SCAN_MIN_HZ + step as f64 * FLICKER_SCAN_STEP_HZ,
            };
            peak = peak.max(summation::sensitivity(params, &stimulus, quad)?);
        }
        let threshold = 1.0 / peak;
        thresholds.push(threshold);

        let contrasts: Vec<f64> = rates
            .iter()
            .map(|&r| model.contrast(luminance, r))
            .collect::<Result<_, _>>()?;
        let safe = |c: f64| c < threshold;
        lowest_safe.push(if !safe(contrasts[rates.len() - 1]) {
            None
        } else {
            // Walk down from the top while the tail stays safe, then place
            // the bound where the contrast crosses the threshold.
            let mut j = rates.len() - 1;
            while j > 0 && safe(contrasts[j - 1]) {
                j -= 1;
            }
            if j == 0 {
                Some(display.rr_min_hz)
            } else {
                let frac = (contrasts[j - 1] - threshold) / (contrasts[j - 1] - contrasts[j]);
                Some(rates[j - 1] + frac * (rates[j] - rates[j - 1]))
            }
        });
    }
    let monotone = lowest_safe.iter().all(|b| b.is_some())
        && lowest_safe
            .windows(2)
            .all(|w| w[1].unwrap() <= w[0].unwrap() + 1e-9);
    Ok(FlickerFreeReport {
        luminances: model.luminances.clone(),
        rates,
        thresholds,
        lowest_safe_hz: lowest_safe,
        monotone_non_increasing: monotone,
    })
}

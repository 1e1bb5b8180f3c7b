use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Errors from evaluating the sensitivity model itself.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter `{name}` = {value} violates: {constraint}")]
    Param {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },
    #[error("invalid stimulus: {reason}")]
    Stimulus { reason: String },
    /// The luminance-dependent frequency divisor came out non-positive, so the
    /// frequency axis cannot be scaled. Unreachable with the default
    /// parameters (the divisor is clamped below 0.1 cd/m²), but fitted
    /// parameter sets can get here.
    #[error("frequency scale D = {scale} is not positive at L = {luminance} cd/m^2")]
    DegenerateLuminance { luminance: f64, scale: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
    #[error("invalid integration domain: {0}")]
    InvalidDomain(String),
}

/// One bad CSV row: 1-based line number in the file plus what was wrong.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: header mismatch; expected columns `{expected}`, found `{found}`")]
    SchemaMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },
    #[error("{path}: no data rows")]
    Empty { path: PathBuf },
    #[error("{path}: {} malformed row(s); first: {}", errors.len(), errors[0])]
    MalformedRows { path: PathBuf, errors: Vec<RowError> },
    #[error("manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error("cannot parse {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("duplicate dataset name `{name}`")]
    DuplicateName { name: String },
    #[error("dataset `{name}`: every point was removed by the training filter")]
    AllPointsFiltered { name: String },
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("dataset `{dataset}` point {index}: prediction is not a finite positive sensitivity")]
    NonFinitePrediction { dataset: String, index: usize },
    #[error("no {what} available for this computation")]
    EmptySelection { what: &'static str },
    #[error("invalid fit configuration: {reason}")]
    InvalidConfig { reason: String },
    #[error("dataset `{dataset}` has non-positive scale {value}")]
    BadScale { dataset: String, value: f64 },
}

#[derive(Debug, Error)]
pub enum VrrError {
    #[error("invalid waveform request: {reason}")]
    InvalidWaveform { reason: String },
    #[error("window holds {cycles} cycles of the switch frequency; an integer count is required for leakage-free extraction")]
    NonIntegerCycles { cycles: f64 },
    #[error("switch frequency {f_rrs} Hz does not fall below the Nyquist limit of the waveform")]
    BinOutOfRange { f_rrs: f64 },
    #[error("({luminance} cd/m^2, {rate} Hz) lies outside the tabulated contrast grid; extrapolation is refused")]
    OutsideGrid { luminance: f64, rate: f64 },
    #[error("contrast table is not a full rectangular grid: {reason}")]
    IrregularGrid { reason: String },
    #[error("no tabulated refresh rates fall inside the display range [{rr_min}, {rr_max}] Hz")]
    EmptyRateWindow { rr_min: f64, rr_max: f64 },
    #[error("invalid display descriptor: {reason}")]
    InvalidDisplay { reason: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Error)]
pub enum ApplicationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid reference condition: {reason}")]
    InvalidReference { reason: String },
    #[error("invalid grid: {reason}")]
    InvalidGrid { reason: String },
}

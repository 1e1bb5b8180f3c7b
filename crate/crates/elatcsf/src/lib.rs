//! Flicker visibility modeling: a temporal contrast sensitivity kernel
//! extended with luminance, eccentricity, and area effects, plus tooling for
//! fitting the model to threshold data and for analyzing variable refresh
//! rate flicker on real displays.

// Negated comparisons like `!(x > 0.0)` are NaN guards throughout: they must
// reject NaN, which the suggested `partial_cmp` rewrites would obscure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications;
pub mod cff;
pub mod data;
pub mod error;
pub mod fitting;
pub mod params;
pub mod quadrature;
pub mod stimulus;
pub mod summation;
pub mod tcsf;
pub mod vrr;

pub use applications::{HeadsetSpec, LightingCondition};
pub use cff::{CffPrediction, CFF_BRACKET_MAX_HZ, CFF_BRACKET_MIN_HZ};
pub use data::{DataPoint, Dataset, DatasetRole, FieldShape, FilterOutcome, Measure};
pub use error::{
    ApplicationError, DataError, FitError, ModelError, QuadratureError, RowError, VrrError,
};
pub use fitting::{
    CffRmse, CvFold, CvReport, FitConfig, FitResult, OptimizerKind, ParamMask, ScaleConvention,
    SENSITIVITY_DB_FACTOR,
};
pub use params::{ModelParams, ParamId, TcsfIdmsParams};
pub use quadrature::{McEstimate, QuadRule, Quadrature, QuadratureSpec};
pub use stimulus::{Field, Geometry, Stimulus};
pub use summation::SensitivityEstimate;
pub use vrr::{
    AmplitudeSpectrum, DisplaySpec, FlickerFreeReport, LuminanceWaveform, VrrContrastModel,
    VrrWaveformSpec,
};

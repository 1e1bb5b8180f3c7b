//! Fitting the model to threshold datasets: a log-domain least-squares loss
//! with per-dataset sensitivity scales, smooth reparameterizations that keep
//! every proposal feasible, and a driver around the generic minimizers.

pub mod metrics;
pub mod optim;

use std::collections::BTreeMap;

use crate::data::{Dataset, DataPoint, Measure};
use crate::error::FitError;
use crate::params::{ModelParams, ParamId};
use crate::quadrature::{pairwise_sum, QuadratureSpec};
use crate::summation;
use crate::stimulus::Stimulus;

pub use metrics::{cff_rmse, cross_validate, s_rmse, CffRmse, CvFold, CvReport, SENSITIVITY_DB_FACTOR};
pub use optim::Minimization;

/// How a dataset's scale enters its residuals. Scaling the log prediction
/// stretches the curve's shape; scaling the prediction shifts it. Both
/// appear in the literature on pooled threshold fits, so the switch is
/// explicit rather than buried.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScaleConvention {
    /// residual = log10(measured) - s * log10(predicted)
    #[default]
    ScaleLogPrediction,
    /// residual = log10(measured) - log10(s * predicted)
    ScalePrediction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    #[default]
    Bfgs,
    NelderMead,
}

/// Which model parameters the optimizer may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ParamMask {
    free: [bool; ParamId::ALL.len()],
}

impl ParamMask {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn all() -> Self {
        Self { free: [true; ParamId::ALL.len()] }
    }

    pub fn from_ids(ids: &[ParamId]) -> Self {
        let mut mask = Self::none();
        for &id in ids {
            mask.set(id, true);
        }
        mask
    }

    pub fn with(mut self, id: ParamId) -> Self {
        self.set(id, true);
        self
    }

    pub fn set(&mut self, id: ParamId, free: bool) {
        self.free[id.index()] = free;
    }

    pub fn contains(&self, id: ParamId) -> bool {
        self.free[id.index()]
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        ParamId::ALL.into_iter().filter(|id| self.contains(*id))
    }

    pub fn count(&self) -> usize {
        self.free.iter().filter(|b| **b).count()
    }
}

/// Everything a fit needs besides the data and the starting point.
#[derive(Debug, Clone)]
pub struct FitConfig {
    pub free: ParamMask,
    /// Fit a sensitivity scale per dataset, except those marked
    /// `fixed_scale` in the manifest.
    pub fit_scales: bool,
    /// Weight of the scale regularizer that keeps per-dataset scales near 1.
    pub lambda: f64,
    pub convention: ScaleConvention,
    pub optimizer: OptimizerKind,
    pub max_iters: usize,
    /// Relative step for central-difference gradients.
    pub grad_step: f64,
    /// Stop when the gradient's infinity norm falls below this.
    pub gradient_tol: f64,
    pub quadrature: QuadratureSpec,
    /// Seed for cross-validation shuffling.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            free: ParamMask::none(),
            fit_scales: true,
            lambda: 1e-3,
            convention: ScaleConvention::default(),
            optimizer: OptimizerKind::default(),
            max_iters: 200,
            grad_step: 1e-5,
            gradient_tol: 1e-6,
            quadrature: QuadratureSpec::default(),
            seed: 7,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<(), FitError> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(FitError::InvalidConfig {
                reason: format!("lambda {} must be finite and >= 0", self.lambda),
            });
        }
        if !(self.grad_step > 0.0 && self.grad_step.is_finite()) {
            return Err(FitError::InvalidConfig {
                reason: format!("grad_step {} must be finite and > 0", self.grad_step),
            });
        }
        if !(self.gradient_tol >= 0.0) {
            return Err(FitError::InvalidConfig {
                reason: format!("gradient_tol {} must be >= 0", self.gradient_tol),
            });
        }
        Ok(())
    }
}

/// Result of a fit. `scales` has an entry for every dataset, 1 where the
/// scale was pinned or scale fitting was off.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: ModelParams,
    pub scales: BTreeMap<String, f64>,
    pub loss: f64,
    pub initial_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub loss_history: Vec<f64>,
}

/// Smooth bijections onto the real line so the optimizer can never propose
/// an infeasible value: positive parameters move in log space, `zeta` in
/// logit space (it must stay inside (0, 1)), `beta` in log(beta - 1) space
/// (pooling needs beta above 1). The two frequency-divisor coefficients are
/// genuinely sign-free and stay untransformed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Transform {
    Ln,
    Logit,
    LnMinusOne,
    Identity,
}

fn transform_of(id: ParamId) -> Transform {
    match id {
        ParamId::Xi
        | ParamId::Tau
        | ParamId::Kappa
        | ParamId::K1Lum
        | ParamId::K2Lum
        | ParamId::K3Lum
        | ParamId::K1Ecc
        | ParamId::K2Omega
        | ParamId::EThr => Transform::Ln,
        ParamId::Zeta => Transform::Logit,
        ParamId::Beta => Transform::LnMinusOne,
        ParamId::B1Omega | ParamId::K1Omega => Transform::Identity,
    }
}

fn to_internal(id: ParamId, v: f64) -> f64 {
    match transform_of(id) {
        Transform::Ln => v.ln(),
        Transform::Logit => (v / (1.0 - v)).ln(),
        Transform::LnMinusOne => (v - 1.0).ln(),
        Transform::Identity => v,
    }
}

fn from_internal(id: ParamId, x: f64) -> f64 {
    match transform_of(id) {
        Transform::Ln => x.exp(),
        Transform::Logit => 1.0 / (1.0 + (-x).exp()),
        Transform::LnMinusOne => 1.0 + x.exp(),
        Transform::Identity => x,
    }
}

/// A dataset can override the pooling threshold energy; everything else
/// comes from the shared parameter set.
fn dataset_params(base: &ModelParams, ds: &Dataset) -> ModelParams {
    let mut p = *base;
    if let Some(e_thr) = ds.e_thr_override {
        p.e_thr = e_thr;
    }
    p
}

/// log10 of the model's sensitivity at a measured point. A CFF row is read
/// as "sensitivity equals 1/contrast at the measured frequency", so its
/// prediction is evaluated there.
fn point_log10_prediction(
    p: &ModelParams,
    dataset: &str,
    index: usize,
    pt: &DataPoint,
    quad: &QuadratureSpec,
) -> Result<f64, FitError> {
    let frequency = match pt.measure {
        Measure::Sensitivity => pt.temp_freq.expect("sensitivity rows carry a frequency"),
        Measure::Cff => pt.value,
    };
    let s = summation::sensitivity(p, &Stimulus::new(pt.field(), frequency), quad)?;
    if !(s.is_finite() && s > 0.0) {
        return Err(FitError::NonFinitePrediction {
            dataset: dataset.to_string(),
            index,
        });
    }
    Ok(s.log10())
}

/// log10 of the measured sensitivity. At a CFF the modulation is exactly at
/// threshold, so the sensitivity there is 1/contrast (0 for full contrast).
fn point_target_log10(pt: &DataPoint) -> f64 {
    match pt.measure {
        Measure::Sensitivity => pt.value.log10(),
        Measure::Cff => -pt.contrast.log10(),
    }
}

fn scaled_log_prediction(convention: ScaleConvention, scale: f64, log_pred: f64) -> f64 {
    match convention {
        ScaleConvention::ScaleLogPrediction => scale * log_pred,
        ScaleConvention::ScalePrediction => log_pred + scale.log10(),
    }
}

/// Mean squared log-domain residual plus the scale regularizer:
/// sum of squared residuals over all points divided by the total point
/// count, plus lambda/D times the sum of squared log10 scales over the D
/// datasets. Datasets are accumulated in sorted-name order so the value
/// never depends on slice order.
pub fn loss(
    p: &ModelParams,
    datasets: &[Dataset],
    scales: &BTreeMap<String, f64>,
    cfg: &FitConfig,
) -> Result<f64, FitError> {
    p.validate()?;
    cfg.validate()?;
    let total: usize = datasets.iter().map(|d| d.points.len()).sum();
    if total == 0 {
        return Err(FitError::EmptySelection { what: "data points" });
    }
    let mut order: Vec<&Dataset> = datasets.iter().collect();
    order.sort_by(|a, b| a.name.cmp(&b.name));
    let mut residual_sums = Vec::with_capacity(order.len());
    let mut penalties = Vec::with_capacity(order.len());
    for ds in order {
        let scale = *scales.get(&ds.name).unwrap_or(&1.0);
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(FitError::BadScale {
                dataset: ds.name.clone(),
                value: scale,
            });
        }
        let pd = dataset_params(p, ds);
        let mut squares = Vec::with_capacity(ds.points.len());
        for (i, pt) in ds.points.iter().enumerate() {
            let log_pred = point_log10_prediction(&pd, &ds.name, i, pt, &cfg.quadrature)?;
            let r = point_target_log10(pt) - scaled_log_prediction(cfg.convention, scale, log_pred);
            squares.push(r * r);
        }
        residual_sums.push(pairwise_sum(&squares));
        let lp = scale.log10();
        penalties.push(lp * lp);
    }
    Ok(pairwise_sum(&residual_sums) / total as f64
        + cfg.lambda / datasets.len() as f64 * pairwise_sum(&penalties))
}

/// Names of datasets whose scale is optimized under this config, sorted.
fn free_scale_names(datasets: &[Dataset], cfg: &FitConfig) -> Vec<String> {
    if !cfg.fit_scales {
        return Vec::new();
    }
    let mut names: Vec<String> = datasets
        .iter()
        .filter(|d| !d.fixed_scale)
        .map(|d| d.name.clone())
        .collect();
    names.sort();
    names
}

/// The optimization vector: transformed free parameters in declaration
/// order, then log scales in sorted-name order.
struct Packing {
    ids: Vec<ParamId>,
    scale_names: Vec<String>,
}

impl Packing {
    fn build(p0: &ModelParams, datasets: &[Dataset], cfg: &FitConfig) -> Result<Self, FitError> {
        for id in cfg.free.ids() {
            let v = p0.get(id);
            let ok = match transform_of(id) {
                Transform::Ln => v > 0.0,
                Transform::Logit => v > 0.0 && v < 1.0,
                Transform::LnMinusOne => v > 1.0,
                Transform::Identity => v.is_finite(),
            };
            if !ok {
                return Err(FitError::InvalidConfig {
                    reason: format!(
                        "cannot free `{}` from starting value {v}; outside its feasible interior",
                        id.name()
                    ),
                });
            }
        }
        Ok(Self {
            ids: cfg.free.ids().collect(),
            scale_names: free_scale_names(datasets, cfg),
        })
    }

    fn dim(&self) -> usize {
        self.ids.len() + self.scale_names.len()
    }

    fn pack(&self, p: &ModelParams) -> Vec<f64> {
        let mut x: Vec<f64> = self.ids.iter().map(|&id| to_internal(id, p.get(id))).collect();
        // Scales always start at 1, i.e. 0 in log space.
        x.extend(std::iter::repeat_n(0.0, self.scale_names.len()));
        x
    }

    fn unpack(&self, p0: &ModelParams, x: &[f64]) -> (ModelParams, BTreeMap<String, f64>) {
        let mut p = *p0;
        for (i, &id) in self.ids.iter().enumerate() {
            p.set(id, from_internal(id, x[i]));
        }
        let mut scales = BTreeMap::new();
        for (j, name) in self.scale_names.iter().enumerate() {
            scales.insert(name.clone(), x[self.ids.len() + j].exp());
        }
        (p, scales)
    }
}

/// Gradient of the loss with respect to the optimization vector (transformed
/// free parameters, then log scales), by central differences with the
/// config's step. Exposed so the fitting surface can be checked directly.
pub fn loss_gradient(
    p0: &ModelParams,
    datasets: &[Dataset],
    cfg: &FitConfig,
) -> Result<Vec<f64>, FitError> {
    p0.validate()?;
    cfg.validate()?;
    let packing = Packing::build(p0, datasets, cfg)?;
    let x0 = packing.pack(p0);
    let f0 = loss_at(&packing, p0, datasets, cfg, &x0)?;
    let objective =
        |x: &[f64]| loss_at(&packing, p0, datasets, cfg, x).unwrap_or(f64::INFINITY);
    Ok(optim::gradient(&objective, &x0, f0, cfg.grad_step))
}

fn loss_at(
    packing: &Packing,
    p0: &ModelParams,
    datasets: &[Dataset],
    cfg: &FitConfig,
    x: &[f64],
) -> Result<f64, FitError> {
    let (p, scales) = packing.unpack(p0, x);
    loss(&p, datasets, &scales, cfg)
}

/// Fits the free parameters and scales, starting from `p0`. With nothing
/// free this degenerates to a single loss evaluation and returns the start
/// unchanged, which keeps "evaluate this parameter file" and "fit it" on one
/// code path.
pub fn fit(p0: &ModelParams, datasets: &[Dataset], cfg: &FitConfig) -> Result<FitResult, FitError> {
    p0.validate()?;
    cfg.validate()?;
    let packing = Packing::build(p0, datasets, cfg)?;
    let x0 = packing.pack(p0);
    let initial_loss = loss_at(&packing, p0, datasets, cfg, &x0)?;
    if packing.dim() == 0 || cfg.max_iters == 0 {
        let (params, _) = packing.unpack(p0, &x0);
        let mut scales = BTreeMap::new();
        for ds in datasets {
            scales.insert(ds.name.clone(), 1.0);
        }
        return Ok(FitResult {
            params,
            scales,
            loss: initial_loss,
            initial_loss,
            iterations: 0,
            converged: true,
            loss_history: vec![initial_loss],
        });
    }
    let objective =
        |x: &[f64]| loss_at(&packing, p0, datasets, cfg, x).unwrap_or(f64::INFINITY);
    let m = match cfg.optimizer {
        OptimizerKind::Bfgs => {
            optim::bfgs(&objective, x0, cfg.max_iters, cfg.grad_step, cfg.gradient_tol)
        }
        OptimizerKind::NelderMead => optim::nelder_mead(&objective, x0, cfg.max_iters),
    };
    let (params, fitted_scales) = packing.unpack(p0, &m.x);
    // Re-evaluate through the fallible path so a pathological final point
    // surfaces as an error instead of an infinity.
    let final_loss = loss(&params, datasets, &fitted_scales, cfg)?;
    let mut scales = fitted_scales;
    for ds in datasets {
        scales.entry(ds.name.clone()).or_insert(1.0);
    }
    Ok(FitResult {
        params,
        scales,
        loss: final_loss,
        initial_loss,
        iterations: m.iterations,
        converged: m.converged,
        loss_history: m.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DatasetRole, FieldShape};
    use crate::quadrature::QuadRule;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    fn fast_quad() -> QuadratureSpec {
        QuadratureSpec {
            rule: QuadRule::GaussLegendre,
            nodes_radial: 32,
            nodes_angular: 32,
            adaptive: false,
            rel_tol: 1e-4,
            max_refinements: 0,
        }
    }

    /// Synthetic threshold points computed from the given params, so a fit
    /// against them has a known answer.
    fn synthetic_dataset(p: &ModelParams, name: &str, quad: &QuadratureSpec) -> Dataset {
        let mut points = Vec::new();
        for &omega in &[4.0, 8.0, 16.0, 32.0] {
            for &lum in &[1.0, 20.0, 300.0] {
                let stim = Stimulus::new(
                    crate::stimulus::Field::new(crate::stimulus::Geometry::disc(1.0, 0.0), lum),
                    omega,
                );
                let s = summation::sensitivity(p, &stim, quad).unwrap();
                points.push(DataPoint {
                    temp_freq: Some(omega),
                    spat_freq: 0.0,
                    eccentricity: 0.0,
                    luminance: lum,
                    shape: FieldShape::Disc { area: std::f64::consts::PI },
                    contrast: (1.0 / s).min(1.0),
                    measure: Measure::Sensitivity,
                    value: s,
                });
            }
        }
        Dataset {
            name: name.into(),
            points,
            role: DatasetRole::TrainAndTest,
            fixed_scale: false,
            e_thr_override: None,
        }
    }

    #[test]
    fn transforms_round_trip() {
        let p = ModelParams::fitted();
        for id in ParamId::ALL {
            let v = p.get(id);
            let x = to_internal(id, v);
            assert!(rel(from_internal(id, x), v) < 1e-12, "{}", id.name());
        }
    }

    #[test]
    fn loss_is_independent_of_dataset_order() {
        let p = ModelParams::fitted();
        let cfg = FitConfig { quadrature: fast_quad(), ..FitConfig::default() };
        let a = synthetic_dataset(&p, "alpha", &cfg.quadrature);
        let mut b = synthetic_dataset(&p, "bravo", &cfg.quadrature);
        // Perturb one set so residuals are not all zero.
        for pt in &mut b.points {
            pt.value *= 1.1;
        }
        let scales = BTreeMap::new();
        let l1 = loss(&p, &[a.clone(), b.clone()], &scales, &cfg).unwrap();
        let l2 = loss(&p, &[b, a], &scales, &cfg).unwrap();
        assert_eq!(l1.to_bits(), l2.to_bits());
    }

    #[test]
    fn loss_vanishes_on_self_generated_data() {
        let p = ModelParams::fitted();
        let cfg = FitConfig { quadrature: fast_quad(), ..FitConfig::default() };
        let ds = synthetic_dataset(&p, "self", &cfg.quadrature);
        let l = loss(&p, &[ds], &BTreeMap::new(), &cfg).unwrap();
        assert!(l < 1e-25, "loss = {l}");
    }

    #[test]
    fn scale_conventions_agree_at_unit_scale() {
        let p = ModelParams::fitted();
        let base = FitConfig { quadrature: fast_quad(), ..FitConfig::default() };
        let ds = synthetic_dataset(&p, "s", &base.quadrature);
        let mut scales = BTreeMap::new();
        scales.insert("s".to_string(), 1.0);
        let a = loss(&p, std::slice::from_ref(&ds), &scales, &base).unwrap();
        let cfg2 = FitConfig { convention: ScaleConvention::ScalePrediction, ..base.clone() };
        let b = loss(&p, std::slice::from_ref(&ds), &scales, &cfg2).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        // And genuinely differ away from it.
        scales.insert("s".to_string(), 1.2);
        let a = loss(&p, std::slice::from_ref(&ds), &scales, &base).unwrap();
        let b = loss(&p, std::slice::from_ref(&ds), &scales, &cfg2).unwrap();
        assert!(rel(a, b) > 1e-6);
    }

    #[test]
    fn bad_scale_is_rejected() {
        let p = ModelParams::fitted();
        let cfg = FitConfig { quadrature: fast_quad(), ..FitConfig::default() };
        let ds = synthetic_dataset(&p, "s", &cfg.quadrature);
        let mut scales = BTreeMap::new();
        scales.insert("s".to_string(), -0.5);
        assert!(matches!(
            loss(&p, &[ds], &scales, &cfg),
            Err(FitError::BadScale { .. })
        ));
    }

    #[test]
    fn empty_mask_fit_is_a_no_op() {
        let p = ModelParams::fitted();
        let cfg = FitConfig {
            quadrature: fast_quad(),
            fit_scales: false,
            ..FitConfig::default()
        };
        let ds = synthetic_dataset(&p, "s", &cfg.quadrature);
        let r = fit(&p, &[ds], &cfg).unwrap();
        assert_eq!(r.params, p);
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
        assert_eq!(r.loss, r.initial_loss);
        assert_eq!(r.loss_history.len(), 1);
        assert_eq!(r.scales["s"], 1.0);
    }

    #[test]
    fn freeing_a_parameter_at_a_boundary_is_rejected() {
        let mut p = ModelParams::fitted();
        p.k1_ecc = 0.0;
        let cfg = FitConfig {
            free: ParamMask::from_ids(&[ParamId::K1Ecc]),
            quadrature: fast_quad(),
            ..FitConfig::default()
        };
        let ds = synthetic_dataset(&ModelParams::fitted(), "s", &cfg.quadrature);
        assert!(matches!(
            fit(&p, &[ds], &cfg),
            Err(FitError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn recovers_a_perturbed_gain() {
        let truth = ModelParams::fitted();
        let quad = fast_quad();
        let ds = synthetic_dataset(&truth, "s", &quad);
        let mut start = truth;
        start.tcsf.xi *= 1.3;
        let cfg = FitConfig {
            free: ParamMask::from_ids(&[ParamId::Xi]),
            fit_scales: false,
            quadrature: quad,
            max_iters: 60,
            ..FitConfig::default()
        };
        let r = fit(&start, &[ds], &cfg).unwrap();
        assert!(r.loss < r.initial_loss);
        assert!(
            rel(r.params.tcsf.xi, truth.tcsf.xi) < 5e-3,
            "xi = {} vs {}",
            r.params.tcsf.xi,
            truth.tcsf.xi
        );
    }

    #[test]
    fn gradient_is_finite_and_points_uphill_from_truth() {
        let truth = ModelParams::fitted();
        let quad = fast_quad();
        let ds = synthetic_dataset(&truth, "s", &quad);
        let mut start = truth;
        start.tcsf.xi *= 1.2;
        let cfg = FitConfig {
            free: ParamMask::from_ids(&[ParamId::Xi, ParamId::Tau]),
            fit_scales: false,
            quadrature: quad,
            ..FitConfig::default()
        };
        let g = loss_gradient(&start, std::slice::from_ref(&ds), &cfg).unwrap();
        assert_eq!(g.len(), 2);
        assert!(g.iter().all(|v| v.is_finite()));
        // xi sits above its true value, so the ln-xi component must be
        // positive (loss grows with xi here).
        assert!(g[0] > 0.0);
    }

    #[test]
    fn history_records_progress() {
        let truth = ModelParams::fitted();
        let quad = fast_quad();
        let ds = synthetic_dataset(&truth, "s", &quad);
        let mut start = truth;
        start.tcsf.xi *= 1.15;
        let cfg = FitConfig {
            free: ParamMask::from_ids(&[ParamId::Xi]),
            fit_scales: false,
            quadrature: quad,
            max_iters: 8,
            ..FitConfig::default()
        };
        let r = fit(&start, &[ds], &cfg).unwrap();
        assert!(r.loss_history.len() >= 2);
        assert!(r.loss_history.first().unwrap() >= r.loss_history.last().unwrap());
    }
}

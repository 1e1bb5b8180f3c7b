//! Error metrics on held-out data and seeded k-fold cross-validation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cff::{self, CffPrediction};
use crate::data::{Dataset, DatasetRole, Measure};
use crate::error::FitError;
use crate::params::ModelParams;
use crate::quadrature::{pairwise_sum, QuadratureSpec};

use super::{
    dataset_params, fit, point_log10_prediction, point_target_log10, scaled_log_prediction,
    FitConfig, ScaleConvention,
};

/// Converts a log10 sensitivity residual to decibels. Sensitivity is a
/// contrast ratio, and contrast is an amplitude-like quantity, so one log10
/// unit is 20 dB.
pub const SENSITIVITY_DB_FACTOR: f64 = 20.0;

/// Root-mean-square sensitivity error in dB over the sensitivity rows of
/// datasets that participate in evaluation, with each dataset's scale
/// applied under the given convention. Train-only datasets are excluded.
pub fn s_rmse(
    p: &ModelParams,
    datasets: &[Dataset],
    scales: &BTreeMap<String, f64>,
    convention: ScaleConvention,
    quad: &QuadratureSpec,
) -> Result<f64, FitError> {
    let mut order: Vec<&Dataset> = datasets
        .iter()
        .filter(|d| d.role == DatasetRole::TrainAndTest)
        .collect();
    order.sort_by(|a, b| a.name.cmp(&b.name));
    let mut squares = Vec::new();
    for ds in order {
        let scale = *scales.get(&ds.name).unwrap_or(&1.0);
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(FitError::BadScale {
                dataset: ds.name.clone(),
                value: scale,
            });
        }
        let pd = dataset_params(p, ds);
        for (i, pt) in ds.points.iter().enumerate() {
            if pt.measure != Measure::Sensitivity {
                continue;
            }
            let log_pred = point_log10_prediction(&pd, &ds.name, i, pt, quad)?;
            let r = point_target_log10(pt) - scaled_log_prediction(convention, scale, log_pred);
            let db = SENSITIVITY_DB_FACTOR * r;
            squares.push(db * db);
        }
    }
    if squares.is_empty() {
        return Err(FitError::EmptySelection { what: "sensitivity points" });
    }
    Ok((pairwise_sum(&squares) / squares.len() as f64).sqrt())
}

/// CFF error in Hz. Points whose predicted visibility boundary falls outside
/// the search bracket still count, pinned at the bracket edge, and are
/// tallied so a result dominated by sentinels is visible as such.
#[derive(Debug, Clone, Copy)]
pub struct CffRmse {
    pub hz: f64,
    pub points: usize,
    pub below_bracket: usize,
    pub above_bracket: usize,
}

/// Root-mean-square CFF prediction error over the CFF rows of datasets that
/// participate in evaluation.
pub fn cff_rmse(
    p: &ModelParams,
    datasets: &[Dataset],
    quad: &QuadratureSpec,
) -> Result<CffRmse, FitError> {
    let mut order: Vec<&Dataset> = datasets
        .iter()
        .filter(|d| d.role == DatasetRole::TrainAndTest)
        .collect();
    order.sort_by(|a, b| a.name.cmp(&b.name));
    let mut squares = Vec::new();
    let mut below = 0;
    let mut above = 0;
    for ds in order {
        let pd = dataset_params(p, ds);
        for pt in &ds.points {
            if pt.measure != Measure::Cff {
                continue;
            }
            let pred = cff::predict_cff(&pd, &pt.field(), pt.contrast, quad)?;
            match pred {
                CffPrediction::BelowBracket => below += 1,
                CffPrediction::AboveBracket => above += 1,
                CffPrediction::Cff(_) => {}
            }
            let err = pred.clamped_hz() - pt.value;
            squares.push(err * err);
        }
    }
    if squares.is_empty() {
        return Err(FitError::EmptySelection { what: "CFF points" });
    }
    Ok(CffRmse {
        hz: (pairwise_sum(&squares) / squares.len() as f64).sqrt(),
        points: squares.len(),
        below_bracket: below,
        above_bracket: above,
    })
}

/// One fold's outcome. `rmse_db` is absent when the fold's test split holds
/// no sensitivity rows from evaluation datasets.
#[derive(Debug, Clone)]
pub struct CvFold {
    pub fold: usize,
    pub train_points: usize,
    pub test_points: usize,
    pub rmse_db: Option<f64>,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct CvReport {
    pub k: usize,
    pub folds: Vec<CvFold>,
    /// Mean held-out RMSE over the folds that had test points.
    pub mean_rmse_db: f64,
    /// Datasets with fewer points than folds: kept in every training split,
    /// never tested.
    pub undersized: Vec<String>,
}

fn fnv1a(s: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Seeded stratified k-fold cross-validation: each dataset is shuffled with
/// its own name-derived stream off the config seed and dealt round-robin
/// into folds, so fold membership is stable under dataset reordering. Each
/// fold refits from `p0` on the remaining points and scores the held-out
/// ones. With k = 1 the single fold trains and tests on everything, which
/// measures pure training error.
pub fn cross_validate(
    p0: &ModelParams,
    datasets: &[Dataset],
    cfg: &FitConfig,
    k: usize,
) -> Result<CvReport, FitError> {
    if k == 0 {
        return Err(FitError::InvalidConfig { reason: "k must be >= 1".into() });
    }
    let mut undersized = Vec::new();
    let mut fold_of: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for ds in datasets {
        let n = ds.points.len();
        if k > 1 && n < k {
            undersized.push(ds.name.clone());
            continue;
        }
        let mut idx: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ fnv1a(&ds.name));
        idx.shuffle(&mut rng);
        let mut folds = vec![0usize; n];
        for (pos, &i) in idx.iter().enumerate() {
            folds[i] = pos % k;
        }
        fold_of.insert(ds.name.as_str(), folds);
    }
    let mut folds = Vec::with_capacity(k);
    let mut rmse_values = Vec::new();
    for fold in 0..k {
        let mut train = Vec::with_capacity(datasets.len());
        let mut test = Vec::with_capacity(datasets.len());
        for ds in datasets {
            let split = |keep: &dyn Fn(usize) -> bool| Dataset {
                name: ds.name.clone(),
                points: ds
                    .points
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| keep(*i))
                    .map(|(_, p)| *p)
                    .collect(),
                role: ds.role,
                fixed_scale: ds.fixed_scale,
                e_thr_override: ds.e_thr_override,
            };
            match fold_of.get(ds.name.as_str()) {
                None => train.push(ds.clone()),
                Some(_) if k == 1 => {
                    train.push(ds.clone());
                    test.push(ds.clone());
                }
                Some(assignment) => {
                    let tr = split(&|i| assignment[i] != fold);
                    let te = split(&|i| assignment[i] == fold);
                    if !tr.points.is_empty() {
                        train.push(tr);
                    }
                    if !te.points.is_empty() {
                        test.push(te);
                    }
                }
            }
        }
        let result = fit(p0, &train, cfg)?;
        let rmse_db = match s_rmse(
            &result.params,
            &test,
            &result.scales,
            cfg.convention,
            &cfg.quadrature,
        ) {
            Ok(v) => Some(v),
            Err(FitError::EmptySelection { .. }) => None,
            Err(e) => return Err(e),
        };
        if let Some(v) = rmse_db {
            rmse_values.push(v);
        }
        folds.push(CvFold {
            fold,
            train_points: train.iter().map(|d| d.points.len()).sum(),
            test_points: test.iter().map(|d| d.points.len()).sum(),
            rmse_db,
            loss: result.loss,
        });
    }
    let mean_rmse_db = if rmse_values.is_empty() {
        f64::NAN
    } else {
        pairwise_sum(&rmse_values) / rmse_values.len() as f64
    };
    Ok(CvReport { k, folds, mean_rmse_db, undersized })
}

//! The interval sweep: for every collection interval, rebuild the feature
//! table from the repaired 30 s series, split it chronologically, fit each
//! model on the head and score it on the tail.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{build_cfd, filter_weekdays, FeatureError};
use crate::metrics::{MetricsError, MetricsReport};
use crate::mlr::{fit_mlr_named, MlrError, MlrModel};
use crate::model::{DetectorSeries, FeatureDataset, Interval, ModelKind, Slot};
use crate::resample::{resample, ResampleError};
use crate::rf::{fit_forest_on, tune_hyperparams, RfError, RfHyperparams, RfModel, TrainingSet, Trial, TuneConfig};

#[derive(Debug, Error, PartialEq)]
pub enum ExperimentError {
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("splitting {rows} rows at {fraction} leaves one side empty")]
    EmptySplit { rows: usize, fraction: f64 },
    #[error("no intervals requested")]
    NoIntervals,
    #[error("no models requested")]
    NoModels,
    #[error("series belongs to detector {found}, experiment targets detector {expected}")]
    WrongDetector { expected: u32, found: u32 },
    #[error("{interval} min: {source}")]
    Resample { interval: Interval, source: ResampleError },
    #[error("{interval} min: {source}")]
    Features { interval: Interval, source: FeatureError },
    #[error("{model} at {interval} min: {source}")]
    Mlr { model: ModelKind, interval: Interval, source: MlrError },
    #[error("{model} at {interval} min: {source}")]
    Rf { model: ModelKind, interval: Interval, source: RfError },
    #[error("{model} at {interval} min: {source}")]
    Metrics { model: ModelKind, interval: Interval, source: MetricsError },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub detector_id: u32,
    pub intervals: Vec<Interval>,
    pub train_fraction: f64,
    pub models: Vec<ModelKind>,
    /// Trees in the final forest (tuning uses `tune.tune_trees`).
    pub rf_trees: usize,
    pub tune: TuneConfig,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            detector_id: 191,
            intervals: Interval::ALL.to_vec(),
            train_fraction: 0.8,
            models: alloc::vec![ModelKind::Mlr, ModelKind::Rf],
            rf_trees: 500,
            tune: TuneConfig::default(),
            seed: 0,
        }
    }
}

/// Order-preserving split: the first `floor(n * train_fraction)` rows train.
pub fn split_linear(
    ds: &FeatureDataset,
    train_fraction: f64,
) -> Result<(FeatureDataset, FeatureDataset), ExperimentError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(ExperimentError::BadFraction(train_fraction));
    }
    let n = ds.rows.len();
    let cut = libm::floor(n as f64 * train_fraction) as usize;
    if cut == 0 || cut == n {
        return Err(ExperimentError::EmptySplit { rows: n, fraction: train_fraction });
    }
    let part = |rows: &[crate::model::FeatureRow]| FeatureDataset {
        interval: ds.interval,
        detector_id: ds.detector_id,
        rows: rows.to_vec(),
    };
    Ok((part(&ds.rows[..cut]), part(&ds.rows[cut..])))
}

/// One fitted and scored (model, interval) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRun {
    pub report: MetricsReport,
    pub train_rows: usize,
    /// Window start of the last training row and first test row.
    pub train_end: Slot,
    pub test_start: Slot,
    /// Forest parameters chosen by tuning (RF only).
    pub rf_params: Option<RfHyperparams>,
    pub tune_trace: Vec<Trial>,
}

/// A fitted model of either family.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Mlr(MlrModel),
    Rf(RfModel),
}

impl FittedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            FittedModel::Mlr(_) => ModelKind::Mlr,
            FittedModel::Rf(_) => ModelKind::Rf,
        }
    }
}

/// Fit one model on `train`. RF parameters are tuned on a chronological
/// hold-out of `train` first; the returned trace lists every tried point.
pub fn fit_model(
    train: &FeatureDataset,
    model: ModelKind,
    cfg: &ExperimentConfig,
) -> Result<(FittedModel, Vec<Trial>), ExperimentError> {
    let interval = train.interval;
    let (x, y) = train.design();
    let names = FeatureDataset::FEATURE_NAMES;
    match model {
        ModelKind::Mlr => {
            let m = fit_mlr_named(&x, &y, &names).map_err(|source| ExperimentError::Mlr { model, interval, source })?;
            Ok((FittedModel::Mlr(m), Vec::new()))
        }
        ModelKind::Rf => {
            let rf_err = |source| ExperimentError::Rf { model, interval, source };
            let tuned = tune_hyperparams(&x, &y, &cfg.tune, cfg.seed).map_err(rf_err)?;
            let params = RfHyperparams { n_trees: cfg.rf_trees, ..tuned.best };
            let set = TrainingSet::new(&x, &y).map_err(rf_err)?;
            let names = names.iter().map(|s| (*s).into()).collect();
            let forest = fit_forest_on(&set, &params, names).map_err(rf_err)?;
            Ok((FittedModel::Rf(forest), tuned.trace))
        }
    }
}

pub fn run_interval(
    cfd: &FeatureDataset,
    model: ModelKind,
    cfg: &ExperimentConfig,
) -> Result<IntervalRun, ExperimentError> {
    run_interval_with_model(cfd, model, cfg).map(|(run, _)| run)
}

/// As [`run_interval`], also returning the fitted model.
pub fn run_interval_with_model(
    cfd: &FeatureDataset,
    model: ModelKind,
    cfg: &ExperimentConfig,
) -> Result<(IntervalRun, FittedModel), ExperimentError> {
    let interval = cfd.interval;
    let (train, test) = split_linear(cfd, cfg.train_fraction)?;
    let (fitted, tune_trace) = fit_model(&train, model, cfg)?;
    let (x_test, y_test) = test.design();
    let (predictions, rf_params) = match &fitted {
        FittedModel::Mlr(m) => {
            let p = m.predict_rows(&x_test).map_err(|source| ExperimentError::Mlr { model, interval, source })?;
            (p, None)
        }
        FittedModel::Rf(f) => {
            let p = f.predict_rows(&x_test).map_err(|source| ExperimentError::Rf { model, interval, source })?;
            (p, Some(f.hyperparams))
        }
    };

    let report = MetricsReport::evaluate(model, interval, &y_test, &predictions)
        .map_err(|source| ExperimentError::Metrics { model, interval, source })?;
    let run = IntervalRun {
        report,
        train_rows: train.rows.len(),
        train_end: train.rows.last().expect("non-empty train").stamp,
        test_start: test.rows[0].stamp,
        rf_params,
        tune_trace,
    };
    Ok((run, fitted))
}

/// Weekday feature table for `series` at `interval`.
pub fn weekday_dataset(series: &DetectorSeries, interval: Interval) -> Result<FeatureDataset, ExperimentError> {
    let resampled = resample(series, interval).map_err(|source| ExperimentError::Resample { interval, source })?;
    let weekdays = filter_weekdays(&resampled.records);
    build_cfd(&weekdays, interval, series.detector_id).map_err(|source| ExperimentError::Features { interval, source })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub interval: Interval,
    pub model: ModelKind,
    pub cfd_rows: usize,
    pub run: IntervalRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    /// Ordered by model, then ascending interval.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn reports(&self) -> impl Iterator<Item = &MetricsReport> + '_ {
        self.cells.iter().map(|c| &c.run.report)
    }
}

/// Run every (model, interval) cell on the repaired series of the target
/// detector. Each interval's table is derived from the 30 s series directly.
pub fn run_sweep(series: &DetectorSeries, cfg: &ExperimentConfig) -> Result<SweepResult, ExperimentError> {
    if series.detector_id != cfg.detector_id {
        return Err(ExperimentError::WrongDetector { expected: cfg.detector_id, found: series.detector_id });
    }
    let mut intervals = cfg.intervals.clone();
    intervals.sort();
    intervals.dedup();
    if intervals.is_empty() {
        return Err(ExperimentError::NoIntervals);
    }
    let mut models = cfg.models.clone();
    models.sort();
    models.dedup();
    if models.is_empty() {
        return Err(ExperimentError::NoModels);
    }

    let datasets = intervals
        .iter()
        .map(|&t| weekday_dataset(series, t))
        .collect::<Result<Vec<_>, _>>()?;

    let mut cells = Vec::with_capacity(models.len() * intervals.len());
    for &model in &models {
        for ds in &datasets {
            let run = run_interval(ds, model, cfg)?;
            cells.push(SweepCell { interval: ds.interval, model, cfd_rows: ds.rows.len(), run });
        }
    }
    Ok(SweepResult { config: ExperimentConfig { intervals, models, ..cfg.clone() }, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FeatureRow;
    use chrono::NaiveDate;

    fn ds(n: usize) -> FeatureDataset {
        let start = Slot::new(NaiveDate::from_ymd_opt(2022, 7, 4).unwrap(), 0).unwrap();
        let rows = (0..n)
            .map(|i| {
                let occ = ((i * 37) % 101) as f64;
                FeatureRow {
                    month: 7 + (i * 3 / n.max(1)) as u8,
                    time_norm: -1.0 + 2.0 * ((i % 48) as f64) / 48.0,
                    occ,
                    vol: 3.0 * occ + 100.0,
                    stamp: start.offset(i as i64),
                }
            })
            .collect();
        FeatureDataset { interval: Interval::HalfMinute, detector_id: 191, rows }
    }

    #[test]
    fn split_examples() {
        let (a, b) = split_linear(&ds(10), 0.8).unwrap();
        assert_eq!((a.len(), b.len()), (8, 2));
        let (a, b) = split_linear(&ds(5), 0.8).unwrap();
        assert_eq!((a.len(), b.len()), (4, 1));
        let full = ds(37);
        let (a, b) = split_linear(&full, 0.8).unwrap();
        assert_eq!([a.rows, b.rows].concat(), full.rows);
        assert!(matches!(split_linear(&ds(1), 0.8), Err(ExperimentError::EmptySplit { .. })));
        assert_eq!(split_linear(&ds(10), 1.0), Err(ExperimentError::BadFraction(1.0)));
    }

    #[test]
    fn perfectly_linear_target() {
        let run = run_interval(&ds(200), ModelKind::Mlr, &ExperimentConfig::default()).unwrap();
        assert!((run.report.r2 - 1.0).abs() < 1e-8);
        assert!(run.report.mae < 1e-8 && run.report.rmse < 1e-8);
        assert!(run.train_end < run.test_start);
    }

    #[test]
    fn rf_cell_is_deterministic_and_scaled() {
        let cfg = ExperimentConfig {
            rf_trees: 10,
            tune: TuneConfig { tune_trees: 4, max_depth: (2, 5), min_leaf: (3, 6), ..TuneConfig::default() },
            ..ExperimentConfig::default()
        };
        let mut data = ds(150);
        data.interval = Interval::FiveMinutes;
        let a = run_interval(&data, ModelKind::Rf, &cfg).unwrap();
        let b = run_interval(&data, ModelKind::Rf, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.report.scaled_mae, a.report.mae * 0.5 / 5.0);
        assert_eq!(a.rf_params.unwrap().n_trees, 10);
    }
}

//! Highway traffic-volume forecasting from 30-second loop-detector records.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! 1. [`ingest`]: pivot raw samples per detector, find holes, repair them by
//!    linear interpolation on lane-summed totals.
//! 2. [`resample`]: sum consecutive 30 s slots into 1, 2, 5, 10 or 15 minute
//!    windows labeled by their first slot.
//! 3. [`features`]: drop weekend days and build the `(month, time, occupancy)
//!    -> volume` feature table for one detector.
//! 4. [`mlr`] and [`rf`]: least-squares linear regression and a bagged
//!    regression-tree forest with grid-walk hyperparameter tuning.
//! 5. [`metrics`] and [`experiment`]: R², MAE, RMSE, interval-scaled errors
//!    and the cross-interval sweep.
//!
//! [`synth`] generates deterministic detector data in the same raw schema.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. With `std`, forest training runs trees in parallel; results are
//! identical either way.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod experiment;
pub mod features;
pub mod ingest;
pub mod matrix;
pub mod metrics;
pub mod mlr;
pub mod model;
pub mod resample;
pub mod rf;
pub mod synth;

pub use experiment::{
    fit_model, run_interval, run_interval_with_model, run_sweep, split_linear, weekday_dataset,
    ExperimentConfig, ExperimentError, FittedModel, IntervalRun, SweepCell, SweepResult,
};
pub use features::{build_cfd, filter_weekdays, normalize_time, weekday_index, FeatureError};
pub use ingest::{
    aggregate_lanes, detect_gaps, interpolate_linear, pivot_by_detector, GapDescriptor, GapReport,
    IngestError, RawSeries,
};
pub use matrix::Matrix;
pub use metrics::{mae, r_squared, rmse, scale_error, MetricsError, MetricsReport};
pub use mlr::{fit_mlr, fit_mlr_named, predict_mlr, MlrError, MlrModel};
pub use model::{
    validate_sample, AggregatedRecord, DetectorSeries, FeatureDataset, FeatureRow, Interval,
    ModelKind, RawSample, Reading, Slot, Violation,
};
pub use resample::{resample, ResampleError, Resampled};
pub use rf::{
    fit_forest, fit_tree, predict_forest, tune_hyperparams, RfError, RfHyperparams, RfModel,
    SearchMode, TreeNode, TuneConfig, TuneOutcome,
};
pub use synth::{generate, SynthConfig, SynthError, SynthOutput, TruthRecord};

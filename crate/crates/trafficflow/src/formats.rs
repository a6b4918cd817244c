//! Intermediate and model files: resampled dumps, CFD tables with their JSON
//! sidecar, saved models and tuning traces.

use std::io::Write;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use traffic_core::rf::Trial;
use traffic_core::{AggregatedRecord, FeatureDataset, MlrModel, RfHyperparams, RfModel, TreeNode};

use crate::raw::format_hms;

/// `date,time,month,volume_sum,occupancy_sum`; `time` is the window start.
pub fn write_resampled<W: Write>(sink: W, records: &[AggregatedRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["date", "time", "month", "volume_sum", "occupancy_sum"])?;
    for r in records {
        w.write_record([
            r.label_date.to_string(),
            format_hms(r.label_time),
            r.month.to_string(),
            r.volume_sum.to_string(),
            r.occupancy_sum.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `month,time_norm,occ,vol`.
pub fn write_cfd<W: Write>(sink: W, ds: &FeatureDataset) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["month", "time_norm", "occ", "vol"])?;
    for r in &ds.rows {
        w.write_record([r.month.to_string(), r.time_norm.to_string(), r.occ.to_string(), r.vol.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfdMeta {
    pub detector_id: u32,
    pub interval_min: f64,
    pub row_count: usize,
    pub start_date: Option<NaiveDate>,
    pub end_date: Option<NaiveDate>,
}

impl CfdMeta {
    pub fn of(ds: &FeatureDataset) -> CfdMeta {
        let range = ds.date_range();
        CfdMeta {
            detector_id: ds.detector_id,
            interval_min: ds.interval.minutes(),
            row_count: ds.rows.len(),
            start_date: range.map(|r| r.0),
            end_date: range.map(|r| r.1),
        }
    }
}

/// A fitted model as written by `train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SavedModel {
    Mlr {
        features: Vec<String>,
        /// Intercept first, then one per feature.
        coefficients: Vec<f64>,
    },
    Rf {
        features: Vec<String>,
        hyperparams: RfHyperparams,
        trees: Vec<TreeNode>,
    },
}

impl From<&MlrModel> for SavedModel {
    fn from(m: &MlrModel) -> Self {
        SavedModel::Mlr { features: m.feature_names.clone(), coefficients: m.coefficients.clone() }
    }
}

impl From<&RfModel> for SavedModel {
    fn from(m: &RfModel) -> Self {
        SavedModel::Rf { features: m.feature_names.clone(), hyperparams: m.hyperparams, trees: m.trees.clone() }
    }
}

impl SavedModel {
    pub fn predict(&self, x: &[f64]) -> anyhow::Result<f64> {
        match self {
            SavedModel::Mlr { features, coefficients } => {
                anyhow::ensure!(x.len() == features.len(), "expected {} features, got {}", features.len(), x.len());
                Ok(coefficients[0] + coefficients[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>())
            }
            SavedModel::Rf { features, hyperparams, trees } => {
                let m = RfModel { trees: trees.clone(), hyperparams: *hyperparams, feature_names: features.clone() };
                Ok(m.predict(x)?)
            }
        }
    }
}

/// `max_depth,min_leaf,val_rmse` in visiting order.
pub fn write_trace<W: Write>(sink: W, trace: &[Trial]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["max_depth", "min_leaf", "val_rmse"])?;
    for t in trace {
        w.write_record([t.max_depth.to_string(), t.min_leaf.to_string(), t.val_rmse.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use traffic_core::{fit_mlr_named, Matrix};

    #[test]
    fn mlr_json_shape() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0]]);
        let m = fit_mlr_named(&x, &[1.0, 3.0, 5.0], &["occ"]).unwrap();
        let saved = SavedModel::from(&m);
        let json = serde_json::to_value(&saved).unwrap();
        assert_eq!(json["type"], "mlr");
        assert_eq!(json["features"], serde_json::json!(["occ"]));
        assert_eq!(json["coefficients"].as_array().unwrap().len(), 2);
        assert!((saved.predict(&[4.0]).unwrap() - 9.0).abs() < 1e-9);
    }

    #[test]
    fn rf_round_trip() {
        let saved = SavedModel::Rf {
            features: vec!["a".into()],
            hyperparams: RfHyperparams::default(),
            trees: vec![TreeNode::Split {
                feature: 0,
                threshold: 1.5,
                left: Box::new(TreeNode::Leaf { value: 1.0, count: 2 }),
                right: Box::new(TreeNode::Leaf { value: 3.0, count: 2 }),
            }],
        };
        let text = serde_json::to_string(&saved).unwrap();
        assert!(text.starts_with(r#"{"type":"rf""#));
        let back: SavedModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, saved);
        assert_eq!(back.predict(&[2.0]).unwrap(), 3.0);
    }
}

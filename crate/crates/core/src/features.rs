//! Weekday selection and construction of the interval feature table.

use alloc::vec::Vec;

use chrono::{Datelike, NaiveDate};
use thiserror::Error;

use crate::model::{AggregatedRecord, FeatureDataset, FeatureRow, Interval, SECONDS_PER_DAY};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FeatureError {
    #[error("record {index} belongs to detector {found}, expected {expected}")]
    WrongDetector { index: usize, expected: u32, found: u32 },
    #[error("record {index} was aggregated at {found} min, expected {expected} min")]
    WrongInterval { index: usize, expected: Interval, found: Interval },
}

/// 1 = Sunday ... 7 = Saturday.
pub fn weekday_index(d: NaiveDate) -> u8 {
    d.weekday().num_days_from_sunday() as u8 + 1
}

pub fn is_weekday(d: NaiveDate) -> bool {
    (2..=6).contains(&weekday_index(d))
}

/// Keep records labeled Monday through Friday, preserving order.
pub fn filter_weekdays(records: &[AggregatedRecord]) -> Vec<AggregatedRecord> {
    records.iter().filter(|r| is_weekday(r.label_date)).cloned().collect()
}

/// Linear map of seconds-after-midnight onto [-1, 1).
pub fn normalize_time(secs: u32) -> f64 {
    2.0 * (f64::from(secs) / f64::from(SECONDS_PER_DAY)) - 1.0
}

/// One feature row per record: month, normalized label time, summed
/// occupancy and summed volume (the target).
pub fn build_cfd(
    records: &[AggregatedRecord],
    interval: Interval,
    detector_id: u32,
) -> Result<FeatureDataset, FeatureError> {
    let mut rows = Vec::with_capacity(records.len());
    for (index, r) in records.iter().enumerate() {
        if r.detector_id != detector_id {
            return Err(FeatureError::WrongDetector { index, expected: detector_id, found: r.detector_id });
        }
        if r.interval != interval {
            return Err(FeatureError::WrongInterval { index, expected: interval, found: r.interval });
        }
        rows.push(FeatureRow {
            month: r.month,
            time_norm: normalize_time(r.label_time),
            occ: r.occupancy_sum,
            vol: r.volume_sum,
            stamp: r.label_slot(),
        });
    }
    Ok(FeatureDataset { interval, detector_id, rows })
}

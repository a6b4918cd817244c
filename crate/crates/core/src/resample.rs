//! Time-unit adjustment: sum consecutive 30 s slots into fixed windows.
//!
//! A window of `n = T / 0.5 min` slots becomes one [`AggregatedRecord`] whose
//! volume and occupancy are slot sums and whose date, time and month come
//! from the window's first slot. Windows start at midnight, so they never
//! straddle two dates (2880 slots per day is divisible by every supported
//! window size). A trailing partial window is dropped and reported.

use alloc::vec::Vec;

use chrono::Datelike;
use thiserror::Error;

use crate::model::{AggregatedRecord, DetectorSeries, Interval};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ResampleError {
    #[error(
        "series for detector {detector_id} starts at slot {start_index} of its day; {interval} min windows need a start index divisible by {window}"
    )]
    Unaligned { detector_id: u32, interval: Interval, start_index: u16, window: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    pub records: Vec<AggregatedRecord>,
    pub dropped_slots: usize,
    pub dropped_volume: f64,
    pub dropped_occupancy: f64,
}

pub fn resample(series: &DetectorSeries, interval: Interval) -> Result<Resampled, ResampleError> {
    let window = interval.slots();
    if usize::from(series.start.index) % window != 0 {
        return Err(ResampleError::Unaligned {
            detector_id: series.detector_id,
            interval,
            start_index: series.start.index,
            window,
        });
    }

    let chunks = series.readings.chunks_exact(window);
    let tail = chunks.remainder();
    let records = chunks
        .enumerate()
        .map(|(w, slots)| {
            let first = series.slot_at(w * window);
            let (volume_sum, occupancy_sum) = slots
                .iter()
                .fold((0.0, 0.0), |(v, o), r| (v + r.volume, o + r.occupancy));
            AggregatedRecord {
                detector_id: series.detector_id,
                interval,
                label_date: first.date,
                label_time: first.start_secs(),
                month: first.date.month() as u8,
                volume_sum,
                occupancy_sum,
            }
        })
        .collect();

    Ok(Resampled {
        records,
        dropped_slots: tail.len(),
        dropped_volume: tail.iter().map(|r| r.volume).sum(),
        dropped_occupancy: tail.iter().map(|r| r.occupancy).sum(),
    })
}

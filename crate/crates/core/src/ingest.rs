//! Lane integration, per-detector pivoting, gap detection and linear gap
//! repair. Parsing the raw CSV lives in the `trafficflow` crate; everything
//! here works on already-parsed [`RawSample`]s.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::model::{validate_sample, DetectorSeries, RawSample, Reading, Slot};

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error(
        "detector {detector_id}: duplicate record for {date} slot ending {time_end}s (lines {first_line} and {second_line})"
    )]
    DuplicateTimestamp {
        detector_id: u32,
        date: chrono::NaiveDate,
        time_end: u32,
        first_line: usize,
        second_line: usize,
    },
    #[error("detector {detector_id}: {present} observed slots, at least 2 are needed to interpolate")]
    TooFewObservations { detector_id: u32, present: usize },
}

/// Lane-summed `(volume_total, occupancy_total)`, or `None` when any lane
/// cell is missing.
pub fn aggregate_lanes(s: &RawSample) -> Option<(f64, f64)> {
    let mut volume = 0u64;
    for v in &s.lane_volumes {
        volume += u64::from((*v)?);
    }
    let mut occupancy = 0u64;
    for o in &s.lane_occupancies {
        occupancy += u64::from((*o)?);
    }
    Some((volume as f64, occupancy as f64))
}

/// A detector's slots between its first and last record, with `None` for
/// every slot that is absent, has an empty cell, or fails validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub detector_id: u32,
    pub start: Slot,
    pub slots: Vec<Option<Reading>>,
    /// Records that were present but broke a sample invariant.
    pub invalid_samples: usize,
}

impl RawSeries {
    pub fn slot_at(&self, i: usize) -> Slot {
        self.start.offset(i as i64)
    }

    pub fn present(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }
}

/// Pivot samples into one sorted series per detector. Line numbers in
/// duplicate-key errors are 1-based positions in `samples`.
pub fn pivot_by_detector(samples: &[RawSample]) -> Result<BTreeMap<u32, RawSeries>, IngestError> {
    pivot_with_lines(samples.iter().enumerate().map(|(i, s)| (i + 1, s)))
}

/// As [`pivot_by_detector`], with caller-supplied source line numbers.
pub fn pivot_with_lines<'a, I>(samples: I) -> Result<BTreeMap<u32, RawSeries>, IngestError>
where
    I: IntoIterator<Item = (usize, &'a RawSample)>,
{
    struct Entry {
        slot: Slot,
        line: usize,
        reading: Option<Reading>,
    }

    let mut by_detector: BTreeMap<u32, (Vec<Entry>, usize)> = BTreeMap::new();
    for (line, s) in samples {
        let bucket = by_detector.entry(s.detector_id).or_default();
        let Some(slot) = s.slot() else {
            bucket.1 += 1;
            continue;
        };
        let valid = validate_sample(s).is_empty();
        if !valid {
            bucket.1 += 1;
        }
        let reading = if valid {
            aggregate_lanes(s).map(|(volume, occupancy)| Reading { volume, occupancy })
        } else {
            None
        };
        bucket.0.push(Entry { slot, line, reading });
    }

    let mut out = BTreeMap::new();
    for (detector_id, (mut entries, invalid_samples)) in by_detector {
        entries.sort_by_key(|e| (e.slot, e.line));
        for w in entries.windows(2) {
            if w[0].slot == w[1].slot {
                return Err(IngestError::DuplicateTimestamp {
                    detector_id,
                    date: w[0].slot.date,
                    time_end: w[0].slot.end_secs(),
                    first_line: w[0].line,
                    second_line: w[1].line,
                });
            }
        }
        let (Some(first), Some(last)) = (entries.first(), entries.last()) else {
            continue;
        };
        let start = first.slot;
        let len = (last.slot.ordinal() - start.ordinal() + 1) as usize;
        let mut slots = alloc::vec![None; len];
        for e in &entries {
            slots[(e.slot.ordinal() - start.ordinal()) as usize] = e.reading;
        }
        out.insert(detector_id, RawSeries { detector_id, start, slots, invalid_samples });
    }
    Ok(out)
}

/// A maximal run of missing slots strictly between two observed slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GapDescriptor {
    pub detector_id: u32,
    pub start: Slot,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub detector_id: u32,
    /// Interior gaps only, in chronological order.
    pub gaps: Vec<GapDescriptor>,
    /// All missing slots, interior and boundary.
    pub missing_slots: usize,
    /// Missing slots before the first or after the last observation.
    pub boundary_slots: usize,
    pub total_slots: usize,
}

impl GapReport {
    pub fn missing_fraction(&self) -> f64 {
        if self.total_slots == 0 {
            0.0
        } else {
            self.missing_slots as f64 / self.total_slots as f64
        }
    }

    pub fn boundary_fraction(&self) -> f64 {
        if self.total_slots == 0 {
            0.0
        } else {
            self.boundary_slots as f64 / self.total_slots as f64
        }
    }
}

fn observed_bounds(slots: &[Option<Reading>]) -> Option<(usize, usize)> {
    let first = slots.iter().position(Option::is_some)?;
    let last = slots.iter().rposition(Option::is_some)?;
    Some((first, last))
}

pub fn detect_gaps(series: &RawSeries) -> GapReport {
    let total_slots = series.slots.len();
    let missing_slots = series.slots.iter().filter(|s| s.is_none()).count();
    let mut gaps = Vec::new();
    let boundary_slots = match observed_bounds(&series.slots) {
        None => total_slots,
        Some((first, last)) => {
            let mut i = first;
            while i <= last {
                if series.slots[i].is_some() {
                    i += 1;
                    continue;
                }
                let run_start = i;
                while series.slots[i].is_none() {
                    i += 1;
                }
                gaps.push(GapDescriptor {
                    detector_id: series.detector_id,
                    start: series.slot_at(run_start),
                    length: i - run_start,
                });
            }
            first + (total_slots - 1 - last)
        }
    };
    GapReport { detector_id: series.detector_id, gaps, missing_slots, boundary_slots, total_slots }
}

/// Fill interior gaps on the straight line between the nearest observed
/// neighbors (volume and occupancy independently); extend the first and last
/// observations over leading and trailing gaps.
pub fn interpolate_linear(series: &RawSeries) -> Result<DetectorSeries, IngestError> {
    let present = series.present();
    let bounds = observed_bounds(&series.slots).filter(|_| present >= 2);
    let Some((first, last)) = bounds else {
        return Err(IngestError::TooFewObservations { detector_id: series.detector_id, present });
    };

    let mut readings = Vec::with_capacity(series.slots.len());
    let head = series.slots[first].expect("observed");
    readings.extend(core::iter::repeat_n(head, first));

    let mut gaps_filled = 0;
    let mut prev = first;
    readings.push(head);
    for i in first + 1..=last {
        let Some(right) = series.slots[i] else { continue };
        let left = series.slots[prev].expect("observed");
        let span = (i - prev) as f64;
        for k in 1..i - prev {
            let frac = k as f64 / span;
            readings.push(Reading {
                volume: left.volume + (right.volume - left.volume) * frac,
                occupancy: left.occupancy + (right.occupancy - left.occupancy) * frac,
            });
            gaps_filled += 1;
        }
        readings.push(right);
        prev = i;
    }

    let tail = series.slots[last].expect("observed");
    let trailing = series.slots.len() - 1 - last;
    readings.extend(core::iter::repeat_n(tail, trailing));

    Ok(DetectorSeries {
        detector_id: series.detector_id,
        start: series.start,
        readings,
        gaps_filled,
        boundary_filled: first + trailing,
    })
}

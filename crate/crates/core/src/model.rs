//! Shared domain types: raw detector samples, repaired series, aggregated
//! windows and feature rows.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

/// Length of one raw measurement slot.
pub const SLOT_SECONDS: u32 = 30;
pub const SECONDS_PER_DAY: u32 = 86_400;
pub const SLOTS_PER_DAY: u32 = SECONDS_PER_DAY / SLOT_SECONDS;
/// A 30 Hz sensor yields at most this many occupied samples in one slot.
pub const MAX_OCCUPANCY_PER_SLOT: u32 = 900;

/// One 30-second measurement slot: slot `index` of `date` covers
/// `[30 * index, 30 * index + 30)` seconds after midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub date: NaiveDate,
    pub index: u16,
}

impl Slot {
    pub fn new(date: NaiveDate, index: u16) -> Option<Slot> {
        (u32::from(index) < SLOTS_PER_DAY).then_some(Slot { date, index })
    }

    /// Slot whose interval ends `time_end` seconds after midnight of `date`.
    /// `time_end` must be a positive multiple of 30 no greater than 86400.
    pub fn from_time_end(date: NaiveDate, time_end: u32) -> Option<Slot> {
        if time_end == 0 || time_end > SECONDS_PER_DAY || !time_end.is_multiple_of(SLOT_SECONDS) {
            return None;
        }
        Slot::new(date, (time_end / SLOT_SECONDS - 1) as u16)
    }

    /// Slot whose interval starts `time_start` seconds after midnight.
    pub fn from_time_start(date: NaiveDate, time_start: u32) -> Option<Slot> {
        if time_start >= SECONDS_PER_DAY || !time_start.is_multiple_of(SLOT_SECONDS) {
            return None;
        }
        Slot::new(date, (time_start / SLOT_SECONDS) as u16)
    }

    pub fn start_secs(self) -> u32 {
        u32::from(self.index) * SLOT_SECONDS
    }

    pub fn end_secs(self) -> u32 {
        self.start_secs() + SLOT_SECONDS
    }

    /// Global slot number, contiguous across dates.
    pub fn ordinal(self) -> i64 {
        i64::from(self.date.num_days_from_ce()) * i64::from(SLOTS_PER_DAY) + i64::from(self.index)
    }

    pub fn from_ordinal(ordinal: i64) -> Option<Slot> {
        let per_day = i64::from(SLOTS_PER_DAY);
        let day = i32::try_from(ordinal.div_euclid(per_day)).ok()?;
        let date = NaiveDate::from_num_days_from_ce_opt(day)?;
        Slot::new(date, ordinal.rem_euclid(per_day) as u16)
    }

    /// The slot `n` positions later (or earlier for negative `n`).
    pub fn offset(self, n: i64) -> Slot {
        Slot::from_ordinal(self.ordinal() + n).expect("slot offset out of calendar range")
    }
}

/// One raw 30-second detector record.
///
/// Lane cells are `None` when the source cell was empty; such a sample marks
/// its slot as missing. Off-ramp and passage counts are carried but never
/// used downstream.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSample {
    pub date: NaiveDate,
    /// Seconds after midnight at which the 30 s interval ends (30..=86400).
    pub time_end: u32,
    pub detector_id: u32,
    pub lane_volumes: Vec<Option<u32>>,
    pub lane_occupancies: Vec<Option<u32>>,
    pub off_counts: Vec<Option<u32>>,
    pub psg_counts: Vec<Option<u32>>,
}

impl RawSample {
    /// A sample with every lane cell filled and no auxiliary counts.
    pub fn complete(
        date: NaiveDate,
        time_end: u32,
        detector_id: u32,
        volumes: &[u32],
        occupancies: &[u32],
    ) -> RawSample {
        RawSample {
            date,
            time_end,
            detector_id,
            lane_volumes: volumes.iter().copied().map(Some).collect(),
            lane_occupancies: occupancies.iter().copied().map(Some).collect(),
            off_counts: Vec::new(),
            psg_counts: Vec::new(),
        }
    }

    /// True when no volume or occupancy cell is empty.
    pub fn is_complete(&self) -> bool {
        self.lane_volumes.iter().chain(&self.lane_occupancies).all(Option::is_some)
    }

    pub fn slot(&self) -> Option<Slot> {
        Slot::from_time_end(self.date, self.time_end)
    }
}

/// A broken [`RawSample`] invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoLanes,
    LaneCountMismatch { volumes: usize, occupancies: usize },
    OccupancyExceedsMax { lane: usize, value: u32 },
    TimeOffGrid { time_end: u32 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoLanes => write!(f, "no lane columns"),
            Violation::LaneCountMismatch { volumes, occupancies } => write!(
                f,
                "lane list length mismatch ({volumes} volumes, {occupancies} occupancies)"
            ),
            Violation::OccupancyExceedsMax { lane, value } => write!(
                f,
                "occupancy exceeds {MAX_OCCUPANCY_PER_SLOT} (lane {}: {value})",
                lane + 1
            ),
            Violation::TimeOffGrid { time_end } => {
                write!(f, "time {time_end}s is not a 30 s interval end within the day")
            }
        }
    }
}

/// Every invariant `s` breaks; empty when the sample is valid. Missing cells
/// are not violations.
pub fn validate_sample(s: &RawSample) -> Vec<Violation> {
    let mut out = Vec::new();
    if s.lane_volumes.is_empty() && s.lane_occupancies.is_empty() {
        out.push(Violation::NoLanes);
    } else if s.lane_volumes.len() != s.lane_occupancies.len() {
        out.push(Violation::LaneCountMismatch {
            volumes: s.lane_volumes.len(),
            occupancies: s.lane_occupancies.len(),
        });
    }
    for (lane, occ) in s.lane_occupancies.iter().enumerate() {
        if let Some(value) = *occ {
            if value > MAX_OCCUPANCY_PER_SLOT {
                out.push(Violation::OccupancyExceedsMax { lane, value });
            }
        }
    }
    if s.slot().is_none() {
        out.push(Violation::TimeOffGrid { time_end: s.time_end });
    }
    out
}

/// Lane-summed volume and occupancy for one slot. Real-valued because
/// interpolated slots are not integral.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Reading {
    pub volume: f64,
    pub occupancy: f64,
}

/// A complete, gap-free series at 30 s cadence for one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSeries {
    pub detector_id: u32,
    pub start: Slot,
    pub readings: Vec<Reading>,
    /// Slots filled by interpolation between two observed neighbors.
    pub gaps_filled: usize,
    /// Slots before the first or after the last observation, filled by
    /// copying the nearest observed value.
    pub boundary_filled: usize,
}

impl DetectorSeries {
    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }

    pub fn slot_at(&self, i: usize) -> Slot {
        self.start.offset(i as i64)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Slot, Reading)> + '_ {
        self.readings.iter().enumerate().map(|(i, r)| (self.slot_at(i), *r))
    }
}

/// The supported collection intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Interval {
    HalfMinute,
    OneMinute,
    TwoMinutes,
    FiveMinutes,
    TenMinutes,
    FifteenMinutes,
}

impl Interval {
    pub const ALL: [Interval; 6] = [
        Interval::HalfMinute,
        Interval::OneMinute,
        Interval::TwoMinutes,
        Interval::FiveMinutes,
        Interval::TenMinutes,
        Interval::FifteenMinutes,
    ];

    /// Number of 30 s slots per window.
    pub fn slots(self) -> usize {
        match self {
            Interval::HalfMinute => 1,
            Interval::OneMinute => 2,
            Interval::TwoMinutes => 4,
            Interval::FiveMinutes => 10,
            Interval::TenMinutes => 20,
            Interval::FifteenMinutes => 30,
        }
    }

    pub fn minutes(self) -> f64 {
        self.slots() as f64 * 0.5
    }

    pub fn from_minutes(minutes: f64) -> Option<Interval> {
        Interval::ALL.into_iter().find(|t| t.minutes() == minutes)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Interval::HalfMinute => f.write_str("0.5"),
            other => write!(f, "{}", other.slots() / 2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnsupportedInterval(pub String);

impl fmt::Display for UnsupportedInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unsupported interval {:?} (expected one of 0.5, 1, 2, 5, 10, 15 minutes)",
            self.0
        )
    }
}

impl core::error::Error for UnsupportedInterval {}

impl FromStr for Interval {
    type Err = UnsupportedInterval;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.trim()
            .parse::<f64>()
            .ok()
            .and_then(Interval::from_minutes)
            .ok_or_else(|| UnsupportedInterval(s.into()))
    }
}

/// One window of summed slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedRecord {
    pub detector_id: u32,
    pub interval: Interval,
    /// Date of the first constituent slot.
    pub label_date: NaiveDate,
    /// Start time (seconds after midnight) of the first constituent slot.
    pub label_time: u32,
    pub month: u8,
    pub volume_sum: f64,
    pub occupancy_sum: f64,
}

impl AggregatedRecord {
    pub fn label_slot(&self) -> Slot {
        Slot::from_time_start(self.label_date, self.label_time).expect("label on slot grid")
    }
}

/// One row of the interval feature table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub month: u8,
    pub time_norm: f64,
    pub occ: f64,
    pub vol: f64,
    /// First 30 s slot of the window this row came from.
    pub stamp: Slot,
}

/// Chronologically ordered feature table for one detector at one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDataset {
    pub interval: Interval,
    pub detector_id: u32,
    pub rows: Vec<FeatureRow>,
}

impl FeatureDataset {
    pub const FEATURE_NAMES: [&'static str; 3] = ["month", "time_norm", "occ"];
    pub const TARGET_NAME: &'static str = "vol";

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Feature matrix (month, time_norm, occ) and target vector.
    pub fn design(&self) -> (crate::Matrix, Vec<f64>) {
        let mut data = Vec::with_capacity(self.rows.len() * 3);
        for r in &self.rows {
            data.extend_from_slice(&[f64::from(r.month), r.time_norm, r.occ]);
        }
        let x = crate::Matrix::from_vec(self.rows.len(), 3, data);
        let y = self.rows.iter().map(|r| r.vol).collect();
        (x, y)
    }

    pub fn date_range(&self) -> Option<(NaiveDate, NaiveDate)> {
        Some((self.rows.first()?.stamp.date, self.rows.last()?.stamp.date))
    }
}

/// Model families compared by the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mlr,
    Rf,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Mlr => "mlr",
            ModelKind::Rf => "rf",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mlr" => Ok(ModelKind::Mlr),
            "rf" => Ok(ModelKind::Rf),
            other => Err(alloc::format!("unknown model {other:?} (expected mlr or rf)")),
        }
    }
}

/// Inclusive calendar iteration.
pub fn dates_between(start: NaiveDate, end: NaiveDate) -> impl Iterator<Item = NaiveDate> {
    let days = (end - start).num_days().max(-1) + 1;
    (0..days).map(move |d| start + Duration::days(d))
}

//! Deterministic synthetic loop-detector records in the raw input schema.
//!
//! Per-lane 30 s volumes follow a diurnal mean curve (commute peaks on
//! weekdays, a single broad hump on weekends) plus AR(1) noise; occupancy is
//! an increasing, noisy function of volume capped at 900. A configurable
//! fraction of slots is blanked and the true values are kept aside so gap
//! repair can be scored.
//!
//! Every (detector, date) pair draws from its own ChaCha8 stream, so output
//! does not depend on generation order or thread count. Missingness uses a
//! separate stream: changing `missing_rate` never changes the true values.

use alloc::vec::Vec;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::is_weekday;
use crate::model::{dates_between, RawSample, MAX_OCCUPANCY_PER_SLOT, SLOTS_PER_DAY, SLOT_SECONDS};

const MISSING_STREAM_KEY: u64 = 0x6d69_7373_696e_6721;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("start date {start} is after end date {end}")]
    DateOrder { start: NaiveDate, end: NaiveDate },
    #[error("missing_rate must lie in [0, 1), got {0}")]
    MissingRate(f64),
    #[error("invalid generator setting: {0}")]
    Invalid(&'static str),
}

/// Gaussian bump `amplitude * exp(-(h - center)^2 / (2 width^2))`, hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: f64,
    pub amplitude: f64,
    pub width: f64,
}

impl Bump {
    fn at(&self, hour: f64) -> f64 {
        let z = (hour - self.center) / self.width;
        self.amplitude * libm::exp(-0.5 * z * z)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub detector_ids: Vec<u32>,
    pub lanes: usize,
    pub missing_rate: f64,
    /// Mean length of a missing run; 1 means independent slots.
    pub burst_mean: f64,
    pub seed: u64,
    /// Per-lane 30 s volume floor, vehicles.
    pub base_volume: f64,
    pub morning_peak: Bump,
    pub evening_peak: Bump,
    pub midday: Bump,
    pub weekend: Bump,
    /// Relative volume change per month away from September.
    pub month_trend: f64,
    /// Stationary standard deviation of per-lane volume noise.
    pub lane_noise_sd: f64,
    /// Lag-1 autocorrelation of the volume noise.
    pub noise_ar: f64,
    /// Occupied 30 Hz samples per vehicle in free flow.
    pub occ_per_vehicle: f64,
    /// Growth of per-vehicle occupancy with mean flow (slower traffic).
    pub congestion: f64,
    /// Log-scale standard deviation of multiplicative occupancy noise.
    pub occ_noise: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            start_date: NaiveDate::from_ymd_opt(2022, 7, 1).expect("valid date"),
            end_date: NaiveDate::from_ymd_opt(2022, 11, 30).expect("valid date"),
            detector_ids: alloc::vec![66, 191, 192, 193, 270],
            lanes: 3,
            missing_rate: 0.0114,
            burst_mean: 1.0,
            seed: 78,
            base_volume: 1.5,
            morning_peak: Bump { center: 7.5, amplitude: 11.0, width: 1.2 },
            evening_peak: Bump { center: 17.0, amplitude: 13.0, width: 1.5 },
            midday: Bump { center: 13.0, amplitude: 5.0, width: 3.5 },
            weekend: Bump { center: 14.0, amplitude: 7.0, width: 3.0 },
            month_trend: 0.03,
            lane_noise_sd: 1.2,
            noise_ar: 0.7,
            occ_per_vehicle: 9.0,
            congestion: 0.06,
            occ_noise: 0.15,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.start_date > self.end_date {
            return Err(SynthError::DateOrder { start: self.start_date, end: self.end_date });
        }
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(SynthError::MissingRate(self.missing_rate));
        }
        if self.lanes == 0 {
            return Err(SynthError::Invalid("lanes must be positive"));
        }
        if self.detector_ids.is_empty() {
            return Err(SynthError::Invalid("detector_ids is empty"));
        }
        if !(self.burst_mean >= 1.0) {
            return Err(SynthError::Invalid("burst_mean must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.noise_ar) {
            return Err(SynthError::Invalid("noise_ar must lie in [0, 1)"));
        }
        let non_negative = [self.base_volume, self.lane_noise_sd, self.occ_per_vehicle, self.congestion, self.occ_noise];
        if non_negative.iter().any(|v| !(*v >= 0.0)) {
            return Err(SynthError::Invalid("volume, noise and occupancy settings must be non-negative"));
        }
        for b in [self.morning_peak, self.evening_peak, self.midday, self.weekend] {
            if !(b.width > 0.0) {
                return Err(SynthError::Invalid("bump widths must be positive"));
            }
        }
        Ok(())
    }

    /// Standard deviation of the noise on a lane-summed slot volume.
    pub fn volume_noise_sd(&self) -> f64 {
        self.lane_noise_sd * libm::sqrt(self.lanes as f64)
    }

    /// Expected per-lane 30 s volume at `hour` on `date`.
    pub fn mean_lane_volume(&self, date: NaiveDate, hour: f64) -> f64 {
        let shape = if is_weekday(date) {
            self.morning_peak.at(hour) + self.evening_peak.at(hour) + self.midday.at(hour)
        } else {
            self.weekend.at(hour)
        };
        let trend = 1.0 + self.month_trend * (date.month() as f64 - 9.0);
        (self.base_volume + shape) * trend.max(0.0)
    }
}

/// True lane-summed values of one blanked slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub detector_id: u32,
    pub date: NaiveDate,
    pub time_end: u32,
    pub true_vol: u32,
    pub true_occ: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SynthOutput {
    pub samples: Vec<RawSample>,
    pub truth: Vec<TruthRecord>,
}

fn stream_key(detector_id: u32, date: NaiveDate) -> u64 {
    (u64::from(detector_id) << 32) | u64::from(date.num_days_from_ce() as u32)
}

fn day_missing_mask(cfg: &SynthConfig, detector_id: u32, date: NaiveDate) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ MISSING_STREAM_KEY);
    rng.set_stream(stream_key(detector_id, date));
    let slots = SLOTS_PER_DAY as usize;
    if cfg.missing_rate == 0.0 {
        return alloc::vec![false; slots];
    }
    if cfg.burst_mean <= 1.0 {
        return (0..slots).map(|_| rng.random::<f64>() < cfg.missing_rate).collect();
    }
    // Two-state chain whose stationary missing share is `missing_rate` and
    // whose runs are geometric with mean `burst_mean`.
    let start = cfg.missing_rate / (cfg.burst_mean * (1.0 - cfg.missing_rate));
    let stay = 1.0 - 1.0 / cfg.burst_mean;
    let mut in_burst = false;
    (0..slots)
        .map(|_| {
            let u = rng.random::<f64>();
            in_burst = if in_burst { u < stay } else { u < start };
            in_burst
        })
        .collect()
}

/// All 2880 records of one detector-day, and the truth for blanked slots.
pub fn generate_day(cfg: &SynthConfig, detector_id: u32, date: NaiveDate) -> SynthOutput {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream_key(detector_id, date));
    let missing = day_missing_mask(cfg, detector_id, date);

    let rho = cfg.noise_ar;
    let innovation = cfg.lane_noise_sd * libm::sqrt(1.0 - rho * rho);
    let mut noise: Vec<f64> =
        (0..cfg.lanes).map(|_| cfg.lane_noise_sd * rng.sample::<f64, _>(StandardNormal)).collect();

    let mut out = SynthOutput::default();
    out.samples.reserve(SLOTS_PER_DAY as usize);
    for slot in 0..SLOTS_PER_DAY {
        let time_end = (slot + 1) * SLOT_SECONDS;
        let mid_hour = (f64::from(slot) + 0.5) * f64::from(SLOT_SECONDS) / 3600.0;
        let mean = cfg.mean_lane_volume(date, mid_hour);
        let per_vehicle = cfg.occ_per_vehicle * (1.0 + cfg.congestion * mean);

        let mut volumes = Vec::with_capacity(cfg.lanes);
        let mut occupancies = Vec::with_capacity(cfg.lanes);
        for e in noise.iter_mut() {
            if slot > 0 {
                *e = rho * *e + innovation * rng.sample::<f64, _>(StandardNormal);
            }
            let vol = libm::round(mean + *e).max(0.0) as u32;
            let jitter = libm::exp(cfg.occ_noise * rng.sample::<f64, _>(StandardNormal));
            let occ = libm::round(f64::from(vol) * per_vehicle * jitter).min(f64::from(MAX_OCCUPANCY_PER_SLOT)) as u32;
            volumes.push(vol);
            occupancies.push(occ);
        }

        if missing[slot as usize] {
            out.truth.push(TruthRecord {
                detector_id,
                date,
                time_end,
                true_vol: volumes.iter().sum(),
                true_occ: occupancies.iter().sum(),
            });
            out.samples.push(RawSample {
                date,
                time_end,
                detector_id,
                lane_volumes: alloc::vec![None; cfg.lanes],
                lane_occupancies: alloc::vec![None; cfg.lanes],
                off_counts: Vec::new(),
                psg_counts: Vec::new(),
            });
        } else {
            out.samples.push(RawSample::complete(date, time_end, detector_id, &volumes, &occupancies));
        }
    }
    out
}

/// Every configured detector-day, ordered by date, then detector, then time.
pub fn generate(cfg: &SynthConfig) -> Result<SynthOutput, SynthError> {
    cfg.validate()?;
    let jobs: Vec<(NaiveDate, u32)> = dates_between(cfg.start_date, cfg.end_date)
        .flat_map(|d| cfg.detector_ids.iter().map(move |&id| (d, id)))
        .collect();

    #[cfg(feature = "std")]
    let days: Vec<SynthOutput> = {
        use rayon::prelude::*;
        jobs.par_iter().map(|&(d, id)| generate_day(cfg, id, d)).collect()
    };
    #[cfg(not(feature = "std"))]
    let days: Vec<SynthOutput> = jobs.iter().map(|&(d, id)| generate_day(cfg, id, d)).collect();

    let mut out = SynthOutput::default();
    for day in days {
        out.samples.extend(day.samples);
        out.truth.extend(day.truth);
    }
    Ok(out)
}

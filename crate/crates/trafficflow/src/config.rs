//! `key = value` config files. `#` starts a comment; blank lines are
//! ignored; unknown keys are errors.
//!
//! Sweep keys: `input_path`, `output_dir`, `detector_id`, `intervals`,
//! `train_fraction`, `models`, `seed`, `time_label`, `rf.n_trees`,
//! `rf.tune_trees`, `rf.patience`, `rf.search`, `rf.max_depth`,
//! `rf.min_leaf`, `rf.bootstrap`.
//!
//! Synth keys: `start_date`, `end_date`, `detector_ids`, `lanes`,
//! `missing_rate`, `burst_mean`, `seed`, `base_volume`, `morning_peak`,
//! `evening_peak`, `midday`, `weekend` (each `center,amplitude,width`),
//! `month_trend`, `lane_noise_sd`, `noise_ar`, `occ_per_vehicle`,
//! `congestion`, `occ_noise`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use chrono::NaiveDate;
use traffic_core::synth::Bump;
use traffic_core::{ExperimentConfig, Interval, ModelKind, SearchMode, SynthConfig};

use crate::raw::TimeLabel;

/// Parsed pairs, each remembering its line for diagnostics.
#[derive(Debug, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<KeyValues> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| anyhow!("line {line_no}: expected key = value, got {content:?}"))?;
            let key = key.trim().to_string();
            if key.is_empty() {
                bail!("line {line_no}: empty key");
            }
            if let Some((prev, _)) = entries.insert(key.clone(), (line_no, value.trim().to_string())) {
                bail!("line {line_no}: key {key:?} already set on line {prev}");
            }
        }
        Ok(KeyValues { entries })
    }

    pub fn read(path: &Path) -> Result<KeyValues> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        KeyValues::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn get<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|e| anyhow!("line {line}: {key}: {e}")),
        }
    }

    fn list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(',')
                .map(|p| p.trim().parse().map_err(|e| anyhow!("line {line}: {key}: {e}")))
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    fn range(&mut self, key: &str) -> Result<Option<(usize, usize)>> {
        match self.list::<usize>(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 && v[0] <= v[1] => Ok(Some((v[0], v[1]))),
            Some(_) => bail!("{key}: expected lo,hi with lo <= hi"),
        }
    }

    fn bump(&mut self, key: &str, into: &mut Bump) -> Result<()> {
        if let Some(v) = self.list::<f64>(key)? {
            let [center, amplitude, width] = v[..] else {
                bail!("{key}: expected center,amplitude,width");
            };
            *into = Bump { center, amplitude, width };
        }
        Ok(())
    }

    fn finish(self) -> Result<()> {
        if let Some((key, (line, _))) = self.entries.into_iter().next() {
            bail!("line {line}: unknown key {key:?}");
        }
        Ok(())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn parse_search(s: &str) -> Result<SearchMode, String> {
    match s {
        "early" | "early_stopping" => Ok(SearchMode::EarlyStopping),
        "exhaustive" => Ok(SearchMode::Exhaustive),
        other => Err(format!("unknown search mode {other:?} (expected early or exhaustive)")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub input_path: PathBuf,
    pub output_dir: PathBuf,
    pub time_label: TimeLabel,
    pub experiment: ExperimentConfig,
}

impl SweepSettings {
    /// Relative paths are resolved against `base` (the config's directory).
    pub fn from_kv(mut kv: KeyValues, base: &Path) -> Result<SweepSettings> {
        let input: String = kv.get("input_path")?.ok_or_else(|| anyhow!("input_path is required"))?;
        let output: String = kv.get("output_dir")?.unwrap_or_else(|| "sweep_out".into());
        let mut exp = ExperimentConfig::default();
        set(&mut exp.detector_id, kv.get("detector_id")?);
        set(&mut exp.intervals, kv.list::<Interval>("intervals")?);
        set(&mut exp.train_fraction, kv.get("train_fraction")?);
        set(&mut exp.models, kv.list::<ModelKind>("models")?);
        set(&mut exp.seed, kv.get("seed")?);
        set(&mut exp.rf_trees, kv.get("rf.n_trees")?);
        set(&mut exp.tune.tune_trees, kv.get("rf.tune_trees")?);
        set(&mut exp.tune.patience, kv.get("rf.patience")?);
        set(&mut exp.tune.max_depth, kv.range("rf.max_depth")?);
        set(&mut exp.tune.min_leaf, kv.range("rf.min_leaf")?);
        set(&mut exp.tune.bootstrap, kv.get("rf.bootstrap")?);
        if let Some((line, v)) = kv.take("rf.search") {
            exp.tune.mode = parse_search(&v).map_err(|e| anyhow!("line {line}: rf.search: {e}"))?;
        }
        let time_label = kv.get("time_label")?.unwrap_or_default();
        kv.finish()?;
        Ok(SweepSettings { input_path: base.join(input), output_dir: base.join(output), time_label, experiment: exp })
    }

    pub fn read(path: &Path) -> Result<SweepSettings> {
        let kv = KeyValues::read(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        SweepSettings::from_kv(kv, base).with_context(|| format!("in config {}", path.display()))
    }
}

pub fn synth_from_kv(mut kv: KeyValues) -> Result<SynthConfig> {
    let mut c = SynthConfig::default();
    set(&mut c.start_date, kv.get::<NaiveDate>("start_date")?);
    set(&mut c.end_date, kv.get::<NaiveDate>("end_date")?);
    set(&mut c.detector_ids, kv.list("detector_ids")?);
    set(&mut c.lanes, kv.get("lanes")?);
    set(&mut c.missing_rate, kv.get("missing_rate")?);
    set(&mut c.burst_mean, kv.get("burst_mean")?);
    set(&mut c.seed, kv.get("seed")?);
    set(&mut c.base_volume, kv.get("base_volume")?);
    kv.bump("morning_peak", &mut c.morning_peak)?;
    kv.bump("evening_peak", &mut c.evening_peak)?;
    kv.bump("midday", &mut c.midday)?;
    kv.bump("weekend", &mut c.weekend)?;
    set(&mut c.month_trend, kv.get("month_trend")?);
    set(&mut c.lane_noise_sd, kv.get("lane_noise_sd")?);
    set(&mut c.noise_ar, kv.get("noise_ar")?);
    set(&mut c.occ_per_vehicle, kv.get("occ_per_vehicle")?);
    set(&mut c.congestion, kv.get("congestion")?);
    set(&mut c.occ_noise, kv.get("occ_noise")?);
    kv.finish()?;
    c.validate()?;
    Ok(c)
}

pub fn read_synth_config(path: &Path) -> Result<SynthConfig> {
    synth_from_kv(KeyValues::read(path)?).with_context(|| format!("in config {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_keys() {
        let text = "# experiment\ninput_path = data.csv\ndetector_id=191\nintervals = 0.5, 1,15\n\
                    train_fraction=0.75\nrf.n_trees = 20 # small\nrf.tune_trees=5\nrf.patience=2\nseed=7\nrf.search=exhaustive\n";
        let s = SweepSettings::from_kv(KeyValues::parse(text).unwrap(), Path::new("/cfg")).unwrap();
        assert_eq!(s.input_path, PathBuf::from("/cfg/data.csv"));
        assert_eq!(s.experiment.intervals, vec![Interval::HalfMinute, Interval::OneMinute, Interval::FifteenMinutes]);
        assert_eq!(s.experiment.train_fraction, 0.75);
        assert_eq!((s.experiment.rf_trees, s.experiment.tune.tune_trees, s.experiment.tune.patience), (20, 5, 2));
        assert_eq!(s.experiment.seed, 7);
        assert_eq!(s.experiment.tune.mode, SearchMode::Exhaustive);
    }

    #[test]
    fn errors_name_the_line() {
        let err = SweepSettings::from_kv(KeyValues::parse("input_path=a\nbogus=1\n").unwrap(), Path::new("")).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = SweepSettings::from_kv(KeyValues::parse("input_path=a\nintervals=7\n").unwrap(), Path::new("")).unwrap_err();
        assert!(err.to_string().contains("unsupported interval"), "{err}");
        assert!(KeyValues::parse("a=1\na=2\n").is_err());
        assert!(KeyValues::parse("novalue\n").is_err());
        assert!(SweepSettings::from_kv(KeyValues::parse("seed=1\n").unwrap(), Path::new("")).is_err());
    }

    #[test]
    fn synth_keys() {
        let c = synth_from_kv(KeyValues::parse("start_date=2022-07-04\nend_date=2022-07-05\ndetector_ids=191\nmorning_peak=8,10,1\n").unwrap())
            .unwrap();
        assert_eq!(c.detector_ids, vec![191]);
        assert_eq!(c.morning_peak, Bump { center: 8.0, amplitude: 10.0, width: 1.0 });
        assert!(synth_from_kv(KeyValues::parse("missing_rate=1.5\n").unwrap()).is_err());
        assert!(synth_from_kv(KeyValues::parse("midday=1,2\n").unwrap()).is_err());
    }
}

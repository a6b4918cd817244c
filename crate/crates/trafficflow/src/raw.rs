//! Raw detector CSV: `Date,Time,ID,Lane1_Vol..LaneK_Vol,Lane1_Occ..LaneK_Occ`
//! with optional `OffX_cnt` / `PsgX_cnt` columns. Empty cells mark missing
//! values.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use chrono::{Duration, NaiveDate};
use thiserror::Error;
use traffic_core::model::{SECONDS_PER_DAY, SLOT_SECONDS};
use traffic_core::{validate_sample, GapReport, RawSample, Slot};

pub const DEFAULT_ERROR_BUDGET: usize = 100;

/// How the `Time` column labels a 30 s interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeLabel {
    /// `Time` is the interval's end (`00:00:30` .. `24:00:00`). A value of
    /// `00:00:00` closes the previous date's last interval.
    #[default]
    End,
    /// `Time` is the interval's start (`00:00:00` .. `23:59:30`).
    Start,
}

impl std::str::FromStr for TimeLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "end" => Ok(TimeLabel::End),
            "start" => Ok(TimeLabel::Start),
            other => Err(format!("unknown time label {other:?} (expected end or start)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub time_label: TimeLabel,
    /// Bad rows tolerated before the whole file is rejected.
    pub error_budget: usize,
    /// Keep only rows for this detector.
    pub detector: Option<u32>,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions { time_label: TimeLabel::End, error_budget: DEFAULT_ERROR_BUDGET, detector: None }
    }
}

#[derive(Debug, Error)]
pub enum RawParseError {
    #[error("missing required columns: {}", .0.join(", "))]
    MissingColumns(Vec<String>),
    #[error("{count} unparseable rows exceed the budget of {budget}; first: line {}: {}", first.line, first.message)]
    TooManyBadRows { count: usize, budget: usize, first: RowError },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: u64,
    pub message: String,
}

/// Counts of missing data at row and cell granularity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub rows: usize,
    pub rows_with_missing: usize,
    pub cells: usize,
    pub missing_cells: usize,
    /// Rows that parsed but break a sample invariant (e.g. occupancy > 900).
    pub invalid_rows: usize,
}

impl ParseStats {
    pub fn missing_row_fraction(&self) -> f64 {
        ratio(self.rows_with_missing, self.rows)
    }

    pub fn missing_cell_fraction(&self) -> f64 {
        ratio(self.missing_cells, self.cells)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedRaw {
    pub samples: Vec<RawSample>,
    /// 1-based source line of each sample.
    pub lines: Vec<u64>,
    pub row_errors: Vec<RowError>,
    pub stats: ParseStats,
}

struct Layout {
    date: usize,
    time: usize,
    id: usize,
    volumes: Vec<usize>,
    occupancies: Vec<usize>,
    offs: Vec<usize>,
    psgs: Vec<usize>,
}

/// Columns named `{prefix}{k}{suffix}` for k = 1, 2, ..., sorted by k.
fn numbered(headers: &csv::StringRecord, prefix: &str, suffix: &str) -> BTreeMap<u32, usize> {
    headers
        .iter()
        .enumerate()
        .filter_map(|(i, h)| {
            let k = h.strip_prefix(prefix)?.strip_suffix(suffix)?.parse::<u32>().ok()?;
            Some((k, i))
        })
        .collect()
}

fn layout(headers: &csv::StringRecord) -> Result<Layout, RawParseError> {
    let find = |name: &str| headers.iter().position(|h| h == name);
    let mut missing = Vec::new();
    let mut required = |name: &str| {
        let found = find(name);
        if found.is_none() {
            missing.push(name.to_string());
        }
        found.unwrap_or(0)
    };
    let date = required("Date");
    let time = required("Time");
    let id = required("ID");

    let vols = numbered(headers, "Lane", "_Vol");
    let occs = numbered(headers, "Lane", "_Occ");
    let lanes = vols.keys().chain(occs.keys()).copied().max().unwrap_or(1);
    let mut volumes = Vec::new();
    let mut occupancies = Vec::new();
    for k in 1..=lanes {
        match vols.get(&k) {
            Some(&i) => volumes.push(i),
            None => missing.push(format!("Lane{k}_Vol")),
        }
        match occs.get(&k) {
            Some(&i) => occupancies.push(i),
            None => missing.push(format!("Lane{k}_Occ")),
        }
    }
    if !missing.is_empty() {
        return Err(RawParseError::MissingColumns(missing));
    }
    Ok(Layout {
        date,
        time,
        id,
        volumes,
        occupancies,
        offs: numbered(headers, "Off", "_cnt").into_values().collect(),
        psgs: numbered(headers, "Psg", "_cnt").into_values().collect(),
    })
}

/// `HH:MM:SS` to seconds after midnight; `24:00:00` is accepted.
pub fn parse_hms(s: &str) -> Option<u32> {
    let mut parts = s.trim().split(':');
    let mut field = |max: u32| -> Option<u32> {
        let p = parts.next()?;
        if p.is_empty() || p.len() > 2 || !p.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        p.parse().ok().filter(|v| *v <= max)
    };
    let (h, m, sec) = (field(24)?, field(59)?, field(59)?);
    if parts.next().is_some() {
        return None;
    }
    let total = h * 3600 + m * 60 + sec;
    (total <= SECONDS_PER_DAY).then_some(total)
}

pub fn format_hms(secs: u32) -> String {
    format!("{:02}:{:02}:{:02}", secs / 3600, secs / 60 % 60, secs % 60)
}

/// The `(Date, Time)` cells for a slot under `label`.
pub fn slot_label(slot: Slot, label: TimeLabel) -> (NaiveDate, String) {
    match label {
        TimeLabel::End => (slot.date, format_hms(slot.end_secs())),
        TimeLabel::Start => (slot.date, format_hms(slot.start_secs())),
    }
}

fn to_time_end(date: NaiveDate, secs: u32, label: TimeLabel) -> Result<(NaiveDate, u32), String> {
    if !secs.is_multiple_of(SLOT_SECONDS) {
        return Err(format!("time {} is not on the 30 s grid", format_hms(secs)));
    }
    match label {
        TimeLabel::End if secs == 0 => Ok((date - Duration::days(1), SECONDS_PER_DAY)),
        TimeLabel::End => Ok((date, secs)),
        TimeLabel::Start if secs >= SECONDS_PER_DAY => Err("24:00:00 is not an interval start".into()),
        TimeLabel::Start => Ok((date, secs + SLOT_SECONDS)),
    }
}

fn cell(record: &csv::StringRecord, i: usize, name: &str) -> Result<Option<u32>, String> {
    let raw = record.get(i).unwrap_or("");
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse::<u32>().map(Some).map_err(|_| format!("{name}: {raw:?} is not a non-negative integer"))
}

fn parse_row(record: &csv::StringRecord, layout: &Layout, opts: &ParseOptions) -> Result<Option<RawSample>, String> {
    let id_cell = record.get(layout.id).unwrap_or("");
    let detector_id: u32 = id_cell.parse().map_err(|_| format!("ID: {id_cell:?} is not an integer"))?;
    if opts.detector.is_some_and(|d| d != detector_id) {
        return Ok(None);
    }
    let date_cell = record.get(layout.date).unwrap_or("");
    let date = NaiveDate::parse_from_str(date_cell, "%Y-%m-%d").map_err(|_| format!("Date: {date_cell:?} is not YYYY-MM-DD"))?;
    let time_cell = record.get(layout.time).unwrap_or("");
    let secs = parse_hms(time_cell).ok_or_else(|| format!("Time: {time_cell:?} is not HH:MM:SS"))?;
    let (date, time_end) = to_time_end(date, secs, opts.time_label)?;

    let column = |idx: &[usize], kind: &str| -> Result<Vec<Option<u32>>, String> {
        idx.iter().enumerate().map(|(k, &i)| cell(record, i, &format!("{kind}{}", k + 1))).collect()
    };
    Ok(Some(RawSample {
        date,
        time_end,
        detector_id,
        lane_volumes: column(&layout.volumes, "Lane_Vol ")?,
        lane_occupancies: column(&layout.occupancies, "Lane_Occ ")?,
        off_counts: column(&layout.offs, "Off_cnt ")?,
        psg_counts: column(&layout.psgs, "Psg_cnt ")?,
    }))
}

/// Parse a raw detector CSV. Unparseable rows are collected with their line
/// numbers; more than `opts.error_budget` of them is fatal.
pub fn parse_raw_csv<R: Read>(source: R, opts: &ParseOptions) -> Result<ParsedRaw, RawParseError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).flexible(true).from_reader(source);
    let layout = layout(reader.headers()?)?;
    let mut out = ParsedRaw::default();
    let mut record = csv::StringRecord::new();
    loop {
        let line = reader.position().line() + 1;
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                out.row_errors.push(RowError { line, message: e.to_string() });
                if out.row_errors.len() > opts.error_budget {
                    break;
                }
                continue;
            }
        }
        let line = record.position().map_or(line, |p| p.line());
        match parse_row(&record, &layout, opts) {
            Ok(Some(sample)) => {
                let lane_cells = sample.lane_volumes.len() + sample.lane_occupancies.len();
                let missing = sample.lane_volumes.iter().chain(&sample.lane_occupancies).filter(|c| c.is_none()).count();
                out.stats.rows += 1;
                out.stats.cells += lane_cells;
                out.stats.missing_cells += missing;
                out.stats.rows_with_missing += usize::from(missing > 0);
                out.stats.invalid_rows += usize::from(!validate_sample(&sample).is_empty());
                out.samples.push(sample);
                out.lines.push(line);
            }
            Ok(None) => {}
            Err(message) => out.row_errors.push(RowError { line, message }),
        }
        if out.row_errors.len() > opts.error_budget {
            break;
        }
    }
    if out.row_errors.len() > opts.error_budget {
        return Err(RawParseError::TooManyBadRows {
            count: out.row_errors.len(),
            budget: opts.error_budget,
            first: out.row_errors[0].clone(),
        });
    }
    Ok(out)
}

#[derive(Debug, Error)]
pub enum RawWriteError {
    #[error("sample for detector {detector_id} at {date} has {found} lanes, file has {expected}")]
    LaneCount { detector_id: u32, date: NaiveDate, expected: usize, found: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn opt(v: &Option<u32>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write samples in the raw format with end-of-interval `Time` labels.
/// Column counts are taken from the first sample.
pub fn write_raw_csv<W: Write>(sink: W, samples: &[RawSample]) -> Result<(), RawWriteError> {
    let mut w = csv::Writer::from_writer(sink);
    let (lanes, offs, psgs) = samples
        .first()
        .map_or((1, 0, 0), |s| (s.lane_volumes.len(), s.off_counts.len(), s.psg_counts.len()));
    let mut header = vec!["Date".to_string(), "Time".into(), "ID".into()];
    header.extend((1..=lanes).map(|k| format!("Lane{k}_Vol")));
    header.extend((1..=lanes).map(|k| format!("Lane{k}_Occ")));
    header.extend((1..=offs).map(|k| format!("Off{k}_cnt")));
    header.extend((1..=psgs).map(|k| format!("Psg{k}_cnt")));
    w.write_record(&header)?;

    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for s in samples {
        let shape = (s.lane_volumes.len(), s.lane_occupancies.len(), s.off_counts.len(), s.psg_counts.len());
        if shape != (lanes, lanes, offs, psgs) {
            return Err(RawWriteError::LaneCount {
                detector_id: s.detector_id,
                date: s.date,
                expected: lanes,
                found: s.lane_volumes.len(),
            });
        }
        row.clear();
        row.push(s.date.format("%Y-%m-%d").to_string());
        row.push(format_hms(s.time_end));
        row.push(s.detector_id.to_string());
        for v in s.lane_volumes.iter().chain(&s.lane_occupancies).chain(&s.off_counts).chain(&s.psg_counts) {
            row.push(opt(v));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `detector_id,start_date,start_time,length_slots`, one row per interior
/// gap; times use the same labeling as the input file.
pub fn write_gap_report<W: Write>(sink: W, reports: &[GapReport], label: TimeLabel) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["detector_id", "start_date", "start_time", "length_slots"])?;
    for report in reports {
        for g in &report.gaps {
            let (date, time) = slot_label(g.start, label);
            w.write_record([g.detector_id.to_string(), date.to_string(), time, g.length.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Ground-truth sidecar: `detector_id,date,time,true_vol,true_occ`.
pub fn write_truth_csv<W: Write>(sink: W, truth: &[traffic_core::TruthRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["detector_id", "date", "time", "true_vol", "true_occ"])?;
    for t in truth {
        w.write_record([
            t.detector_id.to_string(),
            t.date.to_string(),
            format_hms(t.time_end),
            t.true_vol.to_string(),
            t.true_occ.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_truth_csv<R: Read>(source: R) -> anyhow::Result<Vec<traffic_core::TruthRecord>> {
    let mut r = csv::Reader::from_reader(source);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let time_end = parse_hms(field(2)).ok_or_else(|| anyhow::anyhow!("bad time {:?}", field(2)))?;
        out.push(traffic_core::TruthRecord {
            detector_id: field(0).parse()?,
            date: NaiveDate::parse_from_str(field(1), "%Y-%m-%d")?,
            time_end,
            true_vol: field(3).parse()?,
            true_occ: field(4).parse()?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "Date,Time,ID,Lane1_Vol,Lane2_Vol,Lane3_Vol,Lane1_Occ,Lane2_Occ,Lane3_Occ\n";

    fn parse(text: &str) -> Result<ParsedRaw, RawParseError> {
        parse_raw_csv(text.as_bytes(), &ParseOptions::default())
    }

    #[test]
    fn direct_field_mapping() {
        let p = parse(&format!("{HEADER}2022-07-01,00:00:30,191,5,3,2,12,8,6\n")).unwrap();
        let s = &p.samples[0];
        assert_eq!(s.lane_volumes, vec![Some(5), Some(3), Some(2)]);
        assert_eq!(s.lane_occupancies, vec![Some(12), Some(8), Some(6)]);
        assert_eq!((s.detector_id, s.time_end), (191, 30));
        assert_eq!(p.lines, vec![2]);
    }

    #[test]
    fn missing_id_column_is_named() {
        let err = parse("Date,Time,Lane1_Vol,Lane1_Occ\n").unwrap_err();
        assert_eq!(err.to_string(), "missing required columns: ID");
        let err = parse("Date,Time,ID,Lane1_Vol,Lane2_Vol,Lane1_Occ\n").unwrap_err();
        assert!(err.to_string().contains("Lane2_Occ"));
    }

    #[test]
    fn empty_cells_are_missing_and_counted() {
        let p = parse(&format!("{HEADER}2022-07-01,00:00:30,191,5,,2,12,8,6\n2022-07-01,00:01:00,191,1,1,1,1,1,1\n")).unwrap();
        assert!(!p.samples[0].is_complete());
        assert_eq!(p.stats.rows_with_missing, 1);
        assert_eq!(p.stats.missing_cells, 1);
        assert_eq!(p.stats.cells, 12);
    }

    #[test]
    fn bad_rows_are_collected_until_budget() {
        let mut text = HEADER.to_string();
        text.push_str("2022-07-01,00:00:30,191,x,1,1,1,1,1\n");
        text.push_str("2022-07-01,00:01:00,191,1,1,1,1,1,1\n");
        let p = parse(&text).unwrap();
        assert_eq!(p.row_errors.len(), 1);
        assert_eq!(p.row_errors[0].line, 2);
        assert_eq!(p.samples.len(), 1);

        let opts = ParseOptions { error_budget: 0, ..ParseOptions::default() };
        assert!(matches!(parse_raw_csv(text.as_bytes(), &opts), Err(RawParseError::TooManyBadRows { .. })));
    }

    #[test]
    fn time_labels() {
        let text = format!("{HEADER}2022-07-02,00:00:00,191,1,1,1,1,1,1\n");
        let end = parse(&text).unwrap();
        assert_eq!((end.samples[0].date.to_string(), end.samples[0].time_end), ("2022-07-01".into(), 86_400));
        let opts = ParseOptions { time_label: TimeLabel::Start, ..ParseOptions::default() };
        let start = parse_raw_csv(text.as_bytes(), &opts).unwrap();
        assert_eq!((start.samples[0].date.to_string(), start.samples[0].time_end), ("2022-07-02".into(), 30));
        let p = parse(&format!("{HEADER}2022-07-01,24:00:00,191,1,1,1,1,1,1\n")).unwrap();
        assert_eq!(p.samples[0].time_end, 86_400);
        let p = parse(&format!("{HEADER}2022-07-01,00:00:45,191,1,1,1,1,1,1\n")).unwrap();
        assert_eq!(p.row_errors.len(), 1);
    }

    #[test]
    fn detector_filter() {
        let text = format!("{HEADER}2022-07-01,00:00:30,66,1,1,1,1,1,1\n2022-07-01,00:00:30,191,1,1,1,1,1,1\n");
        let opts = ParseOptions { detector: Some(191), ..ParseOptions::default() };
        let p = parse_raw_csv(text.as_bytes(), &opts).unwrap();
        assert_eq!(p.samples.len(), 1);
        assert_eq!(p.lines, vec![3]);
    }

    #[test]
    fn hms() {
        assert_eq!(parse_hms("23:59:30"), Some(86_370));
        assert_eq!(parse_hms("24:00:00"), Some(86_400));
        assert_eq!(parse_hms("24:00:30"), None);
        assert_eq!(parse_hms("1:2"), None);
        assert_eq!(format_hms(86_400), "24:00:00");
        assert_eq!(format_hms(36_030), "10:00:30");
    }
}

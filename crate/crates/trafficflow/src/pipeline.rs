//! File-to-series loading shared by the commands.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use traffic_core::ingest::pivot_with_lines;
use traffic_core::{detect_gaps, interpolate_linear, DetectorSeries, GapReport};

use crate::raw::{parse_raw_csv, ParseOptions, ParseStats, RowError, TimeLabel};

#[derive(Debug, Clone)]
pub struct Loaded {
    pub series: DetectorSeries,
    pub gaps: GapReport,
    pub stats: ParseStats,
    pub row_errors: Vec<RowError>,
}

/// Parse `path`, keep `detector`, and repair its gaps.
pub fn load_series(path: &Path, detector: u32, time_label: TimeLabel) -> Result<Loaded> {
    let file = File::open(path).with_context(|| format!("ingest: cannot open {}", path.display()))?;
    let opts = ParseOptions { time_label, detector: Some(detector), ..ParseOptions::default() };
    let parsed = parse_raw_csv(BufReader::new(file), &opts).with_context(|| format!("ingest: {}", path.display()))?;
    let lines = parsed.lines.iter().map(|&l| l as usize);
    let mut by_detector = pivot_with_lines(lines.zip(&parsed.samples)).context("ingest")?;
    let raw = by_detector
        .remove(&detector)
        .ok_or_else(|| anyhow!("ingest: no records for detector {detector} in {}", path.display()))?;
    let gaps = detect_gaps(&raw);
    let series = interpolate_linear(&raw).context("interpolate")?;
    Ok(Loaded { series, gaps, stats: parsed.stats, row_errors: parsed.row_errors })
}

/// One-paragraph data-quality note for stderr.
pub fn describe(l: &Loaded) -> String {
    let mut s = format!(
        "detector {}: {} rows, {:.4}% rows / {:.4}% cells missing; {} slots, {} interior gaps ({} slots), {} boundary-filled",
        l.series.detector_id,
        l.stats.rows,
        100.0 * l.stats.missing_row_fraction(),
        100.0 * l.stats.missing_cell_fraction(),
        l.gaps.total_slots,
        l.gaps.gaps.len(),
        l.gaps.missing_slots,
        l.gaps.boundary_slots,
    );
    if l.stats.invalid_rows > 0 {
        s.push_str(&format!("; {} rows failed validation", l.stats.invalid_rows));
    }
    if !l.row_errors.is_empty() {
        s.push_str(&format!("; {} unparseable rows skipped", l.row_errors.len()));
    }
    s
}

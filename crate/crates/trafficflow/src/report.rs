//! Sweep artifacts: `sweep.csv`, per-figure plot data, a text summary and
//! the configuration echo.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use traffic_core::{MetricsReport, ModelKind, RfHyperparams, SweepResult};

use crate::formats::write_trace;

pub const SWEEP_FILE: &str = "sweep.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const ECHO_FILE: &str = "config_echo.json";

/// One `sweep.csv` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model: ModelKind,
    pub interval_min: f64,
    pub n: usize,
    pub r2: f64,
    pub mae: f64,
    pub rmse: f64,
    pub scaled_mae: f64,
    pub scaled_rmse: f64,
}

impl From<&MetricsReport> for SweepRow {
    fn from(r: &MetricsReport) -> Self {
        SweepRow {
            model: r.model,
            interval_min: r.interval.minutes(),
            n: r.n,
            r2: r.r2,
            mae: r.mae,
            rmse: r.rmse,
            scaled_mae: r.scaled_mae,
            scaled_rmse: r.scaled_rmse,
        }
    }
}

pub fn write_sweep_csv<W: Write>(sink: W, rows: &[SweepRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(["model", "interval_min", "n", "r2", "mae", "rmse", "scaled_mae", "scaled_rmse"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(source: R) -> csv::Result<Vec<SweepRow>> {
    csv::Reader::from_reader(source).deserialize().collect()
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn model_rows(rows: &[SweepRow], model: ModelKind) -> Vec<&SweepRow> {
    let mut out: Vec<&SweepRow> = rows.iter().filter(|r| r.model == model).collect();
    out.sort_by(|a, b| a.interval_min.total_cmp(&b.interval_min));
    out
}

fn write_series(dir: &Path, name: &str, rows: &[&SweepRow], metrics: &[(&str, fn(&SweepRow) -> f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(dir, name)?);
    if metrics.len() == 1 {
        w.write_record(["interval_min", "value"])?;
    } else {
        w.write_record(["interval_min", "value", "metric"])?;
    }
    for (label, get) in metrics {
        for r in rows {
            let mut record = vec![r.interval_min.to_string(), get(r).to_string()];
            if metrics.len() > 1 {
                record.push((*label).to_string());
            }
            w.write_record(&record)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Plot-data files for the error and fit-quality figures.
pub fn write_figures(dir: &Path, rows: &[SweepRow]) -> Result<()> {
    let mlr = model_rows(rows, ModelKind::Mlr);
    let rf = model_rows(rows, ModelKind::Rf);
    write_series(dir, "mlr_mae_rmse.csv", &mlr, &[("mae", |r| r.mae), ("rmse", |r| r.rmse)])?;
    write_series(dir, "mlr_r2.csv", &mlr, &[("r2", |r| r.r2)])?;
    write_series(dir, "mlr_scaled.csv", &mlr, &[("scaled_mae", |r| r.scaled_mae), ("scaled_rmse", |r| r.scaled_rmse)])?;
    write_series(dir, "rf_mae_rmse.csv", &rf, &[("mae", |r| r.mae), ("rmse", |r| r.rmse)])?;
    write_series(dir, "rf_r2.csv", &rf, &[("r2", |r| r.r2)])?;
    Ok(())
}

/// Best interval per model: `(argmax r2, argmin scaled_mae)`. Ties go to
/// the shorter interval.
pub fn best_intervals(rows: &[SweepRow], model: ModelKind) -> Option<(f64, f64)> {
    let rows = model_rows(rows, model);
    let best_r2 = rows.iter().copied().reduce(|a, b| if b.r2 > a.r2 { b } else { a })?;
    let best_scaled = rows.iter().copied().reduce(|a, b| if b.scaled_mae < a.scaled_mae { b } else { a })?;
    Some((best_r2.interval_min, best_scaled.interval_min))
}

fn trend(values: &[f64]) -> &'static str {
    let up = values.windows(2).all(|w| w[1] >= w[0]);
    let down = values.windows(2).all(|w| w[1] <= w[0]);
    match (up, down) {
        (true, false) => "non-decreasing",
        (false, true) => "non-increasing",
        (true, true) => "flat",
        (false, false) => "mixed",
    }
}

pub fn summary_text(rows: &[SweepRow]) -> String {
    let mut s = String::new();
    for model in [ModelKind::Mlr, ModelKind::Rf] {
        let Some((r2_t, scaled_t)) = best_intervals(rows, model) else { continue };
        let mr = model_rows(rows, model);
        let find = |t: f64| mr.iter().find(|r| r.interval_min == t).expect("interval present");
        let _ = writeln!(s, "{}:", model.as_str().to_uppercase());
        let _ = writeln!(s, "  highest R2: {} min (R2 = {:.4})", r2_t, find(r2_t).r2);
        let _ = writeln!(s, "  lowest scaled MAE: {} min (scaled MAE = {:.4})", scaled_t, find(scaled_t).scaled_mae);
        let maes: Vec<f64> = mr.iter().map(|r| r.mae).collect();
        let scaled: Vec<f64> = mr.iter().map(|r| r.scaled_mae).collect();
        let _ = writeln!(s, "  raw MAE across intervals: {}", trend(&maes));
        let _ = writeln!(s, "  scaled MAE across intervals: {}", trend(&scaled));
        let _ = writeln!(s, "  interval_min  n  r2  mae  rmse  scaled_mae  scaled_rmse");
        for r in &mr {
            let _ = writeln!(
                s,
                "  {}  {}  {:.4}  {:.4}  {:.4}  {:.4}  {:.4}",
                r.interval_min, r.n, r.r2, r.mae, r.rmse, r.scaled_mae, r.scaled_rmse
            );
        }
    }
    s
}

#[derive(Serialize)]
struct Echo<'a> {
    detector_id: u32,
    seed: u64,
    train_fraction: f64,
    rf_trees: usize,
    tune: &'a traffic_core::TuneConfig,
    cells: Vec<EchoCell>,
}

#[derive(Serialize)]
struct EchoCell {
    model: ModelKind,
    interval_min: f64,
    cfd_rows: usize,
    train_rows: usize,
    train_end: String,
    test_start: String,
    rf_params: Option<RfHyperparams>,
    tune_points: usize,
}

/// Figures and summary from already-computed rows.
pub fn render_rows(dir: &Path, rows: &[SweepRow]) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    write_figures(dir, rows)?;
    create(dir, SUMMARY_FILE)?.write_all(summary_text(rows).as_bytes())?;
    Ok(())
}

/// Everything a sweep produces: `sweep.csv`, figure data, `summary.txt`,
/// `config_echo.json` and one `rf_trace_<T>min.csv` per tuned interval.
pub fn render_report(dir: &Path, sr: &SweepResult) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let rows: Vec<SweepRow> = sr.reports().map(SweepRow::from).collect();
    let mut sweep = create(dir, SWEEP_FILE)?;
    write_sweep_csv(&mut sweep, &rows)?;
    sweep.flush()?;
    render_rows(dir, &rows)?;

    let slot = |s: traffic_core::Slot| format!("{} {}", s.date, crate::raw::format_hms(s.start_secs()));
    let echo = Echo {
        detector_id: sr.config.detector_id,
        seed: sr.config.seed,
        train_fraction: sr.config.train_fraction,
        rf_trees: sr.config.rf_trees,
        tune: &sr.config.tune,
        cells: sr
            .cells
            .iter()
            .map(|c| EchoCell {
                model: c.model,
                interval_min: c.interval.minutes(),
                cfd_rows: c.cfd_rows,
                train_rows: c.run.train_rows,
                train_end: slot(c.run.train_end),
                test_start: slot(c.run.test_start),
                rf_params: c.run.rf_params,
                tune_points: c.run.tune_trace.len(),
            })
            .collect(),
    };
    let mut f = create(dir, ECHO_FILE)?;
    serde_json::to_writer_pretty(&mut f, &echo)?;
    f.write_all(b"\n")?;
    f.flush()?;

    for c in sr.cells.iter().filter(|c| !c.run.tune_trace.is_empty()) {
        let mut f = create(dir, &format!("rf_trace_{}min.csv", c.interval))?;
        write_trace(&mut f, &c.run.tune_trace)?;
        f.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: ModelKind, t: f64, r2: f64, scaled_mae: f64) -> SweepRow {
        SweepRow { model, interval_min: t, n: 10, r2, mae: scaled_mae * t / 0.5, rmse: 1.0, scaled_mae, scaled_rmse: 0.1 }
    }

    #[test]
    fn csv_round_trip_and_header() {
        let rows = vec![row(ModelKind::Mlr, 0.5, 0.9, 1.0), row(ModelKind::Rf, 15.0, 0.8, 0.1)];
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("model,interval_min,n,r2,mae,rmse,scaled_mae,scaled_rmse\nmlr,0.5,10,"));
        assert_eq!(read_sweep_csv(&buf[..]).unwrap(), rows);
    }

    #[test]
    fn best_interval_ties_prefer_shorter() {
        let rows = vec![
            row(ModelKind::Mlr, 1.0, 0.9, 0.5),
            row(ModelKind::Mlr, 0.5, 0.9, 0.7),
            row(ModelKind::Mlr, 2.0, 0.8, 0.5),
        ];
        assert_eq!(best_intervals(&rows, ModelKind::Mlr), Some((0.5, 1.0)));
        assert_eq!(best_intervals(&rows, ModelKind::Rf), None);
    }
}

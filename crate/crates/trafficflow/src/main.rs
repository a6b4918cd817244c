use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use traffic_core::{
    filter_weekdays, generate, build_cfd, resample, run_interval_with_model, run_sweep, ExperimentConfig, FittedModel,
    Interval, ModelKind, SearchMode, SynthConfig,
};
use trafficflow::config::{read_synth_config, SweepSettings};
use trafficflow::formats::{write_cfd, write_resampled, write_trace, CfdMeta, SavedModel};
use trafficflow::pipeline::{describe, load_series};
use trafficflow::raw::{write_gap_report, write_raw_csv, write_truth_csv, TimeLabel};
use trafficflow::report::{read_sweep_csv, render_report, render_rows, summary_text, SweepRow, SWEEP_FILE};

/// Traffic-volume forecasting from 30 s loop-detector records.
#[derive(Parser)]
#[command(name = "trafficflow", version)]
struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic raw detector data and a ground-truth sidecar.
    Synth {
        /// Generator config (key = value); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV; the sidecar goes next to it as <stem>.truth.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Ingest, repair, resample, keep weekdays and write the feature table.
    Preprocess {
        #[command(flatten)]
        input: InputArgs,
        /// Collection interval in minutes (0.5, 1, 2, 5, 10 or 15).
        #[arg(long)]
        interval: Interval,
        /// Feature table CSV; a JSON sidecar is written as <stem>.json.
        #[arg(long)]
        out: PathBuf,
        /// Also write the interior gap report here.
        #[arg(long)]
        gaps: Option<PathBuf>,
        /// Also write the resampled series (all days) here.
        #[arg(long)]
        resampled: Option<PathBuf>,
    },
    /// Fit and score one model at one interval, and save it as JSON.
    Train {
        #[command(flatten)]
        input: InputArgs,
        /// Collection interval in minutes (0.5, 1, 2, 5, 10 or 15).
        #[arg(long)]
        interval: Interval,
        /// mlr or rf.
        #[arg(long)]
        model: ModelKind,
        /// Model JSON output.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        fit: FitArgs,
        /// Write the RF tuning trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run every (model, interval) cell and write report artifacts.
    Sweep {
        /// Experiment config (key = value).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's output_dir.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Rebuild figure data and summary from a sweep.csv.
    Report {
        /// A sweep.csv written by `sweep`.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct InputArgs {
    /// Raw detector CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Detector to model.
    #[arg(long, default_value_t = 191)]
    detector: u32,
    /// Whether the Time column labels interval ends or starts.
    #[arg(long, default_value = "end")]
    time_label: TimeLabel,
}

#[derive(Args)]
struct FitArgs {
    /// Fraction of rows (chronologically first) used for training.
    #[arg(long, default_value_t = 0.8)]
    train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trees in the final forest.
    #[arg(long, default_value_t = 500)]
    rf_trees: usize,
    /// Trees per forest while tuning.
    #[arg(long, default_value_t = 50)]
    tune_trees: usize,
    /// Non-improving grid points tolerated before moving on.
    #[arg(long, default_value_t = 3)]
    patience: usize,
    /// Search the whole grid instead of stopping early.
    #[arg(long)]
    exhaustive: bool,
}

impl FitArgs {
    fn config(&self, detector_id: u32, interval: Interval, model: ModelKind) -> ExperimentConfig {
        let mut cfg = ExperimentConfig {
            detector_id,
            intervals: vec![interval],
            train_fraction: self.train_fraction,
            models: vec![model],
            rf_trees: self.rf_trees,
            seed: self.seed,
            ..ExperimentConfig::default()
        };
        cfg.tune.tune_trees = self.tune_trees;
        cfg.tune.patience = self.patience;
        if self.exhaustive {
            cfg.tune.mode = SearchMode::Exhaustive;
        }
        cfg
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn synth(config: Option<&Path>, out: &Path) -> Result<()> {
    let cfg = match config {
        Some(p) => read_synth_config(p)?,
        None => SynthConfig::default(),
    };
    let data = generate(&cfg).context("synth")?;
    let mut w = create(out)?;
    write_raw_csv(&mut w, &data.samples)?;
    w.flush()?;
    let truth_path = out.with_extension("truth.csv");
    let mut w = create(&truth_path)?;
    write_truth_csv(&mut w, &data.truth)?;
    w.flush()?;
    eprintln!(
        "wrote {} samples to {} and {} blanked slots to {}",
        data.samples.len(),
        out.display(),
        data.truth.len(),
        truth_path.display()
    );
    Ok(())
}

fn preprocess(input: &InputArgs, interval: Interval, out: &Path, gaps: Option<&Path>, resampled: Option<&Path>) -> Result<()> {
    let loaded = load_series(&input.input, input.detector, input.time_label)?;
    eprintln!("{}", describe(&loaded));
    if let Some(p) = gaps {
        let mut w = create(p)?;
        write_gap_report(&mut w, std::slice::from_ref(&loaded.gaps), input.time_label)?;
        w.flush()?;
    }
    let r = resample(&loaded.series, interval).context("resample")?;
    if r.dropped_slots > 0 {
        eprintln!("resample: dropped a trailing partial window of {} slots", r.dropped_slots);
    }
    if let Some(p) = resampled {
        let mut w = create(p)?;
        write_resampled(&mut w, &r.records)?;
        w.flush()?;
    }
    let weekdays = filter_weekdays(&r.records);
    let ds = build_cfd(&weekdays, interval, input.detector).context("features")?;
    let mut w = create(out)?;
    write_cfd(&mut w, &ds)?;
    w.flush()?;
    let mut w = create(&out.with_extension("json"))?;
    serde_json::to_writer_pretty(&mut w, &CfdMeta::of(&ds))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn train(input: &InputArgs, interval: Interval, model: ModelKind, out: &Path, fit: &FitArgs, trace: Option<&Path>) -> Result<()> {
    let loaded = load_series(&input.input, input.detector, input.time_label)?;
    eprintln!("{}", describe(&loaded));
    let cfg = fit.config(input.detector, interval, model);
    let ds = traffic_core::weekday_dataset(&loaded.series, interval)?;
    let (run, fitted) = run_interval_with_model(&ds, model, &cfg)?;
    let saved = match &fitted {
        FittedModel::Mlr(m) => SavedModel::from(m),
        FittedModel::Rf(m) => SavedModel::from(m),
    };
    let mut w = create(out)?;
    serde_json::to_writer(&mut w, &saved)?;
    w.write_all(b"\n")?;
    w.flush()?;
    if let Some(p) = trace {
        let mut w = create(p)?;
        write_trace(&mut w, &run.tune_trace)?;
        w.flush()?;
    }
    let stdout = std::io::stdout();
    trafficflow::report::write_sweep_csv(stdout.lock(), &[SweepRow::from(&run.report)])?;
    Ok(())
}

fn sweep(config: &Path, out_dir: Option<&Path>) -> Result<()> {
    let settings = SweepSettings::read(config)?;
    let out_dir = out_dir.map_or(settings.output_dir.clone(), Path::to_path_buf);
    let cfg = &settings.experiment;
    let loaded = load_series(&settings.input_path, cfg.detector_id, settings.time_label)?;
    eprintln!("{}", describe(&loaded));
    let result = run_sweep(&loaded.series, cfg)?;
    render_report(&out_dir, &result)?;
    let rows: Vec<SweepRow> = result.reports().map(SweepRow::from).collect();
    print!("{}", summary_text(&rows));
    eprintln!("wrote {}", out_dir.join(SWEEP_FILE).display());
    Ok(())
}

fn report(input: &Path, out: &Path) -> Result<()> {
    let f = File::open(input).with_context(|| format!("cannot open {}", input.display()))?;
    let rows = read_sweep_csv(f).with_context(|| format!("reading {}", input.display()))?;
    render_rows(out, &rows)?;
    print!("{}", summary_text(&rows));
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        anyhow::ensure!(n > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool")?;
    }
    match &cli.command {
        Command::Synth { config, out } => synth(config.as_deref(), out),
        Command::Preprocess { input, interval, out, gaps, resampled } => {
            preprocess(input, *interval, out, gaps.as_deref(), resampled.as_deref())
        }
        Command::Train { input, interval, model, out, fit, trace } => train(input, *interval, *model, out, fit, trace.as_deref()),
        Command::Sweep { config, out_dir } => sweep(config, out_dir.as_deref()),
        Command::Report { input, out } => report(input, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

//! File formats, configuration and reporting around `traffic-core`, plus
//! the `trafficflow` command-line tool.

pub mod config;
pub mod formats;
pub mod pipeline;
pub mod raw;
pub mod report;

pub use config::{read_synth_config, KeyValues, SweepSettings};
pub use formats::{write_cfd, write_resampled, write_trace, CfdMeta, SavedModel};
pub use pipeline::{load_series, Loaded};
pub use raw::{parse_raw_csv, write_gap_report, write_raw_csv, write_truth_csv, ParseOptions, ParseStats, ParsedRaw, TimeLabel};
pub use report::{read_sweep_csv, render_report, render_rows, write_sweep_csv, SweepRow};

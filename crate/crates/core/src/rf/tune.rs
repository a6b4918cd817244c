//! Depth / leaf-size selection on a chronological hold-out.
//!
//! The training rows are split into an inner-train prefix and a validation
//! suffix. Grid points are visited with `max_depth` in the outer loop and
//! `min_leaf` in the inner loop, both ascending. In early-stopping mode a
//! depth row is abandoned after `patience` consecutive points that do not
//! strictly lower the best validation RMSE seen so far, and the search ends
//! after `patience` consecutive rows that never lowered it.
//!
//! The winner is the lowest RMSE; equal RMSEs prefer the smaller
//! `max_depth`, then the larger `min_leaf`.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::forest::{fit_forest_on, RfHyperparams};
use super::tree::TrainingSet;
use super::RfError;
use crate::matrix::Matrix;
use crate::metrics::rmse;

pub const MIN_TUNING_ROWS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    EarlyStopping,
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneConfig {
    pub tune_trees: usize,
    pub patience: usize,
    pub max_depth: (usize, usize),
    pub min_leaf: (usize, usize),
    pub inner_fraction: f64,
    pub mode: SearchMode,
    pub bootstrap: bool,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            tune_trees: 50,
            patience: 3,
            max_depth: (2, 20),
            min_leaf: (3, 25),
            inner_fraction: 0.8,
            mode: SearchMode::EarlyStopping,
            bootstrap: true,
        }
    }
}

impl TuneConfig {
    pub fn grid_size(&self) -> usize {
        (self.max_depth.1 + 1).saturating_sub(self.max_depth.0) * (self.min_leaf.1 + 1).saturating_sub(self.min_leaf.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub val_rmse: f64,
}

impl Trial {
    /// Lower RMSE, or equal RMSE with a simpler model.
    fn beats(&self, other: &Trial) -> bool {
        if self.val_rmse != other.val_rmse {
            return self.val_rmse < other.val_rmse;
        }
        (self.max_depth, core::cmp::Reverse(self.min_leaf)) < (other.max_depth, core::cmp::Reverse(other.min_leaf))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOutcome {
    /// Winning parameters, with `n_trees` set to the tuning tree count.
    pub best: RfHyperparams,
    pub best_rmse: f64,
    /// Every evaluated point, in visiting order.
    pub trace: Vec<Trial>,
    pub grid_size: usize,
}

impl TuneOutcome {
    pub fn stopped_early(&self) -> bool {
        self.trace.len() < self.grid_size
    }
}

struct Evaluator<'a> {
    set: TrainingSet<'a>,
    val_x: Matrix,
    val_y: &'a [f64],
    cfg: &'a TuneConfig,
    seed: u64,
    names: Vec<String>,
}

impl Evaluator<'_> {
    fn eval(&self, max_depth: usize, min_leaf: usize) -> Result<Trial, RfError> {
        let params = RfHyperparams { n_trees: self.cfg.tune_trees, min_leaf, max_depth, seed: self.seed, bootstrap: self.cfg.bootstrap };
        let model = fit_forest_on(&self.set, &params, self.names.clone())?;
        let pred = model.predict_rows(&self.val_x)?;
        let val_rmse = rmse(self.val_y, &pred).expect("validation set is non-empty");
        Ok(Trial { max_depth, min_leaf, val_rmse })
    }
}

pub fn tune_hyperparams(x: &Matrix, y: &[f64], cfg: &TuneConfig, seed: u64) -> Result<TuneOutcome, RfError> {
    let n = x.nrows();
    if n != y.len() {
        return Err(RfError::DimensionMismatch { rows: n, targets: y.len() });
    }
    if n < MIN_TUNING_ROWS {
        return Err(RfError::TooFewRows { needed: MIN_TUNING_ROWS, got: n });
    }
    if cfg.grid_size() == 0 || cfg.tune_trees == 0 || cfg.min_leaf.0 == 0 {
        return Err(RfError::InvalidParams("empty tuning grid"));
    }
    if !(cfg.inner_fraction > 0.0 && cfg.inner_fraction < 1.0) {
        return Err(RfError::InvalidParams("inner_fraction must lie in (0, 1)"));
    }
    let cut = libm::floor(n as f64 * cfg.inner_fraction) as usize;
    if cut < 2 || cut >= n {
        return Err(RfError::TooFewRows { needed: MIN_TUNING_ROWS, got: n });
    }
    let inner_x = x.slice_rows(0..cut);
    let inner_y = &y[..cut];
    let ev = Evaluator {
        set: TrainingSet::new(&inner_x, inner_y)?,
        val_x: x.slice_rows(cut..n),
        val_y: &y[cut..],
        cfg,
        seed,
        names: (1..=x.ncols()).map(|j| alloc::format!("x{j}")).collect(),
    };

    let depths = cfg.max_depth.0..=cfg.max_depth.1;
    let leaves = cfg.min_leaf.0..=cfg.min_leaf.1;
    let trace = match cfg.mode {
        SearchMode::Exhaustive => {
            let grid: Vec<(usize, usize)> = depths.flat_map(|d| leaves.clone().map(move |l| (d, l))).collect();
            #[cfg(feature = "std")]
            let trials: Result<Vec<Trial>, RfError> = {
                use rayon::prelude::*;
                grid.par_iter().map(|&(d, l)| ev.eval(d, l)).collect()
            };
            #[cfg(not(feature = "std"))]
            let trials: Result<Vec<Trial>, RfError> = grid.iter().map(|&(d, l)| ev.eval(d, l)).collect();
            trials?
        }
        SearchMode::EarlyStopping => {
            let mut trace = Vec::new();
            let mut best_rmse = f64::INFINITY;
            let mut stale_rows = 0;
            for depth in depths {
                let mut row_improved = false;
                let mut stale_steps = 0;
                for leaf in leaves.clone() {
                    let t = ev.eval(depth, leaf)?;
                    trace.push(t);
                    if t.val_rmse < best_rmse {
                        best_rmse = t.val_rmse;
                        row_improved = true;
                        stale_steps = 0;
                    } else {
                        stale_steps += 1;
                        if stale_steps >= cfg.patience {
                            break;
                        }
                    }
                }
                if row_improved {
                    stale_rows = 0;
                } else {
                    stale_rows += 1;
                    if stale_rows >= cfg.patience {
                        break;
                    }
                }
            }
            trace
        }
    };

    let best = *trace
        .iter()
        .reduce(|a, b| if b.beats(a) { b } else { a })
        .expect("grid is non-empty");
    Ok(TuneOutcome {
        best: RfHyperparams {
            n_trees: cfg.tune_trees,
            min_leaf: best.min_leaf,
            max_depth: best.max_depth,
            seed,
            bootstrap: cfg.bootstrap,
        },
        best_rmse: best.val_rmse,
        trace,
        grid_size: cfg.grid_size(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_data(n: usize) -> (Matrix, Vec<f64>) {
        // Target depends on a single threshold of feature 0.
        let rows: Vec<[f64; 2]> = (0..n).map(|i| [((i * 7919) % 101) as f64, ((i * 31) % 17) as f64]).collect();
        let y = rows.iter().map(|r| if r[0] < 50.0 { 10.0 } else { 40.0 }).collect();
        (Matrix::from_rows(&rows), y)
    }

    fn small_cfg(mode: SearchMode) -> TuneConfig {
        TuneConfig { tune_trees: 5, mode, ..TuneConfig::default() }
    }

    #[test]
    fn too_few_rows() {
        let (x, y) = step_data(49);
        assert_eq!(
            tune_hyperparams(&x, &y, &TuneConfig::default(), 0).unwrap_err(),
            RfError::TooFewRows { needed: 50, got: 49 }
        );
    }

    #[test]
    fn constant_target_picks_shallowest() {
        let (x, _) = step_data(80);
        let out = tune_hyperparams(&x, &[3.0; 80], &small_cfg(SearchMode::EarlyStopping), 1).unwrap();
        assert!(out.trace.iter().all(|t| t.val_rmse == 0.0));
        assert_eq!(out.best.max_depth, 2);
        // Ties prefer the largest leaf size among the visited depth-2 points.
        let visited_max_leaf = out.trace.iter().filter(|t| t.max_depth == 2).map(|t| t.min_leaf).max().unwrap();
        assert_eq!(out.best.min_leaf, visited_max_leaf);
        assert!(out.stopped_early());
        assert_eq!(out.trace.len(), 4 + 3 * 3);
    }

    #[test]
    fn threshold_target_needs_shallow_trees() {
        let (x, y) = step_data(300);
        let early = tune_hyperparams(&x, &y, &small_cfg(SearchMode::EarlyStopping), 5).unwrap();
        let full = tune_hyperparams(&x, &y, &small_cfg(SearchMode::Exhaustive), 5).unwrap();
        assert!(early.best.max_depth <= 4, "{:?}", early.best);
        assert!(full.best.max_depth <= 4, "{:?}", full.best);
        assert_eq!(full.trace.len(), 19 * 23);
    }

    #[test]
    fn tie_break_order() {
        let t = |d, l, r| Trial { max_depth: d, min_leaf: l, val_rmse: r };
        assert!(t(3, 3, 1.0).beats(&t(2, 3, 2.0)));
        assert!(t(2, 9, 1.0).beats(&t(3, 25, 1.0)));
        assert!(t(2, 9, 1.0).beats(&t(2, 4, 1.0)));
        assert!(!t(2, 4, 1.0).beats(&t(2, 9, 1.0)));
    }
}

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

use super::RfError;
use crate::matrix::Matrix;

/// Two candidate splits whose summed child squared error differs by less
/// than this fraction of the parent's squared error are treated as equal;
/// the earlier candidate (lower feature index, then lower threshold) wins.
pub const TIE_TOLERANCE: f64 = 1e-9;

/// A regression tree. Rows with `x[feature] <= threshold` go left.
///
/// Serializes to `{"f":i,"t":x,"l":{..},"r":{..}}` for splits and
/// `{"v":x,"n":c}` for leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        #[serde(rename = "f")]
        feature: usize,
        #[serde(rename = "t")]
        threshold: f64,
        #[serde(rename = "l")]
        left: Box<TreeNode>,
        #[serde(rename = "r")]
        right: Box<TreeNode>,
    },
    Leaf {
        #[serde(rename = "v")]
        value: f64,
        #[serde(rename = "n")]
        count: usize,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Longest root-to-leaf edge count.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// `(depth, count)` for every leaf, left to right.
    pub fn leaves(&self) -> Vec<(usize, usize)> {
        fn walk(node: &TreeNode, depth: usize, out: &mut Vec<(usize, usize)>) {
            match node {
                TreeNode::Leaf { count, .. } => out.push((depth, *count)),
                TreeNode::Split { left, right, .. } => {
                    walk(left, depth + 1, out);
                    walk(right, depth + 1, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, 0, &mut out);
        out
    }
}

/// Training data with every feature pre-ranked into codes over its sorted
/// distinct values, shared by all trees grown on it.
#[derive(Debug, Clone)]
pub struct TrainingSet<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    codes: Vec<Vec<u32>>,
    values: Vec<Vec<f64>>,
}

impl<'a> TrainingSet<'a> {
    pub fn new(x: &'a Matrix, y: &'a [f64]) -> Result<TrainingSet<'a>, RfError> {
        if x.nrows() != y.len() {
            return Err(RfError::DimensionMismatch { rows: x.nrows(), targets: y.len() });
        }
        if !x.is_finite() || !y.iter().all(|v| v.is_finite()) {
            return Err(RfError::NonFinite);
        }
        let n = x.nrows();
        let mut codes = Vec::with_capacity(x.ncols());
        let mut values = Vec::with_capacity(x.ncols());
        for f in 0..x.ncols() {
            let mut order: Vec<u32> = (0..n as u32).collect();
            order.sort_by(|&a, &b| x.get(a as usize, f).total_cmp(&x.get(b as usize, f)));
            let mut feature_codes = alloc::vec![0u32; n];
            let mut distinct: Vec<f64> = Vec::new();
            for &row in &order {
                let v = x.get(row as usize, f);
                if distinct.last() != Some(&v) {
                    distinct.push(v);
                }
                feature_codes[row as usize] = (distinct.len() - 1) as u32;
            }
            codes.push(feature_codes);
            values.push(distinct);
        }
        Ok(TrainingSet { x, y, codes, values })
    }

    pub fn nrows(&self) -> usize {
        self.y.len()
    }

    pub fn ncols(&self) -> usize {
        self.codes.len()
    }

    pub fn x(&self) -> &Matrix {
        self.x
    }

    pub fn y(&self) -> &[f64] {
        self.y
    }

}

/// Per-distinct-value accumulator: count, sum and sum of squares of
/// node-centered targets.
#[derive(Clone, Copy)]
struct Run {
    code: u32,
    n: u32,
    sum: f64,
    sq: f64,
}

impl Run {
    const EMPTY: Run = Run { code: 0, n: 0, sum: 0.0, sq: 0.0 };
}

/// Grows one tree over the distinct sampled rows ("samples"). Each node
/// owns a range of `rows`, which lists its samples in ascending order and
/// is partitioned stably on every split.
struct Grower<'s, 'a> {
    set: &'s TrainingSet<'a>,
    min_leaf: usize,
    max_depth: usize,
    codes: Vec<Vec<u32>>,
    y: Vec<f64>,
    w: Vec<u32>,
    rows: Vec<u32>,
    spill: Vec<u32>,
    /// Per-feature accumulators indexed by code; all-zero between uses.
    bins: Vec<Vec<Run>>,
    touched: Vec<u32>,
}

struct BestSplit {
    sse: f64,
    feature: usize,
    code: u32,
    threshold: f64,
}

/// Per-feature runs of a node, centered on `center`.
struct NodeRuns {
    center: f64,
    features: Vec<Vec<Run>>,
}

/// Stable in-place partition of `idx`: samples whose code is at most
/// `split` first.
fn partition(idx: &mut [u32], codes: &[u32], split: u32, spill: &mut Vec<u32>) -> usize {
    spill.clear();
    let mut k = 0;
    for i in 0..idx.len() {
        let s = idx[i];
        if codes[s as usize] <= split {
            idx[k] = s;
            k += 1;
        } else {
            spill.push(s);
        }
    }
    idx[k..].copy_from_slice(spill);
    k
}

/// `parent - child`, dropping codes that vanish.
fn subtract(parent: &[Run], child: &[Run]) -> Vec<Run> {
    let mut out = Vec::with_capacity(parent.len());
    let mut c = child.iter().peekable();
    for p in parent {
        match c.peek() {
            Some(q) if q.code == p.code => {
                if p.n > q.n {
                    out.push(Run { code: p.code, n: p.n - q.n, sum: p.sum - q.sum, sq: p.sq - q.sq });
                }
                c.next();
            }
            _ => out.push(*p),
        }
    }
    out
}

impl Grower<'_, '_> {
    /// Weighted count, weighted target sum and whether the target is
    /// constant over the node.
    fn scan(&self, range: Range<usize>) -> (usize, f64, bool) {
        let rows = &self.rows[range];
        let first = self.y[rows[0] as usize];
        let (mut n, mut sum, mut constant) = (0usize, 0.0, true);
        for &s in rows {
            let (w, y) = (self.w[s as usize], self.y[s as usize]);
            n += w as usize;
            sum += f64::from(w) * y;
            constant &= y == first;
        }
        (n, sum, constant)
    }

    /// Runs of every feature over `range`, centered on `center`.
    fn collect(&mut self, range: Range<usize>, center: f64) -> NodeRuns {
        let features = (0..self.codes.len()).map(|f| self.collect_runs(f, range.clone(), center)).collect();
        NodeRuns { center, features }
    }

    /// Distinct codes of feature `f` present in the node, ascending.
    fn collect_runs(&mut self, f: usize, range: Range<usize>, center: f64) -> Vec<Run> {
        let codes = &self.codes[f];
        let bins = &mut self.bins[f];
        self.touched.clear();
        for &s in &self.rows[range] {
            let s = s as usize;
            let (code, w) = (codes[s], self.w[s]);
            let b = &mut bins[code as usize];
            if b.n == 0 {
                self.touched.push(code);
            }
            let d = self.y[s] - center;
            let wd = f64::from(w) * d;
            b.n += w;
            b.sum += wd;
            b.sq += wd * d;
        }
        self.touched.sort_unstable();
        self.touched
            .iter()
            .map(|&code| {
                let b = &mut bins[code as usize];
                let run = Run { code, ..*b };
                *b = Run::EMPTY;
                run
            })
            .collect()
    }

    fn best_split(&self, runs: &NodeRuns, mean: f64, n: usize) -> Option<BestSplit> {
        // Shift statistics from the runs' center to the node mean.
        let delta = runs.center - mean;
        let shift = |r: &Run| {
            let nf = f64::from(r.n);
            (r.sum + nf * delta, r.sq + 2.0 * delta * r.sum + nf * delta * delta)
        };
        let node_sse: f64 = runs.features[0].iter().map(|r| shift(r).1).sum();
        let tol = TIE_TOLERANCE * node_sse;
        let mut best: Option<BestSplit> = None;

        for (f, feature_runs) in runs.features.iter().enumerate() {
            let (total_sum, total_sq) = feature_runs.iter().fold((0.0, 0.0), |(s, q), r| {
                let (rs, rq) = shift(r);
                (s + rs, q + rq)
            });
            let (mut ln, mut ls, mut lq) = (0usize, 0.0, 0.0);
            for pair in feature_runs.windows(2) {
                let (rs, rq) = shift(&pair[0]);
                ln += pair[0].n as usize;
                ls += rs;
                lq += rq;
                let rn = n - ln;
                if ln < self.min_leaf {
                    continue;
                }
                if rn < self.min_leaf {
                    break;
                }
                let (rs, rq) = (total_sum - ls, total_sq - lq);
                let sse = (lq - ls * ls / ln as f64) + (rq - rs * rs / rn as f64);
                if best.as_ref().is_none_or(|b| sse < b.sse - tol) {
                    let values = &self.set.values[f];
                    best = Some(BestSplit {
                        sse,
                        feature: f,
                        code: pair[0].code,
                        threshold: midpoint(values[pair[0].code as usize], values[pair[1].code as usize]),
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, range: Range<usize>, depth: usize, runs: Option<NodeRuns>) -> TreeNode {
        let (n, sum, constant) = self.scan(range.clone());
        let leaf = TreeNode::Leaf { value: sum / n as f64, count: n };
        if depth >= self.max_depth || constant || n < 2 * self.min_leaf {
            return leaf;
        }
        let mean = sum / n as f64;
        let runs = match runs {
            Some(r) => r,
            None => self.collect(range.clone(), mean),
        };
        let Some(split) = self.best_split(&runs, mean, n) else {
            return leaf;
        };

        let codes = &self.codes[split.feature];
        let n_left = partition(&mut self.rows[range.clone()], codes, split.code, &mut self.spill);
        let mid = range.start + n_left;
        let (left_range, right_range) = (range.start..mid, mid..range.end);

        // Histogram the smaller child; the larger one is the remainder.
        let (left_runs, right_runs) = if depth + 1 >= self.max_depth {
            (None, None)
        } else if left_range.len() <= right_range.len() {
            let small = self.collect(left_range.clone(), runs.center);
            let large = self.remainder(&runs, &small);
            (Some(small), Some(large))
        } else {
            let small = self.collect(right_range.clone(), runs.center);
            let large = self.remainder(&runs, &small);
            (Some(large), Some(small))
        };
        drop(runs);
        let left = self.grow(left_range, depth + 1, left_runs);
        let right = self.grow(right_range, depth + 1, right_runs);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn remainder(&self, parent: &NodeRuns, child: &NodeRuns) -> NodeRuns {
        let features = parent.features.iter().zip(&child.features).map(|(p, c)| subtract(p, c)).collect();
        NodeRuns { center: parent.center, features }
    }
}

/// Midpoint of two consecutive distinct values, kept strictly below `hi`.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m < hi {
        m
    } else {
        lo
    }
}

/// Grow one tree on `rows` (indices into `set`, repeats allowed). Repeated
/// rows are handled as weights; row order does not matter.
pub fn grow_tree(set: &TrainingSet<'_>, rows: Vec<u32>, min_leaf: usize, max_depth: usize) -> TreeNode {
    assert!(!rows.is_empty(), "tree needs at least one row");
    let mut weight = alloc::vec![0u32; set.nrows()];
    for &r in &rows {
        weight[r as usize] += 1;
    }
    let rows: Vec<usize> = (0..set.nrows()).filter(|&r| weight[r] > 0).collect();
    let mut grower = Grower {
        set,
        min_leaf: min_leaf.max(1),
        max_depth,
        codes: set.codes.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect(),
        y: rows.iter().map(|&r| set.y[r]).collect(),
        w: rows.iter().map(|&r| weight[r]).collect(),
        rows: (0..rows.len() as u32).collect(),
        spill: Vec::new(),
        bins: set.values.iter().map(|v| alloc::vec![Run::EMPTY; v.len()]).collect(),
        touched: Vec::new(),
    };
    grower.grow(0..rows.len(), 0, None)
}

/// Grow one CART tree on the given rows of `(x, y)`, using the leaf-size and
/// depth limits of `params`.
pub fn fit_tree(
    x: &Matrix,
    y: &[f64],
    params: &super::RfHyperparams,
    row_indices: &[usize],
) -> Result<TreeNode, RfError> {
    if row_indices.is_empty() {
        return Err(RfError::TooFewRows { needed: 1, got: 0 });
    }
    let set = TrainingSet::new(x, y)?;
    let rows = row_indices.iter().map(|&r| r as u32).collect();
    Ok(grow_tree(&set, rows, params.min_leaf, params.max_depth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rf::RfHyperparams;

    fn params(min_leaf: usize, max_depth: usize) -> RfHyperparams {
        RfHyperparams { n_trees: 1, min_leaf, max_depth, seed: 0, bootstrap: false }
    }

    #[test]
    fn constant_target_is_one_leaf() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0]]);
        let t = fit_tree(&x, &[5.0; 4], &params(1, 10), &[0, 1, 2, 3]).unwrap();
        assert_eq!(t, TreeNode::Leaf { value: 5.0, count: 4 });
    }

    #[test]
    fn zero_depth_is_mean() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0]]);
        let t = fit_tree(&x, &[1.0, 2.0, 3.0, 6.0], &params(1, 0), &[0, 1, 2, 3]).unwrap();
        assert_eq!(t, TreeNode::Leaf { value: 3.0, count: 4 });
    }

    #[test]
    fn binary_feature_splits_first() {
        // Feature 1 is noise, feature 0 separates the two levels.
        let rows: Vec<[f64; 2]> = (0..8).map(|i| [(i % 2) as f64, (i * 7 % 5) as f64]).collect();
        let y: Vec<f64> = (0..8).map(|i| if i % 2 == 0 { 10.0 } else { 30.0 }).collect();
        let x = Matrix::from_rows(&rows);
        let t = fit_tree(&x, &y, &params(1, 3), &(0..8).collect::<Vec<_>>()).unwrap();
        let TreeNode::Split { feature, threshold, left, right } = t else { panic!() };
        assert_eq!((feature, threshold), (0, 0.5));
        assert_eq!(*left, TreeNode::Leaf { value: 10.0, count: 4 });
        assert_eq!(*right, TreeNode::Leaf { value: 30.0, count: 4 });
    }

    #[test]
    fn min_leaf_blocks_small_children() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0], [5.0]]);
        let y = [0.0, 0.0, 0.0, 0.0, 100.0];
        let t = fit_tree(&x, &y, &params(2, 5), &[0, 1, 2, 3, 4]).unwrap();
        for (_, count) in t.leaves() {
            assert!(count >= 2);
        }
    }

    #[test]
    fn midpoint_stays_below_upper() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        assert!(midpoint(lo, hi) < hi);
        assert_eq!(midpoint(2.0, 4.0), 3.0);
    }

    #[test]
    fn json_shape() {
        let t = TreeNode::Split {
            feature: 2,
            threshold: 1.5,
            left: Box::new(TreeNode::Leaf { value: 1.0, count: 3 }),
            right: Box::new(TreeNode::Leaf { value: 2.0, count: 4 }),
        };
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"f":2,"t":1.5,"l":{"v":1.0,"n":3},"r":{"v":2.0,"n":4}}"#);
        assert_eq!(serde_json::from_str::<TreeNode>(&s).unwrap(), t);
    }
}

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, TrainingSet, TreeNode};
use super::RfError;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfHyperparams {
    pub n_trees: usize,
    /// Minimum training rows per leaf (bootstrap repeats count).
    pub min_leaf: usize,
    /// Root is depth 0.
    pub max_depth: usize,
    pub seed: u64,
    pub bootstrap: bool,
}

impl Default for RfHyperparams {
    fn default() -> Self {
        RfHyperparams { n_trees: 500, min_leaf: 5, max_depth: 10, seed: 0, bootstrap: true }
    }
}

impl RfHyperparams {
    fn check(&self) -> Result<(), RfError> {
        if self.n_trees == 0 {
            return Err(RfError::InvalidParams("n_trees must be positive"));
        }
        if self.min_leaf == 0 {
            return Err(RfError::InvalidParams("min_leaf must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub trees: Vec<TreeNode>,
    pub hyperparams: RfHyperparams,
    pub feature_names: Vec<String>,
}

impl RfModel {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, RfError> {
        predict_forest(self, x)
    }

    /// Predictions for every row of `x`; equal to calling [`predict_forest`]
    /// per row.
    pub fn predict_rows(&self, x: &Matrix) -> Result<Vec<f64>, RfError> {
        if x.ncols() != self.n_features() {
            return Err(RfError::FeatureCount { expected: self.n_features(), got: x.ncols() });
        }
        let mut total = alloc::vec![0.0; x.nrows()];
        let mut flat = Vec::new();
        for tree in &self.trees {
            flat.clear();
            flatten(tree, &mut flat);
            for (acc, row) in total.iter_mut().zip(x.row_iter()) {
                *acc += predict_flat(&flat, row);
            }
        }
        let k = self.trees.len() as f64;
        Ok(total.into_iter().map(|t| t / k).collect())
    }
}

const LEAF: u32 = u32::MAX;

/// Preorder node: a split's left child follows it, `right` indexes the
/// right child. Leaves carry their value in `value`.
#[derive(Clone, Copy)]
struct FlatNode {
    feature: u32,
    right: u32,
    value: f64,
}

fn flatten(node: &TreeNode, out: &mut Vec<FlatNode>) {
    match node {
        TreeNode::Leaf { value, .. } => out.push(FlatNode { feature: LEAF, right: 0, value: *value }),
        TreeNode::Split { feature, threshold, left, right } => {
            let at = out.len();
            out.push(FlatNode { feature: *feature as u32, right: 0, value: *threshold });
            flatten(left, out);
            out[at].right = out.len() as u32;
            flatten(right, out);
        }
    }
}

fn predict_flat(nodes: &[FlatNode], x: &[f64]) -> f64 {
    let mut i = 0;
    loop {
        let node = nodes[i];
        if node.feature == LEAF {
            return node.value;
        }
        i = if x[node.feature as usize] <= node.value { i + 1 } else { node.right as usize };
    }
}

/// Random stream for tree `index`: stream `index` of a ChaCha8 generator
/// keyed by `seed`. Independent of which thread grows the tree.
pub fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn tree_rows(n: usize, params: &RfHyperparams, index: usize) -> Vec<u32> {
    if params.bootstrap {
        let mut rng = tree_rng(params.seed, index);
        (0..n).map(|_| rng.random_range(0..n as u32)).collect()
    } else {
        (0..n as u32).collect()
    }
}

/// Fit `params.n_trees` trees, tree `i` on its own bootstrap resample.
pub fn fit_forest(x: &Matrix, y: &[f64], params: &RfHyperparams) -> Result<RfModel, RfError> {
    let set = TrainingSet::new(x, y)?;
    let names = (1..=x.ncols()).map(|j| alloc::format!("x{j}")).collect();
    fit_forest_on(&set, params, names)
}

/// As [`fit_forest`] on a pre-ranked training set.
pub fn fit_forest_on(set: &TrainingSet<'_>, params: &RfHyperparams, feature_names: Vec<String>) -> Result<RfModel, RfError> {
    params.check()?;
    let n = set.nrows();
    if n < 2 {
        return Err(RfError::TooFewRows { needed: 2, got: n });
    }
    let grow = |i: usize| grow_tree(set, tree_rows(n, params, i), params.min_leaf, params.max_depth);

    #[cfg(feature = "std")]
    let trees = {
        use rayon::prelude::*;
        (0..params.n_trees).into_par_iter().map(grow).collect()
    };
    #[cfg(not(feature = "std"))]
    let trees = (0..params.n_trees).map(grow).collect();

    Ok(RfModel { trees, hyperparams: *params, feature_names })
}

/// Mean of the tree predictions, accumulated in tree order.
pub fn predict_forest(m: &RfModel, x: &[f64]) -> Result<f64, RfError> {
    if x.len() != m.n_features() {
        return Err(RfError::FeatureCount { expected: m.n_features(), got: x.len() });
    }
    let total = m.trees.iter().fold(0.0, |acc, t| acc + t.predict(x));
    Ok(total / m.trees.len() as f64)
}

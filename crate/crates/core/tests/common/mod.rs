//! Reference implementations used as test oracles. They favor directness
//! over speed and share no code with the library.

#![allow(dead_code)]

use chrono::{Datelike, NaiveDate};
use traffic_core::rf::TIE_TOLERANCE;
use traffic_core::{Matrix, TreeNode};

/// Least squares through the normal equations `(A'A) b = A'y` with
/// `A = [1 | X]`, solved by Gaussian elimination with partial pivoting.
pub fn ols_normal_equations(x: &Matrix, y: &[f64]) -> Vec<f64> {
    let (n, k) = (x.nrows(), x.ncols());
    let p = k + 1;
    let a = |i: usize, j: usize| if j == 0 { 1.0 } else { x.get(i, j - 1) };
    // Augmented system [A'A | A'y].
    let mut m = vec![vec![0.0; p + 1]; p];
    for r in 0..p {
        for c in 0..p {
            m[r][c] = (0..n).map(|i| a(i, r) * a(i, c)).sum();
        }
        m[r][p] = (0..n).map(|i| a(i, r) * y[i]).sum();
    }
    for col in 0..p {
        let pivot = (col..p).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, pivot);
        for r in col + 1..p {
            let factor = m[r][col] / m[col][col];
            for c in col..=p {
                m[r][c] -= factor * m[col][c];
            }
        }
    }
    let mut b = vec![0.0; p];
    for r in (0..p).rev() {
        let tail: f64 = (r + 1..p).map(|c| m[r][c] * b[c]).sum();
        b[r] = (m[r][p] - tail) / m[r][r];
    }
    b
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sse(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|y| (y - m) * (y - m)).sum()
}

/// Regression tree by trying every feature and every cut between
/// consecutive distinct values at every node. A candidate replaces the
/// incumbent only if it lowers the SSE by more than the tie tolerance, so
/// earlier features and lower cuts win ties. `rows` must be ascending.
pub fn cart_oracle(x: &Matrix, y: &[f64], rows: &[usize], min_leaf: usize, max_depth: usize) -> TreeNode {
    cart_node(x, y, rows, min_leaf.max(1), max_depth, 0)
}

fn cart_node(x: &Matrix, y: &[f64], rows: &[usize], min_leaf: usize, max_depth: usize, depth: usize) -> TreeNode {
    let ys: Vec<f64> = rows.iter().map(|&r| y[r]).collect();
    let leaf = TreeNode::Leaf { value: mean(&ys), count: rows.len() };
    if depth >= max_depth || ys.iter().all(|&v| v == ys[0]) || rows.len() < 2 * min_leaf {
        return leaf;
    }
    let tol = TIE_TOLERANCE * sse(&ys);
    let mut best: Option<(f64, usize, f64, f64)> = None;
    for f in 0..x.ncols() {
        let mut values: Vec<f64> = rows.iter().map(|&r| x.get(r, f)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for cut in values.windows(2) {
            let (left, right): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| x.get(r, f) <= cut[0]);
            if left.len() < min_leaf || right.len() < min_leaf {
                continue;
            }
            let score = sse(&left.iter().map(|&r| y[r]).collect::<Vec<_>>())
                + sse(&right.iter().map(|&r| y[r]).collect::<Vec<_>>());
            if best.is_none_or(|b| score < b.0 - tol) {
                best = Some((score, f, cut[0], cut[1]));
            }
        }
    }
    let Some((_, feature, lo, hi)) = best else {
        return leaf;
    };
    let (left, right): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| x.get(r, feature) <= lo);
    TreeNode::Split {
        feature,
        threshold: (lo + hi) / 2.0,
        left: Box::new(cart_node(x, y, &left, min_leaf, max_depth, depth + 1)),
        right: Box::new(cart_node(x, y, &right, min_leaf, max_depth, depth + 1)),
    }
}

/// Same shape, same split features, thresholds within `1e-12` relative,
/// same leaf counts and leaf values within `value_tol` relative.
pub fn same_tree(a: &TreeNode, b: &TreeNode, value_tol: f64) -> Result<(), String> {
    let close = |u: f64, v: f64, tol: f64| (u - v).abs() <= tol * u.abs().max(v.abs()).max(1e-300);
    match (a, b) {
        (TreeNode::Leaf { value: va, count: ca }, TreeNode::Leaf { value: vb, count: cb }) => {
            if ca != cb || !(va == vb || close(*va, *vb, value_tol)) {
                return Err(format!("leaf ({va}, {ca}) vs ({vb}, {cb})"));
            }
            Ok(())
        }
        (
            TreeNode::Split { feature: fa, threshold: ta, left: la, right: ra },
            TreeNode::Split { feature: fb, threshold: tb, left: lb, right: rb },
        ) => {
            if fa != fb || !(ta == tb || close(*ta, *tb, 1e-12)) {
                return Err(format!("split (x{fa} <= {ta}) vs (x{fb} <= {tb})"));
            }
            same_tree(la, lb, value_tol).map_err(|e| format!("left: {e}"))?;
            same_tree(ra, rb, value_tol).map_err(|e| format!("right: {e}"))
        }
        _ => Err(format!("shape differs: {a:?} vs {b:?}")),
    }
}

/// Day of week by Zeller's congruence: 1 = Sunday .. 7 = Saturday.
pub fn zeller_weekday(d: NaiveDate) -> u8 {
    let (mut y, mut m) = (d.year(), d.month() as i32);
    if m < 3 {
        m += 12;
        y -= 1;
    }
    let (k, j) = (y % 100, y / 100);
    let h = (d.day() as i32 + 13 * (m + 1) / 5 + k + k / 4 + j / 4 + 5 * j) % 7;
    // h: 0 = Saturday, 1 = Sunday, ...
    (((h + 6) % 7) + 1) as u8
}

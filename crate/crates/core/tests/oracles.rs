mod common;

use common::{cart_oracle, ols_normal_equations, same_tree};
use proptest::prelude::*;
use traffic_core::{fit_mlr, fit_tree, Matrix, RfHyperparams};

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

prop_compose! {
    fn ols_instance()(n in 8usize..=100)(
        x in prop::collection::vec(-50.0f64..50.0, n * 3),
        beta in prop::collection::vec(-5.0f64..5.0, 4),
        noise in prop::collection::vec(-1.0f64..1.0, n),
    ) -> (Matrix, Vec<f64>) {
        let m = Matrix::from_vec(noise.len(), 3, x);
        let y = m.row_iter().zip(&noise).map(|(r, e)| beta[0] + r.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>() + e).collect();
        (m, y)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ols_matches_normal_equations((x, y) in ols_instance()) {
        let fit = fit_mlr(&x, &y).unwrap();
        let oracle = ols_normal_equations(&x, &y);
        for (a, b) in fit.coefficients.iter().zip(&oracle) {
            prop_assert!(rel_err(*a, *b) <= 1e-8, "{:?} vs {:?}", fit.coefficients, oracle);
        }
    }
}

prop_compose! {
    /// Small designs drawn from a few distinct values so ties are common.
    fn cart_instance()(n in 2usize..=12, k in 1usize..=3)(
        x in prop::collection::vec(0u8..5, n * k),
        y in prop::collection::vec(prop_oneof![(0u8..4).prop_map(f64::from), -10.0f64..10.0], n),
        k in Just(k),
        min_leaf in 1usize..=3,
        max_depth in 1usize..=5,
    ) -> (Matrix, Vec<f64>, usize, usize) {
        let x = Matrix::from_vec(y.len(), k, x.into_iter().map(f64::from).collect());
        (x, y, min_leaf, max_depth)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn tree_matches_exhaustive_search((x, y, min_leaf, max_depth) in cart_instance()) {
        let rows: Vec<usize> = (0..y.len()).collect();
        let params = RfHyperparams { min_leaf, max_depth, ..RfHyperparams::default() };
        let tree = fit_tree(&x, &y, &params, &rows).unwrap();
        let oracle = cart_oracle(&x, &y, &rows, min_leaf, max_depth);
        if let Err(e) = same_tree(&tree, &oracle, 0.0) {
            return Err(TestCaseError::fail(e));
        }
    }
}

#[test]
fn tree_on_a_row_subset() {
    let x = Matrix::from_rows(&[[1.0, 0.0], [2.0, 1.0], [3.0, 0.0], [4.0, 1.0], [5.0, 0.0], [6.0, 1.0]]);
    let y = [1.0, 9.0, 1.5, 9.5, 2.0, 10.0];
    let rows = [0, 1, 3, 4, 5];
    let params = RfHyperparams { min_leaf: 1, max_depth: 3, ..RfHyperparams::default() };
    let tree = fit_tree(&x, &y, &params, &rows).unwrap();
    same_tree(&tree, &cart_oracle(&x, &y, &rows, 1, 3), 0.0).unwrap();
}

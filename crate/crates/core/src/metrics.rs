//! Regression metrics and the interval-scaled error transform.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Interval, ModelKind};

/// The raw data's collection interval, in minutes.
pub const NATIVE_INTERVAL_MIN: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {actual} actual vs {predicted} predicted values")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("actual values are constant; R² is undefined")]
    ConstantTarget,
    #[error("interval must be positive, got {0} min")]
    NonPositiveInterval(f64),
}

fn check(y: &[f64], yhat: &[f64], needed: usize) -> Result<(), MetricsError> {
    if y.len() != yhat.len() {
        return Err(MetricsError::LengthMismatch { actual: y.len(), predicted: yhat.len() });
    }
    if y.len() < needed {
        return Err(MetricsError::TooFew { needed, got: y.len() });
    }
    Ok(())
}

/// `1 - SS_res / SS_tot`.
pub fn r_squared(y: &[f64], yhat: &[f64]) -> Result<f64, MetricsError> {
    check(y, yhat, 2)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if ss_tot == 0.0 {
        return Err(MetricsError::ConstantTarget);
    }
    let ss_res: f64 = y.iter().zip(yhat).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64, MetricsError> {
    check(y, yhat, 1)?;
    let total: f64 = y.iter().zip(yhat).map(|(a, p)| (a - p).abs()).sum();
    Ok(total / y.len() as f64)
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64, MetricsError> {
    check(y, yhat, 1)?;
    let total: f64 = y.iter().zip(yhat).map(|(a, p)| (a - p) * (a - p)).sum();
    Ok(libm::sqrt(total / y.len() as f64))
}

/// Express an error measured on `interval_min`-minute sums per native
/// 30-second slot: `err * 0.5 / T`.
pub fn scale_error(err: f64, interval_min: f64) -> Result<f64, MetricsError> {
    if interval_min.is_nan() || interval_min <= 0.0 {
        return Err(MetricsError::NonPositiveInterval(interval_min));
    }
    Ok(err * NATIVE_INTERVAL_MIN / interval_min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub model: ModelKind,
    pub interval: Interval,
    pub n: usize,
    pub r2: f64,
    pub mae: f64,
    pub rmse: f64,
    pub scaled_mae: f64,
    pub scaled_rmse: f64,
}

impl MetricsReport {
    pub fn evaluate(
        model: ModelKind,
        interval: Interval,
        y: &[f64],
        yhat: &[f64],
    ) -> Result<MetricsReport, MetricsError> {
        let mae = mae(y, yhat)?;
        let rmse = rmse(y, yhat)?;
        Ok(MetricsReport {
            model,
            interval,
            n: y.len(),
            r2: r_squared(y, yhat)?,
            mae,
            rmse,
            scaled_mae: scale_error(mae, interval.minutes())?,
            scaled_rmse: scale_error(rmse, interval.minutes())?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn r2_examples() {
        let y = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        assert_eq!(r_squared(&y, &[2.5; 4]).unwrap(), 0.0);
        assert!((r_squared(&y, &[1.0, 2.0, 3.0, 5.0]).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(r_squared(&[3.0, 3.0], &[3.0, 3.0]), Err(MetricsError::ConstantTarget));
        assert!(matches!(r_squared(&[1.0], &[1.0]), Err(MetricsError::TooFew { .. })));
    }

    #[test]
    fn mae_and_rmse_examples() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[0.0, 0.0], &[2.0, -2.0]).unwrap(), 2.0);
        assert_eq!(rmse(&[0.0], &[3.0]).unwrap(), 3.0);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        assert!(matches!(mae(&[], &[]), Err(MetricsError::TooFew { .. })));
        assert!(matches!(rmse(&[1.0], &[]), Err(MetricsError::LengthMismatch { .. })));
    }

    #[test]
    fn mae_matches_fold() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let y: Vec<f64> = (0..100).map(|_| rng.random_range(-50.0..50.0)).collect();
        let p: Vec<f64> = (0..100).map(|_| rng.random_range(-50.0..50.0)).collect();
        let oracle = y.iter().zip(&p).fold(0.0, |acc, (a, b)| acc + (a - b).abs()) / 100.0;
        assert!((mae(&y, &p).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn scaled_error_examples() {
        assert_eq!(scale_error(4.0, 0.5).unwrap(), 4.0);
        assert_eq!(scale_error(3.0, 15.0).unwrap(), 0.1);
        assert_eq!(scale_error(10.0, 5.0).unwrap(), 1.0);
        assert!(scale_error(1.0, 0.0).is_err());
        assert!(scale_error(1.0, -1.0).is_err());
    }

    fn pairs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..40).prop_flat_map(|n| {
            (proptest::collection::vec(-1e3..1e3f64, n), proptest::collection::vec(-1e3..1e3f64, n))
        })
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae((y, p) in pairs()) {
            prop_assert!(rmse(&y, &p).unwrap() >= mae(&y, &p).unwrap() * (1.0 - 1e-12));
        }

        #[test]
        fn r2_shift_invariant((y, p) in pairs(), c in -1e3..1e3f64) {
            prop_assume!(y.len() >= 2);
            let Ok(base) = r_squared(&y, &p) else { return Ok(()) };
            let ys: Vec<f64> = y.iter().map(|v| v + c).collect();
            let ps: Vec<f64> = p.iter().map(|v| v + c).collect();
            let shifted = r_squared(&ys, &ps).unwrap();
            prop_assert!((base - shifted).abs() <= 1e-6 * (1.0 + base.abs()));
        }

        #[test]
        fn permutation_invariant((y, p) in pairs(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut idx: Vec<usize> = (0..y.len()).collect();
            idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
            let ps: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
            prop_assert!((mae(&y, &p).unwrap() - mae(&ys, &ps).unwrap()).abs() < 1e-9);
            prop_assert!((rmse(&y, &p).unwrap() - rmse(&ys, &ps).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn scaling_is_linear_and_decreasing(e in 0.0..1e4f64, k in 0.0..10.0f64, t in 0usize..5) {
            let a = Interval::ALL[t].minutes();
            let b = Interval::ALL[t + 1].minutes();
            prop_assert!((scale_error(k * e, a).unwrap() - k * scale_error(e, a).unwrap()).abs() < 1e-9 * (1.0 + k * e));
            if e > 0.0 {
                prop_assert!(scale_error(e, b).unwrap() < scale_error(e, a).unwrap());
            }
        }
    }
}

//! Holdout backtests and the method comparison matrix.
//!
//! Each method is fitted on the training head only. The holdout is then
//! walked one step at a time: predict, observe, update the state with the
//! parameters frozen. The holdout MSE is taken over those one-step errors,
//! without flooring.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forecast::{fit_method, replay, FittedModel, ForecastError, MethodId, MethodOptions};
use crate::series::{split, DemandSeries, SeriesError, SplitSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("length mismatch: {actual} actual values, {predicted} predictions")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("no values to compare")]
    Empty,
    #[error(transparent)]
    Split(#[from] SeriesError),
    #[error(transparent)]
    Method(#[from] ForecastError),
    #[error("every method failed: {}", summarize(.0))]
    AllMethodsFailed(Vec<(MethodId, String)>),
    #[error("need at least 2 successful methods, have {available}")]
    InsufficientResults { available: usize },
}

fn summarize(failures: &[(MethodId, String)]) -> String {
    failures
        .iter()
        .map(|(m, why)| format!("{m}: {why}"))
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn mse(actual: &[f64], predicted: &[f64]) -> Result<f64, EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(crate::forecast::mean_squared(actual, predicted))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Backtest {
    pub method: MethodId,
    pub train_len: usize,
    /// Fit on the training head; its state is the one at the split point.
    pub fitted: FittedModel,
    pub holdout_actual: Vec<f64>,
    pub holdout_predictions: Vec<f64>,
    pub mse: f64,
}

pub fn backtest(
    series: &DemandSeries,
    method: MethodId,
    split_spec: &SplitSpec,
    options: &MethodOptions,
) -> Result<Backtest, EvalError> {
    let (train, holdout) = split(series, split_spec)?;
    let fitted = fit_method(method, &train, options)?;
    let mut state = fitted.state.clone();
    let holdout_predictions = replay(&mut state, holdout.values());
    let mse = mse(holdout.values(), &holdout_predictions)?;
    if !mse.is_finite() {
        return Err(ForecastError::NumericalFailure("holdout error is not finite".into()).into());
    }
    Ok(Backtest {
        method,
        train_len: train.len(),
        fitted,
        holdout_actual: holdout.values().to_vec(),
        holdout_predictions,
        mse,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    Mse(f64),
    Failed(String),
}

impl Cell {
    pub fn mse(&self) -> Option<f64> {
        match self {
            Cell::Mse(v) => Some(*v),
            Cell::Failed(_) => None,
        }
    }
}

/// One series' results: a cell per method in [`MethodId::ALL`] order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationColumn {
    pub label: String,
    pub cells: Vec<(MethodId, Cell)>,
    /// Successful methods, best first; ties keep method order.
    pub ranking: Vec<MethodId>,
    pub recommended: MethodId,
}

impl EvaluationColumn {
    /// Builds the ranking. Fails when every cell is a failure.
    pub fn from_cells(label: String, cells: Vec<(MethodId, Cell)>) -> Result<Self, EvalError> {
        let mut ok: Vec<(MethodId, f64)> = cells
            .iter()
            .filter_map(|(m, c)| c.mse().map(|v| (*m, v)))
            .collect();
        ok.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let ranking: Vec<MethodId> = ok.into_iter().map(|(m, _)| m).collect();
        let Some(&recommended) = ranking.first() else {
            let failures = cells
                .into_iter()
                .filter_map(|(m, c)| match c {
                    Cell::Failed(why) => Some((m, why)),
                    Cell::Mse(_) => None,
                })
                .collect();
            return Err(EvalError::AllMethodsFailed(failures));
        };
        Ok(Self {
            label,
            cells,
            ranking,
            recommended,
        })
    }

    pub fn cell(&self, method: MethodId) -> Option<&Cell> {
        self.cells.iter().find(|(m, _)| *m == method).map(|(_, c)| c)
    }

    pub fn mse_of(&self, method: MethodId) -> Option<f64> {
        self.cell(method).and_then(Cell::mse)
    }
}

/// Backtests every method on `series`. Method failures become cells.
pub fn compare_methods(
    series: &DemandSeries,
    split_spec: &SplitSpec,
    options: &MethodOptions,
) -> Result<EvaluationColumn, EvalError> {
    split(series, split_spec)?;
    let cells: Vec<(MethodId, Cell)> = MethodId::ALL
        .par_iter()
        .map(|&m| {
            let cell = match backtest(series, m, split_spec, options) {
                Ok(b) => Cell::Mse(b.mse),
                Err(e) => Cell::Failed(e.to_string()),
            };
            (m, cell)
        })
        .collect();
    let label = series.origin_label().unwrap_or("series").to_string();
    EvaluationColumn::from_cells(label, cells)
}

/// Methods × series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationMatrix {
    pub columns: Vec<EvaluationColumn>,
}

impl EvaluationMatrix {
    pub fn new(columns: Vec<EvaluationColumn>) -> Self {
        Self { columns }
    }

    /// Mean MSE per method over the columns. A method that failed anywhere
    /// gets a failed cell naming how often.
    pub fn aggregate(&self, label: impl Into<String>) -> Result<EvaluationColumn, EvalError> {
        let total = self.columns.len();
        let cells = MethodId::ALL
            .iter()
            .map(|&m| {
                let values: Vec<f64> = self.columns.iter().filter_map(|c| c.mse_of(m)).collect();
                let cell = if total == 0 {
                    Cell::Failed("no series".into())
                } else if values.len() < total {
                    Cell::Failed(format!("failed on {} of {total} series", total - values.len()))
                } else {
                    Cell::Mse(values.iter().sum::<f64>() / total as f64)
                };
                (m, cell)
            })
            .collect();
        EvaluationColumn::from_cells(label.into(), cells)
    }
}

/// `1 - best / reference`, or 0 when the two are equal.
pub fn reduction(best: f64, reference: f64) -> f64 {
    if best == reference {
        0.0
    } else {
        1.0 - best / reference
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub method: MethodId,
    pub mse: f64,
    pub reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementReport {
    pub recommended: MethodId,
    pub recommended_mse: f64,
    pub vs_runner_up: Comparison,
    /// Against the moving-average baseline, when it produced a result.
    pub vs_baseline: Option<Comparison>,
}

pub fn improvement_report(column: &EvaluationColumn) -> Result<ImprovementReport, EvalError> {
    if column.ranking.len() < 2 {
        return Err(EvalError::InsufficientResults {
            available: column.ranking.len(),
        });
    }
    let best = column.ranking[0];
    let best_mse = column.mse_of(best).expect("ranked methods have results");
    let against = |m: MethodId| {
        column.mse_of(m).map(|v| Comparison {
            method: m,
            mse: v,
            reduction: reduction(best_mse, v),
        })
    };
    Ok(ImprovementReport {
        recommended: best,
        recommended_mse: best_mse,
        vs_runner_up: against(column.ranking[1]).expect("ranked methods have results"),
        vs_baseline: against(MethodId::MovingAverage),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::FitState;
    use crate::series::validate_series;
    use proptest::prelude::*;

    fn seasonal(n: usize) -> Vec<f64> {
        let season = [6.0, -2.0, 9.0, -4.0, 0.0, -9.0];
        (0..n)
            .map(|t| 80.0 + 0.7 * t as f64 + season[t % 6] + ((t * 7919) % 13) as f64 - 6.0)
            .collect()
    }

    fn series(v: &[f64], period: usize) -> DemandSeries {
        validate_series(v).unwrap().with_period(period).unwrap()
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap(), 1.0);
        assert_eq!(mse(&[0.0, 0.0], &[3.0, -1.0]).unwrap(), 5.0);
        assert!(matches!(mse(&[1.0], &[1.0, 2.0]), Err(EvalError::LengthMismatch { .. })));
        assert_eq!(mse(&[], &[]), Err(EvalError::Empty));
    }

    #[test]
    fn naive_forecast_identity() {
        let v = seasonal(60);
        let s = series(&v, 6);
        let opts = MethodOptions {
            ses_alpha: Some(1.0),
            ..MethodOptions::default()
        };
        let b = backtest(&s, MethodId::Ses, &SplitSpec::default(), &opts).unwrap();
        let start = b.train_len;
        let diffs: f64 = (start..60).map(|t| (v[t] - v[t - 1]).powi(2)).sum();
        assert!((b.mse - diffs / (60 - start) as f64).abs() < 1e-9);
    }

    #[test]
    fn noiseless_additive_is_recovered_out_of_sample() {
        let season = [6.0, -2.0, 9.0, -4.0, 0.0, -9.0];
        let v: Vec<f64> = (0..72).map(|t| 80.0 + 0.7 * t as f64 + season[t % 6]).collect();
        let b = backtest(
            &series(&v, 6),
            MethodId::HoltWintersAdditive,
            &SplitSpec::default(),
            &MethodOptions::default(),
        )
        .unwrap();
        assert!(b.mse < 1e-8, "{}", b.mse);
    }

    #[test]
    fn constant_series_recommends_ses() {
        let col = compare_methods(
            &series(&[7.0; 48], 4),
            &SplitSpec::default(),
            &MethodOptions::default(),
        )
        .unwrap();
        for (_, cell) in &col.cells {
            assert_eq!(cell, &Cell::Mse(0.0));
        }
        assert_eq!(col.recommended, MethodId::Ses);
        assert_eq!(col.ranking, MethodId::ALL.to_vec());
    }

    #[test]
    fn short_series_fails_holt_winters_only() {
        // 30 points, period 12: training keeps 24, one short of two cycles plus one.
        let v = seasonal(30);
        let col = compare_methods(&series(&v, 12), &SplitSpec::default(), &MethodOptions::default())
            .unwrap();
        assert!(matches!(col.cell(MethodId::HoltWintersAdditive), Some(Cell::Failed(_))));
        assert!(matches!(col.cell(MethodId::HoltWintersMultiplicative), Some(Cell::Failed(_))));
        assert!(col.mse_of(MethodId::Ses).is_some());
    }

    #[test]
    fn zeros_fail_multiplicative() {
        let mut v = seasonal(60);
        v[5] = 0.0;
        let col = compare_methods(&series(&v, 6), &SplitSpec::default(), &MethodOptions::default())
            .unwrap();
        let Some(Cell::Failed(why)) = col.cell(MethodId::HoltWintersMultiplicative) else {
            panic!("expected failure");
        };
        assert!(why.contains("strictly positive"));
    }

    #[test]
    fn split_errors_propagate() {
        let r = compare_methods(&series(&[1.0; 5], 4), &SplitSpec::default(), &MethodOptions::default());
        assert!(matches!(r, Err(EvalError::Split(_))));
    }

    #[test]
    fn holdout_does_not_leak_into_the_fit() {
        let v = seasonal(90);
        let mut corrupted = v.clone();
        for x in &mut corrupted[72..] {
            *x = 1e6 - *x;
        }
        for m in MethodId::ALL {
            let a = backtest(&series(&v, 6), m, &SplitSpec::default(), &MethodOptions::default())
                .unwrap();
            let b = backtest(&series(&corrupted, 6), m, &SplitSpec::default(), &MethodOptions::default())
                .unwrap();
            assert_eq!(a.fitted, b.fitted, "{m}");
        }
    }

    #[test]
    fn improvement_examples() {
        assert!((reduction(32448.0, 56889.0) - 0.4296).abs() < 5e-5);
        assert_eq!(reduction(5.0, 5.0), 0.0);
        let only_one = EvaluationColumn::from_cells(
            "x".into(),
            vec![
                (MethodId::Ses, Cell::Mse(3.0)),
                (MethodId::MovingAverage, Cell::Failed("no".into())),
            ],
        )
        .unwrap();
        assert_eq!(
            improvement_report(&only_one),
            Err(EvalError::InsufficientResults { available: 1 })
        );
    }

    #[test]
    fn report_against_runner_up_and_baseline() {
        let col = EvaluationColumn::from_cells(
            "lumpy".into(),
            vec![
                (MethodId::Ses, Cell::Mse(117724405.0)),
                (MethodId::HoltWintersAdditive, Cell::Mse(32448.0)),
                (MethodId::HoltWintersMultiplicative, Cell::Mse(59234.0)),
                (MethodId::StepwiseAr, Cell::Mse(56889.0)),
                (MethodId::MovingAverage, Cell::Mse(64000.0)),
            ],
        )
        .unwrap();
        let r = improvement_report(&col).unwrap();
        assert_eq!(r.recommended, MethodId::HoltWintersAdditive);
        assert_eq!(r.vs_runner_up.method, MethodId::StepwiseAr);
        assert!((r.vs_baseline.unwrap().reduction - (1.0 - 32448.0 / 64000.0)).abs() < 1e-15);
    }

    #[test]
    fn all_failed_is_an_error() {
        let r = EvaluationColumn::from_cells(
            "x".into(),
            vec![(MethodId::Ses, Cell::Failed("short".into()))],
        );
        assert!(matches!(r, Err(EvalError::AllMethodsFailed(f)) if f.len() == 1));
    }

    #[test]
    fn aggregate_means_and_failures() {
        let col = |a: f64, fail: bool| {
            let cells = MethodId::ALL
                .iter()
                .map(|&m| {
                    let c = if fail && m == MethodId::HoltWintersMultiplicative {
                        Cell::Failed("zero".into())
                    } else {
                        Cell::Mse(a + m as u8 as f64)
                    };
                    (m, c)
                })
                .collect();
            EvaluationColumn::from_cells("c".into(), cells).unwrap()
        };
        let agg = EvaluationMatrix::new(vec![col(1.0, false), col(3.0, true)])
            .aggregate("all")
            .unwrap();
        assert_eq!(agg.mse_of(MethodId::Ses), Some(2.0));
        assert!(agg.mse_of(MethodId::HoltWintersMultiplicative).is_none());
    }

    #[test]
    fn fitted_state_is_the_training_end() {
        let v = seasonal(60);
        let b = backtest(&series(&v, 6), MethodId::Ses, &SplitSpec::default(), &MethodOptions::default())
            .unwrap();
        let FitState::Ses(s) = &b.fitted.state else { panic!() };
        assert!(s.alpha > 0.0);
        assert_eq!(b.holdout_predictions.len(), 60 - b.train_len);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn scaling_scales_mse_quadratically(k in -3i32..=3, seed in 0u64..1000) {
            let c = 2f64.powi(k);
            let v: Vec<f64> = (0..72)
                .map(|t| 50.0 + ((t as u64 * 2654435761 + seed) % 97) as f64 + 10.0 * ((t % 6) as f64))
                .collect();
            let scaled: Vec<f64> = v.iter().map(|x| x * c).collect();
            for m in [MethodId::Ses, MethodId::HoltWintersAdditive, MethodId::StepwiseAr] {
                let a = backtest(&series(&v, 6), m, &SplitSpec::default(), &MethodOptions::default()).unwrap();
                let b = backtest(&series(&scaled, 6), m, &SplitSpec::default(), &MethodOptions::default()).unwrap();
                let want = a.mse * c * c;
                prop_assert!((b.mse - want).abs() <= 1e-6 * want.max(1.0), "{} {} {}", m, b.mse, want);
            }
        }
    }
}

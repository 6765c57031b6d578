//! Simple exponential smoothing.

use serde::{Deserialize, Serialize};

use super::{check_unit, FitState, FittedModel, ForecastError};
use crate::series::DemandSeries;

/// Candidate smoothing constants searched when none is given: 0.01 to 0.99.
pub const SES_GRID: std::ops::RangeInclusive<u32> = 1..=99;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SesState {
    pub alpha: f64,
    pub level: f64,
}

impl SesState {
    pub fn predict_next(&self) -> f64 {
        self.level
    }

    pub fn update(&mut self, y: f64) {
        self.level = self.alpha * y + (1.0 - self.alpha) * self.level;
    }
}

fn fit_with(values: &[f64], alpha: f64) -> FittedModel {
    let initial = FitState::Ses(SesState {
        alpha,
        level: values[0],
    });
    FittedModel::from_replay(initial, values, 1)
}

/// Fits SES with `L_1 = Y_1`. Without a fixed `alpha` the grid `k/100` is
/// searched for the smallest in-sample MSE, keeping the first on ties.
pub fn fit_ses(train: &DemandSeries, alpha: Option<f64>) -> Result<FittedModel, ForecastError> {
    let values = train.values();
    if values.len() < 2 {
        return Err(ForecastError::TooShort {
            required: 2,
            actual: values.len(),
        });
    }
    if let Some(a) = alpha {
        check_unit("alpha", a)?;
        return Ok(fit_with(values, a));
    }
    let mut best: Option<FittedModel> = None;
    for k in SES_GRID {
        let fit = fit_with(values, f64::from(k) / 100.0);
        if best.as_ref().is_none_or(|b| fit.train_mse < b.train_mse) {
            best = Some(fit);
        }
    }
    Ok(best.expect("grid is not empty"))
}

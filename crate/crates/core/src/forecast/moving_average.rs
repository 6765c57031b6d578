use serde::{Deserialize, Serialize};

use super::{FitState, FittedModel, ForecastError};
use crate::series::DemandSeries;

/// Mean of the last `window` observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingAverageState {
    /// Most recent observations, oldest first.
    pub window: Vec<f64>,
}

impl MovingAverageState {
    pub fn predict_next(&self) -> f64 {
        self.window.iter().sum::<f64>() / self.window.len() as f64
    }

    pub fn update(&mut self, y: f64) {
        self.window.remove(0);
        self.window.push(y);
    }
}

/// Moving average over one seasonal period.
pub fn fit_moving_average(train: &DemandSeries) -> Result<FittedModel, ForecastError> {
    let values = train.values();
    let s = train.period_length();
    if values.len() < s {
        return Err(ForecastError::TooShort {
            required: s,
            actual: values.len(),
        });
    }
    let initial = FitState::MovingAverage(MovingAverageState {
        window: values[..s].to_vec(),
    });
    Ok(FittedModel::from_replay(initial, values, s))
}

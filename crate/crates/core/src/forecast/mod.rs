//! Forecasting engines.
//!
//! Every engine is an initial state built from the head of the training data
//! plus a one-step update rule. Fitting replays the update over the rest of
//! the training data and records the one-step-ahead prediction made before
//! each observation; the same `predict_next`/`update` pair drives holdout
//! backtests, so in-sample and out-of-sample errors come from one code path.
//!
//! | method | initial state | predictions start at |
//! |---|---|---|
//! | SES | `L = Y_1` | observation 2 |
//! | Holt-Winters | first two cycles | observation `S + 1` |
//! | stepwise AR | fitted trend + lags | observation 1 |
//! | moving average | first `S` values | observation `S + 1` |

mod holt_winters;
mod moving_average;
mod nelder_mead;
mod ses;
mod stepwise_ar;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::DemandSeries;

pub use holt_winters::{fit_holt_winters, HoltWintersState, SeasonalMode};
pub use moving_average::{fit_moving_average, MovingAverageState};
pub use nelder_mead::{minimize_bounded, NelderMeadResult};
pub use ses::{fit_ses, SesState, SES_GRID};
pub use stepwise_ar::{fit_stepwise_ar, ArTerms, InfoCriterion, StepwiseArState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForecastError {
    #[error("training series too short: need {required} observations, have {actual}")]
    TooShort { required: usize, actual: usize },
    #[error("NonPositiveForMultiplicative: multiplicative Holt-Winters needs strictly positive data (value {value} at index {index})")]
    NonPositiveForMultiplicative { index: usize, value: f64 },
    #[error("singular regression design")]
    SingularDesign,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("forecast horizon must be at least 1")]
    InvalidHorizon,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

/// Forecasting methods. Declaration order is the tie-break order used when
/// ranking methods by error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MethodId {
    Ses,
    HoltWintersAdditive,
    HoltWintersMultiplicative,
    StepwiseAr,
    /// Window-`S` moving average, the incumbent baseline.
    MovingAverage,
}

impl MethodId {
    pub const ALL: [MethodId; 5] = [
        MethodId::Ses,
        MethodId::HoltWintersAdditive,
        MethodId::HoltWintersMultiplicative,
        MethodId::StepwiseAr,
        MethodId::MovingAverage,
    ];

    /// Command-line name.
    pub fn as_str(self) -> &'static str {
        match self {
            MethodId::Ses => "ses",
            MethodId::HoltWintersAdditive => "hw-add",
            MethodId::HoltWintersMultiplicative => "hw-mult",
            MethodId::StepwiseAr => "stepar",
            MethodId::MovingAverage => "ma",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            MethodId::Ses => "Exponential Smoothing",
            MethodId::HoltWintersAdditive => "Holt-Winters (Additive)",
            MethodId::HoltWintersMultiplicative => "Holt-Winters (Multiplicative)",
            MethodId::StepwiseAr => "Stepwise Auto-Regressive",
            MethodId::MovingAverage => "Moving Average",
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MethodId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method '{s}'"))
    }
}

/// Smoothing weights for level, trend and season, each in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothing {
    pub level_alpha: f64,
    pub trend_beta: f64,
    pub seasonal_gamma: f64,
}

impl Smoothing {
    pub fn new(level_alpha: f64, trend_beta: f64, seasonal_gamma: f64) -> Self {
        Self {
            level_alpha,
            trend_beta,
            seasonal_gamma,
        }
    }

    fn validate(&self) -> Result<(), ForecastError> {
        for (name, v) in [
            ("level_alpha", self.level_alpha),
            ("trend_beta", self.trend_beta),
            ("seasonal_gamma", self.seasonal_gamma),
        ] {
            check_unit(name, v)?;
        }
        Ok(())
    }
}

fn check_unit(name: &str, v: f64) -> Result<(), ForecastError> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(ForecastError::InvalidParameter(format!(
            "{name} = {v} outside [0, 1]"
        )))
    }
}

/// Optional fixed parameters; anything left `None` is estimated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodOptions {
    pub ses_alpha: Option<f64>,
    pub hw_smoothing: Option<Smoothing>,
    pub max_lag: Option<usize>,
    pub criterion: InfoCriterion,
}

/// Engine state after consuming some prefix of a series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "snake_case")]
pub enum FitState {
    Ses(SesState),
    HoltWinters(HoltWintersState),
    StepwiseAr(StepwiseArState),
    MovingAverage(MovingAverageState),
}

impl FitState {
    pub fn method(&self) -> MethodId {
        match self {
            FitState::Ses(_) => MethodId::Ses,
            FitState::HoltWinters(s) => match s.mode {
                SeasonalMode::Additive => MethodId::HoltWintersAdditive,
                SeasonalMode::Multiplicative => MethodId::HoltWintersMultiplicative,
            },
            FitState::StepwiseAr(_) => MethodId::StepwiseAr,
            FitState::MovingAverage(_) => MethodId::MovingAverage,
        }
    }

    /// Forecast for the next, not yet observed, period.
    pub fn predict_next(&self) -> f64 {
        match self {
            FitState::Ses(s) => s.predict_next(),
            FitState::HoltWinters(s) => s.predict_next(),
            FitState::StepwiseAr(s) => s.predict_next(),
            FitState::MovingAverage(s) => s.predict_next(),
        }
    }

    /// Absorbs one observation. Parameters stay fixed.
    pub fn update(&mut self, y: f64) {
        match self {
            FitState::Ses(s) => s.update(y),
            FitState::HoltWinters(s) => s.update(y),
            FitState::StepwiseAr(s) => s.update(y),
            FitState::MovingAverage(s) => s.update(y),
        }
    }

    /// Unfloored forecasts for periods `1..=horizon` ahead.
    pub fn project(&self, horizon: usize) -> Vec<f64> {
        match self {
            FitState::Ses(s) => vec![s.level; horizon],
            FitState::HoltWinters(s) => (1..=horizon).map(|h| s.forecast_at(h)).collect(),
            FitState::StepwiseAr(s) => s.project(horizon),
            FitState::MovingAverage(s) => vec![s.predict_next(); horizon],
        }
    }

    pub fn smoothing(&self) -> Option<Smoothing> {
        match self {
            FitState::Ses(s) => Some(Smoothing::new(s.alpha, 0.0, 0.0)),
            FitState::HoltWinters(s) => Some(s.smoothing),
            _ => None,
        }
    }
}

/// Replays `state` over `values`, returning the prediction made before each one.
pub(crate) fn replay(state: &mut FitState, values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&y| {
            let pred = state.predict_next();
            state.update(y);
            pred
        })
        .collect()
}

pub(crate) fn mean_squared(actual: &[f64], predicted: &[f64]) -> f64 {
    debug_assert_eq!(actual.len(), predicted.len());
    if actual.is_empty() {
        return 0.0;
    }
    let sse: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p) * (a - p))
        .sum();
    sse / actual.len() as f64
}

/// A fitted engine with its in-sample one-step predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    /// State after the last training observation.
    pub state: FitState,
    /// One-step predictions for training observations `fitted_offset..n`.
    pub fitted_one_step: Vec<f64>,
    pub fitted_offset: usize,
    pub train_mse: f64,
}

impl FittedModel {
    pub(crate) fn from_replay(initial: FitState, values: &[f64], offset: usize) -> Self {
        let mut state = initial;
        let fitted_one_step = replay(&mut state, &values[offset..]);
        let train_mse = mean_squared(&values[offset..], &fitted_one_step);
        Self {
            state,
            fitted_one_step,
            fitted_offset: offset,
            train_mse,
        }
    }
}

/// Forecasts with negative values floored at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    pub values: Vec<f64>,
    /// True when at least one value was raised to zero.
    pub floored: bool,
}

pub fn forecast_h(state: &FitState, horizon: usize) -> Result<Forecast, ForecastError> {
    if horizon == 0 {
        return Err(ForecastError::InvalidHorizon);
    }
    let mut floored = false;
    let values = state
        .project(horizon)
        .into_iter()
        .map(|v| {
            if v < 0.0 {
                floored = true;
                0.0
            } else {
                v
            }
        })
        .collect();
    Ok(Forecast { values, floored })
}

pub fn fit_method(
    method: MethodId,
    train: &DemandSeries,
    options: &MethodOptions,
) -> Result<FittedModel, ForecastError> {
    match method {
        MethodId::Ses => fit_ses(train, options.ses_alpha),
        MethodId::HoltWintersAdditive => {
            fit_holt_winters(train, SeasonalMode::Additive, options.hw_smoothing)
        }
        MethodId::HoltWintersMultiplicative => {
            fit_holt_winters(train, SeasonalMode::Multiplicative, options.hw_smoothing)
        }
        MethodId::StepwiseAr => fit_stepwise_ar(train, options.max_lag, options.criterion),
        MethodId::MovingAverage => fit_moving_average(train),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastOutput {
    pub method: MethodId,
    pub fitted_one_step: Vec<f64>,
    pub fitted_offset: usize,
    pub forecasts: Vec<f64>,
    pub floored: bool,
    pub final_state: FitState,
    pub train_mse: f64,
}

/// Fits `method` on all of `train` and forecasts `horizon` periods ahead.
pub fn run_forecast(
    method: MethodId,
    train: &DemandSeries,
    horizon: usize,
    options: &MethodOptions,
) -> Result<ForecastOutput, ForecastError> {
    if horizon == 0 {
        return Err(ForecastError::InvalidHorizon);
    }
    let fitted = fit_method(method, train, options)?;
    let forecast = forecast_h(&fitted.state, horizon)?;
    Ok(ForecastOutput {
        method,
        fitted_one_step: fitted.fitted_one_step,
        fitted_offset: fitted.fitted_offset,
        forecasts: forecast.values,
        floored: forecast.floored,
        final_state: fitted.state,
        train_mse: fitted.train_mse,
    })
}

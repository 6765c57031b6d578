//! Demand series, run configuration and chronological splitting.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Observations per full cycle when the caller does not say otherwise (monthly data).
pub const DEFAULT_PERIOD: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("series is empty")]
    Empty,
    #[error("negative demand value at index {0}")]
    NegativeValue(usize),
    #[error("non-finite demand value at index {0}")]
    NonFinite(usize),
    #[error("series too short: need {required} observations, have {actual}")]
    TooShort { required: usize, actual: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Ordered, nonnegative demand observations together with the cycle length `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandSeries {
    values: Vec<f64>,
    period_length: usize,
    origin_label: Option<String>,
}

impl DemandSeries {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn period_length(&self) -> usize {
        self.period_length
    }

    pub fn origin_label(&self) -> Option<&str> {
        self.origin_label.as_deref()
    }

    /// Replaces the cycle length. `period` must be positive.
    pub fn with_period(mut self, period: usize) -> Result<Self, SeriesError> {
        if period == 0 {
            return Err(SeriesError::InvalidConfig(
                "period length must be positive".into(),
            ));
        }
        self.period_length = period;
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.origin_label = Some(label.into());
        self
    }

    /// Number of periods sitting at the series minimum, divided by `n`.
    ///
    /// Counting at the minimum rather than at literal zero keeps the ratio
    /// unchanged when a constant base level is added to the series.
    pub fn zero_ratio(&self) -> f64 {
        zero_ratio(&self.values)
    }

    pub(crate) fn from_parts(
        values: Vec<f64>,
        period_length: usize,
        origin_label: Option<String>,
    ) -> Self {
        Self {
            values,
            period_length,
            origin_label,
        }
    }
}

pub(crate) fn zero_ratio(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let at_min = values.iter().filter(|&&v| v == min).count();
    at_min as f64 / values.len() as f64
}

/// Checks that every value is finite and nonnegative. The first offending
/// index is reported.
pub fn validate_series(raw: &[f64]) -> Result<DemandSeries, SeriesError> {
    if raw.is_empty() {
        return Err(SeriesError::Empty);
    }
    for (i, &v) in raw.iter().enumerate() {
        if !v.is_finite() {
            return Err(SeriesError::NonFinite(i));
        }
        if v < 0.0 {
            return Err(SeriesError::NegativeValue(i));
        }
    }
    Ok(DemandSeries::from_parts(raw.to_vec(), DEFAULT_PERIOD, None))
}

/// The three demand types plus the classifier's rejection outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DemandClass {
    Cyclical,
    Stochastic,
    Lumpy,
    Unclassified,
}

impl DemandClass {
    pub const LABELLED: [DemandClass; 3] = [
        DemandClass::Cyclical,
        DemandClass::Stochastic,
        DemandClass::Lumpy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DemandClass::Cyclical => "Cyclical",
            DemandClass::Stochastic => "Stochastic",
            DemandClass::Lumpy => "Lumpy",
            DemandClass::Unclassified => "Unclassified",
        }
    }

    pub(crate) fn index(self) -> usize {
        match self {
            DemandClass::Cyclical => 0,
            DemandClass::Stochastic => 1,
            DemandClass::Lumpy => 2,
            DemandClass::Unclassified => 3,
        }
    }
}

impl fmt::Display for DemandClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Chronological train/holdout split parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub holdout_fraction: f64,
    pub min_train_cycles: usize,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            holdout_fraction: 0.2,
            min_train_cycles: 2,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), SeriesError> {
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction <= 0.5) {
            return Err(SeriesError::InvalidConfig(format!(
                "holdout fraction {} outside (0, 0.5]",
                self.holdout_fraction
            )));
        }
        if self.min_train_cycles == 0 {
            return Err(SeriesError::InvalidConfig(
                "min_train_cycles must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Holdout length for a series of `n` observations: `round(fraction * n)`, at least 1.
    pub fn holdout_len(&self, n: usize) -> usize {
        ((self.holdout_fraction * n as f64).round() as usize).max(1)
    }
}

/// Splits `series` into its chronological head (training) and tail (holdout).
pub fn split(
    series: &DemandSeries,
    spec: &SplitSpec,
) -> Result<(DemandSeries, DemandSeries), SeriesError> {
    spec.validate()?;
    let n = series.len();
    let required = spec.min_train_cycles * series.period_length;
    if n < required {
        return Err(SeriesError::TooShort {
            required,
            actual: n,
        });
    }
    let holdout = spec.holdout_len(n);
    let train_len = n.saturating_sub(holdout);
    if train_len < required || train_len == 0 {
        return Err(SeriesError::TooShort {
            required: required.max(1),
            actual: train_len,
        });
    }
    let (head, tail) = series.values.split_at(train_len);
    let part = |values: &[f64]| {
        DemandSeries::from_parts(
            values.to_vec(),
            series.period_length,
            series.origin_label.clone(),
        )
    };
    Ok((part(head), part(tail)))
}

/// Knobs shared by the classification pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub significance_alpha: f64,
    pub mc_replicates: usize,
    pub rng_seed: u64,
    pub detrend: bool,
    pub zero_ratio_threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            significance_alpha: 0.05,
            mc_replicates: 1000,
            rng_seed: 0,
            detrend: false,
            zero_ratio_threshold: 0.25,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), SeriesError> {
        let in_unit = |x: f64| x > 0.0 && x < 1.0;
        if !in_unit(self.significance_alpha) {
            return Err(SeriesError::InvalidConfig(format!(
                "significance alpha {} outside (0, 1)",
                self.significance_alpha
            )));
        }
        if self.mc_replicates == 0 {
            return Err(SeriesError::InvalidConfig(
                "mc_replicates must be positive".into(),
            ));
        }
        if !in_unit(self.zero_ratio_threshold) {
            return Err(SeriesError::InvalidConfig(format!(
                "zero ratio threshold {} outside (0, 1)",
                self.zero_ratio_threshold
            )));
        }
        Ok(())
    }
}

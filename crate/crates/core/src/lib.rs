//! Demand-type identification and forecasting.
//!
//! A demand series is classified as cyclical, stochastic or lumpy by fitting
//! uniform, normal and shifted-exponential distributions to its values and
//! scoring each fit with a Kolmogorov–Smirnov statistic and a parametric
//! bootstrap p-value. The crate also carries the forecasting engines used to
//! compare methods on a chronological holdout (simple exponential smoothing,
//! additive and multiplicative Holt-Winters, stepwise autoregression and a
//! moving-average baseline), and generators for synthetic series of each
//! demand type.
//!
//! Module map:
//! - [`series`]: [`DemandSeries`], validation, train/holdout splitting, run configuration.
//! - [`simulate`]: synthetic cyclical, stochastic and lumpy series.
//! - [`distfit`]: maximum-likelihood fits, KS statistic, bootstrap p-values.
//! - [`classify`]: distribution-to-demand-type decision rules.
//! - [`forecast`]: forecasting engines and smoothing-parameter search.
//! - [`evaluate`]: holdout backtests and method comparison.

pub mod classify;
pub mod distfit;
pub mod evaluate;
pub mod forecast;
pub mod rng;
pub mod series;
pub mod simulate;

pub use classify::{classify_corpus, classify_series, ClassificationReport, CorpusReport};
pub use distfit::{
    fit_all, fit_mle, ks_pvalue_mc, ks_statistic, DistError, DistParams, DistributionFamily,
    DistributionFit, FitAll,
};
pub use evaluate::{
    backtest, compare_methods, improvement_report, mse, Backtest, Cell, EvalError,
    EvaluationColumn, EvaluationMatrix, ImprovementReport,
};
pub use forecast::{FitState, ForecastError, ForecastOutput, MethodId, MethodOptions, Smoothing};
pub use series::{
    split, validate_series, DemandClass, DemandSeries, RunConfig, SeriesError, SplitSpec,
};

//! Quadratic trend plus an autoregression on the detrended residuals, with
//! lags removed one at a time by backward elimination.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{FitState, FittedModel, ForecastError};
use crate::series::DemandSeries;

/// Largest lag offered to the elimination when none is given.
pub const DEFAULT_MAX_LAG: usize = 13;

/// Information criterion that decides whether dropping a lag pays off.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfoCriterion {
    Aic,
    Aicc,
    #[default]
    Bic,
}

impl InfoCriterion {
    fn score(self, rss: f64, m: usize, k: usize) -> f64 {
        let (mf, kf) = (m as f64, k as f64);
        let fit = mf * (rss / mf).ln();
        match self {
            InfoCriterion::Aic => fit + 2.0 * kf,
            InfoCriterion::Aicc => fit + 2.0 * kf + 2.0 * kf * (kf + 1.0) / (mf - kf - 1.0),
            InfoCriterion::Bic => fit + kf * mf.ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArTerms {
    /// `[c0, c1, c2]` of `c0 + c1 t + c2 t^2` with `t` counted from 1.
    pub trend: [f64; 3],
    /// Retained `(lag, coefficient)` pairs in increasing lag order.
    pub lags: Vec<(usize, f64)>,
}

impl ArTerms {
    pub fn trend_at(&self, t: usize) -> f64 {
        let t = t as f64;
        self.trend[0] + self.trend[1] * t + self.trend[2] * t * t
    }

    fn max_lag(&self) -> usize {
        self.lags.last().map_or(0, |&(k, _)| k)
    }

    /// `sum phi_k e_{len-k}` over a residual history; missing terms count as zero.
    fn ar_part(&self, history: &[f64]) -> f64 {
        self.lags
            .iter()
            .filter(|&&(k, _)| k <= history.len())
            .map(|&(k, phi)| phi * history[history.len() - k])
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepwiseArState {
    pub terms: ArTerms,
    /// Recent residuals from the trend, oldest first.
    pub residuals: Vec<f64>,
    pub observed: usize,
}

impl StepwiseArState {
    pub fn predict_next(&self) -> f64 {
        self.terms.trend_at(self.observed + 1) + self.terms.ar_part(&self.residuals)
    }

    pub fn update(&mut self, y: f64) {
        self.residuals.push(y - self.terms.trend_at(self.observed + 1));
        let keep = self.terms.max_lag();
        if self.residuals.len() > keep {
            self.residuals.drain(..self.residuals.len() - keep);
        }
        self.observed += 1;
    }

    /// Iterates the autoregression forward on its own projections.
    pub fn project(&self, horizon: usize) -> Vec<f64> {
        let mut history = self.residuals.clone();
        (1..=horizon)
            .map(|h| {
                let e = self.terms.ar_part(&history);
                history.push(e);
                self.terms.trend_at(self.observed + h) + e
            })
            .collect()
    }
}

fn trend_fit(values: &[f64]) -> Result<[f64; 3], ForecastError> {
    let n = values.len();
    let x = DMatrix::from_fn(n, 3, |i, j| ((i + 1) as f64).powi(j as i32));
    // Offsetting by the first value keeps a constant series exact.
    let offset = values[0];
    let mut qty = DVector::from_iterator(n, values.iter().map(|v| v - offset));
    let qr = x.qr();
    qr.q_tr_mul(&mut qty);
    let r = qr.r();
    if r.diagonal().iter().any(|d| d.abs() <= 1e-12 * r[(0, 0)].abs()) {
        return Err(ForecastError::SingularDesign);
    }
    let coef = r
        .solve_upper_triangular(&qty.rows(0, 3).into_owned())
        .ok_or(ForecastError::SingularDesign)?;
    Ok([coef[0] + offset, coef[1], coef[2]])
}

struct LagFit {
    coef: Vec<f64>,
    t_stats: Vec<f64>,
    rss: f64,
}

/// OLS of `e_t` on `e_{t-k}` for `k` in `lags`, over `t >= max_lag`, no intercept.
fn lag_regression(e: &[f64], lags: &[usize], max_lag: usize) -> Result<LagFit, ForecastError> {
    let m = e.len() - max_lag;
    let p = lags.len();
    let x = DMatrix::from_fn(m, p, |i, j| e[max_lag + i - lags[j]]);
    let y = DVector::from_column_slice(&e[max_lag..]);
    let xtx = x.tr_mul(&x);
    let chol = xtx.cholesky().ok_or(ForecastError::SingularDesign)?;
    let coef = chol.solve(&x.tr_mul(&y));
    let resid = &y - &x * &coef;
    let rss = resid.norm_squared();
    let sigma2 = rss / (m - p) as f64;
    let inv = chol.inverse();
    let t_stats = (0..p)
        .map(|j| coef[j] / (sigma2 * inv[(j, j)]).sqrt())
        .collect();
    Ok(LagFit {
        coef: coef.iter().copied().collect(),
        t_stats,
        rss,
    })
}

fn residual_rss(e: &[f64], max_lag: usize) -> f64 {
    e[max_lag..].iter().map(|v| v * v).sum()
}

/// Backward elimination: starting from lags `1..=max_lag`, repeatedly drop
/// the lag with the smallest `|t|` while that lowers the criterion.
fn select_lags(
    e: &[f64],
    max_lag: usize,
    criterion: InfoCriterion,
) -> Result<Vec<(usize, f64)>, ForecastError> {
    let m = e.len() - max_lag;
    let mut lags: Vec<usize> = (1..=max_lag).collect();
    let mut fit = lag_regression(e, &lags, max_lag)?;
    let mut score = criterion.score(fit.rss, m, lags.len());
    while !lags.is_empty() {
        let weakest = fit
            .t_stats
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(j, _)| j)
            .expect("non-empty");
        let mut trial = lags.clone();
        trial.remove(weakest);
        let (trial_fit, trial_score) = if trial.is_empty() {
            let rss = residual_rss(e, max_lag);
            let empty = LagFit {
                coef: Vec::new(),
                t_stats: Vec::new(),
                rss,
            };
            (empty, criterion.score(rss, m, 0))
        } else {
            let f = lag_regression(e, &trial, max_lag)?;
            let s = criterion.score(f.rss, m, trial.len());
            (f, s)
        };
        if trial_score < score {
            lags = trial;
            fit = trial_fit;
            score = trial_score;
        } else {
            break;
        }
    }
    Ok(lags.into_iter().zip(fit.coef).collect())
}

/// Fits the trend by least squares, then selects residual lags up to
/// `max_lag` (default `min(13, n / 4)`) by backward elimination.
pub fn fit_stepwise_ar(
    train: &DemandSeries,
    max_lag: Option<usize>,
    criterion: InfoCriterion,
) -> Result<FittedModel, ForecastError> {
    let values = train.values();
    let n = values.len();
    let max_lag = max_lag.unwrap_or((n / 4).min(DEFAULT_MAX_LAG));
    let required = (3 * max_lag).max(6);
    if n < required {
        return Err(ForecastError::TooShort {
            required,
            actual: n,
        });
    }
    let trend = trend_fit(values)?;
    let mut terms = ArTerms {
        trend,
        lags: Vec::new(),
    };
    let e: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(i, y)| y - terms.trend_at(i + 1))
        .collect();
    let scale: f64 = values.iter().map(|v| v * v).sum();
    let negligible = residual_rss(&e, max_lag) <= 1e-20 * scale;
    if max_lag > 0 && !negligible {
        terms.lags = select_lags(&e, max_lag, criterion)?;
    }
    let initial = FitState::StepwiseAr(StepwiseArState {
        terms,
        residuals: Vec::new(),
        observed: 0,
    });
    Ok(FittedModel::from_replay(initial, values, 0))
}

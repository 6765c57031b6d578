//! Holt-Winters smoothing with additive or multiplicative seasonality.
//!
//! Initialization uses the first two cycles. With cycle means `m1`, `m2`
//! the trend is `B = (m2 - m1) / S` and the trend line through the first
//! cycle is `T(i) = m1 + B (i - (S - 1) / 2)`. Seasonal indices are the
//! first cycle's deviations from (additive) or ratios to (multiplicative)
//! that line, and the level starts at `T(S - 1)`. In the multiplicative case
//! the cycle means are recomputed on deseasonalized data until the indices
//! settle, so a noiseless multiplicative series is recovered exactly.
//!
//! Seasonal indices are renormalized after every update (zero sum, or unit
//! mean) with the level and trend compensating, which leaves every
//! prediction unchanged.

use serde::{Deserialize, Serialize};

use super::nelder_mead::minimize_bounded;
use super::{FitState, FittedModel, ForecastError, Smoothing};
use crate::series::DemandSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeasonalMode {
    Additive,
    Multiplicative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoltWintersState {
    pub mode: SeasonalMode,
    pub smoothing: Smoothing,
    pub level: f64,
    pub trend: f64,
    /// Index `k` belongs to periods `t` with `t % S == k` (0-based `t`).
    pub seasonals: Vec<f64>,
    /// Observations consumed so far.
    pub observed: usize,
}

const START: [f64; 3] = [0.2, 0.1, 0.1];
const INIT_MAX_ITER: usize = 100;

impl HoltWintersState {
    fn season(&self, t: usize) -> f64 {
        self.seasonals[t % self.seasonals.len()]
    }

    pub fn forecast_at(&self, h: usize) -> f64 {
        let base = self.level + h as f64 * self.trend;
        let s = self.season(self.observed + h - 1);
        match self.mode {
            SeasonalMode::Additive => base + s,
            SeasonalMode::Multiplicative => base * s,
        }
    }

    pub fn predict_next(&self) -> f64 {
        self.forecast_at(1)
    }

    pub fn update(&mut self, y: f64) {
        let Smoothing {
            level_alpha: a,
            trend_beta: b,
            seasonal_gamma: g,
        } = self.smoothing;
        let k = self.observed % self.seasonals.len();
        let s_old = self.seasonals[k];
        let prev = self.level;
        match self.mode {
            SeasonalMode::Additive => {
                self.level = a * (y - s_old) + (1.0 - a) * (prev + self.trend);
                self.trend = b * (self.level - prev) + (1.0 - b) * self.trend;
                self.seasonals[k] = g * (y - self.level) + (1.0 - g) * s_old;
                let m = mean(&self.seasonals);
                self.seasonals.iter_mut().for_each(|s| *s -= m);
                self.level += m;
            }
            SeasonalMode::Multiplicative => {
                self.level = a * (y / s_old) + (1.0 - a) * (prev + self.trend);
                self.trend = b * (self.level - prev) + (1.0 - b) * self.trend;
                self.seasonals[k] = g * (y / self.level) + (1.0 - g) * s_old;
                let m = mean(&self.seasonals);
                self.seasonals.iter_mut().for_each(|s| *s /= m);
                self.level *= m;
                self.trend *= m;
            }
        }
        self.observed += 1;
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Level, trend and seasonal indices at the end of the first cycle.
fn initial_components(
    values: &[f64],
    s: usize,
    mode: SeasonalMode,
) -> Result<(f64, f64, Vec<f64>), ForecastError> {
    let centre = (s - 1) as f64 / 2.0;
    let line = |z: &[f64]| {
        let m1 = mean(&z[..s]);
        let m2 = mean(&z[s..2 * s]);
        (m1, (m2 - m1) / s as f64)
    };
    match mode {
        SeasonalMode::Additive => {
            let (m1, b) = line(values);
            let seasonals = (0..s)
                .map(|i| values[i] - (m1 + b * (i as f64 - centre)))
                .collect();
            Ok((m1 + b * centre, b, seasonals))
        }
        SeasonalMode::Multiplicative => {
            let mut ratios = vec![1.0; s];
            let mut deseason = vec![0.0; 2 * s];
            let (mut m1, mut b) = (0.0, 0.0);
            for _ in 0..INIT_MAX_ITER {
                for (i, z) in deseason.iter_mut().enumerate() {
                    *z = values[i] / ratios[i % s];
                }
                (m1, b) = line(&deseason);
                let mut next: Vec<f64> = (0..s)
                    .map(|i| values[i] / (m1 + b * (i as f64 - centre)))
                    .collect();
                let m = mean(&next);
                next.iter_mut().for_each(|r| *r /= m);
                if next.iter().any(|r| !r.is_finite() || *r <= 0.0) {
                    return Err(ForecastError::NumericalFailure(
                        "initial trend line is not positive over the first cycle".into(),
                    ));
                }
                let change = next
                    .iter()
                    .zip(&ratios)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                ratios = next;
                if change <= 1e-15 {
                    break;
                }
            }
            Ok((m1 + b * centre, b, ratios))
        }
    }
}

fn initial_state(
    values: &[f64],
    s: usize,
    mode: SeasonalMode,
    smoothing: Smoothing,
) -> Result<FitState, ForecastError> {
    let (level, trend, seasonals) = initial_components(values, s, mode)?;
    Ok(FitState::HoltWinters(HoltWintersState {
        mode,
        smoothing,
        level,
        trend,
        seasonals,
        observed: s,
    }))
}

/// Fits Holt-Winters on `train`. Without fixed smoothing weights they are
/// chosen by a bounded simplex search on the one-step in-sample MSE,
/// starting from `(0.2, 0.1, 0.1)`.
pub fn fit_holt_winters(
    train: &DemandSeries,
    mode: SeasonalMode,
    smoothing: Option<Smoothing>,
) -> Result<FittedModel, ForecastError> {
    let values = train.values();
    let s = train.period_length();
    let required = 2 * s + 1;
    if values.len() < required {
        return Err(ForecastError::TooShort {
            required,
            actual: values.len(),
        });
    }
    if mode == SeasonalMode::Multiplicative {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(ForecastError::NonPositiveForMultiplicative { index, value });
        }
    }
    if let Some(sm) = smoothing {
        sm.validate()?;
        let initial = initial_state(values, s, mode, sm)?;
        return Ok(FittedModel::from_replay(initial, values, s));
    }

    let template = initial_state(values, s, mode, Smoothing::new(START[0], START[1], START[2]))?;
    let objective = |p: &[f64]| {
        let mut state = template.clone();
        if let FitState::HoltWinters(hw) = &mut state {
            hw.smoothing = Smoothing::new(p[0], p[1], p[2]);
        }
        let mut sse = 0.0;
        for &y in &values[s..] {
            let e = y - state.predict_next();
            sse += e * e;
            state.update(y);
        }
        sse / (values.len() - s) as f64
    };
    let best = minimize_bounded(objective, &START);
    if !best.value.is_finite() {
        return Err(ForecastError::NumericalFailure(
            "no smoothing weights give a finite in-sample error".into(),
        ));
    }
    let mut initial = template;
    if let FitState::HoltWinters(hw) = &mut initial {
        hw.smoothing = Smoothing::new(best.x[0], best.x[1], best.x[2]);
    }
    Ok(FittedModel::from_replay(initial, values, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forecast::forecast_h;
    use crate::series::validate_series;

    fn series(v: &[f64], period: usize) -> DemandSeries {
        validate_series(v).unwrap().with_period(period).unwrap()
    }

    fn hw(state: &FitState) -> &HoltWintersState {
        match state {
            FitState::HoltWinters(s) => s,
            _ => panic!("not a Holt-Winters state"),
        }
    }

    #[test]
    fn additive_projection_with_flat_season() {
        let state = FitState::HoltWinters(HoltWintersState {
            mode: SeasonalMode::Additive,
            smoothing: Smoothing::new(0.3, 0.1, 0.1),
            level: 100.0,
            trend: 2.0,
            seasonals: vec![0.0; 4],
            observed: 8,
        });
        assert_eq!(forecast_h(&state, 2).unwrap().values, vec![102.0, 104.0]);
    }

    fn additive_truth(t: usize) -> f64 {
        let season = [5.0, -3.0, 8.0, -10.0];
        50.0 + 1.5 * t as f64 + season[t % 4]
    }

    fn multiplicative_truth(t: usize) -> f64 {
        let season = [1.2, 0.9, 1.1, 0.8];
        (50.0 + 1.5 * t as f64) * season[t % 4]
    }

    #[test]
    fn noiseless_additive_series_is_recovered() {
        let v: Vec<f64> = (0..40).map(additive_truth).collect();
        let fit = fit_holt_winters(&series(&v, 4), SeasonalMode::Additive, None).unwrap();
        assert!(fit.train_mse < 1e-18, "mse {}", fit.train_mse);
        let f = forecast_h(&fit.state, 8).unwrap();
        for (h, got) in f.values.iter().enumerate() {
            assert!((got - additive_truth(40 + h)).abs() < 1e-9);
        }
    }

    #[test]
    fn noiseless_multiplicative_series_is_recovered() {
        let v: Vec<f64> = (0..40).map(multiplicative_truth).collect();
        let fit = fit_holt_winters(&series(&v, 4), SeasonalMode::Multiplicative, None).unwrap();
        assert!(fit.train_mse < 1e-18, "mse {}", fit.train_mse);
        let f = forecast_h(&fit.state, 8).unwrap();
        for (h, got) in f.values.iter().enumerate() {
            assert!((got - multiplicative_truth(40 + h)).abs() < 1e-9);
        }
    }

    #[test]
    fn seasonal_indices_stay_normalized() {
        let v: Vec<f64> = (0..48)
            .map(|t| multiplicative_truth(t) + if t % 3 == 0 { 4.0 } else { -2.0 })
            .collect();
        let sm = Some(Smoothing::new(0.4, 0.2, 0.3));
        let add = fit_holt_winters(&series(&v, 4), SeasonalMode::Additive, sm).unwrap();
        assert!(hw(&add.state).seasonals.iter().sum::<f64>().abs() < 1e-9);
        let mult = fit_holt_winters(&series(&v, 4), SeasonalMode::Multiplicative, sm).unwrap();
        assert!((mean(&hw(&mult.state).seasonals) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn multiplicative_rejects_zero() {
        let mut v: Vec<f64> = (0..30).map(multiplicative_truth).collect();
        v[17] = 0.0;
        let err = fit_holt_winters(&series(&v, 4), SeasonalMode::Multiplicative, None);
        assert!(matches!(
            err,
            Err(ForecastError::NonPositiveForMultiplicative { index: 17, .. })
        ));
        assert!(fit_holt_winters(&series(&v, 4), SeasonalMode::Additive, None).is_ok());
    }

    #[test]
    fn needs_two_cycles_and_one_more_point() {
        let v: Vec<f64> = (0..8).map(additive_truth).collect();
        assert_eq!(
            fit_holt_winters(&series(&v, 4), SeasonalMode::Additive, None).unwrap_err(),
            ForecastError::TooShort {
                required: 9,
                actual: 8
            }
        );
    }

    #[test]
    fn optimized_weights_beat_the_starting_point() {
        let v: Vec<f64> = (0..60)
            .map(|t| additive_truth(t) + ((t * 37 % 11) as f64 - 5.0))
            .collect();
        let s = series(&v, 4);
        let opt = fit_holt_winters(&s, SeasonalMode::Additive, None).unwrap();
        let start = fit_holt_winters(&s, SeasonalMode::Additive, Some(Smoothing::new(0.2, 0.1, 0.1)))
            .unwrap();
        assert!(opt.train_mse <= start.train_mse);
        let sm = hw(&opt.state).smoothing;
        for p in [sm.level_alpha, sm.trend_beta, sm.seasonal_gamma] {
            assert!((0.0..=1.0).contains(&p));
        }
    }
}

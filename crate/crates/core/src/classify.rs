//! Demand-type classification from distribution fits.
//!
//! Decision order, first match wins:
//! 1. sporadic guard: the share of periods at the series minimum reaches
//!    `zero_ratio_threshold` → lumpy;
//! 2. the top-ranked fit is significant (`p >= significance_alpha`) →
//!    Uniform ⇒ cyclical, Normal ⇒ stochastic, Exponential ⇒ lumpy;
//! 3. otherwise unclassified.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distfit::{fit_all_values, DistError, DistributionFamily, DistributionFit};
use crate::series::{DemandClass, DemandSeries, RunConfig};
use crate::simulate::LabelledSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionRule {
    SporadicGuard,
    BestFit,
    NoSignificantFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub demand_class: DemandClass,
    /// The top-ranked fit, or the exponential fit when the sporadic guard fired.
    pub winning_fit: DistributionFit,
    pub all_fits: Vec<DistributionFit>,
    /// Families that could not be fitted, with the reason.
    pub skipped: Vec<(DistributionFamily, String)>,
    pub zero_ratio: f64,
    pub detrended: bool,
    pub rule: DecisionRule,
    pub rationale: String,
}

/// Removes the least-squares line and adds the mean back.
pub fn detrend_linear(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return values.to_vec();
    }
    let t_mean = (n - 1) as f64 / 2.0;
    let y_mean = values.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, &y) in values.iter().enumerate() {
        let dt = t as f64 - t_mean;
        sxy += dt * (y - y_mean);
        sxx += dt * dt;
    }
    let slope = sxy / sxx;
    values
        .iter()
        .enumerate()
        .map(|(t, &y)| y - slope * (t as f64 - t_mean))
        .collect()
}

pub fn classify_series(
    series: &DemandSeries,
    config: &RunConfig,
) -> Result<ClassificationReport, DistError> {
    config
        .validate()
        .map_err(|e| DistError::InvalidConfig(e.to_string()))?;
    let detrended;
    let values = if config.detrend {
        detrended = detrend_linear(series.values());
        &detrended[..]
    } else {
        series.values()
    };
    let fits = fit_all_values(values, config)?;
    let zero_ratio = series.zero_ratio();
    let best = fits.best().clone();

    let (demand_class, winning_fit, rule, rationale) = if zero_ratio
        >= config.zero_ratio_threshold
    {
        let fit = fits
            .get(DistributionFamily::ExponentialShifted)
            .cloned()
            .unwrap_or_else(|| best.clone());
        let why = format!(
            "sporadic guard: {:.1}% of periods sit at the series minimum (threshold {:.1}%)",
            100.0 * zero_ratio,
            100.0 * config.zero_ratio_threshold
        );
        (DemandClass::Lumpy, fit, DecisionRule::SporadicGuard, why)
    } else if best.p_value >= config.significance_alpha {
        let why = format!(
            "best fit {} with p = {} >= alpha = {}",
            best.family, best.p_value, config.significance_alpha
        );
        let class = best.family.demand_class();
        (class, best, DecisionRule::BestFit, why)
    } else {
        let why = format!(
            "no significant fit: best {} has p = {} < alpha = {}",
            best.family, best.p_value, config.significance_alpha
        );
        (
            DemandClass::Unclassified,
            best,
            DecisionRule::NoSignificantFit,
            why,
        )
    };

    Ok(ClassificationReport {
        demand_class,
        winning_fit,
        all_fits: fits.fits,
        skipped: fits.skipped,
        zero_ratio,
        detrended: config.detrend,
        rule,
        rationale,
    })
}

/// Confusion matrix of a labelled corpus. Rows are predicted classes
/// (cyclical, stochastic, lumpy, unclassified), columns the true classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub confusion: [[usize; 3]; 4],
    pub accuracy: f64,
    pub total: usize,
    pub predictions: Vec<DemandClass>,
    /// Series that could not be classified at all, counted as unclassified.
    pub errors: Vec<(usize, String)>,
}

impl CorpusReport {
    /// Number of series whose true class is `class`.
    pub fn column_total(&self, class: DemandClass) -> usize {
        self.confusion.iter().map(|row| row[class.index()]).sum()
    }
}

/// Classifies every series with its own seed (`rng_seed + index`).
pub fn classify_corpus(corpus: &[LabelledSeries], config: &RunConfig) -> CorpusReport {
    let outcomes: Vec<Result<DemandClass, String>> = corpus
        .par_iter()
        .enumerate()
        .map(|(i, member)| {
            let cfg = RunConfig {
                rng_seed: config.rng_seed.wrapping_add(i as u64),
                ..config.clone()
            };
            classify_series(&member.series, &cfg)
                .map(|r| r.demand_class)
                .map_err(|e| e.to_string())
        })
        .collect();

    let mut confusion = [[0usize; 3]; 4];
    let mut predictions = Vec::with_capacity(corpus.len());
    let mut errors = Vec::new();
    for (i, (member, outcome)) in corpus.iter().zip(outcomes).enumerate() {
        let predicted = outcome.unwrap_or_else(|e| {
            errors.push((i, e));
            DemandClass::Unclassified
        });
        confusion[predicted.index()][member.class.index()] += 1;
        predictions.push(predicted);
    }
    let correct: usize = (0..3).map(|k| confusion[k][k]).sum();
    let total = corpus.len();
    CorpusReport {
        confusion,
        accuracy: if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        },
        total,
        predictions,
        errors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::validate_series;
    use crate::simulate::{gen_corpus, gen_lumpy, LumpySpec};

    fn cfg(seed: u64) -> RunConfig {
        RunConfig {
            rng_seed: seed,
            mc_replicates: 200,
            ..RunConfig::default()
        }
    }

    #[test]
    fn detrend_removes_a_line_and_keeps_the_mean() {
        let v: Vec<f64> = (0..10).map(|t| 5.0 + 2.0 * t as f64).collect();
        let d = detrend_linear(&v);
        let mean = v.iter().sum::<f64>() / 10.0;
        assert!(d.iter().all(|x| (x - mean).abs() < 1e-12));
    }

    #[test]
    fn sporadic_guard_fires_first() {
        let spec = LumpySpec {
            n: 240,
            base_level: 1000.0,
            burst_scale: 200.0,
            zero_prob: 0.5,
        };
        let s = gen_lumpy(&spec, 3).unwrap().series;
        let r = classify_series(&s, &cfg(1)).unwrap();
        assert_eq!(r.demand_class, DemandClass::Lumpy);
        assert_eq!(r.rule, DecisionRule::SporadicGuard);
        assert_eq!(r.winning_fit.family, DistributionFamily::ExponentialShifted);
        assert_eq!(r.all_fits.len(), 3);
    }

    #[test]
    fn pure_exponential_is_lumpy_by_fit() {
        let spec = LumpySpec {
            n: 240,
            base_level: 1000.0,
            burst_scale: 200.0,
            zero_prob: 0.0,
        };
        let s = gen_lumpy(&spec, 8).unwrap().series;
        let r = classify_series(&s, &cfg(2)).unwrap();
        assert_eq!(r.rule, DecisionRule::BestFit);
        assert_eq!(r.winning_fit.family, DistributionFamily::ExponentialShifted);
        assert_eq!(r.demand_class, DemandClass::Lumpy);
    }

    #[test]
    fn nothing_fits_a_bimodal_series() {
        // Two well separated clusters: no family fits, no minimum mass.
        let v: Vec<f64> = (0..200)
            .map(|i| if i % 2 == 0 { 10.0 + (i as f64) * 1e-3 } else { 500.0 + (i as f64) * 1e-3 })
            .collect();
        let s = validate_series(&v).unwrap();
        let r = classify_series(&s, &cfg(3)).unwrap();
        assert!(r.all_fits.iter().all(|f| f.p_value < 0.05));
        assert_eq!(r.demand_class, DemandClass::Unclassified);
        assert_eq!(r.rule, DecisionRule::NoSignificantFit);
    }

    #[test]
    fn constant_series_is_an_error() {
        let s = validate_series(&[4.0; 50]).unwrap();
        assert!(matches!(
            classify_series(&s, &cfg(0)),
            Err(DistError::AllFamiliesFailed(_))
        ));
    }

    #[test]
    fn corpus_counts_add_up() {
        let corpus = gen_corpus(2, 42).unwrap();
        let report = classify_corpus(&corpus, &cfg(42));
        assert_eq!(report.total, 6);
        for class in DemandClass::LABELLED {
            assert_eq!(report.column_total(class), 2);
        }
    }

    #[test]
    fn one_of_each_type_is_recovered() {
        let corpus = gen_corpus(1, 42).unwrap();
        let report = classify_corpus(&corpus, &cfg(42));
        assert_eq!(report.accuracy, 1.0, "{:?}", report.predictions);
    }

    #[test]
    fn constant_corpus_scores_zero() {
        let corpus: Vec<LabelledSeries> = DemandClass::LABELLED
            .iter()
            .map(|&class| LabelledSeries {
                series: validate_series(&[3.0; 40]).unwrap(),
                class,
            })
            .collect();
        let report = classify_corpus(&corpus, &cfg(0));
        assert_eq!(report.accuracy, 0.0);
        assert_eq!(report.errors.len(), 3);
        assert_eq!(report.confusion[3], [1, 1, 1]);
    }
}

//! Distribution fitting and goodness of fit.
//!
//! Three candidate families are fitted by maximum likelihood and scored with
//! the KS statistic. Because parameters come from the same data being tested,
//! the classical Kolmogorov p-value does not apply; instead a parametric
//! bootstrap refits every replicate (Lilliefors-style).
//!
//! All three estimators are location-scale equivariant, so `D` of a refitted
//! sample does not depend on the true location or scale. Replicates are
//! therefore drawn from the standard member of each family (`U(0,1)`,
//! `N(0,1)`, `Exp(1)`), which gives the same null distribution as drawing
//! from the fitted parameters and leaves the replicate set a function of
//! `(seed, family, n)` alone.
//!
//! Fitting happens in a frame anchored at the sample minimum: data are
//! shifted by `-min` before estimation and scoring. Adding a constant to a
//! series whose shift is exact therefore reproduces `D` bit for bit.

mod ks;

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

pub use ks::{kolmogorov_sf, ks_pvalue_known, ks_statistic};
pub(crate) use ks::ks_statistic_sorted;

use crate::rng::{stream_id, stream_rng};
use crate::series::{DemandClass, DemandSeries, RunConfig};

/// Smallest sample the goodness-of-fit stage accepts.
pub const MIN_FIT_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("too few points: need {required}, have {actual}")]
    TooFewPoints { required: usize, actual: usize },
    #[error("degenerate sample: all values are equal")]
    DegenerateSample,
    #[error("invalid distribution parameters: {0}")]
    InvalidParams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no family could be fitted ({})", describe_failures(.0))]
    AllFamiliesFailed(Vec<(DistributionFamily, DistError)>),
}

fn describe_failures(failures: &[(DistributionFamily, DistError)]) -> String {
    failures
        .iter()
        .map(|(family, err)| format!("{family}: {err}"))
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistributionFamily {
    Uniform,
    Normal,
    ExponentialShifted,
}

impl DistributionFamily {
    pub const ALL: [DistributionFamily; 3] = [
        DistributionFamily::Uniform,
        DistributionFamily::Normal,
        DistributionFamily::ExponentialShifted,
    ];

    /// Short display name, as used in classification tables.
    pub fn label(self) -> &'static str {
        match self {
            DistributionFamily::Uniform => "Uniform",
            DistributionFamily::Normal => "Normal",
            DistributionFamily::ExponentialShifted => "Exponential",
        }
    }

    /// The demand type whose values follow this family.
    pub fn demand_class(self) -> DemandClass {
        match self {
            DistributionFamily::Uniform => DemandClass::Cyclical,
            DistributionFamily::Normal => DemandClass::Stochastic,
            DistributionFamily::ExponentialShifted => DemandClass::Lumpy,
        }
    }

    fn tag(self) -> u32 {
        match self {
            DistributionFamily::Uniform => 0,
            DistributionFamily::Normal => 1,
            DistributionFamily::ExponentialShifted => 2,
        }
    }

    fn sample_standard<R: Rng>(self, rng: &mut R) -> f64 {
        match self {
            DistributionFamily::Uniform => rng.random::<f64>(),
            DistributionFamily::Normal => StandardNormal.sample(rng),
            DistributionFamily::ExponentialShifted => Exp1.sample(rng),
        }
    }
}

impl fmt::Display for DistributionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistParams {
    Uniform { lower: f64, upper: f64 },
    Normal { mean: f64, sd: f64 },
    /// `location` is the fitted base level, `scale` the mean excess over it.
    ExponentialShifted { location: f64, scale: f64 },
}

impl DistParams {
    pub fn family(&self) -> DistributionFamily {
        match self {
            DistParams::Uniform { .. } => DistributionFamily::Uniform,
            DistParams::Normal { .. } => DistributionFamily::Normal,
            DistParams::ExponentialShifted { .. } => DistributionFamily::ExponentialShifted,
        }
    }

    pub fn validate(&self) -> Result<(), DistError> {
        let ok = match *self {
            DistParams::Uniform { lower, upper } => {
                lower.is_finite() && upper.is_finite() && lower < upper
            }
            DistParams::Normal { mean, sd } => mean.is_finite() && sd.is_finite() && sd > 0.0,
            DistParams::ExponentialShifted { location, scale } => {
                location.is_finite() && scale.is_finite() && scale > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(DistError::InvalidParams(format!("{self:?}")))
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            DistParams::Uniform { lower, upper } => {
                if x <= lower {
                    0.0
                } else if x >= upper {
                    1.0
                } else {
                    (x - lower) / (upper - lower)
                }
            }
            DistParams::Normal { mean, sd } => {
                0.5 * erfc(-(x - mean) / (sd * std::f64::consts::SQRT_2))
            }
            DistParams::ExponentialShifted { location, scale } => {
                if x <= location {
                    0.0
                } else {
                    -(-(x - location) / scale).exp_m1()
                }
            }
        }
    }

    fn shifted(self, by: f64) -> Self {
        match self {
            DistParams::Uniform { lower, upper } => DistParams::Uniform {
                lower: lower + by,
                upper: upper + by,
            },
            DistParams::Normal { mean, sd } => DistParams::Normal {
                mean: mean + by,
                sd,
            },
            DistParams::ExponentialShifted { location, scale } => {
                DistParams::ExponentialShifted {
                    location: location + by,
                    scale,
                }
            }
        }
    }
}

/// One family's fit: MLE parameters, KS statistic and bootstrap p-value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionFit {
    pub family: DistributionFamily,
    pub params: DistParams,
    pub ks_statistic: f64,
    pub p_value: f64,
    pub n: usize,
}

/// MLE on data whose minimum is exactly zero.
fn mle_anchored(shifted: &[f64], family: DistributionFamily) -> Result<DistParams, DistError> {
    let n = shifted.len() as f64;
    let max = shifted.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(DistError::DegenerateSample);
    }
    let mean = shifted.iter().sum::<f64>() / n;
    let params = match family {
        DistributionFamily::Uniform => DistParams::Uniform {
            lower: 0.0,
            upper: max,
        },
        DistributionFamily::Normal => {
            let var = shifted.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
            if !(var > 0.0) {
                return Err(DistError::DegenerateSample);
            }
            DistParams::Normal {
                mean,
                sd: var.sqrt(),
            }
        }
        DistributionFamily::ExponentialShifted => DistParams::ExponentialShifted {
            location: 0.0,
            scale: mean,
        },
    };
    Ok(params)
}

/// Sample minimum and the data shifted so that minimum sits at zero.
fn anchor(values: &[f64]) -> (f64, Vec<f64>) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    (min, values.iter().map(|&v| v - min).collect())
}

fn check_finite(values: &[f64]) -> Result<(), DistError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(DistError::InvalidParams("sample contains non-finite values".into()))
    }
}

/// Maximum-likelihood parameters: Uniform `(min, max)`, Normal `(mean, sd)`
/// with a `1/n` variance, ExponentialShifted `(min, mean - min)`.
pub fn fit_mle(values: &[f64], family: DistributionFamily) -> Result<DistParams, DistError> {
    fit_anchored(values, family).map(|fit| fit.reported)
}

struct AnchoredFit {
    /// Parameters in the caller's units.
    reported: DistParams,
    /// Parameters for the data shifted by `-min`.
    anchored: DistParams,
    shifted: Vec<f64>,
}

fn fit_anchored(values: &[f64], family: DistributionFamily) -> Result<AnchoredFit, DistError> {
    if values.len() < 2 {
        return Err(DistError::TooFewPoints {
            required: 2,
            actual: values.len(),
        });
    }
    check_finite(values)?;
    let (min, shifted) = anchor(values);
    let anchored = mle_anchored(&shifted, family)?;
    let reported = match anchored {
        DistParams::Uniform { .. } => DistParams::Uniform {
            lower: min,
            upper: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        },
        other => other.shifted(min),
    };
    Ok(AnchoredFit {
        reported,
        anchored,
        shifted,
    })
}

/// `D` of the refitted standard sample for one bootstrap replicate.
fn replicate_statistic(family: DistributionFamily, n: usize, seed: u64, replicate: u32) -> f64 {
    let mut rng = stream_rng(seed, stream_id(family.tag(), replicate));
    let draws: Vec<f64> = (0..n).map(|_| family.sample_standard(&mut rng)).collect();
    let (_, mut shifted) = anchor(&draws);
    match mle_anchored(&shifted, family) {
        Ok(params) => {
            shifted.sort_by(f64::total_cmp);
            ks_statistic_sorted(&shifted, &params)
        }
        // A tied continuous draw is practically impossible; count it against the fit.
        Err(_) => 1.0,
    }
}

/// The bootstrap null sample of `D` for `(family, n, seed)`, in replicate order.
pub fn null_statistics(family: DistributionFamily, n: usize, replicates: usize, seed: u64) -> Vec<f64> {
    (0..replicates as u32)
        .into_par_iter()
        .map(|r| replicate_statistic(family, n, seed, r))
        .collect()
}

/// `p = (1 + #{replicate D >= observed D}) / (replicates + 1)`.
pub fn bootstrap_pvalue(observed: f64, null: &[f64]) -> f64 {
    let exceed = null.iter().filter(|&&d| d >= observed).count();
    (1 + exceed) as f64 / (null.len() + 1) as f64
}

/// Fits `family`, computes the observed `D` and its parametric-bootstrap p-value.
pub fn ks_pvalue_mc(
    values: &[f64],
    family: DistributionFamily,
    config: &RunConfig,
) -> Result<DistributionFit, DistError> {
    config
        .validate()
        .map_err(|e| DistError::InvalidConfig(e.to_string()))?;
    let n = values.len();
    if n < MIN_FIT_POINTS {
        return Err(DistError::TooFewPoints {
            required: MIN_FIT_POINTS,
            actual: n,
        });
    }
    let AnchoredFit {
        reported,
        anchored,
        mut shifted,
    } = fit_anchored(values, family)?;
    shifted.sort_by(f64::total_cmp);
    let observed = ks_statistic_sorted(&shifted, &anchored);

    let null = null_statistics(family, n, config.mc_replicates, config.rng_seed);
    let p_value = bootstrap_pvalue(observed, &null);

    Ok(DistributionFit {
        family,
        params: reported,
        ks_statistic: observed,
        p_value,
        n,
    })
}

/// Every family's fit, best first, plus the families that could not be fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitAll {
    pub fits: Vec<DistributionFit>,
    pub skipped: Vec<(DistributionFamily, String)>,
}

impl FitAll {
    pub fn best(&self) -> &DistributionFit {
        &self.fits[0]
    }

    pub fn get(&self, family: DistributionFamily) -> Option<&DistributionFit> {
        self.fits.iter().find(|f| f.family == family)
    }
}

/// Ordering of [`fit_all`]: descending p-value, then ascending `D`, then
/// family order.
fn rank(fits: &mut [DistributionFit]) {
    fits.sort_by(|a, b| {
        b.p_value
            .total_cmp(&a.p_value)
            .then(a.ks_statistic.total_cmp(&b.ks_statistic))
    });
}

pub fn fit_all(series: &DemandSeries, config: &RunConfig) -> Result<FitAll, DistError> {
    fit_all_values(series.values(), config)
}

pub(crate) fn fit_all_values(values: &[f64], config: &RunConfig) -> Result<FitAll, DistError> {
    let mut fits = Vec::new();
    let mut failures = Vec::new();
    for family in DistributionFamily::ALL {
        match ks_pvalue_mc(values, family, config) {
            Ok(fit) => fits.push(fit),
            Err(err @ DistError::InvalidConfig(_)) => return Err(err),
            Err(err) => failures.push((family, err)),
        }
    }
    if fits.is_empty() {
        return Err(DistError::AllFamiliesFailed(failures));
    }
    rank(&mut fits);
    Ok(FitAll {
        fits,
        skipped: failures
            .into_iter()
            .map(|(family, err)| (family, err.to_string()))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn config(seed: u64, replicates: usize) -> RunConfig {
        RunConfig {
            rng_seed: seed,
            mc_replicates: replicates,
            ..RunConfig::default()
        }
    }

    #[test]
    fn mle_examples() {
        assert_eq!(
            fit_mle(&[1.0, 2.0, 3.0, 4.0], DistributionFamily::Uniform).unwrap(),
            DistParams::Uniform {
                lower: 1.0,
                upper: 4.0
            }
        );
        match fit_mle(&[2.0, 4.0, 6.0], DistributionFamily::Normal).unwrap() {
            DistParams::Normal { mean, sd } => {
                assert_relative_eq!(mean, 4.0, epsilon = 1e-15);
                assert_relative_eq!(sd, (8.0f64 / 3.0).sqrt(), epsilon = 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
        match fit_mle(&[3.0, 5.0, 10.0], DistributionFamily::ExponentialShifted).unwrap() {
            DistParams::ExponentialShifted { location, scale } => {
                assert_eq!(location, 3.0);
                assert_relative_eq!(scale, 3.0, epsilon = 1e-15);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn degenerate_sample_for_every_family() {
        for family in DistributionFamily::ALL {
            assert_eq!(
                fit_mle(&[5.0, 5.0, 5.0], family),
                Err(DistError::DegenerateSample)
            );
        }
        assert!(matches!(
            fit_mle(&[5.0], DistributionFamily::Normal),
            Err(DistError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn pvalue_needs_enough_points() {
        let err = ks_pvalue_mc(&[1.0, 2.0, 3.0], DistributionFamily::Normal, &config(0, 10));
        assert_eq!(
            err,
            Err(DistError::TooFewPoints {
                required: MIN_FIT_POINTS,
                actual: 3
            })
        );
    }

    #[test]
    fn zero_statistic_gives_unit_pvalue() {
        assert_eq!(bootstrap_pvalue(0.0, &[0.1, 0.2, 0.05]), 1.0);
        assert_eq!(bootstrap_pvalue(0.5, &[0.1, 0.2, 0.05]), 0.25);
    }

    #[test]
    fn huge_statistic_gives_tiny_pvalue() {
        for family in DistributionFamily::ALL {
            let null = null_statistics(family, 50, 999, 17);
            let p = bootstrap_pvalue(0.9, &null);
            assert!(p < 0.01, "{family}: p = {p}");
        }
    }

    #[test]
    fn constant_series_fails_every_family() {
        let s = crate::series::validate_series(&[7.0; 30]).unwrap();
        match fit_all(&s, &config(1, 20)) {
            Err(DistError::AllFamiliesFailed(reasons)) => {
                assert_eq!(reasons.len(), 3);
                assert!(reasons.iter().all(|(_, e)| *e == DistError::DegenerateSample));
            }
            other => panic!("expected AllFamiliesFailed, got {other:?}"),
        }
    }

    #[test]
    fn ranking_orders_by_pvalue_then_statistic() {
        let mk = |family, d, p| DistributionFit {
            family,
            params: DistParams::Uniform {
                lower: 0.0,
                upper: 1.0,
            },
            ks_statistic: d,
            p_value: p,
            n: 10,
        };
        let mut fits = vec![
            mk(DistributionFamily::Uniform, 0.3, 0.01),
            mk(DistributionFamily::Normal, 0.2, 0.01),
            mk(DistributionFamily::ExponentialShifted, 0.1, 0.5),
        ];
        rank(&mut fits);
        let order: Vec<_> = fits.iter().map(|f| f.family).collect();
        assert_eq!(
            order,
            vec![
                DistributionFamily::ExponentialShifted,
                DistributionFamily::Normal,
                DistributionFamily::Uniform
            ]
        );
    }

    #[test]
    fn pvalue_is_deterministic_and_thread_independent() {
        let values: Vec<f64> = (0..100).map(|i| ((i * 37) % 101) as f64).collect();
        let cfg = config(99, 300);
        let a = ks_pvalue_mc(&values, DistributionFamily::Normal, &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| ks_pvalue_mc(&values, DistributionFamily::Normal, &cfg).unwrap());
        assert_eq!(a, b);
    }
}

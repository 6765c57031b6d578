//! One-sample Kolmogorov–Smirnov statistic.

use super::{DistError, DistParams};

/// `D = sup_x |F_n(x) - F(x)|` for the empirical CDF of `values`.
pub fn ks_statistic(values: &[f64], params: &DistParams) -> Result<f64, DistError> {
    params.validate()?;
    if values.is_empty() {
        return Err(DistError::TooFewPoints {
            required: 1,
            actual: 0,
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(ks_statistic_sorted(&sorted, params))
}

/// Same as [`ks_statistic`] for data already in ascending order.
///
/// Tied values are one jump of the empirical CDF: with the tie occupying
/// sorted positions `j..k`, the CDF steps from `j/n` to `k/n` at that value.
pub(crate) fn ks_statistic_sorted(sorted: &[f64], params: &DistParams) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut j = 0;
    while j < sorted.len() {
        let x = sorted[j];
        let mut k = j + 1;
        while k < sorted.len() && sorted[k] == x {
            k += 1;
        }
        let f = params.cdf(x);
        d = d.max(f - j as f64 / n).max(k as f64 / n - f);
        j = k;
    }
    d
}

/// Asymptotic Kolmogorov survival function `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        // The alternating series converges slowly here and the tail is 1 to double precision.
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-17 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Classical p-value for a KS statistic against a fully specified
/// distribution (parameters not estimated from the data), using Stephens'
/// small-sample correction of the asymptotic law.
pub fn ks_pvalue_known(d: f64, n: usize) -> f64 {
    let rn = (n as f64).sqrt();
    kolmogorov_sf((rn + 0.12 + 0.11 / rn) * d)
}

//! Synthetic demand generators, one per demand type.
//!
//! * cyclical: `base + trend_slope * i + sum_j component_j(i) + e_i`
//! * stochastic: `Y_i = mean * (1 - alpha) + alpha * Y_{i-1} + e_i`
//! * lumpy: `A + B_i * X_i`, `B_i ~ Bernoulli(1 - zero_prob)`, `X_i ~ Exponential(burst_scale)`
//!
//! Index `i` starts at 0. Noise that would push a value below zero is floored
//! and the number of floored values is returned alongside the series.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{stream_id, stream_rng};
use crate::series::{DemandClass, DemandSeries, DEFAULT_PERIOD};

/// Lumpy burst sizes are rounded up to this grid. Adding a base level that
/// sits on the same grid is then exact in floating point, so a shifted series
/// carries exactly the same excess values as the unshifted one.
pub const BURST_GRID: f64 = 1.0 / 65536.0;

/// Length of every series in [`gen_corpus`].
pub const CORPUS_LENGTH: usize = 240;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation spec: {0}")]
    InvalidSpec(String),
}

fn invalid(msg: impl Into<String>) -> SimError {
    SimError::InvalidSpec(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleShape {
    /// Linear ramp over each cycle; its values are uniform over one period.
    Sawtooth,
    /// Sinusoid; only approximately uniform (arcsine-shaped marginal).
    Sine,
}

/// One periodic component. `amplitude` is the peak-to-peak range and
/// `phase` is a fraction of a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleComponent {
    pub shape: CycleShape,
    pub amplitude: f64,
    pub period: usize,
    pub phase: f64,
}

impl CycleComponent {
    pub fn value_at(&self, i: usize) -> f64 {
        let frac = ((i % self.period) as f64 / self.period as f64 + self.phase).rem_euclid(1.0);
        match self.shape {
            CycleShape::Sawtooth => self.amplitude * (frac - 0.5),
            CycleShape::Sine => 0.5 * self.amplitude * (2.0 * PI * frac).sin(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CyclicalSpec {
    pub n: usize,
    pub trend_slope: f64,
    pub cycles: Vec<CycleComponent>,
    pub noise_sd: f64,
    pub base: f64,
}

impl CyclicalSpec {
    /// One sawtooth of the given range and period, no trend, and noise at a
    /// quarter of the spacing between consecutive ramp values.
    pub fn sawtooth(n: usize, base: f64, amplitude: f64, period: usize) -> Self {
        Self {
            n,
            trend_slope: 0.0,
            cycles: vec![CycleComponent {
                shape: CycleShape::Sawtooth,
                amplitude,
                period,
                phase: 0.0,
            }],
            noise_sd: amplitude / (4.0 * period as f64),
            base,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.n == 0 {
            return Err(invalid("n must be positive"));
        }
        if self.cycles.is_empty() {
            return Err(invalid("at least one cycle component is required"));
        }
        for c in &self.cycles {
            if !(c.amplitude > 0.0 && c.amplitude.is_finite()) {
                return Err(invalid(format!("cycle amplitude {} must be > 0", c.amplitude)));
            }
            if c.period == 0 {
                return Err(invalid("cycle period must be positive"));
            }
            if !c.phase.is_finite() {
                return Err(invalid("cycle phase must be finite"));
            }
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(invalid("noise_sd must be >= 0"));
        }
        if !(self.base >= 0.0 && self.base.is_finite()) {
            return Err(invalid("base must be >= 0"));
        }
        if !self.trend_slope.is_finite() {
            return Err(invalid("trend_slope must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticSpec {
    pub n: usize,
    pub alpha: f64,
    pub noise_sd: f64,
    pub mean_level: f64,
    /// Initial value; drawn from the stationary marginal when absent.
    pub y1: Option<f64>,
}

impl StochasticSpec {
    pub fn stationary_variance(&self) -> f64 {
        self.noise_sd * self.noise_sd / (1.0 - self.alpha * self.alpha)
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.n == 0 {
            return Err(invalid("n must be positive"));
        }
        if !(self.alpha.abs() < 1.0) {
            return Err(invalid(format!("|alpha| = {} must be < 1", self.alpha.abs())));
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return Err(invalid("noise_sd must be > 0"));
        }
        if !(self.mean_level >= 0.0 && self.mean_level.is_finite()) {
            return Err(invalid("mean_level must be >= 0"));
        }
        if let Some(y1) = self.y1 {
            if !y1.is_finite() {
                return Err(invalid("y1 must be finite"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LumpySpec {
    pub n: usize,
    pub base_level: f64,
    /// Mean of the exponential burst.
    pub burst_scale: f64,
    pub zero_prob: f64,
}

impl LumpySpec {
    fn validate(&self) -> Result<(), SimError> {
        if self.n == 0 {
            return Err(invalid("n must be positive"));
        }
        if !(self.base_level >= 0.0 && self.base_level.is_finite()) {
            return Err(invalid("base_level must be >= 0"));
        }
        if !(self.burst_scale > 0.0 && self.burst_scale.is_finite()) {
            return Err(invalid("burst_scale must be > 0"));
        }
        if !(0.0..1.0).contains(&self.zero_prob) {
            return Err(invalid(format!("zero_prob {} outside [0, 1)", self.zero_prob)));
        }
        Ok(())
    }
}

/// A generated series and the number of values floored at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulated {
    pub series: DemandSeries,
    pub floored: usize,
}

fn floor_at_zero(raw: Vec<f64>) -> (Vec<f64>, usize) {
    let mut floored = 0;
    let values = raw
        .into_iter()
        .map(|v| {
            if v < 0.0 {
                floored += 1;
                0.0
            } else {
                v
            }
        })
        .collect();
    (values, floored)
}

fn finish(raw: Vec<f64>, period: usize) -> Simulated {
    let (values, floored) = floor_at_zero(raw);
    Simulated {
        series: DemandSeries::from_parts(values, period, None),
        floored,
    }
}

pub fn gen_cyclical(spec: &CyclicalSpec, seed: u64) -> Result<Simulated, SimError> {
    spec.validate()?;
    let mut rng = stream_rng(seed, 0);
    let raw = (0..spec.n)
        .map(|i| {
            let cycles: f64 = spec.cycles.iter().map(|c| c.value_at(i)).sum();
            let z: f64 = StandardNormal.sample(&mut rng);
            spec.base + spec.trend_slope * i as f64 + cycles + spec.noise_sd * z
        })
        .collect();
    Ok(finish(raw, spec.cycles[0].period))
}

/// Unfloored AR(1) path.
pub(crate) fn ar1_path(spec: &StochasticSpec, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    let mut noise = move || -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        z
    };
    let intercept = spec.mean_level * (1.0 - spec.alpha);
    let first = match spec.y1 {
        Some(y1) => y1,
        None => spec.mean_level + spec.stationary_variance().sqrt() * noise(),
    };
    let mut path = Vec::with_capacity(spec.n);
    path.push(first);
    for _ in 1..spec.n {
        let prev = *path.last().unwrap();
        path.push(intercept + spec.alpha * prev + spec.noise_sd * noise());
    }
    path
}

pub fn gen_stochastic(spec: &StochasticSpec, seed: u64) -> Result<Simulated, SimError> {
    spec.validate()?;
    Ok(finish(ar1_path(spec, seed), DEFAULT_PERIOD))
}

pub fn gen_lumpy(spec: &LumpySpec, seed: u64) -> Result<Simulated, SimError> {
    spec.validate()?;
    let mut rng = stream_rng(seed, 0);
    let raw = (0..spec.n)
        .map(|_| {
            let burst = rng.random::<f64>() >= spec.zero_prob;
            let x: f64 = Exp1.sample(&mut rng);
            if burst {
                spec.base_level + ((x * spec.burst_scale) / BURST_GRID).ceil() * BURST_GRID
            } else {
                spec.base_level
            }
        })
        .collect();
    Ok(finish(raw, DEFAULT_PERIOD))
}

/// Parameter ranges sampled by [`gen_corpus`]. Each range is `[lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRanges {
    pub n: usize,
    pub cycle_period: usize,
    pub cycle_amplitude: (f64, f64),
    pub cycle_base: (f64, f64),
    pub ar_alpha: (f64, f64),
    pub ar_mean: (f64, f64),
    pub ar_noise_sd: (f64, f64),
    pub lumpy_base: (f64, f64),
    pub lumpy_burst_scale: (f64, f64),
    pub lumpy_zero_prob: (f64, f64),
}

impl Default for CorpusRanges {
    fn default() -> Self {
        Self {
            n: CORPUS_LENGTH,
            cycle_period: DEFAULT_PERIOD,
            cycle_amplitude: (20.0, 100.0),
            cycle_base: (100.0, 300.0),
            ar_alpha: (0.2, 0.6),
            ar_mean: (100.0, 300.0),
            ar_noise_sd: (5.0, 20.0),
            lumpy_base: (0.0, 1000.0),
            lumpy_burst_scale: (50.0, 500.0),
            lumpy_zero_prob: (0.3, 0.7),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelledSeries {
    pub series: DemandSeries,
    pub class: DemandClass,
}

/// `count_per_type` series of each demand type drawn with the default ranges.
pub fn gen_corpus(count_per_type: usize, base_seed: u64) -> Result<Vec<LabelledSeries>, SimError> {
    gen_corpus_with(&CorpusRanges::default(), count_per_type, base_seed)
}

pub fn gen_corpus_with(
    ranges: &CorpusRanges,
    count_per_type: usize,
    base_seed: u64,
) -> Result<Vec<LabelledSeries>, SimError> {
    if count_per_type == 0 {
        return Err(invalid("count_per_type must be >= 1"));
    }
    let count = u32::try_from(count_per_type).map_err(|_| invalid("count_per_type too large"))?;
    let jobs: Vec<(DemandClass, u32)> = DemandClass::LABELLED
        .iter()
        .flat_map(|&class| (0..count).map(move |k| (class, k)))
        .collect();
    jobs.into_par_iter()
        .map(|(class, k)| corpus_member(ranges, class, k, base_seed))
        .collect()
}

fn corpus_member(
    ranges: &CorpusRanges,
    class: DemandClass,
    k: u32,
    base_seed: u64,
) -> Result<LabelledSeries, SimError> {
    let mut rng = stream_rng(base_seed, stream_id(class.index() as u32, k));
    let mut draw = |(lo, hi): (f64, f64)| lo + (hi - lo) * rng.random::<f64>();
    let n = ranges.n;
    let label = format!("{}-{}", class.as_str().to_lowercase(), k);
    let sim = match class {
        DemandClass::Cyclical => {
            let amplitude = draw(ranges.cycle_amplitude);
            let base = draw(ranges.cycle_base);
            let phase = draw((0.0, 1.0));
            let mut spec = CyclicalSpec::sawtooth(n, base, amplitude, ranges.cycle_period);
            spec.cycles[0].phase = phase;
            gen_cyclical(&spec, rng.random())?
        }
        DemandClass::Stochastic => {
            let spec = StochasticSpec {
                n,
                alpha: draw(ranges.ar_alpha),
                mean_level: draw(ranges.ar_mean),
                noise_sd: draw(ranges.ar_noise_sd),
                y1: None,
            };
            gen_stochastic(&spec, rng.random())?
        }
        DemandClass::Lumpy => {
            let spec = LumpySpec {
                n,
                base_level: draw(ranges.lumpy_base).round(),
                burst_scale: draw(ranges.lumpy_burst_scale),
                zero_prob: draw(ranges.lumpy_zero_prob),
            };
            gen_lumpy(&spec, rng.random())?
        }
        DemandClass::Unclassified => unreachable!("corpus only holds labelled classes"),
    };
    Ok(LabelledSeries {
        series: sim.series.with_label(label),
        class,
    })
}

//! Stopping rules, seeding, and the iteration driver shared by the baseline
//! and the constrained solver.

use ndarray::{Array2, Zip};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Denominators of the multiplicative rules are floored at this value.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

pub const DEFAULT_MAX_ITER: usize = 50_000;

/// Relative slack allowed on each step of a descent check:
/// `D(t+1) <= D(t) + DESCENT_SLACK * max(1, D(t))`.
pub const DESCENT_SLACK: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    /// Stop once `D(z-1) - D(z) < delta` (absolute progress).
    pub delta: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub init_low: Option<f64>,
    pub init_high: Option<f64>,
    /// Independent initializations; seeds `seed, seed + 1, ...`.
    pub restarts: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            delta: 0.0,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
            init_low: None,
            init_high: None,
            restarts: 1,
        }
    }
}

impl FitConfig {
    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_init_bounds(mut self, low: f64, high: f64) -> Self {
        self.init_low = Some(low);
        self.init_high = Some(high);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::Config(format!("delta must be >= 0, got {}", self.delta)));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be >= 1".into()));
        }
        for b in [self.init_low, self.init_high].into_iter().flatten() {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::Config(format!(
                    "initialization bounds must be finite and >= 0, got {b}"
                )));
            }
        }
        if let (Some(lo), Some(hi)) = (self.init_low, self.init_high) {
            if lo > hi {
                return Err(Error::Config(format!("init_low {lo} exceeds init_high {hi}")));
            }
        }
        Ok(())
    }

    /// Uniform bounds for free entries, honoring any overrides.
    pub(crate) fn bounds(&self, low: f64, high: f64) -> (f64, f64) {
        (self.init_low.unwrap_or(low), self.init_high.unwrap_or(high))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Termination {
    DeltaProgress,
    MaxIterations,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitReport {
    /// `½‖X − fit‖²` after each iteration, starting with the initial value.
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
    pub termination: Termination,
    /// Seed of the initialization that produced the returned model.
    pub seed: u64,
}

impl FitReport {
    pub fn final_objective(&self) -> f64 {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }
}

/// First step `t` at which `trace[t+1]` exceeds `trace[t]` beyond [`DESCENT_SLACK`].
pub fn first_ascent(trace: &[f64]) -> Option<usize> {
    trace
        .windows(2)
        .position(|w| w[1] > w[0] + DESCENT_SLACK * w[0].max(1.0))
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Samples `U(low, high)`; a degenerate interval yields `low`.
pub(crate) fn uniform_array(
    rng: &mut ChaCha8Rng,
    shape: (usize, usize),
    low: f64,
    high: f64,
) -> Array2<f64> {
    match Uniform::new(low, high) {
        Ok(dist) => Array2::from_shape_simple_fn(shape, || dist.sample(rng)),
        Err(_) => Array2::from_elem(shape, low),
    }
}

/// `base ⊙ numer ⊘ max(denom, floor)`.
pub(crate) fn multiplicative(base: &Array2<f64>, numer: &Array2<f64>, denom: &Array2<f64>) -> Array2<f64> {
    let mut out = base.clone();
    Zip::from(&mut out)
        .and(numer)
        .and(denom)
        .for_each(|b, &n, &d| *b *= n / d.max(DENOMINATOR_FLOOR));
    out
}

/// Runs `step` until the progress test or the iteration budget stops it.
pub(crate) fn iterate<M>(
    mut model: M,
    config: &FitConfig,
    seed: u64,
    mut step: impl FnMut(M) -> M,
    objective: impl Fn(&M) -> f64,
) -> Result<(M, FitReport)> {
    let initial = objective(&model);
    if !initial.is_finite() {
        return Err(Error::NumericFailure { iteration: 0 });
    }
    let mut trace = Vec::with_capacity(config.max_iter.min(1 << 16) + 1);
    trace.push(initial);
    let mut termination = Termination::MaxIterations;
    let mut z = 0;
    while z < config.max_iter {
        z += 1;
        model = step(model);
        let d = objective(&model);
        if !d.is_finite() {
            return Err(Error::NumericFailure { iteration: z });
        }
        let prev = *trace.last().unwrap();
        trace.push(d);
        if prev - d < config.delta {
            termination = Termination::DeltaProgress;
            break;
        }
    }
    Ok((
        model,
        FitReport {
            objective_trace: trace,
            iterations_run: z,
            termination,
            seed,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_rejects_bad_values() {
        assert!(FitConfig::default().validate().is_ok());
        assert!(FitConfig::default().with_delta(-1.0).validate().is_err());
        assert!(FitConfig::default().with_restarts(0).validate().is_err());
        assert!(FitConfig::default().with_init_bounds(2.0, 1.0).validate().is_err());
    }

    #[test]
    fn degenerate_uniform_is_constant() {
        let mut r = rng(1);
        let a = uniform_array(&mut r, (2, 3), 0.0, 0.0);
        assert!(a.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn floor_keeps_zeros_absorbing() {
        let base = ndarray::array![[0.0, 2.0]];
        let num = ndarray::array![[0.0, 1.0]];
        let den = ndarray::array![[0.0, 0.0]];
        let out = multiplicative(&base, &num, &den);
        assert_eq!(out[[0, 0]], 0.0);
        assert_eq!(out[[0, 1]], 2.0 / DENOMINATOR_FLOOR);
    }

    #[test]
    fn ascent_detection() {
        assert_eq!(first_ascent(&[3.0, 2.0, 2.0, 1.0]), None);
        assert_eq!(first_ascent(&[3.0, 2.0, 2.5]), Some(1));
        assert_eq!(first_ascent(&[1e-3, 1e-3 + 1e-11]), None);
    }

    #[test]
    fn iterate_budget_and_delta() {
        let cfg = FitConfig::default().with_max_iter(5);
        let (m, rep) = iterate(10.0f64, &cfg, 0, |v| v * 0.5, |v| *v).unwrap();
        assert_eq!(rep.iterations_run, 5);
        assert_eq!(rep.objective_trace.len(), 6);
        assert_eq!(rep.termination, Termination::MaxIterations);
        assert_eq!(m, 10.0 / 32.0);

        let cfg = FitConfig::default().with_max_iter(100).with_delta(1.0);
        let (_, rep) = iterate(10.0f64, &cfg, 0, |v| v * 0.5, |v| *v).unwrap();
        // 10 -> 5 -> 2.5 -> 1.25 -> 0.625: progress 0.625 < 1 at z = 4
        assert_eq!(rep.iterations_run, 4);
        assert_eq!(rep.termination, Termination::DeltaProgress);

        let cfg = FitConfig::default().with_max_iter(3);
        let err = iterate(1.0f64, &cfg, 0, |v| v * f64::MAX * 10.0, |v| *v).unwrap_err();
        assert!(matches!(err, Error::NumericFailure { iteration: 1 }));
    }
}

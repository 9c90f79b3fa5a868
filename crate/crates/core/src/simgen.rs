//! Synthetic group-structured data with known factors, and recovery scoring
//! against that ground truth.
//!
//! Each of `g` groups owns one unique factor; the remaining `q − g` factors
//! are shared by every observation. Observation `i` belongs to group `i mod g`.
//! Scores on a group's unique factor are the 0/1 indicator itself, scores on
//! shared factors are uniform draws rescaled so each column sums to `n`.
//! Factor rows of `S` are uniform draws rescaled to unit trapezoidal area, and
//! the diagonal of `A` absorbs both rescalings.

use ndarray::{s, Array1, Array2, Axis};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit;
use crate::gbr::{trapezoid_area, ConstraintSpec, Model};
use crate::matrix::{ensure_same, NonnegMatrix};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub n: usize,
    pub p: usize,
    pub g: usize,
    pub q: usize,
    /// Shared factors exposed as known bases.
    pub shared_constrained: usize,
    /// Gaussian noise sd; `None` uses 5% of the mean of `W·A·S`.
    pub noise_sd: Option<f64>,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            n: 400,
            p: 2000,
            g: 4,
            q: 7,
            shared_constrained: 1,
            noise_sd: None,
            seed: 0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p < 2 {
            return Err(Error::Config(format!(
                "need n >= 1 and p >= 2, got n = {}, p = {}",
                self.n, self.p
            )));
        }
        if self.g > self.q || self.q == 0 {
            return Err(Error::Config(format!("need 1 <= q and g <= q, got g = {}, q = {}", self.g, self.q)));
        }
        if self.g > self.n {
            return Err(Error::Config(format!("g = {} exceeds n = {}", self.g, self.n)));
        }
        if self.shared_constrained > self.q - self.g {
            return Err(Error::Config(format!(
                "shared_constrained = {} exceeds the {} shared factors",
                self.shared_constrained,
                self.q - self.g
            )));
        }
        if let Some(sd) = self.noise_sd {
            if !(sd.is_finite() && sd >= 0.0) {
                return Err(Error::Config(format!("noise_sd must be >= 0, got {sd}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SimTruth {
    pub params: SimParams,
    pub x: NonnegMatrix,
    pub w_true: NonnegMatrix,
    pub a_true: NonnegMatrix,
    pub s_true: NonnegMatrix,
    pub noise: Array2<f64>,
    pub noise_sd: f64,
    pub group_labels: Vec<usize>,
    /// Entries of `W·A·S + noise` that were negative and set to zero.
    pub clamped: usize,
}

impl SimTruth {
    /// Group indicator plus the first `shared_constrained` shared bases.
    pub fn constraint_spec(&self) -> ConstraintSpec {
        let (g, k) = (self.params.g, self.params.shared_constrained);
        let mut spec = ConstraintSpec::new(self.params.q);
        if g > 0 {
            spec = spec.with_groups(NonnegMatrix::from_array_unchecked(
                self.w_true.as_array().slice(s![.., ..g]).to_owned(),
            ));
        }
        if k > 0 {
            spec = spec.with_basis(NonnegMatrix::from_array_unchecked(
                self.s_true.as_array().slice(s![g..g + k, ..]).to_owned(),
            ));
        }
        spec
    }

    /// The truth as a model, masked like a fit under [`Self::constraint_spec`].
    pub fn as_model(&self) -> Model {
        Model::with_layout(
            self.w_true.clone(),
            self.a_true.clone(),
            self.s_true.clone(),
            self.params.g,
            self.params.shared_constrained,
        )
        .expect("simulated shapes are consistent")
    }
}

pub fn simulate(params: &SimParams) -> Result<SimTruth> {
    params.validate()?;
    let SimParams { n, p, g, q, .. } = *params;
    let mut rng = fit::rng(params.seed);

    let labels: Vec<usize> = (0..n).map(|i| if g > 0 { i % g } else { 0 }).collect();
    let mut w = Array2::zeros((n, q));
    for (i, &l) in labels.iter().enumerate() {
        if g > 0 {
            w[[i, l]] = 1.0;
        }
    }
    let shared = fit::uniform_array(&mut rng, (n, q - g), 0.0, 1.0);
    w.slice_mut(s![.., g..]).assign(&shared);
    let a_raw = fit::uniform_array(&mut rng, (1, q), 0.0, 1.0);
    let s_raw = fit::uniform_array(&mut rng, (q, p), 0.0, 1.0);

    // Rescale shared W columns to sum n and every S row to unit area.
    let mut w_scale = Array1::<f64>::ones(q);
    for j in g..q {
        let sum = w.column(j).sum();
        w_scale[j] = if sum > 0.0 { n as f64 / sum } else { 1.0 };
    }
    let s_scale: Array1<f64> = s_raw
        .axis_iter(Axis(0))
        .map(|r| {
            let area = trapezoid_area(r);
            if area > 0.0 { 1.0 / area } else { 1.0 }
        })
        .collect();
    let w_true = &w * &w_scale.view().insert_axis(Axis(0));
    let s_true = &s_raw * &s_scale.view().insert_axis(Axis(1));
    let mut a_true = Array2::zeros((q, q));
    for j in 0..q {
        a_true[[j, j]] = a_raw[[0, j]] / (w_scale[j] * s_scale[j]);
    }

    let clean = w_true.dot(&a_true).dot(&s_true);
    let noise_sd = params.noise_sd.unwrap_or_else(|| 0.05 * clean.mean().unwrap_or(0.0));
    let noise = match Normal::new(0.0, noise_sd) {
        Ok(dist) if noise_sd > 0.0 => Array2::from_shape_simple_fn((n, p), || dist.sample(&mut rng)),
        _ => Array2::zeros((n, p)),
    };
    let mut clamped = 0;
    let x = (&clean + &noise).mapv(|v| {
        if v < 0.0 {
            clamped += 1;
            0.0
        } else {
            v
        }
    });

    Ok(SimTruth {
        params: params.clone(),
        x: NonnegMatrix::from_array(x)?,
        w_true: NonnegMatrix::from_array(w_true)?,
        a_true: NonnegMatrix::from_array(a_true)?,
        s_true: NonnegMatrix::from_array(s_true)?,
        noise,
        noise_sd,
        group_labels: labels,
        clamped,
    })
}

/// Residual sum of squares `Σ (est − truth)²`.
pub fn rss(estimated: &NonnegMatrix, truth: &NonnegMatrix) -> Result<f64> {
    ensure_same("estimated", estimated.shape(), "truth", truth.shape())?;
    Ok(sq_dist(estimated.as_array().iter(), truth.as_array().iter()))
}

fn sq_dist<'a>(a: impl Iterator<Item = &'a f64>, b: impl Iterator<Item = &'a f64>) -> f64 {
    a.zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MatchMode {
    /// Factors pinned by the model's masks compare positionally; the rest
    /// are matched.
    ConstrainedAligned,
    /// Every factor is matched.
    FreeMatched,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactorRecovery {
    pub model_factor: usize,
    pub truth_factor: usize,
    pub positional: bool,
    /// RSS between unit-area basis rows.
    pub s_rss: f64,
    /// RSS between the matching columns of the score products.
    pub score_rss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub mode: MatchMode,
    pub factors: Vec<FactorRecovery>,
    pub s_rss_total: f64,
    /// RSS of `W·A` against `W_true·A_true` after basis normalization.
    pub score_rss_total: f64,
}

impl RecoveryReport {
    pub fn s_rss_mean(&self) -> f64 {
        self.s_rss_total / self.factors.len().max(1) as f64
    }
}

/// Largest number of factors that may be matched by exhaustive search.
pub const MAX_MATCHED_FACTORS: usize = 10;

/// Rescales rows of `S` to unit area and folds the scales into `W·A`.
/// Zero-area rows are left as they are.
fn canonical(model: &Model) -> (Array2<f64>, Array2<f64>) {
    let s = model.s().as_array();
    let scale: Array1<f64> = s
        .axis_iter(Axis(0))
        .map(|r| {
            let area = trapezoid_area(r);
            if area > 0.0 { area } else { 1.0 }
        })
        .collect();
    let bases = s / &scale.view().insert_axis(Axis(1));
    let scores = model.w().as_array().dot(model.a().as_array()) * scale.view().insert_axis(Axis(0));
    (scores, bases)
}

pub fn evaluate_recovery(model: &Model, truth: &SimTruth, mode: MatchMode) -> Result<RecoveryReport> {
    compare_models(model, &truth.as_model(), mode)
}

/// Scores `model` against a ground-truth model. In
/// [`MatchMode::ConstrainedAligned`] the pinned factors are those frozen in
/// `model`.
pub fn compare_models(model: &Model, truth_model: &Model, mode: MatchMode) -> Result<RecoveryReport> {
    let q = model.rank();
    if q != truth_model.rank() {
        return Err(Error::Config(format!(
            "model rank {q} differs from truth rank {}",
            truth_model.rank()
        )));
    }
    ensure_same("model w", model.w().shape(), "w_true", truth_model.w().shape())?;
    ensure_same("model s", model.s().shape(), "s_true", truth_model.s().shape())?;

    let (est_scores, est_bases) = canonical(model);
    let (true_scores, true_bases) = canonical(truth_model);

    let positional: Vec<bool> = match mode {
        MatchMode::FreeMatched => vec![false; q],
        MatchMode::ConstrainedAligned => model
            .frozen_w_columns()
            .into_iter()
            .zip(model.frozen_s_rows())
            .map(|(a, b)| a || b)
            .collect(),
    };

    let s_cost = Array2::from_shape_fn((q, q), |(m, t)| {
        sq_dist(est_bases.row(m).iter(), true_bases.row(t).iter())
    });

    let free: Vec<usize> = (0..q).filter(|j| !positional[*j]).collect();
    if free.len() > MAX_MATCHED_FACTORS {
        return Err(Error::Config(format!(
            "{} free factors exceed the matching limit of {MAX_MATCHED_FACTORS}",
            free.len()
        )));
    }
    let assignment = best_assignment(&s_cost, &free);

    let mut pairs: Vec<(usize, usize, bool)> = (0..q)
        .filter(|j| positional[*j])
        .map(|j| (j, j, true))
        .collect();
    pairs.extend(free.iter().zip(&assignment).map(|(&m, &t)| (m, t, false)));
    pairs.sort_unstable();

    let factors: Vec<FactorRecovery> = pairs
        .into_iter()
        .map(|(m, t, positional)| FactorRecovery {
            model_factor: m,
            truth_factor: t,
            positional,
            s_rss: s_cost[[m, t]],
            score_rss: sq_dist(est_scores.column(m).iter(), true_scores.column(t).iter()),
        })
        .collect();
    Ok(RecoveryReport {
        mode,
        s_rss_total: factors.iter().map(|f| f.s_rss).sum(),
        score_rss_total: factors.iter().map(|f| f.score_rss).sum(),
        factors,
    })
}

/// Assigns each model factor in `free` a distinct truth factor from the same
/// set, minimizing the summed cost. Exhaustive search with pruning; ties keep
/// the lexicographically first assignment.
fn best_assignment(cost: &Array2<f64>, free: &[usize]) -> Vec<usize> {
    struct Search<'a> {
        cost: &'a Array2<f64>,
        free: &'a [usize],
        used: Vec<bool>,
        current: Vec<usize>,
        best: Vec<usize>,
        best_cost: f64,
    }
    impl Search<'_> {
        fn go(&mut self, depth: usize, acc: f64) {
            if acc >= self.best_cost {
                return;
            }
            if depth == self.free.len() {
                self.best_cost = acc;
                self.best = self.current.clone();
                return;
            }
            for slot in 0..self.free.len() {
                if self.used[slot] {
                    continue;
                }
                let t = self.free[slot];
                self.used[slot] = true;
                self.current.push(t);
                self.go(depth + 1, acc + self.cost[[self.free[depth], t]]);
                self.current.pop();
                self.used[slot] = false;
            }
        }
    }
    let mut search = Search {
        cost,
        free,
        used: vec![false; free.len()],
        current: Vec::with_capacity(free.len()),
        best: free.to_vec(),
        best_cost: f64::INFINITY,
    };
    search.go(0, 0.0);
    search.best
}

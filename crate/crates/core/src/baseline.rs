//! Unconstrained two-factor NMF, `X ≈ W·H`, with the classic Frobenius
//! multiplicative updates. Serves as the comparison arm for the constrained
//! solver.

use crate::error::{Error, Result};
use crate::fit::{self, FitConfig, FitReport};
use crate::matrix::{ensure_inner, ensure_same, half_squared_distance, NonnegMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineModel {
    pub w: NonnegMatrix,
    pub h: NonnegMatrix,
}

impl BaselineModel {
    pub fn new(w: NonnegMatrix, h: NonnegMatrix) -> Result<Self> {
        ensure_inner("w", &w, "h", &h)?;
        Ok(Self { w, h })
    }

    pub fn rank(&self) -> usize {
        self.w.cols()
    }

    pub fn reconstruct(&self) -> NonnegMatrix {
        NonnegMatrix::from_array_unchecked(self.w.as_array().dot(self.h.as_array()))
    }

    /// `½‖X − WH‖²`.
    pub fn objective(&self, x: &NonnegMatrix) -> Result<f64> {
        ensure_same("x", x.shape(), "w·h", (self.w.rows(), self.h.cols()))?;
        Ok(half_squared_distance(x.view(), self.reconstruct().view()))
    }
}

/// One alternating step: `H ← H ⊙ (WᵀX) ⊘ (WᵀWH)`, then
/// `W ← W ⊙ (XHᵀ) ⊘ (WHHᵀ)` using the fresh `H`.
pub fn nmf_update_step(x: &NonnegMatrix, model: BaselineModel) -> Result<BaselineModel> {
    ensure_same("x", x.shape(), "w·h", (model.w.rows(), model.h.cols()))?;
    Ok(step_unchecked(x, model))
}

fn step_unchecked(x: &NonnegMatrix, model: BaselineModel) -> BaselineModel {
    let (x, w, h) = (x.as_array(), model.w.as_array(), model.h.as_array());
    let wt = w.t();
    let h = fit::multiplicative(h, &wt.dot(x), &wt.dot(w).dot(h));
    let ht = h.t();
    let w = fit::multiplicative(w, &x.dot(&ht), &w.dot(&h.dot(&ht)));
    BaselineModel {
        w: NonnegMatrix::from_array_unchecked(w),
        h: NonnegMatrix::from_array_unchecked(h),
    }
}

/// Uniform `U(min X, max X)` initialization (bounds overridable in `config`).
pub fn init_baseline(x: &NonnegMatrix, rank: usize, config: &FitConfig, seed: u64) -> BaselineModel {
    let (lo, hi) = config.bounds(x.min(), x.max());
    let mut rng = fit::rng(seed);
    let w = fit::uniform_array(&mut rng, (x.rows(), rank), lo, hi);
    let h = fit::uniform_array(&mut rng, (rank, x.cols()), lo, hi);
    BaselineModel {
        w: NonnegMatrix::from_array_unchecked(w),
        h: NonnegMatrix::from_array_unchecked(h),
    }
}

pub fn nmf_fit(x: &NonnegMatrix, rank: usize, config: &FitConfig) -> Result<(BaselineModel, FitReport)> {
    config.validate()?;
    if rank == 0 || rank > x.rows().min(x.cols()) {
        return Err(Error::Config(format!(
            "rank {rank} must lie in 1..={} for a {}x{} matrix",
            x.rows().min(x.cols()),
            x.rows(),
            x.cols()
        )));
    }
    let mut best: Option<(BaselineModel, FitReport)> = None;
    for r in 0..config.restarts {
        let seed = config.seed.wrapping_add(r as u64);
        let init = init_baseline(x, rank, config, seed);
        let candidate = fit::iterate(
            init,
            config,
            seed,
            |m| step_unchecked(x, m),
            |m| half_squared_distance(x.view(), m.reconstruct().view()),
        )?;
        if best
            .as_ref()
            .is_none_or(|b| candidate.1.final_objective() < b.1.final_objective())
        {
            best = Some(candidate);
        }
    }
    Ok(best.expect("at least one restart"))
}

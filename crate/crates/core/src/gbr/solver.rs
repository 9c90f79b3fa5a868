use ndarray::{s, Array2};
use rayon::prelude::*;

use super::updates::step_unchecked;
use super::{ConstraintSpec, Model};
use crate::error::Result;
use crate::fit::{self, FitConfig, FitReport};
use crate::matrix::{ensure_data, half_squared_distance, NonnegMatrix};

/// Starting point for a fit.
///
/// Group columns of `W` are copied from the spec and the remaining entries
/// drawn from `U(min X, max X)`. `A` is the identity. Basis rows of `S` are
/// copied and the remaining rows drawn from `U(min basis, max basis)`, or from
/// the data bounds when no basis is given.
pub fn init_model(x: &NonnegMatrix, spec: &ConstraintSpec, config: &FitConfig) -> Result<Model> {
    spec.validate(x.rows(), x.cols())?;
    config.validate()?;
    Ok(init_seeded(x, spec, config, config.seed))
}

fn init_seeded(x: &NonnegMatrix, spec: &ConstraintSpec, config: &FitConfig, seed: u64) -> Model {
    let (n, p, q) = (x.rows(), x.cols(), spec.q);
    let (g, k) = (spec.g(), spec.k());
    let mut rng = fit::rng(seed);

    let (lo, hi) = config.bounds(x.min(), x.max());
    let mut w = Array2::zeros((n, q));
    if let Some(block) = &spec.group_block {
        w.slice_mut(s![.., ..g]).assign(block.as_array());
    }
    w.slice_mut(s![.., g..])
        .assign(&fit::uniform_array(&mut rng, (n, q - g), lo, hi));

    let (s_lo, s_hi) = match &spec.basis_block {
        Some(b) => config.bounds(b.min(), b.max()),
        None => (lo, hi),
    };
    let free = fit::uniform_array(&mut rng, (q - k, p), s_lo, s_hi);
    let mut s = Array2::zeros((q, p));
    s.slice_mut(s![..g, ..]).assign(&free.slice(s![..g, ..]));
    if let Some(block) = &spec.basis_block {
        s.slice_mut(s![g..g + k, ..]).assign(block.as_array());
    }
    s.slice_mut(s![g + k.., ..]).assign(&free.slice(s![g.., ..]));

    Model {
        w: NonnegMatrix::from_array_unchecked(w),
        a: NonnegMatrix::identity(q),
        s: NonnegMatrix::from_array_unchecked(s),
        w_mask: spec.w_mask(n),
        s_mask: spec.s_mask(p),
    }
}

/// Runs the update loop from a given model. `config.seed` is recorded in the
/// report but not used.
pub fn fit_from(x: &NonnegMatrix, model: Model, config: &FitConfig) -> Result<(Model, FitReport)> {
    config.validate()?;
    ensure_data(x, &model.w, &model.a, &model.s)?;
    run(x, model, config, config.seed)
}

fn run(x: &NonnegMatrix, model: Model, config: &FitConfig, seed: u64) -> Result<(Model, FitReport)> {
    fit::iterate(
        model,
        config,
        seed,
        |m| step_unchecked(x, m, true),
        |m| half_squared_distance(x.view(), m.reconstruct().view()),
    )
}

/// Initializes and fits `config.restarts` times (in parallel), returning the
/// run with the lowest final objective; ties go to the lower seed.
pub fn fit(x: &NonnegMatrix, spec: &ConstraintSpec, config: &FitConfig) -> Result<(Model, FitReport)> {
    spec.validate(x.rows(), x.cols())?;
    config.validate()?;
    let runs: Vec<Result<(Model, FitReport)>> = (0..config.restarts)
        .into_par_iter()
        .map(|r| {
            let seed = config.seed.wrapping_add(r as u64);
            run(x, init_seeded(x, spec, config, seed), config, seed)
        })
        .collect();

    let mut best: Option<(Model, FitReport)> = None;
    for candidate in runs {
        let candidate = candidate?;
        if best
            .as_ref()
            .is_none_or(|b| candidate.1.final_objective() < b.1.final_objective())
        {
            best = Some(candidate);
        }
    }
    Ok(best.expect("restarts >= 1"))
}

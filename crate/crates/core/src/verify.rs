//! Numerical checks of the solver's mathematics: finite-difference gradients,
//! the per-coordinate auxiliary-function bounds behind the monotone descent
//! argument, and a randomized descent harness.

use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{self, DENOMINATOR_FLOOR, DESCENT_SLACK};
use crate::gbr::{self, ConstraintSpec, Model};
use crate::gbr::updates::{a_terms, s_terms, w_terms};
use crate::matrix::{ensure_data, gradient, Gradient, NonnegMatrix};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Factor {
    W,
    A,
    S,
}

impl std::fmt::Display for Factor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Factor::W => "W",
            Factor::A => "A",
            Factor::S => "S",
        })
    }
}

/// `‖X − WAS‖²` on raw arrays, so entries may be pushed below zero.
fn sq_error(x: &Array2<f64>, w: &Array2<f64>, a: &Array2<f64>, s: &Array2<f64>) -> f64 {
    let r = w.dot(a).dot(s);
    x.iter().zip(r.iter()).map(|(u, v)| (u - v) * (u - v)).sum()
}

fn pick<'a>(
    f: Factor,
    w: &'a mut Array2<f64>,
    a: &'a mut Array2<f64>,
    s: &'a mut Array2<f64>,
) -> &'a mut Array2<f64> {
    match f {
        Factor::W => w,
        Factor::A => a,
        Factor::S => s,
    }
}

// ---------------------------------------------------------------------------
// Gradient oracle

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientOffender {
    pub factor: Factor,
    pub row: usize,
    pub col: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientCheck {
    pub max_rel_w: f64,
    pub max_rel_a: f64,
    pub max_rel_s: f64,
    pub worst: Option<GradientOffender>,
    pub passed: bool,
}

/// Relative error with a unit floor on the denominator, so entries whose
/// true derivative is zero are compared in absolute terms.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

pub fn check_gradient(
    x: &NonnegMatrix,
    w: &NonnegMatrix,
    a: &NonnegMatrix,
    s: &NonnegMatrix,
    step: f64,
    tol: f64,
) -> Result<GradientCheck> {
    let analytic = gradient(x, w, a, s)?;
    check_gradient_against(x, w, a, s, &analytic, step, tol)
}

/// Compares a supplied gradient with central differences of `‖X − WAS‖²`.
pub fn check_gradient_against(
    x: &NonnegMatrix,
    w: &NonnegMatrix,
    a: &NonnegMatrix,
    s: &NonnegMatrix,
    analytic: &Gradient,
    step: f64,
    tol: f64,
) -> Result<GradientCheck> {
    ensure_data(x, w, a, s)?;
    if step.is_nan() || step <= 0.0 {
        return Err(Error::Config(format!("finite-difference step must be > 0, got {step}")));
    }
    let xa = x.as_array();
    let (mut wv, mut av, mut sv) = (w.as_array().clone(), a.as_array().clone(), s.as_array().clone());
    let mut maxima = [0.0f64; 3];
    let mut worst: Option<GradientOffender> = None;

    for (slot, factor) in [Factor::W, Factor::A, Factor::S].into_iter().enumerate() {
        let grad = match factor {
            Factor::W => &analytic.d_w,
            Factor::A => &analytic.d_a,
            Factor::S => &analytic.d_s,
        };
        let dim = pick(factor, &mut wv, &mut av, &mut sv).dim();
        for i in 0..dim.0 {
            for j in 0..dim.1 {
                let orig = pick(factor, &mut wv, &mut av, &mut sv)[[i, j]];
                pick(factor, &mut wv, &mut av, &mut sv)[[i, j]] = orig + step;
                let plus = sq_error(xa, &wv, &av, &sv);
                pick(factor, &mut wv, &mut av, &mut sv)[[i, j]] = orig - step;
                let minus = sq_error(xa, &wv, &av, &sv);
                pick(factor, &mut wv, &mut av, &mut sv)[[i, j]] = orig;

                let numeric = (plus - minus) / (2.0 * step);
                let rel = relative_error(grad[[i, j]], numeric);
                maxima[slot] = maxima[slot].max(rel);
                if worst.as_ref().is_none_or(|o| rel > o.rel_error) {
                    worst = Some(GradientOffender {
                        factor,
                        row: i,
                        col: j,
                        analytic: grad[[i, j]],
                        numeric,
                        rel_error: rel,
                    });
                }
            }
        }
    }
    let passed = maxima.iter().all(|m| *m <= tol);
    Ok(GradientCheck {
        max_rel_w: maxima[0],
        max_rel_a: maxima[1],
        max_rel_s: maxima[2],
        worst,
        passed,
    })
}

// ---------------------------------------------------------------------------
// Auxiliary functions

/// Tolerance on `G(v) >= F(v)`, scaled by `max(1, |F(v)|)`.
pub const AUX_SLACK: f64 = 1e-9;
/// Tolerance on `G(x_t) = F(x_t)`.
pub const AUX_ANCHOR_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuxCheckSample {
    pub factor: Factor,
    pub row: usize,
    pub col: usize,
    /// Anchor value of the entry.
    pub x_t: f64,
    pub probe_values: Vec<f64>,
    /// `F(v)`: `‖X − WAS‖²` with only this entry set to `v`.
    pub f_values: Vec<f64>,
    /// `G(v, x_t) = F(x_t) + F'(x_t)(v − x_t) + K (v − x_t)²`.
    pub g_values: Vec<f64>,
    /// Output of the multiplicative rule for this entry.
    pub update_value: f64,
    pub f_update: f64,
    /// Largest `F(v) − G(v)` relative to `max(1, |F(v)|)`.
    pub worst_gap: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuxReport {
    pub factor: Factor,
    pub samples: Vec<AuxCheckSample>,
    /// Sampled coordinates whose anchor value is zero.
    pub skipped: Vec<(usize, usize)>,
    pub passed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuxOptions {
    pub probes: usize,
    /// Probes cover `[0, span · x_t]`.
    pub span: f64,
}

impl Default for AuxOptions {
    fn default() -> Self {
        Self { probes: 50, span: 3.0 }
    }
}

pub fn check_auxiliary(
    x: &NonnegMatrix,
    model: &Model,
    target: Factor,
    samples: usize,
    seed: u64,
) -> Result<AuxReport> {
    check_auxiliary_with(x, model, target, samples, seed, AuxOptions::default())
}

/// Samples free coordinates of `target` and checks the quadratic upper bound
/// along each one, with every other entry held fixed.
pub fn check_auxiliary_with(
    x: &NonnegMatrix,
    model: &Model,
    target: Factor,
    samples: usize,
    seed: u64,
    opts: AuxOptions,
) -> Result<AuxReport> {
    let (w, a, s) = (model.w(), model.a(), model.s());
    ensure_data(x, w, a, s)?;
    if opts.probes < 2 {
        return Err(Error::Config("need at least two probes".into()));
    }
    let xa = x.as_array();
    let grad = gradient(x, w, a, s)?;
    let (mut wv, mut av, mut sv) = (w.as_array().clone(), a.as_array().clone(), s.as_array().clone());

    let (terms, slope, mask) = match target {
        Factor::W => (w_terms(xa, &wv, &av, &sv), &grad.d_w, Some(model.w_mask())),
        Factor::A => (a_terms(xa, &wv, &av, &sv), &grad.d_a, None),
        Factor::S => (s_terms(xa, &wv, &av, &sv), &grad.d_s, Some(model.s_mask())),
    };
    let (numer, denom) = terms;

    let candidates: Vec<(usize, usize)> = numer
        .indexed_iter()
        .map(|(idx, _)| idx)
        .filter(|idx| mask.is_none_or(|m| !m[*idx]))
        .collect();
    let mut rng = fit::rng(seed);
    let chosen = index::sample(&mut rng, candidates.len(), samples.min(candidates.len()));

    let base = sq_error(xa, &wv, &av, &sv);
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for c in chosen.iter() {
        let (i, j) = candidates[c];
        let x_t = pick(target, &mut wv, &mut av, &mut sv)[[i, j]];
        if x_t <= 0.0 {
            skipped.push((i, j));
            continue;
        }
        let curvature = denom[[i, j]] / x_t;
        let slope = slope[[i, j]];
        let aux = |v: f64| base + slope * (v - x_t) + curvature * (v - x_t) * (v - x_t);
        let mut restricted = |v: f64| {
            pick(target, &mut wv, &mut av, &mut sv)[[i, j]] = v;
            let f = sq_error(xa, &wv, &av, &sv);
            pick(target, &mut wv, &mut av, &mut sv)[[i, j]] = x_t;
            f
        };

        let mut probe_values: Vec<f64> = (0..opts.probes)
            .map(|m| opts.span * x_t * m as f64 / (opts.probes - 1) as f64)
            .collect();
        probe_values.push(x_t);
        let f_values: Vec<f64> = probe_values.iter().map(|v| restricted(*v)).collect();
        let g_values: Vec<f64> = probe_values.iter().map(|v| aux(*v)).collect();

        let update_value = x_t * numer[[i, j]] / denom[[i, j]].max(DENOMINATOR_FLOOR);
        let f_update = restricted(update_value);
        let f_anchor = *f_values.last().unwrap();

        let worst_gap = f_values
            .iter()
            .zip(&g_values)
            .map(|(f, g)| (f - g) / f.abs().max(1.0))
            .fold(f64::NEG_INFINITY, f64::max);
        let anchor_ok = (g_values.last().unwrap() - f_anchor).abs() <= AUX_ANCHOR_TOL * f_anchor.abs().max(f64::MIN_POSITIVE);
        let descent_ok = f_update <= f_anchor + AUX_SLACK * f_anchor.abs().max(1.0);
        out.push(AuxCheckSample {
            factor: target,
            row: i,
            col: j,
            x_t,
            probe_values,
            f_values,
            g_values,
            update_value,
            f_update,
            worst_gap,
            passed: worst_gap <= AUX_SLACK && anchor_ok && descent_ok,
        });
    }
    let passed = out.iter().all(|s| s.passed);
    Ok(AuxReport {
        factor: target,
        samples: out,
        skipped,
        passed,
    })
}

// ---------------------------------------------------------------------------
// Descent harness

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConstraintFamily {
    /// `g = 0`, `k = 0`.
    Unconstrained,
    /// `g > 0`, `k = 0`.
    Groups,
    /// `g = 0`, `k > 0`.
    Basis,
    /// `g > 0`, `k > 0`, `g + k <= q`.
    GroupsAndBasis,
    /// `g + k = q`.
    Saturated,
    /// Cycles through all of the above, trial by trial.
    Mixed,
}

impl ConstraintFamily {
    const CYCLE: [ConstraintFamily; 5] = [
        ConstraintFamily::Unconstrained,
        ConstraintFamily::Groups,
        ConstraintFamily::Basis,
        ConstraintFamily::GroupsAndBasis,
        ConstraintFamily::Saturated,
    ];

    /// The family used for trial `trial`; [`Self::Mixed`] cycles through the others.
    pub fn cycled(self, trial: usize) -> ConstraintFamily {
        match self {
            ConstraintFamily::Mixed => Self::CYCLE[trial % Self::CYCLE.len()],
            f => f,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DescentOptions {
    pub max_n: usize,
    pub max_p: usize,
    pub max_q: usize,
    pub iterations: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            max_n: 20,
            max_p: 20,
            max_q: 5,
            iterations: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DescentViolation {
    pub trial: usize,
    pub iteration: usize,
    pub before: f64,
    pub after: f64,
    /// `after − before − slack`, positive for a violation.
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DescentSummary {
    pub trials: usize,
    pub iterations: usize,
    pub violations: usize,
    /// Steps where frozen entries moved or an entry went negative.
    pub contract_breaches: usize,
    pub worst: Option<DescentViolation>,
    pub passed: bool,
}

/// A random problem from one constraint family.
#[derive(Clone, Debug)]
pub struct Instance {
    pub x: NonnegMatrix,
    pub spec: ConstraintSpec,
}

pub fn random_instance(family: ConstraintFamily, opts: &DescentOptions, seed: u64) -> Instance {
    let mut rng = fit::rng(seed);
    let min_q = match family {
        ConstraintFamily::Unconstrained => 1,
        ConstraintFamily::GroupsAndBasis | ConstraintFamily::Saturated => 2,
        _ => 1,
    };
    let q = rng.random_range(min_q..=opts.max_q.max(min_q));
    let (g, k) = match family {
        ConstraintFamily::Unconstrained | ConstraintFamily::Mixed => (0, 0),
        ConstraintFamily::Groups => (rng.random_range(1..=q), 0),
        ConstraintFamily::Basis => (0, rng.random_range(1..=q)),
        ConstraintFamily::GroupsAndBasis => {
            let g = rng.random_range(1..q);
            (g, rng.random_range(1..=q - g))
        }
        ConstraintFamily::Saturated => {
            let g = rng.random_range(1..q);
            (g, q - g)
        }
    };
    // Enough rows that every group gets a member.
    let n = rng.random_range(g.max(2)..=opts.max_n.max(g).max(2));
    let p = rng.random_range(2..=opts.max_p.max(2));

    let x = NonnegMatrix::from_array_unchecked(fit::uniform_array(&mut rng, (n, p), 0.0, 1.0));
    let mut spec = ConstraintSpec::new(q);
    if g > 0 {
        let mut labels: Vec<usize> = (0..n).map(|i| if i < g { i } else { rng.random_range(0..g) }).collect();
        labels.shuffle(&mut rng);
        spec = spec.with_groups(ConstraintSpec::indicator_from_labels(&labels, g).expect("labels < g"));
    }
    if k > 0 {
        let basis = fit::uniform_array(&mut rng, (k, p), 0.05, 1.0);
        spec = spec.with_basis(NonnegMatrix::from_array_unchecked(basis));
    }
    Instance { x, spec }
}

/// Runs `opts.iterations` full updates on `trials` random instances and
/// checks every consecutive pair of objective values.
pub fn check_descent(
    family: ConstraintFamily,
    trials: usize,
    seed: u64,
    opts: DescentOptions,
) -> Result<DescentSummary> {
    if trials == 0 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let per_trial: Vec<Result<(usize, usize, Option<DescentViolation>)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(t as u64);
            let inst = random_instance(family.cycled(t), &opts, trial_seed);
            descent_trial(&inst, t, trial_seed, opts.iterations)
        })
        .collect();

    let mut violations = 0;
    let mut breaches = 0;
    let mut worst: Option<DescentViolation> = None;
    for r in per_trial {
        let (v, b, w) = r?;
        violations += v;
        breaches += b;
        if let Some(w) = w {
            if worst.as_ref().is_none_or(|o| w.excess > o.excess) {
                worst = Some(w);
            }
        }
    }
    Ok(DescentSummary {
        trials,
        iterations: opts.iterations,
        violations,
        contract_breaches: breaches,
        worst,
        passed: violations == 0 && breaches == 0,
    })
}

fn descent_trial(
    inst: &Instance,
    trial: usize,
    seed: u64,
    iterations: usize,
) -> Result<(usize, usize, Option<DescentViolation>)> {
    let cfg = fit::FitConfig::default().with_seed(seed);
    let mut model = gbr::init_model(&inst.x, &inst.spec, &cfg)?;
    let frozen_w: Vec<u64> = masked_bits(model.w(), model.w_mask());
    let frozen_s: Vec<u64> = masked_bits(model.s(), model.s_mask());
    let mut before = model.objective(&inst.x)?;
    let mut violations = 0;
    let mut breaches = 0;
    let mut worst: Option<DescentViolation> = None;
    for it in 1..=iterations {
        model = gbr::gbr_step(&inst.x, model, true)?;
        let after = model.objective(&inst.x)?;
        let excess = after - before - DESCENT_SLACK * before.max(1.0);
        if excess > 0.0 || !after.is_finite() {
            violations += 1;
            if worst.as_ref().is_none_or(|o| excess > o.excess) {
                worst = Some(DescentViolation {
                    trial,
                    iteration: it,
                    before,
                    after,
                    excess,
                });
            }
        }
        let intact = masked_bits(model.w(), model.w_mask()) == frozen_w
            && masked_bits(model.s(), model.s_mask()) == frozen_s
            && model.a_is_diagonal();
        if !intact {
            breaches += 1;
        }
        before = after;
    }
    Ok((violations, breaches, worst))
}

pub(crate) fn masked_bits(m: &NonnegMatrix, mask: &Array2<bool>) -> Vec<u64> {
    m.as_array()
        .iter()
        .zip(mask.iter())
        .filter(|(_, f)| **f)
        .map(|(v, _)| v.to_bits())
        .collect()
}

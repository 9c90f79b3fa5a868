use ndarray::{Array2, Zip};

use super::Model;
use crate::error::Result;
use crate::fit::multiplicative;
use crate::matrix::{ensure_data, NonnegMatrix};

/// Numerator and denominator of the `W` rule: `X Sᵀ Aᵀ` and `W A S Sᵀ Aᵀ`.
pub(crate) fn w_terms(x: &Array2<f64>, w: &Array2<f64>, a: &Array2<f64>, s: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let b = a.dot(s);
    let bt = b.t();
    (x.dot(&bt), w.dot(&b.dot(&bt)))
}

/// `Wᵀ X Sᵀ` and `Wᵀ W A S Sᵀ`.
pub(crate) fn a_terms(x: &Array2<f64>, w: &Array2<f64>, a: &Array2<f64>, s: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let wt = w.t();
    let st = s.t();
    (wt.dot(x).dot(&st), wt.dot(w).dot(a).dot(&s.dot(&st)))
}

/// `Aᵀ Wᵀ X` and `Aᵀ Wᵀ W A S`.
pub(crate) fn s_terms(x: &Array2<f64>, w: &Array2<f64>, a: &Array2<f64>, s: &Array2<f64>) -> (Array2<f64>, Array2<f64>) {
    let c = w.dot(a);
    let ct = c.t();
    (ct.dot(x), ct.dot(&c).dot(s))
}

fn restore_frozen(updated: &mut Array2<f64>, previous: &Array2<f64>, mask: &Array2<bool>) {
    Zip::from(updated)
        .and(previous)
        .and(mask)
        .for_each(|u, &p, &frozen| {
            if frozen {
                *u = p;
            }
        });
}

pub(crate) fn step_w(x: &NonnegMatrix, model: Model) -> Model {
    let (xa, w, a, s) = (x.as_array(), model.w.as_array(), model.a.as_array(), model.s.as_array());
    let (num, den) = w_terms(xa, w, a, s);
    let mut next = multiplicative(w, &num, &den);
    restore_frozen(&mut next, w, &model.w_mask);
    Model {
        w: NonnegMatrix::from_array_unchecked(next),
        ..model
    }
}

pub(crate) fn step_a(x: &NonnegMatrix, model: Model) -> Model {
    let (xa, w, a, s) = (x.as_array(), model.w.as_array(), model.a.as_array(), model.s.as_array());
    let (num, den) = a_terms(xa, w, a, s);
    Model {
        a: NonnegMatrix::from_array_unchecked(multiplicative(a, &num, &den)),
        ..model
    }
}

pub(crate) fn step_s(x: &NonnegMatrix, model: Model) -> Model {
    let (xa, w, a, s) = (x.as_array(), model.w.as_array(), model.a.as_array(), model.s.as_array());
    let (num, den) = s_terms(xa, w, a, s);
    let mut next = multiplicative(s, &num, &den);
    restore_frozen(&mut next, s, &model.s_mask);
    Model {
        s: NonnegMatrix::from_array_unchecked(next),
        ..model
    }
}

/// `w_ij ← w_ij (X Sᵀ Aᵀ)_ij / (W A S Sᵀ Aᵀ)_ij` on free entries of `W`.
pub fn update_w(x: &NonnegMatrix, model: Model) -> Result<Model> {
    ensure_data(x, &model.w, &model.a, &model.s)?;
    Ok(step_w(x, model))
}

/// `a_ij ← a_ij (Wᵀ X Sᵀ)_ij / (Wᵀ W A S Sᵀ)_ij` on every entry of `A`.
pub fn update_a(x: &NonnegMatrix, model: Model) -> Result<Model> {
    ensure_data(x, &model.w, &model.a, &model.s)?;
    Ok(step_a(x, model))
}

/// `s_ij ← s_ij (Aᵀ Wᵀ X)_ij / (Aᵀ Wᵀ W A S)_ij` on free entries of `S`.
pub fn update_s(x: &NonnegMatrix, model: Model) -> Result<Model> {
    ensure_data(x, &model.w, &model.a, &model.s)?;
    Ok(step_s(x, model))
}

/// One full iteration in Gauss–Seidel order: `W`, then `A`, then `S`, each
/// rule seeing the latest values of the others. `update_a = false` holds `A`
/// fixed, which is only useful for diagnostics.
pub fn gbr_step(x: &NonnegMatrix, model: Model, update_a: bool) -> Result<Model> {
    ensure_data(x, &model.w, &model.a, &model.s)?;
    Ok(step_unchecked(x, model, update_a))
}

pub(crate) fn step_unchecked(x: &NonnegMatrix, model: Model, update_a: bool) -> Model {
    let model = step_w(x, model);
    let model = if update_a { step_a(x, model) } else { model };
    step_s(x, model)
}

/// Largest complementary-slackness violation `|v · (numer − denom)|` over the
/// free entries of each factor. All three vanish at a KKT point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KktResiduals {
    pub w: f64,
    pub a: f64,
    pub s: f64,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.w.max(self.a).max(self.s)
    }
}

pub fn kkt_residuals(x: &NonnegMatrix, model: &Model) -> Result<KktResiduals> {
    ensure_data(x, &model.w, &model.a, &model.s)?;
    let (xa, w, a, s) = (x.as_array(), model.w.as_array(), model.a.as_array(), model.s.as_array());
    let worst = |v: &Array2<f64>, (num, den): (Array2<f64>, Array2<f64>), mask: Option<&Array2<bool>>| {
        let mut out = 0.0f64;
        for (idx, val) in v.indexed_iter() {
            if mask.is_some_and(|m| m[idx]) {
                continue;
            }
            out = out.max((val * (num[idx] - den[idx])).abs());
        }
        out
    };
    Ok(KktResiduals {
        w: worst(w, w_terms(xa, w, a, s), Some(&model.w_mask)),
        a: worst(a, a_terms(xa, w, a, s), None),
        s: worst(s, s_terms(xa, w, a, s), Some(&model.s_mask)),
    })
}

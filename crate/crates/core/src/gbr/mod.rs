//! Group and basis restricted NMF: `X ≈ W·A·S`.
//!
//! Factor layout is fixed. For `g` group columns and `k` known bases:
//!
//! * factors `0..g` are group factors: column `j` of `W` is frozen to the
//!   `j`-th column of the group indicator, row `j` of `S` is learned;
//! * factors `g..g+k` are known bases: row `j` of `S` is frozen to a row of the
//!   basis block, column `j` of `W` is learned;
//! * factors `g+k..q` are fully free.
//!
//! `A` is `q×q`, starts at the identity and is always updated in full. Since
//! the rules are multiplicative its off-diagonal zeros never move.

mod normalize;
mod solver;
pub(crate) mod updates;

pub use normalize::{normalize, trapezoid_area, NormalizeOptions};
pub use solver::{fit, fit_from, init_model};
pub use updates::{gbr_step, kkt_residuals, update_a, update_s, update_w, KktResiduals};

use ndarray::{s, Array2};

use crate::error::{Error, Result};
use crate::matrix::{ensure_same, ensure_triple, reconstruct, NonnegMatrix};

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSpec {
    pub q: usize,
    /// n×g block pinned into the leading columns of `W`.
    pub group_block: Option<NonnegMatrix>,
    /// k×p block pinned into rows `g..g+k` of `S`.
    pub basis_block: Option<NonnegMatrix>,
    /// When set, every row of the group block must be one-hot.
    pub strict_indicator: bool,
}

impl ConstraintSpec {
    pub fn new(q: usize) -> Self {
        Self {
            q,
            group_block: None,
            basis_block: None,
            strict_indicator: true,
        }
    }

    pub fn with_groups(mut self, block: NonnegMatrix) -> Self {
        self.group_block = Some(block);
        self
    }

    pub fn with_basis(mut self, block: NonnegMatrix) -> Self {
        self.basis_block = Some(block);
        self
    }

    /// Allow arbitrary nonnegative fixed columns instead of hard indicators.
    pub fn relaxed(mut self) -> Self {
        self.strict_indicator = false;
        self
    }

    /// One-hot indicator built from zero-based group labels.
    pub fn indicator_from_labels(labels: &[usize], groups: usize) -> Result<NonnegMatrix> {
        let mut block = Array2::zeros((labels.len(), groups));
        for (i, &l) in labels.iter().enumerate() {
            if l >= groups {
                return Err(Error::Constraint(format!(
                    "label {l} at row {i} exceeds group count {groups}"
                )));
            }
            block[[i, l]] = 1.0;
        }
        NonnegMatrix::from_array(block)
    }

    pub fn g(&self) -> usize {
        self.group_block.as_ref().map_or(0, NonnegMatrix::cols)
    }

    pub fn k(&self) -> usize {
        self.basis_block.as_ref().map_or(0, NonnegMatrix::rows)
    }

    /// Checks the spec against an `n×p` data matrix.
    pub fn validate(&self, n: usize, p: usize) -> Result<()> {
        if self.q == 0 {
            return Err(Error::Constraint("q must be at least 1".into()));
        }
        let (g, k) = (self.g(), self.k());
        if g + k > self.q {
            return Err(Error::Constraint(format!(
                "g + k = {g} + {k} exceeds q = {}",
                self.q
            )));
        }
        if let Some(block) = &self.group_block {
            ensure_same("x rows", (n, g), "group block", block.shape())?;
            if self.strict_indicator {
                for (i, row) in block.as_array().rows().into_iter().enumerate() {
                    let ones = row.iter().filter(|v| **v == 1.0).count();
                    let zeros = row.iter().filter(|v| **v == 0.0).count();
                    if ones != 1 || ones + zeros != g {
                        return Err(Error::Indicator { row: i });
                    }
                }
            }
        }
        if let Some(block) = &self.basis_block {
            ensure_same("x cols", (k, p), "basis block", block.shape())?;
            for (i, row) in block.as_array().rows().into_iter().enumerate() {
                if row.iter().all(|v| *v == 0.0) {
                    return Err(Error::Constraint(format!("basis row {i} is all zero")));
                }
            }
        }
        Ok(())
    }

    pub fn w_mask(&self, n: usize) -> Array2<bool> {
        let mut mask = Array2::from_elem((n, self.q), false);
        mask.slice_mut(s![.., ..self.g()]).fill(true);
        mask
    }

    pub fn s_mask(&self, p: usize) -> Array2<bool> {
        let (g, k) = (self.g(), self.k());
        let mut mask = Array2::from_elem((self.q, p), false);
        mask.slice_mut(s![g..g + k, ..]).fill(true);
        mask
    }
}

/// The `(W, A, S)` triple plus masks of frozen entries (`true` = frozen).
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    w: NonnegMatrix,
    a: NonnegMatrix,
    s: NonnegMatrix,
    w_mask: Array2<bool>,
    s_mask: Array2<bool>,
}

impl Model {
    pub fn new(
        w: NonnegMatrix,
        a: NonnegMatrix,
        s: NonnegMatrix,
        w_mask: Array2<bool>,
        s_mask: Array2<bool>,
    ) -> Result<Self> {
        ensure_triple(&w, &a, &s)?;
        ensure_same("w", w.shape(), "w_mask", w_mask.dim())?;
        ensure_same("s", s.shape(), "s_mask", s_mask.dim())?;
        Ok(Self {
            w,
            a,
            s,
            w_mask,
            s_mask,
        })
    }

    pub fn unconstrained(w: NonnegMatrix, a: NonnegMatrix, s: NonnegMatrix) -> Result<Self> {
        let (wm, sm) = (Array2::from_elem(w.shape(), false), Array2::from_elem(s.shape(), false));
        Self::new(w, a, s, wm, sm)
    }

    /// Masks follow the standard layout: `g` leading group columns of `W`,
    /// then `k` basis rows of `S` starting at row `g`.
    pub fn with_layout(
        w: NonnegMatrix,
        a: NonnegMatrix,
        s: NonnegMatrix,
        g: usize,
        k: usize,
    ) -> Result<Self> {
        let q = w.cols();
        if g + k > q {
            return Err(Error::Constraint(format!("g + k = {g} + {k} exceeds q = {q}")));
        }
        let mut wm = Array2::from_elem(w.shape(), false);
        wm.slice_mut(s![.., ..g]).fill(true);
        let mut sm = Array2::from_elem(s.shape(), false);
        if s.rows() >= g + k {
            sm.slice_mut(s![g..g + k, ..]).fill(true);
        }
        Self::new(w, a, s, wm, sm)
    }

    pub fn w(&self) -> &NonnegMatrix {
        &self.w
    }

    pub fn a(&self) -> &NonnegMatrix {
        &self.a
    }

    pub fn s(&self) -> &NonnegMatrix {
        &self.s
    }

    pub fn w_mask(&self) -> &Array2<bool> {
        &self.w_mask
    }

    pub fn s_mask(&self) -> &Array2<bool> {
        &self.s_mask
    }

    pub fn rank(&self) -> usize {
        self.a.rows()
    }

    pub fn into_parts(self) -> (NonnegMatrix, NonnegMatrix, NonnegMatrix) {
        (self.w, self.a, self.s)
    }

    pub fn reconstruct(&self) -> NonnegMatrix {
        reconstruct(&self.w, &self.a, &self.s).expect("model shapes are validated")
    }

    /// `½‖X − WAS‖²`.
    pub fn objective(&self, x: &NonnegMatrix) -> Result<f64> {
        crate::matrix::frobenius_objective(x, &self.w, &self.a, &self.s)
    }

    /// Columns of `W` containing at least one frozen entry.
    pub fn frozen_w_columns(&self) -> Vec<bool> {
        self.w_mask
            .columns()
            .into_iter()
            .map(|c| c.iter().any(|b| *b))
            .collect()
    }

    /// Rows of `S` containing at least one frozen entry.
    pub fn frozen_s_rows(&self) -> Vec<bool> {
        self.s_mask
            .rows()
            .into_iter()
            .map(|r| r.iter().any(|b| *b))
            .collect()
    }

    /// True when every off-diagonal entry of `A` is exactly zero.
    pub fn a_is_diagonal(&self) -> bool {
        self.a
            .as_array()
            .indexed_iter()
            .all(|((i, j), v)| i == j || *v == 0.0)
    }

    pub(crate) fn replace(&self, w: NonnegMatrix, a: NonnegMatrix, s: NonnegMatrix) -> Self {
        Self {
            w,
            a,
            s,
            w_mask: self.w_mask.clone(),
            s_mask: self.s_mask.clone(),
        }
    }
}

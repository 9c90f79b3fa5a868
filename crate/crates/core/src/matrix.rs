//! Dense nonnegative matrices and the Frobenius objective shared by every solver.
//!
//! Two scalings of the objective appear in this crate. [`frobenius_objective`]
//! reports `½‖X − WAS‖²`, the quantity tracked by fit traces. [`gradient`]
//! differentiates the unscaled `‖X − WAS‖²`, so it is exactly twice the
//! gradient of the reported objective.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

/// Dense row-major matrix whose entries are all finite and `>= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonnegMatrix {
    data: Array2<f64>,
}

impl NonnegMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let len = data.len();
        let data = Array2::from_shape_vec((rows, cols), data)
            .map_err(|_| Error::DataLength { rows, cols, len })?;
        Self::from_array(data)
    }

    /// Validates every entry; negative or non-finite values are rejected.
    pub fn from_array(data: Array2<f64>) -> Result<Self> {
        if let Some(((row, col), &value)) = data
            .indexed_iter()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InvalidEntry { row, col, value });
        }
        Ok(Self { data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * p);
        for r in rows {
            let r = r.as_ref();
            if r.len() != p {
                return Err(Error::DataLength {
                    rows: n,
                    cols: p,
                    len: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(n, p, data)
    }

    /// Wraps an array produced by nonnegativity-preserving arithmetic.
    pub(crate) fn from_array_unchecked(data: Array2<f64>) -> Self {
        debug_assert!(data.iter().all(|v| *v >= 0.0 || v.is_nan()));
        Self { data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: Array2::zeros((rows, cols)),
        }
    }

    pub fn identity(size: usize) -> Self {
        Self {
            data: Array2::eye(size),
        }
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.dim()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[[row, col]]
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    /// Entries in row-major order.
    pub fn to_vec(&self) -> Vec<f64> {
        self.data.iter().copied().collect()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.data.sum()
    }

    /// Squared Frobenius norm.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn transpose(&self) -> Self {
        Self {
            data: self.data.t().to_owned(),
        }
    }

    pub fn matmul(&self, other: &NonnegMatrix) -> Result<NonnegMatrix> {
        ensure_inner("left", self, "right", other)?;
        Ok(Self::from_array_unchecked(self.data.dot(&other.data)))
    }
}

/// Analytic partial derivatives of `‖X − WAS‖²` (no ½ factor).
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub d_w: Array2<f64>,
    pub d_a: Array2<f64>,
    pub d_s: Array2<f64>,
}

pub(crate) fn ensure_inner(
    left: &'static str,
    l: &NonnegMatrix,
    right: &'static str,
    r: &NonnegMatrix,
) -> Result<()> {
    if l.cols() != r.rows() {
        return Err(Error::Shape {
            left,
            left_shape: l.shape(),
            right,
            right_shape: r.shape(),
        });
    }
    Ok(())
}

pub(crate) fn ensure_same(
    left: &'static str,
    l: (usize, usize),
    right: &'static str,
    r: (usize, usize),
) -> Result<()> {
    if l != r {
        return Err(Error::Shape {
            left,
            left_shape: l,
            right,
            right_shape: r,
        });
    }
    Ok(())
}

/// Checks that `w` (n×q), `a` (q×q), `s` (q×p) chain together.
pub(crate) fn ensure_triple(w: &NonnegMatrix, a: &NonnegMatrix, s: &NonnegMatrix) -> Result<()> {
    ensure_inner("w", w, "a", a)?;
    ensure_inner("a", a, "s", s)?;
    Ok(())
}

pub(crate) fn ensure_data(
    x: &NonnegMatrix,
    w: &NonnegMatrix,
    a: &NonnegMatrix,
    s: &NonnegMatrix,
) -> Result<()> {
    ensure_triple(w, a, s)?;
    ensure_same("x", x.shape(), "w·a·s", (w.rows(), s.cols()))
}

/// The n×p product `W·A·S`, evaluated as `(W·A)·S`.
pub fn reconstruct(w: &NonnegMatrix, a: &NonnegMatrix, s: &NonnegMatrix) -> Result<NonnegMatrix> {
    ensure_triple(w, a, s)?;
    Ok(NonnegMatrix::from_array_unchecked(
        w.data.dot(&a.data).dot(&s.data),
    ))
}

pub(crate) fn half_squared_distance(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> f64 {
    0.5 * x
        .iter()
        .zip(y.iter())
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum::<f64>()
}

/// `½‖X − WAS‖²_F`.
pub fn frobenius_objective(
    x: &NonnegMatrix,
    w: &NonnegMatrix,
    a: &NonnegMatrix,
    s: &NonnegMatrix,
) -> Result<f64> {
    ensure_data(x, w, a, s)?;
    let r = reconstruct(w, a, s)?;
    Ok(half_squared_distance(x.view(), r.view()))
}

/// Gradients of the unscaled objective `‖X − WAS‖²`:
///
/// ```text
/// ∂/∂W = −2 X Sᵀ Aᵀ + 2 W A S Sᵀ Aᵀ
/// ∂/∂A = −2 Wᵀ X Sᵀ + 2 Wᵀ W A S Sᵀ
/// ∂/∂S = −2 Aᵀ Wᵀ X + 2 Aᵀ Wᵀ W A S
/// ```
///
/// Evaluated through the residual `R = X − WAS`, which gives exact zeros at an
/// exact factorization.
pub fn gradient(
    x: &NonnegMatrix,
    w: &NonnegMatrix,
    a: &NonnegMatrix,
    s: &NonnegMatrix,
) -> Result<Gradient> {
    ensure_data(x, w, a, s)?;
    let wa = w.data.dot(&a.data);
    let as_ = a.data.dot(&s.data);
    let residual = &x.data - &wa.dot(&s.data);
    let d_w = residual.dot(&as_.t()) * -2.0;
    let d_a = w.data.t().dot(&residual).dot(&s.data.t()) * -2.0;
    let d_s = wa.t().dot(&residual) * -2.0;
    Ok(Gradient { d_w, d_a, d_s })
}

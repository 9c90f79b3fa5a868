use ndarray::{Array1, ArrayView1, Axis};

use super::Model;
use crate::error::{Error, Result};
use crate::matrix::NonnegMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NormalizeOptions {
    /// Also rescale frozen `W` columns and `S` rows.
    pub include_frozen: bool,
}

/// Area under a row treated as a piecewise-linear curve on unit-spaced
/// abscissae (trapezoidal rule). A single point has zero area.
pub fn trapezoid_area(row: ArrayView1<'_, f64>) -> f64 {
    row.windows(2).into_iter().map(|w| 0.5 * (w[0] + w[1])).sum()
}

/// Rescales each `W` column to sum to `n` and each `S` row to unit area,
/// moving the inverse scales into `A` so that `W·A·S` is unchanged.
///
/// By default frozen columns and rows are left as they are.
pub fn normalize(model: &Model, opts: NormalizeOptions) -> Result<Model> {
    let (w, a, s) = (model.w.as_array(), model.a.as_array(), model.s.as_array());
    let n = w.nrows() as f64;
    let frozen_cols = model.frozen_w_columns();
    let frozen_rows = model.frozen_s_rows();

    let mut w_scale = Array1::ones(w.ncols());
    for (j, col) in w.axis_iter(Axis(1)).enumerate() {
        if frozen_cols[j] && !opts.include_frozen {
            continue;
        }
        let sum = col.sum();
        if sum <= 0.0 {
            return Err(Error::Normalization {
                kind: "W column",
                index: j,
            });
        }
        w_scale[j] = n / sum;
    }

    let mut s_scale = Array1::ones(s.nrows());
    for (i, row) in s.axis_iter(Axis(0)).enumerate() {
        if frozen_rows[i] && !opts.include_frozen {
            continue;
        }
        let area = trapezoid_area(row);
        if area <= 0.0 {
            return Err(Error::Normalization {
                kind: "S row",
                index: i,
            });
        }
        s_scale[i] = 1.0 / area;
    }

    let w_new = w * &w_scale.view().insert_axis(Axis(0));
    let s_new = s * &s_scale.view().insert_axis(Axis(1));
    let mut a_new = a.clone();
    for ((i, j), v) in a_new.indexed_iter_mut() {
        *v /= w_scale[i] * s_scale[j];
    }

    Ok(model.replace(
        NonnegMatrix::from_array_unchecked(w_new),
        NonnegMatrix::from_array_unchecked(a_new),
        NonnegMatrix::from_array_unchecked(s_new),
    ))
}

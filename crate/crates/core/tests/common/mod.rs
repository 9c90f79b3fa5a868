#![allow(dead_code)]

use gbrnmf_core::NonnegMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_array(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(lo..hi))
}

pub fn rand_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> NonnegMatrix {
    NonnegMatrix::from_array(rand_array(rng, rows, cols, 0.1, 1.0)).unwrap()
}

/// Diagonal q×q matrix with entries in [0.5, 1.5).
pub fn rand_diag(rng: &mut ChaCha8Rng, q: usize) -> NonnegMatrix {
    let mut a = Array2::zeros((q, q));
    for i in 0..q {
        a[[i, i]] = rng.random_range(0.5..1.5);
    }
    NonnegMatrix::from_array(a).unwrap()
}

pub fn naive_mul(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    assert_eq!(a.ncols(), b.nrows());
    let mut out = Array2::zeros((a.nrows(), b.ncols()));
    for i in 0..a.nrows() {
        for j in 0..b.ncols() {
            let mut acc = 0.0;
            for l in 0..a.ncols() {
                acc += a[[i, l]] * b[[l, j]];
            }
            out[[i, j]] = acc;
        }
    }
    out
}

pub fn naive_t(a: &Array2<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.ncols(), a.nrows()), |(i, j)| a[[j, i]])
}

pub fn chain(ms: &[&Array2<f64>]) -> Array2<f64> {
    let mut acc = ms[0].clone();
    for m in &ms[1..] {
        acc = naive_mul(&acc, m);
    }
    acc
}

/// Σ (x − WAS)² by explicit loops.
pub fn naive_sq_error(x: &Array2<f64>, w: &Array2<f64>, a: &Array2<f64>, s: &Array2<f64>) -> f64 {
    let r = chain(&[w, a, s]);
    let mut acc = 0.0;
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            let d = x[[i, j]] - r[[i, j]];
            acc += d * d;
        }
    }
    acc
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn max_rel_err(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter().zip(b.iter()).map(|(x, y)| rel_err(*x, *y)).fold(0.0, f64::max)
}

/// Element-by-element multiplicative rule `base ⊙ numer ⊘ max(denom, 1e-12)`.
pub fn naive_rule(base: &Array2<f64>, numer: &Array2<f64>, denom: &Array2<f64>) -> Array2<f64> {
    Array2::from_shape_fn(base.dim(), |idx| base[idx] * numer[idx] / denom[idx].max(1e-12))
}

pub fn bits(m: &Array2<f64>) -> Vec<u64> {
    m.iter().map(|v| v.to_bits()).collect()
}

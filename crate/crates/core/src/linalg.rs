//! Small dense linear-algebra helpers. All matrix norms are the operator
//! 2-norm (largest singular value); vector norms are Euclidean.

use nalgebra::{DMatrix, DVector};

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn op_norm(m: &DMatrix<f64>) -> f64 {
    match m.shape() {
        (0, _) | (_, 0) => 0.0,
        (1, 1) => m[(0, 0)].abs(),
        _ => m
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(0.0, f64::max),
    }
}

/// Column-major flattening, matching `DMatrix` storage.
pub fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
    m.as_slice().to_vec()
}

pub fn unflatten(n: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(n, n, data)
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (m * to_dvector(v)).as_slice().to_vec()
}

/// Max absolute entry of `a - b`.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

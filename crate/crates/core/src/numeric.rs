//! Dense row-major containers and the distance / statistics primitives used
//! throughout the pipeline.
//!
//! Both [`Matrix`] and [`Vector`] reject non-finite entries at construction and
//! expose no mutable access afterwards.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{ExemError, Result};

fn check_finite(data: &[f64]) -> Result<()> {
    match data.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(ExemError::NonFinite { index }),
        None => Ok(()),
    }
}

/// Dense `rows × cols` matrix of `f64`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(ExemError::dim("matrix data length", rows * cols, data.len()));
        }
        check_finite(&data)?;
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Matrix {
            rows: n,
            cols: n,
            data,
        }
    }

    /// Builds a matrix from equal-length rows. An empty slice gives a `0 × 0` matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(ExemError::dim("matrix row length", cols, r.len()));
            }
            data.extend_from_slice(r);
        }
        Matrix::new(rows.len(), cols, data)
    }

    /// Internal constructor for values produced by arithmetic on finite inputs.
    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.row_iter().map(<[f64]>::to_vec).collect()
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix::from_vec_unchecked(idx.len(), self.cols, data)
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        Matrix::from_vec_unchecked(self.cols, self.rows, data)
    }
}

/// Finite real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        check_finite(&data)?;
        Ok(Vector(data))
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = ExemError;

    fn try_from(data: Vec<f64>) -> Result<Self> {
        Vector::new(data)
    }
}

#[inline]
pub(crate) fn squared_dist_unchecked(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

#[inline]
pub(crate) fn weighted_squared_dist_unchecked(u: &[f64], v: &[f64], inv_scale: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .zip(inv_scale)
        .map(|((a, b), s)| {
            let t = (a - b) * s;
            t * t
        })
        .sum()
}

#[inline]
pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn euclidean_dist(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(ExemError::dim("euclidean_dist", u.len(), v.len()));
    }
    Ok(squared_dist_unchecked(u, v).sqrt())
}

/// Euclidean distance after multiplying each coordinate difference by `inv_scale`.
pub fn weighted_euclidean_dist(u: &[f64], v: &[f64], inv_scale: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(ExemError::dim("weighted_euclidean_dist", u.len(), v.len()));
    }
    if inv_scale.len() != u.len() {
        return Err(ExemError::dim(
            "weighted_euclidean_dist scale",
            u.len(),
            inv_scale.len(),
        ));
    }
    if let Some(i) = inv_scale.iter().position(|&s| s.is_nan() || s <= 0.0) {
        return Err(ExemError::domain(format!(
            "scale entry {i} must be positive, got {}",
            inv_scale[i]
        )));
    }
    Ok(weighted_squared_dist_unchecked(u, v, inv_scale).sqrt())
}

pub fn column_mean(m: &Matrix) -> Result<Vec<f64>> {
    if m.rows() == 0 {
        return Err(ExemError::domain("column_mean of an empty matrix"));
    }
    let mut mean = vec![0.0; m.cols()];
    for row in m.row_iter() {
        for (acc, x) in mean.iter_mut().zip(row) {
            *acc += x;
        }
    }
    let n = m.rows() as f64;
    mean.iter_mut().for_each(|x| *x /= n);
    Ok(mean)
}

/// Per-column standard deviation with divisor `rows - ddof` (two-pass).
pub fn column_std(m: &Matrix, ddof: usize) -> Result<Vec<f64>> {
    if m.rows() <= ddof {
        return Err(ExemError::domain(format!(
            "column_std needs more than {ddof} rows, got {}",
            m.rows()
        )));
    }
    let mean = column_mean(m)?;
    let mut ss = vec![0.0; m.cols()];
    for row in m.row_iter() {
        for ((acc, x), mu) in ss.iter_mut().zip(row).zip(&mean) {
            let t = x - mu;
            *acc += t * t;
        }
    }
    let denom = (m.rows() - ddof) as f64;
    Ok(ss.into_iter().map(|s| (s / denom).sqrt()).collect())
}

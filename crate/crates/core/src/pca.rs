//! Principal component projection fitted on seen-class features.
//!
//! When there are at least as many samples as feature dimensions the
//! `D × D` sample covariance is decomposed directly; otherwise the `N × N`
//! Gram matrix of the centered data is decomposed and its eigenvectors are
//! mapped back into feature space.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{ExemError, Result};
use crate::numeric::{column_mean, dot, Matrix};

/// Convergence threshold handed to the symmetric eigensolver.
const EIGEN_EPS: f64 = 1e-14;

/// Eigenvalues below this fraction of the largest are treated as zero on the Gram path.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    /// Training mean, length `D`.
    pub mean: Vec<f64>,
    /// `d × D`, rows are the leading principal directions.
    pub projection: Matrix,
    /// Variance along each row of `projection`, non-increasing.
    pub eigenvalues: Vec<f64>,
}

/// `min(500, n - 1, dim)`, the target dimensionality used when none is given.
pub fn default_components(n_samples: usize, feature_dim: usize) -> usize {
    500.min(n_samples.saturating_sub(1)).min(feature_dim)
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.projection.rows()
    }

    /// Projects every row of `x`: `row_n = projection · (x_n − mean)`.
    pub fn project(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_dim() {
            return Err(ExemError::dim("pca project", self.input_dim(), x.cols()));
        }
        let d = self.output_dim();
        let mut out = Vec::with_capacity(x.rows() * d);
        let mut centered = vec![0.0; self.input_dim()];
        for row in x.row_iter() {
            for ((c, v), m) in centered.iter_mut().zip(row).zip(&self.mean) {
                *c = v - m;
            }
            out.extend(self.projection.row_iter().map(|p| dot(p, &centered)));
        }
        Ok(Matrix::from_vec_unchecked(x.rows(), d, out))
    }

    pub fn project_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.input_dim() {
            return Err(ExemError::dim("pca project", self.input_dim(), row.len()));
        }
        let centered: Vec<f64> = row.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        Ok(self.projection.row_iter().map(|p| dot(p, &centered)).collect())
    }
}

pub fn fit_pca(x: &Matrix, d: usize) -> Result<PcaModel> {
    let (n, dim) = (x.rows(), x.cols());
    if n < 2 {
        return Err(ExemError::domain(format!("PCA needs at least 2 samples, got {n}")));
    }
    let max_d = (n - 1).min(dim);
    if d == 0 || d > max_d {
        return Err(ExemError::domain(format!(
            "PCA dimensionality {d} outside 1..={max_d} for {n} samples of dimension {dim}"
        )));
    }

    let mean = column_mean(x)?;
    let centered = DMatrix::from_fn(n, dim, |i, j| x.get(i, j) - mean[j]);
    let scale = 1.0 / (n - 1) as f64;

    let (mut eigenvalues, mut directions) = if n >= dim {
        let cov = centered.transpose() * &centered * scale;
        let (vals, vecs) = sorted_eigen(cov, d)?;
        let dirs: Vec<Vec<f64>> = (0..d).map(|k| vecs.column(k).iter().copied().collect()).collect();
        (vals, dirs)
    } else {
        gram_path(&centered, scale, d)?
    };

    for v in &mut eigenvalues {
        *v = v.max(0.0);
    }
    orthonormalize(&mut directions, dim);
    for dir in &mut directions {
        fix_sign(dir);
    }

    let projection = Matrix::from_vec_unchecked(d, dim, directions.concat());
    Ok(PcaModel {
        mean,
        projection,
        eigenvalues,
    })
}

/// Leading `d` eigenpairs of a symmetric matrix, eigenvalues non-increasing.
fn sorted_eigen(m: DMatrix<f64>, d: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let size = m.nrows();
    let max_iter = 1000 * size.max(1);
    let eig = SymmetricEigen::try_new(m, EIGEN_EPS, max_iter).ok_or(ExemError::NotConverged {
        what: "symmetric eigensolver",
        iterations: max_iter,
        gap: f64::NAN,
    })?;
    let mut order: Vec<usize> = (0..size).collect();
    // stable sort keeps the solver's order among equal eigenvalues
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let vals = order[..d].iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(size, d, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok((vals, vecs))
}

fn gram_path(centered: &DMatrix<f64>, scale: f64, d: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let gram = centered * centered.transpose() * scale;
    let (vals, vecs) = sorted_eigen(gram, d)?;
    let top = vals.first().copied().unwrap_or(0.0).max(0.0);
    let mut out_vals = Vec::with_capacity(d);
    let mut dirs = Vec::with_capacity(d);
    for (k, &lambda) in vals.iter().enumerate() {
        if lambda > RANK_TOL * top && lambda > 0.0 {
            // v = Xcᵀ u / sqrt((n-1) λ)
            let v = centered.transpose() * vecs.column(k);
            let norm = (lambda / scale).sqrt();
            dirs.push(v.iter().map(|x| x / norm).collect());
            out_vals.push(lambda);
        } else {
            // null-space direction, filled in by `orthonormalize`
            dirs.push(Vec::new());
            out_vals.push(0.0);
        }
    }
    Ok((out_vals, dirs))
}

/// Modified Gram–Schmidt over the rows; empty rows are completed from the
/// standard basis so the result always has orthonormal rows.
fn orthonormalize(rows: &mut [Vec<f64>], dim: usize) {
    let mut next_basis = 0;
    for k in 0..rows.len() {
        let mut candidate = if rows[k].is_empty() { None } else { Some(rows[k].clone()) };
        loop {
            let mut v = match candidate.take() {
                Some(v) => v,
                None => {
                    let mut e = vec![0.0; dim];
                    e[next_basis] = 1.0;
                    next_basis += 1;
                    e
                }
            };
            for _ in 0..2 {
                for prev in rows[..k].iter() {
                    let p = dot(prev, &v);
                    v.iter_mut().zip(prev).for_each(|(x, q)| *x -= p * q);
                }
            }
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-8 {
                v.iter_mut().for_each(|x| *x /= norm);
                rows[k] = v;
                break;
            }
        }
    }
}

/// Flip so the largest-magnitude entry (first on ties) is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

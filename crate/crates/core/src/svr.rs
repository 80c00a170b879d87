//! RBF kernel and a ν-support vector regression trainer.
//!
//! The trainer solves the ν-SVR dual
//!
//! ```text
//! max  −½ βᵀKβ + βᵀz
//! s.t. Σ β_i = 0,  β_i = α_i − α'_i,  0 ≤ α_i, α'_i ≤ λ/S,  Σ (α_i + α'_i) ≤ λν
//! ```
//!
//! with a two-coordinate (SMO style) working-set method over the `2S` lifted
//! variables `(α, α')`. Each step moves a pair from the same half, which keeps
//! both `Σα` and `Σα'` fixed; starting from `Σα = Σα' = λν/2` this preserves
//! `Σβ = 0` and the ν budget. For `ν ≤ 1` the equality form reaches every β
//! that the inequality form admits, so the optima coincide.
//!
//! Pairs are chosen by maximal KKT violation for the first index and largest
//! second-order gain for the second; ties go to the lowest index. The bias and
//! tube width are recovered from the free variables of each half.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ExemError, Result};
use crate::numeric::{dot, squared_dist_unchecked, Matrix};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// Bandwidth in `k(a, b) = exp(−γ‖a − b‖²)`.
    pub gamma: f64,
}

impl KernelParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(ExemError::domain(format!("RBF gamma must be finite and positive, got {gamma}")));
        }
        Ok(KernelParams { gamma })
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        (-self.gamma * squared_dist_unchecked(a, b)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrHyperParams {
    /// Regularization weight on the slack and tube terms (the usual `C`).
    pub lambda: f64,
    pub nu: f64,
    pub kernel: KernelParams,
}

impl SvrHyperParams {
    pub fn new(lambda: f64, nu: f64, gamma: f64) -> Result<Self> {
        let h = SvrHyperParams {
            lambda,
            nu,
            kernel: KernelParams::new(gamma)?,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(ExemError::domain(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(ExemError::domain(format!("nu must lie in (0, 1], got {}", self.nu)));
        }
        KernelParams::new(self.kernel.gamma).map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once the maximal KKT violation falls below this.
    pub tol: f64,
    /// Cap on pair updates.
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-3,
            max_iter: 10_000_000,
        }
    }
}

impl SolverOptions {
    /// Tight tolerance used by test fixtures.
    pub fn precise() -> Self {
        SolverOptions {
            tol: 1e-6,
            ..Default::default()
        }
    }
}

/// One trained regressor. `train_points` is shared between all regressors of
/// an exemplar predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct SvrModel {
    pub train_points: Arc<Matrix>,
    /// `α − α'` per training point.
    pub beta: Vec<f64>,
    pub bias: f64,
    pub epsilon: f64,
    pub kernel: KernelParams,
    /// Pair updates performed by the solver.
    pub iterations: usize,
}

impl SvrModel {
    pub fn predict(&self, a: &[f64]) -> Result<f64> {
        if a.len() != self.train_points.cols() {
            return Err(ExemError::dim("svr predict", self.train_points.cols(), a.len()));
        }
        Ok(self.predict_unchecked(a))
    }

    pub(crate) fn predict_unchecked(&self, a: &[f64]) -> f64 {
        let mut s = 0.0;
        for (row, b) in self.train_points.row_iter().zip(&self.beta) {
            if *b != 0.0 {
                s += b * self.kernel.eval_unchecked(row, a);
            }
        }
        s + self.bias
    }

    /// Prediction from a precomputed kernel column `k_c = k(a_c, a)`.
    pub(crate) fn predict_from_kernel(&self, kcol: &[f64]) -> f64 {
        dot(&self.beta, kcol) + self.bias
    }

    pub fn support_count(&self) -> usize {
        self.beta.iter().filter(|b| **b != 0.0).count()
    }
}

pub fn rbf_kernel(a: &[f64], b: &[f64], p: &KernelParams) -> Result<f64> {
    if a.len() != b.len() {
        return Err(ExemError::dim("rbf_kernel", a.len(), b.len()));
    }
    Ok(p.eval_unchecked(a, b))
}

pub fn gram_matrix(points: &Matrix, p: &KernelParams) -> Result<Matrix> {
    let s = points.rows();
    if s == 0 {
        return Err(ExemError::domain("gram_matrix needs at least one point"));
    }
    let mut g = vec![0.0; s * s];
    for i in 0..s {
        g[i * s + i] = 1.0;
        for j in 0..i {
            let v = p.eval_unchecked(points.row(i), points.row(j));
            g[i * s + j] = v;
            g[j * s + i] = v;
        }
    }
    Ok(Matrix::from_vec_unchecked(s, s, g))
}

/// `−½ βᵀKβ + βᵀz` for the model's coefficients on the given problem.
pub fn dual_objective(model: &SvrModel, points: &Matrix, targets: &[f64]) -> Result<f64> {
    if points.rows() != model.beta.len() {
        return Err(ExemError::dim("dual_objective points", model.beta.len(), points.rows()));
    }
    if targets.len() != model.beta.len() {
        return Err(ExemError::dim("dual_objective targets", model.beta.len(), targets.len()));
    }
    let gram = gram_matrix(points, &model.kernel)?;
    Ok(dual_value(&gram, &model.beta, targets))
}

pub(crate) fn dual_value(gram: &Matrix, beta: &[f64], targets: &[f64]) -> f64 {
    let s = beta.len();
    let mut quad = 0.0;
    for i in 0..s {
        if beta[i] != 0.0 {
            quad += beta[i] * dot(gram.row(i), beta);
        }
    }
    -0.5 * quad + dot(beta, targets)
}

pub fn train_nu_svr(
    points: &Matrix,
    targets: &[f64],
    hyper: &SvrHyperParams,
    opts: &SolverOptions,
) -> Result<SvrModel> {
    hyper.validate()?;
    let gram = gram_matrix(points, &hyper.kernel)?;
    train_with_gram(Arc::new(points.clone()), &gram, targets, hyper, opts)
}

/// Trains against a precomputed Gram matrix of `points` under `hyper.kernel`.
pub(crate) fn train_with_gram(
    points: Arc<Matrix>,
    gram: &Matrix,
    targets: &[f64],
    hyper: &SvrHyperParams,
    opts: &SolverOptions,
) -> Result<SvrModel> {
    let s = points.rows();
    if s < 2 {
        return Err(ExemError::domain(format!("nu-SVR needs at least 2 training points, got {s}")));
    }
    if targets.len() != s {
        return Err(ExemError::dim("nu-SVR targets", s, targets.len()));
    }
    if let Some(i) = targets.iter().position(|t| !t.is_finite()) {
        return Err(ExemError::NonFinite { index: i });
    }
    debug_assert_eq!(gram.rows(), s);

    let mut solver = NuSolver::new(gram, targets, hyper);
    let iterations = solver.run(opts)?;
    let (bias, epsilon) = solver.offsets();
    let beta = solver.beta();

    Ok(SvrModel {
        train_points: points,
        beta,
        bias,
        epsilon,
        kernel: hyper.kernel,
        iterations,
    })
}

/// Lifted problem: `min ½ xᵀQx + pᵀx` over `x = (α, α') ∈ [0, C]^{2S}`,
/// with `Q = [[K, −K], [−K, K]]`, `p = (−z, z)`, sign `y = (+1…, −1…)`.
struct NuSolver<'a> {
    gram: &'a Matrix,
    s: usize,
    upper: f64,
    x: Vec<f64>,
    grad: Vec<f64>,
}

impl<'a> NuSolver<'a> {
    fn new(gram: &'a Matrix, targets: &[f64], hyper: &SvrHyperParams) -> Self {
        let s = targets.len();
        let upper = hyper.lambda / s as f64;
        let mut x = vec![0.0; 2 * s];
        let mut budget = hyper.lambda * hyper.nu / 2.0;
        for i in 0..s {
            let v = budget.min(upper);
            x[i] = v;
            x[i + s] = v;
            budget -= v;
        }
        // β = 0 at the start, so the gradient is just p
        let mut grad = vec![0.0; 2 * s];
        for i in 0..s {
            grad[i] = -targets[i];
            grad[i + s] = targets[i];
        }
        NuSolver {
            gram,
            s,
            upper,
            x,
            grad,
        }
    }

    #[inline]
    fn positive(&self, t: usize) -> bool {
        t < self.s
    }

    #[inline]
    fn at_upper(&self, t: usize) -> bool {
        self.x[t] >= self.upper
    }

    #[inline]
    fn at_lower(&self, t: usize) -> bool {
        self.x[t] <= 0.0
    }

    /// `Q[t][u]`
    #[inline]
    fn q(&self, t: usize, u: usize) -> f64 {
        let k = self.gram.get(t % self.s, u % self.s);
        if self.positive(t) == self.positive(u) {
            k
        } else {
            -k
        }
    }

    /// Returns `Some((i, j))` for the next pair, or `None` once the maximal
    /// violation is below `tol`. Also reports the current violation.
    fn select_pair(&self, tol: f64) -> (Option<(usize, usize)>, f64) {
        let n = 2 * self.s;
        // first index per half: maximal −y_t G_t over the "up" set
        let mut gmax_p = f64::NEG_INFINITY;
        let mut gmax_p_idx = None;
        let mut gmax_n = f64::NEG_INFINITY;
        let mut gmax_n_idx = None;
        for t in 0..n {
            if self.positive(t) {
                if !self.at_upper(t) && -self.grad[t] > gmax_p {
                    gmax_p = -self.grad[t];
                    gmax_p_idx = Some(t);
                }
            } else if !self.at_lower(t) && self.grad[t] > gmax_n {
                gmax_n = self.grad[t];
                gmax_n_idx = Some(t);
            }
        }

        let mut gmax_p2 = f64::NEG_INFINITY;
        let mut gmax_n2 = f64::NEG_INFINITY;
        let mut best = None;
        let mut best_obj = f64::INFINITY;
        for j in 0..n {
            if self.positive(j) {
                if self.at_lower(j) {
                    continue;
                }
                let gj = self.grad[j];
                if gj > gmax_p2 {
                    gmax_p2 = gj;
                }
                if let Some(ip) = gmax_p_idx {
                    let diff = gmax_p + gj;
                    if diff > 0.0 {
                        let quad = self.q(ip, ip) + self.q(j, j) - 2.0 * self.q(ip, j);
                        let obj = -diff * diff / if quad > 0.0 { quad } else { TAU };
                        if obj < best_obj {
                            best_obj = obj;
                            best = Some((ip, j));
                        }
                    }
                }
            } else {
                if self.at_upper(j) {
                    continue;
                }
                let gj = self.grad[j];
                if -gj > gmax_n2 {
                    gmax_n2 = -gj;
                }
                if let Some(in_) = gmax_n_idx {
                    let diff = gmax_n - gj;
                    if diff > 0.0 {
                        let quad = self.q(in_, in_) + self.q(j, j) - 2.0 * self.q(in_, j);
                        let obj = -diff * diff / if quad > 0.0 { quad } else { TAU };
                        if obj < best_obj {
                            best_obj = obj;
                            best = Some((in_, j));
                        }
                    }
                }
            }
        }

        let gap = (gmax_p + gmax_p2).max(gmax_n + gmax_n2);
        if gap < tol || best.is_none() {
            (None, gap.max(0.0))
        } else {
            (best, gap)
        }
    }

    /// Analytic update of `x_i, x_j` (same half) keeping `x_i + x_j` fixed.
    fn update_pair(&mut self, i: usize, j: usize) {
        let c = self.upper;
        let (old_i, old_j) = (self.x[i], self.x[j]);
        let quad = {
            let q = self.q(i, i) + self.q(j, j) - 2.0 * self.q(i, j);
            if q > 0.0 {
                q
            } else {
                TAU
            }
        };
        let delta = (self.grad[i] - self.grad[j]) / quad;
        let sum = old_i + old_j;
        let mut ai = old_i - delta;
        let mut aj = old_j + delta;
        if sum > c {
            if ai > c {
                ai = c;
                aj = sum - c;
            }
        } else if aj < 0.0 {
            aj = 0.0;
            ai = sum;
        }
        if sum > c {
            if aj > c {
                aj = c;
                ai = sum - c;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = sum;
        }
        self.x[i] = ai;
        self.x[j] = aj;

        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..2 * self.s {
            self.grad[t] += self.q(i, t) * di + self.q(j, t) * dj;
        }
    }

    fn run(&mut self, opts: &SolverOptions) -> Result<usize> {
        let mut iter = 0;
        loop {
            let (pair, gap) = self.select_pair(opts.tol);
            let Some((i, j)) = pair else {
                return Ok(iter);
            };
            if iter >= opts.max_iter {
                return Err(ExemError::NotConverged {
                    what: "nu-SVR solver",
                    iterations: iter,
                    gap,
                });
            }
            self.update_pair(i, j);
            iter += 1;
        }
    }

    fn beta(&self) -> Vec<f64> {
        (0..self.s).map(|i| self.x[i] - self.x[i + self.s]).collect()
    }

    /// `(bias, epsilon)` from the free variables of each half.
    fn offsets(&self) -> (f64, f64) {
        let half = |range: std::ops::Range<usize>| {
            let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut sum, mut free) = (0.0, 0usize);
            for t in range {
                let g = self.grad[t];
                if self.at_upper(t) {
                    lb = lb.max(g);
                } else if self.at_lower(t) {
                    ub = ub.min(g);
                } else {
                    free += 1;
                    sum += g;
                }
            }
            if free > 0 {
                sum / free as f64
            } else {
                (ub + lb) / 2.0
            }
        };
        let r_pos = half(0..self.s);
        let r_neg = half(self.s..2 * self.s);
        let rho = (r_pos - r_neg) / 2.0;
        let r = (r_pos + r_neg) / 2.0;
        (-rho, (-r).max(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line_points(s: usize) -> Matrix {
        Matrix::new(s, 1, (0..s).map(|i| i as f64).collect()).unwrap()
    }

    #[test]
    fn kernel_closed_forms() {
        let p = KernelParams::new(1.0).unwrap();
        assert_eq!(rbf_kernel(&[0.3, -2.0], &[0.3, -2.0], &p).unwrap(), 1.0);
        let v = rbf_kernel(&[0.0, 0.0], &[0.6, 0.8], &p).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);
        assert!(rbf_kernel(&[0.0], &[0.0, 1.0], &p).is_err());
        assert!(KernelParams::new(0.0).is_err());
        assert!(KernelParams::new(f64::NAN).is_err());
    }

    #[test]
    fn kernel_is_composition_of_distance_and_exp() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..7).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = KernelParams::new(0.7).unwrap();
        let d = crate::numeric::euclidean_dist(&a, &b).unwrap();
        assert!((rbf_kernel(&a, &b, &p).unwrap() - (-0.7 * d * d).exp()).abs() < 1e-14);
    }

    #[test]
    fn gram_small_cases() {
        let p = KernelParams::new(2.0).unwrap();
        let one = Matrix::from_rows(&[[0.5, 0.5]]).unwrap();
        assert_eq!(gram_matrix(&one, &p).unwrap().as_slice(), &[1.0]);
        let two = Matrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap();
        assert_eq!(gram_matrix(&two, &p).unwrap().as_slice(), &[1.0; 4]);
    }

    #[test]
    fn gram_is_positive_semidefinite() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let data: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
        let pts = Matrix::new(10, 3, data).unwrap();
        let g = gram_matrix(&pts, &KernelParams::new(1.5).unwrap()).unwrap();
        let mut m = nalgebra::DMatrix::from_fn(10, 10, |i, j| g.get(i, j));
        for i in 0..10 {
            assert_eq!(g.get(i, i), 1.0);
            for j in 0..10 {
                assert_eq!(g.get(i, j), g.get(j, i));
            }
            m[(i, i)] += 1e-10;
        }
        assert!(m.cholesky().is_some());
    }

    #[test]
    fn constant_targets_give_zero_beta() {
        let pts = line_points(5);
        for (lambda, nu) in [(1.0, 0.5), (10.0, 1.0), (0.3, 0.1)] {
            let hyper = SvrHyperParams::new(lambda, nu, 0.5).unwrap();
            let m = train_nu_svr(&pts, &[2.5; 5], &hyper, &SolverOptions::precise()).unwrap();
            assert!(m.beta.iter().all(|b| *b == 0.0));
            assert_eq!(m.bias, 2.5);
            assert_eq!(m.predict(&[17.0]).unwrap(), 2.5);
        }
    }

    #[test]
    fn nu_one_makes_every_point_a_support_vector() {
        let pts = line_points(6);
        let targets = [0.0, 1.3, -0.4, 2.0, 0.7, -1.1];
        let hyper = SvrHyperParams::new(10.0, 1.0, 0.5).unwrap();
        let m = train_nu_svr(&pts, &targets, &hyper, &SolverOptions::precise()).unwrap();
        assert!(m.beta.iter().all(|b| b.abs() > 0.0), "{:?}", m.beta);
    }

    #[test]
    fn dual_objective_hand_cases() {
        let pts = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let kernel = KernelParams::new(1.0).unwrap();
        let mut model = SvrModel {
            train_points: Arc::new(pts.clone()),
            beta: vec![0.0, 0.0],
            bias: 0.0,
            epsilon: 0.0,
            kernel,
            iterations: 0,
        };
        assert_eq!(dual_objective(&model, &pts, &[1.0, 2.0]).unwrap(), 0.0);
        // β = (1, −1), K = [[1, e⁻¹], [e⁻¹, 1]]: βᵀKβ = 2 − 2e⁻¹, βᵀz = −1
        model.beta = vec![1.0, -1.0];
        let e = (-1.0f64).exp();
        let want = -0.5 * (2.0 - 2.0 * e) - 1.0;
        assert!((dual_objective(&model, &pts, &[1.0, 2.0]).unwrap() - want).abs() < 1e-15);
        assert!(dual_objective(&model, &pts, &[1.0]).is_err());
    }

    #[test]
    fn dual_objective_matches_naive_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = 7;
        let pts = Matrix::new(s, 2, (0..2 * s).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let targets: Vec<f64> = (0..s).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut beta: Vec<f64> = (0..s).map(|_| rng.random_range(-0.2..0.2)).collect();
        let mean = beta.iter().sum::<f64>() / s as f64;
        beta.iter_mut().for_each(|b| *b -= mean);
        let kernel = KernelParams::new(0.9).unwrap();
        let model = SvrModel {
            train_points: Arc::new(pts.clone()),
            beta: beta.clone(),
            bias: 0.0,
            epsilon: 0.0,
            kernel,
            iterations: 0,
        };
        let mut want = 0.0;
        for i in 0..s {
            want += beta[i] * targets[i];
            for j in 0..s {
                let k = (-0.9 * squared_dist_unchecked(pts.row(i), pts.row(j))).exp();
                want -= 0.5 * beta[i] * beta[j] * k;
            }
        }
        assert!((dual_objective(&model, &pts, &targets).unwrap() - want).abs() < 1e-13);
    }

    #[test]
    fn predict_matches_naive_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts = Matrix::new(5, 3, (0..15).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let beta: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let kernel = KernelParams::new(1.2).unwrap();
        let model = SvrModel {
            train_points: Arc::new(pts.clone()),
            beta: beta.clone(),
            bias: 0.25,
            epsilon: 0.0,
            kernel,
            iterations: 0,
        };
        let a = [0.1, -0.3, 0.8];
        let mut want = 0.25;
        for c in 0..5 {
            want += beta[c] * (-1.2 * squared_dist_unchecked(pts.row(c), &a)).exp();
        }
        assert!((model.predict(&a).unwrap() - want).abs() < 1e-14);
        assert!(model.predict(&[0.0]).is_err());

        let flat = SvrModel {
            beta: vec![0.0; 5],
            bias: -3.0,
            ..model
        };
        assert_eq!(flat.predict(&a).unwrap(), -3.0);
    }

    #[test]
    fn training_residuals_respect_tube_and_slack() {
        // every point inside the tube has α = α' = 0 or is free; points outside are at the bound
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = 9;
        let pts = Matrix::new(s, 2, (0..2 * s).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let targets: Vec<f64> = (0..s).map(|i| pts.get(i, 0).sin() + 0.1 * rng.random_range(-1.0..1.0)).collect();
        let hyper = SvrHyperParams::new(4.0, 0.4, 1.0).unwrap();
        let m = train_nu_svr(&pts, &targets, &hyper, &SolverOptions::precise()).unwrap();
        let c = hyper.lambda / s as f64;
        for i in 0..s {
            let r = targets[i] - m.predict(pts.row(i)).unwrap();
            let slack = (r.abs() - m.epsilon).max(0.0);
            if slack > 1e-5 {
                assert!((m.beta[i].abs() - c).abs() < 1e-9, "point {i} outside tube but not at bound");
            }
            if m.beta[i] == 0.0 {
                assert!(r.abs() <= m.epsilon + 1e-5);
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let hyper = SvrHyperParams::new(1.0, 0.5, 1.0).unwrap();
        let one = line_points(1);
        assert!(train_nu_svr(&one, &[1.0], &hyper, &SolverOptions::default()).is_err());
        let pts = line_points(3);
        assert!(train_nu_svr(&pts, &[1.0, 2.0], &hyper, &SolverOptions::default()).is_err());
        assert!(train_nu_svr(&pts, &[1.0, f64::NAN, 0.0], &hyper, &SolverOptions::default()).is_err());
        assert!(SvrHyperParams::new(1.0, 0.0, 1.0).is_err());
        assert!(SvrHyperParams::new(1.0, 1.5, 1.0).is_err());
        assert!(SvrHyperParams::new(-1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn iteration_cap_reports_gap() {
        let pts = line_points(6);
        let targets = [0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let hyper = SvrHyperParams::new(10.0, 0.5, 0.5).unwrap();
        let opts = SolverOptions { tol: 1e-9, max_iter: 1 };
        match train_nu_svr(&pts, &targets, &hyper, &opts) {
            Err(ExemError::NotConverged { iterations, gap, .. }) => {
                assert_eq!(iterations, 1);
                assert!(gap > 1e-9);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn two_point_problem_is_solved() {
        let pts = line_points(2);
        let hyper = SvrHyperParams::new(10.0, 0.5, 0.5).unwrap();
        let m = train_nu_svr(&pts, &[0.0, 1.0], &hyper, &SolverOptions::precise()).unwrap();
        assert!((m.beta[0] + m.beta[1]).abs() < 1e-12);
        assert!(m.beta[1] > 0.0);
        // symmetric problem: prediction at the midpoint of the targets
        let mid = m.predict(&[0.5]).unwrap();
        assert!((mid - 0.5).abs() < 1e-9, "{mid}");
    }

    #[test]
    fn training_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts = Matrix::new(10, 3, (0..30).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let targets: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let hyper = SvrHyperParams::new(2.0, 0.6, 0.8).unwrap();
        let a = train_nu_svr(&pts, &targets, &hyper, &SolverOptions::default()).unwrap();
        let b = train_nu_svr(&pts, &targets, &hyper, &SolverOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}

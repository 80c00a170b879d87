mod common;

use common::{dual_oracle, project_capped_simplex, random_svr_problem, rng, SvrProblem};
use exem::svr::{dual_objective, train_nu_svr, SolverOptions, SvrHyperParams, SvrModel};

fn train(p: &SvrProblem, opts: &SolverOptions) -> SvrModel {
    let hyper = SvrHyperParams::new(p.lambda, p.nu, p.gamma).unwrap();
    train_nu_svr(&p.points, &p.targets, &hyper, opts).unwrap()
}

#[test]
fn capped_simplex_projection_is_feasible_and_idempotent() {
    let mut r = rng(1);
    for _ in 0..50 {
        let p = random_svr_problem(&mut r, 12);
        let s = p.targets.len();
        let cap = p.lambda / s as f64;
        let total = p.lambda * p.nu / 2.0;
        let x = project_capped_simplex(&p.targets, cap, total);
        assert!(x.iter().all(|v| (0.0..=cap).contains(v)));
        assert!((x.iter().sum::<f64>() - total).abs() < 1e-9 * (1.0 + total));
        let again = project_capped_simplex(&x, cap, total);
        for (a, b) in x.iter().zip(&again) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn dual_objective_matches_projected_gradient_oracle() {
    let mut r = rng(7);
    for trial in 0..24 {
        let p = random_svr_problem(&mut r, 12);
        let model = train(&p, &SolverOptions::precise());
        let ours = dual_objective(&model, &p.points, &p.targets).unwrap();
        let (_, oracle) = dual_oracle(&p);
        let rel = (ours - oracle).abs() / oracle.abs().max(1.0);
        assert!(rel <= 1e-6, "trial {trial}: solver {ours} oracle {oracle} rel {rel:e}");
    }
}

#[test]
fn coefficients_are_feasible() {
    let mut r = rng(11);
    for _ in 0..200 {
        let p = random_svr_problem(&mut r, 30);
        let m = train(&p, &SolverOptions::default());
        let s = p.targets.len() as f64;
        let cap = p.lambda / s;
        assert!(m.beta.iter().sum::<f64>().abs() <= 1e-8);
        assert!(m.beta.iter().all(|b| b.abs() <= cap * (1.0 + 1e-12)));
        assert!(m.beta.iter().map(|b| b.abs()).sum::<f64>() <= p.lambda * p.nu * (1.0 + 1e-9));
        assert!(m.epsilon >= 0.0);
    }
}

/// Points strictly outside the tube and points with nonzero coefficient.
pub fn margin_counts(m: &SvrModel, p: &SvrProblem) -> (usize, usize) {
    let scale = 1e-6 * (1.0 + p.targets.iter().map(|t| t.abs()).fold(0.0, f64::max));
    let errors = p
        .points
        .row_iter()
        .zip(&p.targets)
        .filter(|(a, z)| (*z - m.predict(a).unwrap()).abs() > m.epsilon + scale)
        .count();
    (errors, m.support_count())
}

#[test]
fn nu_bounds_margin_errors_and_support_vectors() {
    let mut r = rng(3);
    for trial in 0..150 {
        let p = random_svr_problem(&mut r, 40);
        let m = train(&p, &SolverOptions::precise());
        let s = p.targets.len() as f64;
        let (errors, svs) = margin_counts(&m, &p);
        assert!(
            (errors as f64 - 1.0) / s <= p.nu && p.nu <= (svs as f64 + 1.0) / s,
            "trial {trial}: errors {errors} svs {svs} S {s} nu {}",
            p.nu
        );
    }
}

#[test]
fn dual_optimum_grows_with_lambda() {
    let mut r = rng(5);
    for _ in 0..30 {
        let mut p = random_svr_problem(&mut r, 15);
        let mut prev = f64::NEG_INFINITY;
        for e in -2..6 {
            p.lambda = 2f64.powi(e);
            let m = train(&p, &SolverOptions::precise());
            let v = dual_objective(&m, &p.points, &p.targets).unwrap();
            assert!(v >= prev - 1e-9 * (1.0 + v.abs()), "λ = {}: {v} < {prev}", p.lambda);
            prev = v;
        }
    }
}

#[test]
fn default_tolerance_is_close_to_precise() {
    let mut r = rng(9);
    for _ in 0..20 {
        let p = random_svr_problem(&mut r, 12);
        let a = dual_objective(&train(&p, &SolverOptions::default()), &p.points, &p.targets).unwrap();
        let b = dual_objective(&train(&p, &SolverOptions::precise()), &p.points, &p.targets).unwrap();
        assert!(b >= a - 1e-12 * (1.0 + a.abs()));
        assert!((a - b).abs() <= 1e-2 * (1.0 + b.abs()));
    }
}

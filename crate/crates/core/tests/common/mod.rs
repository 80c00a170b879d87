#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use exem::numeric::Matrix;
use exem::svr::{gram_matrix, KernelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Matrix {
    Matrix::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

/// A random regression problem: points, targets, λ, ν, γ.
pub struct SvrProblem {
    pub points: Matrix,
    pub targets: Vec<f64>,
    pub lambda: f64,
    pub nu: f64,
    pub gamma: f64,
}

pub fn random_svr_problem(rng: &mut ChaCha8Rng, max_s: usize) -> SvrProblem {
    let s = rng.random_range(2..=max_s);
    let dim = rng.random_range(1..=4);
    let points = random_matrix(rng, s, dim, 1.0);
    let targets = (0..s).map(|_| rng.random_range(-2.0..2.0)).collect();
    SvrProblem {
        points,
        targets,
        lambda: 2f64.powf(rng.random_range(-2.0..5.0)),
        nu: rng.random_range(0.05..=1.0),
        gamma: 2f64.powf(rng.random_range(-2.0..2.0)),
    }
}

/// Euclidean projection onto `{x : 0 ≤ x ≤ cap, Σx = total}` by bisection on
/// the shift `t` in `clip(y − t, 0, cap)`.
pub fn project_capped_simplex(y: &[f64], cap: f64, total: f64) -> Vec<f64> {
    let sum_at = |t: f64| y.iter().map(|v| (v - t).clamp(0.0, cap)).sum::<f64>();
    let mut lo = y.iter().cloned().fold(f64::INFINITY, f64::min) - cap - 1.0;
    let mut hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if sum_at(mid) > total {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    y.iter().map(|v| (v - t).clamp(0.0, cap)).collect()
}

/// Maximizes `−½ βᵀKβ + βᵀz` with `β = α − α'`, each of `α`, `α'` in the
/// capped simplex `{0 ≤ · ≤ λ/S, Σ = λν/2}`, by accelerated projected
/// gradient with adaptive restart. Returns `(β, objective)`.
pub fn dual_oracle(p: &SvrProblem) -> (Vec<f64>, f64) {
    let s = p.targets.len();
    let k = gram_matrix(&p.points, &KernelParams::new(p.gamma).unwrap()).unwrap();
    let cap = p.lambda / s as f64;
    let total = p.lambda * p.nu / 2.0;
    let obj = |beta: &[f64]| {
        let mut q = 0.0;
        for i in 0..s {
            for j in 0..s {
                q += beta[i] * k.get(i, j) * beta[j];
            }
        }
        -0.5 * q + beta.iter().zip(&p.targets).map(|(b, z)| b * z).sum::<f64>()
    };
    // gradient of the minimized objective ½βᵀKβ − βᵀz with respect to α and α'
    let grad = |a: &[f64], b: &[f64]| {
        let beta: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let kb: Vec<f64> = (0..s).map(|i| (0..s).map(|j| k.get(i, j) * beta[j]).sum()).collect();
        let ga: Vec<f64> = (0..s).map(|i| kb[i] - p.targets[i]).collect();
        let gb: Vec<f64> = ga.iter().map(|g| -g).collect();
        (ga, gb)
    };
    // Lipschitz constant of the lifted gradient: 2·λmax(K) ≤ 2·trace(K) = 2S
    let lip = 2.0 * s as f64;
    let step = 1.0 / lip;
    let start = project_capped_simplex(&vec![0.0; s], cap, total);
    let (mut a, mut b) = (start.clone(), start);
    let (mut ya, mut yb) = (a.clone(), b.clone());
    let mut t = 1.0f64;
    let mut best = f64::NEG_INFINITY;
    let mut best_beta = vec![0.0; s];
    let mut prev_obj = f64::NEG_INFINITY;
    for _ in 0..200_000 {
        let (ga, gb) = grad(&ya, &yb);
        let na = project_capped_simplex(&ya.iter().zip(&ga).map(|(y, g)| y - step * g).collect::<Vec<_>>(), cap, total);
        let nb = project_capped_simplex(&yb.iter().zip(&gb).map(|(y, g)| y - step * g).collect::<Vec<_>>(), cap, total);
        let beta: Vec<f64> = na.iter().zip(&nb).map(|(x, y)| x - y).collect();
        let value = obj(&beta);
        if value > best {
            best = value;
            best_beta = beta;
        }
        if value < prev_obj {
            // restart momentum
            t = 1.0;
            ya = na.clone();
            yb = nb.clone();
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let m = (t - 1.0) / t_next;
            ya = na.iter().zip(&a).map(|(n, o)| n + m * (n - o)).collect();
            yb = nb.iter().zip(&b).map(|(n, o)| n + m * (n - o)).collect();
            t = t_next;
        }
        prev_obj = value;
        let moved = na.iter().zip(&a).chain(nb.iter().zip(&b)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        a = na;
        b = nb;
        if moved < 1e-15 * (1.0 + cap) {
            break;
        }
    }
    (best_beta, best)
}

/// Undirected hop distances by repeated edge relaxation.
pub fn relaxation_distances(n: usize, edges: &[(u32, u32)], sources: &[u32]) -> Vec<Option<u32>> {
    let mut dist: Vec<Option<u32>> = vec![None; n];
    for &s in sources {
        dist[s as usize] = Some(0);
    }
    loop {
        let mut changed = false;
        for &(u, v) in edges {
            for (x, y) in [(u, v), (v, u)] {
                if let Some(dx) = dist[x as usize] {
                    if dist[y as usize].is_none_or(|dy| dx + 1 < dy) {
                        dist[y as usize] = Some(dx + 1);
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return dist;
        }
    }
}

/// Plain queue BFS from several sources over undirected edges.
pub fn bfs_distances(n: usize, edges: &[(u32, u32)], sources: &[u32]) -> Vec<Option<u32>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u as usize].push(v);
        adj[v as usize].push(u);
    }
    let mut dist = vec![None; n];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s as usize].is_none() {
            dist[s as usize] = Some(0);
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        let d = dist[u as usize].unwrap();
        for &v in &adj[u as usize] {
            if dist[v as usize].is_none() {
                dist[v as usize] = Some(d + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Random tree (`dag = false`) or DAG with extra parent links, as
/// `(child, parent)` edges where parents always have smaller ids.
pub fn random_hierarchy(rng: &mut ChaCha8Rng, n: usize, dag: bool) -> Vec<(u32, u32)> {
    let mut edges = BTreeSet::new();
    for c in 1..n as u32 {
        edges.insert((c, rng.random_range(0..c)));
        if dag && c > 2 && rng.random_bool(0.3) {
            edges.insert((c, rng.random_range(0..c)));
        }
    }
    edges.into_iter().collect()
}

/// `|top-k ∩ truth list| / k`, with the truth list built from scratch.
pub fn brute_force_hp(
    n: usize,
    edges: &[(u32, u32)],
    candidates: &[u32],
    ranked: &[Vec<u32>],
    truth: &[u32],
    k: usize,
) -> f64 {
    let mut total = 0.0;
    for (r, &t) in ranked.iter().zip(truth) {
        let dist = relaxation_distances(n, edges, &[t]);
        let mut order: Vec<(u32, u32)> = candidates
            .iter()
            .map(|&c| (dist[c as usize].unwrap_or(u32::MAX), c))
            .collect();
        order.sort();
        let gt: BTreeSet<u32> = order.iter().take(k).map(|(_, c)| *c).collect();
        let top: BTreeSet<u32> = r.iter().take(k).copied().collect();
        total += top.intersection(&gt).count() as f64 / k as f64;
    }
    total / truth.len() as f64
}

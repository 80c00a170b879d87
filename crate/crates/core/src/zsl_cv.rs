//! Hyperparameter selection by simulated zero-shot splits of the seen classes.
//!
//! Folds partition classes, not samples: each fold holds out a set of seen
//! classes, fits the full pipeline (PCA included) on the remaining ones, and
//! scores classification of the held-out samples among the held-out labels.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::DistanceMode;
use crate::error::{ExemError, Result};
use crate::eval::{flat_hit_at_k, per_class_accuracy};
use crate::exemplar::{normalize_semantics, ClassId, ClassTable};
use crate::pipeline::{fit, predict_unseen, PipelineConfig, ZslData, ZslModel};
use crate::svr::{SolverOptions, SvrHyperParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    PerClassAccuracy,
    FlatHit(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub n_folds: usize,
    pub lambdas: Vec<f64>,
    pub nus: Vec<f64>,
    pub gammas: Vec<f64>,
    /// PCA dimensionalities to try; clamped per fold to what the data allows.
    pub dims: Vec<usize>,
    pub mode: DistanceMode,
    pub objective: Objective,
    pub seed: u64,
    pub solver: SolverOptions,
}

impl CvConfig {
    /// Conventional grids: λ ∈ 2^-3..2^10, ν ∈ {0.25, 0.5, 0.75, 1}, γ from
    /// [`default_gamma_grid`].
    pub fn with_default_grids(semantics: &ClassTable, d: usize) -> Result<Self> {
        Ok(CvConfig {
            n_folds: 5,
            lambdas: (-3..=10).map(|e| 2f64.powi(e)).collect(),
            nus: vec![0.25, 0.5, 0.75, 1.0],
            gammas: default_gamma_grid(semantics)?,
            dims: vec![d],
            mode: DistanceMode::Plain,
            objective: Objective::PerClassAccuracy,
            seed: 0,
            solver: SolverOptions::default(),
        })
    }

    pub fn validate(&self, n_classes: usize) -> Result<()> {
        if self.n_folds < 2 {
            return Err(ExemError::domain("need at least 2 folds"));
        }
        if self.n_folds > n_classes {
            return Err(ExemError::domain(format!(
                "{} folds requested but only {n_classes} seen classes",
                self.n_folds
            )));
        }
        for (name, empty) in [
            ("lambda", self.lambdas.is_empty()),
            ("nu", self.nus.is_empty()),
            ("gamma", self.gammas.is_empty()),
            ("d", self.dims.is_empty()),
        ] {
            if empty {
                return Err(ExemError::domain(format!("{name} grid is empty")));
            }
        }
        for p in self.grid() {
            SvrHyperParams::new(p.lambda, p.nu, p.gamma)?;
            if p.d == 0 {
                return Err(ExemError::domain("PCA dimensionality must be at least 1"));
            }
        }
        if let Objective::FlatHit(0) = self.objective {
            return Err(ExemError::domain("flat hit objective needs k ≥ 1"));
        }
        Ok(())
    }

    /// Grid points in evaluation order (λ outermost, then ν, γ, d).
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &lambda in &self.lambdas {
            for &nu in &self.nus {
                for &gamma in &self.gammas {
                    for &d in &self.dims {
                        out.push(GridPoint { lambda, nu, gamma, d });
                    }
                }
            }
        }
        out
    }
}

/// `2^k / m` for `k = −5..=5`, where `m` is the median squared pairwise
/// distance between the unit-normalized semantic vectors.
pub fn default_gamma_grid(semantics: &ClassTable) -> Result<Vec<f64>> {
    let a = normalize_semantics(&semantics.values)?;
    let mut d2 = Vec::new();
    for i in 0..a.rows() {
        for j in 0..i {
            d2.push(crate::numeric::squared_dist_unchecked(a.row(i), a.row(j)));
        }
    }
    d2.sort_by(f64::total_cmp);
    let median = match d2.len() {
        0 => 1.0,
        n if n % 2 == 1 => d2[n / 2],
        n => 0.5 * (d2[n / 2 - 1] + d2[n / 2]),
    };
    let median = if median > 0.0 { median } else { 1.0 };
    Ok((-5..=5).map(|e| 2f64.powi(e) / median).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lambda: f64,
    pub nu: f64,
    pub gamma: f64,
    pub d: usize,
}

impl GridPoint {
    pub fn hyper(&self) -> Result<SvrHyperParams> {
        SvrHyperParams::new(self.lambda, self.nu, self.gamma)
    }
}

/// Shuffles `classes` with a seeded ChaCha8 generator and deals them into
/// `n_folds` sets whose sizes differ by at most one.
pub fn make_class_folds(classes: &[ClassId], n_folds: usize, seed: u64) -> Result<Vec<Vec<ClassId>>> {
    if n_folds == 0 || n_folds > classes.len() {
        return Err(ExemError::domain(format!(
            "cannot split {} classes into {n_folds} folds",
            classes.len()
        )));
    }
    let mut shuffled = classes.to_vec();
    shuffled.sort_unstable();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![Vec::new(); n_folds];
    for (i, c) in shuffled.into_iter().enumerate() {
        folds[i % n_folds].push(c);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

fn fold_pipeline_config(data: &ZslData<'_>, train: &[ClassId], point: &GridPoint, cfg: &CvConfig) -> Result<PipelineConfig> {
    let (x, _) = data.subset(train);
    let d = point.d.min(x.rows().saturating_sub(1)).min(x.cols()).max(1);
    Ok(PipelineConfig {
        d: Some(d),
        hyper: point.hyper()?,
        mode: cfg.mode,
        solver: cfg.solver,
    })
}

/// Pipeline fitted on the in-fold classes only.
pub fn fit_fold_model(data: &ZslData<'_>, train: &[ClassId], point: &GridPoint, cfg: &CvConfig) -> Result<ZslModel> {
    let pc = fold_pipeline_config(data, train, point, cfg)?;
    fit(data, train, &pc)
}

/// One simulated zero-shot trial.
pub fn evaluate_fold(
    data: &ZslData<'_>,
    train: &[ClassId],
    held_out: &[ClassId],
    point: &GridPoint,
    cfg: &CvConfig,
) -> Result<f64> {
    if let Some(c) = held_out.iter().find(|c| train.contains(c)) {
        return Err(ExemError::domain(format!("class {c} is both in-fold and held out")));
    }
    let model = fit_fold_model(data, train, point, cfg)?;
    let k = match cfg.objective {
        Objective::PerClassAccuracy => 1,
        Objective::FlatHit(k) => k,
    };
    let preds = predict_unseen(&model, data, held_out, cfg.mode, k)?;
    match cfg.objective {
        Objective::PerClassAccuracy => {
            let top1: Vec<ClassId> = preds.ranked.iter().map(|r| r[0]).collect();
            per_class_accuracy(&top1, &preds.truth)
        }
        Objective::FlatHit(k) => {
            let width = preds.ranked[0].len();
            flat_hit_at_k(&preds.ranked, &preds.truth, k.min(width))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub grid_index: usize,
    pub fold: usize,
    pub point: GridPoint,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best: GridPoint,
    pub best_index: usize,
    pub best_score: f64,
    /// Mean objective over folds, per grid point.
    pub mean_scores: Vec<f64>,
    /// One row per (grid point, fold), grid-major.
    pub table: Vec<CvRow>,
}

pub fn grid_search(data: &ZslData<'_>, seen: &[ClassId], cfg: &CvConfig) -> Result<CvResult> {
    cfg.validate(seen.len())?;
    let folds = make_class_folds(seen, cfg.n_folds, cfg.seed)?;
    let grid = cfg.grid();

    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..folds.len()).map(move |f| (g, f)))
        .collect();
    let table = jobs
        .par_iter()
        .map(|&(g, f)| {
            let held_out = &folds[f];
            let train: Vec<ClassId> = folds
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != f)
                .flat_map(|(_, fold)| fold.iter().copied())
                .collect();
            let objective = evaluate_fold(data, &train, held_out, &grid[g], cfg)?;
            Ok(CvRow {
                grid_index: g,
                fold: f,
                point: grid[g],
                objective,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n_folds = folds.len() as f64;
    let mean_scores: Vec<f64> = table
        .chunks(folds.len())
        .map(|rows| rows.iter().map(|r| r.objective).sum::<f64>() / n_folds)
        .collect();
    let mut best_index = 0;
    for (i, s) in mean_scores.iter().enumerate() {
        if *s > mean_scores[best_index] {
            best_index = i;
        }
    }
    Ok(CvResult {
        best: grid[best_index],
        best_index,
        best_score: mean_scores[best_index],
        mean_scores,
        table,
    })
}

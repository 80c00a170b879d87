//! Nearest-exemplar classification and exemplar-based similarity export.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{ExemError, Result};
use crate::exemplar::{ClassId, ExemplarPredictor, ExemplarTable};
use crate::numeric::{column_std, squared_dist_unchecked, weighted_squared_dist_unchecked, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceMode {
    /// Plain Euclidean distance (`1nn`).
    #[serde(rename = "1nn")]
    Plain,
    /// Euclidean distance with each dimension divided by the averaged
    /// intra-class standard deviation (`1nn-scaled`).
    #[serde(rename = "1nn-scaled")]
    Standardized,
}

impl std::str::FromStr for DistanceMode {
    type Err = ExemError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1nn" | "plain" => Ok(DistanceMode::Plain),
            "1nn-scaled" | "scaled" | "standardized" => Ok(DistanceMode::Standardized),
            other => Err(ExemError::domain(format!(
                "unknown distance mode {other:?} (expected 1nn or 1nn-scaled)"
            ))),
        }
    }
}

impl std::fmt::Display for DistanceMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DistanceMode::Plain => "1nn",
            DistanceMode::Standardized => "1nn-scaled",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnClassifier {
    exemplars: ExemplarTable,
    /// Reciprocal of sigma, present only in standardized mode.
    inv_sigma: Option<Vec<f64>>,
}

impl NnClassifier {
    pub fn plain(exemplars: ExemplarTable) -> Result<Self> {
        if exemplars.is_empty() {
            return Err(ExemError::domain("classifier needs at least one exemplar"));
        }
        Ok(NnClassifier {
            exemplars,
            inv_sigma: None,
        })
    }

    pub fn standardized(exemplars: ExemplarTable, sigma: &[f64]) -> Result<Self> {
        if exemplars.is_empty() {
            return Err(ExemError::domain("classifier needs at least one exemplar"));
        }
        if sigma.len() != exemplars.dim() {
            return Err(ExemError::dim("classifier sigma", exemplars.dim(), sigma.len()));
        }
        if let Some(i) = sigma.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(ExemError::domain(format!("sigma entry {i} must be positive, got {}", sigma[i])));
        }
        Ok(NnClassifier {
            exemplars,
            inv_sigma: Some(sigma.iter().map(|s| 1.0 / s).collect()),
        })
    }

    pub fn mode(&self) -> DistanceMode {
        if self.inv_sigma.is_some() {
            DistanceMode::Standardized
        } else {
            DistanceMode::Plain
        }
    }

    pub fn exemplars(&self) -> &ExemplarTable {
        &self.exemplars
    }

    pub fn num_classes(&self) -> usize {
        self.exemplars.len()
    }

    fn check_query(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.exemplars.dim() {
            return Err(ExemError::dim("classifier query", self.exemplars.dim(), z.len()));
        }
        Ok(())
    }

    /// Squared (possibly standardized) distance from `z` to every exemplar.
    fn distances(&self, z: &[f64]) -> Vec<f64> {
        self.exemplars
            .values
            .row_iter()
            .map(|e| match &self.inv_sigma {
                Some(w) => weighted_squared_dist_unchecked(z, e, w),
                None => squared_dist_unchecked(z, e),
            })
            .collect()
    }

    pub fn classify_1nn(&self, z: &[f64]) -> Result<ClassId> {
        self.check_query(z)?;
        let dist = self.distances(z);
        let ids = &self.exemplars.class_ids;
        let mut best = 0;
        for i in 1..dist.len() {
            if dist[i] < dist[best] || (dist[i] == dist[best] && ids[i] < ids[best]) {
                best = i;
            }
        }
        Ok(ids[best])
    }

    /// The `k` nearest classes, ascending by distance then by class id.
    pub fn classify_topk(&self, z: &[f64], k: usize) -> Result<Vec<ClassId>> {
        self.check_query(z)?;
        if k == 0 || k > self.num_classes() {
            return Err(ExemError::domain(format!(
                "k = {k} outside 1..={}",
                self.num_classes()
            )));
        }
        let dist = self.distances(z);
        let ids = &self.exemplars.class_ids;
        let mut order: Vec<usize> = (0..dist.len()).collect();
        let cmp = |a: &usize, b: &usize| dist[*a].total_cmp(&dist[*b]).then(ids[*a].cmp(&ids[*b]));
        if k < order.len() {
            order.select_nth_unstable_by(k - 1, cmp);
            order.truncate(k);
        }
        order.sort_by(cmp);
        Ok(order.into_iter().map(|i| ids[i]).collect())
    }

    /// Ranked predictions for every row of `z`.
    pub fn rank_all(&self, z: &Matrix, k: usize) -> Result<Vec<Vec<ClassId>>> {
        use rayon::prelude::*;
        z.row_iter()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|row| self.classify_topk(row, k))
            .collect()
    }
}

/// Unweighted mean over classes of the per-class (ddof = 0) standard
/// deviation of each dimension, clamped below by a floor of
/// `1e-6 ×` the mean of the non-zero entries (or `1e-6` if all are zero).
pub fn intra_class_std(z: &Matrix, labels: &[ClassId]) -> Result<Vec<f64>> {
    if z.rows() == 0 {
        return Err(ExemError::domain("intra_class_std of empty input"));
    }
    if labels.len() != z.rows() {
        return Err(ExemError::dim("intra_class_std labels", z.rows(), labels.len()));
    }
    let mut groups: BTreeMap<ClassId, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        groups.entry(c).or_default().push(i);
    }
    let mut sigma = vec![0.0; z.cols()];
    for rows in groups.values() {
        let sd = column_std(&z.select_rows(rows), 0)?;
        sigma.iter_mut().zip(&sd).for_each(|(acc, s)| *acc += s);
    }
    let n_classes = groups.len() as f64;
    sigma.iter_mut().for_each(|s| *s /= n_classes);

    let nonzero: Vec<f64> = sigma.iter().copied().filter(|s| *s > 0.0).collect();
    let reference = if nonzero.is_empty() {
        1.0
    } else {
        nonzero.iter().sum::<f64>() / nonzero.len() as f64
    };
    let floor = 1e-6 * reference;
    sigma.iter_mut().for_each(|s| *s = s.max(floor));
    Ok(sigma)
}

/// Row-stochastic similarity between target and base exemplars:
/// `S[c][r] ∝ exp(−scale · ‖t_c − b_r‖²)`.
pub fn exemplar_similarity(targets: &ExemplarTable, bases: &ExemplarTable, scale: f64) -> Result<Matrix> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(ExemError::domain(format!("similarity scale must be positive, got {scale}")));
    }
    if targets.dim() != bases.dim() {
        return Err(ExemError::dim("exemplar_similarity", targets.dim(), bases.dim()));
    }
    if bases.is_empty() {
        return Err(ExemError::domain("exemplar_similarity needs at least one base"));
    }
    let r = bases.len();
    let mut out = Vec::with_capacity(targets.len() * r);
    for t in targets.values.row_iter() {
        let logits: Vec<f64> = bases
            .values
            .row_iter()
            .map(|b| -scale * squared_dist_unchecked(t, b))
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        out.extend(exps.iter().map(|e| e / total));
    }
    Ok(Matrix::from_vec_unchecked(targets.len(), r, out))
}

/// Predicted exemplars as a plain matrix, for use as semantic
/// representations by another zero-shot method.
pub fn export_improved_semantics(p: &ExemplarPredictor, a: &Matrix) -> Result<Matrix> {
    p.predict_matrix(a)
}

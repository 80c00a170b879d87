//! Synthetic zero-shot datasets with known class centers.
//!
//! Semantic vectors are drawn uniformly on the unit sphere and mapped to
//! class centers by a fixed smooth function (a random linear map or a random
//! RBF network). Centers are rescaled so the mean pairwise distance between
//! them is 1, which makes `noise_sigma` directly comparable to the center
//! spacing. Each sample is its center plus Gaussian noise with per-dimension
//! standard deviation `noise_sigma / sqrt(D)` (times the optional anisotropy
//! factor), so that without anisotropy the expected noise norm is about
//! `noise_sigma`.
//!
//! All randomness comes from ChaCha8 (`rand_chacha`), seeded from
//! [`SynthSpec::seed`]. Per-class sample noise uses a separate ChaCha stream
//! per class, so output is independent of generation order.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ExemError, Result};
use crate::exemplar::{ClassId, ClassTable};
use crate::numeric::{dot, squared_dist_unchecked, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    Linear,
    RbfMixture,
}

impl std::str::FromStr for MapKind {
    type Err = ExemError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(MapKind::Linear),
            "rbf" | "rbf_mixture" | "rbf-mixture" => Ok(MapKind::RbfMixture),
            other => Err(ExemError::domain(format!("unknown map kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub n_seen: usize,
    pub samples_per_class: usize,
    pub feature_dim: usize,
    pub semantic_dim: usize,
    pub map_kind: MapKind,
    /// Bandwidth of the RBF network for [`MapKind::RbfMixture`].
    pub map_gamma: f64,
    /// Number of RBF units for [`MapKind::RbfMixture`].
    pub map_units: usize,
    pub noise_sigma: f64,
    /// Per-feature-dimension noise multipliers.
    pub anisotropy: Option<Vec<f64>>,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_classes: 25,
            n_seen: 20,
            samples_per_class: 40,
            feature_dim: 64,
            semantic_dim: 4,
            map_kind: MapKind::Linear,
            map_gamma: 2.0,
            map_units: 16,
            noise_sigma: 0.1,
            anisotropy: None,
            seed: 0,
        }
    }
}

/// `dim` multipliers spaced geometrically from 1 to `ratio`.
pub fn geometric_anisotropy(dim: usize, ratio: f64) -> Vec<f64> {
    if dim <= 1 {
        return vec![1.0; dim];
    }
    (0..dim)
        .map(|j| ratio.powf(j as f64 / (dim - 1) as f64))
        .collect()
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_classes", self.n_classes),
            ("n_seen", self.n_seen),
            ("samples_per_class", self.samples_per_class),
            ("feature_dim", self.feature_dim),
            ("semantic_dim", self.semantic_dim),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(ExemError::domain(format!("{name} must be at least 1")));
        }
        if self.n_seen >= self.n_classes {
            return Err(ExemError::domain(format!(
                "n_seen ({}) must be smaller than n_classes ({})",
                self.n_seen, self.n_classes
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(ExemError::domain("noise_sigma must be finite and non-negative"));
        }
        if self.map_kind == MapKind::RbfMixture {
            if !(self.map_gamma.is_finite() && self.map_gamma > 0.0) {
                return Err(ExemError::domain("map_gamma must be positive"));
            }
            if self.map_units == 0 {
                return Err(ExemError::domain("map_units must be at least 1"));
            }
        }
        if let Some(a) = &self.anisotropy {
            if a.len() != self.feature_dim {
                return Err(ExemError::dim("anisotropy", self.feature_dim, a.len()));
            }
            if a.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
                return Err(ExemError::domain("anisotropy entries must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub features: Matrix,
    pub labels: Vec<ClassId>,
    /// Unit-norm semantic vector per class, ids `0..n_classes`.
    pub semantics: ClassTable,
    pub true_centers: ClassTable,
    pub seen: Vec<ClassId>,
    pub unseen: Vec<ClassId>,
}

impl SynthDataset {
    /// Row indices of samples whose class is in `classes`.
    pub fn rows_of(&self, classes: &[ClassId]) -> Vec<usize> {
        let set: std::collections::HashSet<_> = classes.iter().collect();
        (0..self.labels.len()).filter(|i| set.contains(&self.labels[*i])).collect()
    }
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v = normal_vec(rng, n);
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

pub fn generate(spec: &SynthSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n_classes, dim, sem_dim) = (spec.n_classes, spec.feature_dim, spec.semantic_dim);

    let semantics: Vec<Vec<f64>> = (0..n_classes).map(|_| unit_vec(&mut rng, sem_dim)).collect();

    let mut centers: Vec<Vec<f64>> = match spec.map_kind {
        MapKind::Linear => {
            let w: Vec<Vec<f64>> = (0..dim).map(|_| normal_vec(&mut rng, sem_dim)).collect();
            semantics
                .iter()
                .map(|a| w.iter().map(|wr| dot(wr, a)).collect())
                .collect()
        }
        MapKind::RbfMixture => {
            let units: Vec<Vec<f64>> = (0..spec.map_units).map(|_| unit_vec(&mut rng, sem_dim)).collect();
            let w: Vec<Vec<f64>> = (0..dim).map(|_| normal_vec(&mut rng, spec.map_units)).collect();
            semantics
                .iter()
                .map(|a| {
                    let act: Vec<f64> = units
                        .iter()
                        .map(|u| (-spec.map_gamma * squared_dist_unchecked(a, u)).exp())
                        .collect();
                    w.iter().map(|wr| dot(wr, &act)).collect()
                })
                .collect()
        }
    };

    // unit mean spacing
    if n_classes >= 2 {
        let mut total = 0.0;
        for i in 0..n_classes {
            for j in 0..i {
                total += squared_dist_unchecked(&centers[i], &centers[j]).sqrt();
            }
        }
        let mean = total / (n_classes * (n_classes - 1) / 2) as f64;
        if mean > 0.0 {
            centers.iter_mut().flatten().for_each(|x| *x /= mean);
        }
    }

    let mut order: Vec<ClassId> = (0..n_classes as ClassId).collect();
    order.shuffle(&mut rng);
    let mut seen = order[..spec.n_seen].to_vec();
    let mut unseen = order[spec.n_seen..].to_vec();
    seen.sort_unstable();
    unseen.sort_unstable();

    let base_sd = spec.noise_sigma / (dim as f64).sqrt();
    let sd: Vec<f64> = match &spec.anisotropy {
        Some(a) => a.iter().map(|s| base_sd * s).collect(),
        None => vec![base_sd; dim],
    };

    let n = n_classes * spec.samples_per_class;
    let mut features = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for (c, center) in centers.iter().enumerate() {
        let mut class_rng = ChaCha8Rng::seed_from_u64(spec.seed);
        class_rng.set_stream(c as u64 + 1);
        for _ in 0..spec.samples_per_class {
            for j in 0..dim {
                let z: f64 = StandardNormal.sample(&mut class_rng);
                features.push(center[j] + sd[j] * z);
            }
            labels.push(c as ClassId);
        }
    }

    let ids: Vec<ClassId> = (0..n_classes as ClassId).collect();
    Ok(SynthDataset {
        features: Matrix::new(n, dim, features)?,
        labels,
        semantics: ClassTable::new(ids.clone(), Matrix::from_rows(&semantics)?)?,
        true_centers: ClassTable::new(ids, Matrix::from_rows(&centers)?)?,
        seen,
        unseen,
    })
}

//! End-to-end zero-shot pipeline: normalize semantics, fit PCA on seen-class
//! features, average projected features into exemplars, train the exemplar
//! predictor, then classify unseen-class samples by nearest predicted exemplar.

use std::collections::HashSet;

use crate::classify::{intra_class_std, DistanceMode, NnClassifier};
use crate::error::{ExemError, Result};
use crate::exemplar::{
    compute_exemplars, normalize_semantics, predict_exemplars, train_predictor, ClassId, ClassTable,
    ExemplarPredictor, ExemplarTable,
};
use crate::numeric::Matrix;
use crate::pca::{default_components, fit_pca, PcaModel};
use crate::svr::{SolverOptions, SvrHyperParams};

/// Labelled features plus one semantic vector per class.
#[derive(Debug, Clone, Copy)]
pub struct ZslData<'a> {
    pub features: &'a Matrix,
    pub labels: &'a [ClassId],
    pub semantics: &'a ClassTable,
}

impl<'a> ZslData<'a> {
    pub fn new(features: &'a Matrix, labels: &'a [ClassId], semantics: &'a ClassTable) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(ExemError::dim("labels vs feature rows", features.rows(), labels.len()));
        }
        Ok(ZslData {
            features,
            labels,
            semantics,
        })
    }

    /// Rows whose label is in `classes`, as `(features, labels)`.
    pub fn subset(&self, classes: &[ClassId]) -> (Matrix, Vec<ClassId>) {
        let set: HashSet<ClassId> = classes.iter().copied().collect();
        let idx: Vec<usize> = (0..self.labels.len())
            .filter(|i| set.contains(&self.labels[*i]))
            .collect();
        let labels = idx.iter().map(|i| self.labels[*i]).collect();
        (self.features.select_rows(&idx), labels)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// PCA dimensionality; `None` uses [`default_components`].
    pub d: Option<usize>,
    pub hyper: SvrHyperParams,
    pub mode: DistanceMode,
    pub solver: SolverOptions,
}

impl PipelineConfig {
    pub fn new(hyper: SvrHyperParams) -> Self {
        PipelineConfig {
            d: None,
            hyper,
            mode: DistanceMode::Plain,
            solver: SolverOptions::default(),
        }
    }
}

/// Everything learned from the seen classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ZslModel {
    pub pca: PcaModel,
    pub seen_exemplars: ExemplarTable,
    pub predictor: ExemplarPredictor,
    /// Averaged intra-class standard deviation of projected seen-class features.
    pub sigma: Vec<f64>,
}

impl ZslModel {
    /// Predicted exemplars for `classes`, from their (raw) semantic vectors.
    pub fn predict_exemplars(&self, semantics: &ClassTable, classes: &[ClassId]) -> Result<ExemplarTable> {
        let a = normalize_semantics(&semantics.select(classes)?.values)?;
        predict_exemplars(&self.predictor, &a, classes)
    }

    pub fn classifier(&self, exemplars: ExemplarTable, mode: DistanceMode) -> Result<NnClassifier> {
        match mode {
            DistanceMode::Plain => NnClassifier::plain(exemplars),
            DistanceMode::Standardized => NnClassifier::standardized(exemplars, &self.sigma),
        }
    }
}

/// Fits the model on the samples of the `seen` classes.
pub fn fit(data: &ZslData<'_>, seen: &[ClassId], cfg: &PipelineConfig) -> Result<ZslModel> {
    let (x, labels) = data.subset(seen);
    if x.rows() < 2 {
        return Err(ExemError::domain("need at least two seen-class samples"));
    }
    let present: HashSet<ClassId> = labels.iter().copied().collect();
    if let Some(c) = seen.iter().find(|c| !present.contains(c)) {
        return Err(ExemError::domain(format!("seen class {c} has no samples")));
    }
    let d = cfg.d.unwrap_or_else(|| default_components(x.rows(), x.cols()));
    let pca = fit_pca(&x, d)?;
    let z = pca.project(&x)?;
    let seen_exemplars = compute_exemplars(&z, &labels)?;
    let a_seen = normalize_semantics(&data.semantics.select(&seen_exemplars.class_ids)?.values)?;
    let predictor = train_predictor(&a_seen, &seen_exemplars, &cfg.hyper, &cfg.solver)?;
    let sigma = intra_class_std(&z, &labels)?;
    Ok(ZslModel {
        pca,
        seen_exemplars,
        predictor,
        sigma,
    })
}

/// Ranked predictions for the samples of the `unseen` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ZslPredictions {
    pub unseen_exemplars: ExemplarTable,
    /// Original row index of each test sample.
    pub rows: Vec<usize>,
    pub truth: Vec<ClassId>,
    pub ranked: Vec<Vec<ClassId>>,
}

/// Classifies every sample whose label is in `unseen` among the `unseen`
/// label space, keeping the top `k` (capped at the number of classes).
pub fn predict_unseen(
    model: &ZslModel,
    data: &ZslData<'_>,
    unseen: &[ClassId],
    mode: DistanceMode,
    k: usize,
) -> Result<ZslPredictions> {
    let mut classes = unseen.to_vec();
    classes.sort_unstable();
    classes.dedup();
    let unseen_exemplars = model.predict_exemplars(data.semantics, &classes)?;
    let clf = model.classifier(unseen_exemplars.clone(), mode)?;

    let set: HashSet<ClassId> = classes.iter().copied().collect();
    let rows: Vec<usize> = (0..data.labels.len())
        .filter(|i| set.contains(&data.labels[*i]))
        .collect();
    if rows.is_empty() {
        return Err(ExemError::domain("no test samples belong to the unseen classes"));
    }
    let truth = rows.iter().map(|i| data.labels[*i]).collect();
    let z = model.pca.project(&data.features.select_rows(&rows))?;
    let ranked = clf.rank_all(&z, k.clamp(1, classes.len()))?;
    Ok(ZslPredictions {
        unseen_exemplars,
        rows,
        truth,
        ranked,
    })
}

//! Seen-class exemplars and the semantic → exemplar predictor.
//!
//! An exemplar is the mean PCA-projected feature vector of a class. The
//! predictor is a bank of independent ν-SVR regressors, one per projected
//! dimension, all sharing the seen-class semantic vectors as training points
//! and a single kernel. Because the training points and kernel are shared, the
//! Gram matrix is computed once and reused by every regressor.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ExemError, Result};
use crate::numeric::{dot, Matrix};
use crate::svr::{gram_matrix, train_with_gram, SolverOptions, SvrHyperParams, SvrModel};

/// Dense class label used inside the library. File I/O maps string ids onto these.
pub type ClassId = u32;

/// Rows of a matrix keyed by class id. Used both for exemplars and for
/// per-class semantic representations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTable {
    pub class_ids: Vec<ClassId>,
    pub values: Matrix,
}

pub type ExemplarTable = ClassTable;

impl ClassTable {
    pub fn new(class_ids: Vec<ClassId>, values: Matrix) -> Result<Self> {
        if class_ids.len() != values.rows() {
            return Err(ExemError::dim("class table rows", class_ids.len(), values.rows()));
        }
        let mut seen = std::collections::HashSet::with_capacity(class_ids.len());
        if let Some(dup) = class_ids.iter().find(|c| !seen.insert(**c)) {
            return Err(ExemError::domain(format!("duplicate class id {dup} in table")));
        }
        Ok(ClassTable { class_ids, values })
    }

    pub fn len(&self) -> usize {
        self.class_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn position(&self, class: ClassId) -> Option<usize> {
        self.class_ids.iter().position(|c| *c == class)
    }

    pub fn row_of(&self, class: ClassId) -> Option<&[f64]> {
        self.position(class).map(|i| self.values.row(i))
    }

    /// Sub-table for `classes`, in that order.
    pub fn select(&self, classes: &[ClassId]) -> Result<ClassTable> {
        let idx = classes
            .iter()
            .map(|c| {
                self.position(*c)
                    .ok_or_else(|| ExemError::domain(format!("class {c} missing from table")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ClassTable {
            class_ids: classes.to_vec(),
            values: self.values.select_rows(&idx),
        })
    }
}

/// Scales every row to unit ℓ2 norm.
pub fn normalize_semantics(a: &Matrix) -> Result<Matrix> {
    let mut out = Vec::with_capacity(a.rows() * a.cols());
    for (i, row) in a.row_iter().enumerate() {
        let norm = dot(row, row).sqrt();
        if norm == 0.0 {
            return Err(ExemError::domain(format!(
                "semantic representation of class index {i} is all zeros"
            )));
        }
        out.extend(row.iter().map(|x| x / norm));
    }
    Ok(Matrix::from_vec_unchecked(a.rows(), a.cols(), out))
}

/// Normalizes the rows of a class table in place of the original.
pub fn normalize_table(table: &ClassTable) -> Result<ClassTable> {
    Ok(ClassTable {
        class_ids: table.class_ids.clone(),
        values: normalize_semantics(&table.values)?,
    })
}

/// Class means of the projected rows `z`, classes sorted ascending.
pub fn compute_exemplars(z: &Matrix, labels: &[ClassId]) -> Result<ExemplarTable> {
    if labels.len() != z.rows() {
        return Err(ExemError::dim("compute_exemplars labels", z.rows(), labels.len()));
    }
    if labels.is_empty() {
        return Err(ExemError::domain("compute_exemplars needs at least one labelled row"));
    }
    let d = z.cols();
    let mut groups: BTreeMap<ClassId, (usize, Vec<f64>)> = BTreeMap::new();
    for (row, &c) in z.row_iter().zip(labels) {
        let entry = groups.entry(c).or_insert_with(|| (0, vec![0.0; d]));
        entry.0 += 1;
        entry.1.iter_mut().zip(row).for_each(|(acc, x)| *acc += x);
    }
    let mut class_ids = Vec::with_capacity(groups.len());
    let mut data = Vec::with_capacity(groups.len() * d);
    for (c, (count, sum)) in groups {
        class_ids.push(c);
        data.extend(sum.into_iter().map(|s| s / count as f64));
    }
    let rows = class_ids.len();
    Ok(ClassTable {
        class_ids,
        values: Matrix::from_vec_unchecked(rows, d, data),
    })
}

/// ψ(·): one regressor per exemplar dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarPredictor {
    pub models: Vec<SvrModel>,
    pub hyper: SvrHyperParams,
    pub semantic_dim: usize,
}

impl ExemplarPredictor {
    pub fn output_dim(&self) -> usize {
        self.models.len()
    }

    /// Seen-class semantic vectors the regressors were trained on.
    pub fn train_points(&self) -> &Arc<Matrix> {
        &self.models[0].train_points
    }

    /// ψ(a) for each row of `a`.
    pub fn predict_matrix(&self, a: &Matrix) -> Result<Matrix> {
        if a.cols() != self.semantic_dim {
            return Err(ExemError::dim("exemplar prediction", self.semantic_dim, a.cols()));
        }
        let points = self.train_points();
        let kernel = self.hyper.kernel;
        let d = self.output_dim();
        let rows: Vec<Vec<f64>> = a
            .row_iter()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|query| {
                let kcol: Vec<f64> = points.row_iter().map(|p| kernel.eval_unchecked(p, query)).collect();
                self.models.iter().map(|m| m.predict_from_kernel(&kcol)).collect()
            })
            .collect();
        Ok(Matrix::from_vec_unchecked(a.rows(), d, rows.concat()))
    }
}

/// Trains ψ on aligned rows: row `i` of `a_seen` is the semantic vector of
/// `table.class_ids[i]`. Regressors are trained in parallel; each is
/// deterministic, so the result does not depend on scheduling.
pub fn train_predictor(
    a_seen: &Matrix,
    table: &ExemplarTable,
    hyper: &SvrHyperParams,
    opts: &SolverOptions,
) -> Result<ExemplarPredictor> {
    hyper.validate()?;
    if a_seen.rows() != table.len() {
        return Err(ExemError::dim("train_predictor semantic rows", table.len(), a_seen.rows()));
    }
    if table.dim() == 0 {
        return Err(ExemError::domain("exemplar table has zero columns"));
    }
    let points = Arc::new(a_seen.clone());
    let gram = gram_matrix(&points, &hyper.kernel)?;
    let models = (0..table.dim())
        .into_par_iter()
        .map(|j| {
            let targets = table.values.column(j);
            train_with_gram(Arc::clone(&points), &gram, &targets, hyper, opts).map_err(|e| {
                ExemError::Regressor {
                    dim: j,
                    source: Box::new(e),
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ExemplarPredictor {
        models,
        hyper: *hyper,
        semantic_dim: a_seen.cols(),
    })
}

/// Predicted exemplars for the classes whose semantic vectors are the rows of `a`.
pub fn predict_exemplars(
    p: &ExemplarPredictor,
    a: &Matrix,
    class_ids: &[ClassId],
) -> Result<ExemplarTable> {
    if class_ids.len() != a.rows() {
        return Err(ExemError::dim("predict_exemplars class ids", a.rows(), class_ids.len()));
    }
    ClassTable::new(class_ids.to_vec(), p.predict_matrix(a)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
        Matrix::new(n, d, (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn normalize_cases() {
        let m = Matrix::from_rows(&[[3.0, 4.0], [0.6, 0.8]]).unwrap();
        let n = normalize_semantics(&m).unwrap();
        assert_eq!(n.row(0), &[0.6, 0.8]);
        assert_eq!(n.row(1), m.row(1));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = normalize_semantics(&random_matrix(&mut rng, 20, 6)).unwrap();
        for row in r.row_iter() {
            assert!((dot(row, row).sqrt() - 1.0).abs() < 1e-12);
        }

        let bad = Matrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        match normalize_semantics(&bad) {
            Err(ExemError::Domain(msg)) => assert!(msg.contains("index 1")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exemplar_means() {
        let z = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let t = compute_exemplars(&z, &[7, 7]).unwrap();
        assert_eq!(t.class_ids, vec![7]);
        assert_eq!(t.values.row(0), &[2.0, 3.0]);

        let z = Matrix::from_rows(&[[1.0, 2.0], [5.0, 5.0], [3.0, 4.0]]).unwrap();
        let t = compute_exemplars(&z, &[2, 0, 2]).unwrap();
        assert_eq!(t.class_ids, vec![0, 2]);
        assert_eq!(t.values.row(0), &[5.0, 5.0]);
        assert!(compute_exemplars(&Matrix::zeros(0, 2), &[]).is_err());
        assert!(compute_exemplars(&z, &[0]).is_err());
    }

    #[test]
    fn exemplars_match_group_by_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = random_matrix(&mut rng, 15, 4);
        let labels: Vec<ClassId> = (0..15).map(|i| [4, 1, 9][i % 3]).collect();
        let t = compute_exemplars(&z, &labels).unwrap();
        assert_eq!(t.class_ids, vec![1, 4, 9]);
        for (k, &c) in t.class_ids.iter().enumerate() {
            let members: Vec<usize> = (0..15).filter(|&i| labels[i] == c).collect();
            for j in 0..4 {
                let mean = members.iter().map(|&i| z.get(i, j)).sum::<f64>() / members.len() as f64;
                assert!((t.values.get(k, j) - mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn table_rejects_duplicates() {
        assert!(ClassTable::new(vec![1, 1], Matrix::zeros(2, 1)).is_err());
        assert!(ClassTable::new(vec![1], Matrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn constant_exemplar_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = normalize_semantics(&random_matrix(&mut rng, 6, 3)).unwrap();
        let ex = Matrix::new(6, 2, [1.5, -2.0].repeat(6)).unwrap();
        let table = ClassTable::new((0..6).collect(), ex).unwrap();
        let hyper = SvrHyperParams::new(1.0, 0.5, 1.0).unwrap();
        let p = train_predictor(&a, &table, &hyper, &SolverOptions::precise()).unwrap();
        assert!(p.models.iter().all(|m| m.beta.iter().all(|b| *b == 0.0)));
        assert_eq!(p.models[0].bias, 1.5);
        assert_eq!(p.models[1].bias, -2.0);
        let q = random_matrix(&mut rng, 4, 3);
        let out = predict_exemplars(&p, &q, &[10, 11, 12, 13]).unwrap();
        for row in out.values.row_iter() {
            assert_eq!(row, &[1.5, -2.0]);
        }
    }

    #[test]
    fn prediction_is_rowwise_and_consistent_with_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = normalize_semantics(&random_matrix(&mut rng, 8, 3)).unwrap();
        let table = ClassTable::new((0..8).collect(), random_matrix(&mut rng, 8, 3)).unwrap();
        let hyper = SvrHyperParams::new(4.0, 0.5, 2.0).unwrap();
        let p = train_predictor(&a, &table, &hyper, &SolverOptions::precise()).unwrap();

        // at a seen class's own vector, ψ equals each model's fitted value
        let fitted = p.predict_matrix(&a).unwrap();
        for i in 0..8 {
            for (j, m) in p.models.iter().enumerate() {
                assert_eq!(fitted.get(i, j), m.predict(a.row(i)).unwrap());
            }
        }

        let q = random_matrix(&mut rng, 5, 3);
        let rev = q.select_rows(&[4, 3, 2, 1, 0]);
        let (f, r) = (p.predict_matrix(&q).unwrap(), p.predict_matrix(&rev).unwrap());
        for i in 0..5 {
            assert_eq!(f.row(i), r.row(4 - i));
        }
        assert!(p.predict_matrix(&random_matrix(&mut rng, 2, 4)).is_err());
    }

    #[test]
    fn smooth_map_is_fitted() {
        // S=5 classes on a circle, targets a smooth function of the angle
        let s = 5;
        let mut a = Vec::new();
        let mut ex = Vec::new();
        for i in 0..s {
            let t = i as f64 * std::f64::consts::TAU / s as f64;
            a.extend([t.cos(), t.sin()]);
            ex.extend([2.0 * t.cos() + 0.5 * t.sin(), t.sin() - t.cos()]);
        }
        let a = Matrix::new(s, 2, a).unwrap();
        let table = ClassTable::new((0..s as ClassId).collect(), Matrix::new(s, 2, ex).unwrap()).unwrap();
        let hyper = SvrHyperParams::new(100.0, 1.0, 0.5).unwrap();
        let p = train_predictor(&a, &table, &hyper, &SolverOptions::precise()).unwrap();
        let fit = p.predict_matrix(&a).unwrap();
        for j in 0..2 {
            let col = table.values.column(j);
            let mean = col.iter().sum::<f64>() / s as f64;
            let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / s as f64).sqrt();
            let rmse = ((0..s).map(|i| (fit.get(i, j) - col[i]).powi(2)).sum::<f64>() / s as f64).sqrt();
            assert!(rmse <= 0.1 * sd, "dim {j}: rmse {rmse} sd {sd}");
        }
    }
}

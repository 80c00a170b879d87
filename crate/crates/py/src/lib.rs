//! Python bindings. Matrices cross the boundary as lists of rows and class
//! ids as non-negative integers.

use std::path::PathBuf;

use exem::classify::{exemplar_similarity, intra_class_std, DistanceMode, NnClassifier};
use exem::dataio;
use exem::eval::{flat_hit_at_k, per_class_accuracy, EvalReport};
use exem::exemplar::{self, ClassId, ClassTable};
use exem::numeric::Matrix;
use exem::pca::{self, PcaModel};
use exem::pipeline::{self, PipelineConfig, ZslData};
use exem::svr::{SolverOptions, SvrHyperParams};
use exem::synth::{self, MapKind, SynthSpec};
use exem::ExemError;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: ExemError) -> PyErr {
    match e {
        ExemError::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    if rows.is_empty() {
        return Err(PyValueError::new_err("matrix needs at least one row"));
    }
    Matrix::from_rows(&rows).map_err(to_py)
}

fn table(ids: Vec<ClassId>, rows: Vec<Vec<f64>>) -> PyResult<ClassTable> {
    ClassTable::new(ids, matrix(rows)?).map_err(to_py)
}

/// Principal component projection fitted on training features.
#[pyclass(name = "Pca", module = "pyexem")]
struct PyPca {
    inner: PcaModel,
}

#[pymethods]
impl PyPca {
    /// Fits `d` components (default min(500, N-1, D)).
    #[staticmethod]
    #[pyo3(signature = (x, d=None))]
    fn fit(x: Vec<Vec<f64>>, d: Option<usize>) -> PyResult<Self> {
        let x = matrix(x)?;
        let d = d.unwrap_or_else(|| pca::default_components(x.rows(), x.cols()));
        Ok(PyPca {
            inner: pca::fit_pca(&x, d).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyPca {
            inner: dataio::load_pca(&path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        dataio::save_pca(&path, &self.inner).map_err(to_py)
    }

    fn project(&self, x: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        Ok(self.inner.project(&matrix(x)?).map_err(to_py)?.to_rows())
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.inner.mean.clone()
    }

    #[getter]
    fn components(&self) -> Vec<Vec<f64>> {
        self.inner.projection.to_rows()
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues.clone()
    }

    #[getter]
    fn output_dim(&self) -> usize {
        self.inner.output_dim()
    }
}

/// One kernel regressor per exemplar dimension.
#[pyclass(name = "ExemplarPredictor", module = "pyexem")]
struct PyPredictor {
    inner: exemplar::ExemplarPredictor,
}

#[pymethods]
impl PyPredictor {
    /// Trains on unit-normalized semantic rows and the matching exemplar rows.
    #[staticmethod]
    #[pyo3(signature = (semantics, exemplars, lam=32.0, nu=0.5, gamma=1.0, tol=1e-3))]
    fn train(
        semantics: Vec<Vec<f64>>,
        exemplars: Vec<Vec<f64>>,
        lam: f64,
        nu: f64,
        gamma: f64,
        tol: f64,
    ) -> PyResult<Self> {
        let a = matrix(semantics)?;
        let ex = matrix(exemplars)?;
        let ids = (0..ex.rows() as ClassId).collect();
        let targets = ClassTable::new(ids, ex).map_err(to_py)?;
        let hyper = SvrHyperParams::new(lam, nu, gamma).map_err(to_py)?;
        let opts = SolverOptions {
            tol,
            ..SolverOptions::default()
        };
        Ok(PyPredictor {
            inner: exemplar::train_predictor(&a, &targets, &hyper, &opts).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(PyPredictor {
            inner: dataio::load_predictor(&path).map_err(to_py)?,
        })
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        dataio::save_predictor(&path, &self.inner).map_err(to_py)
    }

    fn predict(&self, semantics: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        Ok(self.inner.predict_matrix(&matrix(semantics)?).map_err(to_py)?.to_rows())
    }

    #[getter]
    fn output_dim(&self) -> usize {
        self.inner.output_dim()
    }

    /// Number of nonzero coefficients per regressor.
    fn support_counts(&self) -> Vec<usize> {
        self.inner.models.iter().map(|m| m.support_count()).collect()
    }
}

/// Nearest-exemplar classifier over a fixed label space.
#[pyclass(name = "Classifier", module = "pyexem")]
struct PyClassifier {
    inner: NnClassifier,
}

#[pymethods]
impl PyClassifier {
    /// With `sigma` the distance is standardized per dimension.
    #[new]
    #[pyo3(signature = (class_ids, exemplars, sigma=None))]
    fn new(class_ids: Vec<ClassId>, exemplars: Vec<Vec<f64>>, sigma: Option<Vec<f64>>) -> PyResult<Self> {
        let t = table(class_ids, exemplars)?;
        let inner = match sigma {
            Some(s) => NnClassifier::standardized(t, &s),
            None => NnClassifier::plain(t),
        }
        .map_err(to_py)?;
        Ok(PyClassifier { inner })
    }

    #[getter]
    fn mode(&self) -> String {
        self.inner.mode().to_string()
    }

    /// Top-`k` class ids for every row, nearest first.
    #[pyo3(signature = (z, k=1))]
    fn rank(&self, z: Vec<Vec<f64>>, k: usize) -> PyResult<Vec<Vec<ClassId>>> {
        self.inner.rank_all(&matrix(z)?, k).map_err(to_py)
    }
}

#[pyfunction]
fn normalize_semantics(a: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    Ok(exemplar::normalize_semantics(&matrix(a)?).map_err(to_py)?.to_rows())
}

/// Per-class means of `z`, as `(class_ids, rows)` sorted by id.
#[pyfunction]
fn compute_exemplars(z: Vec<Vec<f64>>, labels: Vec<ClassId>) -> PyResult<(Vec<ClassId>, Vec<Vec<f64>>)> {
    let t = exemplar::compute_exemplars(&matrix(z)?, &labels).map_err(to_py)?;
    Ok((t.class_ids, t.values.to_rows()))
}

#[pyfunction(name = "intra_class_std")]
fn py_intra_class_std(z: Vec<Vec<f64>>, labels: Vec<ClassId>) -> PyResult<Vec<f64>> {
    intra_class_std(&matrix(z)?, &labels).map_err(to_py)
}

/// Softmax over bases of `-scale * squared distance`, one row per target.
#[pyfunction]
#[pyo3(signature = (targets, bases, scale=1.0))]
fn similarity(targets: Vec<Vec<f64>>, bases: Vec<Vec<f64>>, scale: f64) -> PyResult<Vec<Vec<f64>>> {
    let t = table((0..targets.len() as ClassId).collect(), targets)?;
    let b = table((0..bases.len() as ClassId).collect(), bases)?;
    Ok(exemplar_similarity(&t, &b, scale).map_err(to_py)?.to_rows())
}

#[pyfunction(name = "per_class_accuracy")]
fn py_per_class_accuracy(preds: Vec<ClassId>, truth: Vec<ClassId>) -> PyResult<f64> {
    per_class_accuracy(&preds, &truth).map_err(to_py)
}

#[pyfunction(name = "flat_hit_at_k")]
fn py_flat_hit_at_k(ranked: Vec<Vec<ClassId>>, truth: Vec<ClassId>, k: usize) -> PyResult<f64> {
    flat_hit_at_k(&ranked, &truth, k).map_err(to_py)
}

/// Synthetic dataset as a dict of plain lists.
#[pyfunction]
#[pyo3(signature = (n_classes=25, n_seen=20, samples_per_class=40, feature_dim=64, semantic_dim=4,
                    map_kind="linear", map_gamma=2.0, noise=0.1, anisotropy=None, seed=0))]
#[allow(clippy::too_many_arguments)]
fn synth_dataset<'py>(
    py: Python<'py>,
    n_classes: usize,
    n_seen: usize,
    samples_per_class: usize,
    feature_dim: usize,
    semantic_dim: usize,
    map_kind: &str,
    map_gamma: f64,
    noise: f64,
    anisotropy: Option<f64>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = SynthSpec {
        n_classes,
        n_seen,
        samples_per_class,
        feature_dim,
        semantic_dim,
        map_kind: map_kind.parse::<MapKind>().map_err(to_py)?,
        map_gamma,
        noise_sigma: noise,
        anisotropy: anisotropy.map(|r| synth::geometric_anisotropy(feature_dim, r)),
        seed,
        ..SynthSpec::default()
    };
    let ds = synth::generate(&spec).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("features", ds.features.to_rows())?;
    d.set_item("labels", ds.labels)?;
    d.set_item("semantics", ds.semantics.values.to_rows())?;
    d.set_item("true_centers", ds.true_centers.values.to_rows())?;
    d.set_item("seen", ds.seen)?;
    d.set_item("unseen", ds.unseen)?;
    Ok(d)
}

/// Fits on the `seen` classes and evaluates on the samples of `unseen`.
/// `semantics` has one row per class id `0..n`. Returns the report as a dict.
#[pyfunction]
#[pyo3(signature = (features, labels, semantics, seen, unseen, d=None, lam=32.0, nu=0.5, gamma=None,
                    mode="1nn", ks=vec![1, 2, 5]))]
#[allow(clippy::too_many_arguments)]
fn run_pipeline<'py>(
    py: Python<'py>,
    features: Vec<Vec<f64>>,
    labels: Vec<ClassId>,
    semantics: Vec<Vec<f64>>,
    seen: Vec<ClassId>,
    unseen: Vec<ClassId>,
    d: Option<usize>,
    lam: f64,
    nu: f64,
    gamma: Option<f64>,
    mode: &str,
    ks: Vec<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let x = matrix(features)?;
    let sem = table((0..semantics.len() as ClassId).collect(), semantics)?;
    let data = ZslData::new(&x, &labels, &sem).map_err(to_py)?;
    let gamma = match gamma {
        Some(g) => g,
        None => exem::cli::default_gamma(&sem.select(&seen).map_err(to_py)?).map_err(to_py)?,
    };
    let mode: DistanceMode = mode.parse().map_err(to_py)?;
    let mut cfg = PipelineConfig::new(SvrHyperParams::new(lam, nu, gamma).map_err(to_py)?);
    cfg.d = d;
    cfg.mode = mode;
    let model = pipeline::fit(&data, &seen, &cfg).map_err(to_py)?;
    let k = ks.iter().copied().max().unwrap_or(1);
    let preds = pipeline::predict_unseen(&model, &data, &unseen, mode, k).map_err(to_py)?;
    let report = EvalReport::compute(&preds.ranked, &preds.truth, &ks, None).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("per_class_accuracy", report.per_class_accuracy)?;
    out.set_item("top1_accuracy", report.top1_accuracy)?;
    out.set_item("flat_hit", report.flat_hit.into_iter().collect::<Vec<_>>())?;
    out.set_item("num_samples", report.num_samples)?;
    out.set_item("d", model.pca.output_dim())?;
    out.set_item("gamma", gamma)?;
    out.set_item("unseen_exemplars", preds.unseen_exemplars.values.to_rows())?;
    Ok(out)
}

/// Runs the command-line interface in-process and returns its exit code.
#[pyfunction]
fn cli(args: Vec<String>) -> i32 {
    let argv = std::iter::once("exem".to_string()).chain(args);
    exem::cli::run(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

#[pymodule]
fn pyexem(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPca>()?;
    m.add_class::<PyPredictor>()?;
    m.add_class::<PyClassifier>()?;
    m.add_function(wrap_pyfunction!(normalize_semantics, m)?)?;
    m.add_function(wrap_pyfunction!(compute_exemplars, m)?)?;
    m.add_function(wrap_pyfunction!(py_intra_class_std, m)?)?;
    m.add_function(wrap_pyfunction!(similarity, m)?)?;
    m.add_function(wrap_pyfunction!(py_per_class_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(py_flat_hit_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(synth_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(cli, m)?)?;
    Ok(())
}

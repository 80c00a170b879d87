//! Command-line interface.
//!
//! Every subcommand accepts `--config FILE`, a TOML file of `key = value`
//! settings; flags given on the command line take precedence. Reports are
//! printed to stdout as JSON. `EXEM_THREADS` caps the worker pool
//! (`0` or unset means one worker per core).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::classify::{exemplar_similarity, intra_class_std, DistanceMode};
use crate::dataio::{self, ClassIndex, DatasetBundle, MatrixFormat};
use crate::error::{ExemError, Result};
use crate::eval::{hop_subset, EvalReport, GroundTruth};
use crate::exemplar::{compute_exemplars, normalize_semantics, predict_exemplars, train_predictor, ClassId, ClassTable};
use crate::pca::{default_components, fit_pca};
use crate::pipeline::{fit, predict_unseen, PipelineConfig, ZslData, ZslModel};
use crate::svr::{SolverOptions, SvrHyperParams};
use crate::synth::{generate, geometric_anisotropy, MapKind, SynthSpec};
use crate::zsl_cv::{default_gamma_grid, grid_search, CvConfig, Objective};

pub const DEFAULT_LAMBDA: f64 = 32.0;
pub const DEFAULT_NU: f64 = 0.5;
const DEFAULT_KS: &[usize] = &[1, 2, 5, 10, 20];

#[derive(Parser, Debug)]
#[command(name = "exem", version, about = "Zero-shot classification by predicting visual exemplars")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset directory
    Synth(SynthArgs),
    /// Fit PCA on the seen-class features
    Pca(PcaArgs),
    /// Write the seen-class exemplars (class means of projected features)
    Exemplars(ExemplarsArgs),
    /// Train the exemplar predictor on the seen classes
    Train(TrainArgs),
    /// Predict exemplars from semantic vectors
    Predict(PredictArgs),
    /// Rank unseen classes for every unseen-class sample
    Classify(ClassifyArgs),
    /// Score ranked predictions
    Eval(EvalArgs),
    /// Class-wise cross-validation over a hyperparameter grid
    Cv(CvArgs),
    /// Run the whole pipeline and print an evaluation report
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// TOML settings file; command-line flags override its values
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Clone, Default)]
struct HyperFlags {
    /// PCA dimensionality (default min(500, N-1, D))
    #[arg(long)]
    d: Option<usize>,
    /// Regularization constant of every regressor
    #[arg(long)]
    lambda: Option<f64>,
    /// Fraction bound ν in (0, 1]
    #[arg(long)]
    nu: Option<f64>,
    /// RBF bandwidth (default 1 / median squared distance of the seen semantics)
    #[arg(long)]
    gamma: Option<f64>,
    /// Solver stopping tolerance
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Debug, Clone, Default)]
struct RankFlags {
    /// Distance used for nearest-exemplar classification: 1nn or 1nn-scaled
    #[arg(long)]
    mode: Option<DistanceMode>,
    /// Cut-offs for hit@K and hierarchical precision@K, comma separated
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
    /// Restrict the unseen label space to classes within this many hierarchy hops of a seen class
    #[arg(long)]
    max_hops: Option<u32>,
}

#[derive(Args, Debug, Clone, Default)]
struct GridFlags {
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    nus: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// accuracy or hit@K
    #[arg(long)]
    objective: Option<String>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// Output dataset directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    classes: Option<usize>,
    #[arg(long)]
    seen: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    semantic_dim: Option<usize>,
    /// linear or rbf
    #[arg(long)]
    map: Option<String>,
    #[arg(long)]
    map_gamma: Option<f64>,
    #[arg(long)]
    map_units: Option<usize>,
    /// Expected noise norm relative to the mean center spacing
    #[arg(long)]
    noise: Option<f64>,
    /// Ratio between the largest and smallest per-dimension noise scale
    #[arg(long)]
    anisotropy: Option<f64>,
    /// csv or bin
    #[arg(long, default_value = "bin")]
    format: String,
}

#[derive(Args, Debug)]
struct PcaArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ExemplarsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    pca: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    hyper: HyperFlags,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    pca: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    predictor: PathBuf,
    /// Predicted exemplars, one CSV row per class
    #[arg(long)]
    out: PathBuf,
    /// Which classes to predict: unseen, seen or all
    #[arg(long, default_value = "unseen")]
    classes: String,
    /// Also write softmax similarities of the predicted exemplars to the seen-class predictions
    #[arg(long)]
    similarity_out: Option<PathBuf>,
    /// Distance scale inside the similarity softmax
    #[arg(long)]
    scale: Option<f64>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    rank: RankFlags,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    pca: PathBuf,
    #[arg(long)]
    predictor: PathBuf,
    /// Ranked predictions, one TSV line per test sample
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    preds: PathBuf,
    #[arg(long, value_delimiter = ',')]
    k: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
struct CvArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    hyper: HyperFlags,
    #[command(flatten)]
    grid: GridFlags,
    #[arg(long)]
    mode: Option<DistanceMode>,
    #[arg(long)]
    data: PathBuf,
    /// Per-fold scores as CSV
    #[arg(long)]
    table_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    hyper: HyperFlags,
    #[command(flatten)]
    rank: RankFlags,
    #[command(flatten)]
    grid: GridFlags,
    #[arg(long)]
    data: PathBuf,
    /// Select λ, ν, γ and d by class-wise cross-validation on the seen classes first
    #[arg(long)]
    tune: bool,
    /// Also write the report to this file
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Values that may come from the `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    d: Option<usize>,
    lambda: Option<f64>,
    nu: Option<f64>,
    gamma: Option<f64>,
    tol: Option<f64>,
    mode: Option<DistanceMode>,
    k: Option<KList>,
    max_hops: Option<u32>,
    folds: Option<usize>,
    lambdas: Option<Vec<f64>>,
    nus: Option<Vec<f64>>,
    gammas: Option<Vec<f64>>,
    dims: Option<Vec<usize>>,
    objective: Option<String>,
    scale: Option<f64>,
    classes: Option<usize>,
    seen: Option<usize>,
    samples: Option<usize>,
    dim: Option<usize>,
    semantic_dim: Option<usize>,
    map: Option<String>,
    map_gamma: Option<f64>,
    map_units: Option<usize>,
    noise: Option<f64>,
    anisotropy: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum KList {
    One(usize),
    Many(Vec<usize>),
}

impl KList {
    fn into_vec(self) -> Vec<usize> {
        match self {
            KList::One(k) => vec![k],
            KList::Many(v) => v,
        }
    }
}

fn load_config(common: &Common) -> Result<FileConfig> {
    let Some(path) = &common.config else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|source| ExemError::Io {
        path: path.clone(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| ExemError::Parse {
        path: path.clone(),
        location: e
            .span()
            .map(|s| format!("line {}", text[..s.start].lines().count().max(1)))
            .unwrap_or_else(|| "file".into()),
        msg: e.message().to_string(),
    })
}

/// Runs the CLI on `args` (including the program name) and returns the
/// process exit code: 0 on success, 1 on runtime errors, 2 on usage errors.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
                    if e.exit_code() == 0 =>
                {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    2
                }
            };
        }
    };
    let result = with_thread_pool(|| {
        let mut buf = Vec::new();
        dispatch(cli.command, &mut buf).map(|()| buf)
    });
    match result {
        Ok(buf) => {
            if out.write_all(&buf).and_then(|()| out.flush()).is_err() {
                return 1;
            }
            0
        }
        Err(e) => {
            let msg = e.to_string();
            let _ = writeln!(err, "error: {msg}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let text = s.to_string();
                if !msg.contains(&text) {
                    let _ = writeln!(err, "  caused by: {text}");
                }
                source = s.source();
            }
            1
        }
    }
}

fn with_thread_pool<R: Send>(f: impl FnOnce() -> Result<R> + Send) -> Result<R> {
    let threads = match std::env::var("EXEM_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map_err(|_| ExemError::domain(format!("EXEM_THREADS must be a non-negative integer, got {v:?}")))?,
        _ => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ExemError::domain(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Synth(a) => cmd_synth(a, out),
        Command::Pca(a) => cmd_pca(a, out),
        Command::Exemplars(a) => cmd_exemplars(a, out),
        Command::Train(a) => cmd_train(a, out),
        Command::Predict(a) => cmd_predict(a, out),
        Command::Classify(a) => cmd_classify(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Cv(a) => cmd_cv(a, out),
        Command::Pipeline(a) => cmd_pipeline(a, out),
    }
}

fn emit_json<T: Serialize>(out: &mut dyn Write, value: &T, file: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| ExemError::domain(e.to_string()))?;
    text.push('\n');
    if let Some(path) = file {
        std::fs::write(path, &text).map_err(|source| ExemError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    out.write_all(text.as_bytes()).map_err(|source| ExemError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

fn note(out: &mut dyn Write, msg: String) -> Result<()> {
    emit_json(out, &serde_json::json!({ "wrote": msg }), None)
}

// ---------------------------------------------------------------------------
// resolved settings

struct Hyper {
    d: Option<usize>,
    lambda: f64,
    nu: f64,
    gamma: Option<f64>,
    solver: SolverOptions,
}

fn resolve_hyper(flags: &HyperFlags, cfg: &FileConfig) -> Hyper {
    let mut solver = SolverOptions::default();
    if let Some(tol) = flags.tol.or(cfg.tol) {
        solver.tol = tol;
    }
    Hyper {
        d: flags.d.or(cfg.d),
        lambda: flags.lambda.or(cfg.lambda).unwrap_or(DEFAULT_LAMBDA),
        nu: flags.nu.or(cfg.nu).unwrap_or(DEFAULT_NU),
        gamma: flags.gamma.or(cfg.gamma),
        solver,
    }
}

/// `1 / median squared distance` between unit-normalized semantic vectors.
pub fn default_gamma(semantics: &ClassTable) -> Result<f64> {
    // the middle entry of the 2^-5..2^5 grid
    Ok(default_gamma_grid(semantics)?[5])
}

impl Hyper {
    fn params(&self, seen_semantics: &ClassTable) -> Result<SvrHyperParams> {
        let gamma = match self.gamma {
            Some(g) => g,
            None => default_gamma(seen_semantics)?,
        };
        SvrHyperParams::new(self.lambda, self.nu, gamma)
    }
}

struct Rank {
    mode: DistanceMode,
    ks: Vec<usize>,
    max_hops: Option<u32>,
}

fn resolve_rank(flags: &RankFlags, cfg: FileConfigRank) -> Rank {
    Rank {
        mode: flags.mode.or(cfg.mode).unwrap_or(DistanceMode::Plain),
        ks: flags
            .k
            .clone()
            .or(cfg.k)
            .unwrap_or_else(|| DEFAULT_KS.to_vec()),
        max_hops: flags.max_hops.or(cfg.max_hops),
    }
}

struct FileConfigRank {
    mode: Option<DistanceMode>,
    k: Option<Vec<usize>>,
    max_hops: Option<u32>,
}

impl FileConfig {
    fn rank(&mut self) -> FileConfigRank {
        FileConfigRank {
            mode: self.mode,
            k: self.k.take().map(KList::into_vec),
            max_hops: self.max_hops,
        }
    }
}

fn parse_objective(s: &str) -> Result<Objective> {
    match s {
        "accuracy" | "per_class_accuracy" => Ok(Objective::PerClassAccuracy),
        other => match other.strip_prefix("hit@").map(str::parse::<usize>) {
            Some(Ok(k)) if k >= 1 => Ok(Objective::FlatHit(k)),
            _ => Err(ExemError::domain(format!(
                "unknown objective {other:?} (expected accuracy or hit@K)"
            ))),
        },
    }
}

fn resolve_cv(
    grid: &GridFlags,
    hyper: &HyperFlags,
    cfg: &FileConfig,
    bundle: &DatasetBundle,
    seed: u64,
    mode: DistanceMode,
) -> Result<CvConfig> {
    let seen_semantics = bundle.semantics.select(&bundle.seen)?;
    let n_seen_samples = bundle.labels.iter().filter(|c| bundle.seen.binary_search(c).is_ok()).count();
    let default_d = hyper
        .d
        .or(cfg.d)
        .unwrap_or_else(|| default_components(n_seen_samples, bundle.features.cols()));
    let mut cv = CvConfig::with_default_grids(&seen_semantics, default_d)?;
    cv.seed = seed;
    cv.mode = mode;
    if let Some(tol) = hyper.tol.or(cfg.tol) {
        cv.solver.tol = tol;
    }
    if let Some(f) = grid.folds.or(cfg.folds) {
        cv.n_folds = f;
    } else {
        cv.n_folds = cv.n_folds.min(bundle.seen.len());
    }
    if let Some(v) = grid.lambdas.clone().or(cfg.lambdas.clone()) {
        cv.lambdas = v;
    }
    if let Some(v) = grid.nus.clone().or(cfg.nus.clone()) {
        cv.nus = v;
    }
    if let Some(v) = grid.gammas.clone().or(cfg.gammas.clone()) {
        cv.gammas = v;
    }
    if let Some(v) = grid.dims.clone().or(cfg.dims.clone()) {
        cv.dims = v;
    }
    if let Some(o) = grid.objective.as_deref().or(cfg.objective.as_deref()) {
        cv.objective = parse_objective(o)?;
    }
    Ok(cv)
}

// ---------------------------------------------------------------------------
// commands

fn class_names(n: usize) -> Vec<String> {
    let width = n.saturating_sub(1).to_string().len();
    (0..n).map(|i| format!("c{i:0width$}")).collect()
}

fn cmd_synth(a: SynthArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let base = SynthSpec::default();
    let feature_dim = a.dim.or(cfg.dim).unwrap_or(base.feature_dim);
    let spec = SynthSpec {
        n_classes: a.classes.or(cfg.classes).unwrap_or(base.n_classes),
        n_seen: a.seen.or(cfg.seen).unwrap_or(base.n_seen),
        samples_per_class: a.samples.or(cfg.samples).unwrap_or(base.samples_per_class),
        feature_dim,
        semantic_dim: a.semantic_dim.or(cfg.semantic_dim).unwrap_or(base.semantic_dim),
        map_kind: match a.map.as_deref().or(cfg.map.as_deref()) {
            Some(m) => m.parse::<MapKind>()?,
            None => base.map_kind,
        },
        map_gamma: a.map_gamma.or(cfg.map_gamma).unwrap_or(base.map_gamma),
        map_units: a.map_units.or(cfg.map_units).unwrap_or(base.map_units),
        noise_sigma: a.noise.or(cfg.noise).unwrap_or(base.noise_sigma),
        anisotropy: a
            .anisotropy
            .or(cfg.anisotropy)
            .map(|r| geometric_anisotropy(feature_dim, r)),
        seed: a.common.seed.or(cfg.seed).unwrap_or(base.seed),
    };
    let format: MatrixFormat = a.format.parse()?;
    let ds = generate(&spec)?;
    let index = ClassIndex::new(class_names(spec.n_classes));
    dataio::write_dataset(&a.out, &index, &ds.features, format, &ds.labels, &ds.semantics, &ds.seen, &ds.unseen)?;
    dataio::save_class_table(&a.out.join("true_centers.csv"), &ds.true_centers, &index)?;
    note(out, a.out.display().to_string())
}

fn seen_rows(bundle: &DatasetBundle) -> Result<(crate::numeric::Matrix, Vec<ClassId>)> {
    let data = ZslData::new(&bundle.features, &bundle.labels, &bundle.semantics)?;
    let (x, labels) = data.subset(&bundle.seen);
    if x.rows() < 2 {
        return Err(ExemError::domain("need at least two seen-class samples"));
    }
    Ok((x, labels))
}

fn cmd_pca(a: PcaArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let bundle = DatasetBundle::load(&a.data)?;
    let (x, _) = seen_rows(&bundle)?;
    let d = a.d.or(cfg.d).unwrap_or_else(|| default_components(x.rows(), x.cols()));
    let model = fit_pca(&x, d)?;
    dataio::save_pca(&a.out, &model)?;
    note(out, a.out.display().to_string())
}

fn seen_exemplars(bundle: &DatasetBundle, pca: &crate::pca::PcaModel) -> Result<ClassTable> {
    let (x, labels) = seen_rows(bundle)?;
    compute_exemplars(&pca.project(&x)?, &labels)
}

fn cmd_exemplars(a: ExemplarsArgs, out: &mut dyn Write) -> Result<()> {
    load_config(&a.common)?;
    let bundle = DatasetBundle::load(&a.data)?;
    let pca = dataio::load_pca(&a.pca)?;
    let table = seen_exemplars(&bundle, &pca)?;
    dataio::save_class_table(&a.out, &table, &bundle.index)?;
    note(out, a.out.display().to_string())
}

fn cmd_train(a: TrainArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let hyper = resolve_hyper(&a.hyper, &cfg);
    let bundle = DatasetBundle::load(&a.data)?;
    let pca = dataio::load_pca(&a.pca)?;
    let table = seen_exemplars(&bundle, &pca)?;
    let sem = bundle.semantics.select(&table.class_ids)?;
    let a_seen = normalize_semantics(&sem.values)?;
    let predictor = train_predictor(&a_seen, &table, &hyper.params(&sem)?, &hyper.solver)?;
    dataio::save_predictor(&a.out, &predictor)?;
    note(out, a.out.display().to_string())
}

fn class_selection(bundle: &DatasetBundle, which: &str) -> Result<Vec<ClassId>> {
    let mut classes = match which {
        "unseen" => bundle.unseen.clone(),
        "seen" => bundle.seen.clone(),
        "all" => bundle.semantics.class_ids.clone(),
        other => return Err(ExemError::domain(format!("--classes must be unseen, seen or all, got {other:?}"))),
    };
    classes.sort_unstable();
    Ok(classes)
}

fn cmd_predict(a: PredictArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let bundle = DatasetBundle::load(&a.data)?;
    let predictor = dataio::load_predictor(&a.predictor)?;
    let classes = class_selection(&bundle, &a.classes)?;
    let predict = |classes: &[ClassId]| -> Result<ClassTable> {
        let sem = normalize_semantics(&bundle.semantics.select(classes)?.values)?;
        predict_exemplars(&predictor, &sem, classes)
    };
    let table = predict(&classes)?;
    dataio::save_class_table(&a.out, &table, &bundle.index)?;
    if let Some(path) = &a.similarity_out {
        let bases = predict(&bundle.seen)?;
        let scale = a.scale.or(cfg.scale).unwrap_or(1.0);
        let sim = exemplar_similarity(&table, &bases, scale)?;
        let sim = ClassTable::new(table.class_ids.clone(), sim)?;
        dataio::save_class_table(path, &sim, &bundle.index)?;
    }
    note(out, a.out.display().to_string())
}

/// Unseen classes, optionally restricted by hop distance to the seen classes.
fn label_space(bundle: &DatasetBundle, max_hops: Option<u32>) -> Result<Vec<ClassId>> {
    match max_hops {
        None => Ok(bundle.unseen.clone()),
        Some(h) => {
            let graph = bundle
                .hierarchy
                .as_ref()
                .ok_or_else(|| ExemError::domain("--max-hops needs a hierarchy.tsv in the dataset"))?;
            let subset = hop_subset(graph, &bundle.seen, &bundle.unseen, h)?;
            if subset.is_empty() {
                return Err(ExemError::domain(format!("no unseen class lies within {h} hops of a seen class")));
            }
            Ok(subset)
        }
    }
}

fn cmd_classify(a: ClassifyArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    let rank = resolve_rank(&a.rank, cfg.rank());
    let bundle = DatasetBundle::load(&a.data)?;
    let pca = dataio::load_pca(&a.pca)?;
    let predictor = dataio::load_predictor(&a.predictor)?;
    let (x, labels) = seen_rows(&bundle)?;
    let sigma = intra_class_std(&pca.project(&x)?, &labels)?;
    let model = ZslModel {
        seen_exemplars: compute_exemplars(&pca.project(&x)?, &labels)?,
        pca,
        predictor,
        sigma,
    };
    let classes = label_space(&bundle, rank.max_hops)?;
    let data = ZslData::new(&bundle.features, &bundle.labels, &bundle.semantics)?;
    let k = rank.ks.iter().copied().max().unwrap_or(1);
    let preds = predict_unseen(&model, &data, &classes, rank.mode, k)?;
    dataio::write_predictions(&a.out, &preds.rows, &preds.truth, &preds.ranked, &bundle.index)?;
    note(out, a.out.display().to_string())
}

/// Hierarchical ground truth for the given label space, if the dataset has one.
fn ground_truth<'a>(bundle: &'a DatasetBundle, candidates: &'a [ClassId]) -> Option<GroundTruth<'a>> {
    match (&bundle.gt_lists, &bundle.hierarchy) {
        (Some(lists), _) => Some(GroundTruth::Lists(lists)),
        (None, Some(graph)) => Some(GroundTruth::Hierarchy { graph, candidates }),
        (None, None) => None,
    }
}

fn cmd_eval(a: EvalArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    let ks = a
        .k
        .or(cfg.k.take().map(KList::into_vec))
        .unwrap_or_else(|| DEFAULT_KS.to_vec());
    let bundle = DatasetBundle::load(&a.data)?;
    let (_, truth, ranked) = dataio::read_predictions(&a.preds, &bundle.index)?;
    if truth.is_empty() {
        return Err(ExemError::Format {
            path: a.preds.clone(),
            msg: "no predictions".into(),
        });
    }
    let mut candidates: Vec<ClassId> = ranked.iter().flatten().chain(&truth).copied().collect();
    candidates.sort_unstable();
    candidates.dedup();
    let gt = ground_truth(&bundle, &candidates);
    let report = EvalReport::compute(&ranked, &truth, &ks, gt.as_ref())?.rounded();
    emit_json(out, &report, None)
}

#[derive(Serialize)]
struct CvSummary {
    lambda: f64,
    nu: f64,
    gamma: f64,
    d: usize,
    score: f64,
    grid_size: usize,
    folds: usize,
}

fn cmd_cv(a: CvArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = load_config(&a.common)?;
    let bundle = DatasetBundle::load(&a.data)?;
    let seed = a.common.seed.or(cfg.seed).unwrap_or(0);
    let mode = a.mode.or(cfg.mode).unwrap_or(DistanceMode::Plain);
    let cv = resolve_cv(&a.grid, &a.hyper, &cfg, &bundle, seed, mode)?;
    let data = ZslData::new(&bundle.features, &bundle.labels, &bundle.semantics)?;
    let result = grid_search(&data, &bundle.seen, &cv)?;
    if let Some(path) = &a.table_out {
        dataio::write_cv_table(path, &result.table)?;
    }
    emit_json(
        out,
        &CvSummary {
            lambda: result.best.lambda,
            nu: result.best.nu,
            gamma: result.best.gamma,
            d: result.best.d,
            score: (result.best_score * 1e4).round() / 1e4,
            grid_size: result.mean_scores.len(),
            folds: cv.n_folds,
        },
        None,
    )
}

#[derive(Serialize)]
struct PipelineReport {
    mode: DistanceMode,
    d: usize,
    lambda: f64,
    nu: f64,
    gamma: f64,
    seed: u64,
    tuned: bool,
    seen_classes: usize,
    unseen_classes: usize,
    report: EvalReport,
}

fn cmd_pipeline(a: PipelineArgs, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(&a.common)?;
    let rank = resolve_rank(&a.rank, cfg.rank());
    let hyper = resolve_hyper(&a.hyper, &cfg);
    let seed = a.common.seed.or(cfg.seed).unwrap_or(0);
    let bundle = DatasetBundle::load(&a.data)?;
    let data = ZslData::new(&bundle.features, &bundle.labels, &bundle.semantics)?;

    let mut pc = PipelineConfig::new(hyper.params(&bundle.semantics.select(&bundle.seen)?)?);
    pc.d = hyper.d;
    pc.mode = rank.mode;
    pc.solver = hyper.solver;
    if a.tune {
        let cv = resolve_cv(&a.grid, &a.hyper, &cfg, &bundle, seed, rank.mode)?;
        let best = grid_search(&data, &bundle.seen, &cv)?.best;
        pc.hyper = best.hyper()?;
        pc.d = Some(best.d);
    }
    let (x, _) = seen_rows(&bundle)?;
    let d = pc
        .d
        .unwrap_or_else(|| default_components(x.rows(), x.cols()))
        .min(x.rows() - 1)
        .min(x.cols())
        .max(1);
    pc.d = Some(d);

    let model = fit(&data, &bundle.seen, &pc)?;
    let classes = label_space(&bundle, rank.max_hops)?;
    let k = rank.ks.iter().copied().max().unwrap_or(1);
    let preds = predict_unseen(&model, &data, &classes, rank.mode, k)?;
    let gt = ground_truth(&bundle, &classes);
    let report = EvalReport::compute(&preds.ranked, &preds.truth, &rank.ks, gt.as_ref())?.rounded();
    emit_json(
        out,
        &PipelineReport {
            mode: rank.mode,
            d,
            lambda: pc.hyper.lambda,
            nu: pc.hyper.nu,
            gamma: pc.hyper.kernel.gamma,
            seed,
            tuned: a.tune,
            seen_classes: bundle.seen.len(),
            unseen_classes: classes.len(),
            report,
        },
        a.out.as_deref(),
    )
}

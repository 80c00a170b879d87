//! File formats and dataset loading.
//!
//! Matrices are stored either as CSV (header `dim_0,dim_1,…`, one row per
//! line) or in a small binary container:
//!
//! ```text
//! b"EXEM" | u32 version = 1 | u64 rows | u64 cols | rows·cols × f32   (little-endian)
//! ```
//!
//! Trained predictors and PCA models use their own containers (magic
//! `EXPR` / `EXPC`, version 1) holding `f64` values so that a saved model
//! reproduces its predictions bit for bit.
//!
//! Class ids are strings in every file; [`ClassIndex`] interns them into
//! dense [`ClassId`]s in sorted name order.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{ExemError, Result};
use crate::eval::{GroundTruthLists, HierarchyGraph};
use crate::exemplar::{ClassId, ClassTable, ExemplarPredictor};
use crate::numeric::Matrix;
use crate::pca::PcaModel;
use crate::svr::{KernelParams, SvrHyperParams, SvrModel};

const MATRIX_MAGIC: &[u8; 4] = b"EXEM";
const PREDICTOR_MAGIC: &[u8; 4] = b"EXPR";
const PCA_MAGIC: &[u8; 4] = b"EXPC";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Bin,
}

impl MatrixFormat {
    /// `.bin` → binary, anything else → CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => MatrixFormat::Bin,
            _ => MatrixFormat::Csv,
        }
    }
}

impl std::str::FromStr for MatrixFormat {
    type Err = ExemError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(MatrixFormat::Csv),
            "bin" => Ok(MatrixFormat::Bin),
            other => Err(ExemError::domain(format!("unknown matrix format {other:?}"))),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExemError + '_ {
    move |source| ExemError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(io_err(path))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn parse_err(path: &Path, location: impl Into<String>, msg: impl Into<String>) -> ExemError {
    ExemError::Parse {
        path: path.to_path_buf(),
        location: location.into(),
        msg: msg.into(),
    }
}

fn format_err(path: &Path, msg: impl Into<String>) -> ExemError {
    ExemError::Format {
        path: path.to_path_buf(),
        msg: msg.into(),
    }
}

// ---------------------------------------------------------------------------
// matrices

pub fn load_matrix(path: &Path, format: MatrixFormat) -> Result<Matrix> {
    match format {
        MatrixFormat::Csv => load_matrix_csv(path),
        MatrixFormat::Bin => decode_matrix_bin(path, &read_bytes(path)?),
    }
}

pub fn save_matrix(path: &Path, m: &Matrix, format: MatrixFormat) -> Result<()> {
    match format {
        MatrixFormat::Csv => write_bytes(path, encode_matrix_csv(m, None).as_bytes()),
        MatrixFormat::Bin => write_bytes(path, &encode_matrix_bin(path, m)?),
    }
}

fn csv_header(cols: usize, id_column: Option<&str>) -> String {
    let mut fields: Vec<String> = id_column.map(str::to_string).into_iter().collect();
    fields.extend((0..cols).map(|j| format!("dim_{j}")));
    fields.join(",")
}

fn encode_matrix_csv(m: &Matrix, ids: Option<(&str, &[String])>) -> String {
    let mut out = csv_header(m.cols(), ids.map(|(h, _)| h));
    out.push('\n');
    for (i, row) in m.row_iter().enumerate() {
        let mut fields: Vec<String> = Vec::with_capacity(row.len() + 1);
        if let Some((_, names)) = ids {
            fields.push(names[i].clone());
        }
        fields.extend(row.iter().map(|v| v.to_string()));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Reads a CSV with the `dim_*` header, optionally preceded by one id column.
fn read_csv_rows(path: &Path, id_column: bool) -> Result<(Vec<String>, Matrix)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => match e.into_kind() {
                csv::ErrorKind::Io(source) => ExemError::Io {
                    path: path.to_path_buf(),
                    source,
                },
                _ => unreachable!(),
            },
            _ => parse_err(path, "line 1", e.to_string()),
        })?;
    let header = reader
        .headers()
        .map_err(|e| parse_err(path, "line 1", e.to_string()))?
        .clone();
    let offset = usize::from(id_column);
    if header.len() < offset {
        return Err(parse_err(path, "line 1", "missing header"));
    }
    for (j, name) in header.iter().skip(offset).enumerate() {
        if name != format!("dim_{j}") {
            return Err(parse_err(path, "line 1", format!("expected header field dim_{j}, found {name:?}")));
        }
    }
    let cols = header.len() - offset;
    let mut ids = Vec::new();
    let mut data = Vec::new();
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, format!("line {line}"), e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != cols + offset {
            return Err(parse_err(
                path,
                format!("line {line}"),
                format!("expected {} fields, found {}", cols + offset, record.len()),
            ));
        }
        if id_column {
            ids.push(record[0].to_string());
        }
        for (j, field) in record.iter().skip(offset).enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(path, format!("line {line}, column {}", j + offset + 1), format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, format!("line {line}, column {}", j + offset + 1), "non-finite value"));
            }
            data.push(v);
        }
        rows += 1;
    }
    Ok((ids, Matrix::new(rows, cols, data)?))
}

fn load_matrix_csv(path: &Path) -> Result<Matrix> {
    read_csv_rows(path, false).map(|(_, m)| m)
}

fn encode_matrix_bin(path: &Path, m: &Matrix) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(24 + 4 * m.as_slice().len());
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for (i, &v) in m.as_slice().iter().enumerate() {
        let narrowed = v as f32;
        if !narrowed.is_finite() {
            return Err(format_err(path, format!("value {v} at index {i} does not fit in 32-bit float")));
        }
        out.extend_from_slice(&narrowed.to_le_bytes());
    }
    Ok(out)
}

/// Little-endian cursor that reports truncation with the byte offset.
struct ByteReader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn new(path: &'a Path, bytes: &'a [u8]) -> Self {
        ByteReader { path, bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(parse_err(
                self.path,
                format!("offset {}", self.pos),
                format!("truncated: needed {n} more bytes, {} left", self.bytes.len() - self.pos),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let got = self.take(4)?;
        if got != magic {
            return Err(format_err(
                self.path,
                format!(
                    "bad magic {:?}, expected {:?}",
                    String::from_utf8_lossy(got),
                    String::from_utf8_lossy(magic)
                ),
            ));
        }
        let version = self.u32()?;
        if version != FORMAT_VERSION {
            return Err(format_err(
                self.path,
                format!("unsupported format version {version} (this build reads version {FORMAT_VERSION})"),
            ));
        }
        Ok(())
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn count(&mut self) -> Result<usize> {
        let at = self.pos;
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| parse_err(self.path, format!("offset {at}"), "count overflows usize"))
    }

    fn f64(&mut self) -> Result<f64> {
        let at = self.pos;
        let v = f64::from_le_bytes(self.take(8)?.try_into().unwrap());
        if !v.is_finite() {
            return Err(parse_err(self.path, format!("offset {at}"), "non-finite value"));
        }
        Ok(v)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        self.check_remaining(n, 8)?;
        (0..n).map(|_| self.f64()).collect()
    }

    fn check_remaining(&self, n: usize, width: usize) -> Result<()> {
        let need = n.checked_mul(width);
        match need {
            Some(need) if need <= self.bytes.len() - self.pos => Ok(()),
            _ => Err(parse_err(
                self.path,
                format!("offset {}", self.pos),
                format!("truncated: header announces {n} values, {} bytes left", self.bytes.len() - self.pos),
            )),
        }
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(parse_err(
                self.path,
                format!("offset {}", self.pos),
                format!("{} trailing bytes", self.bytes.len() - self.pos),
            ));
        }
        Ok(())
    }
}

fn decode_matrix_bin(path: &Path, bytes: &[u8]) -> Result<Matrix> {
    let mut r = ByteReader::new(path, bytes);
    r.header(MATRIX_MAGIC)?;
    let rows = r.count()?;
    let cols = r.count()?;
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| parse_err(path, "offset 8", "shape overflows"))?;
    r.check_remaining(n, 4)?;
    let mut data = Vec::with_capacity(n);
    for _ in 0..n {
        let at = r.pos;
        let v = f32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if !v.is_finite() {
            return Err(parse_err(path, format!("offset {at}"), "non-finite value"));
        }
        data.push(f64::from(v));
    }
    r.finish()?;
    Matrix::new(rows, cols, data)
}

// ---------------------------------------------------------------------------
// class ids

/// Sorted, deduplicated class names; the position of a name is its [`ClassId`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassIndex {
    names: Vec<String>,
    ids: HashMap<String, ClassId>,
}

impl ClassIndex {
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = names.into_iter().map(Into::into).collect();
        let names: Vec<String> = set.into_iter().collect();
        let ids = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as ClassId))
            .collect();
        ClassIndex { names, ids }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<ClassId> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: ClassId) -> &str {
        &self.names[id as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    fn lookup(&self, path: &Path, line: usize, name: &str) -> Result<ClassId> {
        self.id(name)
            .ok_or_else(|| parse_err(path, format!("line {line}"), format!("unknown class id {name:?}")))
    }
}

/// One class id per non-empty line.
pub fn read_id_list(path: &Path) -> Result<Vec<String>> {
    Ok(read_text(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

pub fn write_id_list(path: &Path, ids: &[String]) -> Result<()> {
    let mut s = ids.join("\n");
    s.push('\n');
    write_bytes(path, s.as_bytes())
}

/// CSV with a leading `class` column followed by `dim_*` columns.
pub fn load_class_table_names(path: &Path) -> Result<(Vec<String>, Matrix)> {
    read_csv_rows(path, true)
}

pub fn save_class_table(path: &Path, table: &ClassTable, index: &ClassIndex) -> Result<()> {
    let names: Vec<String> = table.class_ids.iter().map(|c| index.name(*c).to_string()).collect();
    write_bytes(path, encode_matrix_csv(&table.values, Some(("class", &names))).as_bytes())
}

pub fn load_class_table(path: &Path, index: &ClassIndex) -> Result<ClassTable> {
    let (names, values) = load_class_table_names(path)?;
    let ids = names
        .iter()
        .enumerate()
        .map(|(i, n)| index.lookup(path, i + 2, n))
        .collect::<Result<Vec<_>>>()?;
    ClassTable::new(ids, values)
}

// ---------------------------------------------------------------------------
// hierarchy and ground-truth lists

/// `child<TAB>parent` pairs, one per line.
pub fn read_hierarchy_edges(path: &Path) -> Result<Vec<(String, String)>> {
    let mut edges = Vec::new();
    for (i, line) in read_text(path)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(c), Some(p), None) if !c.trim().is_empty() && !p.trim().is_empty() => {
                edges.push((c.trim().to_string(), p.trim().to_string()));
            }
            _ => {
                return Err(parse_err(path, format!("line {}", i + 1), "expected child<TAB>parent"));
            }
        }
    }
    Ok(edges)
}

pub fn build_hierarchy(edges: &[(String, String)], index: &ClassIndex) -> Result<HierarchyGraph> {
    let ids = edges
        .iter()
        .map(|(c, p)| {
            let get = |n: &str| index.id(n).ok_or_else(|| ExemError::domain(format!("unknown hierarchy node {n:?}")));
            Ok((get(c)?, get(p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    HierarchyGraph::new(index.len(), ids)
}

pub fn write_hierarchy(path: &Path, graph: &HierarchyGraph, index: &ClassIndex) -> Result<()> {
    let mut s = String::new();
    for (c, p) in graph.edges() {
        s.push_str(&format!("{}\t{}\n", index.name(*c), index.name(*p)));
    }
    write_bytes(path, s.as_bytes())
}

/// `class<TAB>k<TAB>id,id,…` lines.
pub fn read_ground_truth_lists(path: &Path, index: &ClassIndex) -> Result<GroundTruthLists> {
    let mut lists = GroundTruthLists::new();
    for (i, line) in read_text(path)?.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 3 {
            return Err(parse_err(path, format!("line {lineno}"), "expected class<TAB>k<TAB>ids"));
        }
        let class = index.lookup(path, lineno, parts[0].trim())?;
        let k: usize = parts[1]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, format!("line {lineno}"), format!("bad k {:?}", parts[1])))?;
        let ids = parts[2]
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|n| index.lookup(path, lineno, n))
            .collect::<Result<Vec<_>>>()?;
        lists.insert(class, k, ids);
    }
    Ok(lists)
}

// ---------------------------------------------------------------------------
// model containers

fn put_u64(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u64).to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Layout: magic, version, `S`, semantic dim, output dim, λ, ν, γ, the
/// `S × dim` training points, then per regressor its bias, ε, solver
/// iteration count and `S` coefficients. All numbers little-endian `f64`
/// except counts (`u64`).
pub fn encode_predictor(p: &ExemplarPredictor) -> Vec<u8> {
    let points = p.train_points();
    let s = points.rows();
    let mut out = Vec::with_capacity(64 + 8 * (points.as_slice().len() + p.models.len() * (s + 3)));
    out.extend_from_slice(PREDICTOR_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_u64(&mut out, s);
    put_u64(&mut out, p.semantic_dim);
    put_u64(&mut out, p.output_dim());
    put_f64s(&mut out, &[p.hyper.lambda, p.hyper.nu, p.hyper.kernel.gamma]);
    put_f64s(&mut out, points.as_slice());
    for m in &p.models {
        put_f64s(&mut out, &[m.bias, m.epsilon]);
        put_u64(&mut out, m.iterations);
        put_f64s(&mut out, &m.beta);
    }
    out
}

pub fn decode_predictor(path: &Path, bytes: &[u8]) -> Result<ExemplarPredictor> {
    let mut r = ByteReader::new(path, bytes);
    r.header(PREDICTOR_MAGIC)?;
    let s = r.count()?;
    let semantic_dim = r.count()?;
    let d = r.count()?;
    let (lambda, nu, gamma) = (r.f64()?, r.f64()?, r.f64()?);
    let hyper = SvrHyperParams::new(lambda, nu, gamma).map_err(|e| format_err(path, e.to_string()))?;
    let n_points = s
        .checked_mul(semantic_dim)
        .ok_or_else(|| format_err(path, "shape overflows"))?;
    let points = Arc::new(Matrix::new(s, semantic_dim, r.f64s(n_points)?)?);
    let mut models = Vec::with_capacity(d.min(1 << 20));
    for _ in 0..d {
        let bias = r.f64()?;
        let epsilon = r.f64()?;
        let iterations = r.count()?;
        let beta = r.f64s(s)?;
        models.push(SvrModel {
            train_points: Arc::clone(&points),
            beta,
            bias,
            epsilon,
            kernel: KernelParams { gamma },
            iterations,
        });
    }
    r.finish()?;
    if models.is_empty() {
        return Err(format_err(path, "predictor has no regressors"));
    }
    Ok(ExemplarPredictor {
        models,
        hyper,
        semantic_dim,
    })
}

pub fn save_predictor(path: &Path, p: &ExemplarPredictor) -> Result<()> {
    write_bytes(path, &encode_predictor(p))
}

pub fn load_predictor(path: &Path) -> Result<ExemplarPredictor> {
    decode_predictor(path, &read_bytes(path)?)
}

pub fn encode_pca(model: &PcaModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(PCA_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_u64(&mut out, model.input_dim());
    put_u64(&mut out, model.output_dim());
    put_f64s(&mut out, &model.mean);
    put_f64s(&mut out, &model.eigenvalues);
    put_f64s(&mut out, model.projection.as_slice());
    out
}

pub fn decode_pca(path: &Path, bytes: &[u8]) -> Result<PcaModel> {
    let mut r = ByteReader::new(path, bytes);
    r.header(PCA_MAGIC)?;
    let dim = r.count()?;
    let d = r.count()?;
    let mean = r.f64s(dim)?;
    let eigenvalues = r.f64s(d)?;
    let n = d.checked_mul(dim).ok_or_else(|| format_err(path, "shape overflows"))?;
    let projection = Matrix::new(d, dim, r.f64s(n)?)?;
    r.finish()?;
    Ok(PcaModel {
        mean,
        projection,
        eigenvalues,
    })
}

pub fn save_pca(path: &Path, model: &PcaModel) -> Result<()> {
    write_bytes(path, &encode_pca(model))
}

pub fn load_pca(path: &Path) -> Result<PcaModel> {
    decode_pca(path, &read_bytes(path)?)
}

// ---------------------------------------------------------------------------
// dataset bundle

/// A dataset directory:
///
/// | file | content |
/// |---|---|
/// | `features.bin` or `features.csv` | one row per sample |
/// | `labels.txt` | class id per sample |
/// | `semantics.csv` | `class,dim_0,…` one row per class |
/// | `seen.txt`, `unseen.txt` | class ids, one per line |
/// | `hierarchy.tsv` (optional) | `child<TAB>parent` edges |
/// | `gt_lists.tsv` (optional) | precomputed hierarchical ground-truth lists |
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub root: PathBuf,
    pub index: ClassIndex,
    pub features: Matrix,
    pub labels: Vec<ClassId>,
    pub semantics: ClassTable,
    pub seen: Vec<ClassId>,
    pub unseen: Vec<ClassId>,
    pub hierarchy: Option<HierarchyGraph>,
    pub gt_lists: Option<GroundTruthLists>,
}

pub const FEATURES_BIN: &str = "features.bin";
pub const FEATURES_CSV: &str = "features.csv";
pub const LABELS: &str = "labels.txt";
pub const SEMANTICS: &str = "semantics.csv";
pub const SEEN: &str = "seen.txt";
pub const UNSEEN: &str = "unseen.txt";
pub const HIERARCHY: &str = "hierarchy.tsv";
pub const GT_LISTS: &str = "gt_lists.tsv";

fn require(path: PathBuf) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(ExemError::Io {
            path,
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
        })
    }
}

impl DatasetBundle {
    pub fn load(root: &Path) -> Result<Self> {
        let features_path = if root.join(FEATURES_BIN).exists() {
            root.join(FEATURES_BIN)
        } else {
            require(root.join(FEATURES_CSV))?
        };
        let labels_path = require(root.join(LABELS))?;
        let label_names = read_id_list(&labels_path)?;
        let (sem_names, sem_values) = load_class_table_names(&require(root.join(SEMANTICS))?)?;
        let seen_names = read_id_list(&require(root.join(SEEN))?)?;
        let unseen_names = read_id_list(&require(root.join(UNSEEN))?)?;
        let hier_path = root.join(HIERARCHY);
        let edges = if hier_path.exists() {
            Some(read_hierarchy_edges(&hier_path)?)
        } else {
            None
        };

        let mut universe: Vec<&str> = Vec::new();
        universe.extend(label_names.iter().map(String::as_str));
        universe.extend(sem_names.iter().map(String::as_str));
        universe.extend(seen_names.iter().map(String::as_str));
        universe.extend(unseen_names.iter().map(String::as_str));
        if let Some(edges) = &edges {
            for (c, p) in edges {
                universe.push(c);
                universe.push(p);
            }
        }
        let index = ClassIndex::new(universe);

        let features = load_matrix(&features_path, MatrixFormat::from_path(&features_path))?;
        if label_names.len() != features.rows() {
            return Err(format_err(
                &labels_path,
                format!("{} labels for {} feature rows", label_names.len(), features.rows()),
            ));
        }
        let to_ids = |names: &[String]| names.iter().map(|n| index.id(n).unwrap()).collect::<Vec<_>>();
        let labels = to_ids(&label_names);
        let semantics = ClassTable::new(to_ids(&sem_names), sem_values)
            .map_err(|e| format_err(&root.join(SEMANTICS), e.to_string()))?;
        let mut seen = to_ids(&seen_names);
        let mut unseen = to_ids(&unseen_names);
        seen.sort_unstable();
        seen.dedup();
        unseen.sort_unstable();
        unseen.dedup();

        if let Some(c) = seen.iter().find(|c| unseen.binary_search(c).is_ok()) {
            return Err(ExemError::domain(format!("class {:?} is both seen and unseen", index.name(*c))));
        }
        let with_semantics: BTreeSet<ClassId> = semantics.class_ids.iter().copied().collect();
        for &c in labels.iter().chain(&seen).chain(&unseen) {
            if !with_semantics.contains(&c) {
                return Err(ExemError::domain(format!(
                    "class {:?} has no semantic representation",
                    index.name(c)
                )));
            }
        }

        let hierarchy = edges.map(|e| build_hierarchy(&e, &index)).transpose()?;
        let gt_path = root.join(GT_LISTS);
        let gt_lists = if gt_path.exists() {
            Some(read_ground_truth_lists(&gt_path, &index)?)
        } else {
            None
        };

        Ok(DatasetBundle {
            root: root.to_path_buf(),
            index,
            features,
            labels,
            semantics,
            seen,
            unseen,
            hierarchy,
            gt_lists,
        })
    }

    pub fn names(&self, ids: &[ClassId]) -> Vec<String> {
        ids.iter().map(|c| self.index.name(*c).to_string()).collect()
    }
}

/// Writes a dataset directory readable by [`DatasetBundle::load`].
#[allow(clippy::too_many_arguments)]
pub fn write_dataset(
    root: &Path,
    index: &ClassIndex,
    features: &Matrix,
    format: MatrixFormat,
    labels: &[ClassId],
    semantics: &ClassTable,
    seen: &[ClassId],
    unseen: &[ClassId],
) -> Result<()> {
    fs::create_dir_all(root).map_err(io_err(root))?;
    let features_name = match format {
        MatrixFormat::Bin => FEATURES_BIN,
        MatrixFormat::Csv => FEATURES_CSV,
    };
    save_matrix(&root.join(features_name), features, format)?;
    let names = |ids: &[ClassId]| ids.iter().map(|c| index.name(*c).to_string()).collect::<Vec<_>>();
    write_id_list(&root.join(LABELS), &names(labels))?;
    save_class_table(&root.join(SEMANTICS), semantics, index)?;
    write_id_list(&root.join(SEEN), &names(seen))?;
    write_id_list(&root.join(UNSEEN), &names(unseen))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// predictions and CV tables

/// `row<TAB>truth<TAB>id,id,…` per test sample.
pub fn write_predictions(
    path: &Path,
    rows: &[usize],
    truth: &[ClassId],
    ranked: &[Vec<ClassId>],
    index: &ClassIndex,
) -> Result<()> {
    let mut s = String::new();
    for ((row, t), r) in rows.iter().zip(truth).zip(ranked) {
        let list: Vec<&str> = r.iter().map(|c| index.name(*c)).collect();
        s.push_str(&format!("{row}\t{}\t{}\n", index.name(*t), list.join(",")));
    }
    write_bytes(path, s.as_bytes())
}

pub type PredictionRecords = (Vec<usize>, Vec<ClassId>, Vec<Vec<ClassId>>);

pub fn read_predictions(path: &Path, index: &ClassIndex) -> Result<PredictionRecords> {
    let (mut rows, mut truth, mut ranked) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in read_text(path)?.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 3 {
            return Err(parse_err(path, format!("line {lineno}"), "expected row<TAB>truth<TAB>ranked ids"));
        }
        rows.push(
            parts[0]
                .trim()
                .parse()
                .map_err(|_| parse_err(path, format!("line {lineno}"), "bad row index"))?,
        );
        truth.push(index.lookup(path, lineno, parts[1].trim())?);
        ranked.push(
            parts[2]
                .split(',')
                .map(|n| index.lookup(path, lineno, n.trim()))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok((rows, truth, ranked))
}

pub fn write_cv_table(path: &Path, table: &[crate::zsl_cv::CvRow]) -> Result<()> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = std::io::BufWriter::new(file);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "grid_index,fold,lambda,nu,gamma,d,objective")?;
        for r in table {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.grid_index, r.fold, r.point.lambda, r.point.nu, r.point.gamma, r.point.d, r.objective
            )?;
        }
        w.flush()
    };
    emit().map_err(io_err(path))
}

//! File formats: logit tables and score tables as CSV, fitted models as
//! versioned JSON with provenance, search histories as CSV, and the
//! point-cloud dataset's binary clouds and calibration text files.
//!
//! All writers are deterministic: identical inputs produce byte-identical
//! files. Model timestamps honor `SOURCE_DATE_EPOCH` and default to 0
//! rather than sampling the clock.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::density::{KdeModel, NhModel};
use crate::error::{Error, Result};
use crate::inference::{BayesScorer, LogitSample, Mode};
use crate::metrics::EvalReport;
use crate::pointcloud::{CalibrationSet, Point, PointCloud};
use crate::scalar::Real;
use crate::tuner::GenerationStat;

/// Version stamp written into (and required from) model files.
pub const MODEL_FORMAT_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Logit tables (CSV)
// ---------------------------------------------------------------------------

/// A set of logit samples plus the class names that give the columns
/// meaning. Column `c` of every sample is class `class_names[c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitTable<T> {
    pub class_names: Vec<String>,
    pub samples: Vec<LogitSample<T>>,
}

impl<T> LogitTable<T> {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }
}

/// Read a logit table from CSV.
///
/// Expected header: `id,label,logit_<name>,...` with at least two logit
/// columns. The label field holds a class name (or an integer class
/// index); an empty label means unlabeled. Malformed rows are reported
/// with their 1-based line number.
pub fn read_logits<T: Real>(path: impl AsRef<Path>) -> Result<LogitTable<T>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let fields: Vec<&str> = header.iter().collect();
    if fields.len() < 4 || fields[0] != "id" || fields[1] != "label" {
        return Err(Error::parse(
            path,
            1,
            "header must be id,label,logit_<class>,... with at least two classes",
        ));
    }
    let mut class_names = Vec::new();
    for field in &fields[2..] {
        let name = field.strip_prefix("logit_").ok_or_else(|| {
            Error::parse(path, 1, format!("column {field:?} should be named logit_<class>"))
        })?;
        if name.is_empty() || class_names.iter().any(|n| n == name) {
            return Err(Error::parse(
                path,
                1,
                format!("empty or duplicate class column {field:?}"),
            ));
        }
        class_names.push(name.to_string());
    }

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 + class_names.len() {
            return Err(Error::parse(
                path,
                line,
                format!(
                    "expected {} fields, found {}",
                    2 + class_names.len(),
                    record.len()
                ),
            ));
        }
        let id = record[0].to_string();
        let label = parse_label(&record[1], &class_names)
            .map_err(|msg| Error::parse(path, line, msg))?;
        let mut logits = Vec::with_capacity(class_names.len());
        for (c, field) in record.iter().skip(2).enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| {
                Error::parse(path, line, format!("bad logit {field:?} for class {c}"))
            })?;
            if !value.is_finite() {
                return Err(Error::parse(
                    path,
                    line,
                    format!("non-finite logit {field:?} for class {c}"),
                ));
            }
            logits.push(T::cast(value));
        }
        samples.push(LogitSample { id, logits, label });
    }
    Ok(LogitTable {
        class_names,
        samples,
    })
}

/// Write a logit table as CSV, the inverse of [`read_logits`].
pub fn write_logits<T: Real>(table: &LogitTable<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend(table.class_names.iter().map(|n| format!("logit_{n}")));
    writer.write_record(&header).map_err(|e| csv_error(path, e))?;
    for sample in &table.samples {
        let mut record = Vec::with_capacity(2 + table.num_classes());
        record.push(sample.id.clone());
        record.push(label_name(sample.label, &table.class_names)?);
        if sample.logits.len() != table.num_classes() {
            return Err(Error::data(format!(
                "sample {:?} has {} logits for {} classes",
                sample.id,
                sample.logits.len(),
                table.num_classes()
            )));
        }
        record.extend(sample.logits.iter().map(|v| format!("{v}")));
        writer.write_record(&record).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn parse_label(field: &str, class_names: &[String]) -> std::result::Result<Option<usize>, String> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    if let Some(idx) = class_names.iter().position(|n| n == field) {
        return Ok(Some(idx));
    }
    if let Ok(idx) = field.parse::<usize>() {
        if idx < class_names.len() {
            return Ok(Some(idx));
        }
    }
    Err(format!(
        "unknown label {field:?}; expected one of {class_names:?} or an index below {}",
        class_names.len()
    ))
}

fn label_name(label: Option<usize>, class_names: &[String]) -> Result<String> {
    match label {
        None => Ok(String::new()),
        Some(idx) => class_names.get(idx).cloned().ok_or_else(|| {
            Error::data(format!("label {idx} outside the {} classes", class_names.len()))
        }),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!("is_io_error guarantees an Io kind"),
        }
    } else {
        Error::parse(path, line, e.to_string())
    }
}

// ---------------------------------------------------------------------------
// Score tables (CSV)
// ---------------------------------------------------------------------------

/// One scored sample: the decision plus the full score vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow<T> {
    pub id: String,
    pub label: Option<usize>,
    pub pred: usize,
    pub scores: Vec<T>,
}

/// Write scored decisions as CSV: `id,label,pred,score_<name>,...`.
/// Labels and predictions are written as class names.
pub fn write_scores<T: Real>(
    rows: &[ScoreRow<T>],
    class_names: &[String],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["id".to_string(), "label".to_string(), "pred".to_string()];
    header.extend(class_names.iter().map(|n| format!("score_{n}")));
    writer.write_record(&header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        let mut record = Vec::with_capacity(3 + class_names.len());
        record.push(row.id.clone());
        record.push(label_name(row.label, class_names)?);
        record.push(label_name(Some(row.pred), class_names)?);
        record.extend(row.scores.iter().map(|v| format!("{v}")));
        writer.write_record(&record).map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read decisions written by [`write_scores`], or any CSV with at least
/// `id,label,pred` columns. Score columns are optional; when present they
/// must match `class_names` in order.
pub fn read_scores<T: Real>(
    path: impl AsRef<Path>,
    class_names: &[String],
) -> Result<Vec<ScoreRow<T>>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let fields: Vec<&str> = header.iter().collect();
    if fields.len() < 3 || fields[0] != "id" || fields[1] != "label" || fields[2] != "pred" {
        return Err(Error::parse(
            path,
            1,
            "header must be id,label,pred[,score_<class>...]",
        ));
    }
    let has_scores = fields.len() > 3;
    if has_scores {
        let expected: Vec<String> = class_names.iter().map(|n| format!("score_{n}")).collect();
        let found: Vec<String> = fields[3..].iter().map(|s| s.to_string()).collect();
        if found != expected {
            return Err(Error::parse(
                path,
                1,
                format!("score columns {found:?} do not match classes {class_names:?}"),
            ));
        }
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        let id = record[0].to_string();
        let label = parse_label(&record[1], class_names)
            .map_err(|msg| Error::parse(path, line, msg))?;
        let pred = parse_label(&record[2], class_names)
            .map_err(|msg| Error::parse(path, line, msg))?
            .ok_or_else(|| Error::parse(path, line, "prediction field is empty"))?;
        let mut scores = Vec::new();
        if has_scores {
            for field in record.iter().skip(3) {
                let value: f64 = field.trim().parse().map_err(|_| {
                    Error::parse(path, line, format!("bad score {field:?}"))
                })?;
                scores.push(T::cast(value));
            }
        }
        rows.push(ScoreRow {
            id,
            label,
            pred,
            scores,
        });
    }
    Ok(rows)
}

/// Class names recovered from a score CSV's `score_<name>` columns, if any.
pub fn peek_score_class_names(path: impl AsRef<Path>) -> Result<Option<Vec<String>>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header = reader.headers().map_err(|e| csv_error(path, e))?;
    let names: Vec<String> = header
        .iter()
        .skip(3)
        .filter_map(|f| f.strip_prefix("score_").map(str::to_string))
        .collect();
    if names.is_empty() {
        Ok(None)
    } else {
        Ok(Some(names))
    }
}

// ---------------------------------------------------------------------------
// Provenance
// ---------------------------------------------------------------------------

/// Where an artifact came from: input digests, the seed, and a creation
/// time that is 0 unless `SOURCE_DATE_EPOCH` provides one, keeping
/// repeated runs byte-identical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub sources: Vec<SourceDigest>,
    pub seed: Option<u64>,
    pub created_unix: u64,
}

/// SHA-256 digest of one input file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceDigest {
    pub path: String,
    pub sha256: String,
}

impl Provenance {
    /// Provenance stamped with the reproducible timestamp convention.
    pub fn stamped(seed: Option<u64>) -> Self {
        let created_unix = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0);
        Provenance {
            sources: Vec::new(),
            seed,
            created_unix,
        }
    }

    /// Record `path` and its content digest as an input.
    pub fn add_source(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.sources.push(SourceDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(path)?,
        });
        Ok(())
    }
}

/// Hex SHA-256 of a file's contents.
pub fn sha256_hex(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = reader.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

// ---------------------------------------------------------------------------
// Model files (JSON)
// ---------------------------------------------------------------------------

/// A fitted scorer plus the metadata needed to use and trace it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact<T> {
    pub scorer: BayesScorer<T>,
    pub class_names: Vec<String>,
    pub provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct KdeRecord<T> {
    observations: Vec<T>,
    bandwidth: T,
}

#[derive(Serialize, Deserialize)]
struct NhRecord<T> {
    edges: Vec<T>,
    masses: Vec<T>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile<T> {
    format_version: u32,
    mode: Mode,
    class_names: Vec<String>,
    lambda: T,
    likelihoods: Vec<KdeRecord<T>>,
    priors: Option<Vec<NhRecord<T>>>,
    provenance: Provenance,
}

/// Save a model artifact as versioned JSON.
///
/// The encoding round-trips exactly: loading the file rebuilds a scorer
/// that produces bit-identical results.
pub fn save_model<T: Real + Serialize>(
    artifact: &ModelArtifact<T>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let scorer = &artifact.scorer;
    if artifact.class_names.len() != scorer.num_classes() {
        return Err(Error::data(format!(
            "{} class names for a {}-class scorer",
            artifact.class_names.len(),
            scorer.num_classes()
        )));
    }
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        mode: scorer.mode(),
        class_names: artifact.class_names.clone(),
        lambda: scorer.lambda(),
        likelihoods: scorer
            .likelihoods()
            .iter()
            .map(|m| KdeRecord {
                observations: m.observations().to_vec(),
                bandwidth: m.bandwidth(),
            })
            .collect(),
        priors: scorer.priors().map(|priors| {
            priors
                .iter()
                .map(|m| NhRecord {
                    edges: m.edges().to_vec(),
                    masses: m.masses().to_vec(),
                })
                .collect()
        }),
        provenance: artifact.provenance.clone(),
    };
    write_json(&file, path)
}

/// Load a model artifact, validating the format version and every model
/// invariant (ascending observations, mass normalization, shape
/// consistency). Corrupt files are rejected, not repaired.
pub fn load_model<T: Real + DeserializeOwned>(path: impl AsRef<Path>) -> Result<ModelArtifact<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile<T> = serde_json::from_str(&text)
        .map_err(|e| Error::model(path, format!("invalid JSON: {e}")))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::model(
            path,
            format!(
                "format version {} is not supported (expected {MODEL_FORMAT_VERSION})",
                file.format_version
            ),
        ));
    }
    if file.class_names.len() != file.likelihoods.len() {
        return Err(Error::model(
            path,
            format!(
                "{} class names for {} likelihood models",
                file.class_names.len(),
                file.likelihoods.len()
            ),
        ));
    }
    let as_model_error = |e: Error| match e {
        Error::InvalidData(msg) | Error::InvalidParameter(msg) => Error::model(path, msg),
        other => other,
    };
    let mut likelihoods = Vec::with_capacity(file.likelihoods.len());
    for record in file.likelihoods {
        likelihoods
            .push(KdeModel::from_parts(record.observations, record.bandwidth)
                .map_err(as_model_error)?);
    }
    let priors = match file.priors {
        None => None,
        Some(records) => {
            let mut models = Vec::with_capacity(records.len());
            for record in records {
                models.push(NhModel::from_parts(record.edges, record.masses)
                    .map_err(as_model_error)?);
            }
            Some(models)
        }
    };
    let scorer = BayesScorer::from_parts(file.mode, file.lambda, likelihoods, priors)
        .map_err(as_model_error)?;
    Ok(ModelArtifact {
        scorer,
        class_names: file.class_names,
        provenance: file.provenance,
    })
}

/// Serialize any value as pretty JSON with a trailing newline.
/// Identical values produce byte-identical files.
pub fn write_json<V: Serialize>(value: &V, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)
        .map_err(|e| Error::model(path, format!("serialization failed: {e}")))?;
    writer.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read any JSON value written by [`write_json`].
pub fn read_json<V: DeserializeOwned>(path: impl AsRef<Path>) -> Result<V> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::model(path, format!("invalid JSON: {e}")))
}

// ---------------------------------------------------------------------------
// Search history (CSV)
// ---------------------------------------------------------------------------

/// Write per-generation search statistics as CSV.
pub fn write_history<T: Real>(
    history: &[GenerationStat<T>],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    writer
        .write_record(["generation", "best_cost", "mean_cost"])
        .map_err(|e| csv_error(path, e))?;
    for stat in history {
        writer
            .write_record([
                stat.generation.to_string(),
                format!("{}", stat.best_cost),
                format!("{}", stat.mean_cost),
            ])
            .map_err(|e| csv_error(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

/// Fixed-width text rendering of an evaluation report.
pub fn render_eval_report<T: Real>(report: &EvalReport<T>, class_names: &[String]) -> String {
    let name_width = class_names
        .iter()
        .map(|n| n.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let col = 12usize;
    let mut out = String::new();

    out.push_str(&format!("{:>width$}  ", "", width = name_width + 5));
    for name in class_names {
        out.push_str(&format!("{:>col$}", format!("pred {name}"), col = col.max(name.len() + 5)));
    }
    out.push('\n');
    for (c, row) in report.confusion.iter().enumerate() {
        out.push_str(&format!(
            "{:>width$}  ",
            format!("true {}", class_names[c]),
            width = name_width + 5
        ));
        for (name, count) in class_names.iter().zip(row) {
            out.push_str(&format!("{:>col$}", count, col = col.max(name.len() + 5)));
        }
        out.push('\n');
    }
    out.push('\n');

    out.push_str(&format!(
        "{:>width$}  {:>10}  {:>10}\n",
        "class",
        "fpr",
        "f1",
        width = name_width
    ));
    for (c, name) in class_names.iter().enumerate() {
        out.push_str(&format!(
            "{:>width$}  {:>10.6}  {:>10.6}\n",
            name,
            to_f64(report.fpr_per_class[c]),
            to_f64(report.f1_per_class[c]),
            width = name_width
        ));
    }
    out.push_str(&format!(
        "{:>width$}  {:>10.6}  {:>10.6}\n",
        "macro",
        to_f64(report.fpr_macro),
        to_f64(report.f1_macro),
        width = name_width
    ));
    out.push_str(&format!("cost {:.6}\n", to_f64(report.cost)));
    out
}

/// Side-by-side macro metrics for several scoring rules.
pub fn render_comparison<T: Real>(rows: &[(String, &EvalReport<T>)]) -> String {
    let name_width = rows.iter().map(|(n, _)| n.len()).max().unwrap_or(4).max(4);
    let mut out = format!(
        "{:<width$}  {:>10}  {:>10}  {:>10}\n",
        "rule",
        "fpr_macro",
        "f1_macro",
        "cost",
        width = name_width
    );
    for (name, report) in rows {
        out.push_str(&format!(
            "{:<width$}  {:>10.6}  {:>10.6}  {:>10.6}\n",
            name,
            to_f64(report.fpr_macro),
            to_f64(report.f1_macro),
            to_f64(report.cost),
            width = name_width
        ));
    }
    out
}

fn to_f64<T: Real>(v: T) -> f64 {
    v.to_f64().expect("metric fits f64")
}

// ---------------------------------------------------------------------------
// Point clouds (binary) and calibrations (text)
// ---------------------------------------------------------------------------

/// Read a binary point cloud: consecutive little-endian `f32` quadruples
/// `x, y, z, reflectance`.
pub fn read_point_cloud<T: Real>(path: impl AsRef<Path>) -> Result<PointCloud<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 16 != 0 {
        return Err(Error::data(format!(
            "{}: length {} is not a multiple of 16 bytes per point",
            path.display(),
            bytes.len()
        )));
    }
    let mut points = Vec::with_capacity(bytes.len() / 16);
    for (i, chunk) in bytes.chunks_exact(16).enumerate() {
        let mut vals = [0f32; 4];
        for (v, quad) in vals.iter_mut().zip(chunk.chunks_exact(4)) {
            *v = f32::from_le_bytes(quad.try_into().expect("4-byte chunk"));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::data(format!(
                "{}: point {i} has a non-finite coordinate",
                path.display()
            )));
        }
        points.push(Point::new(
            T::cast(vals[0] as f64),
            T::cast(vals[1] as f64),
            T::cast(vals[2] as f64),
            T::cast(vals[3] as f64),
        ));
    }
    Ok(PointCloud::new(points))
}

/// Write a point cloud in the binary quadruple format. Coordinates are
/// stored at single precision, matching the dataset encoding.
pub fn write_point_cloud<T: Real>(
    cloud: &PointCloud<T>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(cloud.len() * 16);
    for p in &cloud.points {
        for v in [p.x, p.y, p.z, p.reflectance] {
            let v32 = v.to_f32().unwrap_or(f32::NAN);
            if !v32.is_finite() {
                return Err(Error::data(format!(
                    "point coordinate {v} does not fit single precision"
                )));
            }
            bytes.extend_from_slice(&v32.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Read a calibration text file with `KEY: v0 v1 ...` lines.
///
/// Required keys: `P<camera>` (12 values), `R0_rect` or `R_rect`
/// (9 values), and `Tr_velo_to_cam` (12 values). Rotation blocks must be
/// orthonormal; [`CalibrationSet::new`] enforces that on assembly.
pub fn read_kitti_calibration<T: Real>(
    path: impl AsRef<Path>,
    camera: usize,
) -> Result<CalibrationSet<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;

    let mut entries: Vec<(String, Vec<f64>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line.split_once(':').ok_or_else(|| {
            Error::parse(path, (idx + 1) as u64, "expected `KEY: values...`")
        })?;
        let mut values = Vec::new();
        for token in rest.split_whitespace() {
            let v: f64 = token.parse().map_err(|_| {
                Error::parse(
                    path,
                    (idx + 1) as u64,
                    format!("bad number {token:?} under key {key:?}"),
                )
            })?;
            values.push(v);
        }
        entries.push((key.trim().to_string(), values));
    }

    let find = |names: &[String]| -> Option<&Vec<f64>> {
        entries
            .iter()
            .find(|(k, _)| names.iter().any(|n| k == n))
            .map(|(_, v)| v)
    };
    let require = |names: &[String], count: usize| -> Result<&Vec<f64>> {
        let values = find(names).ok_or_else(|| {
            Error::data(format!(
                "{}: missing calibration key {:?}",
                path.display(),
                names[0]
            ))
        })?;
        if values.len() != count {
            return Err(Error::data(format!(
                "{}: key {:?} has {} values, expected {count}",
                path.display(),
                names[0],
                values.len()
            )));
        }
        Ok(values)
    };

    let p = require(&[format!("P{camera}"), format!("P_rect_0{camera}")], 12)?;
    let mut p_rect = [[T::zero(); 4]; 3];
    for (i, row) in p_rect.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = T::cast(p[i * 4 + j]);
        }
    }

    let r = require(&["R0_rect".into(), "R_rect".into(), "R_rect_00".into()], 9)?;
    let mut r_rect = [[T::zero(); 3]; 3];
    for (i, row) in r_rect.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = T::cast(r[i * 3 + j]);
        }
    }

    let t = require(&["Tr_velo_to_cam".into(), "Tr_velo_cam".into()], 12)?;
    let mut t_lidar_cam = [[T::zero(); 4]; 3];
    for (i, row) in t_lidar_cam.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = T::cast(t[i * 4 + j]);
        }
    }

    CalibrationSet::new(p_rect, r_rect, t_lidar_cam)
}

//! End-to-end steps behind the command line: generate, train, evaluate,
//! explain and report. Each step reads and writes plain files in an output
//! directory so the steps can run as separate processes.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{
    clean, parse_csv, split, window, write_csv, CleaningReport, CsvOptions, DatasetError, DesignMatrix, FeatureSet,
    ScalerStats, SensorFrame, Split, SplitMode,
};
use crate::eval::{
    compare, evaluate, profile, ComparisonTable, EvalReport, IntervalMethod, Metrics, ModelColumn, ResourceReport,
};
use crate::explain::{
    background_rows, explain_rows, feature_groups, importance, Attribution, ExplainError, ImportanceReport,
};
use crate::manifest::{fingerprint, RunManifest, TOOL_VERSION};
use crate::models::{
    train, Checkpoint, CheckpointError, ModelError, ModelKind, ModelSpec, TrainConfig, CHECKPOINT_VERSION,
};
use crate::numerics::Matrix;
use crate::sensorsim::{generate, LatentGrowthModel, SimConfig, SimError};

pub const DEFAULT_TEST_RATIO: f64 = 0.2;
pub const DEFAULT_BACKGROUND: usize = 100;
pub const DEFAULT_EXPLAIN_SAMPLES: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("artifact mismatch: {0}")]
    Mismatch(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 2,
            PipelineError::Numeric(_) => 3,
            PipelineError::Mismatch(_) => 4,
            PipelineError::Io { .. } => 1,
        }
    }
}

impl From<ModelError> for PipelineError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Diverged { .. } | ModelError::Singular { .. } => PipelineError::Numeric(e.to_string()),
            ModelError::InvalidConfig(_) | ModelError::Underdetermined { .. } => PipelineError::Usage(e.to_string()),
            ModelError::Shape(_) => PipelineError::Mismatch(e.to_string()),
        }
    }
}

impl From<DatasetError> for PipelineError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Split(_) | DatasetError::Window { .. } => PipelineError::Usage(e.to_string()),
            _ => PipelineError::Mismatch(e.to_string()),
        }
    }
}

impl From<CheckpointError> for PipelineError {
    fn from(e: CheckpointError) -> Self {
        match e {
            CheckpointError::Io(source) => PipelineError::Io {
                context: "reading checkpoint".into(),
                source,
            },
            other => PipelineError::Mismatch(other.to_string()),
        }
    }
}

impl From<SimError> for PipelineError {
    fn from(e: SimError) -> Self {
        PipelineError::Usage(e.to_string())
    }
}

impl From<ExplainError> for PipelineError {
    fn from(e: ExplainError) -> Self {
        match e {
            ExplainError::Shape(_) => PipelineError::Mismatch(e.to_string()),
            other => PipelineError::Usage(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            PipelineError::Usage(format!("{} does not exist", path.display()))
        } else {
            PipelineError::Io {
                context: format!("reading {}", path.display()),
                source,
            }
        }
    })
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    fs::write(path, contents).map_err(|source| PipelineError::Io {
        context: format!("writing {}", path.display()),
        source,
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact serializes");
    s.push('\n');
    s
}

fn from_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| PipelineError::Mismatch(format!("{}: {e}", path.display())))
}

/// Prefixes a CSV body with the manifest hash comment line.
fn stamped_csv(manifest: &RunManifest, body: &str) -> String {
    format!("# manifest={}\n{body}", manifest.hash())
}

fn ensure_dir(dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        context: format!("creating {}", dir.display()),
        source,
    })
}

/// Where each artifact of a model lives inside an output directory.
pub fn artifact_path(out_dir: &Path, model: ModelKind, suffix: &str) -> PathBuf {
    out_dir.join(format!("{}.{suffix}", model.as_str()))
}

// ---------------------------------------------------------------- generate

#[derive(Clone, Debug, Serialize)]
pub struct GenSummary {
    pub rows: usize,
    pub csv_path: PathBuf,
    pub truth_path: PathBuf,
}

#[derive(Serialize)]
struct TruthArtifact<'a> {
    config: &'a SimConfig,
    model: &'a LatentGrowthModel,
}

/// Writes the synthetic dataset CSV and, next to it, `<stem>.truth.json`
/// with the generator settings and the latent growth model.
pub fn run_gen(config: &SimConfig, csv_path: &Path, decimal_comma: bool) -> Result<GenSummary, PipelineError> {
    let data = generate(config)?;
    if let Some(parent) = csv_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write(
        csv_path,
        write_csv(&data.frames, &data.height_names, CsvOptions { decimal_comma }),
    )?;
    let truth_path = csv_path.with_extension("truth.json");
    write(
        &truth_path,
        to_json(&TruthArtifact {
            config,
            model: &data.truth,
        }),
    )?;
    Ok(GenSummary {
        rows: data.frames.len(),
        csv_path: csv_path.to_path_buf(),
        truth_path,
    })
}

// ---------------------------------------------------------------- prepare

#[derive(Clone, Debug)]
pub struct LoadedData {
    pub frames: Vec<SensorFrame>,
    pub fingerprint: String,
    pub cleaning: CleaningReport,
}

pub fn load_dataset(path: &Path) -> Result<LoadedData, PipelineError> {
    let bytes = read(path)?;
    let parsed = parse_csv(&bytes)?;
    let (frames, cleaning) = clean(&parsed.records)?;
    if !cleaning.dropped_rows.is_empty() {
        log::info!("dropped {} of {} rows", cleaning.dropped_rows.len(), cleaning.rows_in);
    }
    Ok(LoadedData {
        frames,
        fingerprint: fingerprint(&bytes),
        cleaning,
    })
}

/// Columns each model sees: the sequence model also gets the calendar fields.
pub fn feature_set_for(kind: ModelKind) -> FeatureSet {
    match kind {
        ModelKind::Lr | ModelKind::Dnn => FeatureSet::Sensors,
        ModelKind::Lstm => FeatureSet::SensorsWithTime,
    }
}

/// Standardized model inputs with their split.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub feature_set: FeatureSet,
    pub feature_names: Vec<String>,
    pub scaler: ScalerStats,
    /// One row per sample (a flattened window for the sequence model).
    pub x: Matrix,
    pub y: Vec<f64>,
    pub split: Split,
    pub window_len: usize,
}

impl Prepared {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn rows(&self, idx: &[usize]) -> Result<(Matrix, Vec<f64>), PipelineError> {
        let x = self
            .x
            .select_rows(idx)
            .map_err(|e| PipelineError::Mismatch(e.to_string()))?;
        Ok((x, idx.iter().map(|&i| self.y[i]).collect()))
    }
}

/// Builds features and labels, windows them, splits the windows and
/// standardizes with statistics from the training rows (or `scaler`).
pub fn prepare(
    frames: &[SensorFrame],
    feature_set: FeatureSet,
    window_len: usize,
    test_ratio: f64,
    seed: u64,
    mode: SplitMode,
    scaler: Option<&ScalerStats>,
) -> Result<Prepared, PipelineError> {
    let design = DesignMatrix::from_frames(frames, feature_set)?;
    let raw = window(&design.x, design.labels(), window_len)?;
    let split = split(raw.len(), test_ratio, seed, mode)?;
    let scaler = match scaler {
        Some(s) => s.clone(),
        None => {
            let train_rows: Vec<usize> = split.train.iter().map(|&i| raw.end_rows[i]).collect();
            ScalerStats::fit(&design.x, &train_rows)
        }
    };
    let standardized = scaler
        .apply(&design.x)
        .map_err(|e| PipelineError::Mismatch(e.to_string()))?;
    let seq = window(&standardized, design.labels(), window_len)?;
    Ok(Prepared {
        feature_set,
        feature_names: design.feature_names,
        scaler,
        x: seq.windows,
        y: seq.targets,
        split,
        window_len,
    })
}

fn spec_window(spec: &ModelSpec) -> usize {
    match spec {
        ModelSpec::Lstm { window_len, .. } => *window_len,
        _ => 1,
    }
}

// ---------------------------------------------------------------- train

#[derive(Clone, Debug)]
pub struct TrainRequest {
    pub data: PathBuf,
    pub out_dir: PathBuf,
    pub spec: ModelSpec,
    pub train: TrainConfig,
    pub test_ratio: f64,
    pub split_mode: SplitMode,
    /// Use only the first N cleaned rows.
    pub max_rows: Option<usize>,
    pub config_path: Option<String>,
}

#[derive(Clone, Debug)]
pub struct TrainSummary {
    pub checkpoint: Checkpoint,
    pub loss_curve: Vec<f64>,
    pub resources: ResourceReport,
}

pub fn manifest_for(
    seed: u64,
    config_path: Option<String>,
    dataset_fingerprint: &str,
    model: ModelKind,
    out_dir: &Path,
) -> RunManifest {
    RunManifest {
        seed,
        config_path,
        dataset_fingerprint: dataset_fingerprint.to_string(),
        model: model.as_str().to_string(),
        output_dir: out_dir.display().to_string(),
        tool_version: TOOL_VERSION.to_string(),
    }
}

/// Prepares the data, trains under the profiler and writes the checkpoint,
/// loss curve and resource report.
pub fn run_train(req: &TrainRequest) -> Result<TrainSummary, PipelineError> {
    let kind = req.spec.kind();
    let mut data = load_dataset(&req.data)?;
    if let Some(n) = req.max_rows {
        data.frames.truncate(n);
    }
    ensure_dir(&req.out_dir)?;
    let manifest = manifest_for(
        req.train.seed,
        req.config_path.clone(),
        &data.fingerprint,
        kind,
        &req.out_dir,
    );
    let feature_set = feature_set_for(kind);
    let window_len = spec_window(&req.spec);

    let (outcome, resources) = profile(|| -> Result<_, PipelineError> {
        let prep = prepare(
            &data.frames,
            feature_set,
            window_len,
            req.test_ratio,
            req.train.seed,
            req.split_mode,
            None,
        )?;
        let (x, y) = prep.rows(&prep.split.train)?;
        let out = train(&req.spec, &x, &y, &prep.feature_names, &req.train)?;
        Ok((prep, out))
    });
    write(
        &artifact_path(&req.out_dir, kind, "resources.json"),
        to_json(&resources),
    )?;
    let (prep, out) = match outcome {
        Some(r) => r?,
        None => return Err(PipelineError::Numeric(format!("{kind} training panicked"))),
    };

    let checkpoint = Checkpoint {
        format_version: CHECKPOINT_VERSION,
        spec: req.spec.clone(),
        train_config: req.train.clone(),
        parameter_count: out.params.parameter_count(),
        feature_set,
        feature_names: prep.feature_names.clone(),
        scaler: prep.scaler.clone(),
        split_mode: req.split_mode,
        test_ratio: req.test_ratio,
        split_seed: req.train.seed,
        rows_used: data.frames.len(),
        params: out.params,
        manifest: manifest.clone(),
    };
    checkpoint.save(&artifact_path(&req.out_dir, kind, "ckpt.json"))?;

    let mut loss = String::from("epoch,loss\n");
    for (i, l) in out.loss_curve.iter().enumerate() {
        loss.push_str(&format!("{},{l}\n", i + 1));
    }
    write(
        &artifact_path(&req.out_dir, kind, "loss.csv"),
        stamped_csv(&manifest, &loss),
    )?;
    Ok(TrainSummary {
        checkpoint,
        loss_curve: out.loss_curve,
        resources,
    })
}

/// Reloads a checkpoint and the data it was trained on, checking the
/// dataset fingerprint.
fn restore(data_path: &Path, out_dir: &Path, model: ModelKind) -> Result<(Checkpoint, Prepared), PipelineError> {
    let ck = Checkpoint::load(&artifact_path(out_dir, model, "ckpt.json")).map_err(|e| match e {
        CheckpointError::Io(source) if source.kind() == std::io::ErrorKind::NotFound => PipelineError::Usage(format!(
            "no {model} checkpoint in {}; run train first",
            out_dir.display()
        )),
        other => other.into(),
    })?;
    let mut data = load_dataset(data_path)?;
    if data.fingerprint != ck.manifest.dataset_fingerprint {
        return Err(PipelineError::Mismatch(format!(
            "{} does not match the dataset the {model} checkpoint was trained on",
            data_path.display()
        )));
    }
    data.frames.truncate(ck.rows_used);
    let prep = prepare(
        &data.frames,
        ck.feature_set,
        spec_window(&ck.spec),
        ck.test_ratio,
        ck.split_seed,
        ck.split_mode,
        Some(&ck.scaler),
    )?;
    if prep.x.cols() != ck.params.input_width() {
        return Err(PipelineError::Mismatch(format!(
            "checkpoint expects {} input columns, data gives {}",
            ck.params.input_width(),
            prep.x.cols()
        )));
    }
    Ok((ck, prep))
}

// ---------------------------------------------------------------- eval

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalArtifact {
    pub manifest: RunManifest,
    pub manifest_hash: String,
    pub model: ModelKind,
    pub parameter_count: usize,
    #[serde(flatten)]
    pub report: EvalReport,
}

pub fn run_eval(
    data_path: &Path,
    out_dir: &Path,
    model: ModelKind,
    method: IntervalMethod,
) -> Result<EvalArtifact, PipelineError> {
    let (ck, prep) = restore(data_path, out_dir, model)?;
    let (x, y) = prep.rows(&prep.split.test)?;
    let predicted = ck
        .params
        .predict(&x)
        .map_err(|e| PipelineError::Mismatch(e.to_string()))?;
    if predicted.iter().any(|p| !p.is_finite()) {
        return Err(PipelineError::Numeric(format!(
            "{model} produced non-finite predictions"
        )));
    }
    let report = evaluate(&y, &predicted, method).map_err(|e| PipelineError::Usage(e.to_string()))?;
    let artifact = EvalArtifact {
        manifest_hash: ck.manifest.hash(),
        manifest: ck.manifest.clone(),
        model,
        parameter_count: ck.parameter_count,
        report,
    };
    write(&artifact_path(out_dir, model, "eval.json"), to_json(&artifact))?;
    write(
        &artifact_path(out_dir, model, "predictions.csv"),
        stamped_csv(&ck.manifest, &artifact.report.predictions_csv()),
    )?;
    write(
        &artifact_path(out_dir, model, "predictions.svg"),
        artifact
            .report
            .predictions_svg(&format!("{}: actual vs predicted growth", model.label()), 200),
    )?;
    Ok(artifact)
}

// ---------------------------------------------------------------- explain

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplainArtifact {
    pub manifest: RunManifest,
    pub manifest_hash: String,
    pub model: ModelKind,
    pub feature_names: Vec<String>,
    pub background_rows: Vec<usize>,
    pub max_efficiency_gap: f64,
    pub importance: ImportanceReport,
    pub attributions: Vec<Attribution>,
}

/// Exact Shapley attributions for the first `samples` test rows against
/// `background` seeded training rows.
pub fn run_explain(
    data_path: &Path,
    out_dir: &Path,
    model: ModelKind,
    samples: usize,
    background: usize,
) -> Result<ExplainArtifact, PipelineError> {
    if samples == 0 || background == 0 {
        return Err(PipelineError::Usage("samples and background must be positive".into()));
    }
    let (ck, prep) = restore(data_path, out_dir, model)?;
    let bg_rows = background_rows(&prep.split.train, background, ck.split_seed);
    let (bg, _) = prep.rows(&bg_rows)?;
    let test: Vec<usize> = prep.split.test.iter().take(samples).copied().collect();
    let groups = feature_groups(prep.n_features(), prep.window_len);
    let attributions = explain_rows(|m: &Matrix| ck.params.predict(m), &prep.x, &test, &bg, &groups)?;
    let max_efficiency_gap = attributions.iter().map(Attribution::efficiency_gap).fold(0.0, f64::max);
    let imp = importance(&attributions, &prep.feature_names)?;

    let artifact = ExplainArtifact {
        manifest_hash: ck.manifest.hash(),
        manifest: ck.manifest.clone(),
        model,
        feature_names: prep.feature_names.clone(),
        background_rows: bg_rows,
        max_efficiency_gap,
        importance: imp,
        attributions,
    };
    write(&artifact_path(out_dir, model, "shap.json"), to_json(&artifact))?;
    write(
        &artifact_path(out_dir, model, "importance.csv"),
        stamped_csv(&ck.manifest, &artifact.importance.to_csv()),
    )?;
    write(
        &artifact_path(out_dir, model, "importance.svg"),
        artifact
            .importance
            .to_svg(&format!("{}: mean |SHAP| per feature", model.label())),
    )?;
    Ok(artifact)
}

// ---------------------------------------------------------------- report

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub model: ModelKind,
    pub label: String,
    pub parameters: usize,
    pub metrics: Metrics,
    pub manifest: RunManifest,
    pub manifest_hash: String,
}

/// Deterministic part of the comparison: accuracy and parameter counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool_version: String,
    pub dataset_fingerprint: String,
    pub models: Vec<ReportEntry>,
}

#[derive(Clone, Debug)]
pub struct ReportSummary {
    pub report: Report,
    pub table: ComparisonTable,
}

/// Collects every evaluated model in `out_dir` into `report.json`
/// (deterministic), `resources.json` (measured) and `report.txt` (both).
pub fn run_report(out_dir: &Path) -> Result<ReportSummary, PipelineError> {
    let mut entries = Vec::new();
    let mut columns = Vec::new();
    let mut resources = BTreeMap::new();
    for kind in ModelKind::ALL {
        let path = artifact_path(out_dir, kind, "eval.json");
        if !path.exists() {
            continue;
        }
        let eval: EvalArtifact = from_json(&path)?;
        if eval.model != kind || eval.manifest_hash != eval.manifest.hash() {
            return Err(PipelineError::Mismatch(format!("{} is inconsistent", path.display())));
        }
        let res_path = artifact_path(out_dir, kind, "resources.json");
        let res: Option<ResourceReport> = if res_path.exists() {
            Some(from_json(&res_path)?)
        } else {
            None
        };
        if let Some(r) = &res {
            resources.insert(kind.as_str().to_string(), r.clone());
        }
        columns.push(ModelColumn {
            model: kind,
            parameters: eval.parameter_count,
            metrics: eval.report.metrics,
            resources: res,
        });
        entries.push(ReportEntry {
            model: kind,
            label: kind.label().to_string(),
            parameters: eval.parameter_count,
            metrics: eval.report.metrics,
            manifest_hash: eval.manifest_hash,
            manifest: eval.manifest,
        });
    }
    let Some(first) = entries.first() else {
        return Err(PipelineError::Usage(format!(
            "no evaluated models in {}; run eval first",
            out_dir.display()
        )));
    };
    let dataset_fingerprint = first.manifest.dataset_fingerprint.clone();
    if let Some(other) = entries
        .iter()
        .find(|e| e.manifest.dataset_fingerprint != dataset_fingerprint)
    {
        return Err(PipelineError::Mismatch(format!(
            "{} was evaluated on a different dataset than {}",
            other.model, first.model
        )));
    }
    let report = Report {
        tool_version: TOOL_VERSION.to_string(),
        dataset_fingerprint,
        models: entries,
    };
    let table = compare(columns);
    write(&out_dir.join("report.json"), to_json(&report))?;
    write(&out_dir.join("resources.json"), to_json(&resources))?;
    write(&out_dir.join("report.txt"), table.to_text())?;
    Ok(ReportSummary { report, table })
}

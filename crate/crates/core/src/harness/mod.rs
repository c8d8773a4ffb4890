//! Experiment orchestration: model specifications, per-zone training, the
//! closed-loop evaluation protocol and the benchmark grid.
//!
//! One reservoir is shared by every zone; each zone gets its own ridge
//! readout fitted on the pooled teacher-forced rows of its training samples.
//! Evaluation warms the reservoir up on the first observed days of each test
//! sample and then forecasts the rest in closed loop.

mod hybrid;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::creservoir::{ClassicalReservoir, EsnConfig, RecurrentSpec};
use crate::data::{
    self, apply_normalization, normalize, CorrosionDataset, DataError, Normalization, NormalizationScope,
    SynthConfig, Zone,
};
use crate::linalg::{ComplexMatrix, LinalgError};
use crate::qreservoir::{OnionQrcConfig, QrcLayerConfig, DEFAULT_A, DEFAULT_B};
use crate::quantum::QuantumError;
use crate::readout::{r2_score, ridge_fit_scalar, ReadoutError, RidgeModel, DEFAULT_ALPHA};
use crate::reservoir::{run_closed_loop, run_teacher_forced, FeatureMatrix, Reservoir, ReservoirError};
use crate::spectrum::SpectrumError;

pub use hybrid::HybridReservoir;

pub const ARTIFACT_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_WARMUP: usize = 3;
pub const DEFAULT_QUBITS: usize = 6;
/// Quantum layers in the hybrid model unless configured otherwise.
pub const DEFAULT_HYBRID_LAYERS: usize = 3;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Reservoir(#[from] ReservoirError),
    #[error(transparent)]
    Readout(#[from] ReadoutError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("horizon mismatch: {0}")]
    Horizon(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("json error: {0}")]
    Json(String),
}

impl Error {
    /// Stable category name for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Linalg(_) => "linalg",
            Error::Quantum(_) => "quantum",
            Error::Spectrum(_) => "spectrum",
            Error::Reservoir(_) => "reservoir",
            Error::Readout(_) => "readout",
            Error::Data(_) => "data",
            Error::Config(_) => "config",
            Error::Horizon(_) => "horizon",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// How many classical units stand in for `n` qubits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CrcSizeConvention {
    /// As many units as qubits.
    #[default]
    Qubits,
    /// `2^n` units, the Hilbert-space dimension.
    Exponential,
}

impl CrcSizeConvention {
    pub fn size(self, n_qubits: usize) -> usize {
        match self {
            CrcSizeConvention::Qubits => n_qubits,
            CrcSizeConvention::Exponential => 1 << n_qubits,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Per-zone mean training curve.
    Simple,
    Crc { reservoir: RecurrentSpec },
    Oqrc { onion: OnionQrcConfig },
    Ocqrc {
        layers: Vec<QrcLayerConfig>,
        esn: Option<RecurrentSpec>,
    },
}

impl ModelSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Simple => "simple",
            ModelSpec::Crc { .. } => "crc",
            ModelSpec::Oqrc { .. } => "oqrc",
            ModelSpec::Ocqrc { .. } => "ocqrc",
        }
    }
}

/// Short model names used on the command line: `simple`, `crc`, `oqrc<N>`,
/// `ocqrc` or `ocqrc<N>` (N quantum layers).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Simple,
    Crc,
    Oqrc(usize),
    Ocqrc(usize),
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let layers = |rest: &str, default: usize| -> Result<usize> {
            if rest.is_empty() {
                return Ok(default);
            }
            rest.parse::<usize>()
                .ok()
                .filter(|n| *n >= 1)
                .ok_or_else(|| Error::Config(format!("bad layer count in model name {s:?}")))
        };
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "simple" => Ok(ModelKind::Simple),
            "crc" => Ok(ModelKind::Crc),
            _ if lower.starts_with("ocqrc") => Ok(ModelKind::Ocqrc(layers(&lower[5..], DEFAULT_HYBRID_LAYERS)?)),
            _ if lower.starts_with("oqrc") => Ok(ModelKind::Oqrc(layers(&lower[4..], 1)?)),
            _ => Err(Error::Config(format!(
                "unknown model {s:?}; expected simple, crc, oqrc<N> or ocqrc[<N>]"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Simple => write!(f, "simple"),
            ModelKind::Crc => write!(f, "crc"),
            ModelKind::Oqrc(n) => write!(f, "oqrc{n}"),
            ModelKind::Ocqrc(n) => write!(f, "ocqrc{n}"),
        }
    }
}

/// Hyperparameters shared by the model builders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_qubits: usize,
    pub a: f64,
    pub b: f64,
    pub crc_size: CrcSizeConvention,
    pub seed: u64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            n_qubits: DEFAULT_QUBITS,
            a: DEFAULT_A,
            b: DEFAULT_B,
            crc_size: CrcSizeConvention::Qubits,
            seed: 0,
        }
    }
}

impl ModelKind {
    pub fn spec(self, p: &ModelParams) -> Result<ModelSpec> {
        let onion = |count| -> Result<OnionQrcConfig> {
            let layers = crate::qreservoir::b_ladder(p.b, count)
                .into_iter()
                .map(|b| QrcLayerConfig::new(p.n_qubits, p.a, b))
                .collect();
            Ok(OnionQrcConfig::new(layers)?)
        };
        let esn = || RecurrentSpec::Standard(EsnConfig::new(p.crc_size.size(p.n_qubits), p.seed));
        Ok(match self {
            ModelKind::Simple => ModelSpec::Simple,
            ModelKind::Crc => ModelSpec::Crc { reservoir: esn() },
            ModelKind::Oqrc(n) => ModelSpec::Oqrc { onion: onion(n)? },
            ModelKind::Ocqrc(n) => ModelSpec::Ocqrc {
                layers: onion(n)?.layers,
                esn: Some(esn()),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DataSource {
    Synth {
        seed: u64,
        #[serde(default)]
        params: SynthConfig,
    },
    Csv { path: PathBuf },
}

impl DataSource {
    pub fn load(&self) -> Result<CorrosionDataset> {
        Ok(match self {
            DataSource::Synth { seed, params } => data::synth_generate(*seed, params)?,
            DataSource::Csv { path } => data::load_csv(path)?,
        })
    }
}

fn default_warmup() -> usize {
    DEFAULT_WARMUP
}

fn default_alpha() -> f64 {
    DEFAULT_ALPHA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub model: ModelSpec,
    pub data: DataSource,
    #[serde(default = "default_warmup")]
    pub warmup: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub normalization: NormalizationScope,
}

impl ExperimentConfig {
    pub fn new(model: ModelSpec, data: DataSource) -> Self {
        Self {
            model,
            data,
            warmup: DEFAULT_WARMUP,
            alpha: DEFAULT_ALPHA,
            normalization: NormalizationScope::PerZone,
        }
    }

    /// Default synthetic corpus drawn from `seed`, model built from `kind`.
    pub fn synthetic(kind: ModelKind, params: &ModelParams, data_seed: u64) -> Result<Self> {
        Ok(Self::new(
            kind.spec(params)?,
            DataSource::Synth {
                seed: data_seed,
                params: SynthConfig::default(),
            },
        ))
    }

    pub fn validate(&self) -> Result<()> {
        if self.warmup == 0 {
            return Err(Error::Config("warm-up must be at least one day".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("ridge alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Real matrices stored by value so evaluation never regenerates them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsnMatrices {
    pub w_in: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneMeanCurve {
    pub zone: u32,
    pub mean_pitting: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneReadout {
    pub zone: u32,
    pub training_rows: usize,
    pub readout: RidgeModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedReadout {
    MeanCurve { zones: Vec<ZoneMeanCurve> },
    Ridge { zones: Vec<ZoneReadout> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub normalization: Normalization,
    pub esn: Option<EsnMatrices>,
    pub trained: TrainedReadout,
}

impl ModelArtifact {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Json(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let artifact: Self = serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
        if artifact.schema_version != ARTIFACT_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "model schema version {} is not supported (expected {ARTIFACT_SCHEMA_VERSION})",
                artifact.schema_version
            )));
        }
        Ok(artifact)
    }
}

/// A model's reservoir with every matrix materialized.
enum Runtime {
    Crc(ClassicalReservoir),
    Oqrc(OnionQrcConfig),
    Hybrid(HybridReservoir),
}

macro_rules! with_reservoir {
    ($runtime:expr, $r:ident => $body:expr) => {
        match $runtime {
            Runtime::Crc($r) => $body,
            Runtime::Oqrc($r) => $body,
            Runtime::Hybrid($r) => $body,
        }
    };
}

fn esn_from_matrices(spec: &RecurrentSpec, m: &EsnMatrices) -> Result<ClassicalReservoir> {
    let res = ClassicalReservoir {
        spec: spec.clone(),
        w_in: ComplexMatrix::from_real_rows(&m.w_in),
        w: ComplexMatrix::from_real_rows(&m.w),
    };
    let n = spec.size();
    if res.w.shape() != (n, n) || res.w_in.shape() != (n, crate::creservoir::INPUT_WIDTH) {
        return Err(Error::Config(format!("stored ESN matrices do not match reservoir size {n}")));
    }
    Ok(res)
}

fn matrices_of(res: &ClassicalReservoir) -> EsnMatrices {
    EsnMatrices {
        w_in: res.w_in.to_real_rows(),
        w: res.w.to_real_rows(),
    }
}

/// Builds the reservoir; stored matrices take precedence over regeneration.
fn materialize(spec: &ModelSpec, stored: Option<&EsnMatrices>) -> Result<Option<Runtime>> {
    let esn = |r: &RecurrentSpec| -> Result<ClassicalReservoir> {
        match stored {
            Some(m) => esn_from_matrices(r, m),
            None => Ok(ClassicalReservoir::build(r.clone())?),
        }
    };
    Ok(match spec {
        ModelSpec::Simple => None,
        ModelSpec::Crc { reservoir } => Some(Runtime::Crc(esn(reservoir)?)),
        ModelSpec::Oqrc { onion } => Some(Runtime::Oqrc(OnionQrcConfig::new(onion.layers.clone())?)),
        ModelSpec::Ocqrc { layers, esn: spec } => {
            let classical = spec.as_ref().map(esn).transpose()?;
            Some(Runtime::Hybrid(HybridReservoir::new(layers.clone(), classical)?))
        }
    })
}

fn runtime_esn(runtime: &Runtime) -> Option<&ClassicalReservoir> {
    match runtime {
        Runtime::Crc(r) => Some(r),
        Runtime::Hybrid(h) => h.esn.as_ref(),
        Runtime::Oqrc(_) => None,
    }
}

/// Pooled teacher-forced rows of one zone's training samples.
pub fn zone_training_rows<R: Reservoir>(reservoir: &R, zone: &Zone) -> Result<FeatureMatrix> {
    let mut pooled = FeatureMatrix {
        rows: Vec::new(),
        targets: Vec::new(),
    };
    for s in zone.train() {
        pooled.extend(run_teacher_forced(reservoir, &s.series()?)?);
    }
    Ok(pooled)
}

fn mean_curve(zone: &Zone) -> Vec<f64> {
    let train = zone.train();
    let days = train[0].days.len();
    (0..days)
        .map(|d| train.iter().map(|s| s.days[d].pitting).sum::<f64>() / train.len() as f64)
        .collect()
}

/// Fits the model described by `config` on an already loaded raw dataset.
pub fn train_on(config: &ExperimentConfig, raw: &CorrosionDataset) -> Result<ModelArtifact> {
    config.validate()?;
    let dataset = normalize(raw, config.normalization)?;
    let runtime = materialize(&config.model, None)?;
    let trained = match &runtime {
        None => TrainedReadout::MeanCurve {
            zones: dataset
                .zones
                .iter()
                .map(|z| ZoneMeanCurve {
                    zone: z.id,
                    mean_pitting: mean_curve(z),
                })
                .collect(),
        },
        Some(rt) => {
            let zones = dataset
                .zones
                .iter()
                .map(|z| {
                    let rows = with_reservoir!(rt, r => zone_training_rows(r, z))?;
                    let readout = ridge_fit_scalar(&rows.rows, &rows.targets, config.alpha)?;
                    Ok(ZoneReadout {
                        zone: z.id,
                        training_rows: rows.len(),
                        readout,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            TrainedReadout::Ridge { zones }
        }
    };
    let mut normalization = dataset.normalization.expect("normalize records parameters");
    normalization.out_of_range.clear();
    Ok(ModelArtifact {
        schema_version: ARTIFACT_SCHEMA_VERSION,
        config: config.clone(),
        normalization,
        esn: runtime.as_ref().and_then(runtime_esn).map(matrices_of),
        trained,
    })
}

/// Loads the configured data source and fits the model.
pub fn train_model(config: &ExperimentConfig) -> Result<ModelArtifact> {
    train_on(config, &config.data.load()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub sample: u32,
    pub predicted: Vec<f64>,
    #[serde(rename = "true")]
    pub truth: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneResult {
    pub zone: u32,
    /// `None` when undefined (constant targets with imperfect predictions).
    pub r2: Option<f64>,
    pub samples: Vec<SampleResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub per_zone: Vec<ZoneResult>,
    /// R² over every test sample's forecast points, concatenated.
    pub pooled_r2: Option<f64>,
    /// Unweighted mean of the defined per-zone R² values.
    pub mean_zone_r2: Option<f64>,
    /// Normalized exogenous values of the evaluated data outside `[0, 1]`.
    pub out_of_range_inputs: usize,
    pub runtime_seconds: f64,
}

impl ExperimentResult {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Json(e.to_string()))
    }

    /// `zone,sample,day,predicted,true`, one row per forecast point.
    pub fn predictions_csv(&self) -> String {
        let warmup = self.config.warmup;
        let mut out = String::from("zone,sample,day,predicted,true\n");
        for z in &self.per_zone {
            for s in &z.samples {
                for (k, (p, t)) in s.predicted.iter().zip(&s.truth).enumerate() {
                    let _ = writeln!(out, "{},{},{},{p},{t}", z.zone, s.sample, warmup + 1 + k);
                }
            }
        }
        out
    }

    pub fn pooled_points(&self) -> (Vec<f64>, Vec<f64>) {
        let mut truth = Vec::new();
        let mut predicted = Vec::new();
        for s in self.per_zone.iter().flat_map(|z| &z.samples) {
            truth.extend(&s.truth);
            predicted.extend(&s.predicted);
        }
        (truth, predicted)
    }
}

fn defined_r2(truth: &[f64], predicted: &[f64]) -> Result<Option<f64>> {
    match r2_score(truth, predicted) {
        Ok(v) => Ok(Some(v)),
        Err(ReadoutError::UndefinedR2) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Closed-loop forecasts for every test sample, scored per zone and pooled.
pub fn evaluate(artifact: &ModelArtifact, raw: &CorrosionDataset) -> Result<ExperimentResult> {
    let start = Instant::now();
    let config = &artifact.config;
    config.validate()?;
    let warmup = config.warmup;
    let days = raw.n_days();
    if days < warmup + 2 {
        return Err(Error::Horizon(format!(
            "{days}-day samples leave no forecast after a {warmup}-day warm-up"
        )));
    }
    let dataset = apply_normalization(raw, artifact.normalization.clone())?;
    let runtime = materialize(&config.model, artifact.esn.as_ref())?;

    let mut per_zone = Vec::with_capacity(dataset.zones.len());
    for zone in &dataset.zones {
        let mut samples = Vec::new();
        for s in zone.test() {
            let pitting = s.pitting();
            let truth = pitting[warmup + 1..].to_vec();
            let predicted = match (&artifact.trained, &runtime) {
                (TrainedReadout::MeanCurve { zones }, None) => {
                    let curve = &zones
                        .iter()
                        .find(|c| c.zone == zone.id)
                        .ok_or_else(|| Error::Config(format!("model has no curve for zone {}", zone.id)))?
                        .mean_pitting;
                    if curve.len() != days {
                        return Err(Error::Horizon(format!(
                            "mean curve covers {} days, data has {days}",
                            curve.len()
                        )));
                    }
                    curve[warmup + 1..].to_vec()
                }
                (TrainedReadout::Ridge { zones }, Some(rt)) => {
                    let readout = &zones
                        .iter()
                        .find(|r| r.zone == zone.id)
                        .ok_or_else(|| Error::Config(format!("model has no readout for zone {}", zone.id)))?
                        .readout;
                    let width = with_reservoir!(rt, r => r.feature_len());
                    if readout.n_features() != width || readout.n_targets() != 1 {
                        return Err(Error::Config(format!(
                            "readout expects {} features, reservoir emits {width}",
                            readout.n_features()
                        )));
                    }
                    let series = s.series()?;
                    with_reservoir!(rt, r => run_closed_loop(r, |f| readout.predict_scalar(f), &series, warmup))?
                }
                _ => return Err(Error::Config("trained readout does not match the model kind".into())),
            };
            samples.push(SampleResult {
                sample: s.sample,
                predicted,
                truth,
            });
        }
        let (t, p): (Vec<f64>, Vec<f64>) = samples
            .iter()
            .flat_map(|s| s.truth.iter().copied().zip(s.predicted.iter().copied()))
            .unzip();
        per_zone.push(ZoneResult {
            zone: zone.id,
            r2: defined_r2(&t, &p)?,
            samples,
        });
    }

    let mut result = ExperimentResult {
        config: config.clone(),
        per_zone,
        pooled_r2: None,
        mean_zone_r2: None,
        out_of_range_inputs: dataset.normalization.as_ref().map_or(0, |n| n.out_of_range.len()),
        runtime_seconds: 0.0,
    };
    let (truth, predicted) = result.pooled_points();
    result.pooled_r2 = defined_r2(&truth, &predicted)?;
    let zone_r2: Vec<f64> = result.per_zone.iter().filter_map(|z| z.r2).collect();
    if !zone_r2.is_empty() {
        result.mean_zone_r2 = Some(zone_r2.iter().sum::<f64>() / zone_r2.len() as f64);
    }
    result.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Trains on the configured data and evaluates on its test split.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let start = Instant::now();
    let raw = config.data.load()?;
    let artifact = train_on(config, &raw)?;
    let mut result = evaluate(&artifact, &raw)?;
    result.runtime_seconds = start.elapsed().as_secs_f64();
    Ok(result)
}

/// The training-mean-curve baseline on `dataset`.
pub fn simple_baseline(dataset: &CorrosionDataset, warmup: usize) -> Result<ExperimentResult> {
    let mut config = ExperimentConfig::new(
        ModelSpec::Simple,
        DataSource::Synth {
            seed: 0,
            params: SynthConfig::default(),
        },
    );
    config.warmup = warmup;
    evaluate(&train_on(&config, dataset)?, dataset)
}

/// The hybrid model on `dataset`; `config.model` must be the hybrid kind.
pub fn hybrid_ocqrc(config: &ExperimentConfig, dataset: &CorrosionDataset) -> Result<ExperimentResult> {
    if !matches!(config.model, ModelSpec::Ocqrc { .. }) {
        return Err(Error::Config(format!("expected an ocqrc model, got {}", config.model.kind())));
    }
    evaluate(&train_on(config, dataset)?, dataset)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSpec {
    pub models: Vec<ModelKind>,
    pub qubits: Vec<usize>,
    /// Each seed draws both the synthetic corpus and the ESN matrices.
    pub seeds: Vec<u64>,
    pub a: f64,
    pub b: f64,
    pub crc_size: CrcSizeConvention,
    pub alpha: f64,
    pub warmup: usize,
    #[serde(default)]
    pub synth: SynthConfig,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            models: vec![ModelKind::Simple, ModelKind::Crc, ModelKind::Oqrc(1), ModelKind::Oqrc(3)],
            qubits: vec![4, 6, 8],
            seeds: vec![0],
            a: DEFAULT_A,
            b: DEFAULT_B,
            crc_size: CrcSizeConvention::Qubits,
            alpha: DEFAULT_ALPHA,
            warmup: DEFAULT_WARMUP,
            synth: SynthConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkCell {
    pub model: String,
    pub qubits: usize,
    pub seed: u64,
    pub pooled_r2: Option<f64>,
    pub mean_zone_r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub model: String,
    pub qubits: usize,
    pub seeds: usize,
    pub mean_pooled_r2: f64,
    pub std_pooled_r2: f64,
    pub mean_zone_r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub spec: BenchmarkSpec,
    pub cells: Vec<BenchmarkCell>,
    pub rows: Vec<BenchmarkRow>,
}

impl BenchmarkResult {
    /// One row per (model, qubit count), averaged over seeds. Undefined R²
    /// values are written as `NaN`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,qubits,seeds,mean_pooled_r2,std_pooled_r2,mean_zone_r2\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.model, r.qubits, r.seeds, r.mean_pooled_r2, r.std_pooled_r2, r.mean_zone_r2
            );
        }
        out
    }

    pub fn row(&self, model: &str, qubits: usize) -> Option<&BenchmarkRow> {
        self.rows.iter().find(|r| r.model == model && r.qubits == qubits)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs every (model, qubits, seed) cell on the synthetic corpus. Each
/// seed's dataset is generated once and shared by all models.
pub fn benchmark(spec: &BenchmarkSpec) -> Result<BenchmarkResult> {
    if spec.models.is_empty() || spec.qubits.is_empty() || spec.seeds.is_empty() {
        return Err(Error::Config("benchmark needs at least one model, qubit count and seed".into()));
    }
    let datasets = spec
        .seeds
        .iter()
        .map(|&s| Ok((s, data::synth_generate(s, &spec.synth)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut cells = Vec::new();
    let mut rows = Vec::new();
    for &model in &spec.models {
        for &n in &spec.qubits {
            let mut pooled = Vec::new();
            let mut zone = Vec::new();
            for (seed, raw) in &datasets {
                let params = ModelParams {
                    n_qubits: n,
                    a: spec.a,
                    b: spec.b,
                    crc_size: spec.crc_size,
                    seed: *seed,
                };
                let mut config = ExperimentConfig::new(
                    model.spec(&params)?,
                    DataSource::Synth {
                        seed: *seed,
                        params: spec.synth.clone(),
                    },
                );
                config.alpha = spec.alpha;
                config.warmup = spec.warmup;
                let result = evaluate(&train_on(&config, raw)?, raw)?;
                pooled.push(result.pooled_r2.unwrap_or(f64::NAN));
                zone.push(result.mean_zone_r2.unwrap_or(f64::NAN));
                cells.push(BenchmarkCell {
                    model: model.to_string(),
                    qubits: n,
                    seed: *seed,
                    pooled_r2: result.pooled_r2,
                    mean_zone_r2: result.mean_zone_r2,
                });
            }
            let (mean_pooled_r2, std_pooled_r2) = mean_std(&pooled);
            rows.push(BenchmarkRow {
                model: model.to_string(),
                qubits: n,
                seeds: datasets.len(),
                mean_pooled_r2,
                std_pooled_r2,
                mean_zone_r2: mean_std(&zone).0,
            });
        }
    }
    Ok(BenchmarkResult {
        spec: spec.clone(),
        cells,
        rows,
    })
}

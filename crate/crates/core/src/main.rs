//! `oqrc` command-line interface.
//!
//! Every subcommand accepts `--seed`, `--out-dir` and `--config <json>`.
//! Failures print one JSON line on stderr and exit nonzero.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use onion_qrc::data::{self, NormalizationScope, SynthConfig};
use onion_qrc::harness::{
    self, BenchmarkSpec, CrcSizeConvention, DataSource, ExperimentConfig, ModelArtifact, ModelKind, ModelParams,
};
use onion_qrc::qreservoir::{DEFAULT_A, DEFAULT_B};
use onion_qrc::spectrum::{self, HeaSpectrumConfig, DEFAULT_ANGLE_SEED, DEFAULT_DEPTH};
use onion_qrc::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "oqrc", version, about = "Onion quantum reservoir computing experiments")]
struct Cli {
    /// Seed for synthetic data, random angles and reservoir matrices.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving every output file.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// JSON file with the subcommand's configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic corrosion dataset as CSV.
    Synth(SynthArgs),
    /// Sweep the channel spectrum over prefactors or measured-qubit counts.
    Spectrum(SpectrumArgs),
    /// Fit a model and write its artifact JSON.
    Train(TrainArgs),
    /// Forecast the test samples with a trained model.
    Evaluate(EvaluateArgs),
    /// Score model kinds across qubit counts and seeds.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// CSV file name inside the output directory
    #[arg(long, default_value = "synth.csv")]
    output: String,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    /// Number of qubits
    #[arg(long)]
    qubits: Option<usize>,
    /// Hardware-efficient ansatz depth
    #[arg(long)]
    depth: Option<usize>,
    /// Number of leading qubits measured each step.
    #[arg(long)]
    measured: Option<usize>,
    /// Prefactors to sweep (comma separated).
    #[arg(long, value_delimiter = ',')]
    prefactors: Option<Vec<f64>>,
    /// Sweep the measured-qubit count instead (comma separated counts).
    #[arg(long, value_delimiter = ',')]
    measured_sweep: Option<Vec<usize>>,
    /// Prefactor used by a measurement sweep.
    #[arg(long)]
    prefactor: Option<f64>,
    /// Base name for the `.csv` and `.json` outputs
    #[arg(long, default_value = "spectrum")]
    output: String,
}

/// `spectrum --config` file layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct SpectrumJob {
    n_qubits: usize,
    depth: usize,
    seed: u64,
    measured: usize,
    prefactor: f64,
    prefactors: Vec<f64>,
    measured_sweep: Option<Vec<usize>>,
}

impl Default for SpectrumJob {
    fn default() -> Self {
        Self {
            n_qubits: 4,
            depth: DEFAULT_DEPTH,
            seed: DEFAULT_ANGLE_SEED,
            measured: 1,
            prefactor: 1.0,
            prefactors: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            measured_sweep: None,
        }
    }
}

fn parse_model(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// simple, crc, oqrc<N> or ocqrc[<N>].
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelKind>,
    /// Qubits per quantum layer
    #[arg(long)]
    qubits: Option<usize>,
    /// Input angle prefactor
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Centre of the reservoir angle ladder
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    #[arg(long, value_enum)]
    crc_size: Option<CrcSizeConvention>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Ridge regularization strength
    #[arg(long)]
    alpha: Option<f64>,
    /// Observed days before closed-loop forecasting
    #[arg(long)]
    warmup: Option<usize>,
    /// Min-max normalization scope
    #[arg(long, value_enum)]
    normalization: Option<NormalizationScope>,
    /// Dataset CSV; the synthetic corpus is used when absent.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Artifact file name inside the output directory
    #[arg(long, default_value = "model.json")]
    output: String,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Artifact written by `train`.
    #[arg(long = "model")]
    model_path: PathBuf,
    /// Dataset CSV; defaults to the artifact's data source.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Result JSON file name
    #[arg(long, default_value = "result.json")]
    output: String,
    /// Per-day predictions CSV file name
    #[arg(long, default_value = "predictions.csv")]
    predictions: String,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// Model kinds (comma separated)
    #[arg(long, value_delimiter = ',', value_parser = parse_model)]
    models: Option<Vec<ModelKind>>,
    /// Qubit counts (comma separated)
    #[arg(long, value_delimiter = ',')]
    qubits: Option<Vec<usize>>,
    /// Seeds for data and reservoirs (comma separated)
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Input angle prefactor
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Centre of the reservoir angle ladder
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    /// Ridge regularization strength
    #[arg(long)]
    alpha: Option<f64>,
    /// Observed days before closed-loop forecasting
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long, value_enum)]
    crc_size: Option<CrcSizeConvention>,
    /// Base name for the `.csv` and `.json` outputs
    #[arg(long, default_value = "benchmark")]
    output: String,
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json(format!("{}: {e}", path.display())))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
    Ok(path)
}

fn to_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| Error::Json(e.to_string()))
}

fn report(value: serde_json::Value) {
    println!("{value}");
}

fn synth(cli: &Cli, args: &SynthArgs) -> Result<()> {
    let params: SynthConfig = match &cli.config {
        Some(p) => read_json(p)?,
        None => SynthConfig::default(),
    };
    let dataset = data::synth_generate(cli.seed.unwrap_or(0), &params)?;
    let path = write_file(&cli.out_dir, &args.output, &data::to_csv_string(&dataset))?;
    report(json!({ "dataset": path, "samples": dataset.n_samples(), "days": dataset.n_days() }));
    Ok(())
}

fn spectrum_cmd(cli: &Cli, args: &SpectrumArgs) -> Result<()> {
    let mut job: SpectrumJob = match &cli.config {
        Some(p) => read_json(p)?,
        None => SpectrumJob::default(),
    };
    if let Some(v) = args.qubits {
        job.n_qubits = v;
    }
    if let Some(v) = args.depth {
        job.depth = v;
    }
    if let Some(v) = args.measured {
        job.measured = v;
    }
    if let Some(v) = &args.prefactors {
        job.prefactors = v.clone();
    }
    if let Some(v) = &args.measured_sweep {
        job.measured_sweep = Some(v.clone());
    }
    if let Some(v) = args.prefactor {
        job.prefactor = v;
    }
    if let Some(v) = cli.seed {
        job.seed = v;
    }
    for &count in job.measured_sweep.iter().flatten().chain([&job.measured]) {
        if count > job.n_qubits {
            return Err(Error::Config(format!("cannot measure {count} of {} qubits", job.n_qubits)));
        }
    }
    let mut base = HeaSpectrumConfig::seeded(job.n_qubits, job.depth, job.seed);
    base.measured = spectrum::leading_qubits(job.measured);
    let result = match &job.measured_sweep {
        Some(counts) => {
            base.prefactor = job.prefactor;
            let sets: Vec<BTreeSet<usize>> = counts.iter().map(|&c| spectrum::leading_qubits(c)).collect();
            spectrum::sweep_measurements(&base, &sets)?
        }
        None => spectrum::sweep_prefactor(&base, &job.prefactors)?,
    };
    let csv = write_file(&cli.out_dir, &format!("{}.csv", args.output), &result.to_csv())?;
    let meta = write_file(&cli.out_dir, &format!("{}.json", args.output), &to_pretty(&result.metadata_json())?)?;
    report(json!({ "spectrum": csv, "metadata": meta, "mean_nontrivial_modulus": result.mean_moduli() }));
    Ok(())
}

fn experiment_config(cli: &Cli, args: &TrainArgs) -> Result<ExperimentConfig> {
    let seed = cli.seed.unwrap_or(0);
    let m = &args.model;
    let params = ModelParams {
        n_qubits: m.qubits.unwrap_or(harness::DEFAULT_QUBITS),
        a: m.a.unwrap_or(DEFAULT_A),
        b: m.b.unwrap_or(DEFAULT_B),
        crc_size: m.crc_size.unwrap_or_default(),
        seed,
    };
    let mut config = match &cli.config {
        Some(p) => {
            let mut c: ExperimentConfig = read_json(p)?;
            if let Some(kind) = m.model {
                c.model = kind.spec(&params)?;
            }
            if let (Some(s), DataSource::Synth { seed, .. }) = (cli.seed, &mut c.data) {
                *seed = s;
            }
            c
        }
        None => ExperimentConfig::new(
            m.model.unwrap_or(ModelKind::Oqrc(1)).spec(&params)?,
            DataSource::Synth {
                seed,
                params: SynthConfig::default(),
            },
        ),
    };
    if let Some(path) = &args.data {
        config.data = DataSource::Csv { path: path.clone() };
    }
    config.alpha = args.alpha.unwrap_or(config.alpha);
    config.warmup = args.warmup.unwrap_or(config.warmup);
    config.normalization = args.normalization.unwrap_or(config.normalization);
    Ok(config)
}

fn train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let config = experiment_config(cli, args)?;
    let artifact = harness::train_model(&config)?;
    let path = write_file(&cli.out_dir, &args.output, &(artifact.to_json()? + "\n"))?;
    report(json!({ "model": path, "kind": config.model.kind() }));
    Ok(())
}

fn evaluate(cli: &Cli, args: &EvaluateArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.model_path).map_err(|e| io_error(&args.model_path, e))?;
    let artifact = ModelArtifact::from_json(&text)?;
    let mut source = match &cli.config {
        Some(p) => read_json::<ExperimentConfig>(p)?.data,
        None => artifact.config.data.clone(),
    };
    if let Some(path) = &args.data {
        source = DataSource::Csv { path: path.clone() };
    }
    if let (Some(s), DataSource::Synth { seed, .. }) = (cli.seed, &mut source) {
        *seed = s;
    }
    let result = harness::evaluate(&artifact, &source.load()?)?;
    let out = write_file(&cli.out_dir, &args.output, &(result.to_json()? + "\n"))?;
    let preds = write_file(&cli.out_dir, &args.predictions, &result.predictions_csv())?;
    report(json!({ "result": out, "predictions": preds, "pooled_r2": result.pooled_r2 }));
    Ok(())
}

fn benchmark(cli: &Cli, args: &BenchmarkArgs) -> Result<()> {
    let mut spec: BenchmarkSpec = match &cli.config {
        Some(p) => read_json(p)?,
        None => BenchmarkSpec::default(),
    };
    if let Some(v) = &args.models {
        spec.models = v.clone();
    }
    if let Some(v) = &args.qubits {
        spec.qubits = v.clone();
    }
    match (&args.seeds, cli.seed) {
        (Some(v), _) => spec.seeds = v.clone(),
        (None, Some(s)) => spec.seeds = vec![s],
        (None, None) => {}
    }
    spec.a = args.a.unwrap_or(spec.a);
    spec.b = args.b.unwrap_or(spec.b);
    spec.alpha = args.alpha.unwrap_or(spec.alpha);
    spec.warmup = args.warmup.unwrap_or(spec.warmup);
    spec.crc_size = args.crc_size.unwrap_or(spec.crc_size);
    if !(spec.alpha > 0.0) {
        return Err(Error::Config(format!("ridge alpha must be positive, got {}", spec.alpha)));
    }
    let result = harness::benchmark(&spec)?;
    let csv = write_file(&cli.out_dir, &format!("{}.csv", args.output), &result.to_csv())?;
    let full = write_file(&cli.out_dir, &format!("{}.json", args.output), &to_pretty(&result)?)?;
    report(json!({ "table": csv, "cells": full, "rows": result.rows.len() }));
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => synth(cli, a),
        Command::Spectrum(a) => spectrum_cmd(cli, a),
        Command::Train(a) => train(cli, a),
        Command::Evaluate(a) => evaluate(cli, a),
        Command::Benchmark(a) => benchmark(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            let message = e.kind().as_str().unwrap_or("invalid arguments");
            eprintln!("{}", json!({ "error": { "kind": "usage", "message": message } }));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
            ExitCode::FAILURE
        }
    }
}

//! Corrosion datasets: CSV ingestion, train-only min-max normalization, the
//! per-zone train/test split and a seeded synthetic generator.
//!
//! A dataset is a set of climate zones, each holding equally long daily
//! series of pitting fraction, humidity and temperature for several samples.
//! The exogenous channels come from the zone's sensors, so the generator
//! shares them across a zone's samples.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::reservoir::{ReservoirError, Series};

/// Samples per zone held out for testing (the highest sample ids).
pub const TEST_SAMPLES_PER_ZONE: usize = 2;
pub const MIN_SAMPLES_PER_ZONE: usize = TEST_SAMPLES_PER_ZONE + 1;
pub const P0_RANGE: (f64, f64) = (0.005, 0.02);
pub const CSV_HEADER: [&str; 7] = ["zone", "sample", "day", "pitting", "tarnishing", "humidity", "temperature"];

/// The shipped synthetic corpus parameters.
pub const DEFAULT_ZONES_JSON: &str = include_str!("../config/zones.json");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("csv error at row {row}: {message}")]
    Csv { row: u64, message: String },
    #[error("missing column {0:?}")]
    MissingColumn(&'static str),
    #[error("row {row}: cannot parse {column} value {value:?}")]
    Parse {
        row: u64,
        column: &'static str,
        value: String,
    },
    #[error("row {row}: zone {zone} sample {sample} has day {got}, expected {expected}")]
    DayOrder {
        row: u64,
        zone: u32,
        sample: u32,
        expected: usize,
        got: usize,
    },
    #[error("row {row}: pitting {value} outside [0, 1]")]
    PittingRange { row: u64, value: f64 },
    #[error("row {row}: non-finite {column}")]
    NonFinite { row: u64, column: &'static str },
    #[error("dataset has no samples")]
    Empty,
    #[error("zone {zone} has {got} samples, need at least {needed}")]
    TooFewSamples { zone: u32, got: usize, needed: usize },
    #[error("zone {zone} sample {sample} has {got} days, expected {expected}")]
    RaggedDays {
        zone: u32,
        sample: u32,
        expected: usize,
        got: usize,
    },
    #[error("zone {zone}: {channel} is constant over the training samples")]
    ConstantChannel { zone: String, channel: &'static str },
    #[error("dataset is already normalized")]
    AlreadyNormalized,
    #[error("invalid synthetic parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Reservoir(#[from] ReservoirError),
}

pub type Result<T> = std::result::Result<T, DataError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub pitting: f64,
    pub tarnishing: Option<f64>,
    pub humidity: f64,
    pub temperature: f64,
}

/// One sample's daily records; the position in `days` is the day index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrosionSample {
    pub zone: u32,
    pub sample: u32,
    pub days: Vec<DayRecord>,
}

impl CorrosionSample {
    pub fn pitting(&self) -> Vec<f64> {
        self.days.iter().map(|d| d.pitting).collect()
    }

    pub fn series(&self) -> Result<Series> {
        Ok(Series::new(
            self.pitting(),
            self.days.iter().map(|d| d.humidity).collect(),
            self.days.iter().map(|d| d.temperature).collect(),
        )?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: u32,
    /// Sorted by sample id.
    pub samples: Vec<CorrosionSample>,
}

impl Zone {
    /// Every sample except the last [`TEST_SAMPLES_PER_ZONE`] by id.
    pub fn train(&self) -> &[CorrosionSample] {
        &self.samples[..self.samples.len() - TEST_SAMPLES_PER_ZONE]
    }

    pub fn test(&self) -> &[CorrosionSample] {
        &self.samples[self.samples.len() - TEST_SAMPLES_PER_ZONE..]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationScope {
    #[default]
    PerZone,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelRange {
    pub min: f64,
    pub max: f64,
}

impl ChannelRange {
    pub fn apply(&self, value: f64) -> f64 {
        (value - self.min) / (self.max - self.min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneNormalization {
    pub zone: u32,
    pub humidity: ChannelRange,
    pub temperature: ChannelRange,
}

/// A normalized value that fell outside `[0, 1]` (kept as is).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfRange {
    pub zone: u32,
    pub sample: u32,
    pub day: usize,
    pub channel: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub scope: NormalizationScope,
    pub zones: Vec<ZoneNormalization>,
    pub out_of_range: Vec<OutOfRange>,
}

impl Normalization {
    pub fn for_zone(&self, zone: u32) -> Option<&ZoneNormalization> {
        self.zones.iter().find(|z| z.zone == zone)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrosionDataset {
    /// Sorted by zone id.
    pub zones: Vec<Zone>,
    pub normalization: Option<Normalization>,
}

impl CorrosionDataset {
    /// Groups samples by zone and enforces the split invariants.
    pub fn from_samples(samples: Vec<CorrosionSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(DataError::Empty);
        }
        let mut grouped: BTreeMap<u32, BTreeMap<u32, CorrosionSample>> = BTreeMap::new();
        for s in samples {
            grouped.entry(s.zone).or_default().insert(s.sample, s);
        }
        let zones: Vec<Zone> = grouped
            .into_iter()
            .map(|(id, samples)| Zone { id, samples: samples.into_values().collect() })
            .collect();
        let dataset = Self { zones, normalization: None };
        dataset.validate()?;
        Ok(dataset)
    }

    pub fn validate(&self) -> Result<()> {
        let expected = self.zones.first().and_then(|z| z.samples.first()).map(|s| s.days.len()).ok_or(DataError::Empty)?;
        for zone in &self.zones {
            if zone.samples.len() < MIN_SAMPLES_PER_ZONE {
                return Err(DataError::TooFewSamples {
                    zone: zone.id,
                    got: zone.samples.len(),
                    needed: MIN_SAMPLES_PER_ZONE,
                });
            }
            for s in &zone.samples {
                if s.days.len() != expected || expected < 2 {
                    return Err(DataError::RaggedDays {
                        zone: zone.id,
                        sample: s.sample,
                        expected: expected.max(2),
                        got: s.days.len(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n_days(&self) -> usize {
        self.zones[0].samples[0].days.len()
    }

    pub fn n_samples(&self) -> usize {
        self.zones.iter().map(|z| z.samples.len()).sum()
    }

    pub fn samples(&self) -> impl Iterator<Item = &CorrosionSample> {
        self.zones.iter().flat_map(|z| z.samples.iter())
    }
}

fn csv_error(row: u64, err: csv::Error) -> DataError {
    DataError::Csv { row, message: err.to_string() }
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, idx: usize, column: &'static str, row: u64) -> Result<T> {
    let raw = record.get(idx).unwrap_or("").trim();
    raw.parse().map_err(|_| DataError::Parse { row, column, value: raw.to_string() })
}

fn parse_real(record: &csv::StringRecord, idx: usize, column: &'static str, row: u64) -> Result<f64> {
    let v: f64 = parse_field(record, idx, column, row)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DataError::NonFinite { row, column })
    }
}

/// Parses the dataset CSV. Rows are numbered as file lines, header = 1.
pub fn read_csv<R: std::io::Read>(reader: R) -> Result<CorrosionDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_error(1, e))?.clone();
    let mut idx = [0usize; 7];
    for (slot, name) in idx.iter_mut().zip(CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or(DataError::MissingColumn(name))?;
    }
    let [zi, si, di, pi, ti, hi, tei] = idx;
    let mut samples: BTreeMap<(u32, u32), CorrosionSample> = BTreeMap::new();
    for (k, record) in rdr.records().enumerate() {
        let row = k as u64 + 2;
        let record = record.map_err(|e| csv_error(row, e))?;
        let zone: u32 = parse_field(&record, zi, "zone", row)?;
        let sample: u32 = parse_field(&record, si, "sample", row)?;
        let day: usize = parse_field(&record, di, "day", row)?;
        let pitting = parse_real(&record, pi, "pitting", row)?;
        if !(0.0..=1.0).contains(&pitting) {
            return Err(DataError::PittingRange { row, value: pitting });
        }
        let tarnishing = match record.get(ti).map(str::trim) {
            None | Some("") => None,
            Some(_) => Some(parse_real(&record, ti, "tarnishing", row)?),
        };
        let humidity = parse_real(&record, hi, "humidity", row)?;
        let temperature = parse_real(&record, tei, "temperature", row)?;
        let entry = samples
            .entry((zone, sample))
            .or_insert_with(|| CorrosionSample { zone, sample, days: Vec::new() });
        if day != entry.days.len() {
            return Err(DataError::DayOrder { row, zone, sample, expected: entry.days.len(), got: day });
        }
        entry.days.push(DayRecord { pitting, tarnishing, humidity, temperature });
    }
    CorrosionDataset::from_samples(samples.into_values().collect())
}

pub fn load_csv(path: &Path) -> Result<CorrosionDataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| DataError::Io { path: path.display().to_string(), message: e.to_string() })?;
    read_csv(std::io::BufReader::new(file))
}

/// Values are written in shortest round-trip form, so loading the output
/// reproduces every value exactly.
pub fn to_csv_string(dataset: &CorrosionDataset) -> String {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    for s in dataset.samples() {
        for (day, d) in s.days.iter().enumerate() {
            let tarnishing = d.tarnishing.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                s.zone, s.sample, day, d.pitting, tarnishing, d.humidity, d.temperature
            );
        }
    }
    out
}

pub fn save_csv(dataset: &CorrosionDataset, path: &Path) -> Result<()> {
    std::fs::write(path, to_csv_string(dataset))
        .map_err(|e| DataError::Io { path: path.display().to_string(), message: e.to_string() })
}

fn channel_range<'a>(samples: impl Iterator<Item = &'a CorrosionSample>, pick: fn(&DayRecord) -> f64) -> ChannelRange {
    let mut range = ChannelRange { min: f64::INFINITY, max: f64::NEG_INFINITY };
    for v in samples.flat_map(|s| s.days.iter().map(pick)) {
        range.min = range.min.min(v);
        range.max = range.max.max(v);
    }
    range
}

/// Fits min-max ranges on the training samples only and maps humidity and
/// temperature of every sample through them. Test values outside the training
/// range are kept and listed in [`Normalization::out_of_range`].
pub fn normalize(dataset: &CorrosionDataset, scope: NormalizationScope) -> Result<CorrosionDataset> {
    if dataset.normalization.is_some() {
        return Err(DataError::AlreadyNormalized);
    }
    let global = (
        channel_range(dataset.zones.iter().flat_map(|z| z.train()), |d| d.humidity),
        channel_range(dataset.zones.iter().flat_map(|z| z.train()), |d| d.temperature),
    );
    let mut zones = Vec::with_capacity(dataset.zones.len());
    for zone in &dataset.zones {
        let (humidity, temperature) = match scope {
            NormalizationScope::PerZone => (
                channel_range(zone.train().iter(), |d| d.humidity),
                channel_range(zone.train().iter(), |d| d.temperature),
            ),
            NormalizationScope::Global => global,
        };
        let label = match scope {
            NormalizationScope::PerZone => zone.id.to_string(),
            NormalizationScope::Global => "all".to_string(),
        };
        for (channel, range) in [("humidity", humidity), ("temperature", temperature)] {
            if !(range.max > range.min) {
                return Err(DataError::ConstantChannel { zone: label.clone(), channel });
            }
        }
        zones.push(ZoneNormalization { zone: zone.id, humidity, temperature });
    }
    apply_normalization(dataset, Normalization { scope, zones, out_of_range: Vec::new() })
}

/// Maps a raw dataset through previously fitted ranges (e.g. a trained
/// model's) and records out-of-range values.
pub fn apply_normalization(dataset: &CorrosionDataset, mut norm: Normalization) -> Result<CorrosionDataset> {
    if dataset.normalization.is_some() {
        return Err(DataError::AlreadyNormalized);
    }
    norm.out_of_range.clear();
    let mut out = dataset.clone();
    for zone in &mut out.zones {
        let zn = norm
            .for_zone(zone.id)
            .ok_or_else(|| DataError::InvalidParams(format!("no normalization for zone {}", zone.id)))?
            .clone();
        for s in &mut zone.samples {
            for (day, d) in s.days.iter_mut().enumerate() {
                d.humidity = zn.humidity.apply(d.humidity);
                d.temperature = zn.temperature.apply(d.temperature);
                for (channel, value) in [("humidity", d.humidity), ("temperature", d.temperature)] {
                    if !(0.0..=1.0).contains(&value) {
                        norm.out_of_range.push(OutOfRange {
                            zone: s.zone,
                            sample: s.sample,
                            day,
                            channel: channel.to_string(),
                            value,
                        });
                    }
                }
            }
        }
    }
    out.normalization = Some(norm);
    Ok(out)
}

/// `mean + amplitude·sin(2π·day/period + phase)` plus Gaussian jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cycle {
    pub mean: f64,
    pub amplitude: f64,
    pub period: f64,
    pub phase: f64,
    pub jitter: f64,
}

impl Cycle {
    fn value(&self, day: usize) -> f64 {
        self.mean + self.amplitude * (2.0 * PI * day as f64 / self.period + self.phase).sin()
    }

    /// Position of `value` within the noiseless cycle's range, clamped to `[0, 1]`.
    fn driver(&self, value: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 1.0;
        }
        ((value - (self.mean - self.amplitude)) / (2.0 * self.amplitude)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneParams {
    pub zone: u32,
    /// Logistic rate `r`.
    pub growth_rate: f64,
    /// Carrying capacity `K`.
    pub saturation: f64,
    /// Zone-level `P₀`.
    pub initial_pitting: f64,
    /// σ of the per-sample log-normal factors on `r` and `P₀`.
    pub noise_scale: f64,
    pub humidity: Cycle,
    pub temperature: Cycle,
}

impl ZoneParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DataError::InvalidParams(format!("zone {}: {m}", self.zone)));
        if !(self.saturation > 0.0 && self.saturation <= 1.0) {
            return bad(format!("saturation {} outside (0, 1]", self.saturation));
        }
        if !(self.growth_rate >= 0.0 && self.growth_rate.is_finite()) {
            return bad(format!("growth rate {} must be finite and non-negative", self.growth_rate));
        }
        if !(P0_RANGE.0..=P0_RANGE.1).contains(&self.initial_pitting) {
            return bad(format!("initial pitting {} outside {:?}", self.initial_pitting, P0_RANGE));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return bad(format!("noise scale {} must be finite and non-negative", self.noise_scale));
        }
        for (name, c) in [("humidity", &self.humidity), ("temperature", &self.temperature)] {
            let finite = [c.mean, c.amplitude, c.phase, c.jitter].iter().all(|v| v.is_finite());
            if !finite || c.amplitude < 0.0 || c.jitter < 0.0 || !(c.period > 0.0) {
                return bad(format!("{name} cycle needs finite values, amplitude/jitter >= 0, period > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub days: usize,
    pub samples_per_zone: usize,
    pub zones: Vec<ZoneParams>,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.days < 2 {
            return Err(DataError::InvalidParams(format!("need at least 2 days, got {}", self.days)));
        }
        if self.samples_per_zone < MIN_SAMPLES_PER_ZONE {
            return Err(DataError::InvalidParams(format!(
                "need at least {MIN_SAMPLES_PER_ZONE} samples per zone, got {}",
                self.samples_per_zone
            )));
        }
        if self.zones.is_empty() {
            return Err(DataError::InvalidParams("no zones".into()));
        }
        self.zones.iter().try_for_each(ZoneParams::validate)
    }
}

impl Default for SynthConfig {
    fn default() -> Self {
        serde_json::from_str(DEFAULT_ZONES_JSON).expect("shipped zone config parses")
    }
}

/// Deterministic synthetic corpus. Each zone draws from its own stream, so
/// editing one zone's parameters leaves the others' samples unchanged.
pub fn synth_generate(seed: u64, config: &SynthConfig) -> Result<CorrosionDataset> {
    config.validate()?;
    let mut samples = Vec::with_capacity(config.zones.len() * config.samples_per_zone);
    for (zi, zp) in config.zones.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((zi as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let channel = |c: &Cycle, rng: &mut ChaCha8Rng| -> Vec<f64> {
            let jitter = Normal::new(0.0, c.jitter).expect("validated jitter");
            (0..config.days).map(|d| c.value(d) + jitter.sample(rng)).collect()
        };
        let humidity = channel(&zp.humidity, &mut rng);
        let temperature = channel(&zp.temperature, &mut rng);
        let drive: Vec<f64> = humidity.iter().map(|h| zp.humidity.driver(*h)).collect();
        let noise = LogNormal::new(0.0, zp.noise_scale).expect("validated noise scale");
        for sample in 0..config.samples_per_zone {
            let r = zp.growth_rate * noise.sample(&mut rng);
            let mut p = (zp.initial_pitting * noise.sample(&mut rng)).clamp(P0_RANGE.0, P0_RANGE.1);
            let mut days = Vec::with_capacity(config.days);
            for d in 0..config.days {
                days.push(DayRecord { pitting: p, tarnishing: None, humidity: humidity[d], temperature: temperature[d] });
                p = (p + r * drive[d] * p * (1.0 - p / zp.saturation)).clamp(0.0, 1.0);
            }
            samples.push(CorrosionSample { zone: zp.zone, sample: sample as u32 + 1, days });
        }
    }
    CorrosionDataset::from_samples(samples)
}

//! Shared driving loop for every reservoir kind.
//!
//! A reservoir consumes one day at a time, `(x, h, t)` = pitting, normalized
//! humidity, normalized temperature, and emits the feature row the readout
//! sees for that day. Training runs are teacher-forced; evaluation runs feed
//! the readout's own prediction back as the next `x` once the warm-up days
//! are exhausted.

use std::fmt::Write as _;

use thiserror::Error;

use crate::linalg::LinalgError;
use crate::quantum::QuantumError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReservoirError {
    #[error("series has {len} days, need at least {needed}")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("series channels have different lengths ({pitting}, {humidity}, {temperature})")]
    RaggedSeries {
        pitting: usize,
        humidity: usize,
        temperature: usize,
    },
    #[error("warm-up of {warmup} days leaves no prediction horizon in a {len}-day series")]
    HorizonTooShort { warmup: usize, len: usize },
    #[error("warm-up must cover at least one day")]
    EmptyWarmup,
    #[error("non-finite input {name} = {value}")]
    NonFiniteInput { name: &'static str, value: f64 },
    #[error("expected {expected} layer states, got {got}")]
    StateCount { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, ReservoirError>;

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ReservoirError::NonFiniteInput { name, value })
    }
}

/// One sample's daily channels: pitting fraction and normalized exogenous
/// drivers, all indexed by day.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub pitting: Vec<f64>,
    pub humidity: Vec<f64>,
    pub temperature: Vec<f64>,
}

impl Series {
    pub fn new(pitting: Vec<f64>, humidity: Vec<f64>, temperature: Vec<f64>) -> Result<Self> {
        if pitting.len() != humidity.len() || pitting.len() != temperature.len() {
            return Err(ReservoirError::RaggedSeries {
                pitting: pitting.len(),
                humidity: humidity.len(),
                temperature: temperature.len(),
            });
        }
        Ok(Self {
            pitting,
            humidity,
            temperature,
        })
    }

    pub fn len(&self) -> usize {
        self.pitting.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pitting.is_empty()
    }
}

pub trait Reservoir {
    type State: Clone;

    fn initial_state(&self) -> Self::State;

    fn feature_len(&self) -> usize;

    /// Advances one day and returns the feature row for that day.
    fn step(&self, state: &Self::State, x: f64, h: f64, t: f64) -> Result<(Vec<f64>, Self::State)>;
}

/// Feature rows paired with next-day targets.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Appends another matrix's rows (pooling across samples).
    pub fn extend(&mut self, other: FeatureMatrix) {
        self.rows.extend(other.rows);
        self.targets.extend(other.targets);
    }

    /// One line per day: `day,target,f0,f1,...`.
    pub fn to_csv(&self) -> String {
        let width = self.rows.first().map_or(0, Vec::len);
        let mut out = String::from("day,target");
        for k in 0..width {
            let _ = write!(out, ",f{k}");
        }
        out.push('\n');
        for (day, (row, target)) in self.rows.iter().zip(&self.targets).enumerate() {
            let _ = write!(out, "{day},{target}");
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Drives the reservoir with true pitting on every day `d` in `0..len-1` and
/// pairs each feature row with the true pitting of day `d + 1`.
pub fn run_teacher_forced<R: Reservoir>(reservoir: &R, series: &Series) -> Result<FeatureMatrix> {
    if series.len() < 2 {
        return Err(ReservoirError::SeriesTooShort {
            len: series.len(),
            needed: 2,
        });
    }
    let mut state = reservoir.initial_state();
    let mut rows = Vec::with_capacity(series.len() - 1);
    let mut targets = Vec::with_capacity(series.len() - 1);
    for d in 0..series.len() - 1 {
        let (features, next) = reservoir.step(
            &state,
            series.pitting[d],
            series.humidity[d],
            series.temperature[d],
        )?;
        rows.push(features);
        targets.push(series.pitting[d + 1]);
        state = next;
    }
    Ok(FeatureMatrix { rows, targets })
}

/// Closed-loop forecast.
///
/// Day 0 is the initial reading and days `1..=warmup` are observed, so true
/// pitting drives days `0..=warmup`. Every later day is driven by the
/// previous day's prediction clamped to `[0, 1]`. Returns the predictions for
/// days `warmup + 1 .. len`, i.e. `len - 1 - warmup` values.
pub fn run_closed_loop<R, F>(reservoir: &R, readout: F, series: &Series, warmup: usize) -> Result<Vec<f64>>
where
    R: Reservoir,
    F: Fn(&[f64]) -> f64,
{
    if warmup == 0 {
        return Err(ReservoirError::EmptyWarmup);
    }
    if series.len() < warmup + 2 {
        return Err(ReservoirError::HorizonTooShort {
            warmup,
            len: series.len(),
        });
    }
    let mut state = reservoir.initial_state();
    let mut predictions = Vec::with_capacity(series.len() - 1 - warmup);
    let mut x = series.pitting[0];
    for d in 0..series.len() - 1 {
        if d <= warmup {
            x = series.pitting[d];
        }
        let (features, next) = reservoir.step(&state, x, series.humidity[d], series.temperature[d])?;
        state = next;
        let predicted = readout(&features).clamp(0.0, 1.0);
        if d >= warmup {
            predictions.push(predicted);
        }
        x = predicted;
    }
    Ok(predictions)
}

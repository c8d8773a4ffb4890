//! Feed-forward quantum reservoir with expectation-value feedback.
//!
//! Each step runs a fresh circuit on `|0...0>`:
//!
//! 1. `Ry(a x + c_h h + c_t t)` on qubit 0 and `Ry(b y_i)` on qubits `1..n`,
//! 2. the entangling layer,
//! 3. `n_blocks` repetitions of `[Ry(b y_i) on all; entangle; Ry(b y_i) on all]`.
//!
//! The exact `<Z_i>` and `<Z_i Z_j>` values are the features, and the next
//! feedback angles are `y_i = arccos(<Z_i>)`. An onion reservoir runs several
//! such layers side by side on the same input, each with its own `b` and its
//! own feedback.

use serde::{Deserialize, Serialize};

use crate::quantum::PureState;
use crate::reservoir::{check_finite, Reservoir, ReservoirError, Result};

pub const DEFAULT_A: f64 = -0.31;
pub const DEFAULT_B: f64 = 0.1;
pub const DEFAULT_EXOGENOUS_PREFACTOR: f64 = -0.30;
pub const DEFAULT_BLOCKS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QrcLayerConfig {
    pub n_qubits: usize,
    /// Pitting input prefactor.
    pub a: f64,
    /// Feedback prefactor.
    pub b: f64,
    pub c_h: f64,
    pub c_t: f64,
    pub n_blocks: usize,
}

impl QrcLayerConfig {
    pub fn new(n_qubits: usize, a: f64, b: f64) -> Self {
        Self {
            n_qubits,
            a,
            b,
            c_h: DEFAULT_EXOGENOUS_PREFACTOR,
            c_t: DEFAULT_EXOGENOUS_PREFACTOR,
            n_blocks: DEFAULT_BLOCKS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(ReservoirError::InvalidConfig(format!(
                "quantum layer needs at least 2 qubits, got {}",
                self.n_qubits
            )));
        }
        for (name, v) in [("a", self.a), ("b", self.b), ("c_h", self.c_h), ("c_t", self.c_t)] {
            if !v.is_finite() {
                return Err(ReservoirError::InvalidConfig(format!("prefactor {name} = {v}")));
            }
        }
        Ok(())
    }

    /// `n` single-qubit plus `n(n-1)/2` pair expectations.
    pub fn feature_len(&self) -> usize {
        self.n_qubits + self.n_qubits * (self.n_qubits - 1) / 2
    }
}

/// Feedback angles, one per qubit, each in `[0, pi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QrcLayerState {
    pub y: Vec<f64>,
}

impl QrcLayerState {
    /// All-zero feedback, the reading of `|0...0>`.
    pub fn zeros(n_qubits: usize) -> Self {
        Self { y: vec![0.0; n_qubits] }
    }
}

/// One circuit step. Returns the layer's `[<Z_i>..., <Z_i Z_j>...]` and the
/// next feedback state.
pub fn qrc_step(
    config: &QrcLayerConfig,
    state: &QrcLayerState,
    x: f64,
    h: f64,
    t: f64,
) -> Result<(Vec<f64>, QrcLayerState)> {
    check_finite("x", x)?;
    check_finite("h", h)?;
    check_finite("t", t)?;
    let n = config.n_qubits;
    if state.y.len() != n {
        return Err(ReservoirError::Shape(format!(
            "feedback has {} angles for {n} qubits",
            state.y.len()
        )));
    }
    if let Some(&bad) = state.y.iter().find(|v| !v.is_finite()) {
        return Err(ReservoirError::NonFiniteInput { name: "y", value: bad });
    }

    let mut psi = PureState::zero(n);
    psi.apply_ry_in_place(config.a * x + config.c_h * h + config.c_t * t, 0)?;
    for q in 1..n {
        psi.apply_ry_in_place(config.b * state.y[q], q)?;
    }
    psi.entangle_in_place()?;
    for _ in 0..config.n_blocks {
        for q in 0..n {
            psi.apply_ry_in_place(config.b * state.y[q], q)?;
        }
        psi.entangle_in_place()?;
        for q in 0..n {
            psi.apply_ry_in_place(config.b * state.y[q], q)?;
        }
    }

    // Rounding can push a sum of probabilities one ulp past +-1.
    let (z, zz) = psi.z_features();
    let features: Vec<f64> = z.into_iter().chain(zz).map(|v| v.clamp(-1.0, 1.0)).collect();
    let next = QrcLayerState {
        y: features[..n].iter().map(|v| v.acos()).collect(),
    };
    Ok((features, next))
}

/// Layers sharing the input, differing in `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnionQrcConfig {
    pub layers: Vec<QrcLayerConfig>,
}

impl OnionQrcConfig {
    pub fn new(layers: Vec<QrcLayerConfig>) -> Result<Self> {
        if layers.is_empty() {
            return Err(ReservoirError::InvalidConfig("onion needs at least one layer".into()));
        }
        for l in &layers {
            l.validate()?;
        }
        Ok(Self { layers })
    }

    /// `count` layers with the default geometric `b` ladder.
    pub fn with_layers(n_qubits: usize, a: f64, count: usize) -> Result<Self> {
        let layers = b_ladder(DEFAULT_B, count)
            .into_iter()
            .map(|b| QrcLayerConfig::new(n_qubits, a, b))
            .collect();
        Self::new(layers)
    }

    pub fn initial_states(&self) -> Vec<QrcLayerState> {
        self.layers.iter().map(|l| QrcLayerState::zeros(l.n_qubits)).collect()
    }

    /// Per-layer features plus the trailing constant.
    pub fn feature_len(&self) -> usize {
        self.layers.iter().map(QrcLayerConfig::feature_len).sum::<usize>() + 1
    }
}

/// Geometric ladder `center * 2^(i - (count-1)/2)`: `{0.05, 0.1, 0.2}` for
/// three layers around 0.1.
pub fn b_ladder(center: f64, count: usize) -> Vec<f64> {
    let mid = (count as f64 - 1.0) / 2.0;
    (0..count).map(|i| center * 2f64.powf(i as f64 - mid)).collect()
}

/// Runs every layer on the same `(x, h, t)`, concatenating features in layer
/// order and appending the constant 1.
pub fn onion_step(
    config: &OnionQrcConfig,
    states: &[QrcLayerState],
    x: f64,
    h: f64,
    t: f64,
) -> Result<(Vec<f64>, Vec<QrcLayerState>)> {
    if states.len() != config.layers.len() {
        return Err(ReservoirError::StateCount {
            expected: config.layers.len(),
            got: states.len(),
        });
    }
    let mut features = Vec::with_capacity(config.feature_len());
    let mut next = Vec::with_capacity(states.len());
    for (layer, state) in config.layers.iter().zip(states) {
        let (f, s) = qrc_step(layer, state, x, h, t)?;
        features.extend(f);
        next.push(s);
    }
    features.push(1.0);
    Ok((features, next))
}

impl Reservoir for OnionQrcConfig {
    type State = Vec<QrcLayerState>;

    fn initial_state(&self) -> Self::State {
        self.initial_states()
    }

    fn feature_len(&self) -> usize {
        OnionQrcConfig::feature_len(self)
    }

    fn step(&self, state: &Self::State, x: f64, h: f64, t: f64) -> Result<(Vec<f64>, Self::State)> {
        onion_step(self, state, x, h, t)
    }
}

//! Classical echo state networks.
//!
//! `X_{t+1} = tanh(W_in [1, P_t, h_t, t_t]^T + W X_t)` with either a plain
//! random `W` rescaled to a target spectral radius, or an onion `W`: a
//! block-diagonal matrix whose blocks each keep their eigenvalues inside an
//! annulus `eps0 <= |λ| <= eps1`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::linalg::{matmul, real_orthogonal_factor, spectral_radius, ComplexMatrix, C64};
use crate::reservoir::{
    check_finite, run_closed_loop, run_teacher_forced, FeatureMatrix, Reservoir, ReservoirError, Result,
    Series,
};

pub const DEFAULT_SPECTRAL_RADIUS: f64 = 0.9;
pub const DEFAULT_INPUT_SCALE: f64 = 0.5;
/// Inputs per step: bias, pitting, humidity, temperature.
pub const INPUT_WIDTH: usize = 4;
const DRAW_ATTEMPTS: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EsnConfig {
    pub size: usize,
    pub spectral_radius_target: f64,
    pub input_scale: f64,
    pub seed: u64,
}

impl EsnConfig {
    pub fn new(size: usize, seed: u64) -> Self {
        Self {
            size,
            spectral_radius_target: DEFAULT_SPECTRAL_RADIUS,
            input_scale: DEFAULT_INPUT_SCALE,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(ReservoirError::InvalidConfig("reservoir size must be at least 1".into()));
        }
        if !(self.spectral_radius_target > 0.0 && self.spectral_radius_target < 1.0) {
            return Err(ReservoirError::InvalidConfig(format!(
                "spectral radius target {} outside (0, 1)",
                self.spectral_radius_target
            )));
        }
        if !self.input_scale.is_finite() {
            return Err(ReservoirError::InvalidConfig("input scale must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusBlockConfig {
    pub size: usize,
    pub eps0: f64,
    pub eps1: f64,
}

impl AnnulusBlockConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(ReservoirError::InvalidConfig("annulus block size must be at least 1".into()));
        }
        if self.eps1 >= 1.0 {
            return Err(ReservoirError::InvalidConfig(format!(
                "eps1 = {} >= 1 breaks the echo state property",
                self.eps1
            )));
        }
        if !(self.eps0 >= 0.0 && self.eps0 <= self.eps1) {
            return Err(ReservoirError::InvalidConfig(format!(
                "need 0 <= eps0 <= eps1, got eps0 = {}, eps1 = {}",
                self.eps0, self.eps1
            )));
        }
        Ok(())
    }
}

/// Seed for the `index`-th derived stream; index 0 is the seed itself.
fn derive_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Uniform `[-1, 1]` matrix rescaled to the target spectral radius.
pub fn generate_esn_matrix(config: &EsnConfig) -> Result<ComplexMatrix> {
    config.validate()?;
    let n = config.size;
    for attempt in 0..DRAW_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, attempt));
        let data: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let w = ComplexMatrix::from_real(n, n, &data)?;
        let rho = spectral_radius(&w)?;
        if rho > 1e-12 {
            return Ok(w.scale_real(config.spectral_radius_target / rho));
        }
    }
    Err(ReservoirError::InvalidConfig(format!(
        "random reservoir draw degenerate after {DRAW_ATTEMPTS} attempts"
    )))
}

/// Real matrix with every eigenvalue modulus in `[eps0, eps1]`: a real
/// canonical form of 2x2 rotation-scaling blocks (plus one real eigenvalue of
/// random sign when the size is odd) conjugated by a random orthogonal matrix.
pub fn generate_annulus_matrix(config: &AnnulusBlockConfig, seed: u64) -> Result<ComplexMatrix> {
    config.validate()?;
    let n = config.size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = |rng: &mut ChaCha8Rng| {
        if config.eps1 > config.eps0 {
            rng.random_range(config.eps0..=config.eps1)
        } else {
            config.eps0
        }
    };
    let mut canonical = ComplexMatrix::zeros(n, n);
    let mut k = 0;
    while k + 1 < n {
        let r = radius(&mut rng);
        let theta = rng.random_range(0.0..2.0 * PI);
        let (s, c) = theta.sin_cos();
        canonical[(k, k)] = C64::new(r * c, 0.0);
        canonical[(k, k + 1)] = C64::new(-r * s, 0.0);
        canonical[(k + 1, k)] = C64::new(r * s, 0.0);
        canonical[(k + 1, k + 1)] = C64::new(r * c, 0.0);
        k += 2;
    }
    if n % 2 == 1 {
        let r = radius(&mut rng);
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        canonical[(n - 1, n - 1)] = C64::new(sign * r, 0.0);
    }
    if canonical.frobenius_norm() == 0.0 {
        return Ok(canonical);
    }
    let gaussian: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
    let q = real_orthogonal_factor(&ComplexMatrix::from_real(n, n, &gaussian)?)?;
    Ok(matmul(&matmul(&q, &canonical)?, &q.transpose())?)
}

/// Block-diagonal assembly of annulus blocks. Block `i` draws from the
/// `i`-th derived seed, so a single block reproduces
/// [`generate_annulus_matrix`] with the same seed.
pub fn onion_esn_matrix(blocks: &[AnnulusBlockConfig], seed: u64) -> Result<ComplexMatrix> {
    if blocks.is_empty() {
        return Err(ReservoirError::InvalidConfig("onion ESN needs at least one block".into()));
    }
    let mats = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| generate_annulus_matrix(b, derive_seed(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexMatrix::block_diag(&mats))
}

/// Reservoir activations, each in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EsnState(pub Vec<f64>);

impl EsnState {
    pub fn zeros(size: usize) -> Self {
        Self(vec![0.0; size])
    }
}

/// `tanh(W_in [1, P, h, t]^T + W x)`.
pub fn esn_step(
    w_in: &ComplexMatrix,
    w: &ComplexMatrix,
    state: &EsnState,
    p: f64,
    h: f64,
    t: f64,
) -> Result<EsnState> {
    let n = state.0.len();
    if w_in.shape() != (n, INPUT_WIDTH) || w.shape() != (n, n) {
        return Err(ReservoirError::Shape(format!(
            "W_in {:?} and W {:?} for state of size {n}",
            w_in.shape(),
            w.shape()
        )));
    }
    check_finite("P", p)?;
    check_finite("h", h)?;
    check_finite("t", t)?;
    let u = [1.0, p, h, t];
    let next = (0..n)
        .map(|i| {
            let drive: f64 = w_in.row(i).iter().zip(u).map(|(a, b)| a.re * b).sum();
            let recur: f64 = w.row(i).iter().zip(&state.0).map(|(a, b)| a.re * b).sum();
            (drive + recur).tanh()
        })
        .collect();
    Ok(EsnState(next))
}

/// How the recurrent matrix of a classical reservoir is built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecurrentSpec {
    Standard(EsnConfig),
    Onion {
        blocks: Vec<AnnulusBlockConfig>,
        input_scale: f64,
        seed: u64,
    },
}

impl RecurrentSpec {
    pub fn size(&self) -> usize {
        match self {
            RecurrentSpec::Standard(c) => c.size,
            RecurrentSpec::Onion { blocks, .. } => blocks.iter().map(|b| b.size).sum(),
        }
    }

    fn input_scale_and_seed(&self) -> (f64, u64) {
        match self {
            RecurrentSpec::Standard(c) => (c.input_scale, c.seed),
            RecurrentSpec::Onion { input_scale, seed, .. } => (*input_scale, *seed),
        }
    }
}

/// A classical reservoir with its matrices materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalReservoir {
    pub spec: RecurrentSpec,
    pub w_in: ComplexMatrix,
    pub w: ComplexMatrix,
}

impl ClassicalReservoir {
    pub fn build(spec: RecurrentSpec) -> Result<Self> {
        let w = match &spec {
            RecurrentSpec::Standard(c) => generate_esn_matrix(c)?,
            RecurrentSpec::Onion { blocks, seed, .. } => onion_esn_matrix(blocks, *seed)?,
        };
        let (scale, seed) = spec.input_scale_and_seed();
        let w_in = input_matrix(w.rows(), scale, seed)?;
        Ok(Self { spec, w_in, w })
    }

    pub fn size(&self) -> usize {
        self.w.rows()
    }

    pub fn step_state(&self, state: &EsnState, p: f64, h: f64, t: f64) -> Result<EsnState> {
        esn_step(&self.w_in, &self.w, state, p, h, t)
    }
}

/// `size x 4` input weights, uniform on `[-scale, scale]`, drawn from a
/// stream separate from the recurrent matrix.
pub fn input_matrix(size: usize, scale: f64, seed: u64) -> Result<ComplexMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5DEE_CE66_D1CE_4E5B);
    let data: Vec<f64> = (0..size * INPUT_WIDTH)
        .map(|_| if scale > 0.0 { rng.random_range(-scale..=scale) } else { 0.0 })
        .collect();
    Ok(ComplexMatrix::from_real(size, INPUT_WIDTH, &data)?)
}

impl Reservoir for ClassicalReservoir {
    type State = EsnState;

    fn initial_state(&self) -> EsnState {
        EsnState::zeros(self.size())
    }

    /// `[1, P, h, t, state]`.
    fn feature_len(&self) -> usize {
        INPUT_WIDTH + self.size()
    }

    fn step(&self, state: &EsnState, x: f64, h: f64, t: f64) -> Result<(Vec<f64>, EsnState)> {
        let next = self.step_state(state, x, h, t)?;
        let mut features = Vec::with_capacity(self.feature_len());
        features.extend([1.0, x, h, t]);
        features.extend(&next.0);
        Ok((features, next))
    }
}

pub enum EsnMode<'a> {
    TeacherForced,
    ClosedLoop {
        readout: &'a dyn Fn(&[f64]) -> f64,
        warmup: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum EsnOutput {
    Features(FeatureMatrix),
    Predictions(Vec<f64>),
}

pub fn run_esn(reservoir: &ClassicalReservoir, series: &Series, mode: EsnMode<'_>) -> Result<EsnOutput> {
    match mode {
        EsnMode::TeacherForced => run_teacher_forced(reservoir, series).map(EsnOutput::Features),
        EsnMode::ClosedLoop { readout, warmup } => {
            run_closed_loop(reservoir, readout, series, warmup).map(EsnOutput::Predictions)
        }
    }
}

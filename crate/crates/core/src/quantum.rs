//! Small-register quantum simulation.
//!
//! Statevectors drive the reservoir circuits, density matrices and Kraus
//! channels drive the spectrum analysis. Qubit 0 is the most significant bit
//! of a basis index, i.e. the top wire of a circuit diagram.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::linalg::{kron, matmul, ComplexMatrix, LinalgError, C64, ONE, ZERO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("qubit index {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("control and target must differ (both {0})")]
    SameQubit(usize),
    #[error("operation needs at least {needed} qubits, got {n_qubits}")]
    TooFewQubits { needed: usize, n_qubits: usize },
    #[error("non-finite rotation angle {0}")]
    NonFiniteAngle(f64),
    #[error("state norm {0} deviates from 1")]
    NotNormalized(f64),
    #[error("expected dimension {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("gate must be 2x2, got {0}x{1}")]
    GateShape(usize, usize),
    #[error("measurement set must not be empty")]
    EmptyMeasurement,
    #[error("Kraus completeness violated by {0:e}")]
    Incomplete(f64),
    #[error("expected {expected} angles, got {got}")]
    AngleCount { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, QuantumError>;

/// Normalized statevector over `n_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl PureState {
    /// `|0...0>`.
    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[index] = ONE;
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if amplitudes.len() != dim {
            return Err(QuantumError::Dimension {
                expected: dim,
                got: amplitudes.len(),
            });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-10 {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(QuantumError::QubitOutOfRange {
                qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    pub fn apply_1q_in_place(&mut self, gate: &ComplexMatrix, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        if gate.shape() != (2, 2) {
            return Err(QuantumError::GateShape(gate.rows(), gate.cols()));
        }
        let g = [gate[(0, 0)], gate[(0, 1)], gate[(1, 0)], gate[(1, 1)]];
        apply_1q_raw(&mut self.amplitudes, self.n_qubits, &g, qubit);
        Ok(())
    }

    /// Real rotation about Y, applied without building a matrix.
    pub fn apply_ry_in_place(&mut self, theta: f64, qubit: usize) -> Result<()> {
        self.check_qubit(qubit)?;
        if !theta.is_finite() {
            return Err(QuantumError::NonFiniteAngle(theta));
        }
        apply_ry_raw(&mut self.amplitudes, self.n_qubits, theta, qubit);
        Ok(())
    }

    pub fn apply_cnot_in_place(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(QuantumError::SameQubit(control));
        }
        apply_cnot_raw(&mut self.amplitudes, self.n_qubits, control, target);
        Ok(())
    }

    pub fn entangle_in_place(&mut self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(QuantumError::TooFewQubits {
                needed: 2,
                n_qubits: self.n_qubits,
            });
        }
        entangle_raw(&mut self.amplitudes, self.n_qubits);
        Ok(())
    }

    /// Probability of reading 1 on each qubit, in one pass over the amplitudes.
    fn excited_probabilities(&self) -> Vec<f64> {
        let n = self.n_qubits;
        let mut p = vec![0.0; n];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            let w = a.norm_sqr();
            if w == 0.0 {
                continue;
            }
            for (q, pq) in p.iter_mut().enumerate() {
                if idx & mask(n, q) != 0 {
                    *pq += w;
                }
            }
        }
        p
    }

    /// `<Z_i>` for every qubit followed by `<Z_i Z_j>` for every pair `i < j`
    /// in lexicographic order.
    pub fn z_features(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_qubits;
        let mut z = vec![0.0; n];
        let mut zz = vec![0.0; n * (n.saturating_sub(1)) / 2];
        for (idx, a) in self.amplitudes.iter().enumerate() {
            let w = a.norm_sqr();
            if w == 0.0 {
                continue;
            }
            let signs: Vec<f64> = (0..n)
                .map(|q| if idx & mask(n, q) == 0 { 1.0 } else { -1.0 })
                .collect();
            for q in 0..n {
                z[q] += w * signs[q];
            }
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    zz[k] += w * signs[i] * signs[j];
                    k += 1;
                }
            }
        }
        (z, zz)
    }
}

#[inline]
fn mask(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

fn apply_1q_raw(amps: &mut [C64], n_qubits: usize, g: &[C64; 4], qubit: usize) {
    let m = mask(n_qubits, qubit);
    for i0 in 0..amps.len() {
        if i0 & m != 0 {
            continue;
        }
        let i1 = i0 | m;
        let (a0, a1) = (amps[i0], amps[i1]);
        amps[i0] = g[0] * a0 + g[1] * a1;
        amps[i1] = g[2] * a0 + g[3] * a1;
    }
}

fn apply_ry_raw(amps: &mut [C64], n_qubits: usize, theta: f64, qubit: usize) {
    let (s, c) = (theta / 2.0).sin_cos();
    let m = mask(n_qubits, qubit);
    for i0 in 0..amps.len() {
        if i0 & m != 0 {
            continue;
        }
        let i1 = i0 | m;
        let (a0, a1) = (amps[i0], amps[i1]);
        amps[i0] = a0 * c - a1 * s;
        amps[i1] = a0 * s + a1 * c;
    }
}

fn apply_cnot_raw(amps: &mut [C64], n_qubits: usize, control: usize, target: usize) {
    let cm = mask(n_qubits, control);
    let tm = mask(n_qubits, target);
    for i in 0..amps.len() {
        if i & cm != 0 && i & tm == 0 {
            amps.swap(i, i | tm);
        }
    }
}

fn entangle_raw(amps: &mut [C64], n_qubits: usize) {
    for i in 0..n_qubits {
        for j in i + 1..n_qubits {
            apply_cnot_raw(amps, n_qubits, i, j);
        }
    }
}

/// `[[cos(θ/2), -sin(θ/2)], [sin(θ/2), cos(θ/2)]]`.
pub fn ry_gate(theta: f64) -> Result<ComplexMatrix> {
    if !theta.is_finite() {
        return Err(QuantumError::NonFiniteAngle(theta));
    }
    let (s, c) = (theta / 2.0).sin_cos();
    Ok(ComplexMatrix::from_real_rows(&[vec![c, -s], vec![s, c]]))
}

pub fn apply_1q(state: &PureState, gate: &ComplexMatrix, qubit: usize) -> Result<PureState> {
    let mut out = state.clone();
    out.apply_1q_in_place(gate, qubit)?;
    Ok(out)
}

pub fn apply_cnot(state: &PureState, control: usize, target: usize) -> Result<PureState> {
    let mut out = state.clone();
    out.apply_cnot_in_place(control, target)?;
    Ok(out)
}

/// CNOT(i, j) for every ordered pair `i < j`, in lexicographic order.
pub fn entangling_layer(state: &PureState) -> Result<PureState> {
    let mut out = state.clone();
    out.entangle_in_place()?;
    Ok(out)
}

pub fn expectation_z(state: &PureState, i: usize) -> Result<f64> {
    state.check_qubit(i)?;
    Ok(1.0 - 2.0 * state.excited_probabilities()[i])
}

pub fn expectation_zz(state: &PureState, i: usize, j: usize) -> Result<f64> {
    state.check_qubit(i)?;
    state.check_qubit(j)?;
    if i == j {
        return Err(QuantumError::SameQubit(i));
    }
    let n = state.n_qubits;
    let (mi, mj) = (mask(n, i), mask(n, j));
    Ok(state
        .amplitudes
        .iter()
        .enumerate()
        .map(|(idx, a)| {
            let parity = ((idx & mi != 0) as u8) ^ ((idx & mj != 0) as u8);
            if parity == 0 { a.norm_sqr() } else { -a.norm_sqr() }
        })
        .sum())
}

/// Matrix of the entangling layer on `n_qubits`.
pub fn entangling_layer_unitary(n_qubits: usize) -> Result<ComplexMatrix> {
    if n_qubits < 2 {
        return Err(QuantumError::TooFewQubits {
            needed: 2,
            n_qubits,
        });
    }
    Ok(circuit_unitary(n_qubits, |amps| entangle_raw(amps, n_qubits)))
}

/// Column-by-column matrix of a circuit given as an in-place amplitude map.
fn circuit_unitary(n_qubits: usize, circuit: impl Fn(&mut [C64])) -> ComplexMatrix {
    let dim = 1 << n_qubits;
    let mut u = ComplexMatrix::zeros(dim, dim);
    let mut col = vec![ZERO; dim];
    for j in 0..dim {
        col.iter_mut().for_each(|a| *a = ZERO);
        col[j] = ONE;
        circuit(&mut col);
        for (i, &a) in col.iter().enumerate() {
            u[(i, j)] = a;
        }
    }
    u
}

/// Unitary of `depth` hardware-efficient layers, each `Ry(prefactor * angle)`
/// on every qubit followed by the entangling layer. `angles` is layer-major:
/// `angles[layer * n_qubits + qubit]`.
pub fn hea_step_unitary(
    n_qubits: usize,
    angles: &[f64],
    prefactor: f64,
    depth: usize,
) -> Result<ComplexMatrix> {
    if n_qubits < 2 {
        return Err(QuantumError::TooFewQubits {
            needed: 2,
            n_qubits,
        });
    }
    if angles.len() != n_qubits * depth {
        return Err(QuantumError::AngleCount {
            expected: n_qubits * depth,
            got: angles.len(),
        });
    }
    if !prefactor.is_finite() {
        return Err(QuantumError::NonFiniteAngle(prefactor));
    }
    if let Some(&bad) = angles.iter().find(|a| !(prefactor * **a).is_finite()) {
        return Err(QuantumError::NonFiniteAngle(bad));
    }
    Ok(circuit_unitary(n_qubits, |amps| {
        for layer in angles.chunks(n_qubits) {
            for (q, &angle) in layer.iter().enumerate() {
                apply_ry_raw(amps, n_qubits, prefactor * angle, q);
            }
            entangle_raw(amps, n_qubits);
        }
    }))
}

/// Density matrix over `n_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(n_qubits: usize, matrix: ComplexMatrix) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if matrix.shape() != (dim, dim) {
            return Err(QuantumError::Dimension {
                expected: dim,
                got: matrix.rows(),
            });
        }
        Ok(Self { n_qubits, matrix })
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self {
            n_qubits,
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn from_pure(state: &PureState) -> Self {
        let v = ComplexMatrix::column(state.amplitudes());
        Self {
            n_qubits: state.n_qubits,
            matrix: matmul(&v, &v.adjoint()).expect("outer product shapes agree"),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }
}

/// Set of Kraus operators satisfying `Σ K^H K = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    n_qubits: usize,
    operators: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(n_qubits: usize, operators: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if operators.is_empty() {
            return Err(QuantumError::Incomplete(f64::INFINITY));
        }
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for k in &operators {
            if k.shape() != (dim, dim) {
                return Err(QuantumError::Dimension {
                    expected: dim,
                    got: k.rows(),
                });
            }
            sum = sum.add(&matmul(&k.adjoint(), k)?)?;
        }
        let defect = sum.sub(&ComplexMatrix::identity(dim))?.frobenius_norm();
        if defect > 1e-10 {
            return Err(QuantumError::Incomplete(defect));
        }
        Ok(Self {
            n_qubits,
            operators,
        })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            operators: vec![ComplexMatrix::identity(1 << n_qubits)],
        }
    }

    pub fn unitary(n_qubits: usize, u: ComplexMatrix) -> Result<Self> {
        Self::new(n_qubits, vec![u])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }
}

/// Projective Z measurement of the `measured` qubits, as a dephasing channel
/// with one projector per outcome string. Outcomes are enumerated in binary
/// order over the measured qubits sorted ascending.
pub fn z_measurement_channel(n_qubits: usize, measured: &BTreeSet<usize>) -> Result<KrausChannel> {
    if measured.is_empty() {
        return Err(QuantumError::EmptyMeasurement);
    }
    if let Some(&q) = measured.iter().find(|&&q| q >= n_qubits) {
        return Err(QuantumError::QubitOutOfRange { qubit: q, n_qubits });
    }
    let projectors = [
        ComplexMatrix::from_real_diag(&[1.0, 0.0]),
        ComplexMatrix::from_real_diag(&[0.0, 1.0]),
    ];
    let identity = ComplexMatrix::identity(2);
    let measured: Vec<usize> = measured.iter().copied().collect();
    let mut operators = Vec::with_capacity(1 << measured.len());
    for outcome in 0..1usize << measured.len() {
        let mut op = ComplexMatrix::identity(1);
        for q in 0..n_qubits {
            let factor = match measured.iter().position(|&m| m == q) {
                Some(pos) => {
                    let bit = (outcome >> (measured.len() - 1 - pos)) & 1;
                    &projectors[bit]
                }
                None => &identity,
            };
            op = kron(&op, factor);
        }
        operators.push(op);
    }
    KrausChannel::new(n_qubits, operators)
}

/// `ρ' = Σ_k K_k ρ K_k^H`.
pub fn apply_channel(rho: &DensityMatrix, channel: &KrausChannel) -> Result<DensityMatrix> {
    if rho.n_qubits != channel.n_qubits {
        return Err(QuantumError::Dimension {
            expected: 1 << channel.n_qubits,
            got: 1 << rho.n_qubits,
        });
    }
    let dim = 1usize << rho.n_qubits;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for k in &channel.operators {
        let term = matmul(&matmul(k, &rho.matrix)?, &k.adjoint())?;
        out = out.add(&term)?;
    }
    Ok(DensityMatrix {
        n_qubits: rho.n_qubits,
        matrix: out,
    })
}

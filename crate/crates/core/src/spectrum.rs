//! Superoperator spectra of one reservoir time step.
//!
//! A step is a hardware-efficient unitary followed by a layer of projective
//! Z measurements. Density matrices are vectorized row-major, so the map
//! `ρ -> U ρ U^H` is `U ⊗ conj(U)` and a Kraus channel is `Σ K ⊗ conj(K)`.
//! The eigenvalues of the composite map set the memory timescales of the
//! reservoir: unit modulus for a purely unitary step, shrinking as the
//! rotation prefactor grows or as more qubits are measured.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{eig_general, kron, matmul, ComplexMatrix, LinalgError, C64};
use crate::quantum::{hea_step_unitary, z_measurement_channel, KrausChannel, QuantumError};

pub const MIN_QUBITS: usize = 2;
pub const MAX_QUBITS: usize = 6;
pub const DEFAULT_DEPTH: usize = 2;
pub const DEFAULT_ANGLE_SEED: u64 = 0;
/// Base angles are drawn from `[-BASE_ANGLE_RANGE, BASE_ANGLE_RANGE]`, so a
/// prefactor of 4 spans at most one full turn and sweeps do not alias.
pub const BASE_ANGLE_RANGE: f64 = PI / 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("unitary check failed: ||U^H U - I||_F = {0:e}")]
    NotUnitary(f64),
    #[error("Kraus completeness violated by {0:e}")]
    Incomplete(f64),
    #[error("qubit count {0} outside supported range [{MIN_QUBITS}, {MAX_QUBITS}]")]
    UnsupportedQubits(usize),
    #[error("sweep parameter list is empty")]
    EmptySweep,
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, SpectrumError>;

/// Linear map on row-major vectorized density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &Superoperator) -> Result<Superoperator> {
        Ok(Superoperator {
            n_qubits: self.n_qubits,
            matrix: matmul(&self.matrix, &first.matrix)?,
        })
    }

    /// Sorted by descending modulus, then argument.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        Ok(eig_general(&self.matrix)?.into_vec())
    }
}

fn qubits_of_dim(dim: usize) -> usize {
    dim.trailing_zeros() as usize
}

pub fn superop_of_unitary(u: &ComplexMatrix) -> Result<Superoperator> {
    let defect = u.unitarity_defect()?;
    if defect > 1e-10 {
        return Err(SpectrumError::NotUnitary(defect));
    }
    Ok(Superoperator {
        n_qubits: qubits_of_dim(u.rows()),
        matrix: kron(u, &u.conj()),
    })
}

pub fn superop_of_channel(channel: &KrausChannel) -> Result<Superoperator> {
    let ops = channel.operators();
    let dim = 1usize << channel.n_qubits();
    let mut completeness = ComplexMatrix::zeros(dim, dim);
    let mut matrix = ComplexMatrix::zeros(dim * dim, dim * dim);
    for k in ops {
        completeness = completeness.add(&matmul(&k.adjoint(), k)?)?;
        matrix = matrix.add(&kron(k, &k.conj()))?;
    }
    let defect = completeness.sub(&ComplexMatrix::identity(dim))?.frobenius_norm();
    if defect > 1e-8 {
        return Err(SpectrumError::Incomplete(defect));
    }
    Ok(Superoperator {
        n_qubits: channel.n_qubits(),
        matrix,
    })
}

/// Superoperator of one step: the HEA unitary, then the measurement layer
/// when `measured` is non-empty.
pub fn step_superoperator(
    n_qubits: usize,
    angles: &[f64],
    prefactor: f64,
    depth: usize,
    measured: &BTreeSet<usize>,
) -> Result<Superoperator> {
    if !(MIN_QUBITS..=MAX_QUBITS).contains(&n_qubits) {
        return Err(SpectrumError::UnsupportedQubits(n_qubits));
    }
    let unitary = superop_of_unitary(&hea_step_unitary(n_qubits, angles, prefactor, depth)?)?;
    if measured.is_empty() {
        return Ok(unitary);
    }
    let measurement = superop_of_channel(&z_measurement_channel(n_qubits, measured)?)?;
    measurement.compose(&unitary)
}

pub fn step_spectrum(
    n_qubits: usize,
    angles: &[f64],
    prefactor: f64,
    depth: usize,
    measured: &BTreeSet<usize>,
) -> Result<Vec<C64>> {
    step_superoperator(n_qubits, angles, prefactor, depth, measured)?.eigenvalues()
}

/// Mean modulus after removing the single eigenvalue closest to 1, the
/// fixed point every trace-preserving step keeps.
pub fn mean_nontrivial_modulus(eigenvalues: &[C64]) -> f64 {
    if eigenvalues.len() < 2 {
        return 0.0;
    }
    let one = C64::new(1.0, 0.0);
    let skip = eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - one).norm().total_cmp(&(b.1 - one).norm()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let total: f64 = eigenvalues
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != skip)
        .map(|(_, z)| z.norm())
        .sum();
    total / (eigenvalues.len() - 1) as f64
}

/// Fixed base angles, uniform on `[-BASE_ANGLE_RANGE, BASE_ANGLE_RANGE]`.
pub fn seeded_angles(n_qubits: usize, depth: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_qubits * depth)
        .map(|_| rng.random_range(-BASE_ANGLE_RANGE..=BASE_ANGLE_RANGE))
        .collect()
}

/// Base configuration of a spectrum sweep. Sweeps vary either the prefactor
/// or the measured set and keep everything else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeaSpectrumConfig {
    pub n_qubits: usize,
    pub depth: usize,
    pub seed: u64,
    pub angles: Vec<f64>,
    pub prefactor: f64,
    pub measured: BTreeSet<usize>,
}

impl HeaSpectrumConfig {
    /// Angles drawn from `seed`, prefactor 1, first qubit measured.
    pub fn seeded(n_qubits: usize, depth: usize, seed: u64) -> Self {
        Self {
            n_qubits,
            depth,
            seed,
            angles: seeded_angles(n_qubits, depth, seed),
            prefactor: 1.0,
            measured: BTreeSet::from([0]),
        }
    }

    pub fn spectrum(&self) -> Result<Vec<C64>> {
        step_spectrum(self.n_qubits, &self.angles, self.prefactor, self.depth, &self.measured)
    }
}

/// The first `count` qubits.
pub fn leading_qubits(count: usize) -> BTreeSet<usize> {
    (0..count).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub eigenvalues: Vec<C64>,
    pub mean_nontrivial_modulus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSweepResult {
    pub parameter: String,
    pub points: Vec<SweepPoint>,
    pub metadata: HeaSpectrumConfig,
}

impl SpectrumSweepResult {
    pub fn mean_moduli(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean_nontrivial_modulus).collect()
    }

    /// `parameter_value,re_lambda,im_lambda`, one row per eigenvalue.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("parameter_value,re_lambda,im_lambda\n");
        for p in &self.points {
            for z in &p.eigenvalues {
                let _ = writeln!(out, "{},{:e},{:e}", p.value, z.re, z.im);
            }
        }
        out
    }

    /// Metadata sidecar: qubits, depth, seed, angles and the swept parameter.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "parameter": self.parameter,
            "n_qubits": self.metadata.n_qubits,
            "depth": self.metadata.depth,
            "seed": self.metadata.seed,
            "angles": self.metadata.angles,
            "prefactor": self.metadata.prefactor,
            "measured": self.metadata.measured,
            "values": self.points.iter().map(|p| p.value).collect::<Vec<_>>(),
            "mean_nontrivial_modulus": self.mean_moduli(),
        })
    }
}

fn point(value: f64, config: &HeaSpectrumConfig) -> Result<SweepPoint> {
    let eigenvalues = config.spectrum()?;
    Ok(SweepPoint {
        value,
        mean_nontrivial_modulus: mean_nontrivial_modulus(&eigenvalues),
        eigenvalues,
    })
}

pub fn sweep_prefactor(base: &HeaSpectrumConfig, prefactors: &[f64]) -> Result<SpectrumSweepResult> {
    if prefactors.is_empty() {
        return Err(SpectrumError::EmptySweep);
    }
    let points = prefactors
        .iter()
        .map(|&p| {
            let cfg = HeaSpectrumConfig {
                prefactor: p,
                ..base.clone()
            };
            point(p, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumSweepResult {
        parameter: "prefactor".into(),
        points,
        metadata: base.clone(),
    })
}

/// Each point is labelled by the size of its measured set.
pub fn sweep_measurements(
    base: &HeaSpectrumConfig,
    measured_sets: &[BTreeSet<usize>],
) -> Result<SpectrumSweepResult> {
    if measured_sets.is_empty() {
        return Err(SpectrumError::EmptySweep);
    }
    let points = measured_sets
        .iter()
        .map(|m| {
            let cfg = HeaSpectrumConfig {
                measured: m.clone(),
                ..base.clone()
            };
            point(m.len() as f64, &cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumSweepResult {
        parameter: "measured_qubits".into(),
        points,
        metadata: base.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{entangling_layer_unitary, ry_gate};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Greedy nearest matching; worst pair distance.
    fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
        let mut used = vec![false; b.len()];
        let mut worst: f64 = 0.0;
        for x in a {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, y)| (j, (x - y).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            used[j] = true;
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn identity_unitary_superop() {
        let s = superop_of_unitary(&ComplexMatrix::identity(2)).unwrap();
        assert_eq!(*s.matrix(), ComplexMatrix::identity(4));
        assert!(s.eigenvalues().unwrap().iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn phase_unitary_superop() {
        let phi: f64 = 0.9;
        let u = ComplexMatrix::from_diag(&[c(1.0, 0.0), C64::from_polar(1.0, phi)]);
        let s = superop_of_unitary(&u).unwrap();
        // U ⊗ conj(U) = diag(1, e^{-iφ}, e^{iφ}, 1).
        let expected = ComplexMatrix::from_diag(&[
            c(1.0, 0.0),
            C64::from_polar(1.0, -phi),
            C64::from_polar(1.0, phi),
            c(1.0, 0.0),
        ]);
        assert!(s.matrix().max_abs_diff(&expected).unwrap() < 1e-15);
        let expected_eigs = [c(1.0, 0.0), c(1.0, 0.0), C64::from_polar(1.0, phi), C64::from_polar(1.0, -phi)];
        assert!(multiset_distance(&s.eigenvalues().unwrap(), &expected_eigs) < 1e-12);
    }

    #[test]
    fn non_unitary_rejected_with_deviation() {
        let err = superop_of_unitary(&ComplexMatrix::from_real_diag(&[1.0, 0.5])).unwrap_err();
        match err {
            SpectrumError::NotUnitary(d) => assert!((d - 0.75).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_qubit_measurement_superop() {
        let ch = z_measurement_channel(1, &BTreeSet::from([0])).unwrap();
        let s = superop_of_channel(&ch).unwrap();
        assert_eq!(*s.matrix(), ComplexMatrix::from_real_diag(&[1.0, 0.0, 0.0, 1.0]));
        let e = s.eigenvalues().unwrap();
        assert_eq!(e.len(), 4);
        assert!(multiset_distance(&e, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]) < 1e-15);
        let id = superop_of_channel(&KrausChannel::identity(2)).unwrap();
        assert_eq!(*id.matrix(), ComplexMatrix::identity(16));
    }

    #[test]
    fn superop_matches_direct_channel_action() {
        // vec(K ρ K^H) == (K ⊗ conj K) vec(ρ) for row-major vec.
        let u = matmul(&ry_gate(0.7).unwrap(), &ComplexMatrix::from_diag(&[c(1.0, 0.0), C64::from_polar(1.0, 1.1)])).unwrap();
        let rho = ComplexMatrix::from_rows(&[vec![c(0.4, 0.0), c(0.1, 0.2)], vec![c(0.1, -0.2), c(0.6, 0.0)]]);
        let direct = matmul(&matmul(&u, &rho).unwrap(), &u.adjoint()).unwrap();
        let s = superop_of_unitary(&u).unwrap();
        let via = s.matrix().mul_vec(rho.as_slice()).unwrap();
        for (a, b) in direct.as_slice().iter().zip(&via) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn composed_step_is_contractive() {
        let angles = seeded_angles(3, 2, 5);
        let e = step_spectrum(3, &angles, 1.3, 2, &BTreeSet::from([1])).unwrap();
        assert!(e.iter().all(|z| z.norm() <= 1.0 + 1e-9));
    }

    #[test]
    fn unitary_step_unit_moduli() {
        let angles = seeded_angles(3, 2, 1);
        let e = step_spectrum(3, &angles, 0.8, 2, &BTreeSet::new()).unwrap();
        assert_eq!(e.len(), 64);
        assert!(e.iter().all(|z| (z.norm() - 1.0).abs() < 1e-9));
        assert!((mean_nontrivial_modulus(&e) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_prefactor_matches_explicit_construction() {
        let angles = seeded_angles(2, 2, 3);
        let e = step_spectrum(2, &angles, 0.0, 2, &BTreeSet::from([0])).unwrap();
        let ent = entangling_layer_unitary(2).unwrap();
        let u = matmul(&ent, &ent).unwrap();
        let s_u = kron(&u, &u.conj());
        let p0 = ComplexMatrix::from_real_diag(&[1.0, 0.0]);
        let p1 = ComplexMatrix::from_real_diag(&[0.0, 1.0]);
        let i2 = ComplexMatrix::identity(2);
        let k0 = kron(&p0, &i2);
        let k1 = kron(&p1, &i2);
        let s_m = kron(&k0, &k0).add(&kron(&k1, &k1)).unwrap();
        let expected = eig_general(&matmul(&s_m, &s_u).unwrap()).unwrap();
        assert!(multiset_distance(&e, &expected) < 1e-12);
    }

    #[test]
    fn fixed_point_and_conjugate_symmetry() {
        for (n, m) in [(2, vec![0]), (3, vec![0, 2]), (4, vec![1])] {
            let angles = seeded_angles(n, 2, 11);
            let e = step_spectrum(n, &angles, 1.0, 2, &m.into_iter().collect()).unwrap();
            assert!(e.iter().any(|z| (z - c(1.0, 0.0)).norm() < 1e-9));
            let conj: Vec<C64> = e.iter().map(|z| z.conj()).collect();
            assert!(multiset_distance(&e, &conj) < 1e-8);
        }
    }

    #[test]
    fn qubit_range_enforced() {
        assert!(matches!(
            step_spectrum(1, &[0.1], 1.0, 1, &BTreeSet::new()),
            Err(SpectrumError::UnsupportedQubits(1))
        ));
        assert!(matches!(
            step_spectrum(7, &[0.0; 7], 1.0, 1, &BTreeSet::new()),
            Err(SpectrumError::UnsupportedQubits(7))
        ));
    }

    #[test]
    fn sweeps_basic() {
        let base = HeaSpectrumConfig::seeded(2, 2, 4);
        assert!(matches!(sweep_prefactor(&base, &[]), Err(SpectrumError::EmptySweep)));
        let r = sweep_measurements(&base, &[BTreeSet::new()]).unwrap();
        assert!((r.points[0].mean_nontrivial_modulus - 1.0).abs() < 1e-9);
        let r = sweep_prefactor(&base, &[0.5, 2.0]).unwrap();
        assert_eq!(r.points.len(), 2);
        assert!(r.points.iter().all(|p| p.eigenvalues.len() == 16));
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 1 + 32);
        assert!(csv.starts_with("parameter_value,re_lambda,im_lambda\n0.5,"));
        let meta = r.metadata_json();
        assert_eq!(meta["n_qubits"], 2);
        assert_eq!(meta["angles"].as_array().unwrap().len(), 4);
        assert_eq!(r, sweep_prefactor(&base, &[0.5, 2.0]).unwrap());
    }

    #[test]
    fn mean_modulus_excludes_one_fixed_point() {
        let e = [c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.3)];
        assert!((mean_nontrivial_modulus(&e) - 0.4).abs() < 1e-15);
    }
}

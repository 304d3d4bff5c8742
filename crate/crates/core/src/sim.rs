//! Exact statevector primitives: a diagonal problem Hamiltonian, X/Y driver
//! terms, their unitaries, and the energy and commutator expectations.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::qubo::QuboModel;

/// Largest register accepted by default (2^24 amplitudes).
pub const DEFAULT_MAX_QUBITS: usize = 24;

/// Degeneracy tolerance for ground-state membership.
pub const GROUND_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("{n} qubits exceeds the simulator limit of {limit}")]
    TooManyQubits { n: usize, limit: usize },
    #[error("dimension mismatch: state has {state} qubits, operator has {operator}")]
    DimensionMismatch { state: usize, operator: usize },
    #[error("driver acts on qubit {qubit} of a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("driver weight must be positive and finite, got {0}")]
    InvalidWeight(f64),
    #[error("energy table length {0} is not a power of two")]
    BadLength(usize),
    #[error("energy table contains a non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("a register needs at least one qubit")]
    Empty,
}

/// Energies of every computational basis state; bit `i` of the index is qubit `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalHamiltonian {
    n_qubits: usize,
    energies: Vec<f64>,
}

impl DiagonalHamiltonian {
    pub fn from_energies(energies: Vec<f64>) -> Result<Self, SimError> {
        let len = energies.len();
        if !len.is_power_of_two() {
            return Err(SimError::BadLength(len));
        }
        if let Some(i) = energies.iter().position(|e| !e.is_finite()) {
            return Err(SimError::NonFinite(i));
        }
        Ok(DiagonalHamiltonian { n_qubits: len.trailing_zeros() as usize, energies })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn min_energy(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean_energy(&self) -> f64 {
        self.energies.iter().sum::<f64>() / self.dim() as f64
    }

    /// Minimum energy and every basis index within [`GROUND_TOLERANCE`] of it.
    pub fn ground_states(&self) -> (f64, Vec<usize>) {
        let e_min = self.min_energy();
        let states = self
            .energies
            .iter()
            .enumerate()
            .filter(|(_, &e)| e <= e_min + GROUND_TOLERANCE)
            .map(|(z, _)| z)
            .collect();
        (e_min, states)
    }
}

pub fn diagonalize_qubo(q: &QuboModel) -> Result<DiagonalHamiltonian, SimError> {
    diagonalize_qubo_with_limit(q, DEFAULT_MAX_QUBITS)
}

pub fn diagonalize_qubo_with_limit(
    q: &QuboModel,
    max_qubits: usize,
) -> Result<DiagonalHamiltonian, SimError> {
    let n = q.n_vars();
    if n > max_qubits {
        return Err(SimError::TooManyQubits { n, limit: max_qubits });
    }
    let energies: Vec<f64> = (0..1usize << n).into_par_iter().map(|z| q.evaluate_index(z)).collect();
    DiagonalHamiltonian::from_energies(energies)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriverKind {
    /// `sum_i X_i` over the whole register.
    GlobalX,
    SingleX(usize),
    SingleY(usize),
}

/// A driver Hamiltonian `weight * P` with `P` one of [`DriverKind`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverTerm {
    kind: DriverKind,
    weight: f64,
}

impl DriverTerm {
    pub fn new(kind: DriverKind, weight: f64) -> Result<Self, SimError> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(SimError::InvalidWeight(weight));
        }
        Ok(DriverTerm { kind, weight })
    }

    pub fn global_x() -> Self {
        DriverTerm { kind: DriverKind::GlobalX, weight: 1.0 }
    }

    pub fn x(qubit: usize) -> Self {
        DriverTerm { kind: DriverKind::SingleX(qubit), weight: 1.0 }
    }

    pub fn y(qubit: usize) -> Self {
        DriverTerm { kind: DriverKind::SingleY(qubit), weight: 1.0 }
    }

    pub fn kind(&self) -> DriverKind {
        self.kind
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn validate(&self, n_qubits: usize) -> Result<(), SimError> {
        match self.kind {
            DriverKind::SingleX(q) | DriverKind::SingleY(q) if q >= n_qubits => {
                Err(SimError::QubitOutOfRange { qubit: q, n_qubits })
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            DriverKind::GlobalX => "X".to_string(),
            DriverKind::SingleX(q) => format!("X{q}"),
            DriverKind::SingleY(q) => format!("Y{q}"),
        }
    }
}

/// Which driver family a protocol uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriverSet {
    /// A single `sum_i X_i`.
    #[default]
    Global,
    /// One `X_i` per qubit.
    PerQubitX,
    /// One `X_i` and one `Y_i` per qubit.
    PerQubitXY,
}

impl DriverSet {
    pub fn drivers(self, n_qubits: usize) -> Vec<DriverTerm> {
        match self {
            DriverSet::Global => vec![DriverTerm::global_x()],
            DriverSet::PerQubitX => (0..n_qubits).map(DriverTerm::x).collect(),
            DriverSet::PerQubitXY => (0..n_qubits)
                .map(DriverTerm::x)
                .chain((0..n_qubits).map(DriverTerm::y))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Equal superposition over all `2^n` basis states.
    pub fn uniform(n_qubits: usize) -> Result<Self, SimError> {
        Self::check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        let amp = if n_qubits == 1 { FRAC_1_SQRT_2 } else { (dim as f64).sqrt().recip() };
        Ok(StateVector { n_qubits, amplitudes: vec![Complex64::new(amp, 0.0); dim] })
    }

    pub fn basis(n_qubits: usize, z: usize) -> Result<Self, SimError> {
        Self::check_size(n_qubits)?;
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[z] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amplitudes })
    }

    /// Wraps raw amplitudes, rescaling them to unit norm.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self, SimError> {
        let len = amplitudes.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(SimError::BadLength(len));
        }
        let mut s = StateVector { n_qubits: len.trailing_zeros() as usize, amplitudes };
        let norm = s.norm_sqr().sqrt();
        s.amplitudes.iter_mut().for_each(|a| *a /= norm);
        Ok(s)
    }

    fn check_size(n_qubits: usize) -> Result<(), SimError> {
        if n_qubits == 0 {
            return Err(SimError::Empty);
        }
        if n_qubits > DEFAULT_MAX_QUBITS {
            return Err(SimError::TooManyQubits { n: n_qubits, limit: DEFAULT_MAX_QUBITS });
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check_dim(&self, h: &DiagonalHamiltonian) -> Result<(), SimError> {
        if h.n_qubits != self.n_qubits {
            return Err(SimError::DimensionMismatch { state: self.n_qubits, operator: h.n_qubits });
        }
        Ok(())
    }

    /// `psi_z <- exp(-i E_z theta) psi_z`.
    pub fn apply_problem_phase(
        &mut self,
        h: &DiagonalHamiltonian,
        theta: f64,
    ) -> Result<(), SimError> {
        self.check_dim(h)?;
        for (a, &e) in self.amplitudes.iter_mut().zip(&h.energies) {
            let (s, c) = (-e * theta).sin_cos();
            *a *= Complex64::new(c, s);
        }
        Ok(())
    }

    /// `psi <- exp(-i angle H_d) psi` for `H_d = weight * P`.
    pub fn apply_driver(&mut self, d: &DriverTerm, angle: f64) -> Result<(), SimError> {
        d.validate(self.n_qubits)?;
        let a = d.weight * angle;
        match d.kind {
            DriverKind::GlobalX => {
                for q in 0..self.n_qubits {
                    self.rotate_x(q, a);
                }
            }
            DriverKind::SingleX(q) => self.rotate_x(q, a),
            DriverKind::SingleY(q) => self.rotate_y(q, a),
        }
        Ok(())
    }

    fn rotate_x(&mut self, qubit: usize, a: f64) {
        let (s, c) = a.sin_cos();
        let mis = Complex64::new(0.0, -s);
        self.for_each_pair(qubit, |lo, hi| {
            let (l, h) = (*lo, *hi);
            *lo = l * c + h * mis;
            *hi = l * mis + h * c;
        });
    }

    fn rotate_y(&mut self, qubit: usize, a: f64) {
        let (s, c) = a.sin_cos();
        self.for_each_pair(qubit, |lo, hi| {
            let (l, h) = (*lo, *hi);
            *lo = l * c - h * s;
            *hi = l * s + h * c;
        });
    }

    /// Visits every amplitude pair `(z, z | 2^qubit)` with bit `qubit` of `z` clear.
    fn for_each_pair(&mut self, qubit: usize, mut f: impl FnMut(&mut Complex64, &mut Complex64)) {
        let stride = 1usize << qubit;
        for block in self.amplitudes.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (l, h) in lo.iter_mut().zip(hi.iter_mut()) {
                f(l, h);
            }
        }
    }

    /// `J = <psi|H_p|psi>`.
    pub fn expected_energy(&self, h: &DiagonalHamiltonian) -> Result<f64, SimError> {
        self.check_dim(h)?;
        Ok(self.amplitudes.iter().zip(&h.energies).map(|(a, &e)| a.norm_sqr() * e).sum())
    }

    /// `A = <psi| i[H_d, H_p] |psi> = -2 Im <psi| H_d H_p |psi>`.
    pub fn commutator_expectation(
        &self,
        d: &DriverTerm,
        h: &DiagonalHamiltonian,
    ) -> Result<f64, SimError> {
        self.check_dim(h)?;
        d.validate(self.n_qubits)?;
        let overlap = match d.kind {
            DriverKind::GlobalX => (0..self.n_qubits).map(|q| self.x_overlap(q, h)).sum(),
            DriverKind::SingleX(q) => self.x_overlap(q, h),
            DriverKind::SingleY(q) => self.y_overlap(q, h),
        };
        Ok(-2.0 * d.weight * overlap)
    }

    /// `Im <psi| X_q H_p |psi>`.
    fn x_overlap(&self, qubit: usize, h: &DiagonalHamiltonian) -> f64 {
        let bit = 1usize << qubit;
        let psi = &self.amplitudes;
        (0..psi.len())
            .map(|z| {
                let w = z ^ bit;
                (psi[z].conj() * psi[w] * h.energies[w]).im
            })
            .sum()
    }

    /// `Im <psi| Y_q H_p |psi>`, using `Y|0> = i|1>` and `Y|1> = -i|0>`.
    fn y_overlap(&self, qubit: usize, h: &DiagonalHamiltonian) -> f64 {
        let bit = 1usize << qubit;
        let psi = &self.amplitudes;
        (0..psi.len())
            .map(|z| {
                let w = z ^ bit;
                let phase = if z & bit == 0 { -1.0 } else { 1.0 };
                // (Y phi)_z = -i phi_w for bit clear, +i phi_w for bit set
                let term = psi[z].conj() * psi[w] * h.energies[w] * Complex64::new(0.0, phase);
                term.im
            })
            .sum()
    }

    /// Total probability on the ground manifold of `h`.
    pub fn ground_probability(&self, h: &DiagonalHamiltonian) -> Result<f64, SimError> {
        self.check_dim(h)?;
        let (_, states) = h.ground_states();
        Ok(states.iter().map(|&z| self.amplitudes[z].norm_sqr()).sum())
    }
}

//! Feedback-based layer loops: single-drive, multi-drive, and their
//! time-rescaled counterparts.
//!
//! Each layer measures `A_j = <psi| i[H_dj, H_p] |psi>` on the incoming
//! state, sets `beta_j = -w_j f(A_j)` (divided by the schedule derivative for
//! rescaled runs), then applies `exp(-i H_p theta)` followed by every
//! `exp(-i beta_j H_dj theta)` in driver order, with `theta = dt` or
//! `theta = fdot(k dtau) dtau`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::sim::{DiagonalHamiltonian, DriverSet, DriverTerm, SimError, StateVector};

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("number of layers must be at least 1")]
    NoLayers,
    #[error("rescaling parameter a must be >= 1, got {0}")]
    InvalidRescaleFactor(f64),
    #[error("rescaled total time must be positive, got {0}")]
    InvalidTotalTime(f64),
    #[error("{layers} layers of {dt} exceed the rescaled horizon {horizon}")]
    HorizonExceeded { layers: usize, dt: f64, horizon: f64 },
    #[error("rescaled time {tau} outside [0, {horizon}]")]
    TimeOutOfRange { tau: f64, horizon: f64 },
    #[error("single-drive variants need exactly one driver, got {0}")]
    SingleDriveArity(usize),
    #[error("no driver terms supplied")]
    NoDrivers,
    #[error("{weights} control weights for {drivers} drivers")]
    WeightCount { weights: usize, drivers: usize },
    #[error("control weights must be positive and finite")]
    InvalidWeight,
    #[error("tanh shaping scale must be positive and finite, got {0}")]
    InvalidShape(f64),
    #[error("unknown variant '{0}'")]
    UnknownVariant(String),
    #[error("unknown control shape '{0}'")]
    UnknownShape(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    OneDrive,
    MultiDrive,
    TrOneDrive,
    TrMultiDrive,
}

impl Variant {
    pub const ALL: [Variant; 4] =
        [Variant::OneDrive, Variant::MultiDrive, Variant::TrOneDrive, Variant::TrMultiDrive];

    pub fn is_rescaled(self) -> bool {
        matches!(self, Variant::TrOneDrive | Variant::TrMultiDrive)
    }

    pub fn is_single_drive(self) -> bool {
        matches!(self, Variant::OneDrive | Variant::TrOneDrive)
    }

    /// Default drivers for this variant: `sum_i X_i` for single-drive runs,
    /// one `X_i` per qubit otherwise.
    pub fn default_driver_set(self) -> DriverSet {
        if self.is_single_drive() {
            DriverSet::Global
        } else {
            DriverSet::PerQubitX
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::OneDrive => "one-drive",
            Variant::MultiDrive => "multi-drive",
            Variant::TrOneDrive => "tr-one-drive",
            Variant::TrMultiDrive => "tr-multi-drive",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| ProtocolError::UnknownVariant(s.to_string()))
    }
}

/// Sign-preserving shaping `f` in `beta = -w f(A)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlShape {
    #[default]
    Identity,
    /// `f(A) = s tanh(A / s)`: linear near zero, saturating at `±s`.
    Tanh(f64),
}

impl ControlShape {
    pub fn apply(self, a: f64) -> f64 {
        match self {
            ControlShape::Identity => a,
            ControlShape::Tanh(s) => s * (a / s).tanh(),
        }
    }
}

impl fmt::Display for ControlShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlShape::Identity => f.write_str("identity"),
            ControlShape::Tanh(s) => write!(f, "tanh:{s}"),
        }
    }
}

impl FromStr for ControlShape {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "identity" {
            return Ok(ControlShape::Identity);
        }
        let scale = s
            .strip_prefix("tanh:")
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(|| ProtocolError::UnknownShape(s.to_string()))?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(ProtocolError::InvalidShape(scale));
        }
        Ok(ControlShape::Tanh(scale))
    }
}

/// Time-rescaling schedule `t = f(tau)`,
/// `f(tau) = a tau - t_f (a - 1) / (2 pi a) sin(2 pi a tau / t_f)`,
/// defined on `[0, t_f / a]` with `f(t_f / a) = t_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeRescaling {
    pub a: f64,
    pub t_final: f64,
}

impl TimeRescaling {
    pub fn new(a: f64, t_final: f64) -> Result<Self, ProtocolError> {
        if !(a.is_finite() && a >= 1.0) {
            return Err(ProtocolError::InvalidRescaleFactor(a));
        }
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(ProtocolError::InvalidTotalTime(t_final));
        }
        Ok(TimeRescaling { a, t_final })
    }

    /// Length of the rescaled interval, `t_f / a`.
    pub fn horizon(&self) -> f64 {
        self.t_final / self.a
    }

    fn check(&self, tau: f64) -> Result<(), ProtocolError> {
        let horizon = self.horizon();
        let slack = 1e-12 * horizon;
        if !(tau >= -slack && tau <= horizon + slack) {
            return Err(ProtocolError::TimeOutOfRange { tau, horizon });
        }
        Ok(())
    }

    pub fn f(&self, tau: f64) -> Result<f64, ProtocolError> {
        self.check(tau)?;
        let TimeRescaling { a, t_final } = *self;
        Ok(a * tau - t_final * (a - 1.0) / (2.0 * PI * a) * (2.0 * PI * a * tau / t_final).sin())
    }

    /// `fdot(tau) = a - (a - 1) cos(2 pi a tau / t_f)`.
    pub fn derivative(&self, tau: f64) -> Result<f64, ProtocolError> {
        self.check(tau)?;
        let TimeRescaling { a, t_final } = *self;
        Ok(a - (a - 1.0) * (2.0 * PI * a * tau / t_final).cos())
    }

    /// Whole layers of `dtau` that fit in the horizon.
    pub fn layers_for(&self, dtau: f64) -> usize {
        (self.horizon() / dtau * (1.0 + 1e-12)).floor() as usize
    }
}

pub fn rescale_derivative(tau: f64, a: f64, t_final: f64) -> Result<f64, ProtocolError> {
    TimeRescaling::new(a, t_final)?.derivative(tau)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolConfig {
    pub variant: Variant,
    /// `dt`, or `dtau` for rescaled variants.
    pub dt: f64,
    pub num_layers: usize,
    /// Required for rescaled variants, ignored otherwise.
    pub rescaling: Option<TimeRescaling>,
    pub shape: ControlShape,
    /// Per-driver `w_j`; empty means all ones.
    pub control_weights: Vec<f64>,
}

impl ProtocolConfig {
    pub fn new(variant: Variant, dt: f64, num_layers: usize) -> Self {
        ProtocolConfig {
            variant,
            dt,
            num_layers,
            rescaling: None,
            shape: ControlShape::Identity,
            control_weights: Vec::new(),
        }
    }

    pub fn with_rescaling(mut self, a: f64, t_final: f64) -> Result<Self, ProtocolError> {
        self.rescaling = Some(TimeRescaling::new(a, t_final)?);
        Ok(self)
    }

    pub fn with_shape(mut self, shape: ControlShape) -> Self {
        self.shape = shape;
        self
    }

    pub fn with_control_weights(mut self, weights: Vec<f64>) -> Self {
        self.control_weights = weights;
        self
    }

    pub fn validate(&self, n_drivers: usize) -> Result<(), ProtocolError> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(ProtocolError::InvalidStep(self.dt));
        }
        if self.num_layers == 0 {
            return Err(ProtocolError::NoLayers);
        }
        if n_drivers == 0 {
            return Err(ProtocolError::NoDrivers);
        }
        if self.variant.is_single_drive() && n_drivers != 1 {
            return Err(ProtocolError::SingleDriveArity(n_drivers));
        }
        if !self.control_weights.is_empty() {
            if self.control_weights.len() != n_drivers {
                return Err(ProtocolError::WeightCount {
                    weights: self.control_weights.len(),
                    drivers: n_drivers,
                });
            }
            if self.control_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                return Err(ProtocolError::InvalidWeight);
            }
        }
        if let ControlShape::Tanh(s) = self.shape {
            if !(s.is_finite() && s > 0.0) {
                return Err(ProtocolError::InvalidShape(s));
            }
        }
        if self.variant.is_rescaled() {
            let tr = self.rescaling.ok_or(ProtocolError::InvalidRescaleFactor(f64::NAN))?;
            TimeRescaling::new(tr.a, tr.t_final)?;
            if self.num_layers > tr.layers_for(self.dt) {
                return Err(ProtocolError::HorizonExceeded {
                    layers: self.num_layers,
                    dt: self.dt,
                    horizon: tr.horizon(),
                });
            }
        }
        Ok(())
    }

    fn weight(&self, j: usize) -> f64 {
        self.control_weights.get(j).copied().unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerRecord {
    /// 1-based layer index.
    pub layer: usize,
    /// Control value applied in this layer, per driver.
    pub beta: Vec<f64>,
    /// Commutator expectation measured on the incoming state, per driver.
    pub a: Vec<f64>,
    /// Schedule derivative used by this layer (1 for plain variants).
    pub fdot: f64,
    /// `J` after the layer.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub initial_energy: f64,
    pub records: Vec<LayerRecord>,
    pub final_state: StateVector,
}

impl RunTrace {
    pub fn final_energy(&self) -> f64 {
        self.records.last().map_or(self.initial_energy, |r| r.energy)
    }

    /// `J_0, J_1, ..., J_L`.
    pub fn energies(&self) -> Vec<f64> {
        std::iter::once(self.initial_energy).chain(self.records.iter().map(|r| r.energy)).collect()
    }
}

/// Uniform superposition, the ground state of `-sum_i X_i`.
pub fn initial_state(n_qubits: usize) -> Result<StateVector, SimError> {
    StateVector::uniform(n_qubits)
}

/// Feedback control values for one layer given the measured `A_j`.
pub fn feedback(cfg: &ProtocolConfig, a: &[f64], fdot: f64) -> Vec<f64> {
    a.iter().enumerate().map(|(j, &aj)| -cfg.weight(j) * cfg.shape.apply(aj) / fdot).collect()
}

/// Runs one protocol from the uniform superposition.
pub fn run_protocol(
    h: &DiagonalHamiltonian,
    drivers: &[DriverTerm],
    cfg: &ProtocolConfig,
) -> Result<RunTrace, ProtocolError> {
    let psi = initial_state(h.n_qubits())?;
    run_protocol_from(psi, h, drivers, cfg)
}

/// Runs one protocol from an arbitrary starting state.
pub fn run_protocol_from(
    mut psi: StateVector,
    h: &DiagonalHamiltonian,
    drivers: &[DriverTerm],
    cfg: &ProtocolConfig,
) -> Result<RunTrace, ProtocolError> {
    cfg.validate(drivers.len())?;
    for d in drivers {
        d.validate(h.n_qubits())?;
    }
    let schedule = if cfg.variant.is_rescaled() { cfg.rescaling } else { None };
    let initial_energy = psi.expected_energy(h)?;
    let mut records = Vec::with_capacity(cfg.num_layers);

    for k in 1..=cfg.num_layers {
        let a = drivers
            .iter()
            .map(|d| psi.commutator_expectation(d, h))
            .collect::<Result<Vec<_>, _>>()?;
        let fdot = match schedule {
            // the last layer may land a rounding error past the horizon
            Some(tr) => tr.derivative((k as f64 * cfg.dt).min(tr.horizon()))?,
            None => 1.0,
        };
        let beta = feedback(cfg, &a, fdot);
        let theta = fdot * cfg.dt;
        psi.apply_problem_phase(h, theta)?;
        for (d, &b) in drivers.iter().zip(&beta) {
            psi.apply_driver(d, b * theta)?;
        }
        let energy = psi.expected_energy(h)?;
        records.push(LayerRecord { layer: k, beta, a, fdot, energy });
    }

    Ok(RunTrace { initial_energy, records, final_state: psi })
}

pub fn ground_probability(psi: &StateVector, h: &DiagonalHamiltonian) -> Result<f64, SimError> {
    psi.ground_probability(h)
}

//! Multicell atomic memory: cell grid and AOD addressing, spin-wave momentum
//! bookkeeping, and lifetime/decoherence models.

mod stirap;

pub use stirap::{crosstalk_leakage, stirap_transfer, stirap_transfer_with_step, StirapPulse, TransferResult, DEFAULT_TAU_FAST};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Rb-87 atomic mass (kg).
pub const RB87_MASS: f64 = 1.443_16e-25;
/// Default optical wavelength for momentum arithmetic (m), Rb D1 line.
pub const DEFAULT_WAVELENGTH: f64 = 795e-9;
/// Pitch between adjacent memory cells (m).
pub const CELL_PITCH: f64 = 420e-6;

#[derive(Debug, Error)]
pub enum MemoryError {
    #[error("cell address ({0}, {1}) outside the 5x5 grid")]
    AddressOutOfRange(u8, u8),
    #[error("negative elapsed time {0}")]
    NegativeElapsed(f64),
    #[error("invalid parameter: {0}")]
    BadParameter(&'static str),
    #[error("integrator failed to reach tolerance {wanted:.1e}; residual {got:.3e}")]
    NonConvergence { wanted: f64, got: f64 },
}

/// Address on the 5x5 cell grid, 1-based in both axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(u8, u8)", into = "(u8, u8)")]
pub struct CellAddress {
    x: u8,
    y: u8,
}

impl TryFrom<(u8, u8)> for CellAddress {
    type Error = MemoryError;

    fn try_from((x, y): (u8, u8)) -> Result<Self, MemoryError> {
        CellAddress::new(x, y)
    }
}

impl From<CellAddress> for (u8, u8) {
    fn from(c: CellAddress) -> (u8, u8) {
        (c.x, c.y)
    }
}

impl CellAddress {
    pub fn new(x: u8, y: u8) -> Result<Self, MemoryError> {
        if !(1..=5).contains(&x) || !(1..=5).contains(&y) {
            return Err(MemoryError::AddressOutOfRange(x, y));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> u8 {
        self.x
    }

    pub fn y(&self) -> u8 {
        self.y
    }
}

/// RF drive frequencies (MHz) of the crossed AODs addressing a cell:
/// `f_x = 96 + 4 (x - 1)`, `f_y = 100 + 4 (y - 1)`.
pub fn address_to_rf(cell: CellAddress) -> (f64, f64) {
    let fx = 96.0 + 4.0 * f64::from(cell.x - 1);
    let fy = 100.0 + 4.0 * f64::from(cell.y - 1);
    (fx, fy)
}

/// Storage-lifetime model of a memory cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum DecoherenceModel {
    /// Exponential decay `exp(-t / tau)`, as fitted in the experiment.
    Empirical { tau: f64 },
    /// Mechanistic product of motional dephasing, free expansion out of the
    /// addressed beam waist, and residual gradient dephasing.
    Mechanistic {
        /// Ensemble temperature (K).
        temperature: f64,
        /// Addressed beam waist (m).
        beam_waist: f64,
        /// Residual spin-wave momentum magnitude (rad/m).
        momentum: f64,
        /// Residual magnetic-gradient dephasing rate (1/s).
        gradient_rate: f64,
    },
}

impl DecoherenceModel {
    pub fn validate(&self) -> Result<(), MemoryError> {
        match *self {
            DecoherenceModel::Empirical { tau } => {
                if tau <= 0.0 {
                    return Err(MemoryError::BadParameter("tau must be positive"));
                }
            }
            DecoherenceModel::Mechanistic {
                temperature,
                beam_waist,
                momentum,
                gradient_rate,
            } => {
                if temperature <= 0.0 || beam_waist <= 0.0 {
                    return Err(MemoryError::BadParameter("temperature and waist must be positive"));
                }
                if momentum < 0.0 || gradient_rate < 0.0 {
                    return Err(MemoryError::BadParameter("momentum and gradient rate must be non-negative"));
                }
            }
        }
        Ok(())
    }

    /// Thermal velocity scale `sqrt(k_B T / m)` (m/s); only meaningful for
    /// the mechanistic variant.
    pub fn thermal_velocity(&self) -> Option<f64> {
        match *self {
            DecoherenceModel::Mechanistic { temperature, .. } => {
                Some((BOLTZMANN * temperature / RB87_MASS).sqrt())
            }
            DecoherenceModel::Empirical { .. } => None,
        }
    }
}

/// Addressable storage site with its intrinsic retrieval efficiency and
/// lifetime model.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryCell {
    pub address: CellAddress,
    /// Intrinsic retrieval efficiency between write and read.
    pub intrinsic_retrieval: f64,
    pub lifetime_model: DecoherenceModel,
    /// Pitch to neighboring cells (m).
    pub pitch: f64,
}

impl MemoryCell {
    pub fn new(
        address: CellAddress,
        intrinsic_retrieval: f64,
        lifetime_model: DecoherenceModel,
    ) -> Result<Self, MemoryError> {
        if !(0.0..=1.0).contains(&intrinsic_retrieval) {
            return Err(MemoryError::BadParameter("intrinsic retrieval outside [0, 1]"));
        }
        lifetime_model.validate()?;
        Ok(Self {
            address,
            intrinsic_retrieval,
            lifetime_model,
            pitch: CELL_PITCH,
        })
    }
}

/// Spin-wave survival probability after `elapsed` seconds of storage.
///
/// Empirical: `exp(-t / tau)`. Mechanistic: product of the motional term
/// `exp(-(|k| vbar t)^2 / 2)`, the expansion term `exp(-t vbar / w)` and the
/// gradient term `exp(-Gamma_B t)`, with `vbar = sqrt(k_B T / m)`.
pub fn survival(cell: &MemoryCell, elapsed: f64) -> Result<f64, MemoryError> {
    if elapsed < 0.0 || !elapsed.is_finite() {
        return Err(MemoryError::NegativeElapsed(elapsed));
    }
    Ok(match cell.lifetime_model {
        DecoherenceModel::Empirical { tau } => (-elapsed / tau).exp(),
        DecoherenceModel::Mechanistic {
            temperature,
            beam_waist,
            momentum,
            gradient_rate,
        } => {
            let vbar = (BOLTZMANN * temperature / RB87_MASS).sqrt();
            let motional = (-(momentum * vbar * elapsed).powi(2) / 2.0).exp();
            let expansion = (-elapsed * vbar / beam_waist).exp();
            let gradient = (-gradient_rate * elapsed).exp();
            motional * expansion * gradient
        }
    })
}

/// Spin-wave level: before (`Gs`) or after (`GsPrime`) the clock-state
/// freezing transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinWaveLevel {
    Gs,
    GsPrime,
}

/// A stored collective excitation.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinWave {
    pub cell: CellAddress,
    pub level: SpinWaveLevel,
    /// Spin-wave momentum (rad/m).
    pub momentum: [f64; 3],
    /// Creation (herald) time (s).
    pub created_at: f64,
    /// Label of the joint-state mode this excitation backs.
    pub payload: String,
}

impl SpinWave {
    pub fn new(
        cell: CellAddress,
        level: SpinWaveLevel,
        momentum: [f64; 3],
        created_at: f64,
        payload: impl Into<String>,
        frozen_momentum_residual: f64,
    ) -> Result<Self, MemoryError> {
        if created_at < 0.0 {
            return Err(MemoryError::NegativeElapsed(created_at));
        }
        let k = vec_norm(momentum);
        if level == SpinWaveLevel::GsPrime && k > frozen_momentum_residual {
            return Err(MemoryError::BadParameter(
                "frozen spin wave must have near-zero momentum",
            ));
        }
        Ok(Self {
            cell,
            level,
            momentum,
            created_at,
            payload: payload.into(),
        })
    }
}

/// Beam geometry: wavevectors of the write, signal and Raman pump beams.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub k_write: [f64; 3],
    pub k_signal: [f64; 3],
    pub k_pump1: [f64; 3],
    pub k_pump2: [f64; 3],
    /// Angle between write and signal beams (rad).
    pub write_signal_angle: f64,
}

impl Geometry {
    /// Write/signal beams of equal magnitude `2 pi / wavelength` separated by
    /// `angle` in the x-z plane, with the pump pair arranged to cancel the
    /// spin-wave momentum exactly.
    pub fn symmetric(wavelength: f64, angle: f64) -> Result<Self, MemoryError> {
        if wavelength <= 0.0 {
            return Err(MemoryError::BadParameter("wavelength must be positive"));
        }
        let k = 2.0 * std::f64::consts::PI / wavelength;
        let half = angle / 2.0;
        let k_write = [k * half.sin(), 0.0, k * half.cos()];
        let k_signal = [-k * half.sin(), 0.0, k * half.cos()];
        let ks = sub(k_write, k_signal);
        // pumps chosen so k_P1 - k_P2 = -(k_W - k_S)
        let k_pump1 = [0.0, 0.0, k];
        let k_pump2 = add([0.0, 0.0, k], ks);
        Self::new(k_write, k_signal, k_pump1, k_pump2, angle)
    }

    pub fn new(
        k_write: [f64; 3],
        k_signal: [f64; 3],
        k_pump1: [f64; 3],
        k_pump2: [f64; 3],
        write_signal_angle: f64,
    ) -> Result<Self, MemoryError> {
        let cosang = dot(k_write, k_signal) / (vec_norm(k_write) * vec_norm(k_signal));
        let actual = cosang.clamp(-1.0, 1.0).acos();
        if (actual - write_signal_angle.abs()).abs() > 1e-6 {
            return Err(MemoryError::BadParameter(
                "declared write/signal angle does not match the wavevectors",
            ));
        }
        Ok(Self {
            k_write,
            k_signal,
            k_pump1,
            k_pump2,
            write_signal_angle,
        })
    }
}

/// Stage of the spin-wave momentum bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentumStage {
    /// After the write process: `k_s = k_W - k_S`.
    AfterWrite,
    /// After the freezing transfer: `k_s' = k_s + k_P1 - k_P2`.
    AfterFreeze,
}

/// Spin-wave momentum at the given stage (rad/m).
pub fn spinwave_momentum(geom: &Geometry, stage: MomentumStage) -> [f64; 3] {
    let after_write = sub(geom.k_write, geom.k_signal);
    match stage {
        MomentumStage::AfterWrite => after_write,
        MomentumStage::AfterFreeze => add(after_write, sub(geom.k_pump1, geom.k_pump2)),
    }
}

pub fn vec_norm(v: [f64; 3]) -> f64 {
    dot(v, v).sqrt()
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

//! Versioned JSON configuration: one document drives every scenario.
//! Unknown keys are rejected everywhere so a typo cannot silently fall back
//! to a default.

use std::path::Path;

use maqm_core::fock::SourceParams;
use maqm_core::memory::CellAddress;
use maqm_core::memory::StirapPulse;
use maqm_core::protocol::{NodeConfig, NoiseConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Must equal [`SCHEMA_VERSION`].
    pub schema_version: u32,
    pub seed: u64,
    pub shots: u64,
    /// Free-form notes on where each calibration number comes from; not
    /// interpreted by the runner.
    #[serde(default)]
    pub provenance: serde_json::Value,
    pub node: NodeConfig,
    pub noise: NoiseConfig,
    pub source: SourceSection,
    pub herald_stats: HeraldSection,
    pub stirap: StirapSection,
    pub lifetime: LifetimeSection,
    /// Per-cell grid-parameter table.
    pub cells: Vec<CellEntry>,
    pub tomography: TomographySection,
    pub raqm: RaqmSection,
    pub fidelity: FidelitySection,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    /// Two-mode-squeezing parameter.
    pub chi: f64,
    /// Fock cutoff per mode.
    pub n_max: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeraldSection {
    /// Cross-correlation the source is calibrated to.
    pub target_g_c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StirapSection {
    pub pulse: StirapPulse,
    /// Two-photon detuning of the target leg (rad/s).
    pub two_photon_detuning: f64,
    /// Storage times at which to report the crosstalk leakage (s).
    pub crosstalk_probe_times: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LifetimeSection {
    /// Time at which the per-cell retrieval efficiency is reported (s).
    pub probe_time: f64,
    /// End of the sampled decay curve (s).
    pub t_max: f64,
    pub n_points: usize,
    /// Relative Gaussian noise applied to the synthetic decay samples.
    pub relative_noise: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellEntry {
    pub x: u8,
    pub y: u8,
    /// Intrinsic retrieval efficiency.
    pub r_i: f64,
    /// Fitted storage lifetime (s).
    pub tau_seconds: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TomographySection {
    pub shots_per_setting: u64,
    pub bootstrap: u32,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RaqmSection {
    /// Cell holding the benchmark qubits.
    pub cell: (u8, u8),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FidelitySection {
    /// Storage time before the stored link fidelity is evaluated (s).
    pub storage_time: f64,
}

impl Config {
    pub fn from_str(text: &str) -> AppResult<Self> {
        let config: Config = serde_json::from_str(text).map_err(AppError::config)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AppError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    /// Fail-fast validation: rejects anything a module would later reject.
    pub fn validate(&self) -> AppResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(AppError::config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.shots == 0 {
            return Err(AppError::config("shots must be positive"));
        }
        self.node.validate().map_err(AppError::config)?;
        self.noise.validate().map_err(AppError::config)?;
        SourceParams::new(self.source.chi, self.source.n_max).map_err(AppError::config)?;
        if !(self.herald_stats.target_g_c > 0.5) {
            return Err(AppError::config("herald_stats.target_g_c must exceed 0.5"));
        }
        self.stirap.pulse.validate().map_err(AppError::config)?;
        if !self.stirap.two_photon_detuning.is_finite() {
            return Err(AppError::config("stirap.two_photon_detuning must be finite"));
        }
        for &t in &self.stirap.crosstalk_probe_times {
            if t < 0.0 {
                return Err(AppError::config("crosstalk probe times must be non-negative"));
            }
        }
        if self.lifetime.probe_time < 0.0 || self.lifetime.t_max <= 0.0 {
            return Err(AppError::config("lifetime times must be positive"));
        }
        if self.lifetime.n_points < 3 {
            return Err(AppError::config("lifetime.n_points must be at least 3"));
        }
        if !(0.0..1.0).contains(&self.lifetime.relative_noise) {
            return Err(AppError::config("lifetime.relative_noise must be in [0, 1)"));
        }
        if self.cells.is_empty() {
            return Err(AppError::config("cells table must not be empty"));
        }
        for cell in &self.cells {
            CellAddress::new(cell.x, cell.y).map_err(AppError::config)?;
            if !(0.0..=1.0).contains(&cell.r_i) {
                return Err(AppError::config("cell r_i outside [0, 1]"));
            }
            if cell.tau_seconds <= 0.0 {
                return Err(AppError::config("cell tau_seconds must be positive"));
            }
        }
        if self.tomography.shots_per_setting == 0 {
            return Err(AppError::config("tomography.shots_per_setting must be positive"));
        }
        CellAddress::new(self.raqm.cell.0, self.raqm.cell.1).map_err(AppError::config)?;
        if self.fidelity.storage_time < 0.0 {
            return Err(AppError::config("fidelity.storage_time must be non-negative"));
        }
        Ok(())
    }

    /// Short hex digest of the canonical (whitespace-independent) form of
    /// the effective configuration, stamped on every output table.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

//! Simulation library for a DLCZ-style quantum repeater node built on a
//! single multicell atomic quantum memory (MAQM).
//!
//! The crate is organised around the subsystems of the experiment:
//!
//! - [`fock`]: exact linear algebra for small labeled-mode quantum states
//!   (path qubits and truncated Fock modes), loss channels, projective
//!   measurement, partial trace and fidelity.
//! - [`memory`]: the addressable cell grid, spin-wave momentum bookkeeping,
//!   lifetime/decoherence models, STIRAP transfer dynamics and its crosstalk.
//! - [`photonics`]: photon generation and detection statistics; heralding
//!   probabilities, cross-correlation `g_c`, anticorrelation `alpha` and the
//!   `g_c`-based fidelity bound.
//! - [`protocol`]: the repeater-node and random-access-memory state machines;
//!   heralded link generation, storage decoherence, the sequential-retrieval
//!   Bell state measurement and the entanglement swap.
//! - [`tomography`]: counts simulation, linear inversion, physical
//!   reconstruction and Poisson-bootstrap error bars.
//! - [`fit`]: weighted nonlinear least squares for exponential lifetime fits.

pub mod fit;
pub mod fock;
pub mod memory;
pub mod photonics;
pub mod protocol;
pub mod rng;
pub mod tol;
pub mod tomography;

pub use fock::{JointState, Mode, ModeKind, ModeSet, Projector, SourceParams};
pub use memory::{CellAddress, DecoherenceModel, Geometry, MemoryCell, SpinWave, StirapPulse};
pub use photonics::{CoincidenceStats, DetectionChain};
pub use protocol::{LinkState, NodeConfig, NoiseConfig, RaqmQubitSpec, SwapOutcome};
pub use tomography::{CountsTable, MeasurementSetting, ReconstructionResult};

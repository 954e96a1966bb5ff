//! Exact linear-algebra engine for small labeled-mode quantum states.
//!
//! States live on an ordered [`ModeSet`] of path qubits (dimension 2, basis
//! `L`/`R`) and truncated Fock modes (dimension `n_max + 1`). A [`JointState`]
//! is either a pure amplitude vector or a dense density matrix; every
//! constructor validates normalization, hermiticity and positivity against
//! the configured tolerances.

mod channel;
mod measure;
mod source;

pub use measure::{path_pair, MeasureOutcome, Projector};
pub use source::{two_mode_squeezed, SourceParams};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use thiserror::Error;

use crate::tol::Tolerances;

pub type C64 = Complex<f64>;

/// Hard cap on the total Hilbert-space dimension of any state.
pub const MAX_DIM: usize = 4096;

/// Path-qubit basis index for the `L` spatial mode.
pub const PATH_L: usize = 0;
/// Path-qubit basis index for the `R` spatial mode.
pub const PATH_R: usize = 1;

#[derive(Debug, Error)]
pub enum FockError {
    #[error("duplicate mode label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown mode label `{0}`")]
    UnknownLabel(String),
    #[error("total dimension {0} exceeds the cap of {MAX_DIM}")]
    DimensionCap(usize),
    #[error("fock cutoff must be at least 1")]
    BadCutoff,
    #[error("amplitude vector has length {got}, mode set has dimension {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("pure state norm {0} is not 1 within tolerance")]
    NotNormalized(f64),
    #[error("density matrix is not Hermitian within tolerance")]
    NotHermitian,
    #[error("density matrix trace {0} is not 1 within tolerance")]
    BadTrace(f64),
    #[error("density matrix has eigenvalue {0} below -tolerance")]
    NotPositive(f64),
    #[error("mode sets do not match")]
    ModeSetMismatch,
    #[error("mode `{0}` is not a Fock mode")]
    NotFockMode(String),
    #[error("transmission {0} outside [0, 1]")]
    BadTransmission(f64),
    #[error("projector kets are not orthonormal")]
    NonProjector,
    #[error("empty keep set in partial trace")]
    EmptyKeep,
    #[error("source parameter chi = {0} outside [0, 0.5)")]
    BadChi(f64),
    #[error("truncation error {err:.3e} at n_max = {n_max} exceeds budget {budget:.1e}")]
    Truncation { err: f64, n_max: usize, budget: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeKind {
    /// Two-dimensional spatial path qubit with basis `L` (index 0), `R` (index 1).
    PathQubit,
    /// Photon-number mode truncated at `n_max` (dimension `n_max + 1`).
    Fock { n_max: usize },
}

impl ModeKind {
    pub fn dim(&self) -> usize {
        match self {
            ModeKind::PathQubit => 2,
            ModeKind::Fock { n_max } => n_max + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mode {
    pub label: String,
    pub kind: ModeKind,
}

impl Mode {
    pub fn path_qubit(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            kind: ModeKind::PathQubit,
        }
    }

    pub fn fock(label: impl Into<String>, n_max: usize) -> Self {
        Self {
            label: label.into(),
            kind: ModeKind::Fock { n_max },
        }
    }
}

/// Ordered set of labeled modes; the first mode is the most significant
/// index digit of the flat Hilbert-space index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeSet {
    modes: Vec<Mode>,
}

impl ModeSet {
    pub fn new(modes: Vec<Mode>) -> Result<Self, FockError> {
        let mut dim = 1usize;
        for (i, m) in modes.iter().enumerate() {
            if let ModeKind::Fock { n_max } = m.kind {
                if n_max < 1 {
                    return Err(FockError::BadCutoff);
                }
            }
            if modes[..i].iter().any(|o| o.label == m.label) {
                return Err(FockError::DuplicateLabel(m.label.clone()));
            }
            dim = dim
                .checked_mul(m.kind.dim())
                .ok_or(FockError::DimensionCap(usize::MAX))?;
        }
        if dim > MAX_DIM {
            return Err(FockError::DimensionCap(dim));
        }
        Ok(Self { modes })
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.modes.iter().map(|m| m.kind.dim()).product()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.modes.iter().position(|m| m.label == label)
    }

    /// Flat-index stride of each mode (row-major, first mode most significant).
    pub(crate) fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.modes.len()];
        for i in (0..self.modes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.modes[i + 1].kind.dim();
        }
        strides
    }

    pub fn concat(&self, other: &ModeSet) -> Result<ModeSet, FockError> {
        let mut modes = self.modes.clone();
        modes.extend(other.modes.iter().cloned());
        ModeSet::new(modes)
    }

    /// Flat offsets of every multi-index over the modes at `positions`
    /// (in the given order), with all other modes fixed at 0.
    pub(crate) fn offsets(&self, positions: &[usize]) -> Vec<usize> {
        let strides = self.strides();
        let dims: Vec<usize> = positions.iter().map(|&p| self.modes[p].kind.dim()).collect();
        let total: usize = dims.iter().product();
        let mut out = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            let mut off = 0usize;
            for (k, &d) in dims.iter().enumerate().rev() {
                off += (rem % d) * strides[positions[k]];
                rem /= d;
            }
            out.push(off);
        }
        out
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

/// Pure or mixed quantum state over a [`ModeSet`].
#[derive(Debug, Clone)]
pub struct JointState {
    modes: ModeSet,
    repr: Repr,
    tol: Tolerances,
}

impl JointState {
    pub fn pure(modes: ModeSet, amplitudes: Vec<C64>) -> Result<Self, FockError> {
        Self::pure_with_tol(modes, amplitudes, Tolerances::default())
    }

    pub fn pure_with_tol(
        modes: ModeSet,
        amplitudes: Vec<C64>,
        tol: Tolerances,
    ) -> Result<Self, FockError> {
        if amplitudes.len() != modes.dim() {
            return Err(FockError::LengthMismatch {
                got: amplitudes.len(),
                want: modes.dim(),
            });
        }
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if (norm - 1.0).abs() > tol.algebraic {
            return Err(FockError::NotNormalized(norm));
        }
        Ok(Self {
            modes,
            repr: Repr::Pure(v),
            tol,
        })
    }

    /// Normalizes the amplitude vector before constructing the state.
    pub fn pure_normalized(modes: ModeSet, amplitudes: Vec<C64>) -> Result<Self, FockError> {
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if norm <= 0.0 {
            return Err(FockError::NotNormalized(norm));
        }
        let scaled = (v / C64::new(norm, 0.0)).data.as_vec().clone();
        Self::pure(modes, scaled)
    }

    /// Computational basis state with the given per-mode indices.
    pub fn basis_state(modes: ModeSet, indices: &[usize]) -> Result<Self, FockError> {
        assert_eq!(indices.len(), modes.len(), "one index per mode");
        let strides = modes.strides();
        let flat: usize = indices
            .iter()
            .zip(&strides)
            .map(|(&i, &s)| i * s)
            .sum();
        let mut amps = vec![C64::new(0.0, 0.0); modes.dim()];
        amps[flat] = C64::new(1.0, 0.0);
        Self::pure(modes, amps)
    }

    pub fn mixed(modes: ModeSet, rho: DMatrix<C64>) -> Result<Self, FockError> {
        Self::mixed_with_tol(modes, rho, Tolerances::default())
    }

    pub fn mixed_with_tol(
        modes: ModeSet,
        rho: DMatrix<C64>,
        tol: Tolerances,
    ) -> Result<Self, FockError> {
        let d = modes.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(FockError::LengthMismatch {
                got: rho.nrows(),
                want: d,
            });
        }
        let herm_err = (&rho - rho.adjoint()).norm();
        if herm_err > tol.algebraic * (d as f64) {
            return Err(FockError::NotHermitian);
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > tol.algebraic || trace.im.abs() > tol.algebraic {
            return Err(FockError::BadTrace(trace.re));
        }
        let min_eig = min_eigenvalue(&rho);
        if min_eig < -tol.algebraic {
            return Err(FockError::NotPositive(min_eig));
        }
        Ok(Self {
            modes,
            repr: Repr::Mixed(rho),
            tol,
        })
    }

    pub fn mode_set(&self) -> &ModeSet {
        &self.modes
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&DVector<C64>> {
        match &self.repr {
            Repr::Pure(v) => Some(v),
            Repr::Mixed(_) => None,
        }
    }

    /// Density-matrix representation (materialized for pure states).
    pub fn density(&self) -> DMatrix<C64> {
        match &self.repr {
            Repr::Pure(v) => v * v.adjoint(),
            Repr::Mixed(m) => m.clone(),
        }
    }

    /// Tensor product with `other`; mode labels must be disjoint.
    pub fn tensor(&self, other: &JointState) -> Result<JointState, FockError> {
        let modes = self.modes.concat(&other.modes)?;
        match (&self.repr, &other.repr) {
            (Repr::Pure(a), Repr::Pure(b)) => {
                let mut amps = Vec::with_capacity(a.len() * b.len());
                for x in a.iter() {
                    for y in b.iter() {
                        amps.push(x * y);
                    }
                }
                JointState::pure_with_tol(modes, amps, self.tol)
            }
            _ => {
                let rho = self.density().kronecker(&other.density());
                JointState::mixed_with_tol(modes, rho, self.tol)
            }
        }
    }

    /// Reduced state on the modes named in `keep` (original mode order).
    pub fn partial_trace(&self, keep: &[&str]) -> Result<JointState, FockError> {
        if keep.is_empty() {
            return Err(FockError::EmptyKeep);
        }
        let mut keep_pos = Vec::with_capacity(keep.len());
        for label in keep {
            let p = self
                .modes
                .position(label)
                .ok_or_else(|| FockError::UnknownLabel((*label).to_string()))?;
            if !keep_pos.contains(&p) {
                keep_pos.push(p);
            }
        }
        keep_pos.sort_unstable();
        if keep_pos.len() == self.modes.len() {
            return Ok(self.clone());
        }
        let trace_pos: Vec<usize> = (0..self.modes.len())
            .filter(|p| !keep_pos.contains(p))
            .collect();
        let keep_offsets = self.modes.offsets(&keep_pos);
        let trace_offsets = self.modes.offsets(&trace_pos);
        let rho = self.density();
        let dk = keep_offsets.len();
        let mut out = DMatrix::<C64>::zeros(dk, dk);
        for (i, &oi) in keep_offsets.iter().enumerate() {
            for (j, &oj) in keep_offsets.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for &ot in &trace_offsets {
                    acc += rho[(oi + ot, oj + ot)];
                }
                out[(i, j)] = acc;
            }
        }
        let kept_modes: Vec<Mode> = keep_pos
            .iter()
            .map(|&p| self.modes.modes[p].clone())
            .collect();
        JointState::mixed_with_tol(ModeSet::new(kept_modes)?, out, self.tol)
    }

    /// Fidelity `<psi| rho |psi>` against a pure target on the same mode set.
    pub fn fidelity(&self, target: &JointState) -> Result<f64, FockError> {
        if self.modes != target.modes {
            return Err(FockError::ModeSetMismatch);
        }
        let psi = match &target.repr {
            Repr::Pure(v) => v.clone(),
            Repr::Mixed(_) => return Err(FockError::ModeSetMismatch),
        };
        let f = match &self.repr {
            Repr::Pure(v) => psi.dotc(v).norm_sqr(),
            Repr::Mixed(m) => (psi.adjoint() * m * &psi)[(0, 0)].re,
        };
        debug_assert!(f > -self.tol.algebraic && f < 1.0 + self.tol.algebraic);
        Ok(f.clamp(0.0, 1.0))
    }

    /// Trace of the state (1 within tolerance by construction).
    pub fn trace(&self) -> f64 {
        match &self.repr {
            Repr::Pure(v) => v.norm_squared(),
            Repr::Mixed(m) => m.trace().re,
        }
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub(crate) fn min_eigenvalue(m: &DMatrix<C64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].re;
    }
    let eig = m.clone().symmetric_eigen();
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests;

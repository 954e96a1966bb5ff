//! Two-mode correlated-pair source abstraction of the write process.

use super::{C64, FockError, JointState, Mode, ModeSet};
use crate::tol::Tolerances;

/// Excitation parameter and Fock cutoff of the photon-pair source.
///
/// The write pulse is abstracted as a two-mode squeezed source: amplitude
/// `chi^(n/2)` on `|n>_signal |n>_spinwave`. Construction fails when the
/// relative weight beyond the cutoff exceeds the truncation budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceParams {
    chi: f64,
    n_max: usize,
    tol: Tolerances,
}

impl SourceParams {
    pub fn new(chi: f64, n_max: usize) -> Result<Self, FockError> {
        Self::with_tol(chi, n_max, Tolerances::default())
    }

    pub fn with_tol(chi: f64, n_max: usize, tol: Tolerances) -> Result<Self, FockError> {
        if !(0.0..0.5).contains(&chi) || !chi.is_finite() {
            return Err(FockError::BadChi(chi));
        }
        if n_max < 1 {
            return Err(FockError::BadCutoff);
        }
        // Geometric photon-number weights chi^n: the relative tail weight
        // sum_{n > n_max} chi^n / sum_n chi^n equals chi^(n_max + 1).
        let err = chi.powi(n_max as i32 + 1);
        if err >= tol.truncation {
            return Err(FockError::Truncation {
                err,
                n_max,
                budget: tol.truncation,
            });
        }
        Ok(Self { chi, n_max, tol })
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// Normalized photon-number distribution `p(n) ~ chi^n`, `n <= n_max`.
    pub fn number_distribution(&self) -> Vec<f64> {
        let weights: Vec<f64> = (0..=self.n_max).map(|n| self.chi.powi(n as i32)).collect();
        let z: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / z).collect()
    }
}

/// Pure state `~ sum_n chi^(n/2) |n>_signal |n>_spinwave`, normalized.
pub fn two_mode_squeezed(params: &SourceParams) -> Result<JointState, FockError> {
    let n_max = params.n_max();
    let modes = ModeSet::new(vec![
        Mode::fock("signal", n_max),
        Mode::fock("spinwave", n_max),
    ])?;
    let d = n_max + 1;
    let mut amps = vec![C64::new(0.0, 0.0); d * d];
    for n in 0..=n_max {
        amps[n * d + n] = C64::new(params.chi().powf(n as f64 / 2.0), 0.0);
    }
    let mut state = JointState::pure_normalized(modes, amps)?;
    state = JointState::pure_with_tol(
        state.mode_set().clone(),
        state.amplitudes().expect("pure").data.as_vec().clone(),
        params.tolerances(),
    )?;
    Ok(state)
}

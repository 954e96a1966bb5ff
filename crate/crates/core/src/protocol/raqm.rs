//! Random-access write/read protocol: arbitrary path qubits stored in
//! addressed cells and retrieved in any order, with read-order-dependent
//! storage decoherence and fast-decaying transfer crosstalk.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{mix_white_noise, NodeConfig, NoiseConfig, ProtocolError};
use crate::fock::{C64, JointState, Mode, ModeSet};
use crate::memory::{crosstalk_leakage, survival, CellAddress, MemoryCell};

/// Requested qubit `cos(theta)|L> + e^{i phi} sin(theta)|R>` in a cell.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RaqmQubitSpec {
    pub theta: f64,
    pub phi: f64,
    pub cell: CellAddress,
}

impl RaqmQubitSpec {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&self.theta) {
            return Err(ProtocolError::BadConfig("theta outside [0, pi/2]"));
        }
        if !self.phi.is_finite() {
            return Err(ProtocolError::BadConfig("phi must be finite"));
        }
        Ok(())
    }

    /// Ideal stored state over a single path-qubit mode.
    pub fn ideal_state(&self, label: &str) -> JointState {
        let modes = ModeSet::new(vec![Mode::path_qubit(label)]).expect("one label");
        JointState::pure(
            modes,
            vec![
                C64::new(self.theta.cos(), 0.0),
                C64::from_polar(self.theta.sin(), self.phi),
            ],
        )
        .expect("normalized")
    }
}

/// The six complementary single-qubit states used to benchmark the memory:
/// |L>, |R>, |+>, |->, |sigma+>, |sigma->.
pub fn six_state_specs(cell: CellAddress) -> Vec<RaqmQubitSpec> {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
    [
        (0.0, 0.0),
        (FRAC_PI_2, 0.0),
        (FRAC_PI_4, 0.0),
        (FRAC_PI_4, PI),
        (FRAC_PI_4, FRAC_PI_2),
        (FRAC_PI_4, 3.0 * FRAC_PI_2),
    ]
    .into_iter()
    .map(|(theta, phi)| RaqmQubitSpec { theta, phi, cell })
    .collect()
}

/// A heralded qubit held in one memory cell.
#[derive(Debug, Clone)]
pub struct StoredQubit {
    pub spec: RaqmQubitSpec,
    pub state: JointState,
    pub herald_time: f64,
    /// Time up to which storage decoherence has been applied.
    pub updated_at: f64,
    /// Probability that retrieval yields a detected click, before storage
    /// decay.
    pub retrieval_weight: f64,
}

/// Heralded write of one qubit: Bernoulli trials until the signal detector
/// clicks, then the requested state is stored with white-noise infidelity
/// inherited from the link bound.
pub fn raqm_write(
    spec: RaqmQubitSpec,
    label: &str,
    config: &NodeConfig,
    noise: &NoiseConfig,
    rng: &mut impl rand::Rng,
    start_time: f64,
) -> Result<StoredQubit, ProtocolError> {
    spec.validate()?;
    let mut trials = 0u64;
    loop {
        trials += 1;
        if trials > config.max_trials {
            return Err(ProtocolError::Timeout(config.max_trials));
        }
        if rng.gen_bool(config.p_signal) {
            break;
        }
    }
    let herald_time = start_time + trials as f64 * config.trial_period;
    let ideal = spec.ideal_state(label);
    // Map the two-qubit link fidelity to the single-qubit white-noise weight.
    let state = if noise.link_fidelity >= 1.0 {
        ideal
    } else {
        let p = (4.0 * noise.link_fidelity - 1.0) / 3.0;
        mix_white_noise(&ideal, p)
    };
    Ok(StoredQubit {
        spec,
        state,
        herald_time,
        updated_at: herald_time,
        retrieval_weight: noise.retrieval_base_weight(),
    })
}

/// Result of reading one stored qubit.
#[derive(Debug, Clone)]
pub struct RetrievedQubit {
    pub state: JointState,
    pub read_time: f64,
    /// Fidelity against the requested ideal state.
    pub fidelity: f64,
    /// Probability that this retrieval produced a detected click.
    pub detection_weight: f64,
}

/// Reads stored qubits in the requested order. Reads start one BSM pre-delay
/// after the last herald and are spaced by the inter-window delay; each
/// qubit accrues white-noise mixing and survival decay up to its own read
/// time, plus depolarization from the fast-decaying un-transferred
/// crosstalk population.
pub fn raqm_read(
    qubits: &mut [StoredQubit],
    order: &[usize],
    config: &NodeConfig,
    noise: &NoiseConfig,
) -> Result<Vec<RetrievedQubit>, ProtocolError> {
    let mut seen = vec![false; qubits.len()];
    for &i in order {
        if i >= qubits.len() {
            return Err(ProtocolError::BadConfig("read index out of range"));
        }
        if seen[i] {
            return Err(ProtocolError::BadConfig("duplicate read index"));
        }
        seen[i] = true;
    }
    let last_herald = qubits
        .iter()
        .map(|q| q.herald_time)
        .fold(f64::NEG_INFINITY, f64::max);
    let first_read = last_herald + config.bsm_delay_before_l;

    let mut out = Vec::with_capacity(order.len());
    for (slot, &i) in order.iter().enumerate() {
        let q = &mut qubits[i];
        let read_time = first_read + slot as f64 * config.bsm_delay_between;
        let dt = read_time - q.updated_at;
        if dt < 0.0 {
            return Err(ProtocolError::BadConfig("read precedes last update"));
        }
        let cell = MemoryCell::new(q.spec.cell, 1.0, noise.lifetime)?;
        q.retrieval_weight *= survival(&cell, dt)?;
        q.state = mix_white_noise(&q.state, (-dt / noise.white_noise_tau).exp());
        q.updated_at = read_time;

        // The residual ground-level population decays fast but can still be
        // retrieved as white noise shortly after the write. It shares the
        // intrinsic retrieval and detection chain with the main spin wave,
        // so the mixing ratio only compares the two transfer weights.
        let leak = crosstalk_leakage(
            noise.stirap_efficiency,
            read_time - q.herald_time,
            noise.tau_fast,
        );
        let main = noise.stirap_efficiency.powi(2)
            * survival(&cell, read_time - q.herald_time)?;
        let total = main + leak;
        let state = if total > 0.0 && leak > 0.0 {
            let lambda_main = main / total;
            let d = q.state.mode_set().dim();
            let rho = q.state.density() * C64::new(lambda_main, 0.0)
                + DMatrix::<C64>::identity(d, d) * C64::new((1.0 - lambda_main) / d as f64, 0.0);
            JointState::mixed_with_tol(q.state.mode_set().clone(), rho, q.state.tolerances())?
        } else {
            q.state.clone()
        };
        let label = state.mode_set().modes()[0].label.clone();
        let fidelity = state.fidelity(&q.spec.ideal_state(&label))?;
        let chain = crate::photonics::chain_transmission(&noise.detection);
        let detection_weight =
            (q.retrieval_weight + leak * noise.intrinsic_retrieval * chain).min(1.0);
        out.push(RetrievedQubit {
            state,
            read_time,
            fidelity,
            detection_weight,
        });
    }
    Ok(out)
}

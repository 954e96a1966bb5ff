//! STIRAP transfer dynamics of the three-level Lambda system and the
//! crosstalk left by imperfect transfer.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::MemoryError;

type C64 = Complex<f64>;

/// Counterintuitively ordered Gaussian pulse pair driving the transfer.
///
/// The Stokes pulse (`omega2`, coupling the empty leg) is centered at `t = 0`
/// and the pump pulse (`omega1`) at `t = delay`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StirapPulse {
    /// Peak Rabi frequency of the pump pulse (rad/s).
    pub omega1: f64,
    /// Peak Rabi frequency of the Stokes pulse (rad/s).
    pub omega2: f64,
    /// Gaussian width sigma (s).
    pub sigma: f64,
    /// Delay between the Stokes and pump pulse centers (s).
    pub delay: f64,
    /// One-photon detuning of the intermediate state (rad/s).
    pub detuning: f64,
}

impl StirapPulse {
    /// Parameters used in the experiment: peak Rabi frequencies
    /// `2 pi x 20 MHz`, `sigma = 0.7 us`, `delay = 1.4 us`, one-photon
    /// detuning `2 pi x 40 MHz`.
    pub fn paper_default() -> Self {
        let tau = std::f64::consts::TAU;
        Self {
            omega1: tau * 20e6,
            omega2: tau * 20e6,
            sigma: 0.7e-6,
            delay: 1.4e-6,
            detuning: tau * 40e6,
        }
    }

    pub fn validate(&self) -> Result<(), MemoryError> {
        if self.omega1 < 0.0 || self.omega2 < 0.0 {
            return Err(MemoryError::BadParameter("Rabi frequencies must be non-negative"));
        }
        if self.sigma <= 0.0 || self.delay <= 0.0 {
            return Err(MemoryError::BadParameter("sigma and delay must be positive"));
        }
        Ok(())
    }
}

/// Outcome of the transfer: final population in the target state and the
/// populations of (initial, intermediate, target).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferResult {
    pub efficiency: f64,
    pub populations: [f64; 3],
}

/// Integrates the three-level Lambda-system Schroedinger equation with the
/// Gaussian pulse pair and returns the final target-state population.
///
/// Fixed-step 4th-order Runge-Kutta starting at step `sigma / 200` over a
/// window of five sigma around the pulse centers; the step is halved until
/// two successive grids agree to 1e-8, and the integration is rejected if
/// that never happens.
pub fn stirap_transfer(
    pulse: &StirapPulse,
    two_photon_detuning: f64,
) -> Result<TransferResult, MemoryError> {
    pulse.validate()?;
    let mut step = pulse.sigma / 200.0;
    let mut coarse = integrate(pulse, two_photon_detuning, step);
    let mut fine;
    let mut diff;
    loop {
        fine = integrate(pulse, two_photon_detuning, step / 2.0);
        diff = coarse
            .iter()
            .zip(fine.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        if diff <= 1e-8 {
            break;
        }
        if step <= pulse.sigma / 1600.0 {
            return Err(MemoryError::NonConvergence {
                wanted: 1e-8,
                got: diff,
            });
        }
        step /= 2.0;
        coarse = fine;
    }
    let populations = [fine[0].norm_sqr(), fine[1].norm_sqr(), fine[2].norm_sqr()];
    let norm: f64 = populations.iter().sum();
    debug_assert!((norm - 1.0).abs() < 1e-6, "norm drift {norm}");
    Ok(TransferResult {
        efficiency: populations[2],
        populations,
    })
}

/// Same dynamics on a caller-supplied fixed grid step; used as the
/// high-resolution oracle in tests.
pub fn stirap_transfer_with_step(
    pulse: &StirapPulse,
    two_photon_detuning: f64,
    step: f64,
) -> TransferResult {
    let amps = integrate(pulse, two_photon_detuning, step);
    let populations = [amps[0].norm_sqr(), amps[1].norm_sqr(), amps[2].norm_sqr()];
    TransferResult {
        efficiency: populations[2],
        populations,
    }
}

fn integrate(pulse: &StirapPulse, delta2: f64, step: f64) -> [C64; 3] {
    // basis: (initial ground, intermediate excited, target ground)
    let t_start = -5.0 * pulse.sigma;
    let t_end = pulse.delay + 5.0 * pulse.sigma;
    let n_steps = ((t_end - t_start) / step).ceil() as usize;
    let h = (t_end - t_start) / n_steps as f64;
    let mut c = [C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
    let deriv = |t: f64, c: &[C64; 3]| -> [C64; 3] {
        let pump = pulse.omega1 * (-(t - pulse.delay).powi(2) / (2.0 * pulse.sigma.powi(2))).exp();
        let stokes = pulse.omega2 * (-t.powi(2) / (2.0 * pulse.sigma.powi(2))).exp();
        let i = C64::new(0.0, 1.0);
        // H/hbar = 1/2 [[0, pump, 0], [pump, 2 Delta, stokes], [0, stokes, 2 delta2]]
        [
            -i * 0.5 * pump * c[1],
            -i * (0.5 * pump * c[0] + pulse.detuning * c[1] + 0.5 * stokes * c[2]),
            -i * (0.5 * stokes * c[1] + delta2 * c[2]),
        ]
    };
    let mut t = t_start;
    for _ in 0..n_steps {
        let k1 = deriv(t, &c);
        let c2 = advance(&c, &k1, h / 2.0);
        let k2 = deriv(t + h / 2.0, &c2);
        let c3 = advance(&c, &k2, h / 2.0);
        let k3 = deriv(t + h / 2.0, &c3);
        let c4 = advance(&c, &k3, h);
        let k4 = deriv(t + h, &c4);
        for j in 0..3 {
            c[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0);
        }
        t += h;
    }
    c
}

fn advance(c: &[C64; 3], k: &[C64; 3], h: f64) -> [C64; 3] {
    [c[0] + k[0] * h, c[1] + k[1] * h, c[2] + k[2] * h]
}

/// Residual un-transferred population still retrievable from the originally
/// addressed cell: `(1 - eta_transfer) exp(-(t / tau_fast)^2)`.
pub fn crosstalk_leakage(transfer_efficiency: f64, elapsed: f64, tau_fast: f64) -> f64 {
    debug_assert!(transfer_efficiency >= 0.0 && elapsed >= 0.0 && tau_fast > 0.0);
    (1.0 - transfer_efficiency) * (-(elapsed / tau_fast).powi(2)).exp()
}

/// Fast-decay time constant (s) calibrated from the two crosstalk
/// measurements (4% residual at 10 us, about 0.1% at 100 us).
pub const DEFAULT_TAU_FAST: f64 = 53e-6;

//! Photon generation and detection statistics: efficiency chains, dark
//! counts, heralding probabilities, cross-correlation `g_c`, anticorrelation
//! `alpha`, and the `g_c`-based fidelity bound.
//!
//! All statistics are computed by exact enumeration over the truncated
//! photon-number distribution through loss channels and threshold
//! (click/no-click) detectors, so every quantity here is deterministic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::SourceParams;

#[derive(Debug, Error)]
pub enum PhotonicsError {
    #[error("efficiency {0} outside [0, 1]")]
    BadEfficiency(f64),
    #[error("fidelity bound requires g_c >= 0.5, got {0}")]
    BoundDomain(f64),
    #[error("target g_c = {0} must exceed 1")]
    BadTarget(f64),
    #[error("target g_c = {target} unreachable within chi in (0, 0.5): range [{lo:.3}, {hi:.3}]")]
    Unreachable { target: f64, lo: f64, hi: f64 },
}

/// Efficiency budget of one detection arm plus the dark-count probability per
/// detection gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionChain {
    pub eta_aod: f64,
    pub eta_fiber: f64,
    pub eta_optics: f64,
    pub eta_detector: f64,
    pub dark_prob_per_gate: f64,
}

impl DetectionChain {
    pub fn new(
        eta_aod: f64,
        eta_fiber: f64,
        eta_optics: f64,
        eta_detector: f64,
        dark_prob_per_gate: f64,
    ) -> Result<Self, PhotonicsError> {
        for eta in [eta_aod, eta_fiber, eta_optics, eta_detector, dark_prob_per_gate] {
            if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
                return Err(PhotonicsError::BadEfficiency(eta));
            }
        }
        Ok(Self {
            eta_aod,
            eta_fiber,
            eta_optics,
            eta_detector,
            dark_prob_per_gate,
        })
    }

    pub fn validate(&self) -> Result<(), PhotonicsError> {
        Self::new(
            self.eta_aod,
            self.eta_fiber,
            self.eta_optics,
            self.eta_detector,
            self.dark_prob_per_gate,
        )
        .map(|_| ())
    }

    /// Measured loss budget: AOD 0.95, fiber 0.85, optics 0.82, detector 0.45.
    pub fn paper_default() -> Self {
        Self {
            eta_aod: 0.95,
            eta_fiber: 0.85,
            eta_optics: 0.82,
            eta_detector: 0.45,
            dark_prob_per_gate: 0.0,
        }
    }

    pub fn ideal() -> Self {
        Self {
            eta_aod: 1.0,
            eta_fiber: 1.0,
            eta_optics: 1.0,
            eta_detector: 1.0,
            dark_prob_per_gate: 0.0,
        }
    }

    /// Probability that at least one of `n` photons through this chain, or a
    /// dark count, registers on the threshold detector.
    fn click_probability(&self, n: usize) -> f64 {
        let eta = chain_transmission(self);
        1.0 - (1.0 - eta).powi(n as i32) * (1.0 - self.dark_prob_per_gate)
    }

    /// Click probability for one output of a balanced splitter placed before
    /// the detector (each photon reaches the detector with `eta / 2`).
    fn half_click_probability(&self, n: usize) -> f64 {
        let eta = chain_transmission(self) / 2.0;
        1.0 - (1.0 - eta).powi(n as i32) * (1.0 - self.dark_prob_per_gate)
    }

    fn no_click_both_halves(&self, n: usize) -> f64 {
        let eta = chain_transmission(self);
        (1.0 - eta).powi(n as i32) * (1.0 - self.dark_prob_per_gate).powi(2)
    }
}

/// The five derived heralding statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoincidenceStats {
    pub p_signal: f64,
    pub p_idler: f64,
    pub p_coincidence: f64,
    pub g_c: f64,
    pub alpha: f64,
}

/// Product of the four chain efficiencies.
pub fn chain_transmission(chain: &DetectionChain) -> f64 {
    chain.eta_aod * chain.eta_fiber * chain.eta_optics * chain.eta_detector
}

/// Joint photon-number distribution `p(n_signal, n_idler)` on the truncated
/// Fock grid; the enumeration backend for all detection statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonPairDist {
    probs: Vec<Vec<f64>>,
}

impl PhotonPairDist {
    /// Perfectly number-correlated pairs with geometric weights `chi^n`.
    pub fn two_mode_squeezed(source: &SourceParams) -> Self {
        let diag = source.number_distribution();
        let d = diag.len();
        let mut probs = vec![vec![0.0; d]; d];
        for (n, p) in diag.into_iter().enumerate() {
            probs[n][n] = p;
        }
        Self { probs }
    }

    /// Two independent deterministic single-photon sources.
    pub fn independent_single_photons() -> Self {
        let mut probs = vec![vec![0.0; 2]; 2];
        probs[1][1] = 1.0;
        Self { probs }
    }

    /// Independent Poissonian arms (coherent-equivalent uncorrelated model),
    /// truncated and renormalized at `n_max`.
    pub fn independent_poisson(mu_signal: f64, mu_idler: f64, n_max: usize) -> Self {
        let pois = |mu: f64| -> Vec<f64> {
            let mut w: Vec<f64> = (0..=n_max)
                .scan(1.0f64, |acc, n| {
                    if n > 0 {
                        *acc *= mu / n as f64;
                    }
                    Some(*acc)
                })
                .collect();
            let z: f64 = w.iter().sum();
            for x in &mut w {
                *x /= z;
            }
            w
        };
        let ps = pois(mu_signal);
        let pi = pois(mu_idler);
        let probs = ps
            .iter()
            .map(|&a| pi.iter().map(|&b| a * b).collect())
            .collect();
        Self { probs }
    }

    fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.probs.iter().enumerate().flat_map(|(ns, row)| {
            row.iter()
                .enumerate()
                .map(move |(ni, &p)| (ns, ni, p))
                .filter(|&(_, _, p)| p > 0.0)
        })
    }
}

/// Heralding statistics of a photon-number distribution through the two
/// detection chains: `p_s`, `p_i`, `p_c`, `g_c = p_c / (p_s p_i)` and the
/// split-idler anticorrelation `alpha`.
pub fn herald_statistics_for(
    dist: &PhotonPairDist,
    signal_chain: &DetectionChain,
    idler_chain: &DetectionChain,
) -> CoincidenceStats {
    let mut p_s = 0.0;
    let mut p_i = 0.0;
    let mut p_c = 0.0;
    for (ns, ni, p) in dist.iter() {
        let cs = signal_chain.click_probability(ns);
        let ci = idler_chain.click_probability(ni);
        p_s += p * cs;
        p_i += p * ci;
        p_c += p * cs * ci;
    }
    let g_c = p_c / (p_s * p_i);
    let alpha = anticorrelation_for(dist, signal_chain, idler_chain);
    CoincidenceStats {
        p_signal: p_s,
        p_idler: p_i,
        p_coincidence: p_c,
        g_c,
        alpha,
    }
}

/// [`herald_statistics_for`] with the two-mode squeezed source abstraction.
pub fn herald_statistics(
    source: &SourceParams,
    signal_chain: &DetectionChain,
    idler_chain: &DetectionChain,
) -> CoincidenceStats {
    herald_statistics_for(
        &PhotonPairDist::two_mode_squeezed(source),
        signal_chain,
        idler_chain,
    )
}

/// Heralded second-order autocorrelation of the idler arm split on a
/// balanced beamsplitter:
/// `alpha = p(s & h1 & h2) p(s) / (p(s & h1) p(s & h2))`.
pub fn anticorrelation_for(
    dist: &PhotonPairDist,
    signal_chain: &DetectionChain,
    idler_chain: &DetectionChain,
) -> f64 {
    let mut p_s = 0.0;
    let mut p_sh = 0.0; // signal and one named half (halves are symmetric)
    let mut p_shh = 0.0; // signal and both halves
    for (ns, ni, p) in dist.iter() {
        let cs = signal_chain.click_probability(ns);
        let h1 = idler_chain.half_click_probability(ni);
        // P(both halves click | n) by inclusion-exclusion
        let both = 1.0 - 2.0 * (1.0 - h1) + idler_chain.no_click_both_halves(ni);
        p_s += p * cs;
        p_sh += p * cs * h1;
        p_shh += p * cs * both.max(0.0);
    }
    p_shh * p_s / (p_sh * p_sh)
}

/// [`anticorrelation_for`] with the two-mode squeezed source abstraction.
pub fn anticorrelation(
    source: &SourceParams,
    signal_chain: &DetectionChain,
    idler_chain: &DetectionChain,
) -> f64 {
    anticorrelation_for(
        &PhotonPairDist::two_mode_squeezed(source),
        signal_chain,
        idler_chain,
    )
}

/// Atom-photon entanglement fidelity bound `(g_c - 0.5) / (g_c + 1)`.
pub fn fidelity_bound(g_c: f64) -> Result<f64, PhotonicsError> {
    if g_c < 0.5 || !g_c.is_finite() {
        return Err(PhotonicsError::BoundDomain(g_c));
    }
    Ok((g_c - 0.5) / (g_c + 1.0))
}

/// Fock cutoff used when calibrating the source against a target `g_c`.
pub const CALIBRATION_N_MAX: usize = 3;

/// Bisects the excitation parameter `chi` until the enumerated `g_c` matches
/// `target` within 1e-3. `g_c` is monotone decreasing in `chi`.
pub fn calibrate_chi(
    target_g_c: f64,
    signal_chain: &DetectionChain,
    idler_chain: &DetectionChain,
) -> Result<SourceParams, PhotonicsError> {
    if target_g_c <= 1.0 || !target_g_c.is_finite() {
        return Err(PhotonicsError::BadTarget(target_g_c));
    }
    let g_of = |chi: f64| -> f64 {
        let source = SourceParams::new(chi, CALIBRATION_N_MAX).expect("chi in range");
        herald_statistics(&source, signal_chain, idler_chain).g_c
    };
    let mut lo = 1e-6;
    let mut hi = 0.099; // keeps chi^(n_max+1) inside the 1e-4 truncation budget
    let (g_lo, g_hi) = (g_of(lo), g_of(hi));
    if target_g_c > g_lo || target_g_c < g_hi {
        return Err(PhotonicsError::Unreachable {
            target: target_g_c,
            lo: g_hi,
            hi: g_lo,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g = g_of(mid);
        if (g - target_g_c).abs() < 1e-3 {
            return Ok(SourceParams::new(mid, CALIBRATION_N_MAX).expect("chi in range"));
        }
        if g > target_g_c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(PhotonicsError::Unreachable {
        target: target_g_c,
        lo: g_hi,
        hi: g_lo,
    })
}

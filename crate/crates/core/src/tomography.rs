//! Two-qubit state tomography: local-Pauli measurement settings, count
//! simulation, linear inversion, projection onto physical states, and
//! bootstrapped fidelity error bars.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Binomial, Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{C64, FockError, JointState, Mode, ModeSet};
use crate::tol;

#[derive(Debug, Error)]
pub enum TomographyError {
    #[error("counts table is missing setting {0}")]
    MissingSetting(MeasurementSetting),
    #[error("setting {0} has zero total counts")]
    EmptySetting(MeasurementSetting),
    #[error("cannot parse counts line: {0:?}")]
    Parse(String),
    #[error("state error: {0}")]
    State(#[from] FockError),
    #[error("invalid parameter: {0}")]
    BadParameter(&'static str),
}

/// Single-qubit measurement basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliBasis {
    X,
    Y,
    Z,
}

impl PauliBasis {
    pub const ALL: [PauliBasis; 3] = [PauliBasis::X, PauliBasis::Y, PauliBasis::Z];

    fn matrix(self) -> DMatrix<C64> {
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            PauliBasis::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
            PauliBasis::Y => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
            PauliBasis::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        }
    }

    fn letter(self) -> char {
        match self {
            PauliBasis::X => 'X',
            PauliBasis::Y => 'Y',
            PauliBasis::Z => 'Z',
        }
    }

    fn from_letter(c: char) -> Option<Self> {
        match c {
            'X' => Some(PauliBasis::X),
            'Y' => Some(PauliBasis::Y),
            'Z' => Some(PauliBasis::Z),
            _ => None,
        }
    }
}

/// One local-Pauli setting on the two qubits, e.g. `XY`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeasurementSetting {
    pub q1: PauliBasis,
    pub q2: PauliBasis,
}

impl MeasurementSetting {
    /// The nine local-Pauli settings, XX first, ZZ last.
    pub fn all_nine() -> Vec<MeasurementSetting> {
        let mut out = Vec::with_capacity(9);
        for q1 in PauliBasis::ALL {
            for q2 in PauliBasis::ALL {
                out.push(MeasurementSetting { q1, q2 });
            }
        }
        out
    }

    pub fn parse(s: &str) -> Option<MeasurementSetting> {
        let mut chars = s.chars();
        let q1 = PauliBasis::from_letter(chars.next()?)?;
        let q2 = PauliBasis::from_letter(chars.next()?)?;
        if chars.next().is_some() {
            return None;
        }
        Some(MeasurementSetting { q1, q2 })
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.q1.letter(), self.q2.letter())
    }
}

/// Outcome labels in table order: `(+,+), (+,-), (-,+), (-,-)`.
pub const OUTCOME_LABELS: [&str; 4] = ["++", "+-", "-+", "--"];

/// Coincidence counts per setting and per two-detector outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsTable {
    settings: Vec<MeasurementSetting>,
    counts: Vec<[u64; 4]>,
}

impl CountsTable {
    pub fn new() -> Self {
        Self {
            settings: Vec::new(),
            counts: Vec::new(),
        }
    }

    pub fn push(&mut self, setting: MeasurementSetting, counts: [u64; 4]) {
        if let Some(i) = self.settings.iter().position(|s| *s == setting) {
            for (slot, c) in self.counts[i].iter_mut().zip(counts) {
                *slot += c;
            }
        } else {
            self.settings.push(setting);
            self.counts.push(counts);
        }
    }

    pub fn get(&self, setting: MeasurementSetting) -> Option<[u64; 4]> {
        self.settings
            .iter()
            .position(|s| *s == setting)
            .map(|i| self.counts[i])
    }

    pub fn settings(&self) -> &[MeasurementSetting] {
        &self.settings
    }

    pub fn rows(&self) -> impl Iterator<Item = (MeasurementSetting, [u64; 4])> + '_ {
        self.settings.iter().copied().zip(self.counts.iter().copied())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Plain-text form: one `setting outcome count` triple per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (setting, counts) in self.rows() {
            for (label, count) in OUTCOME_LABELS.iter().zip(counts) {
                out.push_str(&format!("{setting} {label} {count}\n"));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, TomographyError> {
        let mut table = CountsTable::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(s), Some(o), Some(c), None) =
                (fields.next(), fields.next(), fields.next(), fields.next())
            else {
                return Err(TomographyError::Parse(line.into()));
            };
            let setting =
                MeasurementSetting::parse(s).ok_or_else(|| TomographyError::Parse(line.into()))?;
            let outcome = OUTCOME_LABELS
                .iter()
                .position(|l| *l == o)
                .ok_or_else(|| TomographyError::Parse(line.into()))?;
            let count: u64 = c.parse().map_err(|_| TomographyError::Parse(line.into()))?;
            let mut row = [0u64; 4];
            row[outcome] = count;
            table.push(setting, row);
        }
        Ok(table)
    }
}

impl Default for CountsTable {
    fn default() -> Self {
        Self::new()
    }
}

fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Born probabilities of the four two-detector outcomes under a setting.
pub fn born_probabilities(
    state: &JointState,
    setting: MeasurementSetting,
) -> Result<[f64; 4], TomographyError> {
    if state.mode_set().dim() != 4 {
        return Err(TomographyError::BadParameter("state must be two qubits"));
    }
    let rho = state.density();
    let eye = DMatrix::<C64>::identity(2, 2);
    let mut probs = [0.0f64; 4];
    for (o, p) in probs.iter_mut().enumerate() {
        let s1 = if o & 2 == 0 { 1.0 } else { -1.0 };
        let s2 = if o & 1 == 0 { 1.0 } else { -1.0 };
        let p1 = (&eye + setting.q1.matrix() * C64::new(s1, 0.0)) * C64::new(0.5, 0.0);
        let p2 = (&eye + setting.q2.matrix() * C64::new(s2, 0.0)) * C64::new(0.5, 0.0);
        *p = (kron(&p1, &p2) * &rho).trace().re.clamp(0.0, 1.0);
    }
    // renormalize away float dust
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > tol::ALGEBRAIC * 10.0 && sum > 0.0 {
        for p in &mut probs {
            *p /= sum;
        }
    }
    Ok(probs)
}

/// Simulates `shots_per_setting` projective measurements per setting by
/// multinomial sampling of the Born probabilities.
pub fn simulate_counts(
    state: &JointState,
    settings: &[MeasurementSetting],
    shots_per_setting: u64,
    rng: &mut impl rand::Rng,
) -> Result<CountsTable, TomographyError> {
    if shots_per_setting == 0 {
        return Err(TomographyError::BadParameter("shots must be positive"));
    }
    let mut table = CountsTable::new();
    for &setting in settings {
        let probs = born_probabilities(state, setting)?;
        table.push(setting, multinomial(shots_per_setting, &probs, rng));
    }
    Ok(table)
}

fn multinomial(n: u64, probs: &[f64; 4], rng: &mut impl rand::Rng) -> [u64; 4] {
    let mut counts = [0u64; 4];
    let mut remaining = n;
    let mut mass = 1.0f64;
    for o in 0..3 {
        if remaining == 0 || mass <= 0.0 {
            break;
        }
        let p = (probs[o] / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, p).expect("valid binomial").sample(rng);
        counts[o] = draw;
        remaining -= draw;
        mass -= probs[o];
    }
    counts[3] = remaining;
    counts
}

/// Pauli-expectation estimates from a counts table: all nine correlators
/// plus the marginal single-qubit expectations averaged over the compatible
/// settings.
fn expectations(counts: &CountsTable) -> Result<([[f64; 3]; 3], [f64; 3], [f64; 3]), TomographyError> {
    let mut corr = [[0.0f64; 3]; 3];
    let mut single1 = [0.0f64; 3];
    let mut single2 = [0.0f64; 3];
    let mut single1_n = [0u32; 3];
    let mut single2_n = [0u32; 3];
    for (i, b1) in PauliBasis::ALL.iter().enumerate() {
        for (j, b2) in PauliBasis::ALL.iter().enumerate() {
            let setting = MeasurementSetting { q1: *b1, q2: *b2 };
            let row = counts
                .get(setting)
                .ok_or(TomographyError::MissingSetting(setting))?;
            let n: u64 = row.iter().sum();
            if n == 0 {
                return Err(TomographyError::EmptySetting(setting));
            }
            let nf = n as f64;
            let mut e12 = 0.0;
            let mut e1 = 0.0;
            let mut e2 = 0.0;
            for (o, &c) in row.iter().enumerate() {
                let s1 = if o & 2 == 0 { 1.0 } else { -1.0 };
                let s2 = if o & 1 == 0 { 1.0 } else { -1.0 };
                e12 += s1 * s2 * c as f64;
                e1 += s1 * c as f64;
                e2 += s2 * c as f64;
            }
            corr[i][j] = e12 / nf;
            single1[i] += e1 / nf;
            single1_n[i] += 1;
            single2[j] += e2 / nf;
            single2_n[j] += 1;
        }
    }
    for i in 0..3 {
        single1[i] /= f64::from(single1_n[i]);
        single2[i] /= f64::from(single2_n[i]);
    }
    Ok((corr, single1, single2))
}

/// Linear-inversion estimate of the two-qubit density matrix. The result is
/// trace-one and Hermitian but may have negative eigenvalues at finite
/// statistics.
pub fn linear_inversion(counts: &CountsTable) -> Result<DMatrix<C64>, TomographyError> {
    let (corr, single1, single2) = expectations(counts)?;
    let eye = DMatrix::<C64>::identity(2, 2);
    let quarter = C64::new(0.25, 0.0);
    let mut rho = kron(&eye, &eye) * quarter;
    for (i, b1) in PauliBasis::ALL.iter().enumerate() {
        rho += kron(&b1.matrix(), &eye) * quarter * C64::new(single1[i], 0.0);
        rho += kron(&eye, &b1.matrix()) * quarter * C64::new(single2[i], 0.0);
        for (j, b2) in PauliBasis::ALL.iter().enumerate() {
            rho += kron(&b1.matrix(), &b2.matrix()) * quarter * C64::new(corr[i][j], 0.0);
        }
    }
    Ok(rho)
}

/// Projects a Hermitian trace-one matrix onto the physical state set by
/// projecting its eigenvalue vector onto the probability simplex (the
/// Frobenius-nearest density matrix). Physical inputs are returned
/// unchanged up to numerical noise.
pub fn physicalize(rho: &DMatrix<C64>) -> DMatrix<C64> {
    let herm = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let lambdas: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let projected = project_to_simplex(&lambdas);
    let d = rho.nrows();
    let mut out = DMatrix::<C64>::zeros(d, d);
    for (k, &lk) in projected.iter().enumerate() {
        if lk == 0.0 {
            continue;
        }
        let v: DVector<C64> = eig.eigenvectors.column(k).into();
        out += (&v * v.adjoint()) * C64::new(lk, 0.0);
    }
    out
}

/// Euclidean projection of a real vector onto the probability simplex.
fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&u| (u - theta).max(0.0)).collect()
}

/// Reconstructed state with its fidelity against a target and a bootstrap
/// error bar.
#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub rho: JointState,
    pub fidelity: f64,
    /// Bootstrap standard deviation of the fidelity; `None` when fewer than
    /// two bootstrap replicas were requested.
    pub error_bar: Option<f64>,
    /// Set when the error bar could not be estimated reliably.
    pub low_confidence: bool,
}

fn physical_state(rho: DMatrix<C64>, labels: (&str, &str)) -> Result<JointState, TomographyError> {
    let modes = ModeSet::new(vec![Mode::path_qubit(labels.0), Mode::path_qubit(labels.1)])?;
    let phys = physicalize(&rho);
    Ok(JointState::mixed(modes, phys)?)
}

/// Full pipeline: linear inversion, physicalization, fidelity against the
/// target, and a per-cell Poisson bootstrap for the error bar.
pub fn reconstruct(
    counts: &CountsTable,
    target: &JointState,
    n_bootstrap: u32,
    rng: &mut impl rand::Rng,
) -> Result<ReconstructionResult, TomographyError> {
    let labels = (
        target.mode_set().modes()[0].label.clone(),
        target.mode_set().modes()[1].label.clone(),
    );
    let state = physical_state(linear_inversion(counts)?, (&labels.0, &labels.1))?;
    let fidelity = state.fidelity(target)?;

    let mut error_bar = None;
    let mut low_confidence = n_bootstrap < 2;
    if n_bootstrap >= 2 {
        let mut fids = Vec::with_capacity(n_bootstrap as usize);
        for _ in 0..n_bootstrap {
            let mut resampled = CountsTable::new();
            for (setting, row) in counts.rows() {
                let mut new_row = [0u64; 4];
                for (slot, &c) in new_row.iter_mut().zip(&row) {
                    *slot = if c == 0 {
                        0
                    } else {
                        Poisson::new(c as f64).expect("positive mean").sample(rng) as u64
                    };
                }
                resampled.push(setting, new_row);
            }
            match linear_inversion(&resampled)
                .and_then(|rho| physical_state(rho, (&labels.0, &labels.1)))
            {
                Ok(s) => fids.push(s.fidelity(target)?),
                Err(_) => {
                    // a replica emptied a setting; flag rather than fail
                    low_confidence = true;
                }
            }
        }
        if fids.len() >= 2 {
            let n = fids.len() as f64;
            let mean = fids.iter().sum::<f64>() / n;
            let var = fids.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0);
            error_bar = Some(var.sqrt());
        } else {
            low_confidence = true;
        }
    }
    Ok(ReconstructionResult {
        rho: state,
        fidelity,
        error_bar,
        low_confidence,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::protocol::{bell_psi_plus, mix_white_noise};

    #[test]
    fn nine_settings_in_order() {
        let settings = MeasurementSetting::all_nine();
        assert_eq!(settings.len(), 9);
        assert_eq!(settings[0].to_string(), "XX");
        assert_eq!(settings[8].to_string(), "ZZ");
    }

    #[test]
    fn born_probabilities_of_psi_plus() {
        let psi = bell_psi_plus("q1", "q2");
        // ZZ on psi+: perfectly anticorrelated
        let p = born_probabilities(&psi, MeasurementSetting::parse("ZZ").unwrap()).unwrap();
        assert_relative_eq!(p[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(p[1], 0.5, epsilon = 1e-12);
        assert_relative_eq!(p[2], 0.5, epsilon = 1e-12);
        assert_relative_eq!(p[3], 0.0, epsilon = 1e-12);
        // XX on psi+: perfectly correlated
        let p = born_probabilities(&psi, MeasurementSetting::parse("XX").unwrap()).unwrap();
        assert_relative_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(p[3], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn counts_table_text_round_trip() {
        let psi = bell_psi_plus("q1", "q2");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let counts =
            simulate_counts(&psi, &MeasurementSetting::all_nine(), 500, &mut rng).unwrap();
        let text = counts.to_text();
        let back = CountsTable::from_text(&text).unwrap();
        assert_eq!(counts, back);
    }

    #[test]
    fn counts_table_rejects_malformed_lines() {
        assert!(CountsTable::from_text("XQ ++ 3").is_err());
        assert!(CountsTable::from_text("XX +* 3").is_err());
        assert!(CountsTable::from_text("XX ++ many").is_err());
        assert!(CountsTable::from_text("XX ++ 3 4").is_err());
    }

    #[test]
    fn linear_inversion_recovers_exact_expectations() {
        // Infinite-statistics counts proportional to the Born probabilities
        // reproduce the Werner state exactly.
        let psi = bell_psi_plus("q1", "q2");
        let werner = mix_white_noise(&psi, 0.8);
        let mut counts = CountsTable::new();
        let big = 1_000_000u64;
        for setting in MeasurementSetting::all_nine() {
            let p = born_probabilities(&werner, setting).unwrap();
            let row = [
                (p[0] * big as f64).round() as u64,
                (p[1] * big as f64).round() as u64,
                (p[2] * big as f64).round() as u64,
                (p[3] * big as f64).round() as u64,
            ];
            counts.push(setting, row);
        }
        let rho = linear_inversion(&counts).unwrap();
        let diff = (&rho - werner.density()).norm();
        assert!(diff < 1e-5, "linear inversion residual {diff}");
    }

    #[test]
    fn physicalize_matches_hand_projection() {
        // diag(1.1, -0.1, 0, 0) projects to diag(1, 0, 0, 0)
        let mut rho = DMatrix::<C64>::zeros(4, 4);
        rho[(0, 0)] = C64::new(1.1, 0.0);
        rho[(1, 1)] = C64::new(-0.1, 0.0);
        let phys = physicalize(&rho);
        let mut expected = DMatrix::<C64>::zeros(4, 4);
        expected[(0, 0)] = C64::new(1.0, 0.0);
        assert!((phys - expected).norm() < 1e-12);
    }

    #[test]
    fn physicalize_is_idempotent_and_fixes_physical_states() {
        let psi = bell_psi_plus("q1", "q2");
        let werner = mix_white_noise(&psi, 0.6).density();
        let once = physicalize(&werner);
        assert!((&once - &werner).norm() < 1e-10);
        let twice = physicalize(&once);
        assert!((twice - once).norm() < 1e-10);
    }

    #[test]
    fn simplex_projection_is_nonexpansive_toward_feasible_points() {
        // Against a grid of feasible simplex points, the projection of v is
        // no farther from any feasible point than v itself.
        let v = [0.7, 0.5, -0.1, -0.1];
        let p = project_to_simplex(&v);
        assert_relative_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        let grid = [
            [1.0, 0.0, 0.0, 0.0],
            [0.25, 0.25, 0.25, 0.25],
            [0.5, 0.5, 0.0, 0.0],
            [0.4, 0.3, 0.2, 0.1],
        ];
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
        };
        for g in grid {
            assert!(dist(&p, &g) <= dist(&v, &g) + 1e-12);
        }
    }

    #[test]
    fn reconstruction_of_simulated_bell_counts() {
        let psi = bell_psi_plus("q1", "q2");
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let counts =
            simulate_counts(&psi, &MeasurementSetting::all_nine(), 2000, &mut rng).unwrap();
        let result = reconstruct(&counts, &psi, 200, &mut rng).unwrap();
        assert!(result.fidelity > 0.98, "fidelity {}", result.fidelity);
        let sigma = result.error_bar.unwrap();
        assert!(sigma > 0.0 && sigma < 0.05, "error bar {sigma}");
        assert!(!result.low_confidence);
    }

    #[test]
    fn single_bootstrap_is_flagged_low_confidence() {
        let psi = bell_psi_plus("q1", "q2");
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let counts =
            simulate_counts(&psi, &MeasurementSetting::all_nine(), 200, &mut rng).unwrap();
        let result = reconstruct(&counts, &psi, 1, &mut rng).unwrap();
        assert!(result.error_bar.is_none());
        assert!(result.low_confidence);
    }

    #[test]
    fn missing_setting_is_an_error() {
        let psi = bell_psi_plus("q1", "q2");
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let settings = &MeasurementSetting::all_nine()[..8];
        let counts = simulate_counts(&psi, settings, 100, &mut rng).unwrap();
        assert!(matches!(
            linear_inversion(&counts),
            Err(TomographyError::MissingSetting(_))
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn reconstruction_is_physical(seed in 0u64..1000, weight in 0.3f64..1.0) {
                let psi = bell_psi_plus("q1", "q2");
                let state = mix_white_noise(&psi, weight);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let counts = simulate_counts(
                    &state, &MeasurementSetting::all_nine(), 300, &mut rng).unwrap();
                let rho = physicalize(&linear_inversion(&counts).unwrap());
                let trace: f64 = rho.diagonal().iter().map(|z| z.re).sum();
                prop_assert!((trace - 1.0).abs() < 1e-9);
                let eig = rho.symmetric_eigen();
                prop_assert!(eig.eigenvalues.iter().all(|&l| l > -1e-10));
            }

            #[test]
            fn multinomial_totals_preserved(n in 1u64..5000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
                let p0 = a * 0.5;
                let p1 = (1.0 - p0) * b * 0.5;
                let p2 = (1.0 - p0 - p1) * 0.5;
                let probs = [p0, p1, p2, 1.0 - p0 - p1 - p2];
                let mut rng = ChaCha8Rng::seed_from_u64(n);
                let counts = multinomial(n, &probs, &mut rng);
                prop_assert_eq!(counts.iter().sum::<u64>(), n);
            }
        }
    }
}

//! Loss channel on a single Fock mode.

use nalgebra::DMatrix;

use super::{C64, FockError, JointState, ModeKind, Repr};

impl JointState {
    /// Beamsplitter loss of transmission `eta` on the named Fock mode, with
    /// the reflected environment mode traced out. The output is a density
    /// matrix except in the trivial `eta = 1` case, which is the identity
    /// channel.
    pub fn apply_loss(&self, mode: &str, eta: f64) -> Result<JointState, FockError> {
        if !(0.0..=1.0).contains(&eta) || !eta.is_finite() {
            return Err(FockError::BadTransmission(eta));
        }
        let pos = self
            .modes
            .position(mode)
            .ok_or_else(|| FockError::UnknownLabel(mode.to_string()))?;
        let n_max = match self.modes.modes()[pos].kind {
            ModeKind::Fock { n_max } => n_max,
            ModeKind::PathQubit => return Err(FockError::NotFockMode(mode.to_string())),
        };
        if eta == 1.0 {
            return Ok(self.clone());
        }
        let d = n_max + 1;
        let kraus = loss_kraus(n_max, eta);
        let rho = self.density();
        let dim = self.modes.dim();
        let stride = self.modes.strides()[pos];
        let block = d * stride;

        // rho' = sum_l A_l rho A_l^dag with A_l acting on one mode:
        // transform rows, then columns.
        let mut out = DMatrix::<C64>::zeros(dim, dim);
        let mut left = DMatrix::<C64>::zeros(dim, dim);
        for k in &kraus {
            left.fill(C64::new(0.0, 0.0));
            for outer in (0..dim).step_by(block) {
                for inner in 0..stride {
                    for row in 0..d {
                        for col in 0..d {
                            let kc = k[(row, col)];
                            if kc == 0.0 {
                                continue;
                            }
                            let r = outer + row * stride + inner;
                            let c = outer + col * stride + inner;
                            for j in 0..dim {
                                left[(r, j)] += C64::new(kc, 0.0) * rho[(c, j)];
                            }
                        }
                    }
                }
            }
            // right multiply by A_l^dag (conjugate transpose; K is real).
            for outer in (0..dim).step_by(block) {
                for inner in 0..stride {
                    for col in 0..d {
                        for src in 0..d {
                            let kc = k[(col, src)];
                            if kc == 0.0 {
                                continue;
                            }
                            let cc = outer + col * stride + inner;
                            let cs = outer + src * stride + inner;
                            for i in 0..dim {
                                out[(i, cc)] += left[(i, cs)] * C64::new(kc, 0.0);
                            }
                        }
                    }
                }
            }
        }
        JointState {
            modes: self.modes.clone(),
            repr: Repr::Mixed(out),
            tol: self.tol,
        }
        .validated()
    }

    fn validated(self) -> Result<JointState, FockError> {
        match self.repr {
            Repr::Mixed(m) => JointState::mixed_with_tol(self.modes, m, self.tol),
            Repr::Pure(v) => {
                JointState::pure_with_tol(self.modes, v.data.as_vec().clone(), self.tol)
            }
        }
    }
}

/// Kraus operators of the photon-loss channel on a Fock space truncated at
/// `n_max`: `K_l |n> = sqrt(C(n, l) eta^(n-l) (1-eta)^l) |n-l>`.
pub(crate) fn loss_kraus(n_max: usize, eta: f64) -> Vec<DMatrix<f64>> {
    let d = n_max + 1;
    (0..d)
        .map(|l| {
            let mut k = DMatrix::<f64>::zeros(d, d);
            for n in l..d {
                let coeff = binomial(n, l) * eta.powi((n - l) as i32) * (1.0 - eta).powi(l as i32);
                k[(n - l, n)] = coeff.sqrt();
            }
            k
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut acc = 1.0f64;
    for i in 0..k {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

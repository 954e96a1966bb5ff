//! Projective measurement on a subset of modes.

use nalgebra::{DMatrix, DVector};

use super::{C64, FockError, JointState, Mode, ModeSet, Repr};

/// Orthogonal projector on a subset of modes, given as a set of orthonormal
/// kets on the subspace spanned by those modes (in the order listed).
#[derive(Debug, Clone)]
pub struct Projector {
    labels: Vec<String>,
    kets: Vec<DVector<C64>>,
}

impl Projector {
    pub fn new(labels: Vec<String>, kets: Vec<DVector<C64>>) -> Result<Self, FockError> {
        if kets.is_empty() {
            return Err(FockError::NonProjector);
        }
        let tol = crate::tol::ALGEBRAIC;
        for (i, a) in kets.iter().enumerate() {
            for (j, b) in kets.iter().enumerate() {
                if a.len() != b.len() {
                    return Err(FockError::NonProjector);
                }
                let ip = a.dotc(b);
                let expect = if i == j { 1.0 } else { 0.0 };
                if (ip.re - expect).abs() > tol || ip.im.abs() > tol {
                    return Err(FockError::NonProjector);
                }
            }
        }
        Ok(Self { labels, kets })
    }

    /// Rank-1 projector onto a single ket.
    pub fn onto(labels: Vec<String>, ket: DVector<C64>) -> Result<Self, FockError> {
        Self::new(labels, vec![ket])
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Result of a projective measurement: either the projected branch with its
/// Born probability, or an explicit null marker for probability zero.
#[derive(Debug, Clone)]
pub enum MeasureOutcome {
    Projected { probability: f64, post: JointState },
    Null,
}

impl MeasureOutcome {
    pub fn probability(&self) -> f64 {
        match self {
            MeasureOutcome::Projected { probability, .. } => *probability,
            MeasureOutcome::Null => 0.0,
        }
    }

    pub fn post(&self) -> Option<&JointState> {
        match self {
            MeasureOutcome::Projected { post, .. } => Some(post),
            MeasureOutcome::Null => None,
        }
    }
}

impl JointState {
    /// Projective measurement: probability `tr(P rho P)` and the renormalized
    /// post-measurement state. Purity is preserved for pure inputs.
    pub fn measure_projective(&self, projector: &Projector) -> Result<MeasureOutcome, FockError> {
        let mut positions = Vec::with_capacity(projector.labels.len());
        for label in &projector.labels {
            let p = self
                .modes
                .position(label)
                .ok_or_else(|| FockError::UnknownLabel(label.clone()))?;
            positions.push(p);
        }
        let sub_dim: usize = positions
            .iter()
            .map(|&p| self.modes.modes()[p].kind.dim())
            .collect::<Vec<_>>()
            .iter()
            .product();
        for ket in &projector.kets {
            if ket.len() != sub_dim {
                return Err(FockError::LengthMismatch {
                    got: ket.len(),
                    want: sub_dim,
                });
            }
        }

        // Projector matrix on the subspace, reordered to ascending mode
        // position so it composes with the state's index layout.
        let perm = subspace_permutation(&self.modes, &positions);
        let mut p_sub = DMatrix::<C64>::zeros(sub_dim, sub_dim);
        for ket in &projector.kets {
            let mut reordered = DVector::<C64>::zeros(sub_dim);
            for (given, &ordered) in perm.iter().enumerate() {
                reordered[ordered] = ket[given];
            }
            p_sub += &reordered * reordered.adjoint();
        }

        let mut sorted_pos = positions.clone();
        sorted_pos.sort_unstable();
        let sub_offsets = self.modes.offsets(&sorted_pos);
        let rest_pos: Vec<usize> = (0..self.modes.len())
            .filter(|p| !sorted_pos.contains(p))
            .collect();
        let rest_offsets = self.modes.offsets(&rest_pos);

        let tol = self.tol.algebraic;
        match &self.repr {
            Repr::Pure(v) => {
                let mut out = DVector::<C64>::zeros(v.len());
                for &r in &rest_offsets {
                    let mut seg = DVector::<C64>::zeros(sub_dim);
                    for (si, &so) in sub_offsets.iter().enumerate() {
                        seg[si] = v[so + r];
                    }
                    let proj = &p_sub * seg;
                    for (si, &so) in sub_offsets.iter().enumerate() {
                        out[so + r] = proj[si];
                    }
                }
                let p = out.norm_squared();
                if p <= tol {
                    return Ok(MeasureOutcome::Null);
                }
                let scaled = (out / C64::new(p.sqrt(), 0.0)).data.as_vec().clone();
                Ok(MeasureOutcome::Projected {
                    probability: p,
                    post: JointState::pure_with_tol(self.modes.clone(), scaled, self.tol)?,
                })
            }
            Repr::Mixed(rho) => {
                let dim = rho.nrows();
                // left: (P (x) I) rho
                let mut left = DMatrix::<C64>::zeros(dim, dim);
                for &r in &rest_offsets {
                    for (si, &so) in sub_offsets.iter().enumerate() {
                        for (sj, &sq) in sub_offsets.iter().enumerate() {
                            let coeff = p_sub[(si, sj)];
                            if coeff.norm_sqr() == 0.0 {
                                continue;
                            }
                            for j in 0..dim {
                                let add = coeff * rho[(sq + r, j)];
                                left[(so + r, j)] += add;
                            }
                        }
                    }
                }
                // out = left (P (x) I)^dag
                let mut out = DMatrix::<C64>::zeros(dim, dim);
                for &r in &rest_offsets {
                    for (si, &so) in sub_offsets.iter().enumerate() {
                        for (sj, &sq) in sub_offsets.iter().enumerate() {
                            let coeff = p_sub[(si, sj)].conj();
                            if coeff.norm_sqr() == 0.0 {
                                continue;
                            }
                            for i in 0..dim {
                                out[(i, so + r)] += left[(i, sq + r)] * coeff;
                            }
                        }
                    }
                }
                let p = out.trace().re;
                if p <= tol {
                    return Ok(MeasureOutcome::Null);
                }
                let rho_post = out / C64::new(p, 0.0);
                Ok(MeasureOutcome::Projected {
                    probability: p,
                    post: JointState::mixed_with_tol(self.modes.clone(), rho_post, self.tol)?,
                })
            }
        }
    }
}

/// Maps flat subspace indices in the caller's label order to flat indices in
/// ascending mode-position order.
fn subspace_permutation(modes: &ModeSet, positions: &[usize]) -> Vec<usize> {
    let given_dims: Vec<usize> = positions.iter().map(|&p| modes.modes()[p].kind.dim()).collect();
    let mut sorted: Vec<(usize, usize)> = positions.iter().cloned().enumerate().collect();
    sorted.sort_by_key(|&(_, pos)| pos);
    // strides in the sorted layout
    let sorted_dims: Vec<usize> = sorted.iter().map(|&(g, _)| given_dims[g]).collect();
    let mut sorted_strides = vec![1usize; sorted.len()];
    for i in (0..sorted.len().saturating_sub(1)).rev() {
        sorted_strides[i] = sorted_strides[i + 1] * sorted_dims[i + 1];
    }
    // stride of each given-order mode inside the sorted layout
    let mut given_stride = vec![0usize; positions.len()];
    for (slot, &(g, _)) in sorted.iter().enumerate() {
        given_stride[g] = sorted_strides[slot];
    }
    let total: usize = given_dims.iter().product();
    let mut map = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut out = 0usize;
        for g in (0..given_dims.len()).rev() {
            let d = given_dims[g];
            out += (rem % d) * given_stride[g];
            rem /= d;
        }
        map.push(out);
    }
    map
}

/// Convenience: a [`Mode`] pair of path-qubit labels used across the crate.
pub fn path_pair(a: &str, b: &str) -> ModeSet {
    ModeSet::new(vec![Mode::path_qubit(a), Mode::path_qubit(b)]).expect("valid pair")
}

use approx::assert_abs_diff_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use super::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn fock_mode(label: &str, n_max: usize) -> ModeSet {
    ModeSet::new(vec![Mode::fock(label, n_max)]).unwrap()
}

fn qubit(label: &str) -> ModeSet {
    ModeSet::new(vec![Mode::path_qubit(label)]).unwrap()
}

fn bell_phi_plus(a: &str, b: &str) -> JointState {
    let modes = ModeSet::new(vec![Mode::path_qubit(a), Mode::path_qubit(b)]).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    JointState::pure(modes, vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap()
}

fn bell_psi_plus(a: &str, b: &str) -> JointState {
    let modes = ModeSet::new(vec![Mode::path_qubit(a), Mode::path_qubit(b)]).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    JointState::pure(modes, vec![c(0.0, 0.0), c(s, 0.0), c(s, 0.0), c(0.0, 0.0)]).unwrap()
}

#[test]
fn two_mode_squeezed_vacuum_limit() {
    let params = SourceParams::new(0.0, 2).unwrap();
    let state = two_mode_squeezed(&params).unwrap();
    let amps = state.amplitudes().unwrap();
    assert_abs_diff_eq!(amps[0].re, 1.0, epsilon = 1e-12);
    assert!(amps.iter().skip(1).all(|a| a.norm() == 0.0));
}

#[test]
fn two_mode_squeezed_amplitude_ratios() {
    // chi = 0.04, n_max = 2: amplitudes proportional to (1, 0.2, 0.04).
    let params = SourceParams::new(0.04, 2).unwrap();
    let state = two_mode_squeezed(&params).unwrap();
    let amps = state.amplitudes().unwrap();
    let a0 = amps[0].re;
    assert_abs_diff_eq!(amps[4].re / a0, 0.2, epsilon = 1e-12);
    assert_abs_diff_eq!(amps[8].re / a0, 0.04, epsilon = 1e-12);
    assert_abs_diff_eq!(state.trace(), 1.0, epsilon = 1e-12);
}

#[test]
fn source_rejects_truncation_violation() {
    // chi^(n_max+1) = 0.3^2 = 0.09 >> 1e-4.
    assert!(matches!(
        SourceParams::new(0.3, 1),
        Err(FockError::Truncation { .. })
    ));
    assert!(matches!(SourceParams::new(-0.1, 2), Err(FockError::BadChi(_))));
    assert!(matches!(SourceParams::new(0.5, 2), Err(FockError::BadChi(_))));
}

#[test]
fn tensor_of_basis_states() {
    let a = JointState::basis_state(fock_mode("a", 2), &[0]).unwrap();
    let b = JointState::basis_state(fock_mode("b", 2), &[1]).unwrap();
    let ab = a.tensor(&b).unwrap();
    let amps = ab.amplitudes().unwrap();
    // |0,1> has flat index 0*3 + 1 = 1.
    assert_abs_diff_eq!(amps[1].re, 1.0, epsilon = 1e-12);
    assert!(ab.is_pure());
    assert_abs_diff_eq!(ab.trace(), 1.0, epsilon = 1e-12);
}

#[test]
fn tensor_rejects_label_collision() {
    let a = JointState::basis_state(qubit("q"), &[0]).unwrap();
    let b = JointState::basis_state(qubit("q"), &[1]).unwrap();
    assert!(matches!(a.tensor(&b), Err(FockError::DuplicateLabel(_))));
}

#[test]
fn tensor_of_two_entangled_pairs_is_four_mode_product() {
    let link1 = bell_phi_plus("s1", "a1");
    let link2 = bell_phi_plus("s2", "a2");
    let joint = link1.tensor(&link2).unwrap();
    assert!(joint.is_pure());
    assert_eq!(joint.mode_set().dim(), 16);
    // Components |LL,LL>, |LL,RR>, |RR,LL>, |RR,RR> each with amplitude 1/2.
    let amps = joint.amplitudes().unwrap();
    for idx in [0usize, 3, 12, 15] {
        assert_abs_diff_eq!(amps[idx].re, 0.5, epsilon = 1e-12);
    }
}

#[test]
fn loss_identity_and_full_loss() {
    let modes = fock_mode("m", 2);
    let one = JointState::basis_state(modes.clone(), &[1]).unwrap();
    let same = one.apply_loss("m", 1.0).unwrap();
    assert!(same.is_pure());
    assert_abs_diff_eq!(same.fidelity(&one).unwrap(), 1.0, epsilon = 1e-12);

    let lost = one.apply_loss("m", 0.0).unwrap();
    let vacuum = JointState::basis_state(modes, &[0]).unwrap();
    assert_abs_diff_eq!(lost.fidelity(&vacuum).unwrap(), 1.0, epsilon = 1e-12);
}

#[test]
fn loss_rejects_bad_arguments() {
    let one = JointState::basis_state(fock_mode("m", 2), &[1]).unwrap();
    assert!(matches!(one.apply_loss("m", 1.5), Err(FockError::BadTransmission(_))));
    let q = JointState::basis_state(qubit("q"), &[0]).unwrap();
    assert!(matches!(q.apply_loss("q", 0.5), Err(FockError::NotFockMode(_))));
}

#[test]
fn measure_plus_onto_l() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = JointState::pure(qubit("q"), vec![c(s, 0.0), c(s, 0.0)]).unwrap();
    let proj = Projector::onto(
        vec!["q".into()],
        DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
    )
    .unwrap();
    let outcome = plus.measure_projective(&proj).unwrap();
    assert_abs_diff_eq!(outcome.probability(), 0.5, epsilon = 1e-12);
}

#[test]
fn measure_bell_onto_ll_is_null() {
    let bell = bell_psi_plus("q1", "q2");
    let proj = Projector::onto(
        vec!["q1".into(), "q2".into()],
        DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]),
    )
    .unwrap();
    assert!(matches!(
        bell.measure_projective(&proj).unwrap(),
        MeasureOutcome::Null
    ));
}

#[test]
fn measure_rejects_non_projector() {
    let kets = vec![
        DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
        DVector::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]),
    ];
    assert!(matches!(
        Projector::new(vec!["q".into()], kets),
        Err(FockError::NonProjector)
    ));
}

#[test]
fn measure_respects_label_order() {
    // Projector given in order (q2, q1) must act the same as (q1, q2) with
    // swapped indices: project |LR> of (q1,q2) onto |RL> given as (q2,q1).
    let modes = ModeSet::new(vec![Mode::path_qubit("q1"), Mode::path_qubit("q2")]).unwrap();
    let lr = JointState::basis_state(modes, &[PATH_L, PATH_R]).unwrap();
    // in (q2, q1) order, this state is |R, L> = index 2
    let mut ket = DVector::zeros(4);
    ket[2] = c(1.0, 0.0);
    let proj = Projector::onto(vec!["q2".into(), "q1".into()], ket).unwrap();
    let outcome = lr.measure_projective(&proj).unwrap();
    assert_abs_diff_eq!(outcome.probability(), 1.0, epsilon = 1e-12);
}

#[test]
fn partial_trace_of_bell_is_maximally_mixed() {
    let bell = bell_phi_plus("q1", "q2");
    let reduced = bell.partial_trace(&["q1"]).unwrap();
    let rho = reduced.density();
    assert_abs_diff_eq!(rho[(0, 0)].re, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(rho[(1, 1)].re, 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(rho[(0, 1)].norm(), 0.0, epsilon = 1e-12);
}

#[test]
fn partial_trace_keep_all_is_identity() {
    let bell = bell_phi_plus("q1", "q2");
    let same = bell.partial_trace(&["q1", "q2"]).unwrap();
    assert!(same.is_pure());
    assert_abs_diff_eq!(same.fidelity(&bell).unwrap(), 1.0, epsilon = 1e-12);
}

#[test]
fn partial_trace_rejects_empty_keep() {
    let bell = bell_phi_plus("q1", "q2");
    assert!(matches!(bell.partial_trace(&[]), Err(FockError::EmptyKeep)));
}

#[test]
fn reduced_state_of_two_pairs_on_atoms_is_product_of_mixed_qubits() {
    let joint = bell_phi_plus("s1", "a1")
        .tensor(&bell_phi_plus("s2", "a2"))
        .unwrap();
    let reduced = joint.partial_trace(&["a1", "a2"]).unwrap();
    let rho = reduced.density();
    for i in 0..4 {
        for j in 0..4 {
            let expect = if i == j { 0.25 } else { 0.0 };
            assert_abs_diff_eq!(rho[(i, j)].re, expect, epsilon = 1e-12);
            assert_abs_diff_eq!(rho[(i, j)].im, 0.0, epsilon = 1e-12);
        }
    }
}

#[test]
fn fidelity_of_pure_state_with_itself() {
    let bell = bell_phi_plus("q1", "q2");
    assert_abs_diff_eq!(bell.fidelity(&bell).unwrap(), 1.0, epsilon = 1e-12);
}

#[test]
fn fidelity_of_werner_state() {
    // rho = 0.8 |Phi><Phi| + 0.2 I/4 -> F = 0.8 + 0.2/4 = 0.85.
    let bell = bell_phi_plus("q1", "q2");
    let p = 0.8;
    let rho = bell.density() * c(p, 0.0)
        + DMatrix::<C64>::identity(4, 4) * c((1.0 - p) / 4.0, 0.0);
    let werner = JointState::mixed(bell.mode_set().clone(), rho).unwrap();
    assert_abs_diff_eq!(werner.fidelity(&bell).unwrap(), 0.85, epsilon = 1e-12);
}

#[test]
fn fidelity_of_lr_against_psi_plus() {
    let modes = ModeSet::new(vec![Mode::path_qubit("q1"), Mode::path_qubit("q2")]).unwrap();
    let lr = JointState::basis_state(modes, &[PATH_L, PATH_R]).unwrap();
    let psi = bell_psi_plus("q1", "q2");
    let rho = JointState::mixed(lr.mode_set().clone(), lr.density()).unwrap();
    assert_abs_diff_eq!(rho.fidelity(&psi).unwrap(), 0.5, epsilon = 1e-12);
}

#[test]
fn fidelity_invariant_under_global_phase_of_target() {
    let bell = bell_phi_plus("q1", "q2");
    let phase = c(0.0, 1.3).exp();
    let rotated_amps: Vec<C64> = bell
        .amplitudes()
        .unwrap()
        .iter()
        .map(|a| a * phase)
        .collect();
    let rotated = JointState::pure(bell.mode_set().clone(), rotated_amps).unwrap();
    let mixed = JointState::mixed(bell.mode_set().clone(), bell.density()).unwrap();
    assert_abs_diff_eq!(
        mixed.fidelity(&rotated).unwrap(),
        mixed.fidelity(&bell).unwrap(),
        epsilon = 1e-12
    );
}

#[test]
fn dimension_cap_enforced() {
    let modes: Vec<Mode> = (0..13).map(|i| Mode::path_qubit(format!("q{i}"))).collect();
    assert!(matches!(ModeSet::new(modes), Err(FockError::DimensionCap(_))));
}

fn random_single_mode_state(seed: u64, n_max: usize) -> JointState {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let d = n_max + 1;
    let amps: Vec<C64> = (0..d)
        .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    JointState::pure_normalized(fock_mode("m", n_max), amps).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn loss_channels_compose(seed in 0u64..1000, e1 in 0.0f64..=1.0, e2 in 0.0f64..=1.0) {
        let state = random_single_mode_state(seed, 3);
        let seq = state.apply_loss("m", e1).unwrap().apply_loss("m", e2).unwrap();
        let combined = state.apply_loss("m", e1 * e2).unwrap();
        let diff = (seq.density() - combined.density()).norm();
        prop_assert!(diff < 1e-9, "composition mismatch {diff}");
    }

    #[test]
    fn loss_output_is_physical(seed in 0u64..1000, eta in 0.0f64..1.0) {
        let state = random_single_mode_state(seed, 3);
        let out = state.apply_loss("m", eta).unwrap();
        let rho = out.density();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-9);
        prop_assert!((&rho - rho.adjoint()).norm() < 1e-9);
        prop_assert!(min_eigenvalue(&rho) > -1e-9);
    }

    #[test]
    fn projective_probabilities_sum_to_one(seed in 0u64..1000) {
        let state = random_single_mode_state(seed, 2);
        let mut total = 0.0;
        for k in 0..3usize {
            let mut ket = DVector::zeros(3);
            ket[k] = c(1.0, 0.0);
            let proj = Projector::onto(vec!["m".into()], ket).unwrap();
            total += state.measure_projective(&proj).unwrap().probability();
        }
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tensor_then_trace_roundtrip(seed in 0u64..1000) {
        let state = random_single_mode_state(seed, 2);
        let other = JointState::basis_state(fock_mode("aux", 2), &[1]).unwrap();
        let joint = state.tensor(&other).unwrap();
        let back = joint.partial_trace(&["m"]).unwrap();
        let diff = (back.density() - state.density()).norm();
        prop_assert!(diff < 1e-9);
    }

    #[test]
    fn fidelity_is_linear_under_mixing(seed in 0u64..500, lambda in 0.0f64..=1.0) {
        let bell = bell_phi_plus("q1", "q2");
        let a = JointState::basis_state(bell.mode_set().clone(), &[PATH_L, PATH_R]).unwrap();
        let rho = bell.density() * c(lambda, 0.0) + a.density() * c(1.0 - lambda, 0.0);
        let mixed = JointState::mixed(bell.mode_set().clone(), rho).unwrap();
        let _ = seed;
        let f = mixed.fidelity(&bell).unwrap();
        let expect = lambda * 1.0 + (1.0 - lambda) * 0.0;
        prop_assert!((f - expect).abs() < 1e-9);
    }
}

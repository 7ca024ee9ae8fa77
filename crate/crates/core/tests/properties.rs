// Copyright 2026 The qptkit Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use qptkit::algebra::{c64, embed_gate, standard_gate, ComplexMatrix, DensityMatrix, GateLabel, PauliString};
use qptkit::backend::{execute_exact, load_backend, BackendModel, QX4_CONFIG};
use qptkit::circuit::Circuit;
use qptkit::noise::{amplitude_damping, apply_channel, compose, pure_dephasing, validate_completeness};
use qptkit::qasm::{emit_qasm, parse_qasm};
use qptkit::qpt::{
    fixed_operator_set, process_overlap, run_qpt, theoretical_chi, theoretical_chi_for, ChiMatrix, Shots,
};
use qptkit::qst::{
    append_setting, estimate_pauli, qst_settings, reconstruct_from_dataset, Outcomes, SettingRecord, TomographyDataset,
};

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| c64(re, im))
}

fn matrix(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(complex(), dim * dim).prop_map(move |v| ComplexMatrix::new(dim, dim, v).unwrap())
}

fn gate() -> impl Strategy<Value = GateLabel> {
    prop::sample::select(GateLabel::ALL.to_vec())
}

/// Random circuits without measurements on `1..=max_qubits` qubits.
fn circuit(max_qubits: usize) -> impl Strategy<Value = Circuit> {
    (1..=max_qubits).prop_flat_map(|n| {
        prop::collection::vec((gate(), 0..n, 1..n.max(2)), 0..12).prop_map(move |ops| {
            let mut c = Circuit::new(n, 0).unwrap();
            for (g, a, shift) in ops {
                if g.arity() == 2 {
                    if n >= 2 {
                        c.gate(g, &[a, (a + shift) % n]).unwrap();
                    }
                } else {
                    c.gate(g, &[a]).unwrap();
                }
            }
            c
        })
    })
}

/// QX4 parameters with no coupling restriction.
fn unrestricted_qx4() -> BackendModel {
    let text: Vec<&str> = QX4_CONFIG.lines().filter(|l| !l.starts_with("coupling")).collect();
    load_backend(&text.join("\n")).unwrap()
}

/// Exact readout distributions of `rho` for every setting, computed by
/// rotating the state with the ideal basis-change unitaries.
fn ideal_dataset(rho: &DensityMatrix) -> TomographyDataset {
    let n = rho.qubit_count();
    let records = qst_settings(n)
        .unwrap()
        .into_iter()
        .map(|s| {
            let u = s.tags().iter().fold(ComplexMatrix::identity(1), |acc, b| {
                let r = b
                    .rotation()
                    .iter()
                    .fold(ComplexMatrix::identity(2), |r, g| &standard_gate(*g) * &r);
                acc.kron(&r)
            });
            let rotated = &(&u * rho.matrix()) * &u.dagger();
            let probs: BTreeMap<String, f64> = (0..1usize << n)
                .map(|i| (format!("{i:0n$b}"), rotated[(i, i)].re))
                .collect();
            SettingRecord {
                setting: s,
                outcomes: Outcomes::Exact(probs),
            }
        })
        .collect();
    TomographyDataset::new(n, records).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dagger_is_an_involution(a in matrix(4)) {
        prop_assert!(a.dagger().dagger().approx_eq(&a, 0.0));
    }

    #[test]
    fn kron_mixed_product(a in matrix(2), b in matrix(2), c in matrix(2), d in matrix(2)) {
        let lhs = &a.kron(&b) * &c.kron(&d);
        let rhs = (&a * &c).kron(&(&b * &d));
        prop_assert!(lhs.approx_eq(&rhs, 1e-12));
    }

    #[test]
    fn embedded_gates_stay_unitary(g in gate(), n in 2usize..=5, a in 0usize..5, shift in 1usize..5) {
        let a = a % n;
        let targets: Vec<usize> = if g.arity() == 2 { vec![a, (a + shift % (n - 1).max(1)) % n] } else { vec![a] };
        prop_assume!(targets.len() == 1 || targets[0] != targets[1]);
        let u = embed_gate(&standard_gate(g), &targets, n).unwrap();
        prop_assert!(u.is_unitary(1e-12));
    }

    #[test]
    fn decay_channels_are_complete(ns in 0.0..5000.0f64, t1 in 5.0..100.0f64, ratio in 0.05..2.0f64) {
        let t2 = t1 * ratio;
        let c = compose(&amplitude_damping(ns, t1).unwrap(), &pure_dephasing(ns, t1, t2).unwrap()).unwrap();
        prop_assert!(validate_completeness(&c) < 1e-12);
        let rho = DensityMatrix::maximally_mixed(1).unwrap();
        let out = apply_channel(&c, &rho).unwrap();
        assert_abs_diff_eq!(out.matrix().trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn parse_emit_roundtrip(c in circuit(5), measured in prop::collection::vec(any::<bool>(), 5)) {
        let n = c.qubit_count();
        let chosen: Vec<usize> = (0..n).filter(|&q| measured[q]).collect();
        let mut c = c.with_clbits(chosen.len()).unwrap();
        for (clbit, &q) in chosen.iter().enumerate() {
            c.measure(q, clbit).unwrap();
        }
        let text = emit_qasm(&c);
        let parsed = parse_qasm(&text).unwrap();
        prop_assert_eq!(&parsed, &c);
        prop_assert_eq!(emit_qasm(&parsed), text);
    }

    #[test]
    fn fidelity_is_conjugate_symmetric(a in matrix(4), b in matrix(4)) {
        let a = ChiMatrix::new(a.hermitian_part());
        let b = ChiMatrix::new(b.hermitian_part());
        prop_assume!(a.frobenius_norm() > 1e-3 && b.frobenius_norm() > 1e-3);
        let ab = process_overlap(&a, &b).unwrap();
        let ba = process_overlap(&b, &a).unwrap();
        prop_assert!((ab - ba.conj()).norm() < 1e-12);
    }

    #[test]
    fn fidelity_of_psd_inputs_is_bounded(a in matrix(4), b in matrix(4)) {
        let a = ChiMatrix::new(&a * &a.dagger());
        let b = ChiMatrix::new(&b * &b.dagger());
        prop_assume!(a.frobenius_norm() > 1e-3 && b.frobenius_norm() > 1e-3);
        let f = process_overlap(&a, &b).unwrap();
        prop_assert!(f.im.abs() < 1e-9);
        prop_assert!(f.re >= -1e-12 && f.re <= 1.0 + 1e-9);
    }

    #[test]
    fn theoretical_chi_is_rank_one(a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64) {
        let ops = fixed_operator_set(1).unwrap();
        let rz = |t: f64| ComplexMatrix::diagonal(&[Complex64::from_polar(1.0, -t / 2.0), Complex64::from_polar(1.0, t / 2.0)]);
        let ry = ComplexMatrix::from_real_rows(&[[(b / 2.0).cos(), -(b / 2.0).sin()], [(b / 2.0).sin(), (b / 2.0).cos()]]);
        let u = &(&rz(a) * &ry) * &rz(c);
        let chi = theoretical_chi(&u, &ops).unwrap();
        let eig = chi.matrix.hermitian_eigenvalues();
        assert_abs_diff_eq!(chi.trace().re, 1.0, epsilon = 1e-12);
        prop_assert!(eig[2].abs() <= 1e-10);
        assert_abs_diff_eq!(eig[3], 1.0, epsilon = 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_qst_reconstructs_simulated_states(c in circuit(3), noisy in any::<bool>()) {
        let backend = unrestricted_qx4().with_noise(noisy).with_duration_scale(20.0);
        let truth = execute_exact(&c, &backend).unwrap().final_state.unwrap();
        let dataset = ideal_dataset(&truth);
        let rho = reconstruct_from_dataset(&dataset).unwrap();
        prop_assert!(rho.matrix.max_abs_diff(truth.matrix()) <= 1e-9);
        assert_abs_diff_eq!(rho.matrix.trace().re, 1.0, epsilon = 1e-9);
        prop_assert!(rho.matrix.hermiticity_error() <= 1e-9);
        for p in PauliString::all(c.qubit_count()) {
            let v = estimate_pauli(&dataset, &p).unwrap();
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn backend_readout_matches_ideal_rotation_when_noiseless(c in circuit(3)) {
        let backend = unrestricted_qx4().with_noise(false);
        let truth = execute_exact(&c, &backend).unwrap().final_state.unwrap();
        let ideal = ideal_dataset(&truth);
        for rec in ideal.records() {
            let r = execute_exact(&append_setting(&c, &rec.setting).unwrap(), &backend).unwrap();
            let got = r.probabilities.unwrap();
            if let Outcomes::Exact(want) = &rec.outcomes {
                for (k, &p) in want {
                    prop_assert!((got.get(k).copied().unwrap_or(0.0) - p).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn sampled_expectations_are_bounded(c in circuit(2), seed in any::<u64>()) {
        let backend = unrestricted_qx4();
        let n = c.qubit_count();
        let records = qst_settings(n)
            .unwrap()
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                let r = qptkit::backend::execute(&append_setting(&c, &s).unwrap(), &backend, 257, seed ^ i as u64).unwrap();
                SettingRecord { setting: s, outcomes: Outcomes::Counts { shots: 257, counts: r.counts.unwrap() } }
            })
            .collect();
        let dataset = TomographyDataset::new(n, records).unwrap();
        let rho = reconstruct_from_dataset(&dataset).unwrap();
        assert_abs_diff_eq!(rho.matrix.trace().re, 1.0, epsilon = 1e-9);
        for p in PauliString::all(n) {
            let v = estimate_pauli(&dataset, &p).unwrap();
            prop_assert!((-1.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn argmax_matches_theory_for_every_gate() {
    let backend = BackendModel::qx4().with_noise(false);
    for g in GateLabel::SINGLE_QUBIT {
        let r = run_qpt(g, &[1], &backend, Shots::Exact, 0).unwrap();
        let th = theoretical_chi_for(g, &fixed_operator_set(1).unwrap()).unwrap();
        let (m, n) = r.chi.argmax();
        let best = th.matrix.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!((th.get(m, n).norm() - best).abs() < 1e-9, "{g}");
    }
    let r = run_qpt(GateLabel::CX, &[2, 1], &backend, Shots::Exact, 0).unwrap();
    let th = theoretical_chi_for(GateLabel::CX, &fixed_operator_set(2).unwrap()).unwrap();
    let (m, n) = r.chi.argmax();
    assert!((th.get(m, n).norm() - th.get(th.argmax().0, th.argmax().1).norm()).abs() < 1e-9);
}

#[test]
fn lambda_rows_preserve_trace_under_noise() {
    let backend = BackendModel::qx4();
    let exec = qptkit::qpt::BackendProcess::new(GateLabel::T, &[3], &backend, Shots::Exact, 0).unwrap();
    let run = qptkit::qpt::tomograph_process(&exec).unwrap();
    for j in [0, 3] {
        assert_abs_diff_eq!(run.lambda.row_trace(j).re, 1.0, epsilon = 1e-9);
    }
    for j in [1, 2] {
        assert!(run.lambda.row_trace(j).norm() < 1e-9);
    }
}

// Copyright 2026 The qptkit Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance criteria. Runs as a plain binary so that every criterion
//! reports one PASS/FAIL line; exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qptkit::algebra::{c64, standard_gate, ComplexMatrix, GateLabel, I, ONE};
use qptkit::backend::BackendModel;
use qptkit::circuit::Circuit;
use qptkit::noise::{amplitude_damping_gamma, compose, phase_flip, KrausChannel};
use qptkit::qasm::{emit_qasm, parse_qasm};
use qptkit::qpt::{
    chi_to_channel, fixed_operator_set, preparation_recipes, process_fidelity, run_qpt, theoretical_chi_for,
    tomograph_process, BetaTensor, ChannelProcess, ChiMatrix, FixedOperatorSet, InputBasis, QptContext, QptResult,
    Shots,
};

type Outcome = Result<String, String>;

/// Exact-mode statistics gathered across criteria for the global checks.
#[derive(Default)]
struct ExactLog {
    worst_residual: f64,
    worst_trace: f64,
    runs: usize,
}

impl ExactLog {
    fn record(&mut self, residual: f64, chi: &ChiMatrix, ops: &FixedOperatorSet) {
        self.worst_residual = self.worst_residual.max(residual);
        self.worst_trace = self.worst_trace.max(trace_certificate(chi, ops));
        self.runs += 1;
    }

    fn record_result(&mut self, r: &QptResult) {
        let ops = fixed_operator_set(r.chi.qubit_count()).unwrap();
        self.record(r.residual, &r.chi, &ops);
    }
}

/// `max |Σₘₙ χₘₙ Ẽₙ†Ẽₘ − I|`, computed from plain matrix products.
fn trace_certificate(chi: &ChiMatrix, ops: &FixedOperatorSet) -> f64 {
    let d = ops.dim();
    let mut sum = ComplexMatrix::zeros(d, d);
    for (m, em) in ops.operators().iter().enumerate() {
        for (n, en) in ops.operators().iter().enumerate() {
            sum = &sum + &(&en.dagger() * em).scale(chi.get(m, n));
        }
    }
    sum.max_abs_diff(&ComplexMatrix::identity(d))
}

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn noiseless_sweep(log: &mut ExactLog) -> Outcome {
    let backend = BackendModel::qx4().with_noise(false);
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for gate in GateLabel::SINGLE_QUBIT {
        for line in 0..5 {
            let r = run_qpt(gate, &[line], &backend, Shots::Exact, 0).map_err(|e| e.to_string())?;
            worst = worst.min(r.fidelity);
            log.record_result(&r);
            count += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        count == 45 && worst >= 1.0 - 1e-6 && secs < 5.0,
        format!("{count} runs, min fidelity {worst:.12}, {secs:.2} s"),
    )
}

fn noiseless_cx(log: &mut ExactLog) -> Outcome {
    let backend = BackendModel::qx4().with_noise(false);
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    let mut executions = Vec::new();
    for lines in [[1, 0], [2, 0], [3, 2]] {
        let r = run_qpt(GateLabel::CX, &lines, &backend, Shots::Exact, 0).map_err(|e| e.to_string())?;
        worst = worst.min(r.fidelity);
        executions.push(r.executions);
        log.record_result(&r);
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst >= 1.0 - 1e-6 && secs < 30.0 && executions.iter().all(|&e| e == 16 * 9),
        format!("min fidelity {worst:.12}, executions {executions:?}, {secs:.2} s"),
    )
}

fn rz(theta: f64) -> ComplexMatrix {
    ComplexMatrix::diagonal(&[
        Complex64::from_polar(1.0, -theta / 2.0),
        Complex64::from_polar(1.0, theta / 2.0),
    ])
}

fn ry(theta: f64) -> ComplexMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    ComplexMatrix::from_real_rows(&[[c, -s], [s, c]])
}

fn random_unitary_1q(rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let (a, b, c) = (
        rng.random::<f64>() * 2.0 * PI,
        rng.random::<f64>() * PI,
        rng.random::<f64>() * 2.0 * PI,
    );
    &(&rz(a) * &ry(b)) * &rz(c)
}

fn random_noise_1q(rng: &mut ChaCha8Rng) -> KrausChannel {
    let gamma = rng.random::<f64>() * 0.5;
    let p = rng.random::<f64>() * 0.5;
    compose(&amplitude_damping_gamma(gamma), &phase_flip(p)).unwrap()
}

fn kron_channels(a: &KrausChannel, b: &KrausChannel) -> KrausChannel {
    let ops = a
        .operators()
        .iter()
        .flat_map(|x| b.operators().iter().map(move |y| x.kron(y)))
        .collect();
    KrausChannel::new(ops).unwrap()
}

/// `Σₖ Kₖ M Kₖ†` by explicit products.
fn kraus_sum(ops: &[ComplexMatrix], m: &ComplexMatrix) -> ComplexMatrix {
    ops.iter().fold(ComplexMatrix::zeros(m.rows(), m.cols()), |acc, k| {
        &acc + &(&(k * m) * &k.dagger())
    })
}

fn oracle_error(channel: &KrausChannel, log: &mut ExactLog) -> Result<f64, String> {
    let n = channel.qubit_count();
    let ops = fixed_operator_set(n).unwrap();
    let run = tomograph_process(&ChannelProcess::new(channel.clone()).unwrap()).map_err(|e| e.to_string())?;
    log.record(run.residual, &run.chi, &ops);
    let rebuilt = chi_to_channel(&run.chi, &ops).unwrap();
    let mut worst = 0.0f64;
    for rho in InputBasis::new(n).unwrap().elements() {
        let a = rebuilt.apply_operator(&rho).unwrap();
        let b = kraus_sum(channel.operators(), &rho);
        worst = worst.max(a.max_abs_diff(&b));
    }
    Ok(worst)
}

fn oracle_equivalence(log: &mut ExactLog) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let mut worst1 = 0.0f64;
    for _ in 0..50 {
        let u = KrausChannel::new(vec![random_unitary_1q(&mut rng)]).unwrap();
        let c = compose(&u, &random_noise_1q(&mut rng)).unwrap();
        worst1 = worst1.max(oracle_error(&c, log)?);
    }
    let cx = standard_gate(GateLabel::CX);
    let mut worst2 = 0.0f64;
    for _ in 0..10 {
        let before = random_unitary_1q(&mut rng).kron(&random_unitary_1q(&mut rng));
        let after = random_unitary_1q(&mut rng).kron(&random_unitary_1q(&mut rng));
        let u = &(&after * &cx) * &before;
        let noise = kron_channels(&random_noise_1q(&mut rng), &random_noise_1q(&mut rng));
        let c = compose(&KrausChannel::new(vec![u]).unwrap(), &noise).unwrap();
        worst2 = worst2.max(oracle_error(&c, log)?);
    }
    check(
        worst1 <= 1e-8 && worst2 <= 1e-7,
        format!("50 one-qubit channels max error {worst1:.2e}, 10 two-qubit channels max error {worst2:.2e}"),
    )
}

/// State prepared by running the recipe's gates on `|0⟩`, built from the
/// gate matrices rather than the library's state table.
fn prepared_by_gates(gates: &[GateLabel]) -> ComplexMatrix {
    let u = gates
        .iter()
        .fold(ComplexMatrix::identity(2), |u, g| &standard_gate(*g) * &u);
    let ket = [u[(0, 0)], u[(1, 0)]];
    ComplexMatrix::outer(&ket, &ket)
}

fn recipe_identities() -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in 1..=2 {
        let d = 1usize << n;
        for r in preparation_recipes(n).map_err(|e| e.to_string())? {
            let mut acc = ComplexMatrix::zeros(d, d);
            for (w, prep) in r.terms() {
                let rho = prep
                    .iter()
                    .fold(ComplexMatrix::identity(1), |a, s| a.kron(&prepared_by_gates(s.gates())));
                acc = &acc + &rho.scale(*w);
            }
            let target = ComplexMatrix::unit(d, r.target() / d, r.target() % d);
            worst = worst.max(acc.max_abs_diff(&target));
            count += 1;
        }
    }
    check(
        count == 20 && worst <= 1e-12,
        format!("{count} recipes, max error {worst:.2e}"),
    )
}

fn residual_and_condition(log: &ExactLog) -> Outcome {
    let conds: Vec<f64> = [1, 2]
        .iter()
        .map(|&n| QptContext::get(n).map(|ctx| ctx.beta.condition_number()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let passes = [1, 2]
        .iter()
        .all(|&n| QptContext::get(n).is_ok_and(|ctx| BetaTensor::check_condition(&ctx.beta).is_ok()));
    check(
        log.worst_residual <= 1e-10 && passes,
        format!(
            "max residual {:.2e} over {} exact runs, condition numbers n=1 {:.1}, n=2 {:.1}",
            log.worst_residual, log.runs, conds[0], conds[1]
        ),
    )
}

fn shot_noise() -> Outcome {
    let backend = BackendModel::qx4().with_noise(false);
    let fids: Vec<f64> = (0..20u64)
        .map(|seed| run_qpt(GateLabel::H, &[0], &backend, Shots::Sampled(8192), seed).map(|r| r.fidelity))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mean = fids.iter().sum::<f64>() / fids.len() as f64;
    let min = fids.iter().copied().fold(f64::INFINITY, f64::min);
    let a = run_qpt(GateLabel::H, &[0], &backend, Shots::Sampled(8192), 3).unwrap();
    let b = run_qpt(GateLabel::H, &[0], &backend, Shots::Sampled(8192), 3).unwrap();
    let deterministic = a == b && a.fidelity == fids[3];
    check(
        mean >= 0.98 && min >= 0.95 && deterministic,
        format!("mean {mean:.5}, min {min:.5}, deterministic {deterministic}"),
    )
}

fn noise_monotonicity(log: &mut ExactLog) -> Outcome {
    let base = BackendModel::qx4();
    let mut items: Vec<(GateLabel, Vec<usize>)> = Vec::new();
    for g in GateLabel::SINGLE_QUBIT {
        for line in 0..5 {
            items.push((g, vec![line]));
        }
    }
    for lines in [vec![1, 0], vec![2, 0], vec![3, 2]] {
        items.push((GateLabel::CX, lines));
    }
    let mut failures = Vec::new();
    let mut lowest = f64::INFINITY;
    for (g, lines) in &items {
        let mut f = [0.0; 3];
        for (i, scale) in [1.0, 2.0, 4.0].into_iter().enumerate() {
            let b = base.clone().with_duration_scale(scale);
            let r = run_qpt(*g, lines, &b, Shots::Exact, 0).map_err(|e| e.to_string())?;
            log.record_result(&r);
            f[i] = r.fidelity;
        }
        lowest = lowest.min(f[2]);
        if !(f[0] < 1.0 && f[1] < f[0] && f[2] < f[1]) {
            failures.push(format!("{g}{lines:?}: {f:?}"));
        }
    }
    check(
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "{} placements strictly decreasing at 1x/2x/4x, lowest 4x fidelity {lowest:.4}",
                items.len()
            )
        } else {
            failures.join("; ")
        },
    )
}

fn trace_preservation(log: &ExactLog) -> Outcome {
    check(
        log.worst_trace <= 1e-8,
        format!("max deviation {:.2e} over {} exact runs", log.worst_trace, log.runs),
    )
}

fn theoretical_spot_checks() -> Outcome {
    let ops = fixed_operator_set(1).unwrap();
    let chi = |g| theoretical_chi_for(g, &ops).unwrap();
    let mut expect_h = ComplexMatrix::zeros(4, 4);
    for (m, n) in [(1, 1), (1, 3), (3, 1), (3, 3)] {
        expect_h[(m, n)] = c64(0.5, 0.0);
    }
    let mut expect_s = ComplexMatrix::zeros(4, 4);
    expect_s[(0, 0)] = c64(0.5, 0.0);
    expect_s[(3, 3)] = c64(0.5, 0.0);
    expect_s[(0, 3)] = I * 0.5;
    expect_s[(3, 0)] = -I * 0.5;
    let mut expect_x = ComplexMatrix::zeros(4, 4);
    expect_x[(1, 1)] = ONE;
    let errs = [
        chi(GateLabel::H).matrix.max_abs_diff(&expect_h),
        chi(GateLabel::S).matrix.max_abs_diff(&expect_s),
        chi(GateLabel::X).matrix.max_abs_diff(&expect_x),
    ];
    check(
        errs.iter().all(|&e| e <= 1e-12),
        format!("H {:.1e}, S {:.1e}, X {:.1e}", errs[0], errs[1], errs[2]),
    )
}

fn fidelity_unit_checks() -> Outcome {
    let ops = fixed_operator_set(1).unwrap();
    let chi = |g| theoretical_chi_for(g, &ops).unwrap();
    let self_f = process_fidelity(&chi(GateLabel::T), &chi(GateLabel::T)).unwrap();
    let xi = process_fidelity(&chi(GateLabel::X), &chi(GateLabel::I)).unwrap();
    let hx = process_fidelity(&chi(GateLabel::H), &chi(GateLabel::X)).unwrap();
    let mut arbitrary = ComplexMatrix::zeros(4, 4);
    arbitrary[(0, 2)] = c64(0.3, -1.2);
    arbitrary[(3, 1)] = c64(2.0, 0.1);
    let arb = ChiMatrix::new(arbitrary);
    let arb_f = process_fidelity(&arb, &arb).unwrap();
    check(
        (self_f - 1.0).abs() <= 1e-12 && (arb_f - 1.0).abs() <= 1e-12 && xi.abs() <= 1e-12 && (hx - 0.5).abs() <= 1e-12,
        format!("F(T,T)={self_f}, F(a,a)={arb_f}, F(X,I)={xi}, F(H,X)={hx}"),
    )
}

fn random_circuit(rng: &mut ChaCha8Rng) -> Circuit {
    let n = rng.random_range(1..=5usize);
    let m = rng.random_range(0..=n);
    let mut c = Circuit::new(n, m).unwrap();
    let len = rng.random_range(0..25);
    for _ in 0..len {
        let label = GateLabel::ALL[rng.random_range(0..GateLabel::ALL.len())];
        if label.arity() == 2 {
            if n < 2 {
                continue;
            }
            let a = rng.random_range(0..n);
            let b = (a + rng.random_range(1..n)) % n;
            c.gate(label, &[a, b]).unwrap();
        } else {
            c.gate(label, &[rng.random_range(0..n)]).unwrap();
        }
    }
    let mut qubits: Vec<usize> = (0..n).collect();
    for clbit in 0..m {
        let pick = rng.random_range(0..qubits.len());
        c.measure(qubits.swap_remove(pick), clbit).unwrap();
    }
    c
}

fn parser_corpus() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = 0;
    let mut nonempty = 0;
    for _ in 0..100 {
        let c = random_circuit(&mut rng);
        nonempty += usize::from(!c.is_empty());
        let text = emit_qasm(&c);
        match parse_qasm(&text) {
            Ok(p) if p == c && parse_qasm(&emit_qasm(&p)).as_ref() == Ok(&p) => {}
            _ => mismatches += 1,
        }
    }
    let fixtures = [
        ("unknown_gate", include_str!("fixtures/unknown_gate.qasm"), (5, 1)),
        (
            "missing_semicolon",
            include_str!("fixtures/missing_semicolon.qasm"),
            (6, 1),
        ),
        (
            "qubit_out_of_range",
            include_str!("fixtures/qubit_out_of_range.qasm"),
            (5, 9),
        ),
    ];
    let mut fixture_notes = Vec::new();
    let mut fixtures_ok = true;
    for (name, text, (line, col)) in fixtures {
        match parse_qasm(text) {
            Err(e) => {
                let shown = e.to_string();
                let ok = e.line == line && e.col == col && shown.starts_with(&format!("line {line}, column {col}:"));
                fixtures_ok &= ok;
                fixture_notes.push(format!("{name}: {shown}"));
            }
            Ok(_) => {
                fixtures_ok = false;
                fixture_notes.push(format!("{name}: parsed"));
            }
        }
    }
    check(
        mismatches == 0 && nonempty > 90 && fixtures_ok,
        format!("100 round-trips, {mismatches} mismatches; {}", fixture_notes.join("; ")),
    )
}

fn main() {
    // Warm the shared tomography tables so timing criteria measure runs only.
    QptContext::get(1).unwrap();
    QptContext::get(2).unwrap();

    let mut log = ExactLog::default();
    let results: Vec<(&str, Outcome)> = vec![
        ("noiseless single-qubit sweep", noiseless_sweep(&mut log)),
        ("noiseless two-qubit cx", noiseless_cx(&mut log)),
        ("oracle equivalence", oracle_equivalence(&mut log)),
        ("recipe identities", recipe_identities()),
        ("noise monotonicity", noise_monotonicity(&mut log)),
        ("linear-system residual and conditioning", residual_and_condition(&log)),
        ("shot-noise fidelity", shot_noise()),
        ("trace-preservation certificate", trace_preservation(&log)),
        ("theoretical chi spot checks", theoretical_spot_checks()),
        ("fidelity unit checks", fidelity_unit_checks()),
        ("parser corpus", parser_corpus()),
    ];

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

// Copyright 2026 The qptkit Authors
// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use qptkit::algebra::{c64, ComplexMatrix, GateLabel};
use qptkit::qpt::Shots;
use qptkit_cli::commands::{
    cmd_chi_plot, cmd_chi_plot_gate, cmd_qpt, cmd_qst, cmd_table, resolve_backend, ExperimentPlan, QstRequest,
};
use qptkit_cli::report::{ChiReport, StateReport};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qptkit"))
}

fn plan(gates: &[GateLabel], lines: &[&[usize]], noiseless: bool, shots: Shots, out: &Path) -> ExperimentPlan {
    ExperimentPlan {
        gates: gates.to_vec(),
        lines: lines.iter().map(|l| l.to_vec()).collect(),
        all_lines: false,
        backend: resolve_backend("qx4", noiseless).unwrap(),
        shots,
        seed: 7,
        seeds: None,
        project_psd: false,
        out: out.to_path_buf(),
    }
}

fn read_report(path: &Path) -> ChiReport {
    ChiReport::parse(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_circuit(dir: &Path, name: &str, body: &str, qubits: usize) -> PathBuf {
    let p = dir.join(name);
    fs::write(
        &p,
        format!("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[{qubits}];\n{body}"),
    )
    .unwrap();
    p
}

#[test]
fn noiseless_sweep_writes_45_perfect_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = plan(&GateLabel::SINGLE_QUBIT, &[], true, Shots::Exact, dir.path());
    p.all_lines = true;
    let outcomes = cmd_qpt(&p).unwrap();
    assert_eq!(outcomes.len(), 45);
    for o in &outcomes {
        let r = read_report(o.result.as_ref().unwrap());
        assert!(r.fidelity >= 1.0 - 1e-6);
        assert_eq!(r.executions, 12);
    }
    let table = cmd_table(dir.path()).unwrap();
    assert_eq!((table.gates.len(), table.columns.len()), (9, 5));
    let csv = table.to_csv();
    assert_eq!(csv.lines().count(), 10);
    for line in csv.lines().skip(1) {
        assert!(line.split(',').skip(1).all(|c| c == "1.0000"), "{line}");
    }
    assert!(csv.starts_with("gate,q[0],q[1],q[2],q[3],q[4]\nid,"));
}

#[test]
fn cx_plan_reports_topology_error_per_item() {
    let dir = tempfile::tempdir().unwrap();
    let p = plan(
        &[GateLabel::CX],
        &[&[1, 0], &[2, 0], &[0, 1], &[3, 2]],
        true,
        Shots::Exact,
        dir.path(),
    );
    let outcomes = cmd_qpt(&p).unwrap();
    let ok: Vec<bool> = outcomes.iter().map(|o| o.result.is_ok()).collect();
    assert_eq!(ok, [true, true, false, true]);
    let err = format!("{:#}", outcomes[2].result.as_ref().unwrap_err());
    assert!(err.contains("coupling map"), "{err}");
    for o in outcomes.iter().filter(|o| o.result.is_ok()) {
        let r = read_report(o.result.as_ref().unwrap());
        assert_eq!(r.executions, 144);
        assert!(r.fidelity >= 1.0 - 1e-6);
        assert_eq!(r.ordering.operators.len(), 16);
    }
}

#[test]
fn binary_exit_status_and_byte_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str, extra: &[&str]| {
        let mut cmd = bin();
        cmd.args([
            "qpt",
            "--gate",
            "h",
            "--lines",
            "0",
            "--backend",
            "qx4",
            "--shots",
            "2048",
            "--seed",
            "11",
        ])
        .args(extra)
        .arg("--out")
        .arg(dir.path().join(out));
        cmd.output().unwrap()
    };
    let a = run("a", &[]);
    let b = run("b", &[]);
    assert!(a.status.success() && b.status.success());
    let fa = fs::read(dir.path().join("a/h_q0.json")).unwrap();
    let fb = fs::read(dir.path().join("b/h_q0.json")).unwrap();
    assert_eq!(fa, fb);
    let r = read_report(&dir.path().join("a/h_q0.json"));
    assert_eq!(r.shots, Some(2048));
    assert_eq!(r.total_shots, Some(12 * 2048));

    let bad = bin()
        .args([
            "qpt", "--gate", "cx", "--lines", "1,0", "--lines", "0,1", "--exact", "--out",
        ])
        .arg(dir.path().join("c"))
        .output()
        .unwrap();
    assert!(!bad.status.success());
    let stderr = String::from_utf8_lossy(&bad.stderr);
    assert!(stderr.contains("error cx q[0],q[1]"), "{stderr}");
    assert!(dir.path().join("c/cx_q1-0.json").exists());
}

#[test]
fn seeds_summary_and_psd_projection() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = plan(&[GateLabel::H], &[&[0]], true, Shots::Sampled(8192), dir.path());
    p.seeds = Some(4);
    p.project_psd = true;
    cmd_qpt(&p).unwrap();
    let summary = fs::read_to_string(dir.path().join("seeds_summary.csv")).unwrap();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..3], ["h", "h_q0", "4"]);
    let mean: f64 = row[3].parse().unwrap();
    assert!(mean >= 0.98);
    let r = read_report(&dir.path().join("h_q0.json"));
    assert!(r.psd_projected);
    assert!(r.chi().unwrap().matrix.hermitian_eigenvalues()[0] >= -1e-9);
}

#[test]
fn tampered_report_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let p = plan(&[GateLabel::T], &[&[2]], false, Shots::Exact, dir.path());
    let path = cmd_qpt(&p).unwrap().remove(0).result.unwrap();
    let mut r = read_report(&path);
    let good = r.to_json();
    assert_eq!(ChiReport::parse(&good).unwrap(), r);
    r.fidelity += 0.01;
    assert!(ChiReport::parse(&r.to_json()).is_err());
    let mut r = ChiReport::parse(&good).unwrap();
    r.executions = 13;
    assert!(ChiReport::parse(&r.to_json()).is_err());
    assert!(ChiReport::parse(&good.replace("\"format\": 1", "\"format\": 2")).is_err());
}

#[test]
fn single_report_table_is_one_by_one() {
    let dir = tempfile::tempdir().unwrap();
    cmd_qpt(&plan(&[GateLabel::H], &[&[2]], false, Shots::Exact, dir.path())).unwrap();
    let t = cmd_table(dir.path()).unwrap();
    assert_eq!((t.gates.len(), t.columns.len()), (1, 1));
    let text = t.to_text();
    assert_eq!(text.lines().count(), 2);
    let f: f64 = text
        .lines()
        .nth(1)
        .unwrap()
        .split_whitespace()
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(f <= 1.0 && f > 0.9);
    fs::write(dir.path().join("junk.json"), "{}").unwrap();
    assert!(cmd_table(dir.path()).is_err());
}

fn grid(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn chi_plot_grids() {
    let dir = tempfile::tempdir().unwrap();
    let path = cmd_qpt(&plan(&[GateLabel::I], &[&[0]], true, Shots::Exact, dir.path()))
        .unwrap()
        .remove(0)
        .result
        .unwrap();
    let files = cmd_chi_plot(&path, &dir.path().join("plots"), false).unwrap();
    let re = grid(&files[0]);
    let im = grid(&files[1]);
    assert_eq!(re[0], ["m\\n", "I", "X", "-iY", "Z"]);
    for (r, row) in re.iter().enumerate().skip(1) {
        for (c, v) in row.iter().enumerate().skip(1) {
            let want = if (r, c) == (1, 1) { "1.000000" } else { "0.000000" };
            assert_eq!(v, want);
        }
    }
    assert!(im.iter().skip(1).all(|row| row.iter().skip(1).all(|v| v == "0.000000")));

    let h = cmd_chi_plot_gate(GateLabel::H, &dir.path().join("plots")).unwrap();
    let halves = grid(&h[0]).iter().flatten().filter(|v| *v == "0.500000").count();
    assert_eq!(halves, 4);
    let s = cmd_chi_plot_gate(GateLabel::S, &dir.path().join("plots")).unwrap();
    let im = grid(&s[1]);
    assert_eq!(im[1][4], "0.500000");
    assert_eq!(im[4][1], "-0.500000");
}

#[test]
fn qst_reports() {
    let dir = tempfile::tempdir().unwrap();
    let h = write_circuit(dir.path(), "h.qasm", "h q[0];\n", 1);
    let req = |shots, out: &str, noiseless| QstRequest {
        circuit: h.clone(),
        backend: resolve_backend("qx4", noiseless).unwrap(),
        shots,
        seed: 5,
        out: dir.path().join(out),
        dataset_in: None,
        project_psd: false,
    };
    let (_, _, exact) = cmd_qst(&req(Shots::Exact, "exact", true)).unwrap();
    let plus = ComplexMatrix::from_rows(&[[c64(0.5, 0.0), c64(0.5, 0.0)], [c64(0.5, 0.0), c64(0.5, 0.0)]]);
    assert!(exact.rho().unwrap().max_abs_diff(&plus) <= 1e-9);
    assert!((exact.fidelity - 1.0).abs() < 1e-9);

    let (d1, r1, sampled) = cmd_qst(&req(Shots::Sampled(8192), "s1", false)).unwrap();
    let (_, r2, _) = cmd_qst(&req(Shots::Sampled(8192), "s2", false)).unwrap();
    assert_eq!(fs::read(&r1).unwrap(), fs::read(&r2).unwrap());
    assert!(sampled.fidelity >= 0.99, "{}", sampled.fidelity);
    assert_eq!(sampled.settings, 3);

    let mut again = req(Shots::Exact, "reload", false);
    again.dataset_in = Some(d1);
    let (_, _, reloaded) = cmd_qst(&again).unwrap();
    assert_eq!(reloaded.rho_re, sampled.rho_re);
    assert_eq!(reloaded.shots, Some(8192));

    let empty = write_circuit(dir.path(), "empty.qasm", "", 2);
    let mut e = req(Shots::Exact, "empty", true);
    e.circuit = empty;
    let (_, rpath, rep) = cmd_qst(&e).unwrap();
    assert!(rep.rho().unwrap().max_abs_diff(&ComplexMatrix::unit(4, 0, 0)) <= 1e-9);
    StateReport::parse(&fs::read_to_string(rpath).unwrap()).unwrap();

    let measured = write_circuit(dir.path(), "m.qasm", "creg c[1];\nmeasure q[0] -> c[0];\n", 1);
    let mut m = req(Shots::Exact, "m", false);
    m.circuit = measured;
    assert!(cmd_qst(&m).is_err());
}

#[test]
fn qst_binary_reports_parse_errors_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_circuit(dir.path(), "bad.qasm", "h q[0];\nfoo q[0];\n", 1);
    let out = bin()
        .arg("qst")
        .arg(&bad)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 5, column 1"), "{stderr}");
}

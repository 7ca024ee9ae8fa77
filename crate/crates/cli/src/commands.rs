// Copyright 2026 The qptkit Authors
// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use qptkit::algebra::{ComplexMatrix, GateLabel};
use qptkit::backend::{execute, execute_exact, load_backend, BackendModel, QX2_CONFIG, QX4_CONFIG};
use qptkit::qasm::parse_qasm;
use qptkit::qpt::{execution_seed, fixed_operator_set, run_qpt, theoretical_chi_for, BackendProcess, ChiMatrix, Shots};
use qptkit::qst::{
    append_setting, parse_dataset, qst_settings, reconstruct_from_dataset, state_fidelity, write_dataset, Outcomes,
    SettingRecord, TomographyDataset,
};

use crate::report::{file_stem, ChiReport, StateReport};

/// `qx4` and `qx2` name the bundled configs; anything else is a file path.
pub fn resolve_backend(spec: &str, noiseless: bool) -> Result<BackendModel> {
    let text = match spec {
        "qx4" => QX4_CONFIG.to_string(),
        "qx2" => QX2_CONFIG.to_string(),
        path => fs::read_to_string(path).with_context(|| format!("reading backend config {path}"))?,
    };
    let b = load_backend(&text).with_context(|| format!("backend config {spec}"))?;
    Ok(if noiseless { b.with_noise(false) } else { b })
}

/// Parses `2` or `3,2` (control first).
pub fn parse_lines(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .with_context(|| format!("bad qubit line `{p}` in `{s}`"))
        })
        .collect()
}

/// One QPT batch.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub gates: Vec<GateLabel>,
    /// Explicit placements; ignored for gates covered by `all_lines`.
    pub lines: Vec<Vec<usize>>,
    pub all_lines: bool,
    pub backend: BackendModel,
    pub shots: Shots,
    pub seed: u64,
    /// Extra seeds for the fidelity summary (`seed..seed+seeds`).
    pub seeds: Option<u64>,
    pub project_psd: bool,
    pub out: PathBuf,
}

impl ExperimentPlan {
    /// Every (gate, lines) pair, in plan order.
    pub fn items(&self) -> Vec<(GateLabel, Vec<usize>)> {
        let mut items = Vec::new();
        let qubits = self.backend.qubit_params().len();
        for &g in &self.gates {
            if self.all_lines {
                if g.arity() == 1 {
                    items.extend((0..qubits).map(|q| (g, vec![q])));
                } else {
                    match self.backend.coupling() {
                        Some(map) => items.extend(map.pairs().map(|(c, t)| (g, vec![c, t]))),
                        None => {
                            for c in 0..qubits {
                                items.extend((0..qubits).filter(|&t| t != c).map(|t| (g, vec![c, t])));
                            }
                        }
                    }
                }
            } else {
                items.extend(self.lines.iter().map(|l| (g, l.clone())));
            }
        }
        items
    }
}

/// Outcome of one plan item.
#[derive(Debug)]
pub struct ItemOutcome {
    pub gate: GateLabel,
    pub lines: Vec<usize>,
    pub result: Result<PathBuf>,
}

fn describe(gate: GateLabel, lines: &[usize]) -> String {
    let q: Vec<String> = lines.iter().map(|l| format!("q[{l}]")).collect();
    format!("{} {}", gate.qasm_name(), q.join(","))
}

fn write_checked(path: &Path, text: &str, check: impl Fn(&str) -> Result<()>) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    let back = fs::read_to_string(path)?;
    check(&back).with_context(|| format!("re-validating {}", path.display()))
}

/// Validates every item up front, then runs the valid ones and writes one
/// report each. Returns per-item outcomes in plan order.
pub fn cmd_qpt(plan: &ExperimentPlan) -> Result<Vec<ItemOutcome>> {
    fs::create_dir_all(&plan.out).with_context(|| format!("creating {}", plan.out.display()))?;
    let items = plan.items();
    if items.is_empty() {
        bail!("the plan contains no (gate, lines) items");
    }
    let checked: Vec<_> = items
        .into_iter()
        .map(|(g, l)| {
            let ok = BackendProcess::new(g, &l, &plan.backend, plan.shots, plan.seed).map(|_| ());
            (g, l, ok)
        })
        .collect();

    let mut outcomes = Vec::new();
    let mut summary = String::new();
    for (gate, lines, ok) in checked {
        let result = ok.map_err(anyhow::Error::from).and_then(|()| {
            let r = run_qpt(gate, &lines, &plan.backend, plan.shots, plan.seed)?;
            let report = ChiReport::from_result(&r, plan.seed, plan.project_psd)?;
            let path = plan.out.join(format!("{}.json", report.file_stem()));
            write_checked(&path, &report.to_json(), |t| ChiReport::parse(t).map(|_| ()))?;
            if let Some(n) = plan.seeds.filter(|&n| n > 0) {
                let mut fids = Vec::new();
                for s in plan.seed..plan.seed + n {
                    let r = run_qpt(gate, &lines, &plan.backend, plan.shots, s)?;
                    let f = if plan.project_psd {
                        ChiReport::from_result(&r, s, true)?.fidelity
                    } else {
                        r.fidelity
                    };
                    fids.push(f);
                }
                let mean = fids.iter().sum::<f64>() / n as f64;
                let min = fids.iter().copied().fold(f64::INFINITY, f64::min);
                let max = fids.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                writeln!(
                    summary,
                    "{},{},{n},{mean:.6},{min:.6},{max:.6}",
                    gate.qasm_name(),
                    file_stem(gate.qasm_name(), &lines)
                )
                .unwrap();
            }
            Ok(path)
        });
        outcomes.push(ItemOutcome { gate, lines, result });
    }
    if !summary.is_empty() {
        let text = format!("gate,item,seeds,mean,min,max\n{summary}");
        fs::write(plan.out.join("seeds_summary.csv"), text)?;
    }
    Ok(outcomes)
}

/// One-line status for an item.
pub fn outcome_line(o: &ItemOutcome) -> String {
    match &o.result {
        Ok(path) => format!("ok    {} -> {}", describe(o.gate, &o.lines), path.display()),
        Err(e) => format!("error {}: {e:#}", describe(o.gate, &o.lines)),
    }
}

fn column_label(lines: &[usize]) -> String {
    match lines {
        [q] => format!("q[{q}]"),
        [c, t] => format!("q[{c}]>q[{t}]"),
        _ => lines.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("-"),
    }
}

/// Fidelity grid with gates as rows and qubit lines as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityTable {
    pub gates: Vec<GateLabel>,
    pub columns: Vec<Vec<usize>>,
    pub cells: BTreeMap<(GateLabel, Vec<usize>), f64>,
}

impl FidelityTable {
    fn cell(&self, g: GateLabel, c: &[usize]) -> String {
        self.cells
            .get(&(g, c.to_vec()))
            .map_or_else(|| "-".to_string(), |f| format!("{f:.4}"))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("gate");
        for c in &self.columns {
            write!(s, ",{}", column_label(c)).unwrap();
        }
        s.push('\n');
        for &g in &self.gates {
            s.push_str(g.qasm_name());
            for c in &self.columns {
                write!(s, ",{}", self.cell(g, c)).unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn to_text(&self) -> String {
        let headers: Vec<String> = self.columns.iter().map(|c| column_label(c)).collect();
        let width = headers.iter().map(String::len).max().unwrap_or(0).max(6);
        let mut s = format!("{:<5}", "gate");
        for h in &headers {
            write!(s, "  {h:>width$}").unwrap();
        }
        s.push('\n');
        for &g in &self.gates {
            write!(s, "{:<5}", g.qasm_name()).unwrap();
            for c in &self.columns {
                write!(s, "  {:>width$}", self.cell(g, c)).unwrap();
            }
            s.push('\n');
        }
        s
    }
}

fn read_reports(dir: &Path) -> Result<Vec<(PathBuf, ChiReport)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = fs::read_to_string(&p)?;
            let r = ChiReport::parse(&text).with_context(|| format!("report {}", p.display()))?;
            Ok((p, r))
        })
        .collect()
}

pub fn cmd_table(dir: &Path) -> Result<FidelityTable> {
    let reports = read_reports(dir)?;
    if reports.is_empty() {
        bail!("no χ reports in {}", dir.display());
    }
    let mut cells = BTreeMap::new();
    for (path, r) in &reports {
        let key = (r.gate_label()?, r.lines.clone());
        if cells.insert(key, r.fidelity).is_some() {
            bail!(
                "{} duplicates an earlier report for {} on {:?}",
                path.display(),
                r.gate,
                r.lines
            );
        }
    }
    let mut gates: Vec<GateLabel> = cells.keys().map(|(g, _)| *g).collect();
    gates.sort_by_key(|g| GateLabel::ALL.iter().position(|x| x == g));
    gates.dedup();
    let mut columns: Vec<Vec<usize>> = cells.keys().map(|(_, l)| l.clone()).collect();
    columns.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    columns.dedup();
    Ok(FidelityTable { gates, columns, cells })
}

fn fmt_entry(x: f64) -> String {
    let s = format!("{x:.6}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0.000000".to_string()
    } else {
        s
    }
}

/// Real and imaginary grids as CSV with operator labels on both axes.
pub fn chi_grids(chi: &ChiMatrix, labels: &[String]) -> (String, String) {
    let grid = |f: fn(num_complex::Complex64) -> f64| {
        let mut s = String::from("m\\n");
        for l in labels {
            write!(s, ",{l}").unwrap();
        }
        s.push('\n');
        for (m, lm) in labels.iter().enumerate() {
            s.push_str(lm);
            for n in 0..labels.len() {
                write!(s, ",{}", fmt_entry(f(chi.get(m, n)))).unwrap();
            }
            s.push('\n');
        }
        s
    };
    (grid(|z| z.re), grid(|z| z.im))
}

/// Writes `<stem>_re.csv` and `<stem>_im.csv`; returns their paths.
pub fn write_grids(chi: &ChiMatrix, n: usize, out: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(out)?;
    let ops = fixed_operator_set(n)?;
    let (re, im) = chi_grids(chi, ops.labels());
    let (pr, pi) = (out.join(format!("{stem}_re.csv")), out.join(format!("{stem}_im.csv")));
    fs::write(&pr, re)?;
    fs::write(&pi, im)?;
    Ok((pr, pi))
}

/// Grid files for a report, plus its theoretical χ when `theory` is set.
pub fn cmd_chi_plot(report: &Path, out: &Path, theory: bool) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(report).with_context(|| format!("reading {}", report.display()))?;
    let r = ChiReport::parse(&text).with_context(|| format!("report {}", report.display()))?;
    let n = r.lines.len();
    let stem = r.file_stem();
    let (a, b) = write_grids(&r.chi()?, n, out, &stem)?;
    let mut written = vec![a, b];
    if theory {
        let th = theoretical_chi_for(r.gate_label()?, &fixed_operator_set(n)?)?;
        let (a, b) = write_grids(&th, n, out, &format!("{stem}_theory"))?;
        written.extend([a, b]);
    }
    Ok(written)
}

/// Theory-only grids for a gate.
pub fn cmd_chi_plot_gate(gate: GateLabel, out: &Path) -> Result<Vec<PathBuf>> {
    let n = gate.arity();
    let th = theoretical_chi_for(gate, &fixed_operator_set(n)?)?;
    let (a, b) = write_grids(&th, n, out, &format!("{}_theory", gate.qasm_name()))?;
    Ok(vec![a, b])
}

/// State tomography request.
#[derive(Debug, Clone)]
pub struct QstRequest {
    pub circuit: PathBuf,
    pub backend: BackendModel,
    pub shots: Shots,
    pub seed: u64,
    pub out: PathBuf,
    /// Reconstruct from this dataset instead of executing.
    pub dataset_in: Option<PathBuf>,
    pub project_psd: bool,
}

/// Runs all `3ⁿ` settings (or loads a dataset), reconstructs the state,
/// and writes `<stem>.dataset` and `<stem>_state.json`.
pub fn cmd_qst(req: &QstRequest) -> Result<(PathBuf, PathBuf, StateReport)> {
    let text = fs::read_to_string(&req.circuit).with_context(|| format!("reading {}", req.circuit.display()))?;
    let c = parse_qasm(&text).with_context(|| format!("parsing {}", req.circuit.display()))?;
    if c.has_measurements() {
        bail!("state-preparation circuit must not contain measurements");
    }
    let truth = execute_exact(&c, &req.backend)?
        .final_state
        .context("exact execution returns the final state")?;
    let n = c.qubit_count();
    let dataset = match &req.dataset_in {
        Some(p) => {
            let d = parse_dataset(&fs::read_to_string(p)?).with_context(|| format!("dataset {}", p.display()))?;
            if d.qubit_count() != n {
                bail!("dataset has {} qubits, circuit has {n}", d.qubit_count());
            }
            d
        }
        None => {
            let records = qst_settings(n)?
                .into_iter()
                .enumerate()
                .map(|(i, s)| {
                    let circuit = append_setting(&c, &s)?;
                    let outcomes = match req.shots {
                        Shots::Exact => {
                            Outcomes::Exact(execute_exact(&circuit, &req.backend)?.probabilities.unwrap_or_default())
                        }
                        Shots::Sampled(shots) => Outcomes::Counts {
                            shots,
                            counts: execute(&circuit, &req.backend, shots, execution_seed(req.seed, i))?
                                .counts
                                .unwrap_or_default(),
                        },
                    };
                    Ok(SettingRecord { setting: s, outcomes })
                })
                .collect::<Result<Vec<_>>>()?;
            TomographyDataset::new(n, records)?
        }
    };
    let rec = reconstruct_from_dataset(&dataset)?;
    let rho: ComplexMatrix = if req.project_psd {
        rec.project_psd().into_matrix()
    } else {
        rec.matrix.clone()
    };
    let fidelity = state_fidelity(&rho, &truth);
    let stem = req
        .circuit
        .file_stem()
        .map_or_else(|| "state".to_string(), |s| s.to_string_lossy().into_owned());
    let shots = match (&req.dataset_in, req.shots) {
        (Some(_), _) => dataset.records().first().and_then(|r| r.outcomes.shots()),
        (None, s) => s.count(),
    };
    let report = StateReport::new(
        &req.circuit
            .file_name()
            .map_or_else(String::new, |s| s.to_string_lossy().into_owned()),
        req.backend.name(),
        shots,
        req.seed,
        &rho,
        fidelity,
        req.project_psd,
    );
    fs::create_dir_all(&req.out)?;
    let dpath = req.out.join(format!("{stem}.dataset"));
    fs::write(&dpath, write_dataset(&dataset))?;
    let rpath = req.out.join(format!("{stem}_state.json"));
    write_checked(&rpath, &report.to_json(), |t| StateReport::parse(t).map(|_| ()))?;
    Ok((dpath, rpath, report))
}

// Copyright 2026 The qptkit Authors
// SPDX-License-Identifier: Apache-2.0

//! On-disk report formats. Both are JSON objects carrying `"format": 1`.

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use qptkit::algebra::{c64, ComplexMatrix, GateLabel};
use qptkit::qpt::{
    fixed_operator_set, process_fidelity, theoretical_chi_for, trace_preservation_deviation, ChiMatrix, QptContext,
    QptResult,
};

pub const FORMAT: u32 = 1;

/// How χ entries and vectors are laid out, recorded in every χ report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ordering {
    /// Operator labels; χ row `m` and column `n` follow this order.
    pub operators: Vec<String>,
    pub qubit_order: String,
    pub input_basis: String,
    pub vectorization: String,
}

impl Ordering {
    pub fn for_qubits(n: usize) -> Result<Self> {
        let ops = fixed_operator_set(n)?;
        Ok(Self {
            operators: ops.labels().to_vec(),
            qubit_order: "lines[0] is the most significant local qubit; labels list it leftmost".into(),
            input_basis: "rho_j = |a><b| with j = a*d + b".into(),
            vectorization: "lambda row-major over (j,k); vec(chi) row-major over (m,n)".into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiReport {
    pub format: u32,
    pub gate: String,
    pub lines: Vec<usize>,
    pub backend: String,
    /// Shots per circuit execution; `null` in exact mode.
    pub shots: Option<u64>,
    pub exact: bool,
    pub seed: u64,
    pub ordering: Ordering,
    /// Circuit executions: preparations × measurement settings.
    pub executions: usize,
    /// `executions × shots`; `null` in exact mode.
    pub total_shots: Option<u64>,
    pub residual: f64,
    pub fidelity: f64,
    pub trace_deviation: f64,
    pub psd_projected: bool,
    pub chi_re: Vec<Vec<f64>>,
    pub chi_im: Vec<Vec<f64>>,
}

fn split(m: &ComplexMatrix) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let rows = |f: fn(&num_complex::Complex64) -> f64| {
        (0..m.rows())
            .map(|r| (0..m.cols()).map(|c| f(&m[(r, c)])).collect())
            .collect()
    };
    (rows(|z| z.re), rows(|z| z.im))
}

/// Rebuilds a complex matrix from real and imaginary grids.
pub fn join(re: &[Vec<f64>], im: &[Vec<f64>]) -> Result<ComplexMatrix> {
    let k = re.len();
    ensure!(im.len() == k, "real and imaginary grids differ in height");
    let mut data = Vec::with_capacity(k * k);
    for (r, i) in re.iter().zip(im) {
        ensure!(r.len() == k && i.len() == k, "grid is not square");
        data.extend(r.iter().zip(i).map(|(&a, &b)| c64(a, b)));
    }
    Ok(ComplexMatrix::new(k, k, data)?)
}

impl ChiReport {
    /// Builds a report; with `project_psd` the stored χ and fidelity refer
    /// to the PSD projection.
    pub fn from_result(r: &QptResult, seed: u64, project_psd: bool) -> Result<Self> {
        let meta = &r.chi.metadata;
        let gate = meta.gate.context("result carries no gate")?;
        let n = meta.lines.len();
        let ops = fixed_operator_set(n)?;
        let (chi, fidelity, trace_deviation) = if project_psd {
            let p = r.chi.project_psd();
            let f = process_fidelity(&r.theory, &p)?;
            let t = trace_preservation_deviation(&p, &ops)?;
            (p, f, t)
        } else {
            (r.chi.clone(), r.fidelity, r.trace_deviation)
        };
        let (chi_re, chi_im) = split(&chi.matrix);
        Ok(Self {
            format: FORMAT,
            gate: gate.qasm_name().to_string(),
            lines: meta.lines.clone(),
            backend: meta.backend.clone().unwrap_or_default(),
            shots: meta.shots,
            exact: meta.shots.is_none(),
            seed,
            ordering: Ordering::for_qubits(n)?,
            executions: r.executions,
            total_shots: meta.shots.map(|s| s * r.executions as u64),
            residual: r.residual,
            fidelity,
            trace_deviation,
            psd_projected: project_psd,
            chi_re,
            chi_im,
        })
    }

    pub fn gate_label(&self) -> Result<GateLabel> {
        GateLabel::from_qasm(&self.gate).with_context(|| format!("unknown gate `{}`", self.gate))
    }

    pub fn chi(&self) -> Result<ChiMatrix> {
        Ok(ChiMatrix::new(join(&self.chi_re, &self.chi_im)?))
    }

    /// Checks every invariant the writer guarantees.
    pub fn validate(&self) -> Result<()> {
        ensure!(self.format == FORMAT, "unsupported report format {}", self.format);
        let gate = self.gate_label()?;
        let n = self.lines.len();
        ensure!(gate.arity() == n, "gate {} does not act on {n} line(s)", self.gate);
        let ctx = QptContext::get(n)?;
        ensure!(
            self.ordering == Ordering::for_qubits(n)?,
            "ordering block does not match the {n}-qubit convention"
        );
        ensure!(
            self.executions == ctx.execution_count(),
            "executions {} != {} preparations × {} settings",
            self.executions,
            ctx.preparations.len(),
            ctx.settings.len()
        );
        ensure!(self.exact == self.shots.is_none(), "exact flag disagrees with shots");
        ensure!(
            self.total_shots == self.shots.map(|s| s * self.executions as u64),
            "total_shots is not executions × shots"
        );
        let chi = self.chi()?;
        ensure!(chi.matrix.rows() == ctx.ops.len(), "χ has the wrong dimension");
        ensure!(chi.matrix.hermiticity_error() <= 1e-9, "χ is not Hermitian");
        let theory = theoretical_chi_for(gate, &ctx.ops)?;
        let f = process_fidelity(&theory, &chi)?;
        ensure!(
            (f - self.fidelity).abs() <= 1e-9,
            "stored fidelity {} differs from recomputed {f}",
            self.fidelity
        );
        let t = trace_preservation_deviation(&chi, &ctx.ops)?;
        ensure!(
            (t - self.trace_deviation).abs() <= 1e-9,
            "stored trace deviation is stale"
        );
        if self.exact {
            ensure!(
                self.residual <= 1e-10,
                "exact-mode residual {} too large",
                self.residual
            );
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).context("malformed χ report")?;
        r.validate()?;
        Ok(r)
    }

    /// `h_q2`, `cx_q3-2`.
    pub fn file_stem(&self) -> String {
        file_stem(&self.gate, &self.lines)
    }
}

pub fn file_stem(gate: &str, lines: &[usize]) -> String {
    let lines: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
    format!("{gate}_q{}", lines.join("-"))
}

/// Reconstructed-state report written by `qst`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub format: u32,
    pub circuit: String,
    pub backend: String,
    pub qubits: usize,
    pub shots: Option<u64>,
    pub exact: bool,
    pub seed: u64,
    pub settings: usize,
    /// Uhlmann fidelity against the exact simulated state.
    pub fidelity: f64,
    pub min_eigenvalue: f64,
    pub psd_projected: bool,
    pub rho_re: Vec<Vec<f64>>,
    pub rho_im: Vec<Vec<f64>>,
}

impl StateReport {
    pub fn new(
        circuit: &str,
        backend: &str,
        shots: Option<u64>,
        seed: u64,
        rho: &ComplexMatrix,
        fidelity: f64,
        psd_projected: bool,
    ) -> Self {
        let (rho_re, rho_im) = split(rho);
        let qubits = rho.rows().trailing_zeros() as usize;
        Self {
            format: FORMAT,
            circuit: circuit.to_string(),
            backend: backend.to_string(),
            qubits,
            shots,
            exact: shots.is_none(),
            seed,
            settings: 3usize.pow(qubits as u32),
            fidelity,
            min_eigenvalue: rho.hermitian_eigenvalues()[0],
            psd_projected,
            rho_re,
            rho_im,
        }
    }

    pub fn rho(&self) -> Result<ComplexMatrix> {
        join(&self.rho_re, &self.rho_im)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.format == FORMAT, "unsupported report format {}", self.format);
        let rho = self.rho()?;
        if rho.rows() != 1 << self.qubits {
            bail!("ρ dimension {} does not match {} qubits", rho.rows(), self.qubits);
        }
        ensure!(self.settings == 3usize.pow(self.qubits as u32), "settings is not 3^n");
        ensure!(self.exact == self.shots.is_none(), "exact flag disagrees with shots");
        ensure!(rho.hermiticity_error() <= 1e-9, "ρ is not Hermitian");
        ensure!((rho.trace().re - 1.0).abs() <= 1e-9, "ρ does not have unit trace");
        ensure!(
            (rho.hermitian_eigenvalues()[0] - self.min_eigenvalue).abs() <= 1e-9,
            "stored minimum eigenvalue is stale"
        );
        ensure!((-1e-9..=1.0 + 1e-9).contains(&self.fidelity), "fidelity out of range");
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text).context("malformed state report")?;
        r.validate()?;
        Ok(r)
    }
}

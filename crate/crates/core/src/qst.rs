// Copyright 2026 The qptkit Authors
// SPDX-License-Identifier: Apache-2.0

//! Linear-inversion state tomography.
//!
//! Each qubit is read out in one of three bases: `Z` directly, `X` after a
//! Hadamard, and `Y` after `S†` then Hadamard. The `3ⁿ` settings give every
//! Pauli expectation `⟨P⟩ = Σᵢ pᵢ eᵢ`, and the state is rebuilt as
//! `ρ = 2⁻ⁿ Σ_P ⟨P⟩ P`.
//!
//! Setting tags, Pauli strings and outcome bitstrings share one layout: the
//! leftmost character belongs to the most significant tomographed qubit.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::algebra::{c64, AlgebraError, ComplexMatrix, DensityMatrix, GateLabel, Pauli, PauliString, MAX_QUBITS};
use crate::circuit::{Circuit, CircuitError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TomographyError {
    #[error("tomography supports 1..=5 qubits, got {0}")]
    QubitCount(usize),
    #[error("circuit already contains measurements")]
    AlreadyMeasured,
    #[error("setting `{setting}` has {found} tags for {expected} qubits")]
    SettingWidth {
        setting: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid setting tag string `{0}`")]
    InvalidSetting(String),
    #[error("no setting in the dataset can estimate `{0}`")]
    NoCompatibleSetting(String),
    #[error("missing expectation value for `{0}`")]
    MissingExpectation(String),
    #[error("counts for setting `{setting}` sum to {sum}, expected {shots}")]
    CountMismatch { setting: String, sum: u64, shots: u64 },
    #[error("outcome `{outcome}` does not fit {qubits} qubits")]
    BadOutcome { outcome: String, qubits: usize },
    #[error("dataset line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Readout basis for one qubit. Declaration order is the enumeration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MeasBasis {
    Z,
    X,
    Y,
}

impl MeasBasis {
    pub const ALL: [MeasBasis; 3] = [MeasBasis::Z, MeasBasis::X, MeasBasis::Y];

    /// Gates that rotate this basis onto the computational basis.
    pub fn rotation(self) -> &'static [GateLabel] {
        match self {
            MeasBasis::Z => &[],
            MeasBasis::X => &[GateLabel::H],
            MeasBasis::Y => &[GateLabel::Sdg, GateLabel::H],
        }
    }

    pub fn pauli(self) -> Pauli {
        match self {
            MeasBasis::Z => Pauli::Z,
            MeasBasis::X => Pauli::X,
            MeasBasis::Y => Pauli::Y,
        }
    }

    fn symbol(self) -> char {
        match self {
            MeasBasis::Z => 'Z',
            MeasBasis::X => 'X',
            MeasBasis::Y => 'Y',
        }
    }
}

/// One readout basis per qubit, most significant qubit first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MeasurementSetting(Vec<MeasBasis>);

impl MeasurementSetting {
    pub fn new(tags: Vec<MeasBasis>) -> Self {
        Self(tags)
    }

    pub fn tags(&self) -> &[MeasBasis] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when every non-identity factor of `p` is measured in its own basis.
    pub fn supports(&self, p: &PauliString) -> bool {
        p.len() == self.len()
            && p.factors()
                .iter()
                .zip(&self.0)
                .all(|(&f, b)| f == Pauli::I || f == b.pauli())
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|b| write!(f, "{}", b.symbol()))
    }
}

impl FromStr for MeasurementSetting {
    type Err = TomographyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let tags = s
            .chars()
            .map(|c| match c {
                'Z' => Ok(MeasBasis::Z),
                'X' => Ok(MeasBasis::X),
                'Y' => Ok(MeasBasis::Y),
                _ => Err(TomographyError::InvalidSetting(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if tags.is_empty() || tags.len() > MAX_QUBITS {
            return Err(TomographyError::InvalidSetting(s.to_string()));
        }
        Ok(Self(tags))
    }
}

/// All `3ⁿ` settings, lexicographic with `Z < X < Y`.
pub fn qst_settings(n: usize) -> Result<Vec<MeasurementSetting>, TomographyError> {
    if n == 0 || n > MAX_QUBITS {
        return Err(TomographyError::QubitCount(n));
    }
    Ok((0..3usize.pow(n as u32))
        .map(|mut idx| {
            let mut tags = vec![MeasBasis::Z; n];
            for slot in tags.iter_mut().rev() {
                *slot = MeasBasis::ALL[idx % 3];
                idx /= 3;
            }
            MeasurementSetting(tags)
        })
        .collect())
}

/// Appends basis changes and a full measurement, mapping qubit `i` to
/// classical bit `i`.
pub fn append_setting(c: &Circuit, s: &MeasurementSetting) -> Result<Circuit, TomographyError> {
    let lines: Vec<usize> = (0..c.qubit_count()).rev().collect();
    append_setting_on(c, s, &lines)
}

/// Appends basis changes and measurements on `lines`, where `lines[i]` takes
/// tag `i` of the setting. The classical register is resized to
/// `lines.len()` bits so that outcome bitstrings line up with the tags.
pub fn append_setting_on(c: &Circuit, s: &MeasurementSetting, lines: &[usize]) -> Result<Circuit, TomographyError> {
    if c.has_measurements() {
        return Err(TomographyError::AlreadyMeasured);
    }
    if s.len() != lines.len() {
        return Err(TomographyError::SettingWidth {
            setting: s.to_string(),
            expected: lines.len(),
            found: s.len(),
        });
    }
    let k = lines.len();
    let mut out = c.with_clbits(k)?;
    for (&line, basis) in lines.iter().zip(s.tags()) {
        for &g in basis.rotation() {
            out.gate(g, &[line])?;
        }
    }
    for (i, &line) in lines.iter().enumerate() {
        out.measure(line, k - 1 - i)?;
    }
    Ok(out)
}

/// Readout statistics for one setting.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcomes {
    Counts {
        shots: u64,
        counts: BTreeMap<String, u64>,
    },
    /// Infinite-shot limit.
    Exact(BTreeMap<String, f64>),
}

impl Outcomes {
    pub fn shots(&self) -> Option<u64> {
        match self {
            Outcomes::Counts { shots, .. } => Some(*shots),
            Outcomes::Exact(_) => None,
        }
    }

    /// `(bitstring, probability)` pairs.
    pub fn frequencies(&self) -> Vec<(&str, f64)> {
        match self {
            Outcomes::Counts { shots, counts } => counts
                .iter()
                .map(|(k, &v)| (k.as_str(), v as f64 / *shots as f64))
                .collect(),
            Outcomes::Exact(p) => p.iter().map(|(k, &v)| (k.as_str(), v)).collect(),
        }
    }

    fn keys(&self) -> Vec<&str> {
        match self {
            Outcomes::Counts { counts, .. } => counts.keys().map(String::as_str).collect(),
            Outcomes::Exact(p) => p.keys().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettingRecord {
    pub setting: MeasurementSetting,
    pub outcomes: Outcomes,
}

/// Outcomes of a set of measurement settings on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyDataset {
    qubits: usize,
    records: Vec<SettingRecord>,
}

impl TomographyDataset {
    pub fn new(qubits: usize, mut records: Vec<SettingRecord>) -> Result<Self, TomographyError> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(TomographyError::QubitCount(qubits));
        }
        for r in &records {
            if r.setting.len() != qubits {
                return Err(TomographyError::SettingWidth {
                    setting: r.setting.to_string(),
                    expected: qubits,
                    found: r.setting.len(),
                });
            }
            for key in r.outcomes.keys() {
                if key.len() != qubits || !key.chars().all(|c| c == '0' || c == '1') {
                    return Err(TomographyError::BadOutcome {
                        outcome: key.to_string(),
                        qubits,
                    });
                }
            }
            if let Outcomes::Counts { shots, counts } = &r.outcomes {
                let sum: u64 = counts.values().sum();
                if sum != *shots {
                    return Err(TomographyError::CountMismatch {
                        setting: r.setting.to_string(),
                        sum,
                        shots: *shots,
                    });
                }
            }
        }
        records.sort_by(|a, b| a.setting.cmp(&b.setting));
        Ok(Self { qubits, records })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn records(&self) -> &[SettingRecord] {
        &self.records
    }
}

/// `Σᵢ pᵢ eᵢ` using the first setting (in enumeration order) that supports `pauli`.
pub fn estimate_pauli(dataset: &TomographyDataset, pauli: &PauliString) -> Result<f64, TomographyError> {
    if pauli.is_identity() && pauli.len() == dataset.qubits {
        return Ok(1.0);
    }
    let record = dataset
        .records
        .iter()
        .find(|r| r.setting.supports(pauli))
        .ok_or_else(|| TomographyError::NoCompatibleSetting(pauli.to_string()))?;
    let active: Vec<usize> = pauli
        .factors()
        .iter()
        .enumerate()
        .filter(|(_, &f)| f != Pauli::I)
        .map(|(i, _)| i)
        .collect();
    let mut value = 0.0;
    for (outcome, p) in record.outcomes.frequencies() {
        let bytes = outcome.as_bytes();
        let ones = active.iter().filter(|&&i| bytes[i] == b'1').count();
        value += if ones % 2 == 0 { p } else { -p };
    }
    Ok(value)
}

/// A linear-inversion estimate; Hermitian with unit trace, not necessarily PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedState {
    pub matrix: ComplexMatrix,
    pub hermitized: bool,
}

impl ReconstructedState {
    pub fn qubit_count(&self) -> usize {
        self.matrix.rows().trailing_zeros() as usize
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix.hermitian_eigenvalues()[0]
    }

    /// Validates as a density matrix (fails for non-PSD estimates).
    pub fn to_density_matrix(&self) -> Result<DensityMatrix, AlgebraError> {
        DensityMatrix::new(self.matrix.clone())
    }

    /// Nearest-by-clipping physical state: negative eigenvalues are set to
    /// zero and the trace is renormalized.
    pub fn project_psd(&self) -> DensityMatrix {
        let clipped = self.matrix.hermitian_map(|l| l.max(0.0));
        let tr = clipped.trace().re;
        let m = if tr > 0.0 {
            clipped.scale(c64(1.0 / tr, 0.0))
        } else {
            let d = self.matrix.rows();
            ComplexMatrix::identity(d).scale(c64(1.0 / d as f64, 0.0))
        };
        DensityMatrix::from_matrix_unchecked(m.hermitian_part())
    }
}

/// `ρ = 2⁻ⁿ Σ_P ⟨P⟩ P`, symmetrized. The identity coefficient is pinned to 1.
pub fn reconstruct_density(
    expectations: &BTreeMap<PauliString, f64>,
    n: usize,
) -> Result<ReconstructedState, TomographyError> {
    if n == 0 || n > MAX_QUBITS {
        return Err(TomographyError::QubitCount(n));
    }
    let dim = 1usize << n;
    let mut rho = ComplexMatrix::zeros(dim, dim);
    for p in PauliString::all(n) {
        let value = if p.is_identity() {
            1.0
        } else {
            *expectations
                .get(&p)
                .ok_or_else(|| TomographyError::MissingExpectation(p.to_string()))?
        };
        if value != 0.0 {
            rho = &rho + &p.matrix().scale(c64(value / dim as f64, 0.0));
        }
    }
    Ok(ReconstructedState {
        matrix: rho.hermitian_part(),
        hermitized: true,
    })
}

/// Every Pauli expectation the dataset supports, keyed by string.
pub fn expectations(dataset: &TomographyDataset) -> Result<BTreeMap<PauliString, f64>, TomographyError> {
    PauliString::all(dataset.qubits)
        .into_iter()
        .map(|p| estimate_pauli(dataset, &p).map(|v| (p, v)))
        .collect()
}

pub fn reconstruct_from_dataset(dataset: &TomographyDataset) -> Result<ReconstructedState, TomographyError> {
    reconstruct_density(&expectations(dataset)?, dataset.qubits)
}

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`. A non-PSD `rho` (shot noise) is
/// first clipped to its non-negative part and renormalized.
pub fn state_fidelity(rho: &ComplexMatrix, sigma: &DensityMatrix) -> f64 {
    // Eigenvalues at rounding level would otherwise contribute √ε.
    let root = |l: f64| if l > 1e-12 { l.sqrt() } else { 0.0 };
    let clipped = rho.hermitian_map(|l| l.max(0.0));
    let tr = clipped.trace().re;
    if tr <= 0.0 {
        return 0.0;
    }
    let sqrt_rho = clipped.scale(c64(1.0 / tr, 0.0)).hermitian_map(root);
    let inner = &(&sqrt_rho * sigma.matrix()) * &sqrt_rho;
    let root_trace: f64 = inner.hermitian_eigenvalues().into_iter().map(root).sum();
    root_trace * root_trace
}

/// Line-oriented text form:
///
/// ```text
/// format=1
/// qubits=2
/// setting=ZX shots=8192 00=4100 01=4092
/// setting=XX shots=exact 00=0.5 11=0.5
/// ```
pub fn write_dataset(dataset: &TomographyDataset) -> String {
    let mut out = format!("format=1\nqubits={}\n", dataset.qubits);
    for r in &dataset.records {
        out.push_str(&format!("setting={}", r.setting));
        match &r.outcomes {
            Outcomes::Counts { shots, counts } => {
                out.push_str(&format!(" shots={shots}"));
                for (k, v) in counts {
                    out.push_str(&format!(" {k}={v}"));
                }
            }
            Outcomes::Exact(p) => {
                out.push_str(" shots=exact");
                for (k, v) in p {
                    out.push_str(&format!(" {k}={v:?}"));
                }
            }
        }
        out.push('\n');
    }
    out
}

pub fn parse_dataset(text: &str) -> Result<TomographyDataset, TomographyError> {
    let mut qubits = None;
    let mut records = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| TomographyError::Format { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_whitespace();
        let head = fields.next().unwrap_or_default();
        let (key, value) = head
            .split_once('=')
            .ok_or_else(|| err(format!("expected key=value, found `{head}`")))?;
        match key {
            "format" if value == "1" => {}
            "format" => return Err(err(format!("unsupported format `{value}`"))),
            "qubits" => {
                qubits = Some(
                    value
                        .parse::<usize>()
                        .map_err(|_| err(format!("bad qubit count `{value}`")))?,
                )
            }
            "setting" => {
                let setting: MeasurementSetting = value.parse()?;
                let shots_field = fields.next().ok_or_else(|| err("missing shots".into()))?;
                let shots = shots_field
                    .strip_prefix("shots=")
                    .ok_or_else(|| err(format!("expected shots=, found `{shots_field}`")))?;
                let pairs = fields
                    .map(|f| f.split_once('=').ok_or_else(|| err(format!("bad outcome `{f}`"))))
                    .collect::<Result<Vec<_>, _>>()?;
                let outcomes = if shots == "exact" {
                    let p = pairs
                        .into_iter()
                        .map(|(k, v)| {
                            v.parse::<f64>()
                                .map(|x| (k.to_string(), x))
                                .map_err(|_| err(format!("bad probability `{v}`")))
                        })
                        .collect::<Result<_, _>>()?;
                    Outcomes::Exact(p)
                } else {
                    let shots = shots.parse::<u64>().map_err(|_| err(format!("bad shots `{shots}`")))?;
                    let counts = pairs
                        .into_iter()
                        .map(|(k, v)| {
                            v.parse::<u64>()
                                .map(|x| (k.to_string(), x))
                                .map_err(|_| err(format!("bad count `{v}`")))
                        })
                        .collect::<Result<_, _>>()?;
                    Outcomes::Counts { shots, counts }
                };
                records.push(SettingRecord { setting, outcomes });
            }
            _ => return Err(err(format!("unknown key `{key}`"))),
        }
    }
    let qubits = qubits.ok_or(TomographyError::Format {
        line: 0,
        message: "missing qubits=".into(),
    })?;
    TomographyDataset::new(qubits, records)
}

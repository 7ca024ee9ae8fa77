// Copyright 2026 The qptkit Authors
// SPDX-License-Identifier: Apache-2.0

//! A simulated 5-qubit backend.
//!
//! Every gate is applied as its ideal unitary, followed (when noise is on) by
//! amplitude damping and pure dephasing on each qubit the gate touches, for
//! the gate's configured duration. Measurements decay the measured qubit for
//! the measurement duration before readout. With `idle_decay=on`, qubits not
//! touched by a gate decay for that gate's duration as well.
//!
//! Sampling is deterministic for a given seed. The random stream is consumed
//! shot by shot: one uniform draw selects the outcome, then one draw per
//! measured classical bit (ascending index) decides its readout flip.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::{AlgebraError, ComplexMatrix, DensityMatrix, GateLabel, QubitSelection, MAX_QUBITS};
use crate::circuit::{validate_topology, Circuit, CouplingError, CouplingMap, Instruction, TopologyViolation};
use crate::noise::{evolve_in_place, gate_channel, ChannelError, NoiseParams};

pub const QX4_CONFIG: &str = include_str!("../configs/qx4.cfg");
pub const QX2_CONFIG: &str = include_str!("../configs/qx2.cfg");

pub const DEFAULT_SINGLE_NS: f64 = 60.0;
pub const DEFAULT_CX_NS: f64 = 300.0;
pub const DEFAULT_MEASURE_NS: f64 = 300.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BackendError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("config is missing required key `{0}`")]
    Missing(String),
    #[error("qubit {qubit}: {error}")]
    Physicality { qubit: usize, error: ChannelError },
    #[error("circuit violates the coupling map: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Topology(Vec<TopologyViolation>),
    #[error("shot count must be at least 1")]
    NoShots,
    #[error("state left the density-matrix manifold: {0}")]
    Evolution(#[from] AlgebraError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Per-qubit noise, gate timings and connectivity of a simulated device.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendModel {
    name: String,
    qubits: Vec<NoiseParams>,
    gate_durations: BTreeMap<GateLabel, f64>,
    measure_ns: f64,
    coupling: Option<CouplingMap>,
    noise_enabled: bool,
    idle_decay: bool,
}

impl BackendModel {
    /// The QX4 parameter set.
    pub fn qx4() -> Self {
        load_backend(QX4_CONFIG).expect("shipped QX4 config is valid")
    }

    /// The QX2 parameter set.
    pub fn qx2() -> Self {
        load_backend(QX2_CONFIG).expect("shipped QX2 config is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn qubit(&self, index: usize) -> &NoiseParams {
        &self.qubits[index]
    }

    pub fn qubit_params(&self) -> &[NoiseParams] {
        &self.qubits
    }

    pub fn gate_duration(&self, label: GateLabel) -> f64 {
        self.gate_durations[&label]
    }

    pub fn measure_duration(&self) -> f64 {
        self.measure_ns
    }

    pub fn coupling(&self) -> Option<&CouplingMap> {
        self.coupling.as_ref()
    }

    pub fn noise_enabled(&self) -> bool {
        self.noise_enabled
    }

    pub fn idle_decay(&self) -> bool {
        self.idle_decay
    }

    pub fn with_noise(mut self, on: bool) -> Self {
        self.noise_enabled = on;
        self
    }

    pub fn with_idle_decay(mut self, on: bool) -> Self {
        self.idle_decay = on;
        self
    }

    pub fn with_gate_duration(mut self, label: GateLabel, ns: f64) -> Self {
        self.gate_durations.insert(label, ns);
        self
    }

    /// Multiplies every gate and measurement duration by `factor`.
    pub fn with_duration_scale(mut self, factor: f64) -> Self {
        for d in self.gate_durations.values_mut() {
            *d *= factor;
        }
        self.measure_ns *= factor;
        self
    }

    pub fn with_readout_flip(mut self, qubit: usize, p: f64) -> Result<Self, BackendError> {
        let mut params = self.qubits[qubit];
        params.readout_flip = p;
        params
            .validate()
            .map_err(|error| BackendError::Physicality { qubit, error })?;
        self.qubits[qubit] = params;
        Ok(self)
    }

    /// Ok when every CX of `c` sits on an allowed pair (or no map is declared).
    pub fn check_topology(&self, c: &Circuit) -> Result<(), BackendError> {
        match &self.coupling {
            Some(map) => validate_topology(c, map).map_err(BackendError::Topology),
            None => Ok(()),
        }
    }
}

fn parse_switch(value: &str, line: usize) -> Result<bool, BackendError> {
    match value {
        "on" => Ok(true),
        "off" => Ok(false),
        _ => Err(BackendError::Config {
            line,
            message: format!("expected `on` or `off`, found `{value}`"),
        }),
    }
}

fn parse_number(value: &str, line: usize) -> Result<f64, BackendError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| BackendError::Config {
            line,
            message: format!("`{value}` is not a finite number"),
        })
}

/// Parses the flat `key=value` backend format. Several entries may share a
/// line when separated by whitespace; `#` starts a comment.
pub fn load_backend(text: &str) -> Result<BackendModel, BackendError> {
    let mut name = String::from("backend");
    let mut t1: [Option<f64>; MAX_QUBITS] = [None; MAX_QUBITS];
    let mut t2: [Option<f64>; MAX_QUBITS] = [None; MAX_QUBITS];
    let mut flip = [0.0_f64; MAX_QUBITS];
    let mut single_ns = DEFAULT_SINGLE_NS;
    let mut cx_ns = DEFAULT_CX_NS;
    let mut measure_ns = DEFAULT_MEASURE_NS;
    let mut overrides: BTreeMap<GateLabel, f64> = BTreeMap::new();
    let mut coupling = None;
    let mut noise_enabled = true;
    let mut idle_decay = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        for entry in content.split_whitespace() {
            let (key, value) = entry.split_once('=').ok_or_else(|| BackendError::Config {
                line,
                message: format!("expected `key=value`, found `{entry}`"),
            })?;
            let bad_key = || BackendError::Config {
                line,
                message: format!("unknown key `{key}`"),
            };
            match key {
                "format" => {
                    if value != "1" {
                        return Err(BackendError::Config {
                            line,
                            message: format!("unsupported format version `{value}`"),
                        });
                    }
                }
                "name" => name = value.to_string(),
                "noise" => noise_enabled = parse_switch(value, line)?,
                "idle_decay" => idle_decay = parse_switch(value, line)?,
                "coupling" => {
                    let map: CouplingMap = value.parse().map_err(|e: CouplingError| BackendError::Config {
                        line,
                        message: e.to_string(),
                    })?;
                    coupling = Some(map);
                }
                "dur.single_ns" => single_ns = parse_number(value, line)?,
                "dur.cx_ns" => cx_ns = parse_number(value, line)?,
                "dur.measure_ns" => measure_ns = parse_number(value, line)?,
                _ => {
                    if let Some(gate) = key.strip_prefix("dur.").and_then(|k| k.strip_suffix("_ns")) {
                        let label = GateLabel::from_qasm(gate).ok_or_else(bad_key)?;
                        overrides.insert(label, parse_number(value, line)?);
                        continue;
                    }
                    let (qubit, field) = key
                        .strip_prefix('q')
                        .and_then(|k| k.split_once('.'))
                        .ok_or_else(bad_key)?;
                    let q: usize = qubit.parse().map_err(|_| bad_key())?;
                    if q >= MAX_QUBITS {
                        return Err(BackendError::Config {
                            line,
                            message: format!("qubit index {q} exceeds the 5-qubit device"),
                        });
                    }
                    let v = parse_number(value, line)?;
                    match field {
                        "t1_us" => t1[q] = Some(v),
                        "t2_us" => t2[q] = Some(v),
                        "readout_flip" => flip[q] = v,
                        _ => return Err(bad_key()),
                    }
                }
            }
        }
    }

    let mut qubits = Vec::with_capacity(MAX_QUBITS);
    for q in 0..MAX_QUBITS {
        let t1 = t1[q].ok_or_else(|| BackendError::Missing(format!("q{q}.t1_us")))?;
        let t2 = t2[q].ok_or_else(|| BackendError::Missing(format!("q{q}.t2_us")))?;
        let params =
            NoiseParams::new(t1, t2, flip[q]).map_err(|error| BackendError::Physicality { qubit: q, error })?;
        qubits.push(params);
    }

    let mut gate_durations = BTreeMap::new();
    for label in GateLabel::ALL {
        let default = if label == GateLabel::CX { cx_ns } else { single_ns };
        gate_durations.insert(label, overrides.get(&label).copied().unwrap_or(default));
    }
    for (&label, &d) in &gate_durations {
        if d < 0.0 {
            return Err(BackendError::Config {
                line: 0,
                message: format!("negative duration for {label}"),
            });
        }
    }
    if measure_ns < 0.0 {
        return Err(BackendError::Config {
            line: 0,
            message: "negative measurement duration".into(),
        });
    }

    Ok(BackendModel {
        name,
        qubits,
        gate_durations,
        measure_ns,
        coupling,
        noise_enabled,
        idle_decay,
    })
}

/// Outcome of running a circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionResult {
    /// Sampled counts keyed by classical bitstring (`c[m-1]…c[0]`); sampled mode only.
    pub counts: Option<BTreeMap<String, u64>>,
    /// Number of shots; `None` in exact mode.
    pub shots: Option<u64>,
    /// Exact outcome distribution over the classical register; exact mode only.
    pub probabilities: Option<BTreeMap<String, f64>>,
    /// State before readout; exact mode only.
    pub final_state: Option<DensityMatrix>,
}

fn evolve(c: &Circuit, b: &BackendModel) -> Result<ComplexMatrix, BackendError> {
    b.check_topology(c)?;
    let n = c.qubit_count();
    let dim = 1usize << n;
    let mut state = ComplexMatrix::unit(dim, 0, 0);
    let singles: Vec<QubitSelection> = (0..n).map(|q| QubitSelection::new(&[q], n)).collect::<Result<_, _>>()?;

    let decay = |state: &mut ComplexMatrix, q: usize, ns: f64| -> Result<(), BackendError> {
        if ns > 0.0 {
            let ch = b.qubit(q).decay(ns)?;
            evolve_in_place(state, &ch, &singles[q]);
        }
        Ok(())
    };

    for inst in c.instructions() {
        match inst {
            Instruction::Gate { label, qubits } => {
                if *label != GateLabel::I {
                    let sel = QubitSelection::new(qubits, n)?;
                    evolve_in_place(&mut state, &gate_channel(*label), &sel);
                }
                if b.noise_enabled {
                    let ns = b.gate_duration(*label);
                    for q in 0..n {
                        if qubits.contains(&q) || b.idle_decay {
                            decay(&mut state, q, ns)?;
                        }
                    }
                }
            }
            Instruction::Measure { qubit, .. } => {
                if b.noise_enabled {
                    decay(&mut state, *qubit, b.measure_ns)?;
                }
            }
        }
    }
    Ok(state)
}

/// `clbit → qubit` for every measurement.
fn readout_map(c: &Circuit) -> Vec<Option<usize>> {
    let mut map = vec![None; c.clbit_count()];
    for inst in c.instructions() {
        if let Instruction::Measure { qubit, clbit } = inst {
            map[*clbit] = Some(*qubit);
        }
    }
    map
}

fn bitstring(bits: u64, width: usize) -> String {
    (0..width)
        .rev()
        .map(|j| if bits >> j & 1 == 1 { '1' } else { '0' })
        .collect()
}

fn outcome_distribution(state: &DensityMatrix, c: &Circuit) -> BTreeMap<u64, f64> {
    let map = readout_map(c);
    let mut dist = BTreeMap::new();
    for (index, p) in state.probabilities().into_iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        let mut bits = 0u64;
        for (clbit, qubit) in map.iter().enumerate() {
            if let Some(q) = qubit {
                bits |= ((index >> q) as u64 & 1) << clbit;
            }
        }
        *dist.entry(bits).or_insert(0.0) += p;
    }
    dist
}

/// Runs `c` to completion and reports the final state and the exact
/// distribution of the classical register, readout flips included.
pub fn execute_exact(c: &Circuit, b: &BackendModel) -> Result<ExecutionResult, BackendError> {
    let state = DensityMatrix::new(evolve(c, b)?)?;
    let width = c.clbit_count();
    let mut dist = outcome_distribution(&state, c);
    for (clbit, qubit) in readout_map(c).into_iter().enumerate() {
        let p = match qubit {
            Some(q) if b.qubit(q).readout_flip > 0.0 => b.qubit(q).readout_flip,
            _ => continue,
        };
        let mut flipped = BTreeMap::new();
        for (bits, prob) in dist {
            *flipped.entry(bits).or_insert(0.0) += prob * (1.0 - p);
            *flipped.entry(bits ^ 1 << clbit).or_insert(0.0) += prob * p;
        }
        dist = flipped;
    }
    let probabilities = dist.into_iter().map(|(bits, p)| (bitstring(bits, width), p)).collect();
    Ok(ExecutionResult {
        counts: None,
        shots: None,
        probabilities: Some(probabilities),
        final_state: Some(state),
    })
}

/// Samples `shots` readouts from the exact distribution, then applies each
/// measured qubit's readout flip probability.
pub fn execute(c: &Circuit, b: &BackendModel, shots: u64, seed: u64) -> Result<ExecutionResult, BackendError> {
    if shots == 0 {
        return Err(BackendError::NoShots);
    }
    let state = DensityMatrix::new(evolve(c, b)?)?;
    let dist: Vec<(u64, f64)> = outcome_distribution(&state, c).into_iter().collect();
    let total: f64 = dist.iter().map(|(_, p)| p).sum();
    let flips: Vec<Option<f64>> = readout_map(c)
        .into_iter()
        .map(|q| q.map(|q| b.qubit(q).readout_flip))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tallies: BTreeMap<u64, u64> = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut bits = dist.last().map_or(0, |(b, _)| *b);
        for &(outcome, p) in &dist {
            acc += p;
            if u < acc {
                bits = outcome;
                break;
            }
        }
        for (clbit, flip) in flips.iter().enumerate() {
            if let Some(p) = flip {
                let r: f64 = rng.random();
                if r < *p {
                    bits ^= 1 << clbit;
                }
            }
        }
        *tallies.entry(bits).or_insert(0) += 1;
    }
    let width = c.clbit_count();
    let counts = tallies
        .into_iter()
        .map(|(bits, n)| (bitstring(bits, width), n))
        .collect();
    Ok(ExecutionResult {
        counts: Some(counts),
        shots: Some(shots),
        probabilities: None,
        final_state: None,
    })
}

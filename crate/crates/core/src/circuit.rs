// Copyright 2026 The qptkit Authors
// SPDX-License-Identifier: Apache-2.0

//! Circuit intermediate representation and C-NOT topology checks.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::algebra::{GateLabel, MAX_QUBITS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircuitError {
    #[error("register of {0} qubits is outside the supported range 1..=5")]
    QubitCount(usize),
    #[error("qubit index {index} out of range for a {size}-qubit register")]
    QubitOutOfRange { index: usize, size: usize },
    #[error("classical bit index {index} out of range for a {size}-bit register")]
    ClbitOutOfRange { index: usize, size: usize },
    #[error("gate `{gate}` takes {expected} qubit(s), got {found}")]
    Arity {
        gate: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("gate `{gate}` uses qubit {qubit} more than once")]
    RepeatedQubit { gate: &'static str, qubit: usize },
    #[error("qubit {0} is used after it was measured")]
    AfterMeasurement(usize),
    #[error("classical bit {0} is written more than once")]
    ClbitReused(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    /// A gate; for `CX` the qubits are `[control, target]`.
    Gate {
        label: GateLabel,
        qubits: Vec<usize>,
    },
    Measure {
        qubit: usize,
        clbit: usize,
    },
}

/// An ordered instruction list over one quantum and one classical register.
///
/// Measurement is terminal: once a qubit is measured no later instruction may
/// touch it, and each classical bit is written at most once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    qubits: usize,
    clbits: usize,
    instructions: Vec<Instruction>,
    measured: u32,
    written: u64,
}

impl Circuit {
    pub fn new(qubits: usize, clbits: usize) -> Result<Self, CircuitError> {
        if qubits == 0 || qubits > MAX_QUBITS {
            return Err(CircuitError::QubitCount(qubits));
        }
        if clbits > 64 {
            return Err(CircuitError::ClbitOutOfRange {
                index: clbits - 1,
                size: 64,
            });
        }
        Ok(Self {
            qubits,
            clbits,
            instructions: Vec::new(),
            measured: 0,
            written: 0,
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn clbit_count(&self) -> usize {
        self.clbits
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn has_measurements(&self) -> bool {
        self.measured != 0
    }

    pub fn is_measured(&self, qubit: usize) -> bool {
        self.measured >> qubit & 1 == 1
    }

    fn check_qubit(&self, q: usize) -> Result<(), CircuitError> {
        if q >= self.qubits {
            return Err(CircuitError::QubitOutOfRange {
                index: q,
                size: self.qubits,
            });
        }
        if self.is_measured(q) {
            return Err(CircuitError::AfterMeasurement(q));
        }
        Ok(())
    }

    pub fn gate(&mut self, label: GateLabel, qubits: &[usize]) -> Result<&mut Self, CircuitError> {
        if qubits.len() != label.arity() {
            return Err(CircuitError::Arity {
                gate: label.qasm_name(),
                expected: label.arity(),
                found: qubits.len(),
            });
        }
        for (i, &q) in qubits.iter().enumerate() {
            self.check_qubit(q)?;
            if qubits[..i].contains(&q) {
                return Err(CircuitError::RepeatedQubit {
                    gate: label.qasm_name(),
                    qubit: q,
                });
            }
        }
        self.instructions.push(Instruction::Gate {
            label,
            qubits: qubits.to_vec(),
        });
        Ok(self)
    }

    pub fn measure(&mut self, qubit: usize, clbit: usize) -> Result<&mut Self, CircuitError> {
        self.check_qubit(qubit)?;
        if clbit >= self.clbits {
            return Err(CircuitError::ClbitOutOfRange {
                index: clbit,
                size: self.clbits,
            });
        }
        if self.written >> clbit & 1 == 1 {
            return Err(CircuitError::ClbitReused(clbit));
        }
        self.measured |= 1 << qubit;
        self.written |= 1 << clbit;
        self.instructions.push(Instruction::Measure { qubit, clbit });
        Ok(self)
    }

    /// Replays `inst` through the checked builders.
    pub fn push(&mut self, inst: Instruction) -> Result<&mut Self, CircuitError> {
        match inst {
            Instruction::Gate { label, qubits } => self.gate(label, &qubits),
            Instruction::Measure { qubit, clbit } => self.measure(qubit, clbit),
        }
    }

    /// A copy of this circuit with a different classical register size.
    pub fn with_clbits(&self, clbits: usize) -> Result<Self, CircuitError> {
        let mut out = Circuit::new(self.qubits, clbits)?;
        for inst in &self.instructions {
            out.push(inst.clone())?;
        }
        Ok(out)
    }

    /// A copy on a wider quantum register; instructions are unchanged.
    pub fn widened(&self, qubits: usize) -> Result<Self, CircuitError> {
        let mut out = Circuit::new(qubits.max(self.qubits), self.clbits)?;
        for inst in &self.instructions {
            out.push(inst.clone())?;
        }
        Ok(out)
    }

    /// `(control, target)` of every CX, in program order.
    pub fn cx_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.instructions.iter().filter_map(|inst| match inst {
            Instruction::Gate {
                label: GateLabel::CX,
                qubits,
            } => Some((qubits[0], qubits[1])),
            _ => None,
        })
    }
}

/// Directed `(control, target)` pairs on which a native CX is allowed.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CouplingMap {
    pairs: BTreeSet<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CouplingError {
    #[error("malformed coupling pair `{0}`, expected `control>target`")]
    Malformed(String),
    #[error("coupling pair {0}>{1} repeats a qubit")]
    SelfLoop(usize, usize),
    #[error("coupling pair {0}>{1} listed twice")]
    Duplicate(usize, usize),
    #[error("coupling index {0} exceeds the 5-qubit register")]
    OutOfRange(usize),
}

impl CouplingMap {
    pub fn new(pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, CouplingError> {
        let mut set = BTreeSet::new();
        for (c, t) in pairs {
            if c >= MAX_QUBITS {
                return Err(CouplingError::OutOfRange(c));
            }
            if t >= MAX_QUBITS {
                return Err(CouplingError::OutOfRange(t));
            }
            if c == t {
                return Err(CouplingError::SelfLoop(c, t));
            }
            if !set.insert((c, t)) {
                return Err(CouplingError::Duplicate(c, t));
            }
        }
        Ok(Self { pairs: set })
    }

    pub fn contains(&self, control: usize, target: usize) -> bool {
        self.pairs.contains(&(control, target))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl FromStr for CouplingMap {
    type Err = CouplingError;

    /// Parses `1>0,2>0,...`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut pairs = Vec::new();
        for item in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (c, t) = item
                .split_once('>')
                .ok_or_else(|| CouplingError::Malformed(item.to_string()))?;
            let parse = |x: &str| {
                x.trim()
                    .parse::<usize>()
                    .map_err(|_| CouplingError::Malformed(item.to_string()))
            };
            pairs.push((parse(c)?, parse(t)?));
        }
        Self::new(pairs)
    }
}

impl fmt::Display for CouplingMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (c, t)) in self.pairs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}>{t}")?;
        }
        Ok(())
    }
}

/// A CX placement missing from the coupling map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologyViolation {
    /// Position of the offending instruction in the circuit.
    pub instruction: usize,
    pub control: usize,
    pub target: usize,
}

impl fmt::Display for TopologyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "instruction {}: cx q[{}] -> q[{}] is not an allowed C-NOT placement",
            self.instruction, self.control, self.target
        )
    }
}

/// Lists every CX whose `(control, target)` pair is absent from `map`.
pub fn validate_topology(c: &Circuit, map: &CouplingMap) -> Result<(), Vec<TopologyViolation>> {
    let violations: Vec<_> = c
        .instructions()
        .iter()
        .enumerate()
        .filter_map(|(i, inst)| match inst {
            Instruction::Gate {
                label: GateLabel::CX,
                qubits,
            } if !map.contains(qubits[0], qubits[1]) => Some(TopologyViolation {
                instruction: i,
                control: qubits[0],
                target: qubits[1],
            }),
            _ => None,
        })
        .collect();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

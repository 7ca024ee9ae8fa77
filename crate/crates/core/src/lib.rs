// Copyright 2026 The qptkit Authors
// SPDX-License-Identifier: Apache-2.0

//! Process tomography of simulated superconducting qubits.
//!
//! `qptkit` simulates a 5-qubit transmon device with `T1`/`T2` decay, runs
//! state and process tomography protocols against it, reconstructs χ
//! matrices by linear inversion, and scores them against ideal gates.
//!
//! ```
//! use qptkit::{run_qpt, BackendModel, GateLabel, Shots};
//!
//! let backend = BackendModel::qx4().with_noise(false);
//! let r = run_qpt(GateLabel::H, &[2], &backend, Shots::Exact, 0).unwrap();
//! assert!(r.fidelity > 1.0 - 1e-9);
//! assert_eq!(r.executions, 12);
//! ```
//!
//! # Conventions
//!
//! Qubit 0 is the least significant bit of a basis index. Pauli strings,
//! setting tags and outcome bitstrings are written with the highest qubit
//! on the left, so `"ZX"` means `Z ⊗ X` with `X` on the lower qubit. Gates
//! on several qubits take their targets most significant first; for `cx`
//! that is `(control, target)`.

pub mod algebra;
pub mod backend;
pub mod circuit;
pub mod noise;
pub mod qasm;
pub mod qpt;
pub mod qst;

pub use algebra::{ComplexMatrix, DensityMatrix, GateLabel, Pauli, PauliString};
pub use backend::{execute, execute_exact, load_backend, BackendModel, ExecutionResult};
pub use circuit::{Circuit, CouplingMap, Instruction};
pub use noise::{apply_channel, KrausChannel, NoiseParams};
pub use qasm::{emit_qasm, parse_qasm};
pub use qpt::{run_qpt, ChiMatrix, QptResult, Shots};

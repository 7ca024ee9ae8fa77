// Copyright 2026 The qptkit Authors
// SPDX-License-Identifier: Apache-2.0

//! Kraus channels: ideal gates, T1 amplitude damping, pure dephasing,
//! composition and application.
//!
//! Coherence times are given in microseconds and gate durations in
//! nanoseconds; the two are reconciled only inside the constructors here.

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::{AlgebraError, ComplexMatrix, DensityMatrix, GateLabel, QubitSelection};

/// Completeness tolerance for channels handed to [`apply_channel`].
pub const COMPLETENESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("a channel needs at least one Kraus operator")]
    Empty,
    #[error("Kraus operator {index} has shape {rows}x{cols}, expected {dim}x{dim}")]
    OperatorShape {
        index: usize,
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error("T1 must be positive, got {0} us")]
    NonPositiveT1(f64),
    #[error("T2 must be positive, got {0} us")]
    NonPositiveT2(f64),
    #[error("T2 = {t2} us exceeds 2*T1 = {} us", 2.0 * t1)]
    Unphysical { t1: f64, t2: f64 },
    #[error("gate duration must be finite and non-negative, got {0} ns")]
    Duration(f64),
    #[error("readout flip probability {0} outside [0, 0.5]")]
    ReadoutProbability(f64),
    #[error("operator is not unitary")]
    NotUnitary,
    #[error("qubit count mismatch: {0} vs {1}")]
    QubitMismatch(usize, usize),
    #[error("channel violates completeness by {0:e}")]
    Incomplete(f64),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Per-qubit coherence and readout parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub t1_us: f64,
    pub t2_us: f64,
    pub readout_flip: f64,
}

impl NoiseParams {
    pub fn new(t1_us: f64, t2_us: f64, readout_flip: f64) -> Result<Self, ChannelError> {
        let p = Self {
            t1_us,
            t2_us,
            readout_flip,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        check_times(self.t1_us, self.t2_us)?;
        if !(0.0..=0.5).contains(&self.readout_flip) {
            return Err(ChannelError::ReadoutProbability(self.readout_flip));
        }
        Ok(())
    }

    /// Damping followed by dephasing for `duration_ns`.
    pub fn decay(&self, duration_ns: f64) -> Result<KrausChannel, ChannelError> {
        compose(
            &amplitude_damping(duration_ns, self.t1_us)?,
            &pure_dephasing(duration_ns, self.t1_us, self.t2_us)?,
        )
    }
}

fn check_times(t1_us: f64, t2_us: f64) -> Result<(), ChannelError> {
    if !(t1_us.is_finite() && t1_us > 0.0) {
        return Err(ChannelError::NonPositiveT1(t1_us));
    }
    if !(t2_us.is_finite() && t2_us > 0.0) {
        return Err(ChannelError::NonPositiveT2(t2_us));
    }
    if t2_us > 2.0 * t1_us {
        return Err(ChannelError::Unphysical { t1: t1_us, t2: t2_us });
    }
    Ok(())
}

fn check_duration(duration_ns: f64) -> Result<(), ChannelError> {
    if !(duration_ns.is_finite() && duration_ns >= 0.0) {
        return Err(ChannelError::Duration(duration_ns));
    }
    Ok(())
}

/// A completely positive map in operator-sum form, `ρ ↦ Σₖ Eₖ ρ Eₖ†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    qubits: usize,
    operators: Vec<ComplexMatrix>,
}

impl KrausChannel {
    /// Checks shapes only; completeness is measured by [`validate_completeness`].
    pub fn new(operators: Vec<ComplexMatrix>) -> Result<Self, ChannelError> {
        let first = operators.first().ok_or(ChannelError::Empty)?;
        let dim = first.rows();
        if !dim.is_power_of_two() || !(2..=1 << crate::algebra::MAX_QUBITS).contains(&dim) {
            return Err(ChannelError::OperatorShape {
                index: 0,
                rows: first.rows(),
                cols: first.cols(),
                dim,
            });
        }
        for (index, op) in operators.iter().enumerate() {
            if op.rows() != dim || op.cols() != dim {
                return Err(ChannelError::OperatorShape {
                    index,
                    rows: op.rows(),
                    cols: op.cols(),
                    dim,
                });
            }
        }
        Ok(Self {
            qubits: dim.trailing_zeros() as usize,
            operators,
        })
    }

    pub fn identity(qubits: usize) -> Self {
        Self {
            qubits,
            operators: vec![ComplexMatrix::identity(1 << qubits)],
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    /// Linear extension `M ↦ Σₖ Eₖ M Eₖ†` to arbitrary (non-Hermitian) operators.
    pub fn apply_to_operator(&self, m: &ComplexMatrix) -> Result<ComplexMatrix, ChannelError> {
        if m.rows() != self.dim() || m.cols() != self.dim() {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.dim(),
                found: m.rows(),
            }
            .into());
        }
        let mut out = ComplexMatrix::zeros(self.dim(), self.dim());
        for e in &self.operators {
            let term = &(e * m) * &e.dagger();
            out = &out + &term;
        }
        Ok(out)
    }

    /// Applies this channel to `targets` of a larger register without
    /// forming the embedded operators.
    pub(crate) fn apply_on(&self, m: &ComplexMatrix, sel: &QubitSelection) -> ComplexMatrix {
        debug_assert_eq!(sel.local_dim(), self.dim());
        let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
        for e in &self.operators {
            let term = sel.right_apply_dagger(e, &sel.left_apply(e, m));
            out = &out + &term;
        }
        out
    }
}

/// T1 relaxation over `duration_ns` with `γ = 1 − exp(−t/T1)`.
pub fn amplitude_damping(duration_ns: f64, t1_us: f64) -> Result<KrausChannel, ChannelError> {
    check_duration(duration_ns)?;
    if !(t1_us.is_finite() && t1_us > 0.0) {
        return Err(ChannelError::NonPositiveT1(t1_us));
    }
    let gamma = 1.0 - (-duration_ns / (t1_us * 1e3)).exp();
    Ok(amplitude_damping_gamma(gamma))
}

/// Amplitude damping with explicit decay probability `gamma ∈ [0, 1]`.
pub fn amplitude_damping_gamma(gamma: f64) -> KrausChannel {
    let gamma = gamma.clamp(0.0, 1.0);
    let e0 = ComplexMatrix::from_real_rows(&[[1.0, 0.0], [0.0, (1.0 - gamma).sqrt()]]);
    let e1 = ComplexMatrix::from_real_rows(&[[0.0, gamma.sqrt()], [0.0, 0.0]]);
    KrausChannel {
        qubits: 1,
        operators: vec![e0, e1],
    }
}

/// Dephasing beyond what T1 already implies: `1/Tφ = 1/T2 − 1/(2·T1)`, flip
/// probability `p = (1 − exp(−t/Tφ))/2`.
pub fn pure_dephasing(duration_ns: f64, t1_us: f64, t2_us: f64) -> Result<KrausChannel, ChannelError> {
    check_duration(duration_ns)?;
    check_times(t1_us, t2_us)?;
    let rate_per_us = (1.0 / t2_us - 0.5 / t1_us).max(0.0);
    let p = 0.5 * (1.0 - (-duration_ns * 1e-3 * rate_per_us).exp());
    Ok(phase_flip(p))
}

/// Phase-flip channel `{√(1−p)·I, √p·Z}`.
pub fn phase_flip(p: f64) -> KrausChannel {
    let p = p.clamp(0.0, 1.0);
    let a = (1.0 - p).sqrt();
    let b = p.sqrt();
    KrausChannel {
        qubits: 1,
        operators: vec![
            ComplexMatrix::from_real_rows(&[[a, 0.0], [0.0, a]]),
            ComplexMatrix::from_real_rows(&[[b, 0.0], [0.0, -b]]),
        ],
    }
}

pub fn unitary_as_channel(u: &ComplexMatrix) -> Result<KrausChannel, ChannelError> {
    if !u.is_unitary(COMPLETENESS_TOL) {
        return Err(ChannelError::NotUnitary);
    }
    KrausChannel::new(vec![u.clone()])
}

pub fn gate_channel(label: GateLabel) -> KrausChannel {
    KrausChannel {
        qubits: label.arity(),
        operators: vec![label.matrix()],
    }
}

/// `second ∘ first`: operators `{Fⱼ Eᵢ}`.
pub fn compose(first: &KrausChannel, second: &KrausChannel) -> Result<KrausChannel, ChannelError> {
    if first.qubits != second.qubits {
        return Err(ChannelError::QubitMismatch(first.qubits, second.qubits));
    }
    let mut operators = Vec::with_capacity(first.operators.len() * second.operators.len());
    for f in &second.operators {
        for e in &first.operators {
            let op = f * e;
            if op.max_abs() > 0.0 {
                operators.push(op);
            }
        }
    }
    if operators.is_empty() {
        operators.push(ComplexMatrix::zeros(first.dim(), first.dim()));
    }
    Ok(KrausChannel {
        qubits: first.qubits,
        operators,
    })
}

/// Max entrywise `|Σ Eₖ†Eₖ − I|`.
pub fn validate_completeness(c: &KrausChannel) -> f64 {
    let dim = c.dim();
    let mut sum = ComplexMatrix::zeros(dim, dim);
    for e in &c.operators {
        sum = &sum + &(&e.dagger() * e);
    }
    sum.max_abs_diff(&ComplexMatrix::identity(dim))
}

/// Applies a complete channel and re-validates the output state.
pub fn apply_channel(c: &KrausChannel, rho: &DensityMatrix) -> Result<DensityMatrix, ChannelError> {
    if c.qubits != rho.qubit_count() {
        return Err(ChannelError::QubitMismatch(c.qubits, rho.qubit_count()));
    }
    let dev = validate_completeness(c);
    if dev > COMPLETENESS_TOL {
        return Err(ChannelError::Incomplete(dev));
    }
    let out = c.apply_to_operator(rho.matrix())?;
    Ok(DensityMatrix::new(out)?)
}

/// Simulator fast path: the caller guarantees completeness, so only the
/// Hermitian part is kept to stop rounding drift.
pub(crate) fn evolve_in_place(state: &mut ComplexMatrix, c: &KrausChannel, sel: &QubitSelection) {
    let out = c.apply_on(state, sel);
    *state = out.hermitian_part();
}

/// Convenience for tests and examples: a one-qubit channel from explicit operators.
pub fn channel_from(ops: &[[[Complex64; 2]; 2]]) -> Result<KrausChannel, ChannelError> {
    KrausChannel::new(ops.iter().map(|rows| ComplexMatrix::from_rows(rows)).collect())
}

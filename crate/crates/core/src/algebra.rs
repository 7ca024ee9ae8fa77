// Copyright 2026 The qptkit Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex matrices, the standard gate dictionary, tensor embedding and
//! Pauli expectation values.
//!
//! Qubit ordering is little-endian throughout the crate: qubit `q[0]` is the
//! least-significant bit of a computational-basis index. Multi-qubit labels
//! (Pauli strings, measurement settings, bitstrings) are written with the
//! highest qubit leftmost, so the label `"XZ"` denotes `X ⊗ Z` with `Z` acting
//! on qubit 0.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Shorthand for `Complex64::new(re, im)`.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Matrices larger than this (5 qubits) are rejected.
pub const MAX_QUBITS: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("entry count {entries} does not match {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, entries: usize },
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("target qubit {qubit} is out of range for {qubits} qubits")]
    TargetOutOfRange { qubit: usize, qubits: usize },
    #[error("target qubit {0} listed more than once")]
    DuplicateTarget(usize),
    #[error("unknown gate name `{0}`")]
    UnknownGate(String),
    #[error("invalid Pauli string `{0}`")]
    InvalidPauli(String),
    #[error("expectation value has imaginary part {0:e}")]
    NotReal(f64),
    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),
    #[error("qubit count {0} outside the supported range 1..=5")]
    QubitCount(usize),
}

/// A dense complex matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, AlgebraError> {
        if rows * cols != data.len() {
            return Err(AlgebraError::ShapeMismatch {
                rows,
                cols,
                entries: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(AlgebraError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a square or rectangular matrix from nested rows. Panics on ragged input.
    pub fn from_rows<const C: usize>(rows: &[[Complex64; C]]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self {
            rows: rows.len(),
            cols: C,
            data,
        }
    }

    pub fn from_real_rows<const C: usize>(rows: &[[f64; C]]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().map(|&x| c64(x, 0.0))).collect();
        Self {
            rows: rows.len(),
            cols: C,
            data,
        }
    }

    pub fn diagonal(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// `|ket⟩⟨bra|` for two amplitude vectors.
    pub fn outer(ket: &[Complex64], bra: &[Complex64]) -> Self {
        let mut m = Self::zeros(ket.len(), bra.len());
        for (i, a) in ket.iter().enumerate() {
            for (j, b) in bra.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        m
    }

    /// The matrix unit `|row⟩⟨col|` of dimension `dim`.
    pub fn unit(dim: usize, row: usize, col: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        m[(row, col)] = ONE;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Checked product; `*` panics on mismatched shapes instead.
    pub fn matmul(&self, rhs: &Self) -> Result<Self, AlgebraError> {
        if self.cols != rhs.rows {
            return Err(AlgebraError::DimensionMismatch {
                expected: self.cols,
                found: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let rows = self.rows * rhs.rows;
        let cols = self.cols * rhs.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..rhs.rows {
                    for l in 0..rhs.cols {
                        out[(i * rhs.rows + k, j * rhs.cols + l)] = a * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// Largest entrywise modulus of `self - other`. Shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.max_abs_diff(other) <= tol
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let prod = &self.dagger() * self;
        prod.max_abs_diff(&Self::identity(self.rows)) <= tol
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        (self + &self.dagger()).scale(c64(0.5, 0.0))
    }

    /// `Tr(self · rhs)` without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> Complex64 {
        assert_eq!(self.cols, rhs.rows);
        assert_eq!(self.rows, rhs.cols);
        let mut acc = ZERO;
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self[(i, k)] * rhs[(k, i)];
            }
        }
        acc
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub(crate) fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }

    /// Real eigenvalues of a Hermitian matrix, ascending. The input is
    /// symmetrized first.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let sym = self.hermitian_part().to_nalgebra();
        let mut vals: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        vals
    }

    /// Eigen-decomposition of the Hermitian part: `(eigenvalues, eigenvectors as columns)`.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, Self) {
        let eig = self.hermitian_part().to_nalgebra().symmetric_eigen();
        let vals = eig.eigenvalues.iter().copied().collect();
        (vals, Self::from_nalgebra(&eig.eigenvectors))
    }

    /// Rebuilds `V diag(f(λ)) V†` from the Hermitian eigen-decomposition.
    pub fn hermitian_map(&self, f: impl Fn(f64) -> f64) -> Self {
        let (vals, vecs) = self.hermitian_eigen();
        let d = self.rows;
        let mut out = Self::zeros(d, d);
        for (k, &lam) in vals.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..d {
                let vi = vecs[(i, k)] * w;
                for j in 0..d {
                    out[(i, j)] += vi * vecs[(j, k)].conj();
                }
            }
        }
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Free-function form of [`ComplexMatrix::kron`].
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Free-function form of [`ComplexMatrix::dagger`].
pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    a.dagger()
}

/// Gates of the Clifford+T library.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateLabel {
    I,
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    T,
    Tdg,
    CX,
}

impl GateLabel {
    /// Every label, single-qubit gates first.
    pub const ALL: [GateLabel; 10] = [
        GateLabel::I,
        GateLabel::X,
        GateLabel::Y,
        GateLabel::Z,
        GateLabel::H,
        GateLabel::S,
        GateLabel::Sdg,
        GateLabel::T,
        GateLabel::Tdg,
        GateLabel::CX,
    ];

    /// The nine single-qubit gates in the row order of the published fidelity tables.
    pub const SINGLE_QUBIT: [GateLabel; 9] = [
        GateLabel::I,
        GateLabel::X,
        GateLabel::Y,
        GateLabel::Z,
        GateLabel::H,
        GateLabel::T,
        GateLabel::Tdg,
        GateLabel::S,
        GateLabel::Sdg,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateLabel::CX => 2,
            _ => 1,
        }
    }

    /// Lower-case OpenQASM mnemonic.
    pub fn qasm_name(self) -> &'static str {
        match self {
            GateLabel::I => "id",
            GateLabel::X => "x",
            GateLabel::Y => "y",
            GateLabel::Z => "z",
            GateLabel::H => "h",
            GateLabel::S => "s",
            GateLabel::Sdg => "sdg",
            GateLabel::T => "t",
            GateLabel::Tdg => "tdg",
            GateLabel::CX => "cx",
        }
    }

    pub fn from_qasm(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.qasm_name() == name)
    }

    pub fn matrix(self) -> ComplexMatrix {
        standard_gate(self)
    }
}

impl fmt::Display for GateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GateLabel::I => "I",
            GateLabel::X => "X",
            GateLabel::Y => "Y",
            GateLabel::Z => "Z",
            GateLabel::H => "H",
            GateLabel::S => "S",
            GateLabel::Sdg => "Sdg",
            GateLabel::T => "T",
            GateLabel::Tdg => "Tdg",
            GateLabel::CX => "CX",
        };
        f.write_str(s)
    }
}

impl FromStr for GateLabel {
    type Err = AlgebraError;

    /// Accepts either the display name (`Sdg`) or the QASM mnemonic (`sdg`), case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        let alias = match lower.as_str() {
            "i" => "id",
            "cnot" => "cx",
            "s†" | "sdag" => "sdg",
            "t†" | "tdag" => "tdg",
            other => other,
        };
        Self::from_qasm(alias).ok_or_else(|| AlgebraError::UnknownGate(s.to_string()))
    }
}

/// Textbook matrix of a gate. `CX` takes its control as the more significant
/// of its two local qubits.
pub fn standard_gate(label: GateLabel) -> ComplexMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let w = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
    match label {
        GateLabel::I => ComplexMatrix::identity(2),
        GateLabel::X => ComplexMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]]),
        GateLabel::Y => ComplexMatrix::from_rows(&[[ZERO, -I], [I, ZERO]]),
        GateLabel::Z => ComplexMatrix::from_real_rows(&[[1.0, 0.0], [0.0, -1.0]]),
        GateLabel::H => ComplexMatrix::from_real_rows(&[[h, h], [h, -h]]),
        GateLabel::S => ComplexMatrix::diagonal(&[ONE, I]),
        GateLabel::Sdg => ComplexMatrix::diagonal(&[ONE, -I]),
        GateLabel::T => ComplexMatrix::diagonal(&[ONE, w]),
        GateLabel::Tdg => ComplexMatrix::diagonal(&[ONE, w.conj()]),
        GateLabel::CX => ComplexMatrix::from_real_rows(&[
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ]),
    }
}

/// Precomputed index bookkeeping for acting on a subset of qubits of an
/// `n`-qubit register. `targets[0]` is the most significant local bit.
#[derive(Debug, Clone)]
pub(crate) struct QubitSelection {
    /// Global offset contributed by each local index.
    offsets: Vec<usize>,
    /// Global indices with every target bit cleared.
    bases: Vec<usize>,
}

impl QubitSelection {
    pub(crate) fn new(targets: &[usize], n: usize) -> Result<Self, AlgebraError> {
        let mut mask = 0usize;
        for &t in targets {
            if t >= n {
                return Err(AlgebraError::TargetOutOfRange { qubit: t, qubits: n });
            }
            if mask & (1 << t) != 0 {
                return Err(AlgebraError::DuplicateTarget(t));
            }
            mask |= 1 << t;
        }
        let k = targets.len();
        let offsets = (0..1usize << k)
            .map(|local| {
                targets
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| local >> (k - 1 - i) & 1 == 1)
                    .map(|(_, &t)| 1usize << t)
                    .sum()
            })
            .collect();
        let bases = (0..1usize << n).filter(|g| g & mask == 0).collect();
        Ok(Self { offsets, bases })
    }

    pub(crate) fn local_dim(&self) -> usize {
        self.offsets.len()
    }

    /// `op · m`, with `op` acting on the selected qubits of the row index.
    pub(crate) fn left_apply(&self, op: &ComplexMatrix, m: &ComplexMatrix) -> ComplexMatrix {
        let ld = self.local_dim();
        let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
        let mut buf = vec![ZERO; ld];
        for col in 0..m.cols() {
            for &base in &self.bases {
                for (l, off) in self.offsets.iter().enumerate() {
                    buf[l] = m[(base + off, col)];
                }
                for (r, off) in self.offsets.iter().enumerate() {
                    let mut acc = ZERO;
                    for (l, b) in buf.iter().enumerate() {
                        acc += op[(r, l)] * b;
                    }
                    out[(base + off, col)] = acc;
                }
            }
        }
        out
    }

    /// `m · op†`, with `op` acting on the selected qubits of the column index.
    pub(crate) fn right_apply_dagger(&self, op: &ComplexMatrix, m: &ComplexMatrix) -> ComplexMatrix {
        let ld = self.local_dim();
        let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
        let mut buf = vec![ZERO; ld];
        for row in 0..m.rows() {
            for &base in &self.bases {
                for (l, off) in self.offsets.iter().enumerate() {
                    buf[l] = m[(row, base + off)];
                }
                for (c, off) in self.offsets.iter().enumerate() {
                    let mut acc = ZERO;
                    for (l, b) in buf.iter().enumerate() {
                        acc += b * op[(c, l)].conj();
                    }
                    out[(row, base + off)] = acc;
                }
            }
        }
        out
    }
}

/// Lifts `gate` to an `n`-qubit operator acting on `targets` (most
/// significant local qubit first) and as identity elsewhere.
pub fn embed_gate(gate: &ComplexMatrix, targets: &[usize], n: usize) -> Result<ComplexMatrix, AlgebraError> {
    if n == 0 || n > MAX_QUBITS {
        return Err(AlgebraError::QubitCount(n));
    }
    let local = 1usize << targets.len();
    if !gate.is_square() || gate.rows() != local {
        return Err(AlgebraError::DimensionMismatch {
            expected: local,
            found: gate.rows(),
        });
    }
    let sel = QubitSelection::new(targets, n)?;
    let dim = 1usize << n;
    let mut out = ComplexMatrix::zeros(dim, dim);
    for &base in &sel.bases {
        for (r, roff) in sel.offsets.iter().enumerate() {
            for (c, coff) in sel.offsets.iter().enumerate() {
                out[(base + roff, base + coff)] = gate[(r, c)];
            }
        }
    }
    Ok(out)
}

/// Single-qubit Pauli factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> ComplexMatrix {
        match self {
            Pauli::I => standard_gate(GateLabel::I),
            Pauli::X => standard_gate(GateLabel::X),
            Pauli::Y => standard_gate(GateLabel::Y),
            Pauli::Z => standard_gate(GateLabel::Z),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A tensor product of Paulis, highest qubit first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(factors: Vec<Pauli>) -> Self {
        Self(factors)
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![Pauli::I; n])
    }

    /// All `4ⁿ` strings in lexicographic `I < X < Y < Z` order.
    pub fn all(n: usize) -> Vec<PauliString> {
        (0..4usize.pow(n as u32))
            .map(|mut idx| {
                let mut f = vec![Pauli::I; n];
                for slot in f.iter_mut().rev() {
                    *slot = Pauli::ALL[idx % 4];
                    idx /= 4;
                }
                PauliString(f)
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[Pauli] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    pub fn matrix(&self) -> ComplexMatrix {
        self.0
            .iter()
            .fold(ComplexMatrix::identity(1), |acc, p| acc.kron(&p.matrix()))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|p| write!(f, "{}", p.symbol()))
    }
}

impl FromStr for PauliString {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(AlgebraError::InvalidPauli(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .and_then(|v| {
                if v.is_empty() {
                    Err(AlgebraError::InvalidPauli(s.to_string()))
                } else {
                    Ok(PauliString(v))
                }
            })
    }
}

/// Tolerances shared by density-matrix validation.
pub const STATE_TOL: f64 = 1e-9;

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, AlgebraError> {
        let qubits = qubits_for_dim(matrix.rows())?;
        if !matrix.is_square() {
            return Err(AlgebraError::NotDensityMatrix(format!(
                "{}x{} is not square",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let herm = matrix.hermiticity_error();
        if herm > STATE_TOL {
            return Err(AlgebraError::NotDensityMatrix(format!("Hermiticity error {herm:e}")));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > STATE_TOL {
            return Err(AlgebraError::NotDensityMatrix(format!("trace {tr}")));
        }
        let min = matrix.hermitian_eigenvalues()[0];
        if min < -STATE_TOL {
            return Err(AlgebraError::NotDensityMatrix(format!("minimum eigenvalue {min:e}")));
        }
        Ok(Self { qubits, matrix })
    }

    /// Skips validation; callers guarantee the invariants.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        let qubits = matrix.rows().trailing_zeros() as usize;
        Self { qubits, matrix }
    }

    /// `|index⟩⟨index|` on `n` qubits.
    pub fn basis_state(n: usize, index: usize) -> Result<Self, AlgebraError> {
        if n == 0 || n > MAX_QUBITS {
            return Err(AlgebraError::QubitCount(n));
        }
        let dim = 1usize << n;
        if index >= dim {
            return Err(AlgebraError::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        Ok(Self {
            qubits: n,
            matrix: ComplexMatrix::unit(dim, index, index),
        })
    }

    /// `|ψ⟩⟨ψ|` for a state vector, normalized on the way in.
    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self, AlgebraError> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(AlgebraError::NotDensityMatrix("zero state vector".into()));
        }
        let v: Vec<Complex64> = amplitudes.iter().map(|a| a / norm).collect();
        let qubits = qubits_for_dim(v.len())?;
        Ok(Self {
            qubits,
            matrix: ComplexMatrix::outer(&v, &v),
        })
    }

    pub fn maximally_mixed(n: usize) -> Result<Self, AlgebraError> {
        if n == 0 || n > MAX_QUBITS {
            return Err(AlgebraError::QubitCount(n));
        }
        let dim = 1usize << n;
        Ok(Self {
            qubits: n,
            matrix: ComplexMatrix::identity(dim).scale(c64(1.0 / dim as f64, 0.0)),
        })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `ρ ⊗ σ`, with `self` on the more significant qubits.
    pub fn tensor(&self, other: &Self) -> Result<Self, AlgebraError> {
        let qubits = self.qubits + other.qubits;
        if qubits > MAX_QUBITS {
            return Err(AlgebraError::QubitCount(qubits));
        }
        Ok(Self {
            qubits,
            matrix: self.matrix.kron(&other.matrix),
        })
    }

    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }

    /// Diagonal populations, clipped at zero.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re.max(0.0)).collect()
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.matrix.approx_eq(&other.matrix, tol)
    }
}

fn qubits_for_dim(dim: usize) -> Result<usize, AlgebraError> {
    if !dim.is_power_of_two() || dim < 2 {
        return Err(AlgebraError::NotDensityMatrix(format!(
            "dimension {dim} is not a power of two"
        )));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(AlgebraError::QubitCount(n));
    }
    Ok(n)
}

/// `Tr(P ρ)` for a Hermitian observable `P`.
pub fn pauli_expectation(rho: &DensityMatrix, pauli: &ComplexMatrix) -> Result<f64, AlgebraError> {
    if pauli.rows() != rho.dim() || pauli.cols() != rho.dim() {
        return Err(AlgebraError::DimensionMismatch {
            expected: rho.dim(),
            found: pauli.rows(),
        });
    }
    let value = pauli.trace_product(rho.matrix());
    if value.im.abs() > STATE_TOL {
        return Err(AlgebraError::NotReal(value.im));
    }
    Ok(value.re)
}

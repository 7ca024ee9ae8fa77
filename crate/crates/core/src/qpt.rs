// Copyright 2026 The qptkit Authors
// SPDX-License-Identifier: Apache-2.0

//! Process tomography by linear inversion.
//!
//! A process `ε` on `n ∈ {1, 2}` qubits (`d = 2ⁿ`) is written in the χ
//! representation over a fixed operator set `{Ẽₘ}`:
//!
//! ```text
//! ε(ρ) = Σₘₙ χₘₙ Ẽₘ ρ Ẽₙ†
//! ```
//!
//! The input basis is the `d²` matrix units `ρⱼ = |a⟩⟨b|`, `j = a·d + b`.
//! Outputs `ε(ρⱼ) = Σₖ λⱼₖ ρₖ` are rebuilt from state tomography of physical
//! preparations, `Ẽₘ ρⱼ Ẽₙ† = Σₖ βʲᵏₘₙ ρₖ` is fixed by the bases, and
//! `χ = β⁻¹ λ`.
//!
//! Vector layouts are row-major: λ is indexed `j·d² + k`, `vec(χ)` is
//! indexed `m·d² + n`, and β has rows `(j, k)` and columns `(m, n)`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, LU};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{c64, AlgebraError, ComplexMatrix, DensityMatrix, GateLabel, Pauli, I, ONE, ZERO};
use crate::backend::{execute, execute_exact, BackendError, BackendModel};
use crate::circuit::{Circuit, CircuitError};
use crate::noise::{ChannelError, KrausChannel};
use crate::qst::{
    append_setting_on, qst_settings, reconstruct_from_dataset, MeasurementSetting, Outcomes, SettingRecord,
    TomographyDataset, TomographyError,
};

/// Recipes must reproduce their matrix unit to this precision.
pub const RECIPE_TOL: f64 = 1e-12;

/// β is rejected as numerically singular above this 1-norm condition number.
pub const BETA_CONDITION_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QptError {
    #[error("process tomography supports 1 or 2 qubits, got {0}")]
    UnsupportedQubits(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("recipe for basis element {target} misses its target by {error:e}")]
    Recipe { target: usize, error: f64 },
    #[error("expected {expected} process outputs, found {found}")]
    MissingOutputs { expected: usize, found: usize },
    #[error("β is numerically singular (condition number {0:e})")]
    SingularBeta(f64),
    #[error("operator set is linearly dependent")]
    SingularGram,
    #[error("fidelity is undefined for a zero χ matrix")]
    ZeroNorm,
    #[error("fidelity has imaginary residue {0:e}")]
    ComplexFidelity(f64),
    #[error("gate {gate} acts on {arity} qubit(s) but {lines} line(s) were given")]
    Lines {
        gate: GateLabel,
        arity: usize,
        lines: usize,
    },
    #[error("qubit line {0} appears twice")]
    RepeatedLine(usize),
    #[error("qubit line {line} is outside the {qubits}-qubit backend")]
    LineOutOfRange { line: usize, qubits: usize },
    #[error("{context}: {error}")]
    Backend { context: String, error: BackendError },
    #[error(transparent)]
    Tomography(#[from] TomographyError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

fn check_n(n: usize) -> Result<(), QptError> {
    if n == 1 || n == 2 {
        Ok(())
    } else {
        Err(QptError::UnsupportedQubits(n))
    }
}

fn check_dim(expected: usize, found: usize) -> Result<(), QptError> {
    if expected == found {
        Ok(())
    } else {
        Err(QptError::DimensionMismatch { expected, found })
    }
}

/// The ordered operators `Ẽₘ`: Pauli products with a factor `(−i)` per `Y`,
/// which makes every operator real.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedOperatorSet {
    qubits: usize,
    operators: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl FixedOperatorSet {
    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    /// Labels such as `I`, `-iY`, `-iXY`, `-YY`.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `Gₘₙ = Tr(Ẽₘ† Ẽₙ)`.
    pub fn gram(&self) -> ComplexMatrix {
        let k = self.len();
        let mut g = ComplexMatrix::zeros(k, k);
        for (m, em) in self.operators.iter().enumerate() {
            let emd = em.dagger();
            for (n, en) in self.operators.iter().enumerate() {
                g[(m, n)] = emd.trace_product(en);
            }
        }
        g
    }

    /// Coefficients `e` with `A = Σₘ eₘ Ẽₘ`.
    pub fn expand(&self, a: &ComplexMatrix) -> Result<Vec<Complex64>, QptError> {
        check_dim(self.dim(), a.rows())?;
        check_dim(self.dim(), a.cols())?;
        let rhs: Vec<Complex64> = self.operators.iter().map(|e| e.dagger().trace_product(a)).collect();
        let sol = self
            .gram()
            .to_nalgebra()
            .lu()
            .solve(&DVector::from_vec(rhs))
            .ok_or(QptError::SingularGram)?;
        Ok(sol.iter().copied().collect())
    }
}

/// The operator set for `n` qubits in its fixed order
/// (`II, IX, -iIY, IZ, XI, …, ZZ` for two qubits).
pub fn fixed_operator_set(n: usize) -> Result<FixedOperatorSet, QptError> {
    check_n(n)?;
    let mut operators = Vec::new();
    let mut labels = Vec::new();
    for idx in 0..4usize.pow(n as u32) {
        let factors: Vec<Pauli> = (0..n).rev().map(|q| Pauli::ALL[idx >> (2 * q) & 3]).collect();
        let ys = factors.iter().filter(|&&p| p == Pauli::Y).count();
        let phase = [ONE, -I, -ONE, I][ys % 4];
        let m = factors
            .iter()
            .fold(ComplexMatrix::identity(1), |acc, p| acc.kron(&p.matrix()))
            .scale(phase);
        let prefix = ["", "-i", "-", "i"][ys % 4];
        let body: String = factors.iter().map(|p| p.symbol()).collect();
        operators.push(m);
        labels.push(format!("{prefix}{body}"));
    }
    Ok(FixedOperatorSet {
        qubits: n,
        operators,
        labels,
    })
}

/// Matrix units `|a⟩⟨b|`, element `j = a·d + b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputBasis {
    qubits: usize,
}

impl InputBasis {
    pub fn new(n: usize) -> Result<Self, QptError> {
        check_n(n)?;
        Ok(Self { qubits: n })
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn len(&self) -> usize {
        self.dim() * self.dim()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(a, b)` for element `j`.
    pub fn unit_indices(&self, j: usize) -> (usize, usize) {
        (j / self.dim(), j % self.dim())
    }

    pub fn element(&self, j: usize) -> ComplexMatrix {
        let (a, b) = self.unit_indices(j);
        ComplexMatrix::unit(self.dim(), a, b)
    }

    pub fn elements(&self) -> Vec<ComplexMatrix> {
        (0..self.len()).map(|j| self.element(j)).collect()
    }

    /// Coordinates of `m` in this basis: its entries in row-major order.
    pub fn coordinates(&self, m: &ComplexMatrix) -> Result<Vec<Complex64>, QptError> {
        check_dim(self.dim(), m.rows())?;
        check_dim(self.dim(), m.cols())?;
        Ok(m.as_slice().to_vec())
    }
}

/// Physically preparable single-qubit pure states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrepState {
    /// `|0⟩`, no gates.
    Zero,
    /// `|1⟩`, via `X`.
    One,
    /// `|+⟩`, via `H`.
    Plus,
    /// `|r+⟩ = (|0⟩ + i|1⟩)/√2`, via `H` then `S`.
    RPlus,
}

impl PrepState {
    pub const ALL: [PrepState; 4] = [PrepState::Zero, PrepState::One, PrepState::Plus, PrepState::RPlus];

    pub fn gates(self) -> &'static [GateLabel] {
        match self {
            PrepState::Zero => &[],
            PrepState::One => &[GateLabel::X],
            PrepState::Plus => &[GateLabel::H],
            PrepState::RPlus => &[GateLabel::H, GateLabel::S],
        }
    }

    pub fn amplitudes(self) -> [Complex64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            PrepState::Zero => [ONE, ZERO],
            PrepState::One => [ZERO, ONE],
            PrepState::Plus => [c64(h, 0.0), c64(h, 0.0)],
            PrepState::RPlus => [c64(h, 0.0), c64(0.0, h)],
        }
    }

    pub fn density(self) -> ComplexMatrix {
        let a = self.amplitudes();
        ComplexMatrix::outer(&a, &a)
    }

    pub fn name(self) -> &'static str {
        match self {
            PrepState::Zero => "0",
            PrepState::One => "1",
            PrepState::Plus => "+",
            PrepState::RPlus => "r+",
        }
    }
}

/// A product preparation, most significant qubit first.
pub type Preparation = Vec<PrepState>;

fn preparation_density(p: &[PrepState]) -> ComplexMatrix {
    p.iter()
        .fold(ComplexMatrix::identity(1), |acc, s| acc.kron(&s.density()))
}

/// Prepares `p` on `lines` (`lines[i]` takes `p[i]`) of a `width`-qubit circuit.
pub fn preparation_circuit(p: &[PrepState], lines: &[usize], width: usize) -> Result<Circuit, CircuitError> {
    let mut c = Circuit::new(width, 0)?;
    for (&line, state) in lines.iter().zip(p) {
        for &g in state.gates() {
            c.gate(g, &[line])?;
        }
    }
    Ok(c)
}

/// Writes one input matrix unit as a combination of physical preparations.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparationRecipe {
    target: usize,
    terms: Vec<(Complex64, Preparation)>,
}

impl PreparationRecipe {
    /// Fails unless `Σ coefficient × ρ(preparation)` equals element `target`
    /// of `basis` to [`RECIPE_TOL`].
    pub fn new(target: usize, terms: Vec<(Complex64, Preparation)>, basis: &InputBasis) -> Result<Self, QptError> {
        let recipe = Self { target, terms };
        let error = recipe.realized().max_abs_diff(&basis.element(target));
        if error > RECIPE_TOL {
            return Err(QptError::Recipe { target, error });
        }
        Ok(recipe)
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn terms(&self) -> &[(Complex64, Preparation)] {
        &self.terms
    }

    /// `Σ coefficient × ρ(preparation)`.
    pub fn realized(&self) -> ComplexMatrix {
        let d = 1usize << self.terms[0].1.len();
        self.terms.iter().fold(ComplexMatrix::zeros(d, d), |acc, (w, p)| {
            &acc + &preparation_density(p).scale(*w)
        })
    }
}

fn single_qubit_terms(j: usize) -> Vec<(Complex64, PrepState)> {
    use PrepState::*;
    let half = |re: f64, im: f64| c64(re / 2.0, im / 2.0);
    match j {
        0 => vec![(ONE, Zero)],
        1 => vec![
            (ONE, Plus),
            (I, RPlus),
            (half(-1.0, -1.0), Zero),
            (half(-1.0, -1.0), One),
        ],
        2 => vec![
            (ONE, Plus),
            (-I, RPlus),
            (half(-1.0, 1.0), Zero),
            (half(-1.0, 1.0), One),
        ],
        3 => vec![(ONE, One)],
        _ => unreachable!("single-qubit basis has four elements"),
    }
}

/// One recipe per input basis element. Two-qubit recipes are tensor products
/// of single-qubit ones.
pub fn preparation_recipes(n: usize) -> Result<Vec<PreparationRecipe>, QptError> {
    let basis = InputBasis::new(n)?;
    let d = basis.dim();
    (0..basis.len())
        .map(|j| {
            let (a, b) = basis.unit_indices(j);
            let mut terms: Vec<(Complex64, Preparation)> = vec![(ONE, Vec::new())];
            for q in (0..n).rev() {
                let local = (a >> q & 1) * 2 + (b >> q & 1);
                terms = terms
                    .iter()
                    .flat_map(|(w, p)| {
                        single_qubit_terms(local).into_iter().map(move |(v, s)| {
                            let mut p = p.clone();
                            p.push(s);
                            (w * v, p)
                        })
                    })
                    .collect();
            }
            debug_assert!(a < d && b < d);
            PreparationRecipe::new(j, terms, &basis)
        })
        .collect()
}

/// All `4ⁿ` product preparations, in `PrepState` order.
pub fn physical_preparations(n: usize) -> Result<Vec<Preparation>, QptError> {
    check_n(n)?;
    Ok((0..4usize.pow(n as u32))
        .map(|idx| (0..n).rev().map(|q| PrepState::ALL[idx >> (2 * q) & 3]).collect())
        .collect())
}

/// `d⁴ × d⁴` map from `vec(χ)` to λ.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaTensor {
    qubits: usize,
    matrix: ComplexMatrix,
}

impl BetaTensor {
    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// `β[(j, k), (m, n)]`.
    pub fn get(&self, j: usize, k: usize, m: usize, n: usize) -> Complex64 {
        let d2 = 1usize << (2 * self.qubits);
        self.matrix[(j * d2 + k, m * d2 + n)]
    }

    /// `‖β‖₁ ‖β⁻¹‖₁`.
    pub fn condition_number(&self) -> f64 {
        let m = self.matrix.to_nalgebra();
        match m.clone().lu().try_inverse() {
            Some(inv) => one_norm(&m) * one_norm(&inv),
            None => f64::INFINITY,
        }
    }

    pub fn check_condition(&self) -> Result<f64, QptError> {
        let k = self.condition_number();
        if k.is_finite() && k <= BETA_CONDITION_LIMIT {
            Ok(k)
        } else {
            Err(QptError::SingularBeta(k))
        }
    }
}

fn one_norm(m: &DMatrix<Complex64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Reads `Ẽₘ ρⱼ Ẽₙ†` off entry by entry.
pub fn beta_tensor(basis: &InputBasis, ops: &FixedOperatorSet) -> Result<BetaTensor, QptError> {
    check_dim(basis.qubit_count(), ops.qubit_count())?;
    let d2 = basis.len();
    let mut matrix = ComplexMatrix::zeros(d2 * d2, d2 * d2);
    let daggers: Vec<ComplexMatrix> = ops.operators().iter().map(|e| e.dagger()).collect();
    for j in 0..d2 {
        let rho = basis.element(j);
        for (m, em) in ops.operators().iter().enumerate() {
            let left = em * &rho;
            for (n, end) in daggers.iter().enumerate() {
                let out = &left * end;
                for (k, &v) in out.as_slice().iter().enumerate() {
                    matrix[(j * d2 + k, m * d2 + n)] = v;
                }
            }
        }
    }
    Ok(BetaTensor {
        qubits: basis.qubit_count(),
        matrix,
    })
}

/// `λⱼₖ`, indexed `j·d² + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaVector {
    qubits: usize,
    entries: Vec<Complex64>,
}

impl LambdaVector {
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.entries[j * (1 << (2 * self.qubits)) + k]
    }

    /// `Tr(Σₖ λⱼₖ ρₖ)`; 1 for a trace-preserving process and diagonal `j`.
    pub fn row_trace(&self, j: usize) -> Complex64 {
        let d = 1usize << self.qubits;
        (0..d).map(|a| self.get(j, a * d + a)).sum()
    }
}

/// `ε(ρⱼ) = Σ coefficient × output(preparation)` for every recipe.
pub fn assemble_outputs(
    recipes: &[PreparationRecipe],
    outputs: &BTreeMap<Preparation, ComplexMatrix>,
) -> Result<Vec<ComplexMatrix>, QptError> {
    let mut assembled = Vec::with_capacity(recipes.len());
    for r in recipes {
        let mut acc: Option<ComplexMatrix> = None;
        for (w, p) in r.terms() {
            let out = outputs.get(p).ok_or(QptError::MissingOutputs {
                expected: recipes.len(),
                found: outputs.len(),
            })?;
            let term = out.scale(*w);
            acc = Some(match acc {
                Some(a) => &a + &term,
                None => term,
            });
        }
        assembled.push(acc.expect("recipes have at least one term"));
    }
    Ok(assembled)
}

pub fn lambda_from_outputs(outputs: &[ComplexMatrix], basis: &InputBasis) -> Result<LambdaVector, QptError> {
    if outputs.len() != basis.len() {
        return Err(QptError::MissingOutputs {
            expected: basis.len(),
            found: outputs.len(),
        });
    }
    let mut entries = Vec::with_capacity(basis.len() * basis.len());
    for out in outputs {
        entries.extend(basis.coordinates(out)?);
    }
    Ok(LambdaVector {
        qubits: basis.qubit_count(),
        entries,
    })
}

/// Provenance carried with a χ matrix.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChiMetadata {
    pub gate: Option<GateLabel>,
    pub lines: Vec<usize>,
    pub backend: Option<String>,
    /// `None` for exact (infinite-shot) runs.
    pub shots: Option<u64>,
}

/// χ over a [`FixedOperatorSet`], with `(m, n)` in operator-set order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMatrix {
    pub matrix: ComplexMatrix,
    pub metadata: ChiMetadata,
}

impl ChiMatrix {
    pub fn new(matrix: ComplexMatrix) -> Self {
        Self {
            matrix,
            metadata: ChiMetadata::default(),
        }
    }

    pub fn qubit_count(&self) -> usize {
        (self.matrix.rows().trailing_zeros() / 2) as usize
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.matrix[(m, n)]
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Position of the largest-magnitude entry (first in row-major order on ties).
    pub fn argmax(&self) -> (usize, usize) {
        let k = self.matrix.cols();
        let mut best = (0, 0.0);
        for (i, z) in self.matrix.as_slice().iter().enumerate() {
            if z.norm() > best.1 + 1e-12 {
                best = (i, z.norm());
            }
        }
        (best.0 / k, best.0 % k)
    }

    /// Clips negative eigenvalues and rescales to the original trace.
    pub fn project_psd(&self) -> ChiMatrix {
        let tr = self.matrix.trace().re;
        let clipped = self.matrix.hermitian_map(|l| l.max(0.0));
        let ctr = clipped.trace().re;
        let matrix = if ctr > 0.0 && tr > 0.0 {
            clipped.scale(c64(tr / ctr, 0.0)).hermitian_part()
        } else {
            clipped
        };
        ChiMatrix {
            matrix,
            metadata: self.metadata.clone(),
        }
    }
}

/// A solved χ with its linear-system residual `‖β·vec(χ) − λ‖∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSolution {
    pub chi: ChiMatrix,
    pub residual: f64,
}

fn residual(beta: &ComplexMatrix, x: &[Complex64], lambda: &[Complex64]) -> f64 {
    let mut worst = 0.0f64;
    for (r, &l) in lambda.iter().enumerate() {
        let row = &beta.as_slice()[r * beta.cols()..(r + 1) * beta.cols()];
        let v: Complex64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
        worst = worst.max((v - l).norm());
    }
    worst
}

fn finish_solution(beta: &ComplexMatrix, x: Vec<Complex64>, lambda: &LambdaVector) -> ChiSolution {
    let res = residual(beta, &x, &lambda.entries);
    let k = (x.len() as f64).sqrt() as usize;
    let raw = ComplexMatrix::new(k, k, x).expect("square χ");
    ChiSolution {
        chi: ChiMatrix::new(raw.hermitian_part()),
        residual: res,
    }
}

/// Solves `β·vec(χ) = λ`, reshapes row-major and symmetrizes.
pub fn solve_chi(beta: &BetaTensor, lambda: &LambdaVector) -> Result<ChiSolution, QptError> {
    check_dim(beta.matrix.rows(), lambda.entries.len())?;
    beta.check_condition()?;
    let lu = beta.matrix.to_nalgebra().lu();
    solve_with(&lu, beta, lambda)
}

fn solve_with(
    lu: &LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    beta: &BetaTensor,
    lambda: &LambdaVector,
) -> Result<ChiSolution, QptError> {
    check_dim(beta.matrix.rows(), lambda.entries.len())?;
    let x = lu
        .solve(&DVector::from_column_slice(&lambda.entries))
        .ok_or(QptError::SingularBeta(f64::INFINITY))?;
    Ok(finish_solution(&beta.matrix, x.iter().copied().collect(), lambda))
}

/// `χ = e e†` where `U = Σₘ eₘ Ẽₘ`.
pub fn theoretical_chi(u: &ComplexMatrix, ops: &FixedOperatorSet) -> Result<ChiMatrix, QptError> {
    let e = ops.expand(u)?;
    let k = e.len();
    let mut m = ComplexMatrix::zeros(k, k);
    for a in 0..k {
        for b in 0..k {
            m[(a, b)] = e[a] * e[b].conj();
        }
    }
    Ok(ChiMatrix::new(m))
}

pub fn theoretical_chi_for(gate: GateLabel, ops: &FixedOperatorSet) -> Result<ChiMatrix, QptError> {
    let mut chi = theoretical_chi(&gate.matrix(), ops)?;
    chi.metadata.gate = Some(gate);
    Ok(chi)
}

/// `ρ ↦ Σₘₙ χₘₙ Ẽₘ ρ Ẽₙ†`.
#[derive(Debug, Clone)]
pub struct ChiChannel {
    chi: ComplexMatrix,
    ops: FixedOperatorSet,
}

pub fn chi_to_channel(chi: &ChiMatrix, ops: &FixedOperatorSet) -> Result<ChiChannel, QptError> {
    check_dim(ops.len(), chi.matrix.rows())?;
    Ok(ChiChannel {
        chi: chi.matrix.clone(),
        ops: ops.clone(),
    })
}

impl ChiChannel {
    /// Linear extension to arbitrary operators.
    pub fn apply_operator(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix, QptError> {
        let d = self.ops.dim();
        check_dim(d, rho.rows())?;
        check_dim(d, rho.cols())?;
        let mut out = ComplexMatrix::zeros(d, d);
        let daggers: Vec<ComplexMatrix> = self.ops.operators().iter().map(|e| e.dagger()).collect();
        for (m, em) in self.ops.operators().iter().enumerate() {
            let left = em * rho;
            for (n, end) in daggers.iter().enumerate() {
                let w = self.chi[(m, n)];
                if w != ZERO {
                    out = &out + &(&left * end).scale(w);
                }
            }
        }
        Ok(out)
    }

    /// Applies to a state and validates the result.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix, QptError> {
        Ok(DensityMatrix::new(self.apply_operator(rho.matrix())?)?)
    }
}

/// `Tr(χ_exp χ_th†)` normalized by both Frobenius norms, as a complex number.
pub fn process_overlap(chi_th: &ChiMatrix, chi_exp: &ChiMatrix) -> Result<Complex64, QptError> {
    check_dim(chi_th.matrix.rows(), chi_exp.matrix.rows())?;
    let (nt, ne) = (chi_th.frobenius_norm(), chi_exp.frobenius_norm());
    if nt == 0.0 || ne == 0.0 {
        return Err(QptError::ZeroNorm);
    }
    let num: Complex64 = chi_exp
        .matrix
        .as_slice()
        .iter()
        .zip(chi_th.matrix.as_slice())
        .map(|(e, t)| e * t.conj())
        .sum();
    Ok(num / (nt * ne))
}

/// Process fidelity; the overlap must be real to within 1e-9.
pub fn process_fidelity(chi_th: &ChiMatrix, chi_exp: &ChiMatrix) -> Result<f64, QptError> {
    let f = process_overlap(chi_th, chi_exp)?;
    if f.im.abs() > 1e-9 {
        return Err(QptError::ComplexFidelity(f.im));
    }
    Ok(f.re)
}

/// `max |Σₘₙ χₘₙ Ẽₙ†Ẽₘ − I|`.
pub fn trace_preservation_deviation(chi: &ChiMatrix, ops: &FixedOperatorSet) -> Result<f64, QptError> {
    check_dim(ops.len(), chi.matrix.rows())?;
    let d = ops.dim();
    let mut sum = ComplexMatrix::zeros(d, d);
    for (m, em) in ops.operators().iter().enumerate() {
        for (n, en) in ops.operators().iter().enumerate() {
            let w = chi.matrix[(m, n)];
            if w != ZERO {
                sum = &sum + &(&en.dagger() * em).scale(w);
            }
        }
    }
    Ok(sum.max_abs_diff(&ComplexMatrix::identity(d)))
}

/// Everything about an `n`-qubit tomography that does not depend on the process.
pub struct QptContext {
    pub ops: FixedOperatorSet,
    pub basis: InputBasis,
    pub recipes: Vec<PreparationRecipe>,
    pub preparations: Vec<Preparation>,
    pub settings: Vec<MeasurementSetting>,
    pub beta: BetaTensor,
    lu: LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl QptContext {
    pub fn build(n: usize) -> Result<Self, QptError> {
        let ops = fixed_operator_set(n)?;
        let basis = InputBasis::new(n)?;
        let beta = beta_tensor(&basis, &ops)?;
        beta.check_condition()?;
        let lu = beta.matrix.to_nalgebra().lu();
        Ok(Self {
            recipes: preparation_recipes(n)?,
            preparations: physical_preparations(n)?,
            settings: qst_settings(n)?,
            ops,
            basis,
            beta,
            lu,
        })
    }

    /// Shared, lazily built context for `n ∈ {1, 2}`.
    pub fn get(n: usize) -> Result<&'static QptContext, QptError> {
        static CONTEXTS: [OnceLock<Result<QptContext, QptError>>; 2] = [OnceLock::new(), OnceLock::new()];
        check_n(n)?;
        CONTEXTS[n - 1]
            .get_or_init(|| QptContext::build(n))
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn execution_count(&self) -> usize {
        self.preparations.len() * self.settings.len()
    }

    pub fn solve(&self, lambda: &LambdaVector) -> Result<ChiSolution, QptError> {
        solve_with(&self.lu, &self.beta, lambda)
    }
}

/// Something that can be prepared, run and tomographed.
pub trait ProcessExecutor: Sync {
    fn qubit_count(&self) -> usize;

    /// Readout statistics for `preparation` followed by the process, read
    /// out in `setting`. `index` numbers the execution within one tomography.
    fn run(&self, preparation: &[PrepState], setting: &MeasurementSetting, index: usize) -> Result<Outcomes, QptError>;
}

/// Sample count per execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    Exact,
    Sampled(u64),
}

impl Shots {
    pub fn count(self) -> Option<u64> {
        match self {
            Shots::Exact => None,
            Shots::Sampled(n) => Some(n),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent per-execution seed.
pub fn execution_seed(seed: u64, index: usize) -> u64 {
    splitmix64(seed ^ splitmix64(index as u64))
}

/// A gate on given lines of a simulated backend.
pub struct BackendProcess<'a> {
    pub gate: GateLabel,
    pub lines: Vec<usize>,
    pub backend: &'a BackendModel,
    pub shots: Shots,
    pub seed: u64,
}

impl<'a> BackendProcess<'a> {
    pub fn new(
        gate: GateLabel,
        lines: &[usize],
        backend: &'a BackendModel,
        shots: Shots,
        seed: u64,
    ) -> Result<Self, QptError> {
        if lines.len() != gate.arity() {
            return Err(QptError::Lines {
                gate,
                arity: gate.arity(),
                lines: lines.len(),
            });
        }
        let qubits = backend.qubit_params().len();
        for (i, &l) in lines.iter().enumerate() {
            if l >= qubits {
                return Err(QptError::LineOutOfRange { line: l, qubits });
            }
            if lines[..i].contains(&l) {
                return Err(QptError::RepeatedLine(l));
            }
        }
        let probe = Self::bare(gate, lines)?;
        backend.check_topology(&probe).map_err(|error| QptError::Backend {
            context: "placement".into(),
            error,
        })?;
        Ok(Self {
            gate,
            lines: lines.to_vec(),
            backend,
            shots,
            seed,
        })
    }

    fn width(lines: &[usize]) -> usize {
        lines.iter().max().map_or(1, |m| m + 1)
    }

    fn bare(gate: GateLabel, lines: &[usize]) -> Result<Circuit, CircuitError> {
        let mut c = Circuit::new(Self::width(lines), 0)?;
        c.gate(gate, lines)?;
        Ok(c)
    }

    /// Preparation, gate and readout for one execution.
    pub fn circuit(&self, preparation: &[PrepState], setting: &MeasurementSetting) -> Result<Circuit, QptError> {
        let mut c = preparation_circuit(preparation, &self.lines, Self::width(&self.lines))?;
        c.gate(self.gate, &self.lines)?;
        Ok(append_setting_on(&c, setting, &self.lines)?)
    }
}

impl ProcessExecutor for BackendProcess<'_> {
    fn qubit_count(&self) -> usize {
        self.lines.len()
    }

    fn run(&self, preparation: &[PrepState], setting: &MeasurementSetting, index: usize) -> Result<Outcomes, QptError> {
        let c = self.circuit(preparation, setting)?;
        let context = || {
            let prep: Vec<&str> = preparation.iter().map(|p| p.name()).collect();
            format!("prep [{}], setting {setting}", prep.join(","))
        };
        match self.shots {
            Shots::Exact => {
                let r = execute_exact(&c, self.backend).map_err(|error| QptError::Backend {
                    context: context(),
                    error,
                })?;
                Ok(Outcomes::Exact(r.probabilities.unwrap_or_default()))
            }
            Shots::Sampled(shots) => {
                let r = execute(&c, self.backend, shots, execution_seed(self.seed, index)).map_err(|error| {
                    QptError::Backend {
                        context: context(),
                        error,
                    }
                })?;
                Ok(Outcomes::Counts {
                    shots,
                    counts: r.counts.unwrap_or_default(),
                })
            }
        }
    }
}

/// An arbitrary channel with ideal preparation and readout, evaluated exactly.
pub struct ChannelProcess {
    channel: KrausChannel,
}

impl ChannelProcess {
    pub fn new(channel: KrausChannel) -> Result<Self, QptError> {
        check_n(channel.qubit_count())?;
        Ok(Self { channel })
    }
}

impl ProcessExecutor for ChannelProcess {
    fn qubit_count(&self) -> usize {
        self.channel.qubit_count()
    }

    fn run(
        &self,
        preparation: &[PrepState],
        setting: &MeasurementSetting,
        _index: usize,
    ) -> Result<Outcomes, QptError> {
        let n = self.qubit_count();
        check_dim(n, preparation.len())?;
        let out = self.channel.apply_to_operator(&preparation_density(preparation))?;
        let rotation = setting.tags().iter().fold(ComplexMatrix::identity(1), |acc, b| {
            let u = b
                .rotation()
                .iter()
                .fold(ComplexMatrix::identity(2), |u, g| &g.matrix() * &u);
            acc.kron(&u)
        });
        let rotated = &(&rotation * &out) * &rotation.dagger();
        let probabilities = (0..1usize << n)
            .map(|i| {
                let bits: String = (0..n).rev().map(|q| if i >> q & 1 == 1 { '1' } else { '0' }).collect();
                (bits, rotated[(i, i)].re.max(0.0))
            })
            .collect();
        Ok(Outcomes::Exact(probabilities))
    }
}

/// Output of one process tomography.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyRun {
    pub chi: ChiMatrix,
    pub residual: f64,
    /// Reconstructed output for each physical preparation.
    pub outputs: BTreeMap<Preparation, ComplexMatrix>,
    pub lambda: LambdaVector,
    pub executions: usize,
}

/// Runs every preparation × setting (in parallel), reconstructs each output
/// state, and solves for χ.
pub fn tomograph_process(exec: &dyn ProcessExecutor) -> Result<TomographyRun, QptError> {
    let n = exec.qubit_count();
    let ctx = QptContext::get(n)?;
    let s = ctx.settings.len();
    let results: Vec<Outcomes> = (0..ctx.execution_count())
        .into_par_iter()
        .map(|idx| exec.run(&ctx.preparations[idx / s], &ctx.settings[idx % s], idx))
        .collect::<Result<_, _>>()?;

    let mut outputs = BTreeMap::new();
    for (p, prep) in ctx.preparations.iter().enumerate() {
        let records = ctx
            .settings
            .iter()
            .zip(&results[p * s..(p + 1) * s])
            .map(|(setting, outcomes)| SettingRecord {
                setting: setting.clone(),
                outcomes: outcomes.clone(),
            })
            .collect();
        let dataset = TomographyDataset::new(n, records)?;
        outputs.insert(prep.clone(), reconstruct_from_dataset(&dataset)?.matrix);
    }
    let assembled = assemble_outputs(&ctx.recipes, &outputs)?;
    let lambda = lambda_from_outputs(&assembled, &ctx.basis)?;
    let sol = ctx.solve(&lambda)?;
    Ok(TomographyRun {
        chi: sol.chi,
        residual: sol.residual,
        outputs,
        lambda,
        executions: results.len(),
    })
}

/// A scored tomography of a backend gate.
#[derive(Debug, Clone, PartialEq)]
pub struct QptResult {
    pub chi: ChiMatrix,
    pub theory: ChiMatrix,
    pub fidelity: f64,
    pub residual: f64,
    pub trace_deviation: f64,
    /// Circuit executions (preparations × settings).
    pub executions: usize,
}

/// Tomographs `gate` on `lines` (control first for `cx`) and scores it
/// against the ideal gate.
pub fn run_qpt(
    gate: GateLabel,
    lines: &[usize],
    backend: &BackendModel,
    shots: Shots,
    seed: u64,
) -> Result<QptResult, QptError> {
    let exec = BackendProcess::new(gate, lines, backend, shots, seed)?;
    let run = tomograph_process(&exec)?;
    let ctx = QptContext::get(lines.len())?;
    let theory = theoretical_chi_for(gate, &ctx.ops)?;
    let mut chi = run.chi;
    chi.metadata = ChiMetadata {
        gate: Some(gate),
        lines: lines.to_vec(),
        backend: Some(backend.name().to_string()),
        shots: shots.count(),
    };
    Ok(QptResult {
        fidelity: process_fidelity(&theory, &chi)?,
        trace_deviation: trace_preservation_deviation(&chi, &ctx.ops)?,
        residual: run.residual,
        executions: run.executions,
        theory,
        chi,
    })
}

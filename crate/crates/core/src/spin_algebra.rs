//! Bitstring-basis Hilbert space and matrix-free conserved charges.
//!
//! Basis index `b` encodes a product state little-endian: bit `k` of `b` set
//! means spin `k` (0-based, spin `k+1` in 1-based labels) points up along z.
//! Single-spin Pauli matrices act as
//! `σ^z|↑⟩ = |↑⟩`, `σ^z|↓⟩ = −|↓⟩`, `σ^x` flips, `σ^y|↓⟩ = i|↑⟩`,
//! `σ^y|↑⟩ = −i|↓⟩`.

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::Couplings;

/// Largest spin count for which dense `2^N × 2^N` matrices are built.
pub const DENSE_CAP: usize = 12;

/// Below this dimension the charge kernel stays on the calling thread.
const PAR_DIM: usize = 1 << 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpinError {
    #[error("dimension mismatch: expected {expected} amplitudes, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("N = {n} is above the dense cap of {cap}")]
    AboveDenseCap { n: usize, cap: usize },
    #[error("charge index {index} out of range for N = {n}")]
    BadIndex { index: usize, n: usize },
}

/// Complex amplitudes over the `2^N` bitstring basis. Not necessarily
/// normalised.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_spins: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn zeros(n_spins: usize) -> Self {
        Self {
            n_spins,
            amps: vec![ZERO; 1 << n_spins],
        }
    }

    pub fn basis(n_spins: usize, index: usize) -> Self {
        let mut v = Self::zeros(n_spins);
        v.amps[index] = Complex64::new(1.0, 0.0);
        v
    }

    /// Normalised equal-weight superposition of every basis state.
    pub fn uniform(n_spins: usize) -> Self {
        let dim = 1usize << n_spins;
        let a = 1.0 / (dim as f64).sqrt();
        Self {
            n_spins,
            amps: vec![Complex64::new(a, 0.0); dim],
        }
    }

    /// `|↓↓…↓⟩`, basis index 0.
    pub fn all_down(n_spins: usize) -> Self {
        Self::basis(n_spins, 0)
    }

    pub fn from_amplitudes(n_spins: usize, amps: Vec<Complex64>) -> Result<Self, SpinError> {
        let expected = 1usize << n_spins;
        if amps.len() != expected {
            return Err(SpinError::DimensionMismatch {
                expected,
                got: amps.len(),
            });
        }
        Ok(Self { n_spins, amps })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: Complex64, other: &Self) {
        axpy(&mut self.amps, alpha, &other.amps);
    }

    pub fn scale(&mut self, alpha: Complex64) {
        self.amps.iter_mut().for_each(|a| *a *= alpha);
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Unit-normalises and fixes the global phase so that the first
    /// amplitude above `1e-8 · max|a|` is real and positive. Returns `None`
    /// for the zero vector.
    pub fn normalized_with_phase(&self) -> Option<Self> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return None;
        }
        let max = self.amps.iter().fold(0.0_f64, |m, a| m.max(a.norm()));
        let lead = self.amps.iter().find(|a| a.norm() > 1e-8 * max)?;
        let phase = lead.conj() / lead.norm();
        let mut out = self.clone();
        out.scale(phase / norm);
        Some(out)
    }

    pub(crate) fn check_dim(&self, n_spins: usize) -> Result<(), SpinError> {
        let expected = 1usize << n_spins;
        if self.n_spins != n_spins || self.amps.len() != expected {
            return Err(SpinError::DimensionMismatch {
                expected,
                got: self.amps.len(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for StateVector {
    type Output = Complex64;

    fn index(&self, index: usize) -> &Complex64 {
        &self.amps[index]
    }
}

impl IndexMut<usize> for StateVector {
    fn index_mut(&mut self, index: usize) -> &mut Complex64 {
        &mut self.amps[index]
    }
}

pub(crate) fn axpy(y: &mut [Complex64], alpha: Complex64, x: &[Complex64]) {
    debug_assert_eq!(y.len(), x.len());
    if y.len() >= PAR_DIM {
        y.par_iter_mut().zip(x.par_iter()).for_each(|(y, x)| *y += alpha * x);
    } else {
        y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    /// Single-spin matrix in the `(↓, ↑)` = `(bit 0, bit 1)` ordering.
    pub fn matrix(self) -> DMatrix<Complex64> {
        let o = ZERO;
        let one = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::X => DMatrix::from_row_slice(2, 2, &[o, one, one, o]),
            Pauli::Y => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
            Pauli::Z => DMatrix::from_row_slice(2, 2, &[-one, o, o, one]),
        }
    }
}

/// One Pauli string `coefficient · Π σ^{axis}_{site}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub factors: Vec<(usize, Pauli)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PairTerm {
    j: usize,
    x: f64,
    y: f64,
    z: f64,
}

/// Matrix-free conserved charge `R_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeOperator {
    index: usize,
    n_spins: usize,
    bx: f64,
    by: f64,
    bz: f64,
    pairs: Vec<PairTerm>,
}

impl ChargeOperator {
    pub fn new(couplings: &Couplings, index: usize) -> Result<Self, SpinError> {
        let n = couplings.n_spins();
        if index >= n {
            return Err(SpinError::BadIndex { index, n });
        }
        let pairs = (0..n)
            .filter(|&j| j != index)
            .map(|j| PairTerm {
                j,
                x: couplings.x()[(index, j)],
                y: couplings.y()[(index, j)],
                z: couplings.z()[(index, j)],
            })
            .collect();
        Ok(Self {
            index,
            n_spins: n,
            bx: couplings.bx()[index],
            by: couplings.by()[index],
            bz: couplings.bz()[index],
            pairs,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }

    /// The `3 + 3(N−1)` Pauli strings making up the charge.
    pub fn terms(&self) -> Vec<PauliTerm> {
        let i = self.index;
        let mut terms = vec![
            PauliTerm { coefficient: self.bx, factors: vec![(i, Pauli::X)] },
            PauliTerm { coefficient: self.by, factors: vec![(i, Pauli::Y)] },
            PauliTerm { coefficient: self.bz, factors: vec![(i, Pauli::Z)] },
        ];
        for p in &self.pairs {
            for (c, axis) in [(p.x, Pauli::X), (p.y, Pauli::Y), (p.z, Pauli::Z)] {
                terms.push(PauliTerm {
                    coefficient: c,
                    factors: vec![(i, axis), (p.j, axis)],
                });
            }
        }
        terms
    }

    /// Squared Frobenius norm, `2^N Σ c²` over the orthogonal Pauli strings.
    pub fn frobenius_sqr(&self) -> f64 {
        let s: f64 = self.terms().iter().map(|t| t.coefficient * t.coefficient).sum();
        s * self.dim() as f64
    }

    #[inline]
    fn amplitude(&self, input: &[Complex64], b: usize) -> Complex64 {
        let i = self.index;
        let up_i = (b >> i) & 1 == 1;
        let si = if up_i { 1.0 } else { -1.0 };

        let mut diag = self.bz;
        let mut acc = ZERO;
        for p in &self.pairs {
            let up_j = (b >> p.j) & 1 == 1;
            diag += if up_j { p.z } else { -p.z };
            // σ^y σ^y picks up −1 when both spins are parallel, +1 otherwise
            let c = if up_i == up_j { p.x - p.y } else { p.x + p.y };
            acc += c * input[b ^ (1 << i) ^ (1 << p.j)];
        }
        // the source state has spin i flipped relative to b
        let y_phase = if up_i { self.by } else { -self.by };
        acc += Complex64::new(self.bx, y_phase) * input[b ^ (1 << i)];
        acc + si * diag * input[b]
    }

    /// `out = R_i · input`, writing every entry of `out`. Both slices must
    /// have length `2^N`.
    pub fn apply_into(&self, input: &[Complex64], out: &mut [Complex64]) -> Result<(), SpinError> {
        let dim = self.dim();
        for len in [input.len(), out.len()] {
            if len != dim {
                return Err(SpinError::DimensionMismatch { expected: dim, got: len });
            }
        }
        if dim >= PAR_DIM {
            out.par_iter_mut()
                .enumerate()
                .for_each(|(b, o)| *o = self.amplitude(input, b));
        } else {
            for (b, o) in out.iter_mut().enumerate() {
                *o = self.amplitude(input, b);
            }
        }
        Ok(())
    }

    /// `out = (shift + R_i) · input`.
    pub fn apply_shifted_into(
        &self,
        shift: f64,
        input: &[Complex64],
        out: &mut [Complex64],
    ) -> Result<(), SpinError> {
        let dim = self.dim();
        for len in [input.len(), out.len()] {
            if len != dim {
                return Err(SpinError::DimensionMismatch { expected: dim, got: len });
            }
        }
        if dim >= PAR_DIM {
            out.par_iter_mut()
                .enumerate()
                .for_each(|(b, o)| *o = self.amplitude(input, b) + shift * input[b]);
        } else {
            for (b, o) in out.iter_mut().enumerate() {
                *o = self.amplitude(input, b) + shift * input[b];
            }
        }
        Ok(())
    }

    /// Nonzero entries of column `b`, i.e. `R_i |b⟩` in scatter form: at
    /// most `N + 1` basis states are reached.
    pub fn column(&self, b: usize, out: &mut Vec<(usize, Complex64)>) {
        out.clear();
        let i = self.index;
        let up_i = (b >> i) & 1 == 1;
        let mut diag = self.bz;
        for p in &self.pairs {
            let up_j = (b >> p.j) & 1 == 1;
            diag += if up_j { p.z } else { -p.z };
            let c = if up_i == up_j { p.x - p.y } else { p.x + p.y };
            if c != 0.0 {
                out.push((b ^ (1 << i) ^ (1 << p.j), Complex64::new(c, 0.0)));
            }
        }
        let si = if up_i { 1.0 } else { -1.0 };
        out.push((b, Complex64::new(si * diag, 0.0)));
        // σ^y|↓⟩ = i|↑⟩, σ^y|↑⟩ = −i|↓⟩
        let y_phase = if up_i { -self.by } else { self.by };
        let flip = Complex64::new(self.bx, y_phase);
        if flip != ZERO {
            out.push((b ^ (1 << i), flip));
        }
    }
}

/// All `N` charges of a model, in index order.
pub fn charges(couplings: &Couplings) -> Vec<ChargeOperator> {
    (0..couplings.n_spins())
        .map(|i| ChargeOperator::new(couplings, i).expect("index in range"))
        .collect()
}

pub fn apply_charge(op: &ChargeOperator, v: &StateVector) -> Result<StateVector, SpinError> {
    v.check_dim(op.n_spins)?;
    let mut out = StateVector::zeros(op.n_spins);
    op.apply_into(&v.amps, &mut out.amps)?;
    Ok(out)
}

/// Dense matrix of one Pauli string on `n` spins, built as the Kronecker
/// product `M_{N−1} ⊗ … ⊗ M_0`.
pub fn dense_pauli_string(n: usize, factors: &[(usize, Pauli)]) -> DMatrix<Complex64> {
    let id = DMatrix::<Complex64>::identity(2, 2);
    let mut m = DMatrix::<Complex64>::identity(1, 1);
    for site in (0..n).rev() {
        let local = factors
            .iter()
            .find(|(s, _)| *s == site)
            .map(|(_, p)| p.matrix())
            .unwrap_or_else(|| id.clone());
        m = m.kronecker(&local);
    }
    m
}

/// Dense `2^N × 2^N` matrix of a charge, assembled from Kronecker products
/// of single-spin Pauli matrices (independent of the matrix-free kernel).
pub fn dense_charge(op: &ChargeOperator) -> Result<DMatrix<Complex64>, SpinError> {
    dense_charge_capped(op, DENSE_CAP)
}

pub fn dense_charge_capped(op: &ChargeOperator, cap: usize) -> Result<DMatrix<Complex64>, SpinError> {
    let n = op.n_spins;
    if n > cap {
        return Err(SpinError::AboveDenseCap { n, cap });
    }
    let dim = 1 << n;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for term in op.terms() {
        if term.coefficient == 0.0 {
            continue;
        }
        m += dense_pauli_string(n, &term.factors) * Complex64::new(term.coefficient, 0.0);
    }
    Ok(m)
}

fn check_cap(n: usize) -> Result<(), SpinError> {
    if n > DENSE_CAP {
        Err(SpinError::AboveDenseCap { n, cap: DENSE_CAP })
    } else {
        Ok(())
    }
}

/// Dense scratch vector that remembers which entries were touched.
struct SparseAccumulator {
    values: Vec<Complex64>,
    touched: Vec<usize>,
}

impl SparseAccumulator {
    fn new(dim: usize) -> Self {
        Self {
            values: vec![ZERO; dim],
            touched: Vec::new(),
        }
    }

    fn add(&mut self, index: usize, value: Complex64) {
        if self.values[index] == ZERO {
            self.touched.push(index);
        }
        self.values[index] += value;
    }

    fn norm_sqr_and_clear(&mut self) -> f64 {
        self.touched.sort_unstable();
        self.touched.dedup();
        let mut s = 0.0;
        for &t in &self.touched {
            s += self.values[t].norm_sqr();
            self.values[t] = ZERO;
        }
        self.touched.clear();
        s
    }
}

struct SweepScratch {
    acc: SparseAccumulator,
    first: Vec<(usize, Complex64)>,
    second: Vec<(usize, Complex64)>,
}

/// `Σ_b ‖f(b)‖²` where `f` fills a sparse accumulator with column `b` of
/// some polynomial in the charges.
fn column_sweep<F>(n: usize, f: F) -> f64
where
    F: Fn(usize, &mut SweepScratch) + Sync,
{
    let dim = 1usize << n;
    (0..dim)
        .into_par_iter()
        .map_init(
            || SweepScratch {
                acc: SparseAccumulator::new(dim),
                first: Vec::new(),
                second: Vec::new(),
            },
            |scratch, b| {
                f(b, scratch);
                scratch.acc.norm_sqr_and_clear()
            },
        )
        .sum()
}

/// Adds `sign · A B |b⟩` to the accumulator.
fn add_product(a: &ChargeOperator, b_op: &ChargeOperator, col: usize, sign: f64, s: &mut SweepScratch) {
    b_op.column(col, &mut s.first);
    for &(k, amp) in &s.first {
        a.column(k, &mut s.second);
        for &(t, v) in &s.second {
            s.acc.add(t, sign * amp * v);
        }
    }
}

/// `‖R_i R_j − R_j R_i‖_F / (‖R_i‖_F ‖R_j‖_F)`.
pub fn commutator_residual(ops: &[ChargeOperator], i: usize, j: usize) -> Result<f64, SpinError> {
    let n = ops.first().map(|o| o.n_spins).unwrap_or(0);
    check_cap(n)?;
    for idx in [i, j] {
        if idx >= ops.len() {
            return Err(SpinError::BadIndex { index: idx, n });
        }
    }
    let (ri, rj) = (&ops[i], &ops[j]);
    let num = column_sweep(n, |col, s| {
        add_product(ri, rj, col, 1.0, s);
        add_product(rj, ri, col, -1.0, s);
    });
    let denom = (ri.frobenius_sqr() * rj.frobenius_sqr()).sqrt();
    Ok(num.sqrt() / denom)
}

/// `‖R_i² − Σ_{j≠i} Γ_ij R_j − K_i‖_F / ‖R_i²‖_F`.
pub fn quadratic_operator_residual(
    couplings: &Couplings,
    ops: &[ChargeOperator],
    i: usize,
) -> Result<f64, SpinError> {
    quadratic_residual_with(couplings.gamma(), couplings.k(), ops, i)
}

pub(crate) fn quadratic_residual_with(
    gamma: &DMatrix<f64>,
    k: &[f64],
    ops: &[ChargeOperator],
    i: usize,
) -> Result<f64, SpinError> {
    let n = ops.len();
    check_cap(n)?;
    if i >= n {
        return Err(SpinError::BadIndex { index: i, n });
    }
    let ri = &ops[i];
    let num = column_sweep(n, |col, s| {
        add_product(ri, ri, col, 1.0, s);
        s.acc.add(col, Complex64::new(-k[i], 0.0));
        for (j, rj) in ops.iter().enumerate() {
            if j == i {
                continue;
            }
            let g = gamma[(i, j)];
            rj.column(col, &mut s.first);
            for &(t, v) in &s.first {
                s.acc.add(t, -g * v);
            }
        }
    });
    let den = column_sweep(n, |col, s| add_product(ri, ri, col, 1.0, s));
    Ok((num / den).sqrt())
}

/// Parity of the number of up spins in basis state `b`.
pub fn up_parity(b: usize) -> u32 {
    b.count_ones() & 1
}

//! Eigenstate projectors as operator-valued determinants.
//!
//! For a parameter vector `r` the operator
//!
//! ```text
//! P(r) = det J,   J_ii = r_i + R_i,   J_ij = −Γ_ij (i ≠ j)
//! ```
//!
//! is unambiguous because all charges commute. On-shell (when `r` solves the
//! quadratic eigenvalue equations) it equals `N(r) |ψ⟩⟨ψ|`, where `N(r)` is
//! the scalar determinant with `2 r_i` on the diagonal.
//!
//! Expanding over the set `π` of diagonal entries kept,
//! `P(r) = Σ_π K_π Π_{k∈π} (r_k + R_k)`, where `K_π` only depends on the
//! complement `π̄`: it vanishes for odd `|π̄|` and otherwise equals the sum
//! over perfect matchings of `π̄` of `Π 4g² f_i f_j / (ε_i − ε_j)²`, with
//! `f = F_x F_y`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::Couplings;
use crate::spin_algebra::{axpy, charges, dense_charge, ChargeOperator, SpinError, StateVector, DENSE_CAP};

/// `|N(r)|` below this times `Π max(1, 2|r_i|)` is treated as zero.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// `‖P(r)Ω / N(r)‖` below this times `‖Ω‖` means the vacuum has no weight
/// on the target state.
pub const VACUUM_OVERLAP_TOL: f64 = 1e-9;
/// Largest N for the identity-resolution quadrature.
pub const IDENTITY_CAP: usize = 6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error)]
pub enum ProjectorError {
    #[error(transparent)]
    Spin(#[from] SpinError),
    #[error("parameter vector has length {got}, expected {expected}")]
    BadLength { expected: usize, got: usize },
    #[error("normalisation determinant N(r) = {value:e} is below {threshold:e}")]
    Normalization { value: f64, threshold: f64 },
    #[error("vacuum is orthogonal to the target state (relative weight {weight:e}); choose a vacuum with weight in every magnetisation-parity sector")]
    VacuumOrthogonal { weight: f64 },
    #[error("identity-resolution check limited to N <= {cap}, got {n}")]
    IdentityCap { n: usize, cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Strategy {
    /// Depth-first walk over diagonal subsets, matrix-free.
    #[default]
    SubsetTree,
    /// Laplace expansion by minors over dense charge matrices (oracle).
    DenseLaplace,
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "subset-tree" => Ok(Strategy::SubsetTree),
            "dense-laplace" => Ok(Strategy::DenseLaplace),
            other => Err(format!("unknown strategy `{other}` (expected subset-tree or dense-laplace)")),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::SubsetTree => "subset-tree",
            Strategy::DenseLaplace => "dense-laplace",
        })
    }
}

/// One term of the subset expansion: the complement `π̄` (indices whose
/// diagonal entry is *not* kept) and its coefficient `K_π`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingCoefficient {
    pub complement: Vec<usize>,
    pub value: f64,
}

impl PairingCoefficient {
    /// Indices whose factor `(r_k + R_k)` appears in the term.
    pub fn kept(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|k| !self.complement.contains(k)).collect()
    }
}

fn scalar_det(n: usize, diag: impl Fn(usize) -> f64, couplings: &Couplings) -> f64 {
    let g = couplings.gamma();
    DMatrix::from_fn(n, n, |i, j| if i == j { diag(i) } else { -g[(i, j)] }).determinant()
}

/// `N(r)`: determinant with diagonal `2 r_i` and off-diagonal `−Γ_ij`.
pub fn scalar_norm_det(r: &[f64], couplings: &Couplings) -> f64 {
    scalar_det(couplings.n_spins(), |i| 2.0 * r[i], couplings)
}

/// Determinant with diagonal `r_i + r_i^m`: the coefficient of `|ψ_m⟩⟨ψ_m|`
/// in `P(r)`, and the scalar in `P(r) P(r^m) = C |ψ_m⟩⟨ψ_m|`.
pub fn offshell_coefficient(r: &[f64], r_m: &[f64], couplings: &Couplings) -> f64 {
    scalar_det(couplings.n_spins(), |i| r[i] + r_m[i], couplings)
}

/// Row-sum bound `Π_i (|r_i + r_i^m| + Σ_{j≠i} |Γ_ij|) ≥ |C(r, r^m)|`, the
/// magnitude against which a vanishing coefficient is judged.
pub fn offshell_scale(r: &[f64], r_m: &[f64], couplings: &Couplings) -> f64 {
    let g = couplings.gamma();
    (0..couplings.n_spins())
        .map(|i| {
            let off: f64 = (0..couplings.n_spins()).filter(|&j| j != i).map(|j| g[(i, j)].abs()).sum();
            (r[i] + r_m[i]).abs() + off
        })
        .product()
}

/// `Π_i max(1, 2|r_i|)`, the reference magnitude for `N(r)`.
pub fn norm_scale(r: &[f64]) -> f64 {
    r.iter().map(|x| (2.0 * x.abs()).max(1.0)).product()
}

/// `K_π` from the pairing sum, pairing the first index of `complement`
/// with each of the others and recursing on what is left.
pub fn pairing_coefficient(complement: &[usize], couplings: &Couplings) -> f64 {
    if complement.len() % 2 == 1 {
        return 0.0;
    }
    fn rec(rest: &[usize], c: &Couplings) -> f64 {
        match rest {
            [] => 1.0,
            [first, tail @ ..] => tail
                .iter()
                .enumerate()
                .map(|(t, &j)| {
                    let remaining: Vec<usize> = tail
                        .iter()
                        .enumerate()
                        .filter(|(u, _)| *u != t)
                        .map(|(_, &x)| x)
                        .collect();
                    c.pair_weight(*first, j) * rec(&remaining, c)
                })
                .sum(),
        }
    }
    rec(complement, couplings)
}

/// `K_π` as the determinant of the `−Γ` submatrix on `complement` with zero
/// diagonal. Kept as the cross-check route.
pub fn pairing_coefficient_det(complement: &[usize], couplings: &Couplings) -> f64 {
    let m = complement.len();
    if m == 0 {
        return 1.0;
    }
    let g = couplings.gamma();
    DMatrix::from_fn(m, m, |a, b| {
        if a == b {
            0.0
        } else {
            -g[(complement[a], complement[b])]
        }
    })
    .determinant()
}

/// The eight `N = 4` expansion terms written out in closed form from
/// `F_x`, `F_y`, `g` and `ε`, in `expansion_terms` order.
pub fn four_spin_closed_form(couplings: &Couplings) -> Option<Vec<PairingCoefficient>> {
    if couplings.n_spins() != 4 {
        return None;
    }
    let e = couplings.epsilons();
    let g = couplings.g();
    let f: Vec<f64> = couplings.fx().iter().zip(couplings.fy()).map(|(x, y)| x * y).collect();
    let pair = |i: usize, j: usize| 4.0 * g * g * f[i] * f[j] / (e[i] - e[j]).powi(2);
    let inv2 = |i: usize, j: usize| 1.0 / (e[i] - e[j]).powi(2);
    let prefactor: f64 = f.iter().map(|fi| 2.0 * g * fi).product();
    let full = prefactor * (inv2(0, 1) * inv2(2, 3) + inv2(0, 2) * inv2(1, 3) + inv2(0, 3) * inv2(1, 2));
    let term = |complement: Vec<usize>, value: f64| PairingCoefficient { complement, value };
    Some(vec![
        term(vec![], 1.0),
        term(vec![0, 1], pair(0, 1)),
        term(vec![0, 2], pair(0, 2)),
        term(vec![1, 2], pair(1, 2)),
        term(vec![0, 3], pair(0, 3)),
        term(vec![1, 3], pair(1, 3)),
        term(vec![2, 3], pair(2, 3)),
        term(vec![0, 1, 2, 3], full),
    ])
}

/// `K` for every complement bitmask, by the same pair-the-lowest-index
/// recursion memoised over subsets.
fn pairing_table(couplings: &Couplings) -> Vec<f64> {
    let n = couplings.n_spins();
    let mut table = vec![0.0; 1 << n];
    table[0] = 1.0;
    for mask in 1usize..1 << n {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let first = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << first);
        let mut acc = 0.0;
        let mut bits = rest;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            acc += couplings.pair_weight(first, j) * table[rest & !(1 << j)];
        }
        table[mask] = acc;
    }
    table
}

fn mask_to_indices(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|k| (mask >> k) & 1 == 1).collect()
}

/// Diagnostics of one on-shell projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionDiagnostics {
    /// Bethe-equation residual of the supplied `r`.
    pub onshell_residual: f64,
    pub normalization: f64,
    /// `‖P(v)/N − v‖ / ‖v‖` for `v = P Ω / N`.
    pub idempotency_residual: f64,
    /// `‖R_i v − r_i v‖ / ‖v‖` per charge.
    pub eigen_residuals: Vec<f64>,
    /// `‖v‖ / ‖Ω‖`, i.e. the overlap `|⟨ψ|Ω⟩| / ‖Ω‖`.
    pub vacuum_weight: f64,
}

impl ProjectionDiagnostics {
    pub fn worst_eigen_residual(&self) -> f64 {
        self.eigen_residuals.iter().fold(0.0, |m, v| m.max(*v))
    }
}

#[derive(Debug, Clone)]
pub struct Projection {
    /// `P(r) Ω`
    pub unnormalized: StateVector,
    /// `P(r) Ω / N(r)`
    pub state: StateVector,
    pub diagnostics: ProjectionDiagnostics,
}

/// Evaluates operator determinants of one model. Holds the charges and the
/// table of pairing coefficients.
#[derive(Debug, Clone)]
pub struct ProjectorEngine {
    couplings: Couplings,
    charges: Vec<ChargeOperator>,
    pairing: Vec<f64>,
    parallel: bool,
}

impl ProjectorEngine {
    pub fn new(couplings: &Couplings) -> Self {
        Self {
            couplings: couplings.clone(),
            charges: charges(couplings),
            pairing: pairing_table(couplings),
            parallel: couplings.n_spins() >= 8,
        }
    }

    /// Enables or disables parallel subtree evaluation for `SubsetTree`.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn n_spins(&self) -> usize {
        self.couplings.n_spins()
    }

    pub fn couplings(&self) -> &Couplings {
        &self.couplings
    }

    pub fn charges(&self) -> &[ChargeOperator] {
        &self.charges
    }

    /// `K` for the complement given as a bitmask.
    pub fn pairing_value(&self, complement_mask: usize) -> f64 {
        self.pairing[complement_mask]
    }

    /// Every term the subset tree sums: even-cardinality complements with
    /// their coefficient, ordered by complement size then bitmask.
    pub fn expansion_terms(&self) -> Vec<PairingCoefficient> {
        let n = self.n_spins();
        let mut masks: Vec<usize> = (0..1usize << n).filter(|m| m.count_ones() % 2 == 0).collect();
        masks.sort_by_key(|m| (m.count_ones(), *m));
        masks
            .into_iter()
            .map(|m| PairingCoefficient {
                complement: mask_to_indices(m, n),
                value: self.pairing[m],
            })
            .collect()
    }

    fn check_r(&self, r: &[f64]) -> Result<(), ProjectorError> {
        if r.len() != self.n_spins() {
            return Err(ProjectorError::BadLength {
                expected: self.n_spins(),
                got: r.len(),
            });
        }
        Ok(())
    }

    pub fn plan(&self, r: &[f64], strategy: Strategy) -> Result<OperatorDeterminantPlan<'_>, ProjectorError> {
        self.check_r(r)?;
        if strategy == Strategy::DenseLaplace && self.n_spins() > DENSE_CAP {
            return Err(SpinError::AboveDenseCap {
                n: self.n_spins(),
                cap: DENSE_CAP,
            }
            .into());
        }
        Ok(OperatorDeterminantPlan {
            engine: self,
            r: r.to_vec(),
            strategy,
        })
    }

    /// `P(r) Ω`.
    pub fn apply(&self, r: &[f64], omega: &StateVector, strategy: Strategy) -> Result<StateVector, ProjectorError> {
        self.plan(r, strategy)?.apply(omega)
    }

    fn descend(
        &self,
        r: &[f64],
        k: usize,
        complement: usize,
        level: usize,
        bufs: &mut [Vec<Complex64>],
        acc: &mut [Complex64],
    ) {
        let n = r.len();
        if k == n {
            let weight = self.pairing[complement];
            if weight != 0.0 {
                axpy(acc, Complex64::new(weight, 0.0), &bufs[level]);
            }
            return;
        }
        // the last index is forced: only even complements survive
        let last = k + 1 == n;
        let odd = complement.count_ones() % 2 == 1;
        if !last || !odd {
            let (lo, hi) = bufs.split_at_mut(level + 1);
            self.charges[k]
                .apply_shifted_into(r[k], &lo[level], &mut hi[0])
                .expect("buffers sized to the model");
            self.descend(r, k + 1, complement, level + 1, bufs, acc);
        }
        if !last || odd {
            self.descend(r, k + 1, complement | 1 << k, level, bufs, acc);
        }
    }

    fn subset_tree_from(&self, r: &[f64], start: &[Complex64], k: usize, complement: usize) -> Vec<Complex64> {
        let n = r.len();
        let dim = 1usize << n;
        let mut bufs = vec![vec![ZERO; dim]; n - k + 1];
        bufs[0].copy_from_slice(start);
        let mut acc = vec![ZERO; dim];
        self.descend(r, k, complement, 0, &mut bufs, &mut acc);
        acc
    }

    fn apply_subset_tree(&self, r: &[f64], omega: &StateVector) -> StateVector {
        let amps = self.subset_tree_from(r, omega.amplitudes(), 0, 0);
        StateVector::from_amplitudes(self.n_spins(), amps).expect("dimension preserved")
    }

    /// Subset tree split over the first few indices; every prefix runs on
    /// its own accumulator and the partial sums are added in prefix order.
    fn apply_subset_tree_parallel(&self, r: &[f64], omega: &StateVector) -> StateVector {
        let n = self.n_spins();
        let depth = n.saturating_sub(2).min(4);
        let dim = 1usize << n;
        let partials: Vec<Vec<Complex64>> = (0..1usize << depth)
            .into_par_iter()
            .map(|prefix| {
                let mut cur = omega.amplitudes().to_vec();
                let mut tmp = vec![ZERO; dim];
                for k in 0..depth {
                    if (prefix >> k) & 1 == 1 {
                        self.charges[k]
                            .apply_shifted_into(r[k], &cur, &mut tmp)
                            .expect("buffers sized to the model");
                        std::mem::swap(&mut cur, &mut tmp);
                    }
                }
                let complement = !prefix & ((1 << depth) - 1);
                self.subset_tree_from(r, &cur, depth, complement)
            })
            .collect();
        let mut acc = vec![ZERO; dim];
        for p in &partials {
            axpy(&mut acc, Complex64::new(1.0, 0.0), p);
        }
        StateVector::from_amplitudes(n, acc).expect("dimension preserved")
    }

    /// Laplace expansion by minors along successive rows, memoised over
    /// the set of columns still to be covered. Entries `(r_k + R_k)` are
    /// dense matrices; off-diagonal entries are the scalars `−Γ_ij`.
    fn apply_dense_laplace(&self, r: &[f64], omega: &StateVector) -> Result<StateVector, ProjectorError> {
        use std::collections::HashMap;

        let n = self.n_spins();
        let gamma = self.couplings.gamma();
        let mut prev: HashMap<usize, DVector<Complex64>> = HashMap::new();
        prev.insert(0, DVector::from_column_slice(omega.amplitudes()));

        // minors over rows {n-s, …, n-1} and a column set of size s
        for s in 1..=n {
            let row = n - s;
            let dense = dense_charge(&self.charges[row])?;
            let shifted = dense + DMatrix::<Complex64>::identity(1 << n, 1 << n) * Complex64::new(r[row], 0.0);
            let mut next: HashMap<usize, DVector<Complex64>> = HashMap::new();
            for cols in (0..1usize << n).filter(|m| m.count_ones() as usize == s) {
                let mut acc = DVector::<Complex64>::zeros(1 << n);
                for (t, c) in mask_to_indices(cols, n).into_iter().enumerate() {
                    let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
                    let minor = &prev[&(cols & !(1 << c))];
                    if c == row {
                        acc += (&shifted * minor) * Complex64::new(sign, 0.0);
                    } else {
                        let entry = -gamma[(row, c)];
                        if entry != 0.0 {
                            acc.axpy(Complex64::new(sign * entry, 0.0), minor, Complex64::new(1.0, 0.0));
                        }
                    }
                }
                next.insert(cols, acc);
            }
            prev = next;
        }
        let full = prev.remove(&((1usize << n) - 1)).expect("full column set computed");
        Ok(StateVector::from_amplitudes(n, full.iter().copied().collect())?)
    }

    /// Dense `2^N × 2^N` matrix of `P(r)`, column by column.
    pub fn dense_projector(&self, r: &[f64], strategy: Strategy) -> Result<DMatrix<Complex64>, ProjectorError> {
        let n = self.n_spins();
        if n > DENSE_CAP {
            return Err(SpinError::AboveDenseCap { n, cap: DENSE_CAP }.into());
        }
        let plan = self.plan(r, strategy)?;
        let dim = 1usize << n;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for b in 0..dim {
            let col = plan.apply(&StateVector::basis(n, b))?;
            m.column_mut(b).copy_from_slice(col.amplitudes());
        }
        Ok(m)
    }

    /// `P(r) Ω / N(r)` with idempotency and eigen-residual diagnostics.
    pub fn project_and_normalize(&self, r: &[f64], omega: &StateVector) -> Result<Projection, ProjectorError> {
        self.project_and_normalize_with(r, omega, Strategy::SubsetTree)
    }

    pub fn project_and_normalize_with(
        &self,
        r: &[f64],
        omega: &StateVector,
        strategy: Strategy,
    ) -> Result<Projection, ProjectorError> {
        self.check_r(r)?;
        omega.check_dim(self.n_spins())?;
        let c = &self.couplings;
        let onshell_residual = c.bethe_residual(r);
        if onshell_residual > 1e-8 * c.residual_scale() {
            log::warn!("projecting at an off-shell vector (residual {onshell_residual:e})");
        }
        let normalization = scalar_norm_det(r, c);
        let threshold = NORMALIZATION_TOL * norm_scale(r);
        if !(normalization.abs() >= threshold) {
            return Err(ProjectorError::Normalization {
                value: normalization,
                threshold,
            });
        }

        let unnormalized = self.apply(r, omega, strategy)?;
        let mut state = unnormalized.clone();
        state.scale(Complex64::new(1.0 / normalization, 0.0));
        let v_norm = state.norm();
        let weight = v_norm / omega.norm();
        if !(weight >= VACUUM_OVERLAP_TOL) {
            return Err(ProjectorError::VacuumOrthogonal { weight });
        }

        let mut again = self.apply(r, &state, strategy)?;
        again.scale(Complex64::new(1.0 / normalization, 0.0));
        let idempotency_residual = again.distance(&state) / v_norm;

        let mut tmp = vec![ZERO; state.dim()];
        let eigen_residuals = self
            .charges
            .iter()
            .zip(r)
            .map(|(op, &ri)| {
                op.apply_shifted_into(-ri, state.amplitudes(), &mut tmp)
                    .expect("dimension checked");
                tmp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / v_norm
            })
            .collect();

        Ok(Projection {
            unnormalized,
            state,
            diagnostics: ProjectionDiagnostics {
                onshell_residual,
                normalization,
                idempotency_residual,
                eigen_residuals,
                vacuum_weight: weight,
            },
        })
    }

    /// Integrates `(Π r_i) P(r)` over `[−a, a]^N` with the two-point
    /// Gauss–Legendre rule per axis (exact, the integrand being at most
    /// quadratic in each `r_i`) and returns
    /// `‖I / (2a³/3)^N − 𝟙‖_F / 2^{N/2}`.
    pub fn identity_resolution_check(&self, a: f64) -> Result<f64, ProjectorError> {
        let n = self.n_spins();
        if n > IDENTITY_CAP {
            return Err(ProjectorError::IdentityCap { n, cap: IDENTITY_CAP });
        }
        let dim = 1usize << n;
        let node = a / 3f64.sqrt();
        let norm = (2.0 * a.powi(3) / 3.0).powi(n as i32);
        let mut integral = DMatrix::<Complex64>::zeros(dim, dim);
        for signs in 0..1usize << n {
            let r: Vec<f64> = (0..n)
                .map(|i| if (signs >> i) & 1 == 1 { node } else { -node })
                .collect();
            // weight a per axis times the Ψ = Π r_i factor
            let w: f64 = r.iter().map(|x| a * x).product();
            let p = self.dense_projector(&r, Strategy::SubsetTree)?;
            integral += p * Complex64::new(w / norm, 0.0);
        }
        let residual = (integral - DMatrix::<Complex64>::identity(dim, dim)).norm();
        Ok(residual / (dim as f64).sqrt())
    }
}

/// Evaluation plan for `P(r)` at a fixed parameter vector.
#[derive(Debug, Clone)]
pub struct OperatorDeterminantPlan<'a> {
    engine: &'a ProjectorEngine,
    r: Vec<f64>,
    strategy: Strategy,
}

impl OperatorDeterminantPlan<'_> {
    pub fn r(&self) -> &[f64] {
        &self.r
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn apply(&self, omega: &StateVector) -> Result<StateVector, ProjectorError> {
        let e = self.engine;
        omega.check_dim(e.n_spins())?;
        match self.strategy {
            Strategy::SubsetTree if e.parallel => Ok(e.apply_subset_tree_parallel(&self.r, omega)),
            Strategy::SubsetTree => Ok(e.apply_subset_tree(&self.r, omega)),
            Strategy::DenseLaplace => e.apply_dense_laplace(&self.r, omega),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bethe_solver::homotopy_solve;
    use crate::model::{build_couplings, ModelSpec};

    fn spec(n: usize) -> ModelSpec {
        ModelSpec {
            n_spins: n,
            epsilons: (0..n).map(|i| 0.15 + 0.9 * i as f64 + 0.05 * (i * i) as f64).collect(),
            g: 0.55,
            gamma: 0.25,
            lambda_: 0.4,
            alpha_x: 0.3,
            beta_x: 1.0,
            alpha_y: 0.2,
            beta_y: 1.3,
        }
    }

    fn rel(a: &StateVector, b: &StateVector) -> f64 {
        a.distance(b) / b.norm()
    }

    #[test]
    fn scalar_determinants() {
        let z = build_couplings(&spec(3).with_g(0.0)).unwrap();
        let r = [0.7, -1.2, 2.0];
        assert!((scalar_norm_det(&r, &z) - 8.0 * 0.7 * -1.2 * 2.0).abs() < 1e-14);

        let c = build_couplings(&spec(2)).unwrap();
        let r = [0.3, -0.8];
        let expect = 4.0 * r[0] * r[1] - c.gamma()[(0, 1)] * c.gamma()[(1, 0)];
        assert!((scalar_norm_det(&r, &c) - expect).abs() < 1e-14);
        assert_eq!(offshell_coefficient(&r, &r, &c), scalar_norm_det(&r, &c));
    }

    #[test]
    fn pairing_routes_agree() {
        let c = build_couplings(&spec(6)).unwrap();
        assert_eq!(pairing_coefficient(&[], &c), 1.0);
        assert_eq!(pairing_coefficient(&[2], &c), 0.0);
        assert_eq!(pairing_coefficient(&[0, 3, 5], &c), 0.0);
        let engine = ProjectorEngine::new(&c);
        for mask in 0usize..64 {
            let idx = mask_to_indices(mask, 6);
            let rec = pairing_coefficient(&idx, &c);
            let det = pairing_coefficient_det(&idx, &c);
            assert_eq!(rec, engine.pairing_value(mask));
            if idx.len() % 2 == 0 {
                assert!((rec - det).abs() <= 1e-10 * rec.abs(), "{idx:?}: {rec} vs {det}");
                assert!(rec > 0.0);
            } else {
                assert!(det.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn four_spin_terms() {
        let c = build_couplings(&spec(4)).unwrap();
        let closed = four_spin_closed_form(&c).unwrap();
        let terms = ProjectorEngine::new(&c).expansion_terms();
        assert_eq!(terms.len(), 8);
        for (t, e) in terms.iter().zip(&closed) {
            assert_eq!(t.complement, e.complement);
            assert!((t.value - e.value).abs() <= 1e-12 * e.value.abs());
        }
        assert!(four_spin_closed_form(&build_couplings(&spec(3)).unwrap()).is_none());
    }

    #[test]
    fn strategies_agree() {
        for n in 2..=5 {
            let c = build_couplings(&spec(n)).unwrap();
            let engine = ProjectorEngine::new(&c);
            let r: Vec<f64> = (0..n).map(|i| 0.3 * i as f64 - 0.4).collect();
            let omega = StateVector::uniform(n);
            let tree = engine.apply(&r, &omega, Strategy::SubsetTree).unwrap();
            let dense = engine.apply(&r, &omega, Strategy::DenseLaplace).unwrap();
            assert!(rel(&tree, &dense) < 1e-10);
            let par = engine.clone().with_parallel(true).apply(&r, &omega, Strategy::SubsetTree).unwrap();
            assert!(rel(&par, &tree) < 1e-12);
        }
    }

    #[test]
    fn decoupled_projector_is_product() {
        let s = spec(3).with_g(0.0);
        let c = build_couplings(&s).unwrap();
        let engine = ProjectorEngine::new(&c);
        let r: Vec<f64> = c.k().iter().zip([1.0, -1.0, 1.0]).map(|(k, s)| s * k.sqrt()).collect();
        let omega = StateVector::uniform(3);
        let out = engine.apply(&r, &omega, Strategy::SubsetTree).unwrap();
        let mut expect = omega.clone();
        for (op, ri) in engine.charges().iter().zip(&r) {
            let mut tmp = vec![ZERO; 8];
            op.apply_shifted_into(*ri, expect.amplitudes(), &mut tmp).unwrap();
            expect = StateVector::from_amplitudes(3, tmp).unwrap();
        }
        assert!(rel(&out, &expect) < 1e-14);
    }

    #[test]
    fn onshell_projection_diagnostics() {
        let s = spec(4);
        let c = build_couplings(&s).unwrap();
        let set = homotopy_solve(&s, 32).unwrap();
        let engine = ProjectorEngine::new(&c);
        let omega = StateVector::uniform(4);
        for sol in &set.solutions {
            let p = engine.project_and_normalize(&sol.r, &omega).unwrap();
            assert!(p.diagnostics.worst_eigen_residual() < 1e-8, "{:?}", p.diagnostics);
            assert!(p.diagnostics.idempotency_residual < 1e-8);
            assert!(p.diagnostics.normalization.abs() > 1e-6);
        }
    }

    #[test]
    fn identity_resolution_small() {
        let c = build_couplings(&ModelSpec::xxx(vec![0.0, 1.0], 1.0, 0.0, 0.0).unwrap()).unwrap();
        let engine = ProjectorEngine::new(&c);
        for a in [1.0, 2.0] {
            assert!(engine.identity_resolution_check(a).unwrap() < 1e-10);
        }
        let big = build_couplings(&spec(7)).unwrap();
        assert!(matches!(
            ProjectorEngine::new(&big).identity_resolution_check(1.0),
            Err(ProjectorError::IdentityCap { .. })
        ));
    }

    #[test]
    fn input_errors() {
        let c = build_couplings(&spec(3)).unwrap();
        let engine = ProjectorEngine::new(&c);
        assert!(matches!(
            engine.apply(&[0.0; 2], &StateVector::uniform(3), Strategy::SubsetTree),
            Err(ProjectorError::BadLength { .. })
        ));
        assert!(matches!(
            engine.apply(&[0.0; 3], &StateVector::uniform(2), Strategy::SubsetTree),
            Err(ProjectorError::Spin(SpinError::DimensionMismatch { .. }))
        ));
        assert_eq!("dense-laplace".parse::<Strategy>().unwrap(), Strategy::DenseLaplace);
        assert!("lu".parse::<Strategy>().is_err());
    }
}

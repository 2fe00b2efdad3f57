//! All `2^N` solutions of the quadratic eigenvalue equations
//! `r_i² = Σ_{j≠i} Γ_ij r_j + K_i`.
//!
//! At `g = 0` the system decouples into `r_i = ±|B_i|`, giving every branch
//! in closed form. Each branch is then continued in `g` to the target
//! coupling with a tangent predictor and Newton corrector. The Jacobian of
//! the system (diagonal `2 r_i`, off-diagonal `−Γ_ij`) is the same matrix as
//! the normalisation determinant of the eigenstate projectors.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{build_couplings, Couplings, ModelError, ModelSpec};

/// Jacobian determinant threshold relative to `Π_i max(1, 2|r_i|)`.
pub const JACOBIAN_DET_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("singular Jacobian: |det| = {det:e} below threshold {threshold:e}")]
    SingularJacobian { det: f64, threshold: f64 },
    #[error("Newton did not converge in {iterations} iterations (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("continuation of branch {pattern} failed at g = {g_reached} (step floor {step_floor:e} reached)")]
    PathFailure {
        pattern: String,
        g_reached: f64,
        step_floor: f64,
    },
    #[error("suspected path crossing: branches {a} and {b} converged to the same solution (distance {distance:e})")]
    SuspectedPathCrossing { a: String, b: String, distance: f64 },
    #[error("sign pattern `{0}` is not a string of 0/1 of the right length")]
    BadPattern(String),
}

/// Which `g = 0` branch a solution was continued from: bit `k` set means
/// `r_k` started at `+|B_k|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignPattern {
    bits: u64,
    n: usize,
}

impl SignPattern {
    pub fn new(bits: u64, n: usize) -> Self {
        assert!(n <= 63, "sign patterns hold at most 63 spins");
        Self { bits, n }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn n_spins(&self) -> usize {
        self.n
    }

    pub fn sign(&self, k: usize) -> f64 {
        if (self.bits >> k) & 1 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn signs(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.sign(k)).collect()
    }

    /// `'1'`/`'0'` for `+`/`−`, spin 1 first.
    pub fn bitstring(&self) -> String {
        (0..self.n)
            .map(|k| if (self.bits >> k) & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn parse(s: &str, n: usize) -> Result<Self, SolveError> {
        if s.len() != n {
            return Err(SolveError::BadPattern(s.to_string()));
        }
        let mut bits = 0u64;
        for (k, ch) in s.chars().enumerate() {
            match ch {
                '1' => bits |= 1 << k,
                '0' => {}
                _ => return Err(SolveError::BadPattern(s.to_string())),
            }
        }
        Ok(Self::new(bits, n))
    }
}

impl fmt::Display for SignPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.bitstring())
    }
}

/// One (trial or on-shell) eigenvalue vector `(r_1 … r_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueVector {
    pub r: Vec<f64>,
    /// `max_i |r_i² − Σ_{j≠i} Γ_ij r_j − K_i|`
    pub residual: f64,
    pub sign_pattern: SignPattern,
    pub g_reached: f64,
}

impl EigenvalueVector {
    pub fn is_on_shell(&self, tol: f64) -> bool {
        self.residual < tol
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverDiagnostics {
    /// Accepted continuation steps per branch, in sign-pattern order.
    pub steps: Vec<usize>,
    pub rejected_steps: usize,
    /// Smallest `|det J| / Π max(1, 2|r_i|)` seen along any branch.
    pub min_scaled_jacobian_det: f64,
    /// Number of full sweeps run (more than one after a suspected crossing).
    pub attempts: usize,
}

/// The full set of `2^N` eigenvalue vectors, ordered by sign pattern.
#[derive(Debug, Clone)]
pub struct SolutionSet {
    pub solutions: Vec<EigenvalueVector>,
    pub spec: ModelSpec,
    pub diagnostics: SolverDiagnostics,
}

/// Trace sum rules `Σ_n r_i^n = 0` and `Σ_n (r_i^n)² = 2^N K_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SumRules {
    /// `|Σ_n r_i^n| / (2^N · max(1, √max K))` per charge.
    pub linear: Vec<f64>,
    /// `|Σ_n (r_i^n)² − 2^N K_i| / (2^N K_i)` per charge.
    pub quadratic: Vec<f64>,
}

impl SumRules {
    pub fn worst_linear(&self) -> f64 {
        self.linear.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn worst_quadratic(&self) -> f64 {
        self.quadratic.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Sum-rule residuals of any table of eigenvalue rows.
pub fn sum_rules<'a, I>(rows: I, couplings: &Couplings) -> SumRules
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let n = couplings.n_spins();
    let mut lin = vec![0.0; n];
    let mut quad = vec![0.0; n];
    let mut count = 0usize;
    for row in rows {
        for i in 0..n {
            lin[i] += row[i];
            quad[i] += row[i] * row[i];
        }
        count += 1;
    }
    let dim = count as f64;
    let scale = couplings.k().iter().fold(1.0_f64, |m, k| m.max(k.sqrt()));
    SumRules {
        linear: lin.iter().map(|s| s.abs() / (dim * scale)).collect(),
        quadratic: quad
            .iter()
            .zip(couplings.k())
            .map(|(s, k)| (s - dim * k).abs() / (dim * k))
            .collect(),
    }
}

impl SolutionSet {
    pub fn n_spins(&self) -> usize {
        self.spec.n_spins
    }

    pub fn get(&self, pattern: SignPattern) -> Option<&EigenvalueVector> {
        self.solutions.get(pattern.bits() as usize)
    }

    pub fn worst_residual(&self) -> f64 {
        self.solutions.iter().fold(0.0, |m, s| m.max(s.residual))
    }

    pub fn sum_rules(&self, couplings: &Couplings) -> SumRules {
        sum_rules(self.solutions.iter().map(|s| s.r.as_slice()), couplings)
    }

    /// Closest pair of solutions in the ∞-norm, as `(a, b, distance)`.
    pub fn closest_pair(&self) -> Option<(usize, usize, f64)> {
        closest_pair(&self.solutions)
    }
}

fn closest_pair(sols: &[EigenvalueVector]) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for a in 0..sols.len() {
        for b in a + 1..sols.len() {
            let d = sols[a]
                .r
                .iter()
                .zip(&sols[b].r)
                .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
            if best.map_or(true, |(_, _, bd)| d < bd) {
                best = Some((a, b, d));
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Initial number of continuation steps from `g = 0` to the target.
    pub n_steps_initial: usize,
    /// Final Newton tolerance; `None` means `1e-12 · max(1, ‖K‖_∞)`.
    pub tol: Option<f64>,
    pub max_newton_iter: usize,
    /// Smallest allowed step as a fraction of `|g_target|`.
    pub step_floor: f64,
    /// Full re-sweeps with doubled step counts after a suspected crossing.
    pub max_attempts: usize,
    /// Two solutions closer than this (∞-norm, relative to `max(1, ‖r‖)`)
    /// are considered the same.
    pub distinct_tol: f64,
    pub parallel: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            n_steps_initial: 64,
            tol: None,
            max_newton_iter: 50,
            step_floor: 2f64.powi(-20),
            max_attempts: 4,
            distinct_tol: 1e-6,
            parallel: true,
        }
    }
}

/// `Γ(g) = g Γ₁` and `K(g) = K₀ + g² K₂` along the continuation.
struct Homotopy {
    gamma1: DMatrix<f64>,
    k0: Vec<f64>,
    k2: Vec<f64>,
}

impl Homotopy {
    fn new(spec: &ModelSpec) -> Result<Self, ModelError> {
        let c0 = build_couplings(&spec.with_g(0.0))?;
        let c1 = build_couplings(&spec.with_g(1.0))?;
        let k0 = c0.k().to_vec();
        let k2 = c1.k().iter().zip(&k0).map(|(a, b)| a - b).collect();
        Ok(Self {
            gamma1: c1.gamma().clone(),
            k0,
            k2,
        })
    }

    fn at(&self, g: f64) -> (DMatrix<f64>, Vec<f64>) {
        let k = self
            .k0
            .iter()
            .zip(&self.k2)
            .map(|(a, b)| a + g * g * b)
            .collect();
        (&self.gamma1 * g, k)
    }

    /// `∂F/∂g` at `(r, g)`.
    fn dg(&self, r: &[f64], g: f64) -> DVector<f64> {
        let n = r.len();
        DVector::from_fn(n, |i, _| {
            let lin: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| self.gamma1[(i, j)] * r[j])
                .sum();
            -lin - 2.0 * g * self.k2[i]
        })
    }
}

fn equations(r: &[f64], gamma: &DMatrix<f64>, k: &[f64]) -> DVector<f64> {
    let n = r.len();
    DVector::from_fn(n, |i, _| {
        let lin: f64 = (0..n).filter(|&j| j != i).map(|j| gamma[(i, j)] * r[j]).sum();
        r[i] * r[i] - lin - k[i]
    })
}

fn jacobian(r: &[f64], gamma: &DMatrix<f64>) -> DMatrix<f64> {
    let n = r.len();
    DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 * r[i] } else { -gamma[(i, j)] })
}

fn det_scale(r: &[f64]) -> f64 {
    r.iter().map(|x| (2.0 * x.abs()).max(1.0)).product()
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Solves `J x = rhs`, rejecting near-singular Jacobians. Returns `x` and
/// the scaled determinant.
fn jacobian_solve(
    r: &[f64],
    gamma: &DMatrix<f64>,
    rhs: &DVector<f64>,
) -> Result<(DVector<f64>, f64), SolveError> {
    let lu = jacobian(r, gamma).lu();
    let det = lu.determinant();
    let scale = det_scale(r);
    let threshold = JACOBIAN_DET_TOL * scale;
    if !(det.abs() >= threshold) {
        return Err(SolveError::SingularJacobian {
            det: det.abs(),
            threshold,
        });
    }
    let x = lu.solve(rhs).ok_or(SolveError::SingularJacobian {
        det: det.abs(),
        threshold,
    })?;
    Ok((x, det.abs() / scale))
}

struct NewtonOutcome {
    r: Vec<f64>,
    residual: f64,
    iterations: usize,
    min_scaled_det: f64,
}

fn newton_core(
    r0: &[f64],
    gamma: &DMatrix<f64>,
    k: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<NewtonOutcome, SolveError> {
    let mut r = r0.to_vec();
    let mut f = equations(&r, gamma, k);
    let mut residual = max_abs(&f);
    let mut min_scaled_det = f64::INFINITY;
    let mut iterations = 0;
    while !(residual < tol) {
        if iterations == max_iter || !residual.is_finite() {
            return Err(SolveError::NewtonDiverged {
                iterations,
                residual,
            });
        }
        let (dx, sdet) = jacobian_solve(&r, gamma, &(-&f))?;
        min_scaled_det = min_scaled_det.min(sdet);
        r.iter_mut().zip(dx.iter()).for_each(|(x, d)| *x += d);
        f = equations(&r, gamma, k);
        residual = max_abs(&f);
        iterations += 1;
    }
    Ok(NewtonOutcome {
        r,
        residual,
        iterations,
        min_scaled_det,
    })
}

/// Default on-shell tolerance `1e-12 · max(1, ‖K‖_∞)`.
pub fn default_tol(couplings: &Couplings) -> f64 {
    1e-12 * couplings.residual_scale()
}

/// The `2^N` closed-form solutions of the decoupled (`g = 0`) system,
/// `r_i = s_i √(γ²/F_x² + λ²/F_y² + 1)`.
pub fn g_zero_solutions(spec: &ModelSpec) -> Result<SolutionSet, SolveError> {
    let zero = spec.with_g(0.0);
    let c = build_couplings(&zero)?;
    let n = spec.n_spins;
    let mag: Vec<f64> = c.k().iter().map(|k| k.sqrt()).collect();
    let solutions = (0..1u64 << n)
        .map(|bits| {
            let pattern = SignPattern::new(bits, n);
            let r: Vec<f64> = (0..n).map(|i| pattern.sign(i) * mag[i]).collect();
            EigenvalueVector {
                residual: c.bethe_residual(&r),
                r,
                sign_pattern: pattern,
                g_reached: 0.0,
            }
        })
        .collect();
    Ok(SolutionSet {
        solutions,
        spec: zero,
        diagnostics: SolverDiagnostics {
            steps: vec![0; 1 << n],
            rejected_steps: 0,
            min_scaled_jacobian_det: f64::INFINITY,
            attempts: 0,
        },
    })
}

/// Newton iteration on the quadratic system for the given couplings.
/// Returns the refined vector and the number of iterations taken (0 when
/// the input is already within `tol`).
pub fn newton_refine(
    start: &EigenvalueVector,
    couplings: &Couplings,
    tol: f64,
    max_iter: usize,
) -> Result<(EigenvalueVector, usize), SolveError> {
    let out = newton_core(&start.r, couplings.gamma(), couplings.k(), tol, max_iter)?;
    Ok((
        EigenvalueVector {
            r: out.r,
            residual: out.residual,
            sign_pattern: start.sign_pattern,
            g_reached: couplings.g(),
        },
        out.iterations,
    ))
}

struct PathResult {
    r: Vec<f64>,
    steps: usize,
    rejected: usize,
    min_scaled_det: f64,
}

fn continue_path(
    homotopy: &Homotopy,
    start: &[f64],
    pattern: SignPattern,
    g_target: f64,
    n_steps: usize,
    opts: &SolverOptions,
    step_tol: f64,
) -> Result<PathResult, SolveError> {
    let h0 = g_target / n_steps as f64;
    let h_max = 4.0 * h0.abs();
    let h_min = opts.step_floor * g_target.abs();
    let mut h = h0.abs();
    let dir = g_target.signum();
    let mut g = 0.0_f64;
    let mut r = start.to_vec();
    let mut steps = 0;
    let mut rejected = 0;
    let mut streak = 0;
    let mut min_scaled_det = f64::INFINITY;

    while g != g_target {
        let remaining = (g_target - g).abs();
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        let g_next = if last { g_target } else { g + dir * step };

        let attempt = (|| -> Result<(Vec<f64>, f64), SolveError> {
            let (gamma, _) = homotopy.at(g);
            let (tangent, sdet) = jacobian_solve(&r, &gamma, &(-homotopy.dg(&r, g)))?;
            let dgs = g_next - g;
            let predicted: Vec<f64> = r.iter().zip(tangent.iter()).map(|(x, t)| x + dgs * t).collect();
            let (gamma_n, k_n) = homotopy.at(g_next);
            let out = newton_core(&predicted, &gamma_n, &k_n, step_tol, 8)?;
            let shift = out
                .r
                .iter()
                .zip(&predicted)
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            // a corrector move comparable to the predictor step means the
            // Newton iteration may have hopped onto a neighbouring branch
            let allowed = 0.25 * dgs.abs() * max_abs(&tangent).max(1.0);
            if shift > allowed {
                return Err(SolveError::NewtonDiverged {
                    iterations: out.iterations,
                    residual: shift,
                });
            }
            Ok((out.r, sdet.min(out.min_scaled_det)))
        })();

        match attempt {
            Ok((r_new, sdet)) => {
                r = r_new;
                g = g_next;
                steps += 1;
                min_scaled_det = min_scaled_det.min(sdet);
                streak += 1;
                if streak >= 3 {
                    h = (2.0 * h).min(h_max);
                    streak = 0;
                }
            }
            Err(_) => {
                rejected += 1;
                streak = 0;
                h *= 0.5;
                if h < h_min {
                    return Err(SolveError::PathFailure {
                        pattern: pattern.bitstring(),
                        g_reached: g,
                        step_floor: h_min,
                    });
                }
            }
        }
    }
    Ok(PathResult {
        r,
        steps,
        rejected,
        min_scaled_det,
    })
}

/// Continues every `g = 0` branch to the spec's coupling with default
/// options and `n_steps_initial` initial steps.
pub fn homotopy_solve(spec: &ModelSpec, n_steps_initial: usize) -> Result<SolutionSet, SolveError> {
    homotopy_solve_with(
        spec,
        &SolverOptions {
            n_steps_initial,
            ..SolverOptions::default()
        },
    )
}

pub fn homotopy_solve_with(spec: &ModelSpec, opts: &SolverOptions) -> Result<SolutionSet, SolveError> {
    let target = build_couplings(spec)?;
    let start = g_zero_solutions(spec)?;
    if spec.g == 0.0 {
        return Ok(start);
    }
    let homotopy = Homotopy::new(spec)?;
    let tol = opts.tol.unwrap_or_else(|| default_tol(&target));
    let step_tol = 1e3 * tol;
    let n = spec.n_spins;

    let mut n_steps = opts.n_steps_initial.max(1);
    let mut attempts = 0;
    loop {
        attempts += 1;
        let run = |sol: &EigenvalueVector| -> Result<(EigenvalueVector, PathResult), SolveError> {
            let path = continue_path(&homotopy, &sol.r, sol.sign_pattern, spec.g, n_steps, opts, step_tol)?;
            let trial = EigenvalueVector {
                r: path.r.clone(),
                residual: f64::INFINITY,
                sign_pattern: sol.sign_pattern,
                g_reached: spec.g,
            };
            let (polished, _) = newton_refine(&trial, &target, tol, opts.max_newton_iter)?;
            Ok((polished, path))
        };
        let results: Vec<Result<_, SolveError>> = if opts.parallel {
            start.solutions.par_iter().map(run).collect()
        } else {
            start.solutions.iter().map(run).collect()
        };

        let mut solutions = Vec::with_capacity(1 << n);
        let mut diagnostics = SolverDiagnostics {
            steps: Vec::with_capacity(1 << n),
            rejected_steps: 0,
            min_scaled_jacobian_det: f64::INFINITY,
            attempts,
        };
        for res in results {
            let (sol, path) = res?;
            diagnostics.steps.push(path.steps);
            diagnostics.rejected_steps += path.rejected;
            diagnostics.min_scaled_jacobian_det = diagnostics.min_scaled_jacobian_det.min(path.min_scaled_det);
            solutions.push(sol);
        }

        let r_scale = solutions
            .iter()
            .flat_map(|s| s.r.iter())
            .fold(1.0_f64, |m, x| m.max(x.abs()));
        match closest_pair(&solutions) {
            Some((a, b, d)) if d <= opts.distinct_tol * r_scale => {
                if attempts >= opts.max_attempts {
                    return Err(SolveError::SuspectedPathCrossing {
                        a: solutions[a].sign_pattern.bitstring(),
                        b: solutions[b].sign_pattern.bitstring(),
                        distance: d,
                    });
                }
                log::warn!(
                    "branches {} and {} merged (distance {d:e}); retrying with {} steps",
                    solutions[a].sign_pattern,
                    solutions[b].sign_pattern,
                    2 * n_steps
                );
                n_steps *= 2;
            }
            _ => {
                return Ok(SolutionSet {
                    solutions,
                    spec: spec.clone(),
                    diagnostics,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xyz_spec(n: usize, g: f64) -> ModelSpec {
        ModelSpec {
            n_spins: n,
            epsilons: (0..n).map(|i| 0.2 + 1.1 * i as f64 + 0.07 * (i * i) as f64).collect(),
            g,
            gamma: 0.3,
            lambda_: 0.45,
            alpha_x: 0.3,
            beta_x: 1.0,
            alpha_y: 0.15,
            beta_y: 0.8,
        }
    }

    #[test]
    fn sign_pattern_round_trip() {
        let p = SignPattern::new(0b1011, 5);
        assert_eq!(p.bitstring(), "11010");
        assert_eq!(SignPattern::parse("11010", 5).unwrap(), p);
        assert_eq!(p.signs(), vec![1.0, 1.0, -1.0, 1.0, -1.0]);
        assert!(SignPattern::parse("1101", 5).is_err());
        assert!(SignPattern::parse("11x10", 5).is_err());
    }

    #[test]
    fn zero_field_branches_are_unit() {
        let spec = ModelSpec::xxx(vec![0.0, 0.5, 1.3], 0.8, 0.0, 0.0).unwrap();
        let set = g_zero_solutions(&spec).unwrap();
        assert_eq!(set.solutions.len(), 8);
        for (bits, s) in set.solutions.iter().enumerate() {
            assert_eq!(s.sign_pattern.bits(), bits as u64);
            assert_eq!(s.r, s.sign_pattern.signs());
            assert_eq!(s.residual, 0.0);
        }
    }

    #[test]
    fn zero_coupling_with_transverse_field() {
        let spec = ModelSpec::xxx(vec![0.0, 1.0], 0.0, 1.0, 0.0).unwrap();
        let set = g_zero_solutions(&spec).unwrap();
        for s in &set.solutions {
            for x in &s.r {
                assert!((x.abs() - 2f64.sqrt()).abs() < 1e-15);
            }
        }
        let again = homotopy_solve(&spec, 16).unwrap();
        assert_eq!(again.solutions, set.solutions);
    }

    #[test]
    fn newton_fixed_point_and_fast_convergence() {
        let spec = xyz_spec(4, 1e-6);
        let c = build_couplings(&spec).unwrap();
        let start = &g_zero_solutions(&spec).unwrap().solutions[5];
        let (sol, iters) = newton_refine(start, &c, default_tol(&c), 20).unwrap();
        assert!(iters <= 3, "took {iters} iterations");
        assert!(sol.residual < default_tol(&c));
        let (same, iters) = newton_refine(&sol, &c, default_tol(&c), 20).unwrap();
        assert_eq!(iters, 0);
        assert_eq!(same.r, sol.r);
    }

    #[test]
    fn newton_rejects_singular_start() {
        let spec = xyz_spec(3, 0.0);
        let c = build_couplings(&spec).unwrap();
        let start = EigenvalueVector {
            r: vec![0.0; 3],
            residual: f64::INFINITY,
            sign_pattern: SignPattern::new(0, 3),
            g_reached: 0.0,
        };
        assert!(matches!(
            newton_refine(&start, &c, 1e-12, 10),
            Err(SolveError::SingularJacobian { .. })
        ));
    }

    #[test]
    fn continuation_satisfies_equations_and_sum_rules() {
        for n in 2..=5 {
            let spec = xyz_spec(n, 0.7);
            let c = build_couplings(&spec).unwrap();
            let set = homotopy_solve(&spec, 32).unwrap();
            assert_eq!(set.solutions.len(), 1 << n);
            assert!(set.worst_residual() < default_tol(&c));
            let rules = set.sum_rules(&c);
            assert!(rules.worst_linear() < 1e-10, "{rules:?}");
            assert!(rules.worst_quadratic() < 1e-9, "{rules:?}");
            let (_, _, d) = set.closest_pair().unwrap();
            assert!(d > 1e-6);
        }
    }

    #[test]
    fn negative_coupling_and_determinism() {
        let spec = xyz_spec(4, -0.9);
        let a = homotopy_solve(&spec, 20).unwrap();
        let b = homotopy_solve_with(
            &spec,
            &SolverOptions {
                n_steps_initial: 20,
                parallel: false,
                ..SolverOptions::default()
            },
        )
        .unwrap();
        assert_eq!(a.solutions, b.solutions);
        let c = build_couplings(&spec).unwrap();
        assert!(a.worst_residual() < default_tol(&c));
    }
}

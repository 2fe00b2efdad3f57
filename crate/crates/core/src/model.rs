//! Integrable-model parametrization and the derived coupling constants.
//!
//! A model is fixed by the rapidities `ε_i`, the coupling `g`, the transverse
//! field parameters `γ`, `λ` and the two linear functions under the square
//! roots `F_x(ε) = sqrt(α_x ε + β_x)`, `F_y(ε) = sqrt(α_y ε + β_y)`. Every
//! charge is normalised to `B^z_i = 1`.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Relative gap below which two rapidities are treated as equal.
pub const EPSILON_GAP_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("at least 2 spins are required, got {0}")]
    TooFewSpins(usize),
    #[error("n_spins = {n_spins} but {n_eps} epsilons were given")]
    LengthMismatch { n_spins: usize, n_eps: usize },
    #[error("parameter `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("duplicate rapidities: epsilon_{i} = {ei} and epsilon_{j} = {ej} (gap below {tol:e} relative)")]
    DuplicateEpsilon {
        i: usize,
        j: usize,
        ei: f64,
        ej: f64,
        tol: f64,
    },
    #[error("F_{axis}(epsilon_{i})^2 = alpha_{axis} * {eps} + beta_{axis} = {value} is not positive")]
    NonPositiveF {
        axis: char,
        i: usize,
        eps: f64,
        value: f64,
    },
    #[error("cannot read model file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed model config: {0}")]
    Parse(String),
}

/// Free parameters of an integrable spin-1/2 model in a field.
///
/// Config files use the same field names (with `lambda` for `lambda_`);
/// unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub n_spins: usize,
    pub epsilons: Vec<f64>,
    pub g: f64,
    pub gamma: f64,
    #[serde(rename = "lambda")]
    pub lambda_: f64,
    pub alpha_x: f64,
    pub beta_x: f64,
    pub alpha_y: f64,
    pub beta_y: f64,
}

impl ModelSpec {
    /// Isotropic model: `F_x = F_y = 1`, so `X_ij = Y_ij = Z_ij`.
    pub fn xxx(epsilons: Vec<f64>, g: f64, gamma: f64, lambda_: f64) -> Result<Self, ModelError> {
        let spec = Self {
            n_spins: epsilons.len(),
            epsilons,
            g,
            gamma,
            lambda_,
            alpha_x: 0.0,
            beta_x: 1.0,
            alpha_y: 0.0,
            beta_y: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Uniaxial model: `F_x = F_y = sqrt(α ε + β)`, so `X_ij = Y_ij`.
    pub fn xxz(
        epsilons: Vec<f64>,
        g: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
        lambda_: f64,
    ) -> Result<Self, ModelError> {
        let spec = Self {
            n_spins: epsilons.len(),
            epsilons,
            g,
            gamma,
            lambda_,
            alpha_x: alpha,
            beta_x: beta,
            alpha_y: alpha,
            beta_y: beta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.n_spins;
        if n < 2 {
            return Err(ModelError::TooFewSpins(n));
        }
        if self.epsilons.len() != n {
            return Err(ModelError::LengthMismatch {
                n_spins: n,
                n_eps: self.epsilons.len(),
            });
        }
        let scalars = [
            ("g", self.g),
            ("gamma", self.gamma),
            ("lambda", self.lambda_),
            ("alpha_x", self.alpha_x),
            ("beta_x", self.beta_x),
            ("alpha_y", self.alpha_y),
            ("beta_y", self.beta_y),
        ];
        for (name, v) in scalars {
            if !v.is_finite() {
                return Err(ModelError::NonFinite(name));
            }
        }
        if self.epsilons.iter().any(|e| !e.is_finite()) {
            return Err(ModelError::NonFinite("epsilons"));
        }

        let eps_max = self.epsilons.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
        let tol = EPSILON_GAP_TOL * eps_max;
        for i in 0..n {
            for j in i + 1..n {
                let gap = (self.epsilons[i] - self.epsilons[j]).abs();
                if gap == 0.0 || gap < tol {
                    return Err(ModelError::DuplicateEpsilon {
                        i: i + 1,
                        j: j + 1,
                        ei: self.epsilons[i],
                        ej: self.epsilons[j],
                        tol: EPSILON_GAP_TOL,
                    });
                }
            }
        }

        for (i, &eps) in self.epsilons.iter().enumerate() {
            for (axis, a, b) in [('x', self.alpha_x, self.beta_x), ('y', self.alpha_y, self.beta_y)] {
                let value = a * eps + b;
                if !(value > 0.0) {
                    return Err(ModelError::NonPositiveF {
                        axis,
                        i: i + 1,
                        eps,
                        value,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn f_x(&self, eps: f64) -> f64 {
        (self.alpha_x * eps + self.beta_x).sqrt()
    }

    pub fn f_y(&self, eps: f64) -> f64 {
        (self.alpha_y * eps + self.beta_y).sqrt()
    }

    pub fn with_g(&self, g: f64) -> Self {
        Self { g, ..self.clone() }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ModelError> {
        let spec: Self = toml::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("model spec is always serializable")
    }

    /// Canonical text form: every float printed with 17 significant digits.
    fn canonical_text(&self) -> String {
        let eps: Vec<String> = self.epsilons.iter().map(|e| format!("{e:.16e}")).collect();
        format!(
            "n_spins={};epsilons=[{}];g={:.16e};gamma={:.16e};lambda={:.16e};alpha_x={:.16e};beta_x={:.16e};alpha_y={:.16e};beta_y={:.16e}",
            self.n_spins,
            eps.join(","),
            self.g,
            self.gamma,
            self.lambda_,
            self.alpha_x,
            self.beta_x,
            self.alpha_y,
            self.beta_y
        )
    }

    /// 16 hex digits of SHA-256 over the canonical text form; embedded in
    /// every output header to tie artifacts to their model.
    pub fn spec_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        hex::encode(&digest[..8])
    }
}

/// Derived couplings, fields, `Γ` and `K` of a validated [`ModelSpec`].
///
/// Charges read as
/// `R_i = B_i·σ_i + Σ_{j≠i} (X_ij σ^x_i σ^x_j + Y_ij σ^y_i σ^y_j + Z_ij σ^z_i σ^z_j)`
/// and obey `R_i² = Σ_{j≠i} Γ_ij R_j + K_i`.
#[derive(Debug, Clone)]
pub struct Couplings {
    n: usize,
    g: f64,
    epsilons: Vec<f64>,
    fx: Vec<f64>,
    fy: Vec<f64>,
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    z: DMatrix<f64>,
    gamma: DMatrix<f64>,
    bx: Vec<f64>,
    by: Vec<f64>,
    bz: Vec<f64>,
    k: Vec<f64>,
}

pub fn build_couplings(spec: &ModelSpec) -> Result<Couplings, ModelError> {
    spec.validate()?;
    let n = spec.n_spins;
    let eps = &spec.epsilons;
    let g = spec.g;
    let fx: Vec<f64> = eps.iter().map(|&e| spec.f_x(e)).collect();
    let fy: Vec<f64> = eps.iter().map(|&e| spec.f_y(e)).collect();

    let mut x = DMatrix::zeros(n, n);
    let mut y = DMatrix::zeros(n, n);
    let mut z = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = eps[i] - eps[j];
            x[(i, j)] = g * fx[i] * fy[j] / d;
            y[(i, j)] = g * fx[j] * fy[i] / d;
            z[(i, j)] = g * fx[j] * fy[j] / d;
        }
    }
    let gamma = &z * 2.0;

    let bx: Vec<f64> = fx.iter().map(|f| spec.gamma / f).collect();
    let by: Vec<f64> = fy.iter().map(|f| spec.lambda_ / f).collect();
    let bz = vec![1.0; n];

    let k = (0..n)
        .map(|i| {
            let field = bx[i] * bx[i] + by[i] * by[i] + bz[i] * bz[i];
            let pair: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| x[(i, j)].powi(2) + y[(i, j)].powi(2) + z[(i, j)].powi(2))
                .sum();
            field + pair
        })
        .collect();

    Ok(Couplings {
        n,
        g,
        epsilons: eps.clone(),
        fx,
        fy,
        x,
        y,
        z,
        gamma,
        bx,
        by,
        bz,
        k,
    })
}

impl Couplings {
    pub fn n_spins(&self) -> usize {
        self.n
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn epsilons(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn fx(&self) -> &[f64] {
        &self.fx
    }

    pub fn fy(&self) -> &[f64] {
        &self.fy
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn gamma(&self) -> &DMatrix<f64> {
        &self.gamma
    }

    pub fn bx(&self) -> &[f64] {
        &self.bx
    }

    pub fn by(&self) -> &[f64] {
        &self.by
    }

    pub fn bz(&self) -> &[f64] {
        &self.bz
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    /// Upper bound on the operator norm of every charge:
    /// `max_i |B_i| + Σ_j (|X_ij| + |Y_ij| + |Z_ij|)`.
    pub fn charge_scale(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let field =
                    (self.bx[i].powi(2) + self.by[i].powi(2) + self.bz[i].powi(2)).sqrt();
                let pair: f64 = (0..self.n)
                    .filter(|&j| j != i)
                    .map(|j| self.x[(i, j)].abs() + self.y[(i, j)].abs() + self.z[(i, j)].abs())
                    .sum();
                field + pair
            })
            .fold(0.0, f64::max)
    }

    /// Largest coupling magnitude (at least 1), the reference scale for
    /// identity checks on the coupling matrices.
    pub fn coupling_scale(&self) -> f64 {
        let m = [&self.x, &self.y, &self.z]
            .iter()
            .flat_map(|m| m.iter())
            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
        m.max(1.0)
    }

    /// Weight `4 g² F_x F_y(ε_i) F_x F_y(ε_j) / (ε_i − ε_j)²` of the pair
    /// `{i, j}` in the pairing expansion; equals `−Γ_ij Γ_ji`.
    pub fn pair_weight(&self, i: usize, j: usize) -> f64 {
        let fi = self.fx[i] * self.fy[i];
        let fj = self.fx[j] * self.fy[j];
        let d = self.epsilons[i] - self.epsilons[j];
        4.0 * self.g * self.g * fi * fj / (d * d)
    }

    /// Residual of the quadratic Bethe equations,
    /// `max_i |r_i² − Σ_{j≠i} Γ_ij r_j − K_i|`.
    pub fn bethe_residual(&self, r: &[f64]) -> f64 {
        self.bethe_equations(r)
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn bethe_equations(&self, r: &[f64]) -> Vec<f64> {
        assert_eq!(r.len(), self.n, "eigenvalue vector length");
        (0..self.n)
            .map(|i| {
                let lin: f64 = (0..self.n)
                    .filter(|&j| j != i)
                    .map(|j| self.gamma[(i, j)] * r[j])
                    .sum();
                r[i] * r[i] - lin - self.k[i]
            })
            .collect()
    }

    /// Scale used for Bethe-equation residual tolerances, `max(1, ‖K‖_∞)`.
    pub fn residual_scale(&self) -> f64 {
        self.k.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Anisotropy class of a randomly drawn model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Xxx,
    Xxz,
    Xyz,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Xxx, Family::Xxz, Family::Xyz];
}

/// Draws a well-separated model: `ε_i = i + U(−0.3, 0.3)`, `|g| ∈ [0.2, 0.8]`
/// with random sign, and `F²` bounded away from zero on `[0, N]`. Without
/// `transverse` the field is along z only.
pub fn random_spec<R: Rng + ?Sized>(n: usize, family: Family, transverse: bool, rng: &mut R) -> ModelSpec {
    let epsilons = (0..n).map(|i| i as f64 + rng.gen_range(-0.3..0.3)).collect();
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let g = sign * rng.gen_range(0.2..0.8);
    let bound = 0.5 / (n as f64 + 0.3);
    let line = |rng: &mut R| (rng.gen_range(-bound..bound), rng.gen_range(0.8..1.5));
    let ((alpha_x, beta_x), (alpha_y, beta_y)) = match family {
        Family::Xxx => ((0.0, 1.0), (0.0, 1.0)),
        Family::Xxz => {
            let l = line(rng);
            (l, l)
        }
        Family::Xyz => (line(rng), line(rng)),
    };
    let (gamma, lambda_) = if transverse {
        (rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6))
    } else {
        (0.0, 0.0)
    };
    ModelSpec {
        n_spins: n,
        epsilons,
        g,
        gamma,
        lambda_,
        alpha_x,
        beta_x,
        alpha_y,
        beta_y,
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "N={} g={} gamma={} lambda={} F_x^2=({})eps+({}) F_y^2=({})eps+({})",
            self.n_spins,
            self.g,
            self.gamma,
            self.lambda_,
            self.alpha_x,
            self.beta_x,
            self.alpha_y,
            self.beta_y
        )
    }
}

//! Command-line surface: `validate`, `solve`, `project`, `check`, `bench`.
//!
//! Exit codes are 0 on success, 1 on a numerical or property failure and 2
//! on bad input. Every output file carries the model's spec hash.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bethe_solver::{default_tol, homotopy_solve_with, SignPattern, SolverOptions};
use crate::io::{self, SpectrumFile};
use crate::model::{build_couplings, random_spec, Couplings, Family, ModelSpec};
use crate::projector::{
    four_spin_closed_form, offshell_coefficient, offshell_scale, pairing_coefficient, pairing_coefficient_det,
    scalar_norm_det, ProjectorEngine, ProjectorError, Strategy, IDENTITY_CAP,
};
use crate::spin_algebra::{charges, commutator_residual, quadratic_operator_residual, StateVector, DENSE_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Largest N accepted by `check`.
pub const CHECK_CAP: usize = 8;
/// Above this N the product check runs on the eigenvector instead of dense
/// matrices.
pub const DENSE_PRODUCT_CAP: usize = 5;
/// Largest N at which `bench` times the dense Laplace strategy.
pub const BENCH_DENSE_CAP: usize = 10;

const SPECTRUM_FILE: &str = "spectrum.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check commutation and quadratic charge identities.
    Validate,
    /// Solve the quadratic eigenvalue equations and write the spectrum.
    Solve,
    /// Build eigenstates by projecting a vacuum.
    Project,
    /// Run the full property suite on one model.
    Check,
    /// Time the solver and projector over a range of N.
    Bench,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StateSelector {
    All,
    Pattern(String),
}

impl FromStr for StateSelector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            Ok(StateSelector::All)
        } else if !s.is_empty() && s.chars().all(|c| c == '0' || c == '1') {
            Ok(StateSelector::Pattern(s.to_string()))
        } else {
            Err(format!("`{s}` is neither `all` nor a 0/1 bitstring"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VacuumChoice {
    Uniform,
    File(PathBuf),
}

impl FromStr for VacuumChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("uniform") {
            Ok(VacuumChoice::Uniform)
        } else {
            Ok(VacuumChoice::File(PathBuf::from(s)))
        }
    }
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("`{s}` is not of the form lo..hi"))?;
    let lo: usize = lo.trim().parse().map_err(|_| format!("bad lower bound in `{s}`"))?;
    let hi: usize = hi.trim().parse().map_err(|_| format!("bad upper bound in `{s}`"))?;
    if lo < 2 || lo > hi || hi > 16 {
        return Err(format!("range `{s}` must satisfy 2 <= lo <= hi <= 16"));
    }
    Ok((lo, hi))
}

fn parse_positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "rg-eigen", version, about = "Eigenstates of spin-1/2 Richardson-Gaudin models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Model config (TOML).
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Sign pattern (`1` = + branch, spin 1 first) or `all`.
    #[arg(long, global = true, default_value = "all")]
    state: StateSelector,
    /// `uniform` or a state-vector file.
    #[arg(long, global = true, default_value = "uniform")]
    vacuum: VacuumChoice,
    /// Overrides the command's tolerance.
    #[arg(long, global = true, value_parser = parse_positive)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value = "subset-tree")]
    strategy: Strategy,
    /// Initial continuation step count.
    #[arg(long, global = true, default_value_t = 64)]
    g_steps: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Inclusive spin-count range for `bench`.
    #[arg(long, global = true, default_value = "4..12", value_parser = parse_range)]
    bench_range: (usize, usize),
}

/// Fully parsed invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub state: StateSelector,
    pub vacuum: VacuumChoice,
    pub tol: Option<f64>,
    pub seed: u64,
    pub strategy: Strategy,
    pub g_steps: usize,
    pub bench_range: (usize, usize),
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            model: None,
            out: None,
            state: StateSelector::All,
            vacuum: VacuumChoice::Uniform,
            tol: None,
            seed: 0,
            strategy: Strategy::SubsetTree,
            g_steps: 64,
            bench_range: (4, 12),
        }
    }

    /// Checks the command-specific required fields.
    pub fn validate(&self) -> Result<(), String> {
        let needs_model = !matches!(self.command, Command::Bench);
        let needs_out = matches!(self.command, Command::Solve | Command::Project);
        if needs_model && self.model.is_none() {
            return Err("--model is required".into());
        }
        if needs_out && self.out.is_none() {
            return Err("--out is required".into());
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(format!("--tol must be positive, got {t}"));
            }
        }
        if self.g_steps == 0 {
            return Err("--g-steps must be at least 1".into());
        }
        Ok(())
    }

    fn model_path(&self) -> &Path {
        self.model.as_deref().expect("validated")
    }

    fn out_dir(&self) -> &Path {
        self.out.as_deref().expect("validated")
    }
}

impl From<Cli> for RunConfig {
    fn from(c: Cli) -> Self {
        Self {
            command: c.command,
            model: c.model,
            out: c.out,
            state: c.state,
            vacuum: c.vacuum,
            tol: c.tol,
            seed: c.seed,
            strategy: c.strategy,
            g_steps: c.g_steps,
            bench_range: c.bench_range,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    run(&cli.into(), out, err)
}

pub fn run(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Err(msg) = config.validate() {
        let _ = writeln!(err, "error: {msg}");
        return EXIT_INPUT;
    }
    match config.command {
        Command::Validate => cmd_validate(config, out, err),
        Command::Solve => cmd_solve(config, out, err),
        Command::Project => cmd_project(config, out, err),
        Command::Check => cmd_check(config, out, err),
        Command::Bench => cmd_bench(config, out, err),
    }
}

fn load_model(config: &RunConfig, err: &mut dyn Write) -> Result<(ModelSpec, Couplings), i32> {
    let spec = ModelSpec::load(config.model_path()).map_err(|e| {
        let _ = writeln!(err, "error: {e}");
        EXIT_INPUT
    })?;
    let couplings = build_couplings(&spec).map_err(|e| {
        let _ = writeln!(err, "error: {e}");
        EXIT_INPUT
    })?;
    Ok((spec, couplings))
}

fn status(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn cmd_validate(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (spec, couplings) = match load_model(config, err) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let tol = config.tol.unwrap_or(1e-12);
    let n = spec.n_spins;
    let _ = writeln!(out, "model  {spec}");
    let _ = writeln!(out, "hash   {}", spec.spec_hash());
    if n > DENSE_CAP {
        let _ = writeln!(out, "commutator residuals: skipped (N above dense cap)");
        let _ = writeln!(out, "quadratic residuals: skipped (N above dense cap)");
        return EXIT_OK;
    }
    let ops = charges(&couplings);
    let mut ok = true;
    let _ = writeln!(out, "{:<12} {:<10} {:>12} {:>8} status", "identity", "charges", "residual", "tol");
    for i in 0..n {
        for j in i + 1..n {
            let res = commutator_residual(&ops, i, j).expect("below dense cap");
            let pass = res < tol;
            ok &= pass;
            let label = format!("R{},R{}", i + 1, j + 1);
            let _ = writeln!(out, "{:<12} {:<10} {res:>12.3e} {tol:>8.0e} {}", "commutator", label, status(pass));
        }
    }
    for i in 0..n {
        let res = quadratic_operator_residual(&couplings, &ops, i).expect("below dense cap");
        let pass = res < tol;
        ok &= pass;
        let label = format!("R{}", i + 1);
        let _ = writeln!(out, "{:<12} {:<10} {res:>12.3e} {tol:>8.0e} {}", "quadratic", label, status(pass));
    }
    if ok {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

fn solver_options(config: &RunConfig) -> SolverOptions {
    SolverOptions {
        n_steps_initial: config.g_steps,
        tol: config.tol,
        ..SolverOptions::default()
    }
}

fn solve_spectrum(config: &RunConfig, spec: &ModelSpec, err: &mut dyn Write) -> Result<SpectrumFile, i32> {
    match homotopy_solve_with(spec, &solver_options(config)) {
        Ok(set) => Ok(io::spectrum_from_solutions(&set)),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            Err(EXIT_FAILURE)
        }
    }
}

fn ensure_out_dir(dir: &Path, err: &mut dyn Write) -> Result<(), i32> {
    fs::create_dir_all(dir).map_err(|e| {
        let _ = writeln!(err, "error: cannot create {}: {e}", dir.display());
        EXIT_INPUT
    })
}

pub fn cmd_solve(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (spec, couplings) = match load_model(config, err) {
        Ok(m) => m,
        Err(code) => return code,
    };
    if let Err(code) = ensure_out_dir(config.out_dir(), err) {
        return code;
    }
    let start = Instant::now();
    let set = match homotopy_solve_with(&spec, &solver_options(config)) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let elapsed = start.elapsed();
    let path = config.out_dir().join(SPECTRUM_FILE);
    if let Err(e) = io::write_spectrum(&path, &io::spectrum_from_solutions(&set)) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_INPUT;
    }
    let rules = set.sum_rules(&couplings);
    let _ = writeln!(out, "solutions       {}", set.solutions.len());
    let _ = writeln!(out, "worst residual  {:.3e}", set.worst_residual());
    let _ = writeln!(out, "tolerance       {:.3e}", config.tol.unwrap_or_else(|| default_tol(&couplings)));
    let _ = writeln!(out, "sum rule (lin)  {:.3e}", rules.worst_linear());
    let _ = writeln!(out, "sum rule (quad) {:.3e}", rules.worst_quadratic());
    let _ = writeln!(out, "attempts        {}", set.diagnostics.attempts);
    let _ = writeln!(out, "wall time       {:.1} ms", elapsed.as_secs_f64() * 1e3);
    let _ = writeln!(out, "wrote           {}", path.display());
    EXIT_OK
}

fn load_or_solve(config: &RunConfig, spec: &ModelSpec, err: &mut dyn Write) -> Result<SpectrumFile, i32> {
    let path = config.out_dir().join(SPECTRUM_FILE);
    let hash = spec.spec_hash();
    if path.exists() {
        match io::read_spectrum(&path) {
            Ok(f) if f.spec_hash == hash && f.n_spins == spec.n_spins && f.rows.len() == 1 << spec.n_spins => {
                return Ok(f)
            }
            Ok(_) => log::info!("{} belongs to another model; solving inline", path.display()),
            Err(e) => log::info!("ignoring unreadable {}: {e}", path.display()),
        }
    }
    let file = solve_spectrum(config, spec, err)?;
    if let Err(e) = io::write_spectrum(&path, &file) {
        let _ = writeln!(err, "error: {e}");
        return Err(EXIT_INPUT);
    }
    Ok(file)
}

fn load_vacuum(config: &RunConfig, spec: &ModelSpec, err: &mut dyn Write) -> Result<StateVector, i32> {
    match &config.vacuum {
        VacuumChoice::Uniform => Ok(StateVector::uniform(spec.n_spins)),
        VacuumChoice::File(path) => {
            let file = io::read_state(path).map_err(|e| {
                let _ = writeln!(err, "error: {e}");
                EXIT_INPUT
            })?;
            if file.state.n_spins() != spec.n_spins {
                let _ = writeln!(
                    err,
                    "error: vacuum has {} spins, model has {}",
                    file.state.n_spins(),
                    spec.n_spins
                );
                return Err(EXIT_INPUT);
            }
            if file.state.norm() == 0.0 {
                let _ = writeln!(err, "error: vacuum {} is the zero vector", path.display());
                return Err(EXIT_INPUT);
            }
            Ok(file.state)
        }
    }
}

pub fn cmd_project(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (spec, couplings) = match load_model(config, err) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let n = spec.n_spins;
    if let StateSelector::Pattern(p) = &config.state {
        if SignPattern::parse(p, n).is_err() {
            let _ = writeln!(err, "error: --state `{p}` must have exactly {n} characters");
            return EXIT_INPUT;
        }
    }
    if config.strategy == Strategy::DenseLaplace && n > DENSE_CAP {
        let _ = writeln!(err, "error: dense-laplace is limited to N <= {DENSE_CAP}");
        return EXIT_INPUT;
    }
    let omega = match load_vacuum(config, &spec, err) {
        Ok(v) => v,
        Err(code) => return code,
    };
    if let Err(code) = ensure_out_dir(config.out_dir(), err) {
        return code;
    }
    let spectrum = match load_or_solve(config, &spec, err) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let rows: Vec<_> = match &config.state {
        StateSelector::All => spectrum.rows.iter().collect(),
        StateSelector::Pattern(p) => spectrum.row(p).into_iter().collect(),
    };
    let tol = config.tol.unwrap_or(1e-8);
    let hash = spec.spec_hash();
    let engine = ProjectorEngine::new(&couplings);
    let mut failures = 0usize;
    let _ = writeln!(out, "{:<width$} {:>12} {:>12} {:>12} status", "state", "eigen", "idempotency", "N(r)", width = n.max(5));
    for row in rows {
        let label = &row.label;
        match engine.project_and_normalize_with(&row.r, &omega, config.strategy) {
            Ok(p) => {
                let d = &p.diagnostics;
                let worst = d.worst_eigen_residual();
                let pass = worst < tol && d.idempotency_residual < tol;
                if !pass {
                    failures += 1;
                }
                let state = p.state.normalized_with_phase().expect("nonzero projection");
                let dir = config.out_dir();
                let written = io::write_state(&dir.join(format!("state_{label}.txt")), &state, Some(&hash))
                    .and_then(|_| {
                        io::write_atomic(
                            &dir.join(format!("state_{label}.diag.txt")),
                            &io::render_diagnostics(label, &hash, d),
                        )
                    });
                if let Err(e) = written {
                    let _ = writeln!(err, "error: {e}");
                    return EXIT_INPUT;
                }
                let _ = writeln!(
                    out,
                    "{label:<width$} {worst:>12.3e} {:>12.3e} {:>12.4e} {}",
                    d.idempotency_residual,
                    d.normalization,
                    status(pass),
                    width = n.max(5)
                );
            }
            Err(ProjectorError::VacuumOrthogonal { weight }) => {
                failures += 1;
                let _ = writeln!(out, "{label:<width$} vacuum orthogonal (weight {weight:.1e})", width = n.max(5));
                let _ = writeln!(
                    err,
                    "error: state {label}: the vacuum has no overlap with this eigenstate. With a purely \
                     longitudinal field the up-spin parity is conserved, so a single product state only \
                     reaches one parity sector; use --vacuum uniform or a vacuum spread over every sector"
                );
            }
            Err(e) => {
                failures += 1;
                let _ = writeln!(err, "error: state {label}: {e}");
            }
        }
    }
    if failures == 0 {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

/// One line of the property scoreboard.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    /// `None` for skipped checks.
    pub value: Option<f64>,
    pub tol: f64,
    pub skip_reason: &'static str,
}

impl CheckLine {
    fn new(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value: Some(value),
            tol,
            skip_reason: "",
        }
    }

    fn skipped(name: impl Into<String>, tol: f64, reason: &'static str) -> Self {
        Self {
            name: name.into(),
            value: None,
            tol,
            skip_reason: reason,
        }
    }

    pub fn passed(&self) -> bool {
        match self.value {
            None => true,
            Some(v) if self.tol == 0.0 => v == 0.0,
            Some(v) => v < self.tol,
        }
    }
}

fn random_r(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

/// Runs the property suite on a model with `N <= CHECK_CAP`.
pub fn property_suite(spec: &ModelSpec, seed: u64, g_steps: usize) -> Result<Vec<CheckLine>, String> {
    let n = spec.n_spins;
    if n > CHECK_CAP {
        return Err(format!("check needs N <= {CHECK_CAP}, got {n}"));
    }
    let couplings = build_couplings(spec).map_err(|e| e.to_string())?;
    let set = homotopy_solve_with(
        spec,
        &SolverOptions {
            n_steps_initial: g_steps,
            ..SolverOptions::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let engine = ProjectorEngine::new(&couplings);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::new();

    for a in [0.5, 1.0, 2.0] {
        let name = format!("identity resolution a={a}");
        if n <= IDENTITY_CAP {
            let res = engine.identity_resolution_check(a).map_err(|e| e.to_string())?;
            lines.push(CheckLine::new(name, res, 1e-10));
        } else {
            lines.push(CheckLine::skipped(name, 1e-10, "N above quadrature cap"));
        }
    }

    let sols = &set.solutions;
    let mut worst_off = 0.0_f64;
    let mut worst_diag = 0.0_f64;
    for (a, sa) in sols.iter().enumerate() {
        for (b, sb) in sols.iter().enumerate() {
            let c = offshell_coefficient(&sa.r, &sb.r, &couplings);
            if a == b {
                let norm = scalar_norm_det(&sa.r, &couplings);
                worst_diag = worst_diag.max((c - norm).abs() / norm.abs());
            } else {
                worst_off = worst_off.max(c.abs() / offshell_scale(&sa.r, &sb.r, &couplings));
            }
        }
    }
    lines.push(CheckLine::new("off-shell coefficient n != m", worst_off, 1e-9));
    lines.push(CheckLine::new("off-shell coefficient n == m", worst_diag, 1e-12));

    let mut odd_max = 0.0_f64;
    let mut even_rel = 0.0_f64;
    for mask in 0usize..1 << n {
        let idx: Vec<usize> = (0..n).filter(|k| (mask >> k) & 1 == 1).collect();
        let table = engine.pairing_value(mask);
        if idx.len() % 2 == 1 {
            odd_max = odd_max.max(table.abs()).max(pairing_coefficient(&idx, &couplings).abs());
        } else {
            let pairing = pairing_coefficient(&idx, &couplings);
            let det = pairing_coefficient_det(&idx, &couplings);
            let scale = pairing.abs().max(f64::MIN_POSITIVE);
            even_rel = even_rel.max((det - pairing).abs() / scale).max((table - pairing).abs() / scale);
        }
    }
    lines.push(CheckLine::new("pairing coefficient odd (exact zero)", odd_max, 0.0));
    lines.push(CheckLine::new("pairing coefficient det vs pairing", even_rel, 1e-10));

    match four_spin_closed_form(&couplings) {
        Some(closed) => {
            let terms = engine.expansion_terms();
            let mut worst = if terms.len() == closed.len() { 0.0_f64 } else { f64::INFINITY };
            for (t, e) in terms.iter().zip(&closed) {
                if t.complement != e.complement {
                    worst = f64::INFINITY;
                }
                worst = worst.max((t.value - e.value).abs() / e.value.abs());
            }
            lines.push(CheckLine::new("four-spin expansion", worst, 1e-12));
        }
        None => lines.push(CheckLine::skipped("four-spin expansion", 1e-12, "needs N = 4")),
    }

    let dim = 1usize << n;
    let picks: Vec<usize> = if dim <= 32 {
        (0..dim).collect()
    } else {
        let mut p = sample(&mut rng, dim, 8).into_vec();
        p.sort_unstable();
        p
    };
    let omega = StateVector::uniform(n);
    let mut worst_product = 0.0_f64;
    for &k in &picks {
        let rn = &sols[k].r;
        let nn = scalar_norm_det(rn, &couplings);
        if n <= DENSE_PRODUCT_CAP {
            let pn = engine.dense_projector(rn, Strategy::SubsetTree).map_err(|e| e.to_string())? / Complex64::new(nn, 0.0);
            for _ in 0..2 {
                let r = random_r(n, &mut rng);
                let p = engine.dense_projector(&r, Strategy::SubsetTree).map_err(|e| e.to_string())?;
                let c = offshell_coefficient(&r, rn, &couplings);
                let diff = &p * &pn - &pn * Complex64::new(c, 0.0);
                worst_product = worst_product.max(diff.norm() / p.norm().max(1e-300));
            }
        } else {
            let psi = engine.project_and_normalize(rn, &omega).map_err(|e| e.to_string())?.state;
            for _ in 0..2 {
                let r = random_r(n, &mut rng);
                let mut lhs = engine.apply(&r, &psi, Strategy::SubsetTree).map_err(|e| e.to_string())?;
                let c = offshell_coefficient(&r, rn, &couplings);
                lhs.axpy(Complex64::new(-c, 0.0), &psi);
                worst_product = worst_product.max(lhs.norm() / (c.abs().max(1e-300) * psi.norm()));
            }
        }
    }
    let product_name = if n <= DENSE_PRODUCT_CAP {
        "on/off-shell product (dense)"
    } else {
        "on/off-shell product (on eigenvector)"
    };
    lines.push(CheckLine::new(product_name, worst_product, 1e-9));

    let mut worst_eigen = 0.0_f64;
    let mut worst_idem = 0.0_f64;
    for s in sols {
        let p = engine.project_and_normalize(&s.r, &omega).map_err(|e| e.to_string())?;
        worst_eigen = worst_eigen.max(p.diagnostics.worst_eigen_residual());
        worst_idem = worst_idem.max(p.diagnostics.idempotency_residual);
    }
    lines.push(CheckLine::new("eigen residual", worst_eigen, 1e-8));
    lines.push(CheckLine::new("idempotency", worst_idem, 1e-8));

    let rules = set.sum_rules(&couplings);
    lines.push(CheckLine::new("sum rule linear", rules.worst_linear(), 1e-9));
    lines.push(CheckLine::new("sum rule quadratic", rules.worst_quadratic(), 1e-9));
    Ok(lines)
}

pub fn cmd_check(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (spec, _) = match load_model(config, err) {
        Ok(m) => m,
        Err(code) => return code,
    };
    if spec.n_spins > CHECK_CAP {
        let _ = writeln!(err, "error: check needs N <= {CHECK_CAP}, got {}", spec.n_spins);
        return EXIT_INPUT;
    }
    let lines = match property_suite(&spec, config.seed, config.g_steps) {
        Ok(l) => l,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let mut ok = true;
    for l in &lines {
        ok &= l.passed();
        match l.value {
            Some(v) => {
                let bound = if l.tol == 0.0 { "== 0".to_string() } else { format!("< {:.1e}", l.tol) };
                let _ = writeln!(out, "{:<38} {v:>10.3e} {bound:>10}  {}", l.name, status(l.passed()));
            }
            None => {
                let _ = writeln!(out, "{:<38} skipped ({})", l.name, l.skip_reason);
            }
        }
    }
    let passed = lines.iter().filter(|l| l.passed()).count();
    let _ = writeln!(out, "{passed}/{} checks passed", lines.len());
    if ok {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

/// Peak resident set size of this process in kB, where the OS reports it.
pub fn peak_rss_kb() -> Option<u64> {
    let status = fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

pub fn cmd_bench(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    const REPEATS: usize = 3;
    let (lo, hi) = config.bench_range;
    let header = "n,task,strategy,repeats,wall_ms_mean,wall_ms_std,peak_rss_kb";
    let _ = writeln!(out, "{header}");
    let mut table = format!("{header}\n");
    let mut emit = |table: &mut String, line: String| {
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
        table.push_str(&line);
        table.push('\n');
    };
    for n in lo..=hi {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ ((n as u64) << 32));
        let spec = random_spec(n, Family::Xyz, true, &mut rng);
        let couplings = build_couplings(&spec).expect("random specs are valid");
        let rss = || peak_rss_kb().map(|k| k.to_string()).unwrap_or_default();

        let mut times = Vec::new();
        let mut r = None;
        for _ in 0..REPEATS {
            let t = Instant::now();
            match homotopy_solve_with(&spec, &solver_options(config)) {
                Ok(set) => r = Some(set.solutions[0].r.clone()),
                Err(e) => {
                    let _ = writeln!(err, "warning: N={n} solve failed: {e}");
                    break;
                }
            }
            times.push(t.elapsed().as_secs_f64() * 1e3);
        }
        if times.len() == REPEATS {
            let (m, s) = mean_std(&times);
            emit(&mut table, format!("{n},solve,homotopy,{REPEATS},{m:.3},{s:.3},{}", rss()));
        } else {
            emit(&mut table, format!("{n},solve,homotopy,0,failed,failed,"));
        }

        let r = r.unwrap_or_else(|| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
        let omega = StateVector::uniform(n);
        let engine = ProjectorEngine::new(&couplings);
        for strategy in [Strategy::SubsetTree, Strategy::DenseLaplace] {
            if strategy == Strategy::DenseLaplace && n > BENCH_DENSE_CAP {
                emit(&mut table, format!("{n},project,{strategy},0,skipped,skipped,"));
                continue;
            }
            let mut times = Vec::with_capacity(REPEATS);
            for _ in 0..REPEATS {
                let t = Instant::now();
                let v = engine.apply(&r, &omega, strategy).expect("inputs sized to the model");
                std::hint::black_box(v);
                times.push(t.elapsed().as_secs_f64() * 1e3);
            }
            let (m, s) = mean_std(&times);
            emit(&mut table, format!("{n},project,{strategy},{REPEATS},{m:.3},{s:.3},{}", rss()));
        }
    }
    if let Some(dir) = &config.out {
        if let Err(code) = ensure_out_dir(dir, err) {
            return code;
        }
        if let Err(e) = io::write_atomic(&dir.join("bench.csv"), &table) {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    }
    EXIT_OK
}

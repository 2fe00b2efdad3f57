//! Plain-text file formats and atomic writes.
//!
//! Every file starts with one `#` header line of `key=value` tokens. Floats
//! are written with 17 significant digits so they round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use thiserror::Error;

use crate::bethe_solver::SolutionSet;
use crate::oracle::SpectrumOracle;
use crate::projector::ProjectionDiagnostics;
use crate::spin_algebra::StateVector;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}, line {line}: {msg}")]
    Format { path: String, line: usize, msg: String },
}

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `contents` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoError> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp: PathBuf = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path, e)
    })
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(pairs: &[(&str, String)]) -> String {
    let mut s = String::from("#");
    for (k, v) in pairs {
        let _ = write!(s, " {k}={v}");
    }
    s.push('\n');
    s
}

struct Header {
    pairs: Vec<(String, String)>,
}

impl Header {
    fn parse(path: &Path, line: Option<&str>) -> Result<Self, IoError> {
        let bad = |msg: &str| IoError::Format {
            path: path.display().to_string(),
            line: 1,
            msg: msg.to_string(),
        };
        let body = line
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| bad("missing `#` header line"))?;
        let pairs = body
            .split_whitespace()
            .map(|tok| {
                tok.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| bad(&format!("header token `{tok}` is not key=value")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { pairs })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn require<T: std::str::FromStr>(&self, path: &Path, key: &str) -> Result<T, IoError> {
        self.get(key).and_then(|v| v.parse().ok()).ok_or_else(|| IoError::Format {
            path: path.display().to_string(),
            line: 1,
            msg: format!("header is missing a valid `{key}`"),
        })
    }
}

fn parse_f64(path: &Path, line: usize, tok: Option<&str>) -> Result<f64, IoError> {
    tok.and_then(|t| t.parse().ok()).ok_or_else(|| IoError::Format {
        path: path.display().to_string(),
        line,
        msg: "expected a floating-point number".into(),
    })
}

/// A state vector together with the hash of the model it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFile {
    pub state: StateVector,
    pub spec_hash: Option<String>,
}

/// `# n_spins=N [spec_hash=H]`, then one `index re im` line per amplitude.
pub fn render_state(state: &StateVector, spec_hash: Option<&str>) -> String {
    let mut pairs = vec![("n_spins", state.n_spins().to_string())];
    if let Some(h) = spec_hash {
        pairs.push(("spec_hash", h.to_string()));
    }
    let mut s = header(&pairs);
    for (b, a) in state.amplitudes().iter().enumerate() {
        let _ = writeln!(s, "{b} {} {}", fmt_f64(a.re), fmt_f64(a.im));
    }
    s
}

pub fn write_state(path: &Path, state: &StateVector, spec_hash: Option<&str>) -> Result<(), IoError> {
    write_atomic(path, &render_state(state, spec_hash))
}

/// Parses a state file. Missing indices are zero; repeated indices are an
/// error.
pub fn parse_state(path: &Path, text: &str) -> Result<StateFile, IoError> {
    let mut lines = text.lines();
    let h = Header::parse(path, lines.next())?;
    let n: usize = h.require(path, "n_spins")?;
    if n == 0 || n > 30 {
        return Err(IoError::Format {
            path: path.display().to_string(),
            line: 1,
            msg: format!("n_spins = {n} is out of range"),
        });
    }
    let dim = 1usize << n;
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    let mut seen = vec![false; dim];
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let fail = |msg: String| IoError::Format {
            path: path.display().to_string(),
            line: lineno,
            msg,
        };
        let idx: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| fail("expected a basis index".into()))?;
        if idx >= dim {
            return Err(fail(format!("basis index {idx} exceeds 2^{n} - 1")));
        }
        if seen[idx] {
            return Err(fail(format!("basis index {idx} appears twice")));
        }
        seen[idx] = true;
        let re = parse_f64(path, lineno, toks.next())?;
        let im = parse_f64(path, lineno, toks.next())?;
        amps[idx] = Complex64::new(re, im);
    }
    let state = StateVector::from_amplitudes(n, amps).expect("length is 2^n");
    Ok(StateFile {
        state,
        spec_hash: h.get("spec_hash").map(str::to_string),
    })
}

pub fn read_state(path: &Path) -> Result<StateFile, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_state(path, &text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub label: String,
    pub r: Vec<f64>,
    pub residual: f64,
}

/// Parsed spectrum table.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFile {
    pub n_spins: usize,
    pub g: f64,
    pub spec_hash: String,
    pub rows: Vec<SpectrumRow>,
}

impl SpectrumFile {
    pub fn row(&self, label: &str) -> Option<&SpectrumRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

pub fn render_spectrum(file: &SpectrumFile) -> String {
    let mut s = header(&[
        ("n_spins", file.n_spins.to_string()),
        ("g", fmt_f64(file.g)),
        ("spec_hash", file.spec_hash.clone()),
    ]);
    for row in &file.rows {
        s.push_str(&row.label);
        for x in &row.r {
            s.push(' ');
            s.push_str(&fmt_f64(*x));
        }
        let _ = writeln!(s, " {}", fmt_f64(row.residual));
    }
    s
}

/// Rows labelled by their g = 0 sign pattern, `1` for the `+` branch.
pub fn spectrum_from_solutions(set: &SolutionSet) -> SpectrumFile {
    SpectrumFile {
        n_spins: set.n_spins(),
        g: set.spec.g,
        spec_hash: set.spec.spec_hash(),
        rows: set
            .solutions
            .iter()
            .map(|s| SpectrumRow {
                label: s.sign_pattern.bitstring(),
                r: s.r.clone(),
                residual: s.residual,
            })
            .collect(),
    }
}

/// Rows labelled by the eigenvector index `n`, written as an `N`-digit
/// binary string (spin 1 first, like sign patterns).
pub fn spectrum_from_oracle(oracle: &SpectrumOracle, spec: &crate::model::ModelSpec) -> SpectrumFile {
    let couplings = crate::model::build_couplings(spec).expect("oracle spec is valid");
    let n = oracle.n_spins();
    SpectrumFile {
        n_spins: n,
        g: spec.g,
        spec_hash: spec.spec_hash(),
        rows: oracle
            .eigenvalue_rows()
            .iter()
            .enumerate()
            .map(|(idx, r)| SpectrumRow {
                label: (0..n).map(|k| if (idx >> k) & 1 == 1 { '1' } else { '0' }).collect(),
                r: r.clone(),
                residual: couplings.bethe_residual(r),
            })
            .collect(),
    }
}

pub fn write_spectrum(path: &Path, file: &SpectrumFile) -> Result<(), IoError> {
    write_atomic(path, &render_spectrum(file))
}

pub fn parse_spectrum(path: &Path, text: &str) -> Result<SpectrumFile, IoError> {
    let mut lines = text.lines();
    let h = Header::parse(path, lines.next())?;
    let n: usize = h.require(path, "n_spins")?;
    let g: f64 = h.require(path, "g")?;
    let spec_hash: String = h.require(path, "spec_hash")?;
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != n + 2 || toks[0].len() != n {
            return Err(IoError::Format {
                path: path.display().to_string(),
                line: lineno,
                msg: format!("expected an {n}-character label, {n} eigenvalues and a residual"),
            });
        }
        let r = (1..=n)
            .map(|i| parse_f64(path, lineno, Some(toks[i])))
            .collect::<Result<Vec<_>, _>>()?;
        let residual = parse_f64(path, lineno, Some(toks[n + 1]))?;
        rows.push(SpectrumRow {
            label: toks[0].to_string(),
            r,
            residual,
        });
    }
    Ok(SpectrumFile {
        n_spins: n,
        g,
        spec_hash,
        rows,
    })
}

pub fn read_spectrum(path: &Path) -> Result<SpectrumFile, IoError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_spectrum(path, &text)
}

/// `key = value` report of one projection.
pub fn render_diagnostics(label: &str, spec_hash: &str, d: &ProjectionDiagnostics) -> String {
    let mut s = header(&[("state", label.to_string()), ("spec_hash", spec_hash.to_string())]);
    let _ = writeln!(s, "onshell_residual = {}", fmt_f64(d.onshell_residual));
    let _ = writeln!(s, "normalization = {}", fmt_f64(d.normalization));
    let _ = writeln!(s, "vacuum_weight = {}", fmt_f64(d.vacuum_weight));
    let _ = writeln!(s, "idempotency_residual = {}", fmt_f64(d.idempotency_residual));
    for (i, e) in d.eigen_residuals.iter().enumerate() {
        let _ = writeln!(s, "eigen_residual_{} = {}", i + 1, fmt_f64(*e));
    }
    s
}

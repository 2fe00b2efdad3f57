use std::fs;
use std::path::Path;
use std::process::Command;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

use rg_eigen::cli::{main_with_args, EXIT_FAILURE, EXIT_INPUT, EXIT_OK};
use rg_eigen::io::{read_spectrum, read_state};
use rg_eigen::model::{random_spec, Family, ModelSpec};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["rg-eigen"];
    full.extend_from_slice(args);
    let code = main_with_args(full, &mut out, &mut err);
    Run {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn write_model(dir: &Path, name: &str, spec: &ModelSpec) -> String {
    let p = dir.join(name);
    fs::write(&p, spec.to_toml_string()).unwrap();
    p.to_str().unwrap().to_string()
}

fn model(n: usize, seed: u64) -> ModelSpec {
    random_spec(n, Family::Xyz, true, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn reference_n4() -> ModelSpec {
    ModelSpec {
        n_spins: 4,
        epsilons: vec![0.3, 1.1, 2.7, 3.4],
        g: 0.37,
        gamma: 0.2,
        lambda_: 0.5,
        alpha_x: 0.4,
        beta_x: 1.0,
        alpha_y: 0.1,
        beta_y: 2.0,
    }
}

#[test]
fn validate_n6_passes() {
    let dir = TempDir::new().unwrap();
    let m = write_model(dir.path(), "m.toml", &model(6, 1));
    let r = run(&["validate", "--model", &m]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert_eq!(r.stdout.matches("commutator").count(), 15);
    assert_eq!(r.stdout.matches("quadratic").count(), 6);
    assert!(!r.stdout.contains("FAIL"));
}

#[test]
fn validate_rejects_duplicate_epsilon() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("dup.toml");
    let text = model(5, 2)
        .to_toml_string()
        .lines()
        .map(|l| if l.starts_with("epsilons") { "epsilons = [0.1, 0.7, 1.5, 0.7, 3.0]".to_string() } else { l.to_string() })
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(&p, text).unwrap();
    let r = run(&["validate", "--model", p.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_INPUT);
    assert!(r.stderr.contains("epsilon_2") && r.stderr.contains("epsilon_4"), "{}", r.stderr);
}

#[test]
fn validate_skips_above_dense_cap() {
    let dir = TempDir::new().unwrap();
    let m = write_model(dir.path(), "m.toml", &model(20, 3));
    let r = run(&["validate", "--model", &m]);
    assert_eq!(r.code, EXIT_OK);
    assert_eq!(r.stdout.matches("skipped (N above dense cap)").count(), 2);
}

#[test]
fn validate_tolerance_override_can_fail() {
    let dir = TempDir::new().unwrap();
    let m = write_model(dir.path(), "m.toml", &model(3, 4));
    let r = run(&["validate", "--model", &m, "--tol", "1e-30"]);
    assert_eq!(r.code, EXIT_FAILURE);
    assert!(r.stdout.contains("FAIL"));
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("none.toml");
    assert_eq!(run(&["solve", "--model", missing.to_str().unwrap(), "--out", "x"]).code, EXIT_INPUT);
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "n_spins = 2\nepsilons = [0.0, 1.0]\ng = 1.0\nbogus = 3\n").unwrap();
    assert_eq!(run(&["validate", "--model", bad.to_str().unwrap()]).code, EXIT_INPUT);
    assert_eq!(run(&["solve"]).code, EXIT_INPUT);
    assert_eq!(run(&["check", "--tol", "-1"]).code, EXIT_INPUT);
    assert_eq!(run(&["project", "--strategy", "qr"]).code, EXIT_INPUT);
}

#[test]
fn solve_n8_writes_256_rows_deterministically() {
    let dir = TempDir::new().unwrap();
    let spec = model(8, 5);
    let m = write_model(dir.path(), "m.toml", &spec);
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();
    let r = run(&["solve", "--model", &m, "--out", o]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    assert!(r.stdout.contains("wall time"));
    let first = fs::read(out.join("spectrum.txt")).unwrap();
    let file = read_spectrum(&out.join("spectrum.txt")).unwrap();
    assert_eq!(file.rows.len(), 256);
    assert_eq!(file.spec_hash, spec.spec_hash());
    assert_eq!(run(&["solve", "--model", &m, "--out", o]).code, EXIT_OK);
    assert_eq!(fs::read(out.join("spectrum.txt")).unwrap(), first);
}

#[test]
fn solve_at_zero_coupling_is_closed_form() {
    let dir = TempDir::new().unwrap();
    let spec = ModelSpec { g: 0.0, ..reference_n4() };
    let m = write_model(dir.path(), "m.toml", &spec);
    let o = dir.path().join("out");
    assert_eq!(run(&["solve", "--model", &m, "--out", o.to_str().unwrap()]).code, EXIT_OK);
    let first = fs::read_to_string(o.join("spectrum.txt")).unwrap();
    let file = read_spectrum(&o.join("spectrum.txt")).unwrap();
    for row in &file.rows {
        assert!(row.residual < 1e-14);
        for (k, c) in row.label.chars().enumerate() {
            let mag = (spec.gamma.powi(2) / spec.f_x(spec.epsilons[k]).powi(2)
                + spec.lambda_.powi(2) / spec.f_y(spec.epsilons[k]).powi(2)
                + 1.0)
                .sqrt();
            let want = if c == '1' { mag } else { -mag };
            assert!((row.r[k] - want).abs() < 1e-15);
        }
    }
    assert_eq!(run(&["solve", "--model", &m, "--out", o.to_str().unwrap()]).code, EXIT_OK);
    assert_eq!(fs::read_to_string(o.join("spectrum.txt")).unwrap(), first);
}

#[test]
fn project_all_n6() {
    let dir = TempDir::new().unwrap();
    let spec = model(6, 6);
    let m = write_model(dir.path(), "m.toml", &spec);
    let out = dir.path().join("out");
    let r = run(&["project", "--model", &m, "--out", out.to_str().unwrap(), "--state", "all"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let states: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("state_") && !n.ends_with(".diag.txt"))
        .collect();
    assert_eq!(states.len(), 64);
    for name in &states {
        let f = read_state(&out.join(name)).unwrap();
        assert_eq!(f.spec_hash.as_deref(), Some(spec.spec_hash().as_str()));
        assert!((f.state.norm() - 1.0).abs() < 1e-12);
        let diag = fs::read_to_string(out.join(name.replace(".txt", ".diag.txt"))).unwrap();
        for line in diag.lines().filter(|l| l.starts_with("eigen_residual")) {
            let v: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
            assert!(v < 1e-8, "{name}: {line}");
        }
    }
}

#[test]
fn project_single_state_reuses_spectrum() {
    let dir = TempDir::new().unwrap();
    let m = write_model(dir.path(), "m.toml", &reference_n4());
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();
    assert_eq!(run(&["solve", "--model", &m, "--out", o]).code, EXIT_OK);
    let spectrum = fs::read(out.join("spectrum.txt")).unwrap();
    let r = run(&["project", "--model", &m, "--out", o, "--state", "0110", "--strategy", "dense-laplace"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let mut names: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names, ["spectrum.txt", "state_0110.diag.txt", "state_0110.txt"]);
    assert_eq!(fs::read(out.join("spectrum.txt")).unwrap(), spectrum);
    assert_eq!(run(&["project", "--model", &m, "--out", o, "--state", "011"]).code, EXIT_INPUT);
}

#[test]
fn project_parity_sector_failure() {
    let dir = TempDir::new().unwrap();
    let spec = ModelSpec {
        gamma: 0.0,
        lambda_: 0.0,
        ..model(4, 7)
    };
    let m = write_model(dir.path(), "m.toml", &spec);
    let vac = dir.path().join("down.txt");
    fs::write(&vac, "# n_spins=4\n0 1 0\n").unwrap();
    let out = dir.path().join("out");
    let r = run(&["project", "--model", &m, "--out", out.to_str().unwrap(), "--vacuum", vac.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_FAILURE);
    assert_eq!(r.stdout.matches("vacuum orthogonal").count(), 8);
    assert!(r.stderr.contains("--vacuum uniform"));
    let written = fs::read_dir(&out).unwrap().filter(|e| {
        let n = e.as_ref().unwrap().file_name().into_string().unwrap();
        n.starts_with("state_") && !n.ends_with(".diag.txt")
    });
    assert_eq!(written.count(), 8);
    let wrong = dir.path().join("n3.txt");
    fs::write(&wrong, "# n_spins=3\n0 1 0\n").unwrap();
    let r = run(&["project", "--model", &m, "--out", out.to_str().unwrap(), "--vacuum", wrong.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_INPUT);
}

#[test]
fn check_reference_n4() {
    let dir = TempDir::new().unwrap();
    let m = write_model(dir.path(), "m.toml", &reference_n4());
    let r = run(&["check", "--model", &m, "--seed", "3"]);
    assert_eq!(r.code, EXIT_OK, "{}\n{}", r.stdout, r.stderr);
    assert!(r.stdout.contains("13/13 checks passed"));
    assert!(r.stdout.contains("four-spin expansion"));
    let big = write_model(dir.path(), "big.toml", &model(9, 1));
    assert_eq!(run(&["check", "--model", &big]).code, EXIT_INPUT);
}

#[test]
fn bench_table() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench");
    let r = run(&["bench", "--bench-range", "4..5", "--out", out.to_str().unwrap()]);
    assert_eq!(r.code, EXIT_OK);
    let csv = fs::read_to_string(out.join("bench.csv")).unwrap();
    assert_eq!(csv, r.stdout);
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    assert!(csv.lines().all(|l| l.split(',').count() == 7));
}

#[test]
fn bench_marks_dense_laplace_skipped() {
    let r = run(&["bench", "--bench-range", "11..11", "--g-steps", "16"]);
    assert_eq!(r.code, EXIT_OK);
    assert!(r.stdout.contains("11,project,dense-laplace,0,skipped,skipped,"));
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_rg-eigen");
    let dir = TempDir::new().unwrap();
    let m = write_model(dir.path(), "m.toml", &reference_n4());
    let ok = Command::new(exe).args(["validate", "--model", &m]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let bad = Command::new(exe).args(["validate"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let help = Command::new(exe).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    let text = String::from_utf8(help.stdout).unwrap();
    for flag in ["--model", "--out", "--state", "--vacuum", "--tol", "--strategy", "--g-steps", "--seed", "--bench-range"] {
        assert!(text.contains(flag), "{flag}");
    }
}

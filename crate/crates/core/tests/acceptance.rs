//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rg_eigen::bethe_solver::{homotopy_solve, SolutionSet};
use rg_eigen::model::{build_couplings, random_spec, Couplings, Family, ModelSpec};
use rg_eigen::oracle::{crosscheck_projector, diagonalize};
use rg_eigen::projector::{
    four_spin_closed_form, offshell_coefficient, offshell_scale, pairing_coefficient, pairing_coefficient_det,
    scalar_norm_det, ProjectorEngine, Strategy,
};
use rg_eigen::spin_algebra::{charges, commutator_residual, quadratic_operator_residual, StateVector};

const SPECS_PER_N: usize = 20;

struct Case {
    spec: ModelSpec,
    couplings: Couplings,
    family: Family,
    transverse: bool,
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn worst(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn suite() -> Vec<Case> {
    let mut cases = Vec::new();
    for n in 2..=8 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + n as u64);
        for k in 0..SPECS_PER_N {
            let family = Family::ALL[k % 3];
            let transverse = (k / 3) % 2 == 0;
            let spec = random_spec(n, family, transverse, &mut rng);
            let couplings = build_couplings(&spec).expect("random specs are valid");
            cases.push(Case {
                spec,
                couplings,
                family,
                transverse,
            });
        }
    }
    cases
}

fn integrability(cases: &[Case]) -> Outcome {
    let start = Instant::now();
    let (mut comm, mut quad) = (0.0_f64, 0.0_f64);
    for c in cases {
        let ops = charges(&c.couplings);
        let n = ops.len();
        for i in 0..n {
            for j in i + 1..n {
                comm = worst(comm, commutator_residual(&ops, i, j).unwrap());
            }
            quad = worst(quad, quadratic_operator_residual(&c.couplings, &ops, i).unwrap());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let combos: std::collections::HashSet<_> = cases.iter().map(|c| (c.family as u8, c.transverse)).collect();
    outcome(
        comm < 1e-12 && quad < 1e-12 && secs < 120.0 && combos.len() == 6,
        format!(
            "{} specs (N=2..8, {} family/field combos): commutator {comm:.2e}, quadratic {quad:.2e} (< 1e-12), {secs:.1} s (< 120 s)",
            cases.len(),
            combos.len()
        ),
    )
}

fn spectrum_and_sum_rules(cases: &[Case], solved: &[SolutionSet]) -> (Outcome, Outcome) {
    let (mut mismatch, mut oracle_res) = (0.0_f64, 0.0_f64);
    let (mut lin, mut quad) = (0.0_f64, 0.0_f64);
    for (c, set) in cases.iter().zip(solved) {
        let oracle = diagonalize(&c.spec).unwrap();
        let rows: Vec<&[f64]> = set.solutions.iter().map(|s| s.r.as_slice()).collect();
        mismatch = worst(mismatch, oracle.max_mismatch(&rows).unwrap_or(f64::INFINITY));
        oracle_res = worst(oracle_res, oracle.bethe_residual(&c.couplings));
        let rules = set.sum_rules(&c.couplings);
        lin = worst(lin, rules.worst_linear());
        quad = worst(quad, rules.worst_quadratic());
    }
    (
        outcome(
            mismatch < 1e-8 && oracle_res < 1e-9,
            format!("solver vs ED max |dr| {mismatch:.2e} (< 1e-8), ED rows in quadratic equations {oracle_res:.2e} (< 1e-9)"),
        ),
        outcome(
            lin < 1e-9 && quad < 1e-9,
            format!("sum r_i = 0: {lin:.2e}, sum r_i^2 = 2^N K_i: {quad:.2e} (< 1e-9, {} specs)", solved.len()),
        ),
    )
}

fn projector_theorem(cases: &[Case], solved: &[SolutionSet]) -> Outcome {
    let (mut overlap, mut dense, mut eigen, mut count) = (0.0_f64, 0.0_f64, 0.0_f64, 0usize);
    for (c, set) in cases.iter().zip(solved).filter(|(c, _)| c.spec.n_spins <= 6) {
        let oracle = diagonalize(&c.spec).unwrap();
        let engine = ProjectorEngine::new(&c.couplings);
        let omega = StateVector::uniform(c.spec.n_spins);
        let rows: Vec<&[f64]> = set.solutions.iter().map(|s| s.r.as_slice()).collect();
        let matched = oracle.match_rows(&rows).unwrap();
        for (sol, &(idx, _)) in set.solutions.iter().zip(&matched) {
            let p = match engine.project_and_normalize(&sol.r, &omega) {
                Ok(p) => p,
                Err(_) => {
                    overlap = f64::INFINITY;
                    continue;
                }
            };
            let nn = p.diagnostics.normalization;
            let pd = engine.dense_projector(&sol.r, Strategy::SubsetTree).unwrap() / Complex64::new(nn, 0.0);
            let x = crosscheck_projector(&oracle, idx, &p.state, Some(&pd));
            overlap = worst(overlap, x.overlap_defect.abs());
            dense = worst(dense, x.dense_distance.unwrap());
            eigen = worst(eigen, p.diagnostics.worst_eigen_residual());
            count += 1;
        }
    }
    outcome(
        overlap < 1e-8 && dense < 1e-8 && eigen < 1e-8,
        format!("{count} states (N<=6): overlap defect {overlap:.2e}, |P/N - psi psi^+|_F {dense:.2e}, eigen residual {eigen:.2e} (< 1e-8)"),
    )
}

fn offshell_vanishing(cases: &[Case], solved: &[SolutionSet]) -> Outcome {
    let (mut off, mut diag) = (0.0_f64, 0.0_f64);
    for (c, set) in cases.iter().zip(solved).filter(|(c, _)| c.spec.n_spins <= 5) {
        for (a, sa) in set.solutions.iter().enumerate() {
            for (b, sb) in set.solutions.iter().enumerate() {
                let coef = offshell_coefficient(&sa.r, &sb.r, &c.couplings);
                if a == b {
                    let nn = scalar_norm_det(&sa.r, &c.couplings);
                    diag = worst(diag, (coef - nn).abs() / nn.abs());
                } else {
                    off = worst(off, coef.abs() / offshell_scale(&sa.r, &sb.r, &c.couplings));
                }
            }
        }
    }
    outcome(
        off < 1e-9 && diag < 1e-12,
        format!("|C(r^n, r^m)| / bound {off:.2e} (< 1e-9), C(r^n, r^n) vs N(r^n) {diag:.2e} (< 1e-12)"),
    )
}

fn identity_resolution(cases: &[Case]) -> Outcome {
    let mut res = 0.0_f64;
    let mut count = 0;
    for c in cases.iter().filter(|c| c.spec.n_spins <= 5) {
        let engine = ProjectorEngine::new(&c.couplings);
        for a in [0.5, 1.0, 2.0] {
            res = worst(res, engine.identity_resolution_check(a).unwrap());
            count += 1;
        }
    }
    outcome(res < 1e-10, format!("{count} quadratures (N<=5, a in 0.5/1/2): residual {res:.2e} (< 1e-10)"))
}

fn pairing_expansion(cases: &[Case]) -> Outcome {
    let (mut even, mut odd, mut n4) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut n4_terms = 0;
    for c in cases {
        let n = c.spec.n_spins;
        let engine = ProjectorEngine::new(&c.couplings);
        for mask in 0usize..1 << n {
            let idx: Vec<usize> = (0..n).filter(|k| (mask >> k) & 1 == 1).collect();
            let pairing = pairing_coefficient(&idx, &c.couplings);
            if idx.len() % 2 == 1 {
                odd = worst(odd, pairing.abs().max(engine.pairing_value(mask).abs()));
            } else {
                let det = pairing_coefficient_det(&idx, &c.couplings);
                even = worst(even, (det - pairing).abs() / pairing.abs());
            }
        }
        if let Some(closed) = four_spin_closed_form(&c.couplings) {
            let terms = engine.expansion_terms();
            if terms.len() != closed.len() {
                n4 = f64::INFINITY;
            }
            for (t, e) in terms.iter().zip(&closed) {
                let d = if t.complement == e.complement {
                    (t.value - e.value).abs() / e.value.abs()
                } else {
                    f64::INFINITY
                };
                n4 = worst(n4, d);
                n4_terms += 1;
            }
        }
    }
    outcome(
        even < 1e-10 && odd == 0.0 && n4 < 1e-12 && n4_terms > 0,
        format!("even subsets det vs pairing {even:.2e} (< 1e-10), odd subsets max |K| {odd:e} (== 0), N=4 closed form {n4:.2e} over {n4_terms} terms (< 1e-12)"),
    )
}

fn onoff_product(cases: &[Case], solved: &[SolutionSet]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut res = 0.0_f64;
    let mut count = 0;
    for (c, set) in cases.iter().zip(solved).filter(|(c, _)| c.spec.n_spins <= 5) {
        // one spec per family and field combination
        if !seen_first(cases, c) {
            continue;
        }
        let n = c.spec.n_spins;
        let engine = ProjectorEngine::new(&c.couplings);
        for sol in &set.solutions {
            let nn = scalar_norm_det(&sol.r, &c.couplings);
            let pn = engine.dense_projector(&sol.r, Strategy::SubsetTree).unwrap() / Complex64::new(nn, 0.0);
            for _ in 0..10 {
                let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let p = engine.dense_projector(&r, Strategy::SubsetTree).unwrap();
                let coef = offshell_coefficient(&r, &sol.r, &c.couplings);
                let diff = &p * &pn - &pn * Complex64::new(coef, 0.0);
                res = worst(res, diff.norm() / p.norm());
                count += 1;
            }
        }
    }
    outcome(res < 1e-9, format!("{count} products (N<=5, 10 random r per state): Frobenius relative to the P(r) norm {res:.2e} (< 1e-9)"))
}

/// True for the first case of each (N, family, field) combination.
fn seen_first(cases: &[Case], c: &Case) -> bool {
    let first = cases
        .iter()
        .find(|o| o.spec.n_spins == c.spec.n_spins && o.family == c.family && o.transverse == c.transverse)
        .unwrap();
    std::ptr::eq(first, c)
}

fn strategies(cases: &[Case]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut res = 0.0_f64;
    let mut count = 0;
    for c in cases.iter().filter(|c| seen_first(cases, c) && c.transverse) {
        let n = c.spec.n_spins;
        let engine = ProjectorEngine::new(&c.couplings);
        let omega = StateVector::from_amplitudes(
            n,
            (0..1 << n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
        )
        .unwrap();
        let r: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let a = engine.apply(&r, &omega, Strategy::SubsetTree).unwrap();
        let b = engine.apply(&r, &omega, Strategy::DenseLaplace).unwrap();
        res = worst(res, a.distance(&b) / b.norm());
        count += 1;
    }

    let spec = random_spec(12, Family::Xyz, true, &mut rng);
    let engine = ProjectorEngine::new(&build_couplings(&spec).unwrap());
    let r: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let start = Instant::now();
    let v = engine.apply(&r, &StateVector::uniform(12), Strategy::SubsetTree).unwrap();
    let secs = start.elapsed().as_secs_f64();
    std::hint::black_box(v);
    outcome(
        res < 1e-10,
        format!("subset tree vs dense Laplace over {count} specs (N<=8): {res:.2e} (< 1e-10); N=12 subset tree {secs:.2} s (target 10 s, reported only)"),
    )
}

fn main() -> ExitCode {
    let total = Instant::now();
    let cases = suite();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    results.push((1, "integrability", integrability(&cases)));

    let solved: Vec<SolutionSet> = cases.iter().map(|c| homotopy_solve(&c.spec, 64).unwrap()).collect();
    let (spectrum, sums) = spectrum_and_sum_rules(&cases, &solved);
    results.push((2, "spectrum equivalence", spectrum));
    results.push((3, "projector theorem", projector_theorem(&cases, &solved)));
    results.push((4, "off-shell vanishing", offshell_vanishing(&cases, &solved)));
    results.push((5, "identity resolution", identity_resolution(&cases)));
    results.push((6, "pairing expansion", pairing_expansion(&cases)));
    results.push((7, "on/off-shell product", onoff_product(&cases, &solved)));
    results.push((8, "trace sum rules", sums));
    results.push((9, "strategy equivalence", strategies(&cases)));

    let mut failed = 0;
    for (k, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{k}] {name}: {}", o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1} s",
        results.len() - failed,
        results.len(),
        total.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

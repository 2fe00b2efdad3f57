//! Build eigenstates by applying the operator determinant `P(r)` to a
//! reference state, and compare with dense diagonalisation.
//!
//! ```bash
//! cargo run --release --example project_eigenstate
//! ```

use rg_eigen::bethe_solver::{homotopy_solve, SignPattern};
use rg_eigen::model::{build_couplings, ModelSpec};
use rg_eigen::oracle::{crosscheck_projector, diagonalize};
use rg_eigen::projector::{ProjectorEngine, ProjectorError};
use rg_eigen::spin_algebra::StateVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ModelSpec {
        n_spins: 5,
        epsilons: vec![0.1, 0.9, 2.2, 3.0, 4.4],
        g: 0.8,
        gamma: 0.4,
        lambda_: -0.3,
        alpha_x: 0.1,
        beta_x: 1.0,
        alpha_y: 0.05,
        beta_y: 0.7,
    };
    let c = build_couplings(&spec)?;
    let set = homotopy_solve(&spec, 64)?;
    let engine = ProjectorEngine::new(&c);
    let oracle = diagonalize(&spec)?;
    let omega = StateVector::uniform(5);

    println!("{:>7} {:>10} {:>10} {:>10}", "state", "eigen", "idem", "overlap");
    for sol in set.solutions.iter().take(8) {
        let p = engine.project_and_normalize(&sol.r, &omega)?;
        let (n, _) = oracle.nearest(&sol.r);
        let x = crosscheck_projector(&oracle, n, &p.state, None);
        println!(
            "{:>7} {:>10.2e} {:>10.2e} {:>10.2e}",
            sol.sign_pattern.to_string(),
            p.diagnostics.worst_eigen_residual(),
            p.diagnostics.idempotency_residual,
            x.overlap_defect
        );
    }

    // a z-only field conserves up-spin parity, so |↓↓↓↓↓⟩ misses half the states
    let zonly = ModelSpec { gamma: 0.0, lambda_: 0.0, ..spec };
    let cz = build_couplings(&zonly)?;
    let sz = homotopy_solve(&zonly, 64)?;
    let ez = ProjectorEngine::new(&cz);
    let down = StateVector::all_down(5);
    let (mut hit, mut miss) = (0, 0);
    for sol in &sz.solutions {
        match ez.project_and_normalize(&sol.r, &down) {
            Ok(_) => hit += 1,
            Err(ProjectorError::VacuumOrthogonal { .. }) => miss += 1,
            Err(e) => return Err(e.into()),
        }
    }
    println!("all-down vacuum, z-only field: {hit} reached, {miss} orthogonal");
    let pattern = SignPattern::parse("10000", 5)?;
    println!("pattern {pattern} has r = {:.5?}", sz.get(pattern).unwrap().r);
    Ok(())
}

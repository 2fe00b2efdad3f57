//! Integrate `(Π r_i) P(r)` over a box and recover the identity, then show
//! that `P(r)` acts on an eigenstate as the scalar `C(r, r^n)`.
//!
//! ```bash
//! cargo run --release --example identity_resolution
//! ```

use num_complex::Complex64;
use rg_eigen::bethe_solver::homotopy_solve;
use rg_eigen::model::{build_couplings, ModelSpec};
use rg_eigen::projector::{offshell_coefficient, ProjectorEngine, Strategy};
use rg_eigen::spin_algebra::StateVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ModelSpec::xxx(vec![0.0, 1.0, 2.5, 3.1], 0.9, 0.35, 0.2)?;
    let c = build_couplings(&spec)?;
    let engine = ProjectorEngine::new(&c);
    for a in [0.5, 1.0, 2.0] {
        println!("a = {a}: residual {:.3e}", engine.identity_resolution_check(a)?);
    }

    let set = homotopy_solve(&spec, 64)?;
    let rn = &set.solutions[5].r;
    let psi = engine.project_and_normalize(rn, &StateVector::uniform(4))?.state;
    let r = [0.3, -1.1, 0.8, 2.0];
    let mut v = engine.apply(&r, &psi, Strategy::SubsetTree)?;
    let coef = offshell_coefficient(&r, rn, &c);
    v.axpy(Complex64::new(-coef, 0.0), &psi);
    println!("C(r, r^n) = {coef:.6}, |P(r) psi - C psi| / |psi| = {:.2e}", v.norm() / psi.norm());

    let on = offshell_coefficient(&set.solutions[3].r, rn, &c);
    println!("C(r^m, r^n) for m != n: {on:.2e}");
    Ok(())
}

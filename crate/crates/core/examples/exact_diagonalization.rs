//! Dense diagonalisation of a random combination of the charges, used as an
//! independent check of the solver.
//!
//! ```bash
//! cargo run --release --example exact_diagonalization
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rg_eigen::bethe_solver::homotopy_solve;
use rg_eigen::model::{build_couplings, random_spec, Family};
use rg_eigen::oracle::diagonalize;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for family in Family::ALL {
        let spec = random_spec(6, family, true, &mut rng);
        let c = build_couplings(&spec)?;
        let oracle = diagonalize(&spec)?;
        let set = homotopy_solve(&spec, 64)?;
        let rows: Vec<&[f64]> = set.solutions.iter().map(|s| s.r.as_slice()).collect();
        println!(
            "{family:?}: max |solver - ED| {:.2e}, ED Bethe residual {:.2e}, orthonormality {:.2e}",
            oracle.max_mismatch(&rows)?,
            oracle.bethe_residual(&c),
            oracle.orthonormality_residual()
        );
    }
    Ok(())
}

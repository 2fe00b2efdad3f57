//! Apply the conserved charges to a state and check that they commute and
//! close the quadratic algebra `R_i² = Σ_j Γ_ij R_j + K_i`.
//!
//! ```bash
//! cargo run --example charges
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rg_eigen::model::{build_couplings, random_spec, Family};
use rg_eigen::spin_algebra::{apply_charge, charges, commutator_residual, quadratic_operator_residual, StateVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = random_spec(6, Family::Xyz, true, &mut rng);
    let c = build_couplings(&spec)?;
    let ops = charges(&c);
    println!("{spec}");

    let v = StateVector::uniform(6);
    for op in &ops {
        let w = apply_charge(op, &v)?;
        println!("<u|R_{}|u> = {:+.6}", op.index() + 1, v.inner(&w).re);
    }

    let mut worst_comm = 0.0_f64;
    for i in 0..ops.len() {
        for j in i + 1..ops.len() {
            worst_comm = worst_comm.max(commutator_residual(&ops, i, j)?);
        }
    }
    let worst_quad = (0..ops.len())
        .map(|i| quadratic_operator_residual(&c, &ops, i))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    println!("worst commutator residual {worst_comm:.3e}");
    println!("worst quadratic residual  {worst_quad:.3e}");
    Ok(())
}

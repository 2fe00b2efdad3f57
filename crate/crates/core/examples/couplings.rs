//! Build a model and print its derived couplings.
//!
//! ```bash
//! cargo run --example couplings
//! ```

use rg_eigen::model::{build_couplings, ModelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ModelSpec::from_toml_str(
        r#"
        n_spins = 4
        epsilons = [0.3, 1.1, 2.7, 3.4]
        g = 0.37
        gamma = 0.2
        lambda = 0.5
        alpha_x = 0.4
        beta_x = 1.0
        alpha_y = 0.1
        beta_y = 2.0
        "#,
    )?;
    let c = build_couplings(&spec)?;

    println!("{spec}");
    println!("spec hash {}", spec.spec_hash());
    println!();
    println!("{:>3} {:>10} {:>10} {:>10} {:>10} {:>10}", "i", "eps", "B^x", "B^y", "B^z", "K");
    for i in 0..c.n_spins() {
        println!(
            "{:>3} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            i + 1,
            c.epsilons()[i],
            c.bx()[i],
            c.by()[i],
            c.bz()[i],
            c.k()[i]
        );
    }
    println!();
    println!("Gamma_ij = 2 Z_ij:{:.5}", c.gamma());

    let xxz = ModelSpec::xxz(vec![0.0, 0.8, 2.1], 0.5, 0.3, 1.0, 0.0, 0.0)?;
    let cz = build_couplings(&xxz)?;
    println!("XXZ: max |X - Y| = {:e}", (cz.x() - cz.y()).abs().max());
    Ok(())
}

//! Solve the quadratic eigenvalue equations for all `2^N` states by
//! continuation from `g = 0`.
//!
//! ```bash
//! cargo run --release --example solve_spectrum
//! ```

use rg_eigen::bethe_solver::{homotopy_solve, homotopy_solve_with, SolverOptions};
use rg_eigen::model::{build_couplings, ModelSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eps: Vec<f64> = (0..8).map(|i| 0.2 + i as f64 + 0.05 * (i * i) as f64).collect();
    let spec = ModelSpec {
        n_spins: 8,
        epsilons: eps,
        g: -0.65,
        gamma: 0.3,
        lambda_: 0.1,
        alpha_x: 0.03,
        beta_x: 1.0,
        alpha_y: -0.02,
        beta_y: 1.4,
    };
    let c = build_couplings(&spec)?;

    let set = homotopy_solve(&spec, 64)?;
    let rules = set.sum_rules(&c);
    println!("{} solutions, worst residual {:.2e}", set.solutions.len(), set.worst_residual());
    println!("sum rules: linear {:.2e}, quadratic {:.2e}", rules.worst_linear(), rules.worst_quadratic());
    println!(
        "steps per branch: min {} max {}, rejected {}",
        set.diagnostics.steps.iter().min().unwrap(),
        set.diagnostics.steps.iter().max().unwrap(),
        set.diagnostics.rejected_steps
    );

    let ground = set
        .solutions
        .iter()
        .min_by(|a, b| a.r.iter().sum::<f64>().total_cmp(&b.r.iter().sum::<f64>()))
        .unwrap();
    println!("lowest sum of r: pattern {} r = {:.6?}", ground.sign_pattern, ground.r);

    let coarse = homotopy_solve_with(&spec, &SolverOptions { n_steps_initial: 4, parallel: false, ..Default::default() })?;
    let same = coarse.solutions.iter().zip(&set.solutions).all(|(a, b)| {
        a.r.iter().zip(&b.r).all(|(x, y)| (x - y).abs() < 1e-9)
    });
    println!("4 initial steps reproduce the table: {same}");
    Ok(())
}

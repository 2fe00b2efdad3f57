//! Time one projector application with both strategies.
//!
//! ```bash
//! cargo run --release --example bench_projector
//! ```

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rg_eigen::model::{build_couplings, random_spec, Family};
use rg_eigen::projector::{ProjectorEngine, Strategy};
use rg_eigen::spin_algebra::StateVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    println!("{:>3} {:>14} {:>14} {:>10}", "N", "subset ms", "laplace ms", "rel diff");
    for n in 4..=10 {
        let spec = random_spec(n, Family::Xyz, true, &mut rng);
        let engine = ProjectorEngine::new(&build_couplings(&spec)?);
        let r: Vec<f64> = (0..n).map(|k| 0.5 + 0.1 * k as f64).collect();
        let omega = StateVector::uniform(n);

        let t = Instant::now();
        let a = engine.apply(&r, &omega, Strategy::SubsetTree)?;
        let ta = t.elapsed().as_secs_f64() * 1e3;
        let (tb, diff) = if n <= 9 {
            let t = Instant::now();
            let b = engine.apply(&r, &omega, Strategy::DenseLaplace)?;
            (format!("{:.3}", t.elapsed().as_secs_f64() * 1e3), format!("{:.1e}", a.distance(&b) / b.norm()))
        } else {
            ("skipped".into(), "-".into())
        };
        println!("{n:>3} {ta:>14.3} {tb:>14} {diff:>10}");
    }
    Ok(())
}

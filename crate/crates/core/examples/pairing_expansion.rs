//! The subset expansion of `P(r)`: only even complements survive, each
//! weighted by a sum over pairings of `1/(ε_i − ε_j)²` factors.
//!
//! ```bash
//! cargo run --example pairing_expansion
//! ```

use rg_eigen::model::{build_couplings, ModelSpec};
use rg_eigen::projector::{four_spin_closed_form, pairing_coefficient, pairing_coefficient_det, ProjectorEngine};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ModelSpec::xxz(vec![0.0, 0.7, 1.9, 3.2], 0.45, 0.2, 1.0, 0.0, 0.3)?;
    let c = build_couplings(&spec)?;
    let engine = ProjectorEngine::new(&c);
    let closed = four_spin_closed_form(&c).expect("N = 4");

    println!("{:<14} {:>16} {:>16}", "kept factors", "K (pairing)", "closed form");
    for (t, e) in engine.expansion_terms().iter().zip(&closed) {
        let kept: Vec<String> = t.kept(4).iter().map(|k| format!("{}", k + 1)).collect();
        println!("{:<14} {:>16.10} {:>16.10}", format!("({})", kept.join(",")), t.value, e.value);
    }

    let odd = pairing_coefficient(&[0, 1, 3], &c);
    println!("odd complement {{1,2,4}}: {odd}");
    let all = [0, 1, 2, 3];
    println!(
        "full complement: pairing {:.12e}, determinant {:.12e}",
        pairing_coefficient(&all, &c),
        pairing_coefficient_det(&all, &c)
    );
    Ok(())
}

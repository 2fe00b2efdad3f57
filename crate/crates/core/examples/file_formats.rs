//! Write a spectrum and an eigenstate to disk and read them back.
//!
//! ```bash
//! cargo run --example file_formats
//! ```

use rg_eigen::bethe_solver::homotopy_solve;
use rg_eigen::io;
use rg_eigen::model::{build_couplings, ModelSpec};
use rg_eigen::projector::ProjectorEngine;
use rg_eigen::spin_algebra::StateVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ModelSpec::xxx(vec![0.0, 1.3, 2.0], 0.5, 0.0, 0.0)?;
    let set = homotopy_solve(&spec, 64)?;
    let dir = std::env::temp_dir().join("rg-eigen-file-formats");
    std::fs::create_dir_all(&dir)?;

    let spectrum = io::spectrum_from_solutions(&set);
    let path = dir.join("spectrum.txt");
    io::write_spectrum(&path, &spectrum)?;
    print!("{}", std::fs::read_to_string(&path)?);
    assert_eq!(io::read_spectrum(&path)?, spectrum);

    let engine = ProjectorEngine::new(&build_couplings(&spec)?);
    let p = engine.project_and_normalize(&set.solutions[2].r, &StateVector::uniform(3))?;
    let state = p.state.normalized_with_phase().unwrap();
    let spath = dir.join("state.txt");
    io::write_state(&spath, &state, Some(&spec.spec_hash()))?;
    let back = io::read_state(&spath)?;
    println!("state round trip exact: {}", back.state == state);
    print!("{}", io::render_diagnostics("001", &spec.spec_hash(), &p.diagnostics));
    Ok(())
}

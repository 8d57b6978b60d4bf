use stoquant::potentials::PotentialSpec;
use stoquant::schrodinger::{decay_check, ground_state, spectrum, ZGrid};

fn main() -> stoquant::Result<()> {
    let grid = ZGrid::new(12.0, 4096)?;
    let harmonic = spectrum(&PotentialSpec::free_field(1.0), &grid, 4)?;
    for (j, l) in harmonic.eigenvalues.iter().enumerate() {
        println!("harmonic lambda_{j} = {l:.9}  (exact {})", j as f64 + 0.5);
    }
    // Ω of the cosh model underflows beyond |z| ≈ 8
    for (name, spec, grid) in [
        ("abs norm", PotentialSpec::abs_norm(1.0, 1.0), grid),
        ("cosh", PotentialSpec::cosh(1.0, 1.0), ZGrid::new(8.0, 4096)?),
    ] {
        let gs = ground_state(&spec, &grid)?;
        let d = decay_check(&gs, &spec)?;
        println!("{name:<9} lambda_0 = {:.9}  residual {:.1e}  decay feasible: {}", gs.lambda0, gs.residual, d.feasible);
    }
    Ok(())
}

use stoquant::potentials::PotentialSpec;
use stoquant::schrodinger::{ground_state, moreau_ground_sequence, ZGrid};

fn main() -> stoquant::Result<()> {
    let spec = PotentialSpec::abs_norm(1.0, 1.0);
    let grid = ZGrid::new(12.0, 4096)?;
    let gs = ground_state(&spec, &grid)?;
    let ns = [1, 4, 16, 64, 256];
    for (n, g) in ns.iter().zip(moreau_ground_sequence(&spec, &grid, &ns)?) {
        println!("N = {n:<4} lambda_0 = {:.8}  gap {:.3e}  L2 distance {:.3e}", g.lambda0, gs.lambda0 - g.lambda0, g.l2_distance(&gs)?);
    }
    Ok(())
}

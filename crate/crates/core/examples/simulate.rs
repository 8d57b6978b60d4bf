use stoquant::potentials::PotentialSpec;
use stoquant::spde::{evolve, Boundary, LatticeField, LatticeGeometry, NoisePath, SpdeConfig, SpdeScheme};

fn main() -> stoquant::Result<()> {
    let geometry = LatticeGeometry::with_spacing(5.0, 0.1, Boundary::Neumann)?;
    let spec = PotentialSpec::abs_norm(1.0, 1.0);
    let mut config = SpdeConfig::new(0.005, 5.0, SpdeScheme::SplitStepProx);
    config.output_every = 200;
    let noise = NoisePath::for_run(3, &config, &geometry);
    let tr = evolve(&LatticeField::zeros(geometry)?, &spec, &config, &noise)?;
    for (t, s) in tr.times.iter().zip(&tr.snapshots) {
        let n = s.values.len() as f64;
        let m2 = s.values.iter().map(|v| v * v).sum::<f64>() / n;
        println!("t = {t:>4.1}  mean square {m2:.4}");
    }
    Ok(())
}

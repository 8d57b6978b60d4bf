use stoquant::potentials::PotentialSpec;
use stoquant::spde::{coupling_test, Boundary, LatticeField, LatticeGeometry, NoisePath, SpdeConfig, SpdeScheme, WeightSpec};

fn main() -> stoquant::Result<()> {
    let geometry = LatticeGeometry::with_spacing(5.0, 0.05, Boundary::Neumann)?;
    let mut config = SpdeConfig::new(1e-3, 10.0, SpdeScheme::SplitStepProx);
    config.weight = WeightSpec::with_rate(0.5)?;
    config.output_every = 100;
    let w1 = LatticeField::from_fn(geometry, |x| 2.0 * x.cos())?;
    let w2 = LatticeField::from_fn(geometry, |x| (0.5 * x).sin() - 1.0)?;
    for (name, spec) in [("free field", PotentialSpec::free_field(1.0)), ("abs norm", PotentialSpec::abs_norm(1.0, 1.0))] {
        let mut worst_h: f64 = 0.0;
        let mut worst_e: f64 = 0.0;
        let mut rate = f64::INFINITY;
        for seed in 0..16 {
            let r = coupling_test(&w1, &w2, &spec, &config, &NoisePath::for_run(seed, &config, &geometry))?;
            worst_h = worst_h.max(r.max_ratio_h);
            worst_e = worst_e.max(r.max_ratio_e);
            rate = rate.min(r.observed_rate_h.unwrap_or(f64::INFINITY));
        }
        println!("{name:<11} max H-ratio {worst_h:.5}  max E-ratio {worst_e:.5}  slowest H-rate {rate:.4}");
    }
    Ok(())
}

use stoquant::potentials::PotentialSpec;
use stoquant::schrodinger::ZGrid;
use stoquant::spde::{invariance_test, Boundary, LatticeGeometry, SpdeConfig, SpdeScheme};

fn main() -> stoquant::Result<()> {
    let spec = PotentialSpec::abs_norm(1.0, 1.0);
    let geometry = LatticeGeometry::with_spacing(5.0, 0.1, Boundary::Neumann)?;
    let config = SpdeConfig::new(0.005, 5.0, SpdeScheme::SplitStepProx);
    let zgrid = ZGrid::new(7.0, 700)?;
    let t = std::time::Instant::now();
    let r = invariance_test(&spec, &config, geometry, zgrid, 2024, 10_000, 0.02)?;
    println!("pooled sites      {}", r.pooled_sites);
    println!("KS(t=0, t={})     {:.4}", r.t_final, r.ks);
    println!("KS vs exact       {:.4}", r.ks_exact);
    println!("variance 0 -> t   {:.4} -> {:.4}", r.variance_initial, r.variance_final);
    println!("pass {}  ({:.1} s)", r.pass, t.elapsed().as_secs_f64());
    Ok(())
}

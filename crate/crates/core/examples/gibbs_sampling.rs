use stoquant::gibbs::{sample_paths, uniform_x_grid, TransferKernel};
use stoquant::potentials::PotentialSpec;
use stoquant::schrodinger::{ground_state, ZGrid};

// Lag-one autocovariance of the free field against e^{-mt}/(2m).
fn main() -> stoquant::Result<()> {
    let spec = PotentialSpec::free_field(1.0);
    let grid = ZGrid::new(8.0, 512)?;
    let gs = ground_state(&spec, &grid)?;
    let t = 1.0;
    let kernel = TransferKernel::new(&spec, &grid, t)?;
    let paths = sample_paths(&kernel, &gs, &uniform_x_grid(0.0, t, 2), 11, 20_000)?;
    let n = paths.len() as f64;
    let mean = paths.iter().map(|p| p.values[0] * p.values[1]).sum::<f64>() / n;
    let var = paths.iter().map(|p| (p.values[0] * p.values[1] - mean).powi(2)).sum::<f64>() / (n - 1.0);
    println!("autocovariance {mean:.5} +- {:.5}  exact {:.5}", (var / n).sqrt(), (-t).exp() / 2.0);
    Ok(())
}

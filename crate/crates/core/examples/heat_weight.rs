use stoquant::spde::{heat_weight_bound_check, WeightSpec};

fn main() -> stoquant::Result<()> {
    let weight = WeightSpec::with_rate(0.1)?;
    let grid: Vec<f64> = (0..=7000).map(|i| -35.0 + 0.01 * i as f64).collect();
    let r = heat_weight_bound_check(&weight, &[0.1, 1.0, 10.0], &[0.1, 1.0, 10.0], &grid)?;
    for h in &r.heat {
        println!("t = {:<5} max ratio {:.12}", h.t, h.max_ratio);
    }
    for row in &r.interpolation {
        println!("{:<14} delta {:<5} slack {:.4e}", row.function, row.delta, row.slack);
    }
    Ok(())
}

use stoquant::gibbs::tail_bound_check;
use stoquant::potentials::PotentialSpec;
use stoquant::schrodinger::{ground_state, ZGrid};

fn main() -> stoquant::Result<()> {
    let spec = PotentialSpec::cosh(1.0, 1.0);
    let gs = ground_state(&spec, &ZGrid::new(8.0, 4096)?)?;
    let r = tail_bound_check(&gs, &spec, 1.0, &[1e1, 1e2, 1e3, 1e4, 1e5, 1e6])?;
    println!("M2 = {:.6e}  Cauchy gap {:.2e}  pass {}", r.m2, r.cauchy_gap, r.pass);
    Ok(())
}

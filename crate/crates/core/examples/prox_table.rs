use stoquant::convex::ProxProblem;
use stoquant::potentials::PotentialSpec;

fn main() -> stoquant::Result<()> {
    let spec = PotentialSpec::abs_norm(1.0, 1.0);
    let alpha = 0.5;
    let p = ProxProblem::new(&spec, alpha)?;
    println!("{:>6} {:>12} {:>12}", "z", "prox", "yosida");
    for i in -8..=8 {
        let z = 0.5 * i as f64;
        println!("{z:>6.2} {:>12.8} {:>12.8}", p.prox1(z)?, p.yosida_grad1(z)?);
    }
    Ok(())
}

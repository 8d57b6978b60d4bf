use stoquant::functional::{lsi_marginal_check, TestFunctionFamily};
use stoquant::potentials::{Atom, PotentialSpec};
use stoquant::schrodinger::{ground_state, ZGrid};

fn main() -> stoquant::Result<()> {
    let grid = ZGrid::new(8.0, 2048)?;
    let family = TestFunctionFamily::standard();
    for (name, spec) in [
        ("free field", PotentialSpec::free_field(1.0)),
        ("cosh", PotentialSpec::cosh(1.0, 1.0)),
        ("trig", PotentialSpec::trigonometric(1.0, 0.0, vec![Atom::scalar(1.0, 0.3)])),
    ] {
        let r = lsi_marginal_check(&ground_state(&spec, &grid)?, spec.k1, &family)?;
        println!("{name}: K1 = {:.2}, min slack {:.4e}", r.k1, r.min_slack);
        for row in &r.rows {
            println!("  {:<20} entropy {:.5}  bound {:.5}", row.function, row.entropy, row.bound);
        }
    }
    Ok(())
}

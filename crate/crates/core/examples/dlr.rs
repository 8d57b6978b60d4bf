use stoquant::gibbs::{dlr_check, DlrWindow, TransferKernel};
use stoquant::potentials::PotentialSpec;
use stoquant::schrodinger::ZGrid;

fn main() -> stoquant::Result<()> {
    let grid = ZGrid::new(7.0, 700)?;
    let window = DlrWindow {
        t1: 0.0,
        t2: 1.0,
        za: 0.3,
        zb: -0.5,
    };
    let spec = PotentialSpec::abs_norm(1.0, 1.0);
    let kernel = TransferKernel::new(&spec, &grid, 0.5)?;
    let mut prev: Option<f64> = None;
    for step in [0.1, 0.05, 0.025] {
        let r = dlr_check(&kernel, &spec, window, 1, step)?;
        let order = prev.map(|p| (p / r.discrepancy).log2());
        println!("step {step:<6} discrepancy {:.3e}  order {}", r.discrepancy, order.map_or("-".into(), |o| format!("{o:.2}")));
        prev = Some(r.discrepancy);
    }
    Ok(())
}

use stoquant::harness::{emit_report, verify_suite, Preset, ReportFormat};

fn main() -> stoquant::Result<()> {
    let m = verify_suite(Preset::ExpPhi)?;
    print!("{}", emit_report(&m, ReportFormat::Text)?);
    Ok(())
}

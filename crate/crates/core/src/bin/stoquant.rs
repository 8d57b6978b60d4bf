use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use stoquant::convex::ProxProblem;
use stoquant::error::Result;
use stoquant::gibbs::{sample_paths, uniform_x_grid, TransferKernel};
use stoquant::harness::{
    emit_report, preset_config, run, write_atomic, ExperimentConfig, Preset, ReportFormat, RunManifest,
    MANIFEST_FILE,
};
use stoquant::numerics::derive_seed;
use stoquant::schrodinger::{ground_state, spectrum};
use stoquant::spde::{coupling_test, evolve, LatticeField, NoisePath};

#[derive(Parser)]
#[command(name = "stoquant", version, about = "Gibbs path measures and the stochastic-quantization SPDE")]
struct Cli {
    /// experiment config (JSON); overrides --preset
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "free-field")]
    preset: Preset,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// output directory for CSV files and the manifest
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest eigenpairs of the Schrödinger operator
    GroundState {
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Paths of the Gibbs path measure on a uniform time grid
    SampleGibbs {
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        #[arg(long, default_value_t = 200)]
        points: usize,
        #[arg(long, default_value_t = 4)]
        paths: usize,
    },
    /// One trajectory of the lattice SPDE from the zero field
    Simulate,
    /// Two copies driven by the same noise
    Couple {
        #[arg(long, default_value_t = 1)]
        paths: usize,
    },
    /// Proximal map and Yosida gradient on a uniform grid
    ProxTable {
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 5.0)]
        half_width: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Run the configured checks; exit status 0 iff all pass
    Verify,
    /// Render a stored manifest
    Report {
        /// manifest file or the directory holding it
        path: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

fn load(cli: &Cli) -> Result<ExperimentConfig> {
    let mut c = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => preset_config(cli.preset),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if cli.out.is_some() {
        c.output_dir = cli.out.clone();
    }
    Ok(c)
}

fn emit(out: Option<&Path>, name: &str, body: String) -> Result<()> {
    match out {
        Some(dir) => {
            write_atomic(&dir.join(name), body.as_bytes())?;
            eprintln!("wrote {}", dir.join(name).display());
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.jobs {
        // only fails if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    if let Command::Report { path, format } = &cli.command {
        let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.clone() };
        let m = RunManifest::from_json(&std::fs::read_to_string(file)?)?;
        let f = match format {
            Format::Text => ReportFormat::Text,
            Format::Json => ReportFormat::Json,
        };
        println!("{}", emit_report(&m, f)?);
        return Ok(m.all_pass);
    }
    let cfg = load(&cli)?;
    let spec = &cfg.potential;
    let out = cfg.output_dir.as_deref();
    match &cli.command {
        Command::GroundState { levels } => {
            let s = spectrum(spec, &cfg.grids.z, *levels)?;
            for (j, l) in s.eigenvalues.iter().enumerate() {
                println!("lambda_{j} = {l:.12}");
            }
            if s.eigenvalues.len() > 1 {
                println!("gap = {:.12}", s.eigenvalues[1] - s.eigenvalues[0]);
            }
            let gs = ground_state(spec, &cfg.grids.z)?;
            let mut body = String::from("# z (field value), omega (1/sqrt(length))\n");
            for (i, o) in gs.omega.iter().enumerate() {
                body.push_str(&format!("{:.10e},{:.10e}\n", gs.grid.node(i), o));
            }
            if let Some(dir) = out {
                write_atomic(&dir.join("ground_state.csv"), body.as_bytes())?;
            }
        }
        Command::SampleGibbs { step, points, paths } => {
            let gs = ground_state(spec, &cfg.grids.z)?;
            let k = TransferKernel::new(spec, &cfg.grids.z, *step)?;
            let grid = uniform_x_grid(0.0, *step, *points);
            let ps = sample_paths(&k, &gs, &grid, derive_seed(cfg.seed, "cli-gibbs", 0), *paths)?;
            let mut body = String::from("# x (path time), then one column per path (field value)\n");
            for (i, x) in grid.iter().enumerate() {
                body.push_str(&format!("{x}"));
                for p in &ps {
                    body.push_str(&format!(",{:.10e}", p.values[i]));
                }
                body.push('\n');
            }
            emit(out, "gibbs_paths.csv", body)?;
        }
        Command::Simulate => {
            let sc = cfg.spde_config();
            let g = cfg.grids.lattice;
            let noise = NoisePath::for_run(derive_seed(cfg.seed, "cli-simulate", 0), &sc, &g);
            let tr = evolve(&LatticeField::zeros(g)?, spec, &sc, &noise)?;
            let mut body = String::from("# t (time), then the field at each lattice site (field value)\n# sites");
            for x in g.sites() {
                body.push_str(&format!(",{x}"));
            }
            body.push('\n');
            for (t, s) in tr.times.iter().zip(&tr.snapshots) {
                body.push_str(&format!("{t}"));
                for v in &s.values {
                    body.push_str(&format!(",{v:.10e}"));
                }
                body.push('\n');
            }
            emit(out, "trajectory.csv", body)?;
        }
        Command::Couple { paths } => {
            let g = cfg.grids.lattice;
            let sc = cfg.spde_config();
            let w1 = LatticeField::from_fn(g, |x| 2.0 * x.cos())?;
            let w2 = LatticeField::from_fn(g, |x| (0.5 * x).sin() - 1.0)?;
            let mut body = String::from("# path, t (time), ratio_h (dimensionless), ratio_e (dimensionless)\n");
            let mut ok = true;
            for p in 0..*paths {
                let noise = NoisePath::for_run(derive_seed(cfg.seed, "coupling", p as u64), &sc, &g);
                let r = coupling_test(&w1, &w2, spec, &sc, &noise)?;
                eprintln!(
                    "path {p}: max H-ratio {:.6}, max E-ratio {:.6}, tolerance {:.3e}",
                    r.max_ratio_h, r.max_ratio_e, r.tol
                );
                ok &= r.pass;
                for ((t, h), e) in r.times.iter().zip(&r.ratio_h).zip(&r.ratio_e) {
                    body.push_str(&format!("{p},{t},{h:.10e},{e:.10e}\n"));
                }
            }
            emit(out, "coupling.csv", body)?;
            return Ok(ok);
        }
        Command::ProxTable {
            alpha,
            half_width,
            points,
        } => {
            let p = ProxProblem::new(spec, *alpha)?;
            let mut body = String::from("# z (field value), prox (field value), yosida_grad (field value / time)\n");
            let n = (*points).max(2);
            for i in 0..n {
                let z = -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64;
                body.push_str(&format!("{z},{:.12e},{:.12e}\n", p.prox1(z)?, p.yosida_grad1(z)?));
            }
            emit(out, "prox.csv", body)?;
        }
        Command::Verify => {
            let m = run(&cfg)?;
            println!("{}", emit_report(&m, ReportFormat::Text)?);
            return Ok(m.all_pass);
        }
        Command::Report { .. } => unreachable!(),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

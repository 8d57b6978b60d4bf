//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

use std::time::Instant;

use rand::Rng;
use stoquant::convex::{soft_threshold, ProxProblem};
use stoquant::functional::{heat_lsi_check, lsi_marginal_check, SiteObservable, TestFunction, TestFunctionFamily};
use stoquant::gibbs::{dlr_check, sample_paths, tail_bound_check, DlrWindow, TransferKernel};
use stoquant::harness::{preset_config, run, CheckSpec, ExperimentConfig, Preset};
use stoquant::numerics::{ks_one_sample, linear_fit, mean_and_stderr, stream_rng, CellCdf};
use stoquant::potentials::{Atom, PotentialKind, PotentialSpec};
use stoquant::schrodinger::{ground_state, moreau_ground_sequence, spectrum, ZGrid};
use stoquant::spde::{
    coupling_test, evolve, heat_weight_bound_check, invariance_test, Boundary, LatticeField, LatticeGeometry, LatticeGibbs,
    NoisePath, SpdeConfig, SpdeScheme, WeightSpec,
};
use stoquant::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn harmonic() -> Result<Outcome> {
    let start = Instant::now();
    let s = spectrum(&PotentialSpec::free_field(1.0), &ZGrid::new(12.0, 4096)?, 2)?;
    let secs = start.elapsed().as_secs_f64();
    let e0 = (s.eigenvalues[0] - 0.5).abs();
    let e1 = (s.eigenvalues[1] - s.eigenvalues[0] - 1.0).abs();
    outcome(
        e0 <= 1e-6 && e1 <= 1e-5 && secs < 5.0,
        format!("|lambda0 - 0.5| = {e0:.3e} (tol 1e-6), |gap - 1| = {e1:.3e} (tol 1e-5), {secs:.2}s"),
    )
}

fn proximal() -> Result<Outcome> {
    let abs = PotentialSpec::abs_norm(0.0, 1.0);
    let quad = PotentialSpec {
        kind: PotentialKind::Polynomial {
            coeffs: vec![0.0, 0.0, 0.5],
        },
        k1: 0.0,
        ..PotentialSpec::free_field(1.0)
    };
    let mut rng = stream_rng(2024, "acceptance-prox", 0);
    let mut closed: f64 = 0.0;
    for _ in 0..1000 {
        let z = 12.0 * rng.random::<f64>() - 6.0;
        let alpha = 0.01 + 3.0 * rng.random::<f64>();
        closed = closed.max((ProxProblem::new(&abs, alpha)?.prox1(z)? - soft_threshold(z, alpha)).abs());
        closed = closed.max((ProxProblem::new(&quad, alpha)?.prox1(z)? - z / (1.0 + alpha)).abs());
    }
    let family = [
        PotentialSpec::abs_norm(1.0, 1.0),
        PotentialSpec::cosh(1.0, 1.0),
        PotentialSpec::trigonometric(1.0, 0.4, vec![Atom::scalar(0.8, 0.3)]),
    ];
    let mut ne_excess = f64::NEG_INFINITY;
    let mut lip_excess = f64::NEG_INFINITY;
    for i in 0..10_000 {
        let spec = &family[i % family.len()];
        let alpha = 0.01 + 3.0 * rng.random::<f64>();
        let p = ProxProblem::new(spec, alpha)?;
        let a = 12.0 * rng.random::<f64>() - 6.0;
        let b = 12.0 * rng.random::<f64>() - 6.0;
        let d = (a - b).abs();
        ne_excess = ne_excess.max((p.prox1(a)? - p.prox1(b)?).abs() - d);
        lip_excess = lip_excess.max((p.yosida_grad1(a)? - p.yosida_grad1(b)?).abs() - 2.0 / alpha * d);
    }
    outcome(
        closed <= 1e-12 && ne_excess <= 1e-12 && lip_excess <= 1e-12,
        format!("closed-form error {closed:.2e}, nonexpansive excess {ne_excess:.2e}, Lipschitz excess {lip_excess:.2e} on 10^4 pairs"),
    )
}

fn moreau() -> Result<Outcome> {
    let start = Instant::now();
    let spec = PotentialSpec::abs_norm(1.0, 1.0);
    let grid = ZGrid::new(12.0, 4096)?;
    let gs = ground_state(&spec, &grid)?;
    let ns: Vec<u32> = (1..=256).collect();
    let seq = moreau_ground_sequence(&spec, &grid, &ns)?;
    let secs = start.elapsed().as_secs_f64();
    let monotone = seq.windows(2).all(|w| w[1].lambda0 >= w[0].lambda0);
    let last = &seq[255];
    let gap = (gs.lambda0 - last.lambda0).abs();
    let dist = last.l2_distance(&gs)?;
    outcome(
        monotone && gap <= 1e-4 && dist < 1e-3 && secs < 30.0,
        format!("nondecreasing {monotone}, |lambda0 - lambda0_256| = {gap:.3e} (tol 1e-4), L2 distance {dist:.2e} (tol 1e-3), {secs:.1}s"),
    )
}

fn gibbs_sampler() -> Result<Outcome> {
    let spec = PotentialSpec::free_field(1.0);
    let grid = ZGrid::new(8.0, 512)?;
    let gs = ground_state(&spec, &grid)?;
    let t = 1.0;
    let kernel = TransferKernel::new(&spec, &grid, t)?;
    let paths = sample_paths(&kernel, &gs, &[0.0, t], 404, 100_000)?;
    let first: Vec<f64> = paths.iter().map(|p| p.values[0]).collect();
    let masses: Vec<f64> = gs.omega.iter().map(|o| o * o).collect();
    let cdf = CellCdf::new(gs.grid.node(0), gs.grid.spacing(), &masses);
    let ks = ks_one_sample(&first, |z| cdf.eval(z));
    let prods: Vec<f64> = paths.iter().map(|p| p.values[0] * p.values[1]).collect();
    let est = mean_and_stderr(&prods);
    let exact = (-t).exp() / 2.0;
    let dev = (est.mean - exact).abs();
    outcome(
        ks < 0.01 && dev <= 3.0 * est.std_err,
        format!(
            "KS {ks:.4} (tol 0.01), lag-1 autocovariance {:.5} vs {exact:.5}, deviation {:.2} SE (tol 3)",
            est.mean,
            dev / est.std_err
        ),
    )
}

fn dlr() -> Result<Outcome> {
    let grid = ZGrid::new(7.0, 700)?;
    let window = DlrWindow {
        t1: 0.0,
        t2: 1.0,
        za: 0.3,
        zb: -0.5,
    };
    let free = PotentialSpec::free_field(1.0);
    let d_free = dlr_check(&TransferKernel::new(&free, &grid, 0.5)?, &free, window, 1, 0.05)?.discrepancy;
    let abs = PotentialSpec::abs_norm(1.0, 1.0);
    let kernel = TransferKernel::new(&abs, &grid, 0.5)?;
    let steps = [0.1, 0.05, 0.025, 0.0125];
    let mut log_d = Vec::new();
    for s in steps {
        log_d.push(dlr_check(&kernel, &abs, window, 1, s)?.discrepancy.ln());
    }
    let log_s: Vec<f64> = steps.iter().map(|s| s.ln()).collect();
    let (_, order) = linear_fit(&log_s, &log_d);
    outcome(
        d_free < 1e-3 && order >= 1.5,
        format!("free-field discrepancy {d_free:.3e} (tol 1e-3), AbsNorm refinement order {order:.2} (min 1.5)"),
    )
}

fn coupling() -> Result<Outcome> {
    let geometry = LatticeGeometry::with_spacing(5.0, 0.05, Boundary::Neumann)?;
    let mut config = SpdeConfig::new(1e-3, 10.0, SpdeScheme::SplitStepProx);
    config.weight = WeightSpec::with_rate(0.5)?;
    config.output_every = 100;
    let w1 = LatticeField::from_fn(geometry, |x| 2.0 * x.cos())?;
    let w2 = LatticeField::from_fn(geometry, |x| (0.5 * x).sin() - 1.0)?;
    let bound = 1.0 + 5.0 * (1e-3 + 0.05 * 0.05);
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, spec) in [("free field", PotentialSpec::free_field(1.0)), ("AbsNorm", PotentialSpec::abs_norm(1.0, 1.0))] {
        let mut worst: f64 = 0.0;
        for seed in 0..16 {
            let r = coupling_test(&w1, &w2, &spec, &config, &NoisePath::for_run(seed, &config, &geometry))?;
            worst = worst.max(r.max_ratio_h);
        }
        pass &= worst <= bound;
        parts.push(format!("{name} max H-ratio {worst:.6}"));
    }
    outcome(pass, format!("{} (bound {bound:.4}, 16 paths)", parts.join(", ")))
}

fn invariance() -> Result<Outcome> {
    let start = Instant::now();
    let geometry = LatticeGeometry::with_spacing(5.0, 0.1, Boundary::Neumann)?;
    let config = SpdeConfig::new(0.005, 5.0, SpdeScheme::SplitStepProx);
    let spec = PotentialSpec::abs_norm(1.0, 1.0);
    let r = invariance_test(&spec, &config, geometry, LatticeGibbs::default_zgrid(&geometry)?, 77, 10_000, 0.02)?;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        r.pass && secs < 600.0,
        format!("KS {:.4} (tol 0.02) over {} replicas at t = 5, {secs:.1}s", r.ks, r.n_replicas),
    )
}

fn lsi() -> Result<Outcome> {
    let grid = ZGrid::new(8.0, 2048)?;
    let family = TestFunctionFamily::standard();
    let geometry = LatticeGeometry::with_spacing(5.0, 0.1, Boundary::Neumann)?;
    let config = SpdeConfig::new(0.005, 5.0, SpdeScheme::SplitStepProx);
    let start = LatticeField::zeros(geometry)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, spec) in [
        ("free field", PotentialSpec::free_field(1.0)),
        ("cosh", PotentialSpec::cosh(1.0, 1.0)),
        ("trig", PotentialSpec::trigonometric(1.0, 0.0, vec![Atom::scalar(1.0, 0.3)])),
    ] {
        let m = lsi_marginal_check(&ground_state(&spec, &grid)?, spec.k1, &family)?;
        let obs = SiteObservable {
            spec: &spec,
            config: &config,
            start: &start,
            site: geometry.n_sites / 2,
            f: TestFunction::Tanh { scale: 1.0 },
        };
        let h = heat_lsi_check(&obs, &[0.1, 1.0, 5.0], 400, 88)?;
        let worst = h.rows.iter().map(|r| r.slack / r.se).fold(f64::INFINITY, f64::min);
        pass &= m.min_slack >= 0.0 && h.pass;
        parts.push(format!("{name} (K1 = {:.2}) marginal slack {:.3e}, heat slack {worst:.1} SE", spec.k1, m.min_slack));
    }
    outcome(pass, parts.join("; "))
}

fn heat_weight() -> Result<Outcome> {
    let grid: Vec<f64> = (0..=7000).map(|i| -35.0 + 0.01 * i as f64).collect();
    let r = heat_weight_bound_check(&WeightSpec::with_rate(0.1)?, &[0.1, 1.0, 10.0], &[0.1, 1.0, 10.0], &grid)?;
    let ratio = r.heat.iter().map(|h| h.max_ratio).fold(0.0, f64::max);
    let slack = r.interpolation.iter().map(|i| i.slack).fold(f64::INFINITY, f64::min);
    outcome(r.pass, format!("max heat ratio {ratio:.15} (quadrature slack 1e-12), min interpolation slack {slack:.3e}"))
}

fn tail() -> Result<Outcome> {
    let spec = PotentialSpec::cosh(1.0, 1.0);
    let gs = ground_state(&spec, &ZGrid::new(8.0, 4096)?)?;
    let r = tail_bound_check(&gs, &spec, 1.0, &[1e1, 1e2, 1e3, 1e4, 1e5, 1e6])?;
    outcome(
        r.m2 > 0.0 && r.cauchy_gap < 1e-10,
        format!("M2 = {:.4e}, Cauchy gap {:.2e} (tol 1e-10)", r.m2, r.cauchy_gap),
    )
}

fn determinism() -> Result<Outcome> {
    let geometry = LatticeGeometry::with_spacing(5.0, 0.1, Boundary::Neumann)?;
    let mut config = SpdeConfig::new(0.005, 2.0, SpdeScheme::SplitStepProx);
    config.output_every = 10;
    let spec = PotentialSpec::abs_norm(1.0, 1.0);
    let traj = || -> Result<String> {
        let w0 = LatticeField::from_fn(geometry, |x| x.sin())?;
        Ok(serde_json::to_string(&evolve(&w0, &spec, &config, &NoisePath::for_run(5, &config, &geometry))?.snapshots)?)
    };
    let same_traj = traj()? == traj()?;

    let base = ExperimentConfig {
        record_timing: false,
        checks: vec![
            CheckSpec::GroundState {
                expected_lambda0: Some(0.5),
                tol: 1e-5,
            },
            CheckSpec::GibbsMarginal {
                t: 100.0,
                n_points: 500,
                ks_tol: 0.1,
            },
            CheckSpec::Coupling { n_paths: 2 },
            CheckSpec::Invariance {
                n_replicas: 500,
                ks_tol: 0.1,
            },
        ],
        ..preset_config(Preset::FreeField)
    };
    let mut files = Vec::new();
    let dirs = [tempfile::tempdir()?, tempfile::tempdir()?];
    for d in &dirs {
        run(&ExperimentConfig {
            output_dir: Some(d.path().to_path_buf()),
            ..base.clone()
        })?;
        let mut bytes = Vec::new();
        for f in ["manifest.json", "gibbs_path.csv", "coupling.csv", "ground_state.csv"] {
            bytes.push(std::fs::read(d.path().join(f))?);
        }
        files.push(bytes);
    }
    let same_files = files[0] == files[1];
    outcome(
        same_traj && same_files,
        format!("trajectories identical {same_traj}, manifest and CSV artifacts identical {same_files}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>); 11] = [
        ("harmonic calibration", harmonic),
        ("proximal exactness", proximal),
        ("Moreau ground-state sequence", moreau),
        ("Gibbs sampler fidelity", gibbs_sampler),
        ("DLR identity", dlr),
        ("coupling contraction", coupling),
        ("invariance", invariance),
        ("LSI constants", lsi),
        ("heat-weight bound", heat_weight),
        ("tail bound", tail),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f().unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!("error: {e}"),
        });
        failed += usize::from(!o.pass);
        println!("{} {:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

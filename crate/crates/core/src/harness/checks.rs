use std::sync::OnceLock;

use rand::Rng;
use serde_json::json;

use super::config::{CheckSpec, ExperimentConfig};
use crate::convex::ProxProblem;
use crate::error::{Error, Result};
use crate::functional::{
    autocorrelation_check, default_gibbs, gradient_estimate_check, heat_lsi_check, lsi_marginal_check, spectral_gap_check,
    verdict, McReport, SiteObservable, TestFunctionFamily,
};
use crate::gibbs::{dlr_check, sample_path, sample_paths, tail_bound_check, uniform_x_grid, TransferKernel};
use crate::numerics::{derive_seed, ks_one_sample, mean_and_stderr, stream_rng, CellCdf};
use crate::potentials::PotentialSpec;
use crate::schrodinger::{decay_check, ground_state, moreau_ground_sequence, spectrum, GroundState};
use crate::spde::{coupling_test, LatticeGibbs, heat_weight_bound_check, invariance_test, LatticeField, NoisePath};

/// Result of one check before bookkeeping.
pub(crate) struct Verdict {
    pub pass: bool,
    pub slack: Option<f64>,
    pub ci: Option<f64>,
    pub metrics: serde_json::Value,
    /// `(file name, contents)` written to the output directory
    pub csv: Option<(String, String)>,
}

impl Verdict {
    fn new(slack: f64, ci: Option<f64>, pass: bool, metrics: serde_json::Value) -> Self {
        Self {
            pass,
            slack: Some(slack).filter(|s| s.is_finite()),
            ci: ci.filter(|c| c.is_finite()),
            metrics,
            csv: None,
        }
    }

    fn with_csv(mut self, name: &str, body: String) -> Self {
        self.csv = Some((name.to_string(), body));
        self
    }
}

/// Immutable artifacts shared between checks.
pub(crate) struct Context<'a> {
    pub config: &'a ExperimentConfig,
    gs: OnceLock<std::result::Result<GroundState, String>>,
}

impl<'a> Context<'a> {
    pub fn new(config: &'a ExperimentConfig) -> Self {
        Self {
            config,
            gs: OnceLock::new(),
        }
    }

    fn spec(&self) -> &PotentialSpec {
        &self.config.potential
    }

    fn ground_state(&self) -> Result<&GroundState> {
        self.gs
            .get_or_init(|| ground_state(self.spec(), &self.config.grids.z).map_err(|e| e.to_string()))
            .as_ref()
            .map_err(|e| Error::Eigensolver(e.clone()))
    }

    fn seed(&self, label: &str) -> u64 {
        derive_seed(self.config.seed, label, 0)
    }
}

fn csv(header: &str, rows: impl Iterator<Item = String>) -> String {
    let mut s = String::from(header);
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

/// Free field `U = m²z²/2`: returns `m`.
fn gaussian_mass(spec: &PotentialSpec) -> Option<f64> {
    (spec.dim == 1 && spec.k1 > 0.0 && spec.quadratic_abs_part() == Some((0.0, 0.0))).then(|| spec.k1.sqrt())
}

fn mc_verdict(r: &McReport) -> Verdict {
    let worst = r
        .rows
        .iter()
        .min_by(|a, b| (a.slack + 3.0 * a.se).total_cmp(&(b.slack + 3.0 * b.se)))
        .expect("rows");
    Verdict::new(
        worst.slack,
        Some(3.0 * worst.se),
        r.pass,
        json!({ "function": r.function, "n_replicas": r.n_replicas, "rows": r.rows }),
    )
}

pub(crate) fn execute(check: &CheckSpec, ctx: &Context) -> Result<Verdict> {
    let cfg = ctx.config;
    let spec = ctx.spec();
    match check {
        CheckSpec::GroundState { expected_lambda0, tol } => {
            let gs = ctx.ground_state()?;
            let err = expected_lambda0.map(|e| (gs.lambda0 - e).abs());
            let slack = err.map_or(*tol - gs.residual, |e| tol - e);
            let g = gs.grid;
            let body = csv(
                "# z (field value), omega (1/sqrt(length)), omega^2 (1/length)\n",
                gs.omega.iter().enumerate().map(|(i, o)| format!("{:.10e},{:.10e},{:.10e}", g.node(i), o, o * o)),
            );
            Ok(Verdict::new(
                slack,
                None,
                slack >= 0.0,
                json!({ "lambda0": gs.lambda0, "residual": gs.residual, "abs_error": err }),
            )
            .with_csv("ground_state.csv", body))
        }
        CheckSpec::SpectralGap { expected_gap, tol } => {
            let s = spectrum(spec, &cfg.grids.z, 2)?;
            let r = spectral_gap_check(&s, spec.k1)?;
            let err = expected_gap.map(|e| (r.gap - e).abs());
            let exp_slack = err.map_or(f64::INFINITY, |e| tol - e);
            let slack = r.slack.min(exp_slack);
            Ok(Verdict::new(
                slack,
                None,
                r.pass && exp_slack >= 0.0,
                json!({ "gap": r.gap, "bound": r.bound, "lambda0": r.lambda0, "lambda1": r.lambda1, "abs_error": err }),
            ))
        }
        CheckSpec::Decay => {
            let r = decay_check(ctx.ground_state()?, spec)?;
            Ok(Verdict::new(
                if r.feasible { r.d2.min(r.d4) } else { -1.0 },
                None,
                r.feasible,
                serde_json::to_value(&r)?,
            ))
        }
        CheckSpec::Prox { alpha, n_pairs, tol } => {
            let p = ProxProblem::new(spec, *alpha)?;
            let mut rng = stream_rng(ctx.seed("prox"), "pairs", 0);
            let mut worst_ne = f64::NEG_INFINITY;
            let mut worst_lip = f64::NEG_INFINITY;
            for _ in 0..*n_pairs {
                let a = 12.0 * rng.random::<f64>() - 6.0;
                let b = 12.0 * rng.random::<f64>() - 6.0;
                let d = (a - b).abs();
                if d == 0.0 {
                    continue;
                }
                worst_ne = worst_ne.max(((p.prox1(a)? - p.prox1(b)?).abs() - d) / d);
                worst_lip = worst_lip.max(((p.yosida_grad1(a)? - p.yosida_grad1(b)?).abs() - 2.0 / alpha * d) / d);
            }
            let slack = (tol - worst_ne).min(tol - worst_lip);
            Ok(Verdict::new(
                slack,
                None,
                slack >= 0.0,
                json!({ "nonexpansive_excess": worst_ne, "lipschitz_excess": worst_lip, "pairs": n_pairs }),
            ))
        }
        CheckSpec::MoreauSequence { n_list, tol } => {
            let seq = moreau_ground_sequence(spec, &cfg.grids.z, n_list)?;
            let gs = ctx.ground_state()?;
            let lambdas: Vec<f64> = seq.iter().map(|g| g.lambda0).collect();
            let monotone = lambdas.windows(2).all(|w| w[1] >= w[0] - 1e-12);
            let last = seq.last().ok_or(Error::EmptyGrid)?;
            let gap = gs.lambda0 - last.lambda0;
            let dist = last.l2_distance(gs)?;
            let slack = (tol - gap.abs()).min(1e-3 - dist);
            Ok(Verdict::new(
                slack,
                None,
                monotone && slack >= 0.0,
                json!({ "n_list": n_list, "lambda0_n": lambdas, "lambda0": gs.lambda0, "monotone": monotone, "l2_distance": dist }),
            ))
        }
        CheckSpec::GibbsMarginal { t, n_points, ks_tol } => {
            let gs = ctx.ground_state()?;
            let k = TransferKernel::new(spec, &cfg.grids.z, *t)?;
            let p = sample_path(&k, gs, &uniform_x_grid(0.0, *t, *n_points), ctx.seed("gibbs-marginal"))?;
            let masses: Vec<f64> = gs.omega.iter().map(|o| o * o).collect();
            let cdf = CellCdf::new(gs.grid.node(0), gs.grid.spacing(), &masses);
            let ks = ks_one_sample(&p.values, |z| cdf.eval(z));
            let body = csv("# x (path time), z (field value)\n", p.x_points.iter().zip(&p.values).map(|(x, z)| format!("{x},{z:.10e}")));
            Ok(Verdict::new(ks_tol - ks, None, ks < *ks_tol, json!({ "ks": ks, "n_points": n_points, "t": t }))
                .with_csv("gibbs_path.csv", body))
        }
        CheckSpec::GibbsAutocovariance { t, n_paths } => {
            let m = gaussian_mass(spec)
                .ok_or_else(|| Error::HypothesisViolated("the closed-form autocovariance needs the free field".into()))?;
            let gs = ctx.ground_state()?;
            let k = TransferKernel::new(spec, &cfg.grids.z, *t)?;
            let paths = sample_paths(&k, gs, &uniform_x_grid(0.0, *t, 2), ctx.seed("gibbs-acov"), *n_paths)?;
            let prods: Vec<f64> = paths.iter().map(|p| p.values[0] * p.values[1]).collect();
            let est = mean_and_stderr(&prods);
            let exact = (-m * t).exp() / (2.0 * m);
            let slack = 3.0 * est.std_err - (est.mean - exact).abs();
            Ok(Verdict::new(
                slack,
                Some(3.0 * est.std_err),
                slack >= 0.0,
                json!({ "estimate": est.mean, "std_err": est.std_err, "exact": exact }),
            ))
        }
        CheckSpec::Dlr {
            window,
            n_inner,
            trotter_step,
            tol,
            z,
        } => {
            let seg = (window.t2 - window.t1) / (*n_inner as f64 + 1.0);
            let k = TransferKernel::new(spec, z.as_ref().unwrap_or(&cfg.grids.z), seg)?;
            let r = dlr_check(&k, spec, *window, *n_inner, *trotter_step)?;
            Ok(Verdict::new(tol - r.discrepancy, None, r.discrepancy < *tol, serde_json::to_value(&r)?))
        }
        CheckSpec::TailBound { a, t_list } => {
            let r = tail_bound_check(ctx.ground_state()?, spec, *a, t_list)?;
            Ok(Verdict::new(
                (1e-10 - r.cauchy_gap).min(r.m2),
                None,
                r.pass,
                json!({ "m2": r.m2, "log_m1": r.log_m1, "cauchy_gap": r.cauchy_gap, "log_a": r.log_a, "decreasing": r.decreasing }),
            ))
        }
        CheckSpec::Coupling { n_paths } => {
            let g = cfg.grids.lattice;
            let sc = cfg.spde_config();
            let w1 = LatticeField::from_fn(g, |x| 2.0 * x.cos())?;
            let w2 = LatticeField::from_fn(g, |x| (0.5 * x).sin() - 1.0)?;
            let mut worst_h = 0.0f64;
            let mut worst_e = 0.0f64;
            let mut tol = 0.0;
            let mut first = None;
            for p in 0..*n_paths {
                let noise = NoisePath::for_run(derive_seed(cfg.seed, "coupling", p as u64), &sc, &g);
                let r = coupling_test(&w1, &w2, spec, &sc, &noise)?;
                worst_h = worst_h.max(r.max_ratio_h);
                worst_e = worst_e.max(r.max_ratio_e);
                tol = r.tol;
                if first.is_none() {
                    first = Some(r);
                }
            }
            let r0 = first.ok_or_else(|| Error::InvalidParameter("coupling needs at least one path".into()))?;
            let body = csv(
                "# t (time), ratio_h (dimensionless), ratio_e (dimensionless); first noise path\n",
                r0.times.iter().zip(&r0.ratio_h).zip(&r0.ratio_e).map(|((t, h), e)| format!("{t},{h:.10e},{e:.10e}")),
            );
            let slack = 1.0 + tol - worst_h.max(worst_e);
            Ok(Verdict::new(
                slack,
                None,
                slack >= 0.0,
                json!({ "max_ratio_h": worst_h, "max_ratio_e": worst_e, "tol": tol, "n_paths": n_paths }),
            )
            .with_csv("coupling.csv", body))
        }
        CheckSpec::Invariance { n_replicas, ks_tol } => {
            let r = invariance_test(
                spec,
                &cfg.spde_config(),
                cfg.grids.lattice,
                LatticeGibbs::default_zgrid(&cfg.grids.lattice)?,
                ctx.seed("invariance"),
                *n_replicas,
                *ks_tol,
            )?;
            Ok(Verdict::new(ks_tol - r.ks, None, r.pass, serde_json::to_value(&r)?))
        }
        CheckSpec::MarginalLsi => {
            let r = lsi_marginal_check(ctx.ground_state()?, spec.k1, &TestFunctionFamily::standard())?;
            Ok(Verdict::new(r.min_slack, None, r.pass, serde_json::to_value(&r)?))
        }
        CheckSpec::HeatLsi { f, t_list, n_replicas } => {
            let start = LatticeField::zeros(cfg.grids.lattice)?;
            let sc = cfg.spde_config();
            let obs = SiteObservable {
                spec,
                config: &sc,
                start: &start,
                site: cfg.grids.lattice.n_sites / 2,
                f: *f,
            };
            Ok(mc_verdict(&heat_lsi_check(&obs, t_list, *n_replicas, ctx.seed("heat-lsi"))?))
        }
        CheckSpec::GradientEstimate {
            f,
            t_list,
            n_replicas,
            eps,
        } => {
            let start = LatticeField::from_fn(cfg.grids.lattice, |x| 0.5 * x.sin())?;
            let sc = cfg.spde_config();
            let obs = SiteObservable {
                spec,
                config: &sc,
                start: &start,
                site: cfg.grids.lattice.n_sites / 2,
                f: *f,
            };
            Ok(mc_verdict(&gradient_estimate_check(&obs, t_list, *n_replicas, ctx.seed("gradient"), *eps)?))
        }
        CheckSpec::HeatWeight { t_list, deltas } => {
            let t_max = t_list.iter().cloned().fold(1.0, f64::max);
            let half = 7.1 * t_max.sqrt() + 15.0;
            let n = (2.0 * half / 0.01).round() as usize;
            let grid: Vec<f64> = (0..=n).map(|i| -half + 0.01 * i as f64).collect();
            let r = heat_weight_bound_check(&cfg.weight, t_list, deltas, &grid)?;
            let heat_slack = r.heat.iter().map(|h| 1.0 - h.max_ratio).fold(f64::INFINITY, f64::min);
            let interp_slack = r.interpolation.iter().map(|i| i.slack).fold(f64::INFINITY, f64::min);
            Ok(Verdict::new(
                heat_slack.min(interp_slack),
                None,
                r.pass,
                json!({ "heat": r.heat, "min_interpolation_slack": interp_slack }),
            ))
        }
        CheckSpec::Autocorrelation { lags, n_replicas } => {
            let g = default_gibbs(spec, cfg.grids.lattice)?;
            let r = autocorrelation_check(
                spec,
                &cfg.spde_config(),
                &g,
                cfg.grids.lattice.n_sites / 2,
                lags,
                *n_replicas,
                ctx.seed("autocorrelation"),
            )?;
            Ok(Verdict::new(
                r.rate - r.bound * (1.0 - r.tol),
                Some(3.0 * r.rate_se),
                r.pass,
                serde_json::to_value(&r)?,
            ))
        }
    }
}

pub(crate) fn describe(pass: bool, slack: Option<f64>) -> String {
    match slack {
        Some(s) if pass && s < 0.0 => format!("holds within CI, slack {s:.3e}"),
        Some(s) if !pass && s >= 0.0 => "VIOLATED".into(),
        Some(s) => verdict(s),
        None if pass => "holds".into(),
        None => "VIOLATED".into(),
    }
}

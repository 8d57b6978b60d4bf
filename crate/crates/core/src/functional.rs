//! Functional inequalities of the lattice dynamics: marginal and heat-kernel
//! log-Sobolev inequalities, the gradient estimate and spectral-gap shadows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{derive_seed, linear_fit, mean_and_stderr};
use crate::potentials::PotentialSpec;
use crate::schrodinger::{GroundState, SpectralData};
use crate::spde::{LatticeField, LatticeGibbs, NoisePath, SpdeConfig, Stepper};

/// One-variable test functions with analytic derivatives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant { c: f64 },
    Linear { slope: f64 },
    /// `e^{λz/2}`
    Exp { lambda: f64 },
    /// `exp(−1/(1 − s²))`, `s = (z − c)/w`
    Bump { center: f64, width: f64 },
    /// clamp of `z` to `[a, b]`
    Ramp { a: f64, b: f64 },
    Tanh { scale: f64 },
    /// `tanh(z + z²/4)`
    SaturatedQuadratic,
    Sin { freq: f64 },
    Gauss { width: f64 },
}

impl TestFunction {
    pub fn name(&self) -> String {
        match *self {
            Self::Constant { c } => format!("const({c})"),
            Self::Linear { slope } => format!("linear({slope})"),
            Self::Exp { lambda } => format!("exp({lambda})"),
            Self::Bump { center, width } => format!("bump({center},{width})"),
            Self::Ramp { a, b } => format!("ramp({a},{b})"),
            Self::Tanh { scale } => format!("tanh({scale})"),
            Self::SaturatedQuadratic => "sat_quad".into(),
            Self::Sin { freq } => format!("sin({freq})"),
            Self::Gauss { width } => format!("gauss({width})"),
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        match *self {
            Self::Constant { c } => c,
            Self::Linear { slope } => slope * z,
            Self::Exp { lambda } => (0.5 * lambda * z).exp(),
            Self::Bump { center, width } => {
                let s = (z - center) / width;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - s * s)).exp()
                }
            }
            Self::Ramp { a, b } => z.clamp(a, b),
            Self::Tanh { scale } => (scale * z).tanh(),
            Self::SaturatedQuadratic => (z + 0.25 * z * z).tanh(),
            Self::Sin { freq } => (freq * z).sin(),
            Self::Gauss { width } => (-0.5 * z * z / (width * width)).exp(),
        }
    }

    pub fn deriv(&self, z: f64) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Linear { slope } => slope,
            Self::Exp { lambda } => 0.5 * lambda * (0.5 * lambda * z).exp(),
            Self::Bump { center, width } => {
                let s = (z - center) / width;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    let q = 1.0 - s * s;
                    (-1.0 / q).exp() * (-2.0 * s / (q * q)) / width
                }
            }
            Self::Ramp { a, b } => {
                if z > a && z < b {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Tanh { scale } => scale / (scale * z).cosh().powi(2),
            Self::SaturatedQuadratic => (1.0 + 0.5 * z) / (z + 0.25 * z * z).cosh().powi(2),
            Self::Sin { freq } => freq * (freq * z).cos(),
            Self::Gauss { width } => -z / (width * width) * self.value(z),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionFamily {
    pub functions: Vec<TestFunction>,
}

impl TestFunctionFamily {
    pub fn standard() -> Self {
        Self {
            functions: vec![
                TestFunction::Exp { lambda: 1.0 },
                TestFunction::Exp { lambda: -0.5 },
                TestFunction::Bump { center: 0.0, width: 1.5 },
                TestFunction::Bump { center: 0.5, width: 1.0 },
                TestFunction::Ramp { a: -1.0, b: 1.0 },
                TestFunction::Tanh { scale: 1.0 },
                TestFunction::SaturatedQuadratic,
                TestFunction::Sin { freq: 1.0 },
                TestFunction::Gauss { width: 1.0 },
            ],
        }
    }
}

/// "holds with slack s" or "VIOLATED by v".
pub fn verdict(slack: f64) -> String {
    if slack >= 0.0 {
        format!("holds with slack {slack:.3e}")
    } else {
        format!("VIOLATED by {:.3e}", -slack)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsiRow {
    pub function: String,
    pub entropy: f64,
    pub energy: f64,
    /// `(2/K₁) energy`
    pub bound: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsiReport {
    pub k1: f64,
    pub rows: Vec<LsiRow>,
    pub min_slack: f64,
    pub pass: bool,
}

/// Marginal LSI `Ent_μ(f²) ≤ (2/K₁) ∫ |f′|² dμ` for `μ = Ω² dz`, by
/// quadrature on the ground-state grid.
pub fn lsi_marginal_check(gs: &GroundState, k1: f64, family: &TestFunctionFamily) -> Result<LsiReport> {
    if !(k1 > 0.0) {
        return Err(Error::InvalidParameter("marginal LSI needs K1 > 0".into()));
    }
    let h = gs.grid.spacing();
    let nodes = gs.grid.nodes();
    let mut rows = Vec::with_capacity(family.functions.len());
    for f in &family.functions {
        let mut norm = 0.0;
        let mut energy = 0.0;
        let vals: Vec<f64> = nodes.iter().map(|&z| f.value(z)).collect();
        for ((&z, &v), &o) in nodes.iter().zip(&vals).zip(&gs.omega) {
            let d = f.deriv(z);
            if !(v.is_finite() && d.is_finite()) {
                return Err(Error::NonFinite("test function on the z-range"));
            }
            norm += v * v * o * o * h;
            energy += d * d * o * o * h;
        }
        let entropy = if norm > 0.0 {
            vals.iter()
                .zip(&gs.omega)
                .map(|(&v, &o)| {
                    let f2 = v * v;
                    if f2 > 0.0 {
                        f2 * (f2 / norm).ln() * o * o * h
                    } else {
                        0.0
                    }
                })
                .sum()
        } else {
            0.0
        };
        let bound = 2.0 / k1 * energy;
        rows.push(LsiRow {
            function: f.name(),
            entropy,
            energy,
            bound,
            slack: bound - entropy,
        });
    }
    let min_slack = rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
    Ok(LsiReport {
        k1,
        pass: min_slack >= -1e-8,
        rows,
        min_slack,
    })
}

/// Start field, observation site and run parameters shared by the Monte
/// Carlo checks.
#[derive(Clone, Debug)]
pub struct SiteObservable<'a> {
    pub spec: &'a PotentialSpec,
    pub config: &'a SpdeConfig,
    pub start: &'a LatticeField,
    pub site: usize,
    pub f: TestFunction,
}

impl SiteObservable<'_> {
    fn step_indices(&self, t_list: &[f64]) -> Result<Vec<usize>> {
        if t_list.is_empty() {
            return Err(Error::InvalidParameter("empty time list".into()));
        }
        if self.site >= self.start.n_sites {
            return Err(Error::InvalidParameter(format!("site {} outside the lattice", self.site)));
        }
        let dt = self.config.dt;
        t_list
            .iter()
            .map(|&t| {
                let k = (t / dt).round();
                if !(t > 0.0) || (k * dt - t).abs() > 1e-9 * t {
                    return Err(Error::InvalidParameter(format!("time {t} is not a positive multiple of dt")));
                }
                Ok(k as usize)
            })
            .collect()
    }

    /// Site values at the requested steps for each start, all driven by
    /// the same noise.
    fn coupled_run(&self, starts: &[Vec<f64>], steps: &[usize], seed: u64) -> Result<Vec<Vec<f64>>> {
        let g = self.start.geometry();
        let n_max = *steps.iter().max().expect("nonempty");
        let cfg = SpdeConfig {
            t_final: n_max as f64 * self.config.dt,
            ..*self.config
        };
        let noise = NoisePath::for_run(seed, &cfg, &g);
        let mut cursor = noise.cursor();
        let mut steppers = starts
            .iter()
            .map(|_| Stepper::new(self.spec, &cfg, g))
            .collect::<Result<Vec<_>>>()?;
        let mut xs: Vec<Vec<f64>> = starts.to_vec();
        let mut out = vec![Vec::with_capacity(steps.len()); starts.len()];
        let mut inc = vec![0.0; g.n_sites];
        for k in 1..=n_max {
            cursor.next_into(&mut inc);
            for (s, x) in steppers.iter_mut().zip(xs.iter_mut()) {
                s.advance(x, &inc)?;
            }
            for &target in steps.iter() {
                if target == k {
                    for (o, x) in out.iter_mut().zip(&xs) {
                        o.push(x[self.site]);
                    }
                }
            }
        }
        // steps may repeat or be unsorted; `out` is in order of first hit
        let mut order: Vec<usize> = (0..steps.len()).collect();
        order.sort_by_key(|&j| (steps[j], j));
        Ok(out
            .into_iter()
            .map(|o| {
                let mut r = vec![0.0; steps.len()];
                for (pos, &j) in order.iter().enumerate() {
                    r[j] = o[pos];
                }
                r
            })
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub t: f64,
    pub lhs: f64,
    pub lhs_se: f64,
    pub rhs: f64,
    pub rhs_se: f64,
    /// `rhs − lhs`
    pub slack: f64,
    /// combined standard error of the slack
    pub se: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub function: String,
    pub n_replicas: usize,
    pub rows: Vec<McRow>,
    pub pass: bool,
}

fn mc_row(t: f64, lhs: f64, lhs_se: f64, rhs: f64, rhs_se: f64) -> McRow {
    let se = (lhs_se * lhs_se + rhs_se * rhs_se).sqrt();
    let slack = rhs - lhs;
    McRow {
        t,
        lhs,
        lhs_se,
        rhs,
        rhs_se,
        slack,
        se,
        pass: slack >= -3.0 * se,
    }
}

const MIN_REPLICAS: usize = 100;

/// `P_t(F² log F²) − P_tF² log P_tF² ≤ (2(1 − e^{−K₁t})/K₁) P_t‖DF‖²_H` for
/// `F(w) = f(w(x₀))`, `‖DF‖²_H = f′(w(x₀))²/h`, by Monte Carlo from a fixed
/// start.
pub fn heat_lsi_check(obs: &SiteObservable, t_list: &[f64], n_replicas: usize, seed: u64) -> Result<McReport> {
    if n_replicas < MIN_REPLICAS {
        return Err(Error::InsufficientReplicas {
            needed: MIN_REPLICAS,
            got: n_replicas,
            tol: f64::NAN,
        });
    }
    let steps = obs.step_indices(t_list)?;
    let h = obs.start.spacing;
    let k1 = obs.spec.k1;
    let runs: Vec<Vec<f64>> = (0..n_replicas)
        .into_par_iter()
        .map(|r| {
            obs.coupled_run(std::slice::from_ref(&obs.start.values), &steps, derive_seed(seed, "heat-lsi", r as u64))
                .map(|mut v| v.remove(0))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(t_list.len());
    for (j, &t) in t_list.iter().enumerate() {
        let f2: Vec<f64> = runs.iter().map(|r| obs.f.value(r[j]).powi(2)).collect();
        let f2log: Vec<f64> = f2.iter().map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 }).collect();
        let grad: Vec<f64> = runs.iter().map(|r| obs.f.deriv(r[j]).powi(2) / h).collect();
        let a = mean_and_stderr(&f2log);
        let b = mean_and_stderr(&f2);
        let g = mean_and_stderr(&grad);
        let lhs = if b.mean > 0.0 { a.mean - b.mean * b.mean.ln() } else { 0.0 };
        // delta method on (A, B) ↦ A − B log B
        let cb = if b.mean > 0.0 { b.mean.ln() + 1.0 } else { 0.0 };
        let lin: Vec<f64> = f2log.iter().zip(&f2).map(|(x, y)| x - cb * y).collect();
        let lhs_se = mean_and_stderr(&lin).std_err;
        let c = 2.0 * (1.0 - (-k1 * t).exp()) / k1;
        rows.push(mc_row(t, lhs, lhs_se, c * g.mean, c * g.std_err));
    }
    Ok(McReport {
        function: obs.f.name(),
        n_replicas,
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

/// `|∂_e P_tF(w)| ≤ e^{−K₁t/2} P_t(‖DF‖_H)` along the unit H-vector at the
/// observation site, by common-noise central differences with step `eps`.
pub fn gradient_estimate_check(obs: &SiteObservable, t_list: &[f64], n_replicas: usize, seed: u64, eps: f64) -> Result<McReport> {
    if n_replicas < MIN_REPLICAS {
        return Err(Error::InsufficientReplicas {
            needed: MIN_REPLICAS,
            got: n_replicas,
            tol: f64::NAN,
        });
    }
    if !(eps >= 1e-7) {
        return Err(Error::InvalidParameter(format!("finite-difference step {eps} below the rounding floor")));
    }
    let steps = obs.step_indices(t_list)?;
    let h = obs.start.spacing;
    let k1 = obs.spec.k1;
    // ‖e‖_H = 1 for e = δ_site/√h
    let bump = eps / h.sqrt();
    let mut plus = obs.start.values.clone();
    plus[obs.site] += bump;
    let mut minus = obs.start.values.clone();
    minus[obs.site] -= bump;
    let starts = [obs.start.values.clone(), plus, minus];
    let runs: Vec<Vec<Vec<f64>>> = (0..n_replicas)
        .into_par_iter()
        .map(|r| obs.coupled_run(&starts, &steps, derive_seed(seed, "gradient", r as u64)))
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(t_list.len());
    for (j, &t) in t_list.iter().enumerate() {
        let diff: Vec<f64> = runs
            .iter()
            .map(|r| (obs.f.value(r[1][j]) - obs.f.value(r[2][j])) / (2.0 * eps))
            .collect();
        let grad: Vec<f64> = runs.iter().map(|r| obs.f.deriv(r[0][j]).abs() / h.sqrt()).collect();
        let d = mean_and_stderr(&diff);
        let g = mean_and_stderr(&grad);
        let c = (-0.5 * k1 * t).exp();
        rows.push(mc_row(t, d.mean.abs(), d.std_err, c * g.mean, c * g.std_err));
    }
    Ok(McReport {
        function: obs.f.name(),
        n_replicas,
        pass: rows.iter().all(|r| r.pass),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralGapReport {
    pub lambda0: f64,
    pub lambda1: f64,
    pub gap: f64,
    /// `K₁/2`
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Schrödinger gap `λ₁ − λ₀ ≥ K₁/2`, the rate of the stationary one-site
/// process.
pub fn spectral_gap_check(spectral: &SpectralData, k1: f64) -> Result<SpectralGapReport> {
    if !(k1 > 0.0) {
        return Err(Error::InvalidParameter("spectral gap check needs K1 > 0".into()));
    }
    if spectral.k() < 2 {
        return Err(Error::InsufficientRange("need at least two eigenvalues".into()));
    }
    let (l0, l1) = (spectral.eigenvalues[0], spectral.eigenvalues[1]);
    let gap = l1 - l0;
    let bound = 0.5 * k1;
    Ok(SpectralGapReport {
        lambda0: l0,
        lambda1: l1,
        gap,
        bound,
        slack: gap - bound,
        pass: gap >= bound - 1e-9,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationReport {
    pub lags: Vec<f64>,
    pub autocovariance: Vec<f64>,
    pub std_err: Vec<f64>,
    /// `−d/dτ log C(τ)` by least squares over the lags
    pub rate: f64,
    pub rate_se: f64,
    pub bound: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Decay of the stationary autocovariance of `w(x₀)` under the lattice
/// dynamics, started from the lattice Gibbs measure, against rate `K₁/2`.
/// Slack is three standard errors plus the scheme tolerance `5(dt + h²)`
/// relative to the bound.
pub fn autocorrelation_check(
    spec: &PotentialSpec,
    config: &SpdeConfig,
    gibbs: &LatticeGibbs,
    site: usize,
    lags: &[f64],
    n_replicas: usize,
    seed: u64,
) -> Result<AutocorrelationReport> {
    if lags.len() < 2 {
        return Err(Error::InsufficientRange("need at least two lags".into()));
    }
    if n_replicas < MIN_REPLICAS {
        return Err(Error::InsufficientReplicas {
            needed: MIN_REPLICAS,
            got: n_replicas,
            tol: f64::NAN,
        });
    }
    let g = gibbs.geometry;
    let h = g.spacing();
    let pairs: Vec<(f64, Vec<f64>)> = (0..n_replicas)
        .into_par_iter()
        .map(|r| {
            let w0 = gibbs.sample(derive_seed(seed, "acf-start", r as u64));
            let obs = SiteObservable {
                spec,
                config,
                start: &w0,
                site,
                f: TestFunction::Linear { slope: 1.0 },
            };
            let steps = obs.step_indices(lags)?;
            let v = obs.coupled_run(std::slice::from_ref(&w0.values), &steps, derive_seed(seed, "acf-noise", r as u64))?;
            Ok((w0.values[site], v.into_iter().next().expect("one run")))
        })
        .collect::<Result<_>>()?;
    let x0: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let m0 = x0.iter().sum::<f64>() / x0.len() as f64;
    let mut cov = Vec::with_capacity(lags.len());
    let mut se = Vec::with_capacity(lags.len());
    for j in 0..lags.len() {
        let xt: Vec<f64> = pairs.iter().map(|p| p.1[j]).collect();
        let mt = xt.iter().sum::<f64>() / xt.len() as f64;
        let prods: Vec<f64> = x0.iter().zip(&xt).map(|(a, b)| (a - m0) * (b - mt)).collect();
        let e = mean_and_stderr(&prods);
        cov.push(e.mean);
        se.push(e.std_err);
    }
    if cov.iter().any(|&c| !(c > 0.0)) {
        return Err(Error::InsufficientRange("autocovariance not resolved at every lag".into()));
    }
    let logs: Vec<f64> = cov.iter().map(|c| c.ln()).collect();
    let rate = -linear_fit(lags, &logs).1;
    // endpoint-difference error as a proxy for the slope error
    let span = lags[lags.len() - 1] - lags[0];
    let rate_se = ((se[0] / cov[0]).powi(2) + (se[se.len() - 1] / cov[cov.len() - 1]).powi(2)).sqrt() / span;
    let bound = 0.5 * spec.k1;
    let tol = 5.0 * (config.dt + h * h);
    Ok(AutocorrelationReport {
        lags: lags.to_vec(),
        autocovariance: cov,
        std_err: se,
        rate,
        rate_se,
        bound,
        tol,
        pass: rate >= bound * (1.0 - tol) - 3.0 * rate_se,
    })
}

/// Stationary sampler on a default z-window for the autocorrelation check.
pub fn default_gibbs(spec: &PotentialSpec, geometry: crate::spde::LatticeGeometry) -> Result<LatticeGibbs> {
    LatticeGibbs::new(spec, geometry, LatticeGibbs::default_zgrid(&geometry)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schrodinger::{ground_state, spectrum, ZGrid};
    use crate::spde::{Boundary, LatticeGeometry, SpdeScheme};

    fn harmonic() -> GroundState {
        ground_state(&PotentialSpec::free_field(1.0), &ZGrid::new(8.0, 2000).unwrap()).unwrap()
    }

    #[test]
    fn family_derivatives_match_differences() {
        let e = 1e-6;
        let mut fam = TestFunctionFamily::standard().functions;
        assert!(fam.len() >= 8);
        fam.push(TestFunction::Linear { slope: 2.0 });
        for f in fam {
            for &z in &[-1.7, -0.3, 0.2, 0.45, 1.3] {
                let d = (f.value(z + e) - f.value(z - e)) / (2.0 * e);
                assert!((d - f.deriv(z)).abs() < 1e-6, "{} at {z}", f.name());
            }
        }
    }

    #[test]
    fn constant_has_zero_entropy() {
        let fam = TestFunctionFamily {
            functions: vec![TestFunction::Constant { c: 2.0 }],
        };
        let r = lsi_marginal_check(&harmonic(), 1.0, &fam).unwrap();
        assert!(r.rows[0].entropy.abs() < 1e-12);
        assert!(r.pass);
    }

    #[test]
    fn exponential_matches_gaussian_moments() {
        // μ = N(0, 1/2); the grid Ω carries an O(h²) error
        let fam = TestFunctionFamily {
            functions: vec![TestFunction::Exp { lambda: 1.0 }],
        };
        let r = lsi_marginal_check(&harmonic(), 1.0, &fam).unwrap();
        let v: f64 = 0.5;
        let b = (v / 2.0).exp();
        // E[z e^z] = v e^{v/2}, Ent = E[z e^z] − E[e^z] log E[e^z]
        let ent = v * b - b * (v / 2.0);
        let energy = 0.25 * b;
        assert!((r.rows[0].entropy - ent).abs() < 1e-5, "{} vs {ent}", r.rows[0].entropy);
        assert!((r.rows[0].energy - energy).abs() < 1e-5);
        assert!(r.rows[0].slack > 0.0);
    }

    #[test]
    fn entropy_nonnegative_over_family() {
        let r = lsi_marginal_check(&harmonic(), 1.0, &TestFunctionFamily::standard()).unwrap();
        assert!(r.rows.iter().all(|row| row.entropy >= -1e-12));
        assert!(r.pass, "{r:?}");
        assert!(verdict(r.min_slack).starts_with("holds with slack"));
        assert_eq!(verdict(-0.5), "VIOLATED by 5.000e-1");
    }

    #[test]
    fn oscillator_gap() {
        let s = spectrum(&PotentialSpec::free_field(1.0), &ZGrid::new(10.0, 4000).unwrap(), 2).unwrap();
        let r = spectral_gap_check(&s, 1.0).unwrap();
        assert!((r.gap - 1.0).abs() < 1e-4);
        assert!(r.pass);
    }

    fn lattice_setup() -> (LatticeGeometry, SpdeConfig) {
        let g = LatticeGeometry::new(2.0, 20, Boundary::Neumann).unwrap();
        (g, SpdeConfig::new(0.01, 1.0, SpdeScheme::SplitStepProx))
    }

    /// Mean and variance of `X_t(site)` for the free field under the scheme:
    /// `X' = a M (X + ξ)` with `M = (I − dt/2 Δ_h)⁻¹`.
    fn free_field_site_law(g: &LatticeGeometry, cfg: &SpdeConfig, m: f64, w0: &[f64], site: usize, steps: usize) -> (f64, f64) {
        let a = 1.0 / (1.0 + 0.5 * cfg.dt * m * m);
        let factor = g.implicit_factor(0.5 * cfg.dt).unwrap();
        let mut mean = w0.to_vec();
        let mut v = vec![0.0; g.n_sites];
        v[site] = 1.0;
        let mut var = 0.0;
        for _ in 0..steps {
            factor.solve_in_place(&mut mean);
            mean.iter_mut().for_each(|x| *x *= a);
            factor.solve_in_place(&mut v);
            v.iter_mut().for_each(|x| *x *= a);
            var += cfg.dt / g.spacing() * v.iter().map(|x| x * x).sum::<f64>();
        }
        (mean[site], var)
    }

    #[test]
    fn heat_lsi_matches_the_gaussian_oracle() {
        let (g, cfg) = lattice_setup();
        let spec = PotentialSpec::free_field(1.0);
        let w0 = LatticeField::from_fn(g, |x| 0.3 * x).unwrap();
        let site = 12;
        let lambda = 0.5;
        let obs = SiteObservable {
            spec: &spec,
            config: &cfg,
            start: &w0,
            site,
            f: TestFunction::Exp { lambda },
        };
        let r = heat_lsi_check(&obs, &[0.1, 1.0], 4000, 3).unwrap();
        assert!(r.pass, "{r:?}");
        for row in &r.rows {
            let steps = (row.t / cfg.dt).round() as usize;
            let (mu, s2) = free_field_site_law(&g, &cfg, 1.0, &w0.values, site, steps);
            let b = (lambda * mu + 0.5 * lambda * lambda * s2).exp();
            let lhs = 0.5 * lambda * lambda * s2 * b;
            let c = 2.0 * (1.0 - (-row.t).exp());
            let rhs = c * 0.25 * lambda * lambda * b / g.spacing();
            assert!((row.lhs - lhs).abs() < 4.0 * row.lhs_se, "{row:?} vs {lhs}");
            assert!((row.rhs - rhs).abs() < 4.0 * row.rhs_se.max(1e-12), "{row:?} vs {rhs}");
            assert!(lhs <= rhs);
        }
    }

    #[test]
    fn linear_observable_gradient_is_deterministic() {
        // for the free field and f(z) = z, the difference quotient is exact
        let (g, cfg) = lattice_setup();
        let spec = PotentialSpec::free_field(1.0);
        let w0 = LatticeField::zeros(g).unwrap();
        let site = 10;
        let obs = SiteObservable {
            spec: &spec,
            config: &cfg,
            start: &w0,
            site,
            f: TestFunction::Linear { slope: 1.0 },
        };
        let r = gradient_estimate_check(&obs, &[0.5, 1.0], 100, 1, 1e-4).unwrap();
        let factor = g.implicit_factor(0.5 * cfg.dt).unwrap();
        for row in &r.rows {
            let mut v = vec![0.0; g.n_sites];
            v[site] = 1.0 / g.spacing().sqrt();
            for _ in 0..(row.t / cfg.dt).round() as usize {
                factor.solve_in_place(&mut v);
                v.iter_mut().for_each(|x| *x /= 1.0 + 0.5 * cfg.dt);
            }
            assert!((row.lhs - v[site]).abs() < 1e-6, "{row:?}");
            assert!(row.slack > 0.0);
        }
    }

    #[test]
    fn gradient_estimate_for_kinked_potential() {
        let (g, cfg) = lattice_setup();
        let spec = PotentialSpec::abs_norm(1.0, 1.0);
        let w0 = LatticeField::from_fn(g, |x| x.sin()).unwrap();
        let obs = SiteObservable {
            spec: &spec,
            config: &cfg,
            start: &w0,
            site: 8,
            f: TestFunction::Tanh { scale: 1.0 },
        };
        let r = gradient_estimate_check(&obs, &[1.0], 2000, 5, 1e-4).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.rows[0].slack > 0.0);
        let constant = SiteObservable {
            f: TestFunction::Constant { c: 1.0 },
            ..obs
        };
        let r = gradient_estimate_check(&constant, &[1.0], 100, 5, 1e-4).unwrap();
        assert_eq!(r.rows[0].lhs, 0.0);
    }

    #[test]
    fn free_field_autocorrelation_decays_at_half_k1() {
        let g = LatticeGeometry::new(2.0, 20, Boundary::Neumann).unwrap();
        let cfg = SpdeConfig::new(0.01, 1.0, SpdeScheme::SplitStepProx);
        let spec = PotentialSpec::free_field(1.0);
        let gibbs = default_gibbs(&spec, g).unwrap();
        let r = autocorrelation_check(&spec, &cfg, &gibbs, 10, &[0.5, 1.0, 1.5, 2.0], 4000, 7).unwrap();
        assert!(r.pass, "{r:?}");
    }
}

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::weight::WeightSpec;
use crate::convex::ProxProblem;
use crate::error::{ensure_finite, Error, Result};
use crate::numerics::{stream_rng, TridiagonalFactor};
use crate::potentials::PotentialSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// reflecting ghost cells
    Neumann,
    /// zero ghost cells
    Dirichlet,
}

/// Cell-centred sites `x_i = −L + (i + ½)h`, `h = 2L/n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    pub half_width: f64,
    pub n_sites: usize,
    pub boundary: Boundary,
}

impl LatticeGeometry {
    pub fn new(half_width: f64, n_sites: usize, boundary: Boundary) -> Result<Self> {
        let g = Self {
            half_width,
            n_sites,
            boundary,
        };
        g.validate()?;
        Ok(g)
    }

    /// Geometry with spacing as close as possible to `h`.
    pub fn with_spacing(half_width: f64, h: f64, boundary: Boundary) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidParameter("lattice spacing must be positive".into()));
        }
        Self::new(half_width, (2.0 * half_width / h).round() as usize, boundary)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::EmptyGrid);
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::InvalidParameter("lattice half-width must be positive".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n_sites as f64
    }

    #[inline]
    pub fn site(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    pub fn sites(&self) -> Vec<f64> {
        (0..self.n_sites).map(|i| self.site(i)).collect()
    }

    /// `(Δ_h x)_i` with the boundary ghosts.
    pub fn laplacian(&self, x: &[f64], out: &mut [f64]) {
        let n = x.len();
        let h2 = 1.0 / (self.spacing() * self.spacing());
        for i in 0..n {
            let left = if i > 0 {
                x[i - 1]
            } else {
                self.ghost(x[0])
            };
            let right = if i + 1 < n {
                x[i + 1]
            } else {
                self.ghost(x[n - 1])
            };
            out[i] = (left - 2.0 * x[i] + right) * h2;
        }
    }

    #[inline]
    fn ghost(&self, edge: f64) -> f64 {
        match self.boundary {
            Boundary::Neumann => edge,
            Boundary::Dirichlet => 0.0,
        }
    }

    /// Factor of `I − c Δ_h`.
    pub fn implicit_factor(&self, c: f64) -> Result<TridiagonalFactor> {
        let n = self.n_sites;
        let a = c / (self.spacing() * self.spacing());
        let mut diag = vec![1.0 + 2.0 * a; n];
        if self.boundary == Boundary::Neumann {
            diag[0] -= a;
            diag[n - 1] -= a;
        }
        let off = vec![-a; n - 1];
        TridiagonalFactor::new(&off, &diag, &off)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeField {
    pub half_width: f64,
    pub n_sites: usize,
    pub spacing: f64,
    pub values: Vec<f64>,
    pub boundary: Boundary,
}

impl LatticeField {
    pub fn new(geometry: LatticeGeometry, values: Vec<f64>) -> Result<Self> {
        geometry.validate()?;
        if values.len() != geometry.n_sites {
            return Err(Error::DimensionMismatch {
                expected: geometry.n_sites,
                got: values.len(),
            });
        }
        ensure_finite(&values, "lattice field")?;
        Ok(Self {
            half_width: geometry.half_width,
            n_sites: geometry.n_sites,
            spacing: geometry.spacing(),
            values,
            boundary: geometry.boundary,
        })
    }

    pub fn from_fn(geometry: LatticeGeometry, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(geometry, geometry.sites().into_iter().map(f).collect())
    }

    pub fn zeros(geometry: LatticeGeometry) -> Result<Self> {
        Self::new(geometry, vec![0.0; geometry.n_sites])
    }

    pub fn geometry(&self) -> LatticeGeometry {
        LatticeGeometry {
            half_width: self.half_width,
            n_sites: self.n_sites,
            boundary: self.boundary,
        }
    }

    fn same_lattice(&self, other: &Self) -> Result<()> {
        if self.n_sites != other.n_sites || self.half_width != other.half_width || self.boundary != other.boundary {
            return Err(Error::DimensionMismatch {
                expected: self.n_sites,
                got: other.n_sites,
            });
        }
        Ok(())
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.same_lattice(other)?;
        Ok(Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
            ..self.clone()
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// weighted by `ρ_{−2r}`
    E,
    H,
}

/// `(Σ |w_i|² ρ(x_i) h)^{1/2}` with `ρ = ρ_{−2r}` for E and `ρ = 1` for H.
pub fn weighted_norm(w: &LatticeField, weight: &WeightSpec, kind: NormKind) -> f64 {
    let g = w.geometry();
    let s: f64 = w
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let r = match kind {
                NormKind::E => weight.e_weight(g.site(i)),
                NormKind::H => 1.0,
            };
            v * v * r
        })
        .sum();
    (s * w.spacing).sqrt()
}

/// Lattice white noise: per step, independent `N(0, dt/h)` increments at
/// every site, drawn from one ChaCha stream keyed by `seed`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisePath {
    pub seed: u64,
    pub dt: f64,
    pub spacing: f64,
    pub n_sites: usize,
    pub n_steps: usize,
}

impl NoisePath {
    pub fn new(seed: u64, dt: f64, geometry: &LatticeGeometry, n_steps: usize) -> Self {
        Self {
            seed,
            dt,
            spacing: geometry.spacing(),
            n_sites: geometry.n_sites,
            n_steps,
        }
    }

    /// Noise long enough for `config` on `geometry`.
    pub fn for_run(seed: u64, config: &SpdeConfig, geometry: &LatticeGeometry) -> Self {
        Self::new(seed, config.dt, geometry, config.n_steps())
    }

    pub fn std_dev(&self) -> f64 {
        (self.dt / self.spacing).sqrt()
    }

    pub fn cursor(&self) -> NoiseCursor {
        NoiseCursor {
            rng: stream_rng(self.seed, "spde-noise", 0),
            sd: self.std_dev(),
            remaining: self.n_steps,
        }
    }

    pub(crate) fn check_run(&self, config: &SpdeConfig, field: &LatticeField) -> Result<()> {
        if self.n_sites != field.n_sites {
            return Err(Error::NoiseMismatch(format!("{} noise sites for {} lattice sites", self.n_sites, field.n_sites)));
        }
        if (self.spacing - field.spacing).abs() > 1e-12 * field.spacing {
            return Err(Error::NoiseMismatch(format!("noise spacing {} vs lattice {}", self.spacing, field.spacing)));
        }
        if self.dt != config.dt {
            return Err(Error::NoiseMismatch(format!("noise dt {} vs run dt {}", self.dt, config.dt)));
        }
        if self.n_steps < config.n_steps() {
            return Err(Error::NoiseMismatch(format!("{} noise steps for a {}-step run", self.n_steps, config.n_steps())));
        }
        Ok(())
    }
}

pub struct NoiseCursor {
    rng: ChaCha8Rng,
    sd: f64,
    remaining: usize,
}

impl NoiseCursor {
    /// Fills the next step's increments; `false` once the path is exhausted.
    pub fn next_into(&mut self, out: &mut [f64]) -> bool {
        if self.remaining == 0 {
            return false;
        }
        self.remaining -= 1;
        for v in out.iter_mut() {
            let z: f64 = self.rng.sample(StandardNormal);
            *v = self.sd * z;
        }
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SpdeScheme {
    /// Euler–Maruyama with the minimal-section drift
    Explicit,
    /// Euler–Maruyama with the Yosida drift `K₁x + (∂₀V)_α`
    Yosida { alpha: f64 },
    /// implicit Laplacian followed by the proximal map of `(dt/2)U`
    SplitStepProx,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpdeConfig {
    pub dt: f64,
    pub t_final: f64,
    pub drift_mode: SpdeScheme,
    pub weight: WeightSpec,
    pub boundary: Boundary,
    /// steps between stored snapshots
    #[serde(default = "default_output_every")]
    pub output_every: usize,
}

fn default_output_every() -> usize {
    1
}

impl SpdeConfig {
    pub fn new(dt: f64, t_final: f64, drift_mode: SpdeScheme) -> Self {
        Self {
            dt,
            t_final,
            drift_mode,
            weight: WeightSpec { r: 0.0, kappa: 1.0 },
            boundary: Boundary::Neumann,
            output_every: 1,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn validate(&self, h: f64) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter("t_final must be >= 0".into()));
        }
        if self.output_every == 0 {
            return Err(Error::InvalidParameter("output_every must be >= 1".into()));
        }
        self.weight.validate()?;
        match self.drift_mode {
            SpdeScheme::SplitStepProx => {}
            SpdeScheme::Yosida { alpha } if !(alpha > 0.0) => {
                return Err(Error::InvalidParameter("Yosida alpha must be positive".into()))
            }
            _ => {
                if self.dt > 0.5 * h * h * (1.0 + 1e-12) {
                    return Err(Error::InvalidParameter(format!(
                        "explicit scheme needs dt <= h^2/2 = {}, got {}",
                        0.5 * h * h,
                        self.dt
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One-step integrator for `dX = ½(Δ_h X − ∇̃U(X)) dt + dB` with its
/// precomputed factorization and prox.
pub struct Stepper<'a> {
    spec: &'a PotentialSpec,
    geometry: LatticeGeometry,
    dt: f64,
    scheme: SpdeScheme,
    factor: Option<TridiagonalFactor>,
    prox: Option<ProxProblem<'a>>,
    shrink: f64,
    scratch: Vec<f64>,
}

impl<'a> Stepper<'a> {
    pub fn new(spec: &'a PotentialSpec, config: &SpdeConfig, geometry: LatticeGeometry) -> Result<Self> {
        if spec.dim != 1 {
            return Err(Error::Unsupported("lattice dynamics need a scalar field".into()));
        }
        geometry.validate()?;
        if geometry.boundary != config.boundary {
            return Err(Error::InvalidParameter("field and config boundaries differ".into()));
        }
        config.validate(geometry.spacing())?;
        let dt = config.dt;
        let shrink = 1.0 + 0.5 * dt * spec.k1;
        let (factor, prox) = match config.drift_mode {
            SpdeScheme::SplitStepProx => {
                if !(shrink > 0.0) {
                    return Err(Error::InvalidParameter("dt K1 / 2 must exceed -1".into()));
                }
                (
                    Some(geometry.implicit_factor(0.5 * dt)?),
                    Some(ProxProblem::new(spec, 0.5 * dt / shrink)?),
                )
            }
            SpdeScheme::Yosida { alpha } => (None, Some(ProxProblem::new(spec, alpha)?)),
            SpdeScheme::Explicit => (None, None),
        };
        Ok(Self {
            spec,
            geometry,
            dt,
            scheme: config.drift_mode,
            factor,
            prox,
            shrink,
            scratch: vec![0.0; geometry.n_sites],
        })
    }

    /// Advances `x` in place by one step driven by `noise`.
    pub fn advance(&mut self, x: &mut [f64], noise: &[f64]) -> Result<()> {
        let dt = self.dt;
        match self.scheme {
            SpdeScheme::SplitStepProx => {
                for (xi, ni) in x.iter_mut().zip(noise) {
                    *xi += ni;
                }
                self.factor.as_ref().expect("factor").solve_in_place(x);
                let prox = self.prox.as_ref().expect("prox");
                for xi in x.iter_mut() {
                    *xi = prox.prox1(*xi / self.shrink)?;
                }
            }
            SpdeScheme::Yosida { .. } => {
                self.geometry.laplacian(x, &mut self.scratch);
                let prox = self.prox.as_ref().expect("prox");
                let k1 = self.spec.k1;
                for ((xi, lap), ni) in x.iter_mut().zip(&self.scratch).zip(noise) {
                    let drift = lap - k1 * *xi - prox.yosida_grad1(*xi)?;
                    *xi += 0.5 * dt * drift + ni;
                }
            }
            SpdeScheme::Explicit => {
                self.geometry.laplacian(x, &mut self.scratch);
                for ((xi, lap), ni) in x.iter_mut().zip(&self.scratch).zip(noise) {
                    *xi += 0.5 * dt * (lap - self.spec.grad_u1(*xi)) + ni;
                }
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("lattice state"));
        }
        Ok(())
    }
}

/// One step from `x` with the given increments.
pub fn step(x: &LatticeField, spec: &PotentialSpec, config: &SpdeConfig, noise: &[f64]) -> Result<LatticeField> {
    if noise.len() != x.n_sites {
        return Err(Error::NoiseMismatch(format!("{} increments for {} sites", noise.len(), x.n_sites)));
    }
    let mut stepper = Stepper::new(spec, config, x.geometry())?;
    let mut out = x.clone();
    stepper.advance(&mut out.values, noise)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<LatticeField>,
}

/// Runs the scheme to `t_final`, storing every `output_every`-th state and
/// the final one.
pub fn evolve(w0: &LatticeField, spec: &PotentialSpec, config: &SpdeConfig, noise: &NoisePath) -> Result<Trajectory> {
    noise.check_run(config, w0)?;
    let mut stepper = Stepper::new(spec, config, w0.geometry())?;
    let n = config.n_steps();
    let mut x = w0.values.clone();
    let mut inc = vec![0.0; w0.n_sites];
    let mut cursor = noise.cursor();
    let mut times = vec![0.0];
    let mut snapshots = vec![w0.clone()];
    for k in 1..=n {
        cursor.next_into(&mut inc);
        stepper.advance(&mut x, &inc)?;
        if k % config.output_every == 0 || k == n {
            times.push(k as f64 * config.dt);
            snapshots.push(LatticeField {
                values: x.clone(),
                ..w0.clone()
            });
        }
    }
    Ok(Trajectory { times, snapshots })
}

/// Final state only.
pub fn evolve_final(w0: &LatticeField, spec: &PotentialSpec, config: &SpdeConfig, noise: &NoisePath) -> Result<LatticeField> {
    noise.check_run(config, w0)?;
    let mut stepper = Stepper::new(spec, config, w0.geometry())?;
    let mut x = w0.values.clone();
    let mut inc = vec![0.0; w0.n_sites];
    let mut cursor = noise.cursor();
    for _ in 0..config.n_steps() {
        cursor.next_into(&mut inc);
        stepper.advance(&mut x, &inc)?;
    }
    Ok(LatticeField { values: x, ..w0.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::mean_and_stderr;

    fn geom(boundary: Boundary) -> LatticeGeometry {
        LatticeGeometry::new(2.0, 40, boundary).unwrap()
    }

    #[test]
    fn e_norm_of_constant_is_weight_integral() {
        let g = LatticeGeometry::new(10.0, 2000, Boundary::Neumann).unwrap();
        let w = WeightSpec::with_rate(0.3).unwrap();
        let one = LatticeField::from_fn(g, |_| 1.0).unwrap();
        let e = weighted_norm(&one, &w, NormKind::E);
        // midpoint rule for ∫ρ_{−2r}
        let exact: f64 = g.sites().iter().map(|&x| w.e_weight(x) * g.spacing()).sum();
        assert!((e * e - exact).abs() < 1e-12);
        let zero_rate = WeightSpec::with_rate(0.0).unwrap();
        let f = LatticeField::from_fn(g, |x| x.sin()).unwrap();
        assert_eq!(weighted_norm(&f, &zero_rate, NormKind::E), weighted_norm(&f, &zero_rate, NormKind::H));
    }

    #[test]
    fn neumann_laplacian_annihilates_constants() {
        let g = geom(Boundary::Neumann);
        let mut out = vec![1.0; g.n_sites];
        g.laplacian(&vec![3.0; g.n_sites], &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn implicit_step_scales_eigenmodes() {
        // cosine modes diagonalize the Neumann Laplacian
        let g = geom(Boundary::Neumann);
        let h = g.spacing();
        let n = g.n_sites;
        let k = 3.0;
        let mode: Vec<f64> = (0..n).map(|i| (std::f64::consts::PI * k * (i as f64 + 0.5) / n as f64).cos()).collect();
        let nu = 4.0 / (h * h) * (std::f64::consts::PI * k / (2.0 * n as f64)).sin().powi(2);
        let spec = PotentialSpec::free_field(1.5);
        let cfg = SpdeConfig::new(0.01, 0.01, SpdeScheme::SplitStepProx);
        let x = LatticeField::new(g, mode.clone()).unwrap();
        let y = step(&x, &spec, &cfg, &vec![0.0; n]).unwrap();
        let factor = 1.0 / ((1.0 + 0.5 * cfg.dt * nu) * (1.0 + 0.5 * cfg.dt * 2.25));
        for (a, b) in y.values.iter().zip(&mode) {
            assert!((a - factor * b).abs() < 1e-12);
        }
    }

    #[test]
    fn explicit_stability_guard() {
        let g = geom(Boundary::Dirichlet);
        let spec = PotentialSpec::free_field(1.0);
        let h = g.spacing();
        let mut cfg = SpdeConfig::new(h * h, 1.0, SpdeScheme::Explicit);
        cfg.boundary = Boundary::Dirichlet;
        assert!(Stepper::new(&spec, &cfg, g).is_err());
        cfg.dt = 0.4 * h * h;
        assert!(Stepper::new(&spec, &cfg, g).is_ok());
        cfg.drift_mode = SpdeScheme::Yosida { alpha: 0.1 };
        assert!(Stepper::new(&spec, &cfg, g).is_ok());
    }

    #[test]
    fn noise_variance_is_dt_over_h() {
        let g = LatticeGeometry::new(5.0, 100, Boundary::Neumann).unwrap();
        let noise = NoisePath::new(7, 0.01, &g, 200);
        let mut c = noise.cursor();
        let mut buf = vec![0.0; g.n_sites];
        let mut sq = Vec::new();
        while c.next_into(&mut buf) {
            sq.extend(buf.iter().map(|v| v * v));
        }
        assert_eq!(sq.len(), 20000);
        let est = mean_and_stderr(&sq);
        let exact = 0.01 / g.spacing();
        assert!((est.mean - exact).abs() < 3.0 * est.std_err);
    }

    #[test]
    fn free_field_variance_follows_the_scheme_recursion() {
        // for V = 0 each cosine mode obeys Y' = a(Y + ξ) exactly
        let g = LatticeGeometry::new(2.0, 20, Boundary::Neumann).unwrap();
        let n = g.n_sites;
        let h = g.spacing();
        let spec = PotentialSpec::free_field(1.0);
        let cfg = SpdeConfig::new(0.01, 1.0, SpdeScheme::SplitStepProx);
        let steps = cfg.n_steps();
        let mut site_var = 0.0;
        for k in 0..n {
            let nu = 4.0 / (h * h) * (std::f64::consts::PI * k as f64 / (2.0 * n as f64)).sin().powi(2);
            let a = 1.0 / ((1.0 + 0.5 * cfg.dt * nu) * (1.0 + 0.5 * cfg.dt));
            let mut v = 0.0;
            for _ in 0..steps {
                v = a * a * (v + cfg.dt / h);
            }
            let phi = (std::f64::consts::PI * k as f64 * 0.5 / n as f64).cos();
            let norm = if k == 0 { 1.0 / n as f64 } else { 2.0 / n as f64 };
            site_var += norm * phi * phi * v;
        }
        let zero = LatticeField::zeros(g).unwrap();
        let finals: Vec<f64> = (0..4000u64)
            .map(|s| evolve_final(&zero, &spec, &cfg, &NoisePath::for_run(s, &cfg, &g)).unwrap().values[0])
            .collect();
        let sq: Vec<f64> = finals.iter().map(|v| v * v).collect();
        let est = mean_and_stderr(&sq);
        assert!((est.mean - site_var).abs() < 3.0 * est.std_err, "{est:?} vs {site_var}");
    }

    #[test]
    fn evolve_is_deterministic_and_checks_noise() {
        let g = geom(Boundary::Neumann);
        let spec = PotentialSpec::abs_norm(1.0, 1.0);
        let mut cfg = SpdeConfig::new(0.01, 0.5, SpdeScheme::SplitStepProx);
        cfg.output_every = 10;
        let w0 = LatticeField::from_fn(g, |x| x.cos()).unwrap();
        let noise = NoisePath::for_run(3, &cfg, &g);
        let a = evolve(&w0, &spec, &cfg, &noise).unwrap();
        assert_eq!(a, evolve(&w0, &spec, &cfg, &noise).unwrap());
        assert_eq!(a.times.len(), 6);
        let short = NoisePath::new(3, 0.01, &g, 10);
        assert!(matches!(evolve(&w0, &spec, &cfg, &short), Err(Error::NoiseMismatch(_))));
        let zero_time = SpdeConfig { t_final: 0.0, ..cfg };
        let t = evolve(&w0, &spec, &zero_time, &noise).unwrap();
        assert_eq!(t.snapshots, vec![w0]);
    }
}

//! Finite-difference ground states and low spectrum of `H = −½Δ + U` on a
//! truncated line with Dirichlet walls.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convex::ProxProblem;
use crate::error::{Error, Result};
use crate::numerics::{golden_section_min, linear_fit};
use crate::potentials::{norm, PotentialSpec};
use crate::tridiag::SymTridiagonal;

/// Largest |Ω| tolerated on the outermost grid points.
pub const BOUNDARY_MASS_TOL: f64 = 1e-6;

/// Interior nodes `z_i = −L + (i + 1)·2L/(n + 1)`, `i = 0..n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZGrid {
    pub half_width: f64,
    pub n: usize,
}

impl ZGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        let g = Self { half_width, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidParameter(format!("z-grid needs n >= 3, got {}", self.n)));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::InvalidParameter("z-grid half width must be positive".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n + 1) as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        -self.half_width + (i + 1) as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Linear interpolation of nodal values, with zero at the walls.
    pub fn interpolate(&self, values: &[f64], z: f64) -> f64 {
        let t = (z + self.half_width) / self.spacing();
        if !(t > 0.0 && t < (self.n + 1) as f64) {
            return 0.0;
        }
        let k = t.floor() as usize;
        let frac = t - k as f64;
        let at = |j: usize| if j == 0 || j > self.n { 0.0 } else { values[j - 1] };
        (1.0 - frac) * at(k) + frac * at(k + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub lambda0: f64,
    /// Ω at the grid nodes, normalized so that `Σ Ω² h = 1`
    pub omega: Vec<f64>,
    pub grid: ZGrid,
    /// `‖HΩ − λ₀Ω‖ / ‖Ω‖`
    pub residual: f64,
}

impl GroundState {
    /// L² distance to another ground state on the same grid.
    pub fn l2_distance(&self, other: &GroundState) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::InvalidParameter("ground states live on different grids".into()));
        }
        let h = self.grid.spacing();
        Ok((self.omega.iter().zip(&other.omega).map(|(a, b)| (a - b).powi(2)).sum::<f64>() * h).sqrt())
    }

    pub fn omega_at(&self, z: f64) -> f64 {
        self.grid.interpolate(&self.omega, z)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    /// `φ_j` at the nodes, orthonormal for `⟨u, v⟩ = Σ u v h`
    pub eigenvectors: Vec<Vec<f64>>,
    pub grid: ZGrid,
}

impl SpectralData {
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn orthonormality_defect(&self) -> f64 {
        let h = self.grid.spacing();
        let mut worst: f64 = 0.0;
        for i in 0..self.k() {
            for j in 0..=i {
                let ip: f64 = self.eigenvectors[i].iter().zip(&self.eigenvectors[j]).map(|(a, b)| a * b).sum::<f64>() * h;
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - target).abs());
            }
        }
        worst
    }
}

/// Tridiagonal finite-difference matrix of `−½Δ + u` on the grid.
pub fn assemble_fn(grid: &ZGrid, u: impl Fn(f64) -> f64) -> Result<SymTridiagonal> {
    grid.validate()?;
    let h = grid.spacing();
    let diag = (0..grid.n).map(|i| 1.0 / (h * h) + u(grid.node(i))).collect();
    SymTridiagonal::new(diag, vec![-0.5 / (h * h); grid.n - 1])
}

pub fn assemble(spec: &PotentialSpec, grid: &ZGrid) -> Result<SymTridiagonal> {
    require_line(spec)?;
    assemble_fn(grid, |z| spec.u1(z))
}

fn require_line(spec: &PotentialSpec) -> Result<()> {
    if spec.dim != 1 {
        return Err(Error::Unsupported("Schrödinger solver works on d = 1".into()));
    }
    Ok(())
}

fn residual_norm(m: &SymTridiagonal, lambda: f64, v: &[f64]) -> f64 {
    let r: f64 = m.shifted_residual(lambda, v).iter().map(|x| x * x).sum();
    let nv: f64 = v.iter().map(|x| x * x).sum();
    (r / nv).sqrt()
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    for &x in v.iter() {
        if x.abs() > best.abs() {
            best = x;
        }
    }
    if best < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Ground state of `−½Δ + u` with the positivity, normalization, residual and
/// wall checks applied.
pub fn ground_state_fn(grid: &ZGrid, u: impl Fn(f64) -> f64) -> Result<GroundState> {
    let m = assemble_fn(grid, &u)?;
    let (vals, mut vecs) = m.smallest_eigenpairs(1)?;
    let lambda0 = vals[0];
    let mut omega = vecs.pop().expect("one eigenvector");
    fix_sign(&mut omega);
    let residual = residual_norm(&m, lambda0, &omega);
    // 1e−10 unless the rounding floor of forming HΩ is already above it
    let tol = 1e-10f64.max(4.0 * f64::EPSILON * m.norm_bound());
    if residual > tol {
        return Err(Error::Eigensolver(format!("ground-state residual {residual:e}")));
    }
    if omega.iter().any(|&x| x <= 0.0) {
        return Err(Error::Eigensolver("ground state is not strictly positive".into()));
    }
    let h = grid.spacing();
    let scale = 1.0 / h.sqrt();
    omega.iter_mut().for_each(|x| *x *= scale);
    let edge = omega[0].max(omega[grid.n - 1]);
    if edge > BOUNDARY_MASS_TOL {
        return Err(Error::Eigensolver(format!(
            "ground state reaches the wall (|Ω| = {edge:e}); widen the grid"
        )));
    }
    Ok(GroundState {
        lambda0,
        omega,
        grid: *grid,
        residual,
    })
}

pub fn ground_state(spec: &PotentialSpec, grid: &ZGrid) -> Result<GroundState> {
    require_line(spec)?;
    ground_state_fn(grid, |z| spec.u1(z))
}

pub fn spectrum_fn(grid: &ZGrid, k: usize, u: impl Fn(f64) -> f64) -> Result<SpectralData> {
    if k == 0 || k > grid.n {
        return Err(Error::InvalidParameter(format!("k = {k} modes on a grid of n = {}", grid.n)));
    }
    let m = assemble_fn(grid, &u)?;
    let (eigenvalues, mut eigenvectors) = m.smallest_eigenpairs(k)?;
    let scale = 1.0 / grid.spacing().sqrt();
    for v in eigenvectors.iter_mut() {
        fix_sign(v);
        v.iter_mut().for_each(|x| *x *= scale);
    }
    Ok(SpectralData {
        eigenvalues,
        eigenvectors,
        grid: *grid,
    })
}

pub fn spectrum(spec: &PotentialSpec, grid: &ZGrid, k: usize) -> Result<SpectralData> {
    require_line(spec)?;
    spectrum_fn(grid, k, |z| spec.u1(z))
}

/// `inf { U(y) : |y − z| ≤ radius }`.
pub fn local_inf_u(spec: &PotentialSpec, z: &[f64], radius: f64) -> Result<f64> {
    if !(radius >= 0.0) {
        return Err(Error::InvalidParameter("radius must be non-negative".into()));
    }
    spec.check_point(z)?;
    if radius == 0.0 {
        return spec.eval_u(z);
    }
    let (lo, hi) = if spec.dim == 1 {
        (z[0] - radius, z[0] + radius)
    } else if spec.is_radial() {
        // a radial U only sees |y| ∈ [|z| − ρ, |z| + ρ]
        let r = norm(z);
        ((r - radius).max(0.0), r + radius)
    } else {
        return Err(Error::Unsupported("local infimum needs d = 1 or a radial U".into()));
    };
    Ok(interval_min(lo, hi, |y| spec.u1(y)))
}

/// Grid scan of `[lo, hi]` followed by golden-section refinement around the
/// best node.
fn interval_min(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    const SCAN: usize = 256;
    let step = (hi - lo) / SCAN as f64;
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for i in 0..=SCAN {
        let v = f(lo + step * i as f64);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    let y = golden_section_min(a, b, 1e-12 * (1.0 + hi.abs().max(lo.abs())), &f);
    best.min(f(y))
}

/// `sup { U(y) : |y| ≤ R }`.
fn ball_sup(spec: &PotentialSpec, radius: f64) -> f64 {
    if spec.dim == 1 {
        -interval_min(-radius, radius, |y| -spec.u1(y))
    } else {
        -interval_min(0.0, radius, |y| -spec.u1(y))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// `log Ω ≤ log D₁ − D₂ |z| U_{|z|/2}(z)^{1/2}`
    pub log_d1: f64,
    pub d2: f64,
    /// `log Ω ≥ log D₃ − D₄ |z| U^{(∞)}(z)^{1/2}`
    pub log_d3: f64,
    pub d4: f64,
    pub n_points: usize,
    pub window: (f64, f64),
    pub feasible: bool,
}

/// Fits the two-sided exponential decay envelope of Ω on `2 ≤ |z| ≤ ¾L`.
///
/// The rates come from a least-squares fit of `−log Ω` against the envelope
/// exponent; the prefactors are then the tightest constants making each bound
/// hold at every node of the window.
pub fn decay_check(gs: &GroundState, spec: &PotentialSpec) -> Result<DecayReport> {
    require_line(spec)?;
    let z_max = 0.75 * gs.grid.half_width;
    let window = (2.0, z_max);
    let mut g_up = Vec::new();
    let mut g_low = Vec::new();
    let mut log_om = Vec::new();
    for (i, &om) in gs.omega.iter().enumerate() {
        let z = gs.grid.node(i);
        let a = z.abs();
        if a < window.0 || a > window.1 || om <= 0.0 {
            continue;
        }
        let inf_u = local_inf_u(spec, &[z], 0.5 * a)?.max(0.0);
        let sup_u = ball_sup(spec, 3.0 * a).max(0.0);
        g_up.push(a * inf_u.sqrt());
        g_low.push(a * sup_u.sqrt());
        log_om.push(om.ln());
    }
    if log_om.len() < 2 {
        return Err(Error::InsufficientRange(format!(
            "no usable nodes with {} <= |z| <= {z_max}",
            window.0
        )));
    }
    let neg: Vec<f64> = log_om.iter().map(|v| -v).collect();
    let (_, d2) = linear_fit(&g_up, &neg);
    let (_, d4) = linear_fit(&g_low, &neg);
    if !(d2 > 0.0 && d4 > 0.0) {
        return Err(Error::Infeasible(format!("decay rates D2 = {d2}, D4 = {d4}")));
    }
    let log_d1 = log_om.iter().zip(&g_up).map(|(l, g)| l + d2 * g).fold(f64::NEG_INFINITY, f64::max);
    let log_d3 = log_om.iter().zip(&g_low).map(|(l, g)| l + d4 * g).fold(f64::INFINITY, f64::min);
    Ok(DecayReport {
        log_d1,
        d2,
        log_d3,
        d4,
        n_points: log_om.len(),
        window,
        feasible: log_d1.is_finite() && log_d3.is_finite(),
    })
}

/// Ground states of `U_N = (K₁/2)z² + V_{1/N}` for each `N`.
pub fn moreau_ground_sequence(spec: &PotentialSpec, grid: &ZGrid, n_list: &[u32]) -> Result<Vec<GroundState>> {
    require_line(spec)?;
    if !(spec.k1 > 0.0) {
        return Err(Error::InvalidParameter("the Moreau sequence needs K1 > 0".into()));
    }
    if n_list.contains(&0) {
        return Err(Error::InvalidParameter("N must be positive".into()));
    }
    n_list
        .par_iter()
        .map(|&n| {
            let prox = ProxProblem::new(spec, 1.0 / n as f64)?;
            let nodes = grid.nodes();
            let env = nodes.iter().map(|&z| prox.moreau_env1(z)).collect::<Result<Vec<_>>>()?;
            let k1 = spec.k1;
            let h = grid.spacing();
            ground_state_fn(grid, |z| {
                let i = ((z + grid.half_width) / h).round() as usize - 1;
                0.5 * k1 * z * z + env[i]
            })
        })
        .collect()
}

/// Richardson extrapolation from values at spacings `h` and `h/ratio`.
pub fn richardson(coarse: f64, fine: f64, ratio: f64, order: i32) -> f64 {
    let f = ratio.powi(order);
    fine + (fine - coarse) / (f - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{PotentialKind, PotentialSpec};

    fn harmonic() -> PotentialSpec {
        PotentialSpec::free_field(1.0)
    }

    #[test]
    fn assemble_entries() {
        let g = ZGrid::new(2.0, 3).unwrap();
        assert_eq!(g.spacing(), 1.0);
        let zero = PotentialSpec {
            kind: PotentialKind::Polynomial { coeffs: vec![0.0] },
            k1: 0.0,
            ..harmonic()
        };
        let m = assemble(&zero, &g).unwrap();
        assert_eq!(m.diag, vec![1.0, 1.0, 1.0]);
        assert_eq!(m.off, vec![-0.5, -0.5]);
        let m = assemble(&harmonic(), &g).unwrap();
        assert_eq!(m.diag, vec![1.5, 1.0, 1.5]);
    }

    #[test]
    fn harmonic_ground_state_is_gaussian() {
        let g = ZGrid::new(12.0, 2048).unwrap();
        let gs = ground_state(&harmonic(), &g).unwrap();
        let h = g.spacing();
        assert!((gs.lambda0 - 0.5).abs() < 5e-6);
        assert!(gs.residual < 1e-10);
        let norm: f64 = gs.omega.iter().map(|x| x * x).sum::<f64>() * h;
        assert!((norm - 1.0).abs() < 1e-10);
        for (i, &om) in gs.omega.iter().enumerate().step_by(97) {
            let z = g.node(i);
            let exact = std::f64::consts::PI.powf(-0.25) * (-z * z / 2.0).exp();
            assert!((om - exact).abs() < 1e-4, "z={z}");
        }
    }

    #[test]
    fn ladder_spectrum_on_fine_grid() {
        let g = ZGrid::new(12.0, 16384).unwrap();
        let s = spectrum(&harmonic(), &g, 4).unwrap();
        for j in 0..4 {
            assert!((s.eigenvalues[j] - (j as f64 + 0.5)).abs() < 1e-5);
        }
        assert!(s.orthonormality_defect() < 1e-9);
        let gs = ground_state(&harmonic(), &g).unwrap();
        assert!((gs.lambda0 - s.eigenvalues[0]).abs() < 1e-12);
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let g = ZGrid::new(2.0, 200).unwrap();
        assert!(matches!(ground_state(&harmonic(), &g), Err(Error::Eigensolver(_))));
        assert!(ZGrid::new(1.0, 2).is_err());
    }

    #[test]
    fn second_order_convergence() {
        let s = PotentialSpec::cosh(1.0, 1.0);
        let l: Vec<f64> = [512, 1024, 2048]
            .iter()
            .map(|&n| ground_state(&s, &ZGrid::new(8.0, 2 * n - 1).unwrap()).unwrap().lambda0)
            .collect();
        let ratio = (l[0] - l[1]) / (l[1] - l[2]);
        assert!((ratio - 4.0).abs() < 0.05, "{ratio}");
        let r1 = richardson(l[0], l[1], 2.0, 2);
        let r2 = richardson(l[1], l[2], 2.0, 2);
        assert!((r1 - r2).abs() < 1e-8);
    }

    #[test]
    fn local_infimum_examples() {
        let f = harmonic();
        assert!((local_inf_u(&f, &[4.0], 2.0).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(local_inf_u(&f, &[1.3], 0.0).unwrap(), f.u1(1.3));
        let c = PotentialSpec::cosh(1.0, 1.0);
        let v = local_inf_u(&c, &[3.0], 1.5).unwrap();
        assert!((v - c.u1(1.5)).abs() < 1e-12);
        // minimum strictly inside the ball
        assert!((local_inf_u(&f, &[0.5], 2.0).unwrap()).abs() < 1e-20);
    }

    #[test]
    fn decay_envelopes() {
        let g = ZGrid::new(12.0, 4096).unwrap();
        let r = decay_check(&ground_state(&harmonic(), &g).unwrap(), &harmonic()).unwrap();
        assert!(r.feasible && r.d2 > 0.0);
        // −log Ω ≈ z²/2 against |z|·|z|/(2√2)
        assert!((r.d2 - 2f64.sqrt()).abs() < 0.05, "{}", r.d2);

        let c = PotentialSpec::cosh(1.0, 1.0);
        let g = ZGrid::new(8.0, 4096).unwrap();
        let r = decay_check(&ground_state(&c, &g).unwrap(), &c).unwrap();
        assert!(r.feasible);

        let g = ZGrid::new(1.0, 64).unwrap();
        let gs = ground_state_fn(&g, |z| 0.5 * z * z).unwrap_or_else(|_| GroundState {
            lambda0: 0.5,
            omega: vec![1.0; 64],
            grid: g,
            residual: 0.0,
        });
        assert!(matches!(decay_check(&gs, &harmonic()), Err(Error::InsufficientRange(_))));
    }

    #[test]
    fn moreau_sequence_is_monotone() {
        let s = PotentialSpec::abs_norm(1.0, 1.0);
        let g = ZGrid::new(12.0, 2048).unwrap();
        let seq = moreau_ground_sequence(&s, &g, &[1, 4, 16, 64]).unwrap();
        let exact = ground_state(&s, &g).unwrap();
        for w in seq.windows(2) {
            assert!(w[0].lambda0 <= w[1].lambda0);
            assert!(w[1].l2_distance(&exact).unwrap() <= w[0].l2_distance(&exact).unwrap());
        }
        assert!(seq.last().unwrap().lambda0 <= exact.lambda0);
        assert!(moreau_ground_sequence(&PotentialSpec::abs_norm(0.0, 1.0), &g, &[1]).is_err());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linear_fit;
use crate::potentials::{PotentialKind, PotentialSpec};
use crate::schrodinger::GroundState;

/// Step of the log-domain tail mesh.
const MESH: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub t_values: Vec<f64>,
    /// `(4/a) log log T`
    pub thresholds: Vec<f64>,
    /// `log A_T`, `A_T = ∫_{|z| > threshold} Ω²`
    pub log_a: Vec<f64>,
    pub decreasing: bool,
    /// fitted `log A_T ≤ log M₁ − M₂ log T · log log T`
    pub log_m1: f64,
    pub m2: f64,
    /// `Σ_{T ≤ T_max} A_T − Σ_{T ≤ T_max/10} A_T` over integer `T ≥ 3`
    pub cauchy_gap: f64,
    pub partial_sum: f64,
    pub pass: bool,
}

/// `log Ω` on `[0, ∞)` along one side of the line, continued past the grid
/// by backward Riccati integration of `y = (log Ω)′`, `y′ = 2(U − λ₀) − y²`.
struct LogTail {
    /// `log Ω²` on the mesh `z_k = k·MESH`
    log_omega_sq: Vec<f64>,
    /// `log ∫_{z_k}^{∞} Ω²`
    log_tail: Vec<f64>,
}

impl LogTail {
    fn new(gs: &GroundState, u: impl Fn(f64) -> f64, z_far: f64) -> Result<Self> {
        let g = &gs.grid;
        let z_match = 0.5 * g.half_width;
        let lambda = gs.lambda0;
        let kappa2 = |z: f64| 2.0 * (u(z) - lambda);
        if kappa2(z_match) <= 0.0 {
            return Err(Error::InvalidParameter("matching point lies in the classically allowed region".into()));
        }
        let n_far = (z_far / MESH).ceil() as usize;
        let n_match = (z_match / MESH).floor() as usize;
        // Riccati on [z_match, z_far], integrated backwards from a WKB start
        let du = |z: f64| (u(z + 1e-6) - u(z - 1e-6)) / 2e-6;
        let mut y = vec![0.0; n_far + 1];
        let zf = n_far as f64 * MESH;
        y[n_far] = -kappa2(zf).sqrt() - du(zf) / (2.0 * kappa2(zf));
        let rhs = |z: f64, y: f64| kappa2(z) - y * y;
        for k in (n_match..n_far).rev() {
            let z = (k + 1) as f64 * MESH;
            let s = -MESH;
            let y0 = y[k + 1];
            let k1 = rhs(z, y0);
            let k2 = rhs(z + 0.5 * s, y0 + 0.5 * s * k1);
            let k3 = rhs(z + 0.5 * s, y0 + 0.5 * s * k2);
            let k4 = rhs(z + s, y0 + s * k3);
            y[k] = y0 + s * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
            if !y[k].is_finite() {
                return Err(Error::NonFinite("Riccati tail"));
            }
        }
        let log_grid = |z: f64| {
            // log-linear interpolation of the grid ground state
            let t = (z + g.half_width) / g.spacing() - 1.0;
            let i = t.floor().clamp(0.0, (g.n - 2) as f64) as usize;
            let f = t - i as f64;
            (1.0 - f) * gs.omega[i].ln() + f * gs.omega[i + 1].ln()
        };
        let mut log_omega_sq = vec![0.0; n_far + 1];
        for (k, v) in log_omega_sq.iter_mut().enumerate().take(n_match + 1) {
            *v = 2.0 * log_grid(k as f64 * MESH);
        }
        let mut acc = log_grid(n_match as f64 * MESH);
        for k in n_match + 1..=n_far {
            acc += 0.5 * MESH * (y[k - 1] + y[k]);
            log_omega_sq[k] = 2.0 * acc;
        }
        // reverse cumulative trapezoid in log space
        let mut log_tail = vec![f64::NEG_INFINITY; n_far + 1];
        for k in (0..n_far).rev() {
            let cell = log_mean_exp(log_omega_sq[k], log_omega_sq[k + 1]) + MESH.ln();
            log_tail[k] = log_add(log_tail[k + 1], cell);
        }
        Ok(Self { log_omega_sq, log_tail })
    }

    fn log_tail_at(&self, theta: f64) -> f64 {
        let t = theta / MESH;
        let k = t.floor() as usize;
        if k + 1 >= self.log_tail.len() {
            return f64::NEG_INFINITY;
        }
        let f = t - k as f64;
        // drop the partial cell [z_k, θ] exactly under log-linear Ω²
        let (a, b) = (self.log_omega_sq[k], self.log_omega_sq[k + 1]);
        let head = log_mean_exp(a, a + f * (b - a)) + (f * MESH).max(f64::MIN_POSITIVE).ln();
        log_sub(self.log_tail[k], head)
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

fn log_sub(a: f64, b: f64) -> f64 {
    if b >= a {
        return a + f64::EPSILON.ln();
    }
    a + (-(b - a).exp()).ln_1p()
}

fn log_mean_exp(a: f64, b: f64) -> f64 {
    log_add(a, b) - std::f64::consts::LN_2
}

/// Tail masses of Ω² beyond `(4/a) log log T` for the exp(φ)₁ model and the
/// summability bound behind the iterated-logarithm support estimate.
pub fn tail_bound_check(gs: &GroundState, spec: &PotentialSpec, a: f64, t_list: &[f64]) -> Result<TailReport> {
    match &spec.kind {
        PotentialKind::Exponential { atoms, .. } if spec.dim == 1 && !atoms.is_empty() => {}
        _ => {
            return Err(Error::HypothesisViolated(
                "the tail bound is specific to U = m²z²/2 + cosh(az)".into(),
            ))
        }
    }
    if !(a > 0.0) {
        return Err(Error::InvalidParameter("a must be positive".into()));
    }
    if t_list.len() < 3 || t_list.iter().any(|&t| !(t > std::f64::consts::E)) {
        return Err(Error::InsufficientRange("need at least three T values above e".into()));
    }
    let theta = |t: f64| 4.0 / a * t.ln().ln();
    let t_max = t_list.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let z_far = theta(t_max).max(0.5 * gs.grid.half_width) + 3.0;
    let right = LogTail::new(gs, |z| spec.u1(z), z_far)?;
    let mirrored = GroundState {
        omega: gs.omega.iter().rev().cloned().collect(),
        ..gs.clone()
    };
    let left = LogTail::new(&mirrored, |z| spec.u1(-z), z_far)?;
    let log_a_of = |th: f64| log_add(right.log_tail_at(th), left.log_tail_at(th));

    let thresholds: Vec<f64> = t_list.iter().map(|&t| theta(t)).collect();
    let log_a: Vec<f64> = thresholds.iter().map(|&th| log_a_of(th)).collect();
    let decreasing = log_a.windows(2).zip(t_list.windows(2)).all(|(l, t)| (t[1] > t[0]) == (l[1] < l[0]));

    let xs: Vec<f64> = t_list.iter().map(|&t| t.ln() * t.ln().ln()).collect();
    let (_, slope) = linear_fit(&xs, &log_a);
    let m2 = -slope;
    let log_m1 = log_a.iter().zip(&xs).map(|(l, x)| l + m2 * x).fold(f64::NEG_INFINITY, f64::max);

    let t_hi = t_max.floor() as u64;
    let t_lo = (t_max / 10.0).floor() as u64;
    let mut partial_sum = 0.0;
    let mut gap = 0.0;
    for t in 3..=t_hi {
        let v = log_a_of(theta(t as f64)).exp();
        partial_sum += v;
        if t > t_lo {
            gap += v;
        }
    }
    Ok(TailReport {
        t_values: t_list.to_vec(),
        thresholds,
        log_a,
        decreasing,
        log_m1,
        m2,
        cauchy_gap: gap,
        partial_sum,
        pass: decreasing && m2 > 0.0 && gap < 1e-10,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schrodinger::{ground_state, ZGrid};

    fn cosh_state() -> (PotentialSpec, GroundState) {
        let spec = PotentialSpec::cosh(1.0, 1.0);
        let gs = ground_state(&spec, &ZGrid::new(8.0, 4096).unwrap()).unwrap();
        (spec, gs)
    }

    #[test]
    fn tail_mass_matches_grid_quadrature_inside_the_grid() {
        let (spec, gs) = cosh_state();
        let r = tail_bound_check(&gs, &spec, 1.0, &[10.0, 20.0, 50.0]).unwrap();
        let g = gs.grid;
        let h = g.spacing();
        for (&th, &la) in r.thresholds.iter().zip(&r.log_a) {
            let direct: f64 = gs
                .omega
                .iter()
                .enumerate()
                .filter(|(i, _)| g.node(*i).abs() > th)
                .map(|(_, o)| o * o * h)
                .sum();
            assert!((la.exp() / direct - 1.0).abs() < 2e-2, "θ={th}: {} vs {direct}", la.exp());
        }
    }

    #[test]
    fn decade_fit_and_summability() {
        let (spec, gs) = cosh_state();
        let ts: Vec<f64> = (1..=6).map(|k| 10f64.powi(k)).collect();
        let r = tail_bound_check(&gs, &spec, 1.0, &ts).unwrap();
        assert!(r.decreasing);
        assert!(r.m2 > 0.0);
        assert!(r.cauchy_gap < 1e-10);
        assert!(r.pass);
    }

    #[test]
    fn guards() {
        let (_, gs) = cosh_state();
        let free = PotentialSpec::free_field(1.0);
        assert!(matches!(tail_bound_check(&gs, &free, 1.0, &[10.0, 100.0, 1000.0]), Err(Error::HypothesisViolated(_))));
        let (spec, gs) = cosh_state();
        assert!(matches!(tail_bound_check(&gs, &spec, 1.0, &[10.0, 100.0]), Err(Error::InsufficientRange(_))));
    }
}

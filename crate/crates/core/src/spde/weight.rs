use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::trapezoid;

/// Cutoff `χ(x) = (3 + 6x² − x⁴)/8` on `[−1, 1]`, `|x|` outside.
#[inline]
pub fn chi(x: f64) -> f64 {
    let a = x.abs();
    if a >= 1.0 {
        a
    } else {
        let x2 = x * x;
        (3.0 + 6.0 * x2 - x2 * x2) / 8.0
    }
}

#[inline]
pub fn chi_d2(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (12.0 - 12.0 * x * x) / 8.0
    }
}

/// Weight `ρ_r = e^{rχ}` and the shift constant κ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub r: f64,
    pub kappa: f64,
}

impl WeightSpec {
    pub fn new(r: f64, kappa: f64) -> Result<Self> {
        let w = Self { r, kappa };
        w.validate()?;
        Ok(w)
    }

    /// Default κ just above `2r²`.
    pub fn with_rate(r: f64) -> Result<Self> {
        Self::new(r, 2.0 * r * r + 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight rate r = {} must be >= 0", self.r)));
        }
        if !(self.kappa > 2.0 * self.r * self.r) {
            return Err(Error::InvalidParameter(format!(
                "kappa = {} must exceed 2r^2 = {}",
                self.kappa,
                2.0 * self.r * self.r
            )));
        }
        Ok(())
    }

    /// The standing choice `2r² < K₁` when `K₁ > 0`.
    pub fn validate_for(&self, k1: f64) -> Result<()> {
        self.validate()?;
        if k1 > 0.0 && !(2.0 * self.r * self.r < k1) {
            return Err(Error::InvalidParameter(format!("2r^2 = {} must be below K1 = {k1}", 2.0 * self.r * self.r)));
        }
        Ok(())
    }

    /// `ρ_s(x) = e^{sχ(x)}`.
    #[inline]
    pub fn rho(&self, s: f64, x: f64) -> f64 {
        (s * chi(x)).exp()
    }

    /// `ρ_{−2r}(x)`, the density of the E-norm.
    #[inline]
    pub fn e_weight(&self, x: f64) -> f64 {
        self.rho(-2.0 * self.r, x)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiReport {
    pub symmetric: bool,
    pub matches_abs_outside: bool,
    pub convex: bool,
    pub positive_at_zero: bool,
}

impl ChiReport {
    pub fn pass(&self) -> bool {
        self.symmetric && self.matches_abs_outside && self.convex && self.positive_at_zero
    }
}

/// Checks the defining properties of χ on a grid.
pub fn check_chi(grid: &[f64]) -> ChiReport {
    let symmetric = grid.iter().all(|&x| chi(x) == chi(-x));
    let matches_abs_outside = grid.iter().filter(|x| x.abs() >= 1.0).all(|&x| chi(x) == x.abs());
    let e = 1e-4;
    let convex = grid.iter().all(|&x| chi_d2(x) >= 0.0 && chi(x + e) + chi(x - e) - 2.0 * chi(x) >= -1e-12);
    ChiReport {
        symmetric,
        matches_abs_outside,
        convex,
        positive_at_zero: chi(0.0) > 0.0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatRatio {
    pub t: f64,
    /// `max_x (G_t ρ_{−2r})(x) / (e^{2r²t} ρ_{−2r}(x))`
    pub max_ratio: f64,
    pub ratio_at_zero: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationRow {
    pub function: String,
    pub delta: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatWeightReport {
    pub r: f64,
    pub heat: Vec<HeatRatio>,
    pub interpolation: Vec<InterpolationRow>,
    pub pass: bool,
}

/// Test functions with analytic first and second derivatives.
fn interpolation_family() -> Vec<(&'static str, Box<dyn Fn(f64) -> [f64; 3]>)> {
    vec![
        ("gauss", Box::new(|x: f64| {
            let g = (-x * x).exp();
            [g, -2.0 * x * g, (4.0 * x * x - 2.0) * g]
        })),
        ("shifted_gauss", Box::new(|x: f64| {
            let y = x - 1.5;
            let g = (-0.5 * y * y).exp();
            [g, -y * g, (y * y - 1.0) * g]
        })),
        ("odd_gauss", Box::new(|x: f64| {
            let g = (-x * x).exp();
            [x * g, (1.0 - 2.0 * x * x) * g, (4.0 * x * x * x - 6.0 * x) * g]
        })),
        ("sech", Box::new(|x: f64| {
            let s = 1.0 / x.cosh();
            let t = x.tanh();
            [s, -s * t, s * (t * t - s * s)]
        })),
        ("wave_packet", Box::new(|x: f64| {
            let g = (-0.25 * x * x).exp();
            let (c, s) = ((2.0 * x).cos(), (2.0 * x).sin());
            let gp = -0.5 * x * g;
            let gpp = (0.25 * x * x - 0.5) * g;
            [c * g, -2.0 * s * g + c * gp, -4.0 * c * g - 4.0 * s * gp + c * gpp]
        })),
    ]
}

/// Heat-kernel bound `G_t ρ_{−2r} ≤ e^{2r²t} ρ_{−2r}` by quadrature, and the
/// interpolation estimate `‖φ′‖_E ≤ (2r + 1/δ)‖φ‖_E + δ‖Δφ‖_E` on a fixed
/// family of test functions.
pub fn heat_weight_bound_check(weight: &WeightSpec, t_list: &[f64], deltas: &[f64], x_grid: &[f64]) -> Result<HeatWeightReport> {
    weight.validate()?;
    if x_grid.len() < 3 {
        return Err(Error::EmptyGrid);
    }
    let dx = x_grid[1] - x_grid[0];
    let (lo, hi) = (x_grid[0], x_grid[x_grid.len() - 1]);
    let rho: Vec<f64> = x_grid.iter().map(|&x| weight.e_weight(x)).collect();

    let mut heat = Vec::with_capacity(t_list.len());
    for &t in t_list {
        if !(t > 0.0) {
            return Err(Error::InvalidParameter("heat times must be positive".into()));
        }
        // Gaussian tail beyond 7.1σ is below 1e−12
        let margin = 7.1 * t.sqrt();
        if hi - lo <= 2.0 * margin {
            return Err(Error::InsufficientRange(format!("x-grid too narrow for t = {t}")));
        }
        let c = 1.0 / (2.0 * std::f64::consts::PI * t).sqrt();
        let bound = (2.0 * weight.r * weight.r * t).exp();
        let mut max_ratio = f64::NEG_INFINITY;
        let mut ratio_at_zero = f64::NAN;
        let mut best_zero = f64::INFINITY;
        let mut vals = vec![0.0; x_grid.len()];
        for (i, &x) in x_grid.iter().enumerate() {
            if x < lo + margin || x > hi - margin {
                continue;
            }
            for (v, (&y, &r)) in vals.iter_mut().zip(x_grid.iter().zip(&rho)) {
                *v = c * (-(x - y) * (x - y) / (2.0 * t)).exp() * r;
            }
            let ratio = trapezoid(&vals, dx) / (bound * rho[i]);
            max_ratio = max_ratio.max(ratio);
            if x.abs() < best_zero {
                best_zero = x.abs();
                ratio_at_zero = ratio;
            }
        }
        heat.push(HeatRatio {
            t,
            max_ratio,
            ratio_at_zero,
        });
    }

    let mut interpolation = Vec::new();
    for (name, f) in interpolation_family() {
        let vals: Vec<[f64; 3]> = x_grid.iter().map(|&x| f(x)).collect();
        let e_norm = |k: usize| {
            let sq: Vec<f64> = vals.iter().zip(&rho).map(|(v, r)| v[k] * v[k] * r).collect();
            trapezoid(&sq, dx).sqrt()
        };
        let (n0, n1, n2) = (e_norm(0), e_norm(1), e_norm(2));
        for &delta in deltas {
            if !(delta > 0.0) {
                return Err(Error::InvalidParameter("delta must be positive".into()));
            }
            let rhs = (2.0 * weight.r + 1.0 / delta) * n0 + delta * n2;
            interpolation.push(InterpolationRow {
                function: name.to_string(),
                delta,
                lhs: n1,
                rhs,
                slack: rhs - n1,
            });
        }
    }
    let pass = heat.iter().all(|h| h.max_ratio <= 1.0 + 1e-12) && interpolation.iter().all(|r| r.slack >= 0.0);
    Ok(HeatWeightReport {
        r: weight.r,
        heat,
        interpolation,
        pass,
    })
}

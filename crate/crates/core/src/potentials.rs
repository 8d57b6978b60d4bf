//! Potential families with their convex-plus-quadratic decomposition.
//!
//! Every potential is written as `U(z) = (K₁/2)|z|² + V(z)` with `V` convex.
//! The families are the polynomial (P(φ)₁), exponential (exp(φ)₁) and
//! trigonometric interactions, the non-smooth `K₁/2|z|² + s|z|` model, and
//! non-negative superpositions of these.
//!
//! Non-smoothness only ever enters through a `|z|` term (a polynomial `a₁`
//! coefficient or the `AbsNorm` slope), so the minimal section of `∂V` is the
//! smooth gradient plus the least-norm element of a centred ball at `z = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// One atom `m_i δ_{ξ_i}` of the interaction measure ν.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub xi: Vec<f64>,
    pub weight: f64,
}

impl Atom {
    pub fn new(xi: Vec<f64>, weight: f64) -> Self {
        Self { xi, weight }
    }

    pub fn scalar(xi: f64, weight: f64) -> Self {
        Self { xi: vec![xi], weight }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedTerm {
    pub weight: f64,
    pub term: PotentialKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum PotentialKind {
    /// `Σ a_j |z|^j` (radial in d > 1).
    Polynomial { coeffs: Vec<f64> },
    /// `(m²/2)|z|² + Σ m_i e^{(ξ_i, z)}` with `|ξ_i| ≤ radius`.
    Exponential {
        mass: f64,
        radius: f64,
        atoms: Vec<Atom>,
    },
    /// `(m²/2)|z|² + Σ m_i cos((ξ_i, z) + phase)` with signed `m_i`.
    Trigonometric {
        mass: f64,
        phase: f64,
        atoms: Vec<Atom>,
    },
    /// `(k1/2)|z|² + slope·|z|`.
    AbsNorm { k1: f64, slope: f64 },
    /// `Σ λ_i U_i` with `λ_i ≥ 0`.
    Superposition { terms: Vec<WeightedTerm> },
}

/// Growth constants of the standing hypotheses: `U ≥ K₂|z|^α` for `|z| > R`
/// and `|∇̃U| ≤ K₃ exp(K₄|z|^β)` with `0 < β < 1 + α/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub k2: f64,
    pub radius_r: f64,
    pub alpha_growth: f64,
    pub k3: f64,
    pub k4: f64,
    pub beta_growth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(flatten)]
    pub kind: PotentialKind,
    pub k1: f64,
    pub growth: Growth,
    pub dim: usize,
}

impl PotentialKind {
    fn eval(&self, z: &[f64]) -> f64 {
        match self {
            PotentialKind::Polynomial { coeffs } => {
                let r = norm(z);
                horner(coeffs, r)
            }
            PotentialKind::Exponential { mass, atoms, .. } => {
                0.5 * mass * mass * norm_sq(z)
                    + atoms
                        .iter()
                        .map(|a| a.weight * dot(&a.xi, z).exp())
                        .sum::<f64>()
            }
            PotentialKind::Trigonometric { mass, phase, atoms } => {
                0.5 * mass * mass * norm_sq(z)
                    + atoms
                        .iter()
                        .map(|a| a.weight * (dot(&a.xi, z) + phase).cos())
                        .sum::<f64>()
            }
            PotentialKind::AbsNorm { k1, slope } => 0.5 * k1 * norm_sq(z) + slope * norm(z),
            PotentialKind::Superposition { terms } => {
                terms.iter().map(|t| t.weight * t.term.eval(z)).sum()
            }
        }
    }

    /// Coefficient of the `|z|` term, the only source of non-smoothness.
    fn kink_slope(&self) -> f64 {
        match self {
            PotentialKind::Polynomial { coeffs } => coeffs.get(1).copied().unwrap_or(0.0),
            PotentialKind::AbsNorm { slope, .. } => *slope,
            PotentialKind::Superposition { terms } => {
                terms.iter().map(|t| t.weight * t.term.kink_slope()).sum()
            }
            _ => 0.0,
        }
    }

    /// Adds the gradient of U without its `|z|` term into `out`.
    fn add_smooth_grad(&self, z: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            PotentialKind::Polynomial { coeffs } => {
                let r = norm(z);
                // Σ_{j≥2} j a_j r^{j-2}
                let mut radial = 0.0;
                for (j, a) in coeffs.iter().enumerate().skip(2) {
                    radial += j as f64 * a * r.powi(j as i32 - 2);
                }
                for (o, zi) in out.iter_mut().zip(z) {
                    *o += scale * radial * zi;
                }
            }
            PotentialKind::Exponential { mass, atoms, .. } => {
                let m2 = mass * mass;
                for (o, zi) in out.iter_mut().zip(z) {
                    *o += scale * m2 * zi;
                }
                for a in atoms {
                    let e = a.weight * dot(&a.xi, z).exp();
                    for (o, xi) in out.iter_mut().zip(&a.xi) {
                        *o += scale * e * xi;
                    }
                }
            }
            PotentialKind::Trigonometric { mass, phase, atoms } => {
                let m2 = mass * mass;
                for (o, zi) in out.iter_mut().zip(z) {
                    *o += scale * m2 * zi;
                }
                for a in atoms {
                    let s = -a.weight * (dot(&a.xi, z) + phase).sin();
                    for (o, xi) in out.iter_mut().zip(&a.xi) {
                        *o += scale * s * xi;
                    }
                }
            }
            PotentialKind::AbsNorm { k1, .. } => {
                for (o, zi) in out.iter_mut().zip(z) {
                    *o += scale * k1 * zi;
                }
            }
            PotentialKind::Superposition { terms } => {
                for t in terms {
                    t.term.add_smooth_grad(z, scale * t.weight, out);
                }
            }
        }
    }

    /// Second derivative of the smooth part in d = 1.
    fn smooth_d2(&self, z: f64) -> f64 {
        match self {
            PotentialKind::Polynomial { coeffs } => {
                let r = z.abs();
                coeffs
                    .iter()
                    .enumerate()
                    .skip(2)
                    .map(|(j, a)| (j * (j - 1)) as f64 * a * r.powi(j as i32 - 2))
                    .sum()
            }
            PotentialKind::Exponential { mass, atoms, .. } => {
                mass * mass
                    + atoms
                        .iter()
                        .map(|a| a.weight * a.xi[0] * a.xi[0] * (a.xi[0] * z).exp())
                        .sum::<f64>()
            }
            PotentialKind::Trigonometric { mass, phase, atoms } => {
                mass * mass
                    - atoms
                        .iter()
                        .map(|a| a.weight * a.xi[0] * a.xi[0] * (a.xi[0] * z + phase).cos())
                        .sum::<f64>()
            }
            PotentialKind::AbsNorm { k1, .. } => *k1,
            PotentialKind::Superposition { terms } => {
                terms.iter().map(|t| t.weight * t.term.smooth_d2(z)).sum()
            }
        }
    }

    /// `Some((a0, a1, a2))` when U is exactly `a0 + a1|z| + a2|z|²`.
    fn quad_abs_form(&self) -> Option<(f64, f64, f64)> {
        match self {
            PotentialKind::Polynomial { coeffs } => {
                if coeffs.iter().skip(3).any(|c| *c != 0.0) {
                    return None;
                }
                let c = |j: usize| coeffs.get(j).copied().unwrap_or(0.0);
                Some((c(0), c(1), c(2)))
            }
            PotentialKind::AbsNorm { k1, slope } => Some((0.0, *slope, 0.5 * k1)),
            PotentialKind::Exponential { mass, atoms, .. } if atoms.is_empty() => {
                Some((0.0, 0.0, 0.5 * mass * mass))
            }
            PotentialKind::Trigonometric { mass, atoms, .. } if atoms.is_empty() => {
                Some((0.0, 0.0, 0.5 * mass * mass))
            }
            PotentialKind::Superposition { terms } => {
                let mut acc = (0.0, 0.0, 0.0);
                for t in terms {
                    let (a0, a1, a2) = t.term.quad_abs_form()?;
                    acc.0 += t.weight * a0;
                    acc.1 += t.weight * a1;
                    acc.2 += t.weight * a2;
                }
                Some(acc)
            }
            _ => None,
        }
    }

    fn is_radial(&self) -> bool {
        match self {
            PotentialKind::Polynomial { .. } | PotentialKind::AbsNorm { .. } => true,
            PotentialKind::Exponential { atoms, .. } | PotentialKind::Trigonometric { atoms, .. } => {
                atoms.is_empty()
            }
            PotentialKind::Superposition { terms } => terms.iter().all(|t| t.term.is_radial()),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            PotentialKind::Polynomial { coeffs } => {
                ensure_finite(coeffs, "polynomial coefficients")?;
                if coeffs.get(1).copied().unwrap_or(0.0) < 0.0 {
                    return Err(Error::InvalidSpec(
                        "negative |z| coefficient makes V non-convex at 0".into(),
                    ));
                }
            }
            PotentialKind::Exponential {
                mass,
                radius,
                atoms,
            } => {
                if !(mass.is_finite() && radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidSpec("exponential mass/radius".into()));
                }
                for a in atoms {
                    check_atom_dim(a, dim)?;
                    if !(a.weight > 0.0) {
                        return Err(Error::InvalidSpec(
                            "exponential atoms need positive weights".into(),
                        ));
                    }
                    if norm(&a.xi) > *radius * (1.0 + 1e-12) {
                        return Err(Error::InvalidSpec(format!(
                            "atom |ξ| = {} outside support radius {}",
                            norm(&a.xi),
                            radius
                        )));
                    }
                }
            }
            PotentialKind::Trigonometric { mass, phase, atoms } => {
                if !(mass.is_finite() && phase.is_finite()) {
                    return Err(Error::InvalidSpec("trigonometric mass/phase".into()));
                }
                for a in atoms {
                    check_atom_dim(a, dim)?;
                    if !a.weight.is_finite() {
                        return Err(Error::InvalidSpec("atom weight".into()));
                    }
                }
            }
            PotentialKind::AbsNorm { k1, slope } => {
                if !(k1.is_finite() && slope.is_finite() && *slope >= 0.0) {
                    return Err(Error::InvalidSpec("abs-norm needs finite k1 and slope ≥ 0".into()));
                }
            }
            PotentialKind::Superposition { terms } => {
                if terms.is_empty() {
                    return Err(Error::InvalidSpec("empty superposition".into()));
                }
                for t in terms {
                    if !(t.weight >= 0.0 && t.weight.is_finite()) {
                        return Err(Error::InvalidSpec("superposition weights must be ≥ 0".into()));
                    }
                    t.term.validate(dim)?;
                }
            }
        }
        Ok(())
    }
}

fn check_atom_dim(a: &Atom, dim: usize) -> Result<()> {
    if a.xi.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: a.xi.len(),
        });
    }
    ensure_finite(&a.xi, "atom location")
}

impl PotentialSpec {
    pub fn new(kind: PotentialKind, k1: f64, growth: Growth, dim: usize) -> Result<Self> {
        let spec = Self {
            kind,
            k1,
            growth,
            dim,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Structural checks that need no grid. Convexity of V is checked
    /// separately by [`PotentialSpec::check_convexity`].
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidSpec("dim must be ≥ 1".into()));
        }
        if !self.k1.is_finite() {
            return Err(Error::InvalidSpec("k1 not finite".into()));
        }
        let g = &self.growth;
        if !(g.k2 > 0.0 && g.radius_r > 0.0 && g.alpha_growth > 0.0 && g.k3 > 0.0 && g.k4 > 0.0) {
            return Err(Error::InvalidSpec("growth constants must be positive".into()));
        }
        if !(g.beta_growth > 0.0 && g.beta_growth < 1.0 + 0.5 * g.alpha_growth) {
            return Err(Error::InvalidSpec(format!(
                "beta_growth = {} must lie in (0, 1 + alpha/2 = {})",
                g.beta_growth,
                1.0 + 0.5 * g.alpha_growth
            )));
        }
        self.kind.validate(self.dim)
    }

    /// Free field of mass m: `U = m²z²/2`, K₁ = m².
    pub fn free_field(mass: f64) -> Self {
        let m2 = mass * mass;
        Self {
            kind: PotentialKind::Polynomial {
                coeffs: vec![0.0, 0.0, 0.5 * m2],
            },
            k1: m2,
            growth: Growth {
                k2: 0.5 * m2,
                radius_r: 1.0,
                alpha_growth: 2.0,
                k3: m2.max(1e-300),
                k4: 1.0,
                beta_growth: 1.0,
            },
            dim: 1,
        }
    }

    /// `U = (k1/2)z² + slope|z|`.
    pub fn abs_norm(k1: f64, slope: f64) -> Self {
        Self {
            kind: PotentialKind::AbsNorm { k1, slope },
            k1,
            growth: Growth {
                k2: 0.5 * k1.max(1e-300),
                radius_r: 1.0,
                alpha_growth: 2.0,
                k3: k1.abs() + slope + 1e-300,
                k4: 1.0,
                beta_growth: 1.0,
            },
            dim: 1,
        }
    }

    /// `U = (m²/2)z² + cosh(az)`: the exp(φ)₁ model with ν = (δ_{−a} + δ_a)/2.
    pub fn cosh(mass: f64, a: f64) -> Self {
        let m2 = mass * mass;
        Self {
            kind: PotentialKind::Exponential {
                mass,
                radius: a,
                atoms: vec![Atom::scalar(-a, 0.5), Atom::scalar(a, 0.5)],
            },
            k1: m2,
            growth: Growth {
                k2: 0.5 * m2,
                radius_r: 1.0,
                alpha_growth: 2.0,
                // (m²/L + L ν(ℝ)) e^{L|z|} with L = a, ν(ℝ) = 1
                k3: m2 / a + a,
                k4: a,
                beta_growth: 1.0,
            },
            dim: 1,
        }
    }

    /// Trigonometric interaction in d = 1 with K₁ = m² − K(ν).
    pub fn trigonometric(mass: f64, phase: f64, atoms: Vec<Atom>) -> Self {
        let m2 = mass * mass;
        let total: f64 = atoms.iter().map(|a| a.weight.abs()).sum();
        let k_nu: f64 = atoms.iter().map(|a| norm_sq(&a.xi) * a.weight.abs()).sum();
        Self {
            kind: PotentialKind::Trigonometric { mass, phase, atoms },
            k1: m2 - k_nu,
            growth: Growth {
                k2: 0.25 * m2,
                radius_r: (2.0 * total.sqrt() / mass).max(1e-6),
                alpha_growth: 2.0,
                k3: m2 + (k_nu * total).sqrt() + 1e-300,
                k4: 1.0,
                beta_growth: 1.0,
            },
            dim: 1,
        }
    }

    /// `K(ν) = Σ |ξ_i|² |m_i|` for trigonometric kinds, 0 otherwise.
    pub fn second_moment_nu(&self) -> f64 {
        fn go(k: &PotentialKind) -> f64 {
            match k {
                PotentialKind::Trigonometric { atoms, .. } => {
                    atoms.iter().map(|a| norm_sq(&a.xi) * a.weight.abs()).sum()
                }
                PotentialKind::Superposition { terms } => {
                    terms.iter().map(|t| t.weight * go(&t.term)).sum()
                }
                _ => 0.0,
            }
        }
        go(&self.kind)
    }

    pub(crate) fn check_point(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: z.len(),
            });
        }
        ensure_finite(z, "evaluation point")
    }

    pub fn eval_u(&self, z: &[f64]) -> Result<f64> {
        self.check_point(z)?;
        Ok(self.kind.eval(z))
    }

    pub fn eval_v(&self, z: &[f64]) -> Result<f64> {
        self.check_point(z)?;
        Ok(self.kind.eval(z) - 0.5 * self.k1 * norm_sq(z))
    }

    /// `∇̃U(z) = K₁z + ∂₀V(z)`.
    pub fn min_section_grad(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_point(z)?;
        let mut g = self.min_section_v_unchecked(z);
        for (gi, zi) in g.iter_mut().zip(z) {
            *gi += self.k1 * zi;
        }
        Ok(g)
    }

    /// `∂₀V(z)`, the least-norm element of the subdifferential of V.
    pub fn min_section_v(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_point(z)?;
        Ok(self.min_section_v_unchecked(z))
    }

    fn min_section_v_unchecked(&self, z: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; z.len()];
        self.kind.add_smooth_grad(z, 1.0, &mut g);
        for (gi, zi) in g.iter_mut().zip(z) {
            *gi -= self.k1 * zi;
        }
        let s = self.kind.kink_slope();
        if s > 0.0 {
            let r = norm(z);
            if r > 0.0 {
                for (gi, zi) in g.iter_mut().zip(z) {
                    *gi += s * zi / r;
                }
            } else {
                // ∂V(0) = G + B(0, s); least-norm point of that ball
                let gn = norm(&g);
                let shrink = if gn > s { 1.0 - s / gn } else { 0.0 };
                for gi in g.iter_mut() {
                    *gi *= shrink;
                }
            }
        }
        g
    }

    /// Unchecked scalar `U(z)` for d = 1 hot loops.
    #[inline]
    pub fn u1(&self, z: f64) -> f64 {
        self.kind.eval(std::slice::from_ref(&z))
    }

    #[inline]
    pub fn v1(&self, z: f64) -> f64 {
        self.u1(z) - 0.5 * self.k1 * z * z
    }

    /// Scalar `∂₀V(z)` for d = 1.
    #[inline]
    pub fn dv1(&self, z: f64) -> f64 {
        self.min_section_v_unchecked(std::slice::from_ref(&z))[0]
    }

    /// Scalar `∇̃U(z)` for d = 1.
    #[inline]
    pub fn grad_u1(&self, z: f64) -> f64 {
        self.dv1(z) + self.k1 * z
    }

    /// Second derivative of V away from the kink (d = 1).
    pub fn d2v1(&self, z: f64) -> f64 {
        self.kind.smooth_d2(z) - self.k1
    }

    /// Coefficient of the `|z|` term in U.
    pub fn kink_slope(&self) -> f64 {
        self.kind.kink_slope()
    }

    /// `Some((c, s))` when `V = c|z|² + s|z| + const` exactly.
    pub fn quadratic_abs_part(&self) -> Option<(f64, f64)> {
        self.kind
            .quad_abs_form()
            .map(|(_, a1, a2)| (a2 - 0.5 * self.k1, a1))
    }

    pub fn is_radial(&self) -> bool {
        self.kind.is_radial()
    }

    /// Midpoint convexity of V over all pairs of a 1D grid.
    pub fn check_convexity(&self, grid: &[f64]) -> Result<ConvexityReport> {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if self.dim != 1 {
            return Err(Error::Unsupported("convexity scan is one-dimensional".into()));
        }
        ensure_finite(grid, "convexity grid")?;
        let vals: Vec<f64> = grid.iter().map(|&z| self.v1(z)).collect();
        let mut worst = f64::NEG_INFINITY;
        let mut worst_pair = (grid[0], grid[0]);
        for i in 0..grid.len() {
            for j in i + 1..grid.len() {
                let mid = self.v1(0.5 * (grid[i] + grid[j]));
                let chord = 0.5 * (vals[i] + vals[j]);
                let excess = (mid - chord) / (1.0 + chord.abs());
                if excess > worst {
                    worst = excess;
                    worst_pair = (grid[i], grid[j]);
                }
            }
        }
        Ok(ConvexityReport {
            max_excess: worst,
            worst_pair,
            convex: worst <= 1e-12,
        })
    }

    /// Tests the growth hypotheses pointwise. `points` is flattened with
    /// stride `dim`.
    pub fn check_growth(&self, points: &[f64]) -> Result<GrowthReport> {
        if points.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if points.len() % self.dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: points.len() % self.dim,
            });
        }
        ensure_finite(points, "growth grid")?;
        let g = &self.growth;
        let mut out = Vec::with_capacity(points.len() / self.dim);
        let mut covers_tail = false;
        for z in points.chunks(self.dim) {
            let r = norm(z);
            let u = self.kind.eval(z);
            let lower_ok = if r > g.radius_r {
                covers_tail = true;
                Some(u >= g.k2 * r.powf(g.alpha_growth))
            } else {
                None
            };
            let grad = norm(&self.min_section_grad(z)?);
            let bound = g.k3 * (g.k4 * r.powf(g.beta_growth)).exp();
            out.push(GrowthPoint {
                z: z.to_vec(),
                u,
                lower_bound_ok: lower_ok,
                grad_norm: grad,
                grad_bound: bound,
                grad_ok: grad <= bound,
            });
        }
        let pass = out
            .iter()
            .all(|p| p.grad_ok && p.lower_bound_ok.unwrap_or(true));
        Ok(GrowthReport {
            points: out,
            covers_tail,
            pass,
        })
    }
}

#[derive(Clone, Debug)]
pub struct ConvexityReport {
    /// Largest `(V(mid) − chord)/(1 + |chord|)` seen.
    pub max_excess: f64,
    pub worst_pair: (f64, f64),
    pub convex: bool,
}

#[derive(Clone, Debug)]
pub struct GrowthPoint {
    pub z: Vec<f64>,
    pub u: f64,
    /// `None` inside the radius R where the lower bound is not required.
    pub lower_bound_ok: Option<bool>,
    pub grad_norm: f64,
    pub grad_bound: f64,
    pub grad_ok: bool,
}

#[derive(Clone, Debug)]
pub struct GrowthReport {
    pub points: Vec<GrowthPoint>,
    /// Whether any point lay beyond R.
    pub covers_tail: bool,
    pub pass: bool,
}

impl GrowthReport {
    pub fn failures(&self) -> impl Iterator<Item = &GrowthPoint> {
        self.points
            .iter()
            .filter(|p| !p.grad_ok || p.lower_bound_ok == Some(false))
    }
}

#[inline]
pub(crate) fn norm_sq(z: &[f64]) -> f64 {
    z.iter().map(|x| x * x).sum()
}

#[inline]
pub(crate) fn norm(z: &[f64]) -> f64 {
    match z {
        [x] => x.abs(),
        _ => norm_sq(z).sqrt(),
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn horner(coeffs: &[f64], r: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c)
}

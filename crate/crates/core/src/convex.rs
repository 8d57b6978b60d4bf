//! Proximal toolkit for the convex part V of a potential.
//!
//! `J_α = (I + α∂V)⁻¹` is the resolvent (proximal map), `V_α` the
//! Moreau–Yosida envelope and `(∂₀V)_α(z) = (z − J_α z)/α` the Yosida
//! approximation of the minimal section. These give Lipschitz surrogates of
//! the possibly discontinuous drift `b̃ = −½∂₀V`.

use crate::error::{ensure_finite, Error, Result};
use crate::potentials::{norm, PotentialSpec};

pub const DEFAULT_TOL: f64 = 1e-13;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug)]
pub struct ProxProblem<'a> {
    pub spec: &'a PotentialSpec,
    pub alpha: f64,
    pub solver_tol: f64,
    pub max_iter: usize,
}

impl<'a> ProxProblem<'a> {
    pub fn new(spec: &'a PotentialSpec, alpha: f64) -> Result<Self> {
        Self::with_tolerance(spec, alpha, DEFAULT_TOL, DEFAULT_MAX_ITER)
    }

    pub fn with_tolerance(
        spec: &'a PotentialSpec,
        alpha: f64,
        solver_tol: f64,
        max_iter: usize,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
        }
        if !(solver_tol > 0.0) || max_iter == 0 {
            return Err(Error::InvalidParameter("solver_tol > 0 and max_iter ≥ 1 required".into()));
        }
        Ok(Self {
            spec,
            alpha,
            solver_tol,
            max_iter,
        })
    }

    fn check(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.spec.dim {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dim,
                got: z.len(),
            });
        }
        ensure_finite(z, "prox argument")
    }

    /// `J_α(z)`, the minimiser of `|y − z|²/(2α) + V(y)`.
    pub fn prox(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check(z)?;
        if self.spec.dim == 1 {
            return Ok(vec![self.prox1(z[0])?]);
        }
        if !self.spec.is_radial() {
            return Err(Error::Unsupported(
                "prox in d > 1 needs a radial or separable V".into(),
            ));
        }
        // radial V: J_α(z) = j(|z|) z/|z| with j the scalar prox of the profile
        let r = norm(z);
        if r == 0.0 {
            return Ok(vec![0.0; z.len()]);
        }
        let jr = self.prox1(r)?;
        Ok(z.iter().map(|zi| zi * jr / r).collect())
    }

    /// Scalar resolvent. Also serves radial profiles, whose restriction to a
    /// ray evaluates like the d = 1 potential.
    pub fn prox1(&self, z: f64) -> Result<f64> {
        let a = self.alpha;
        if let Some((c, s)) = self.spec.quadratic_abs_part() {
            // V = c y² + s|y| + const
            return Ok(soft_threshold(z, a * s) / (1.0 + 2.0 * c * a));
        }
        let s = self.spec.kink_slope();
        let (lo_limit, hi_limit) = if s > 0.0 {
            let g0 = self.smooth_dv(0.0);
            let w = z / a - g0;
            if w.abs() <= s {
                return Ok(0.0);
            }
            if w > 0.0 {
                (0.0, f64::INFINITY)
            } else {
                (f64::NEG_INFINITY, 0.0)
            }
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        self.newton_bisect(z, lo_limit, hi_limit)
    }

    fn smooth_dv(&self, y: f64) -> f64 {
        let s = self.spec.kink_slope();
        if s > 0.0 && y != 0.0 {
            self.spec.dv1(y) - s * y.signum()
        } else if s > 0.0 {
            // at the kink: recover the smooth part from a one-sided value
            self.spec.dv1(f64::MIN_POSITIVE) - s
        } else {
            self.spec.dv1(y)
        }
    }

    /// Solves `y + α∂V(y) = z` on an interval where ∂V is single-valued.
    fn newton_bisect(&self, z: f64, lo_limit: f64, hi_limit: f64) -> Result<f64> {
        let a = self.alpha;
        let resid = |y: f64| y + a * self.spec.dv1(y) - z;
        let mut y = z.clamp(lo_limit, hi_limit);
        if y == 0.0 && lo_limit == 0.0 {
            y = f64::MIN_POSITIVE;
        } else if y == 0.0 && hi_limit == 0.0 {
            y = -f64::MIN_POSITIVE;
        }
        let mut r = resid(y);
        // the residual is increasing; grow a bracket around the root
        let mut step = (a * self.spec.dv1(y)).abs().max(1.0);
        let (mut lo, mut hi) = if r > 0.0 {
            let lo = if lo_limit.is_finite() {
                lo_limit
            } else {
                while resid(y - step) > 0.0 {
                    step *= 2.0;
                }
                y - step
            };
            (lo, y)
        } else {
            let hi = if hi_limit.is_finite() {
                hi_limit
            } else {
                while resid(y + step) < 0.0 {
                    step *= 2.0;
                }
                y + step
            };
            (y, hi)
        };
        let scale = 1.0 + z.abs();
        for iter in 0..self.max_iter {
            if r.abs() <= self.solver_tol * scale {
                return Ok(y);
            }
            if r > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let slope = 1.0 + a * self.spec.d2v1(y);
            let newton = y - r / slope;
            let next = if newton > lo && newton < hi && slope.is_finite() {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if next == y || hi - lo <= 4.0 * f64::EPSILON * y.abs().max(f64::MIN_POSITIVE) {
                // bracket collapsed to adjacent floats; accept if rounding-limited
                let floor = 8.0 * f64::EPSILON * (scale + a * self.spec.dv1(y).abs());
                if r.abs() <= self.solver_tol * scale + floor {
                    return Ok(y);
                }
                return Err(Error::NonConvergence {
                    iterations: iter,
                    residual: r.abs(),
                });
            }
            y = next;
            r = resid(y);
        }
        Err(Error::NonConvergence {
            iterations: self.max_iter,
            residual: r.abs(),
        })
    }

    /// `V_α(z) = |J_α z − z|²/(2α) + V(J_α z)`.
    pub fn moreau_env(&self, z: &[f64]) -> Result<f64> {
        let j = self.prox(z)?;
        let d2: f64 = j.iter().zip(z).map(|(a, b)| (a - b).powi(2)).sum();
        Ok(d2 / (2.0 * self.alpha) + self.spec.eval_v(&j)?)
    }

    pub fn moreau_env1(&self, z: f64) -> Result<f64> {
        let j = self.prox1(z)?;
        Ok((j - z).powi(2) / (2.0 * self.alpha) + self.spec.v1(j))
    }

    /// `(∂₀V)_α(z) = (z − J_α z)/α`.
    pub fn yosida_grad(&self, z: &[f64]) -> Result<Vec<f64>> {
        let j = self.prox(z)?;
        Ok(z.iter().zip(&j).map(|(zi, ji)| (zi - ji) / self.alpha).collect())
    }

    pub fn yosida_grad1(&self, z: f64) -> Result<f64> {
        Ok((z - self.prox1(z)?) / self.alpha)
    }
}

/// `sign(z)·max(|z| − t, 0)`.
#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DriftMode {
    Exact,
    Yosida { alpha: f64 },
}

/// `b̃(z) = −½∂₀V(z)` (exact) or `−½(∂₀V)_α(z)` (Yosida).
pub fn drift(spec: &PotentialSpec, mode: DriftMode, z: &[f64]) -> Result<Vec<f64>> {
    let g = match mode {
        DriftMode::Exact => spec.min_section_v(z)?,
        DriftMode::Yosida { alpha } => ProxProblem::new(spec, alpha)?.yosida_grad(z)?,
    };
    Ok(g.into_iter().map(|x| -0.5 * x).collect())
}

/// `−½∇̃U(z) = −½K₁z + b̃(z)`, the full pointwise SPDE drift.
pub fn full_drift(spec: &PotentialSpec, mode: DriftMode, z: &[f64]) -> Result<Vec<f64>> {
    let mut b = drift(spec, mode, z)?;
    for (bi, zi) in b.iter_mut().zip(z) {
        *bi -= 0.5 * spec.k1 * zi;
    }
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::golden_section_min;
    use crate::potentials::{Atom, PotentialKind};
    use approx::assert_relative_eq;

    fn abs_v() -> PotentialSpec {
        // V = |z| (K₁ = 0)
        PotentialSpec::abs_norm(0.0, 1.0)
    }

    fn quad_v() -> PotentialSpec {
        PotentialSpec {
            kind: PotentialKind::Polynomial {
                coeffs: vec![0.0, 0.0, 0.5],
            },
            k1: 0.0,
            ..PotentialSpec::free_field(1.0)
        }
    }

    /// V = cosh(z) with K₁ = 0, solved by the Newton path.
    fn cosh_v() -> PotentialSpec {
        PotentialSpec {
            kind: PotentialKind::Exponential {
                mass: 0.0,
                radius: 1.0,
                atoms: vec![Atom::scalar(-1.0, 0.5), Atom::scalar(1.0, 0.5)],
            },
            k1: 0.0,
            ..PotentialSpec::cosh(1.0, 1.0)
        }
    }

    #[test]
    fn soft_threshold_cases() {
        let s = abs_v();
        let p = ProxProblem::new(&s, 0.5).unwrap();
        assert_eq!(p.prox(&[2.0]).unwrap(), vec![1.5]);
        assert_eq!(p.prox(&[0.3]).unwrap(), vec![0.0]);
    }

    #[test]
    fn quadratic_resolvent() {
        let s = quad_v();
        let p = ProxProblem::new(&s, 1.0).unwrap();
        assert_eq!(p.prox1(3.0).unwrap(), 1.5);
        assert_eq!(p.moreau_env1(2.0).unwrap(), 1.0);
        assert_eq!(p.yosida_grad1(2.0).unwrap(), 1.0);
    }

    #[test]
    fn huber_envelope() {
        let s = abs_v();
        let p = ProxProblem::new(&s, 1.0).unwrap();
        assert_eq!(p.moreau_env1(3.0).unwrap(), 2.5);
        assert_relative_eq!(p.moreau_env1(0.4).unwrap(), 0.08, epsilon = 1e-16);
        assert_eq!(p.yosida_grad1(5.0).unwrap(), 1.0);
        let p = ProxProblem::new(&s, 0.25).unwrap();
        assert_eq!(p.yosida_grad1(0.5).unwrap(), 1.0);
    }

    #[test]
    fn cosh_envelope_matches_golden_section_oracle() {
        let s = cosh_v();
        let (alpha, z) = (0.1, 1.0);
        let obj = |y: f64| (y - z).powi(2) / (2.0 * alpha) + y.cosh() - 1.0;
        let y_star = golden_section_min(-2.0, 3.0, 1e-12, obj);
        let oracle = obj(y_star);
        let p = ProxProblem::new(&s, alpha).unwrap();
        let env = p.moreau_env1(z).unwrap() - 1.0;
        assert_relative_eq!(env, oracle, max_relative = 1e-12);
        assert_relative_eq!(p.prox1(z).unwrap(), y_star, epsilon = 1e-8);
        // optimality: y + α sinh(y) = z
        let y = p.prox1(z).unwrap();
        assert!((y + alpha * y.sinh() - z).abs() < 1e-13);
    }

    #[test]
    fn kinked_non_closed_form_potential() {
        // V = 0.3|z| + cosh(z): Newton on each half-line plus exact zero.
        let s = PotentialSpec {
            kind: PotentialKind::Superposition {
                terms: vec![
                    crate::potentials::WeightedTerm {
                        weight: 1.0,
                        term: PotentialKind::AbsNorm { k1: 0.0, slope: 0.3 },
                    },
                    crate::potentials::WeightedTerm {
                        weight: 1.0,
                        term: cosh_v().kind,
                    },
                ],
            },
            ..cosh_v()
        };
        let p = ProxProblem::new(&s, 0.5).unwrap();
        assert_eq!(p.prox1(0.1).unwrap(), 0.0);
        for &z in &[-4.0, -0.5, 0.2, 3.0] {
            let y = p.prox1(z).unwrap();
            let obj = |t: f64| (t - z).powi(2) / 1.0 + s.v1(t);
            let g = golden_section_min(-5.0, 5.0, 1e-12, obj);
            assert!((y - g).abs() < 1e-7, "z={z}: {y} vs {g}");
        }
    }

    #[test]
    fn drift_modes() {
        let s = PotentialSpec::abs_norm(1.0, 1.0);
        assert_eq!(drift(&s, DriftMode::Exact, &[0.0]).unwrap(), vec![0.0]);
        assert_eq!(drift(&s, DriftMode::Yosida { alpha: 1.0 }, &[5.0]).unwrap(), vec![-0.5]);
        let free = PotentialSpec::free_field(1.3);
        for mode in [DriftMode::Exact, DriftMode::Yosida { alpha: 0.2 }] {
            for z in [-2.0, 0.0, 4.0] {
                assert_eq!(drift(&free, mode, &[z]).unwrap(), vec![0.0]);
            }
        }
        assert_eq!(full_drift(&s, DriftMode::Exact, &[2.0]).unwrap(), vec![-1.5]);
    }

    #[test]
    fn radial_prox_in_two_dimensions() {
        let s = PotentialSpec {
            dim: 2,
            ..abs_v()
        };
        let p = ProxProblem::new(&s, 1.0).unwrap();
        let j = p.prox(&[3.0, 4.0]).unwrap();
        assert_relative_eq!(j[0], 3.0 * 4.0 / 5.0, epsilon = 1e-14);
        assert_relative_eq!(j[1], 4.0 * 4.0 / 5.0, epsilon = 1e-14);
        let ns = PotentialSpec {
            dim: 2,
            kind: PotentialKind::Exponential {
                mass: 1.0,
                radius: 1.0,
                atoms: vec![Atom::new(vec![1.0, 0.0], 1.0)],
            },
            ..PotentialSpec::cosh(1.0, 1.0)
        };
        let p = ProxProblem::new(&ns, 1.0).unwrap();
        assert!(matches!(p.prox(&[1.0, 1.0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn invalid_problems() {
        let s = abs_v();
        assert!(ProxProblem::new(&s, 0.0).is_err());
        assert!(ProxProblem::with_tolerance(&s, 1.0, 0.0, 10).is_err());
        let p = ProxProblem::new(&s, 1.0).unwrap();
        assert!(p.prox(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let s = cosh_v();
        let p = ProxProblem::with_tolerance(&s, 0.1, 1e-300, 1).unwrap();
        assert!(matches!(p.prox1(2.0), Err(Error::NonConvergence { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn family() -> Vec<PotentialSpec> {
            vec![
                abs_v(),
                quad_v(),
                cosh_v(),
                PotentialSpec::trigonometric(1.0, 0.4, vec![Atom::scalar(0.8, 0.3)]),
            ]
        }

        proptest! {
            #[test]
            fn resolvent_is_nonexpansive(a in -6.0f64..6.0, b in -6.0f64..6.0, alpha in 0.01f64..3.0) {
                for s in family() {
                    let p = ProxProblem::new(&s, alpha).unwrap();
                    let d = (p.prox1(a).unwrap() - p.prox1(b).unwrap()).abs();
                    prop_assert!(d <= (a - b).abs() * (1.0 + 1e-12) + 1e-14);
                }
            }

            #[test]
            fn yosida_lipschitz_two_over_alpha(a in -6.0f64..6.0, b in -6.0f64..6.0, alpha in 0.01f64..3.0) {
                for s in family() {
                    let p = ProxProblem::new(&s, alpha).unwrap();
                    let d = (p.yosida_grad1(a).unwrap() - p.yosida_grad1(b).unwrap()).abs();
                    prop_assert!(d <= 2.0 / alpha * (a - b).abs() + 1e-9);
                }
            }

            #[test]
            fn yosida_dominated_by_minimal_section(z in -6.0f64..6.0, alpha in 0.001f64..3.0) {
                for s in family() {
                    let p = ProxProblem::new(&s, alpha).unwrap();
                    prop_assert!(p.yosida_grad1(z).unwrap().abs() <= s.dv1(z).abs() * (1.0 + 1e-10) + 1e-12);
                }
            }

            #[test]
            fn envelopes_increase_as_alpha_decreases(z in -6.0f64..6.0, a in 0.01f64..2.0, b in 0.01f64..2.0) {
                let (small, big) = if a < b { (a, b) } else { (b, a) };
                for s in family() {
                    let e_small = ProxProblem::new(&s, small).unwrap().moreau_env1(z).unwrap();
                    let e_big = ProxProblem::new(&s, big).unwrap().moreau_env1(z).unwrap();
                    let tol = 1e-12 * (1.0 + s.v1(z).abs());
                    prop_assert!(e_big <= e_small + tol);
                    prop_assert!(e_small <= s.v1(z) + tol);
                }
            }

            #[test]
            fn drifts_are_dissipative(a in -6.0f64..6.0, b in -6.0f64..6.0, alpha in 0.01f64..3.0) {
                for s in family() {
                    for mode in [DriftMode::Exact, DriftMode::Yosida { alpha }] {
                        let da = drift(&s, mode, &[a]).unwrap()[0];
                        let db = drift(&s, mode, &[b]).unwrap()[0];
                        prop_assert!((a - b) * (da - db) <= 1e-12);
                    }
                }
            }
        }

        #[test]
        fn yosida_converges_to_minimal_section() {
            for s in [cosh_v(), PotentialSpec::trigonometric(1.0, 0.4, vec![Atom::scalar(0.8, 0.3)]), abs_v()] {
                for &z in &[-2.0, -0.3, 0.7, 1.9] {
                    let target = s.dv1(z);
                    let mut prev = f64::INFINITY;
                    for k in 0..=10 {
                        let alpha = 0.5f64.powi(k);
                        let p = ProxProblem::new(&s, alpha).unwrap();
                        let defect = (p.yosida_grad1(z).unwrap() - target).abs();
                        assert!(defect <= prev + 1e-12, "z={z}, α={alpha}");
                        prev = defect;
                    }
                    // first-order bias α|V'V''|
                    let bound = 2.0 * 0.5f64.powi(10) * (1.0 + target.abs()) * (1.0 + s.d2v1(z).abs());
                    assert!(prev < bound, "z={z}: {prev}");
                }
            }
        }
    }
}

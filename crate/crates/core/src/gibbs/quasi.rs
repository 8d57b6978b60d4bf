use super::sample::PathSample;
use crate::error::{Error, Result};
use crate::numerics::trapezoid;
use crate::potentials::PotentialSpec;

/// A compactly supported shift `k(x)` with analytic first and second
/// derivatives.
pub trait Shift: Sync {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
    fn support(&self) -> (f64, f64);
}

/// `A (1 − s²)⁴` with `s = (x − c)/w` on `|s| < 1`, zero outside (C³).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BumpShift {
    pub center: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

impl Shift for BumpShift {
    fn value(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.half_width;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        self.amplitude * (1.0 - s * s).powi(4)
    }

    fn d1(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.half_width;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        self.amplitude * -8.0 * s * (1.0 - s * s).powi(3) / self.half_width
    }

    fn d2(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.half_width;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - s * s;
        self.amplitude * (-8.0 * u.powi(3) + 48.0 * s * s * u * u) / (self.half_width * self.half_width)
    }

    fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

/// `Λ(k, w) = exp ∫ [U(w) − U(w + k) − ½|k′|² + w Δk] dx`, the density of
/// the law of `w − k` with respect to the path measure, evaluated on a
/// sampled path by the trapezoidal rule.
pub fn quasi_invariance_density(spec: &PotentialSpec, path: &PathSample, k: &dyn Shift) -> Result<f64> {
    Ok(log_quasi_invariance_density(spec, path, k)?.exp())
}

pub fn log_quasi_invariance_density(spec: &PotentialSpec, path: &PathSample, k: &dyn Shift) -> Result<f64> {
    let xs = &path.x_points;
    if xs.len() < 2 {
        return Err(Error::EmptyGrid);
    }
    let (a, b) = k.support();
    if a < xs[0] || b > xs[xs.len() - 1] {
        return Err(Error::InvalidParameter(format!(
            "shift support [{a}, {b}] exceeds the path grid [{}, {}]",
            xs[0],
            xs[xs.len() - 1]
        )));
    }
    let dx = xs[1] - xs[0];
    let integrand: Vec<f64> = xs
        .iter()
        .zip(&path.values)
        .map(|(&x, &w)| {
            let kv = k.value(x);
            if kv == 0.0 && k.d1(x) == 0.0 && k.d2(x) == 0.0 {
                return 0.0;
            }
            spec.u1(w) - spec.u1(w + kv) - 0.5 * k.d1(x).powi(2) + w * k.d2(x)
        })
        .collect();
    Ok(trapezoid(&integrand, dx))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_derivatives_match_differences() {
        let k = BumpShift {
            center: 0.2,
            half_width: 1.5,
            amplitude: 0.7,
        };
        let e = 1e-5;
        for &x in &[-1.0, -0.3, 0.2, 0.9, 1.6] {
            let d1 = (k.value(x + e) - k.value(x - e)) / (2.0 * e);
            let d2 = (k.d1(x + e) - k.d1(x - e)) / (2.0 * e);
            assert!((d1 - k.d1(x)).abs() < 1e-8);
            assert!((d2 - k.d2(x)).abs() < 1e-7);
        }
    }

    #[test]
    fn zero_shift_gives_one() {
        let p = PathSample {
            x_points: vec![0.0, 0.5, 1.0, 1.5],
            values: vec![0.1, -0.4, 2.0, 0.3],
            seed: 0,
        };
        let k = BumpShift {
            center: 0.75,
            half_width: 0.5,
            amplitude: 0.0,
        };
        assert_eq!(quasi_invariance_density(&PotentialSpec::free_field(1.0), &p, &k).unwrap(), 1.0);
        let wide = BumpShift { half_width: 3.0, ..k };
        assert!(quasi_invariance_density(&PotentialSpec::free_field(1.0), &p, &wide).is_err());
    }
}

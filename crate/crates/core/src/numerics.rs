//! Small numerical helpers shared across modules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Trapezoidal rule for samples on a uniform grid.
pub fn trapezoid(values: &[f64], spacing: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => spacing * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Golden-section search for the minimiser of a unimodal function on `[a, b]`.
pub fn golden_section_min(mut a: f64, mut b: f64, tol: f64, f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Solves a tridiagonal system by the Thomas algorithm. `lower[i]` couples
/// row `i + 1` to column `i`, `upper[i]` couples row `i` to column `i + 1`.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    if rhs.len() != n || lower.len() + 1 != n.max(1) || upper.len() + 1 != n.max(1) {
        return Err(Error::LinearSolve("inconsistent tridiagonal dimensions".into()));
    }
    if n == 0 {
        return Ok(());
    }
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return Err(Error::LinearSolve("zero pivot".into()));
    }
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i - 1] * c[i - 1];
        if beta == 0.0 || !beta.is_finite() {
            return Err(Error::LinearSolve("zero pivot".into()));
        }
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

/// Prefactored constant-coefficient tridiagonal operator for repeated solves.
#[derive(Clone, Debug)]
pub struct TridiagonalFactor {
    lower: Vec<f64>,
    inv_beta: Vec<f64>,
    c: Vec<f64>,
}

impl TridiagonalFactor {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        if n == 0 || lower.len() + 1 != n || upper.len() + 1 != n {
            return Err(Error::LinearSolve("inconsistent tridiagonal dimensions".into()));
        }
        let mut inv_beta = vec![0.0; n];
        let mut c = vec![0.0; n.saturating_sub(1)];
        let mut beta = diag[0];
        for i in 0..n {
            if i > 0 {
                c[i - 1] = upper[i - 1] / beta;
                beta = diag[i] - lower[i - 1] * c[i - 1];
            }
            if beta == 0.0 || !beta.is_finite() {
                return Err(Error::LinearSolve("zero pivot".into()));
            }
            inv_beta[i] = 1.0 / beta;
        }
        Ok(Self {
            lower: lower.to_vec(),
            inv_beta,
            c,
        })
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.inv_beta.len();
        rhs[0] *= self.inv_beta[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i - 1] * rhs[i - 1]) * self.inv_beta[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.c[i] * rhs[i + 1];
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

pub fn mean_and_stderr(xs: &[f64]) -> MeanEstimate {
    let n = xs.len();
    if n == 0 {
        return MeanEstimate {
            mean: f64::NAN,
            std_err: f64::NAN,
            n,
        };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    MeanEstimate {
        mean,
        std_err: (var / n as f64).sqrt(),
        n,
    }
}

/// Ordinary least squares `y ≈ a + b x`; returns `(a, b)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let b = sxy / sxx;
    (my - b * mx, b)
}

/// One-sample Kolmogorov–Smirnov distance against a CDF.
pub fn ks_one_sample(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Piecewise-linear CDF of a density tabulated on a uniform grid, with cell
/// boundaries halfway between nodes. Used as the reference law for
/// grid-based samplers.
#[derive(Clone, Debug)]
pub struct CellCdf {
    left: f64,
    spacing: f64,
    /// cumulative mass at the right edge of each cell
    cum: Vec<f64>,
}

impl CellCdf {
    pub fn new(nodes_left: f64, spacing: f64, masses: &[f64]) -> Self {
        let total: f64 = masses.iter().sum();
        let mut acc = 0.0;
        let cum = masses
            .iter()
            .map(|m| {
                acc += m / total;
                acc
            })
            .collect();
        Self {
            left: nodes_left - 0.5 * spacing,
            spacing,
            cum,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.left) / self.spacing;
        if t <= 0.0 {
            return 0.0;
        }
        let k = t.floor() as usize;
        if k >= self.cum.len() {
            return 1.0;
        }
        let lo = if k == 0 { 0.0 } else { self.cum[k - 1] };
        lo + (t - k as f64) * (self.cum[k] - lo)
    }
}

/// SplitMix64 finaliser; used to derive independent stream seeds.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for stream `index` under `label`, derived from a base seed.
pub fn derive_seed(base: u64, label: &str, index: u64) -> u64 {
    let mut h = splitmix64(base);
    for b in label.bytes() {
        h = splitmix64(h ^ b as u64);
    }
    splitmix64(h ^ splitmix64(index.wrapping_add(0xA076_1D64_78BD_642F)))
}

pub fn stream_rng(base: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, label, index))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

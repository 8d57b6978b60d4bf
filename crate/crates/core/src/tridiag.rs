//! Symmetric tridiagonal eigenpairs by Sturm bisection and inverse iteration.

use crate::error::{Error, Result};
use crate::numerics::splitmix64;

/// Symmetric tridiagonal matrix stored as its diagonal and first off-diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::DimensionMismatch {
                expected: diag.len() - 1,
                got: off.len(),
            });
        }
        crate::error::ensure_finite(&diag, "tridiagonal diagonal")?;
        crate::error::ensure_finite(&off, "tridiagonal off-diagonal")?;
        Ok(Self { diag, off })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            out[i] = s;
        }
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.n();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    pub fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence count).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE.max(f64::EPSILON * f64::EPSILON * self.norm_bound());
        let mut count = 0;
        let mut q = self.diag[0] - x;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.n() {
            q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `j`-th smallest eigenvalue (0-based) by bisection to full precision.
    pub fn eigenvalue(&self, j: usize) -> Result<f64> {
        let (lo, hi) = self.gershgorin();
        self.bisect(j, lo, hi)
    }

    fn bisect(&self, j: usize, mut lo: f64, mut hi: f64) -> Result<f64> {
        if j >= self.n() {
            return Err(Error::InvalidParameter(format!(
                "eigenvalue index {j} out of range for n = {}",
                self.n()
            )));
        }
        let pad = f64::EPSILON * self.norm_bound();
        lo -= pad;
        hi += pad;
        for _ in 0..256 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Smallest `k` eigenvalues in increasing order.
    pub fn smallest_eigenvalues(&self, k: usize) -> Result<Vec<f64>> {
        if k > self.n() {
            return Err(Error::InvalidParameter(format!(
                "requested {k} eigenvalues of a {}x{} matrix",
                self.n(),
                self.n()
            )));
        }
        let (lo, hi) = self.gershgorin();
        let mut out = Vec::with_capacity(k);
        let mut floor = lo;
        for j in 0..k {
            let v = self.bisect(j, floor, hi)?;
            out.push(v);
            floor = v;
        }
        Ok(out)
    }

    /// Smallest `k` eigenpairs with unit Euclidean eigenvectors.
    ///
    /// Vectors come from a twisted factorization at the bisected eigenvalue,
    /// which keeps small components (deep tails) relatively accurate; a pass
    /// of inverse iteration with reorthogonalization is used only inside
    /// clusters of nearly equal eigenvalues.
    pub fn smallest_eigenpairs(&self, k: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let vals = self.smallest_eigenvalues(k)?;
        let ortol = 1e-3 * self.norm_bound();
        let sep = 1e-8 * self.norm_bound();
        let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(k);
        for (j, &lam) in vals.iter().enumerate() {
            let isolated = (j == 0 || lam - vals[j - 1] > sep) && (j + 1 == vals.len() || vals[j + 1] - lam > sep);
            let v = if isolated {
                let z = self.twisted_vector(lam)?;
                // one Rayleigh-quotient correction of the bisected value
                let shift = dot(&z, &self.shifted_residual(lam, &z));
                if shift.abs() < sep {
                    self.twisted_vector(lam + shift)?
                } else {
                    z
                }
            } else {
                // earlier eigenvalues close enough that their vectors may leak in
                let start = (0..j).rev().take_while(|&i| lam - vals[i] < ortol).last().unwrap_or(j);
                self.inverse_iteration(lam, j as u64, &vecs[start..j])?
            };
            vecs.push(v);
        }
        Ok((vals, vecs))
    }

    /// `(T − λI)x`, formed with the shifted diagonal first.
    pub fn shifted_residual(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = 0.0;
                if i > 0 {
                    s += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * x[i + 1];
                }
                (self.diag[i] - lambda) * x[i] + s
            })
            .collect()
    }

    fn twisted_vector(&self, lambda: f64) -> Result<Vec<f64>> {
        let n = self.n();
        let pivmin = f64::MIN_POSITIVE.max(f64::EPSILON * f64::EPSILON * self.norm_bound());
        let guard = |q: f64| if q.abs() < pivmin { -pivmin } else { q };
        let mut dp = vec![0.0; n];
        let mut dm = vec![0.0; n];
        dp[0] = guard(self.diag[0] - lambda);
        for i in 1..n {
            dp[i] = guard(self.diag[i] - lambda - self.off[i - 1] * self.off[i - 1] / dp[i - 1]);
        }
        dm[n - 1] = guard(self.diag[n - 1] - lambda);
        for i in (0..n - 1).rev() {
            dm[i] = guard(self.diag[i] - lambda - self.off[i] * self.off[i] / dm[i + 1]);
        }
        let r = (0..n)
            .min_by(|&a, &b| {
                let ga = (dp[a] + dm[a] - (self.diag[a] - lambda)).abs();
                let gb = (dp[b] + dm[b] - (self.diag[b] - lambda)).abs();
                ga.total_cmp(&gb)
            })
            .expect("non-empty");
        let mut z = vec![0.0; n];
        z[r] = 1.0;
        for i in (0..r).rev() {
            z[i] = -self.off[i] / dp[i] * z[i + 1];
        }
        for i in r + 1..n {
            z[i] = -self.off[i - 1] / dm[i] * z[i - 1];
        }
        if normalize(&mut z) == 0.0 || z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Eigensolver("twisted factorization broke down".into()));
        }
        Ok(z)
    }

    fn inverse_iteration(&self, lambda: f64, salt: u64, cluster: &[Vec<f64>]) -> Result<Vec<f64>> {
        let n = self.n();
        let lu = ShiftedLu::new(self, lambda);
        let mut x: Vec<f64> = (0..n as u64)
            .map(|i| {
                let r = splitmix64(i ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
                (r >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect();
        normalize(&mut x);
        let mut residual = f64::INFINITY;
        let mut tmp = vec![0.0; n];
        for _ in 0..8 {
            lu.solve(&mut x);
            for c in cluster {
                let p = dot(&x, c);
                for (xi, ci) in x.iter_mut().zip(c) {
                    *xi -= p * ci;
                }
            }
            if normalize(&mut x) == 0.0 {
                return Err(Error::Eigensolver("inverse iteration collapsed".into()));
            }
            self.matvec(&x, &mut tmp);
            residual = tmp.iter().zip(&x).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
            if residual <= 1e-13 * self.norm_bound() {
                break;
            }
        }
        if !residual.is_finite() {
            return Err(Error::Eigensolver("non-finite inverse iterate".into()));
        }
        Ok(x)
    }
}

/// LU factorization with partial pivoting of `T − λI`.
struct ShiftedLu {
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    dl: Vec<f64>,
    swap: Vec<bool>,
}

impl ShiftedLu {
    fn new(t: &SymTridiagonal, lambda: f64) -> Self {
        let n = t.n();
        let tiny = f64::EPSILON * t.norm_bound();
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - lambda).collect();
        let mut du = t.off.clone();
        let mut dl = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                let f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                let tmp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = tmp - f * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -f;
                }
                swap[i] = true;
            }
        }
        for v in d.iter_mut() {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        Self { d, du, du2, dl, swap }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                let t = b[i];
                b[i] = b[i + 1];
                b[i + 1] = t - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(x: &mut [f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return 0.0;
    }
    for v in x.iter_mut() {
        *v /= scale;
    }
    let nrm = dot(x, x).sqrt();
    for v in x.iter_mut() {
        *v /= nrm;
    }
    nrm * scale
}

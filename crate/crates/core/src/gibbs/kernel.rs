use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::PotentialSpec;
use crate::schrodinger::{spectrum, GroundState, SpectralData, ZGrid};

/// Largest admissible weight `e^{−t(λ_k − λ₀)}` of the first dropped mode.
pub const TRUNCATION_TOL: f64 = 1e-10;

/// `Σ_{j<k} e^{−t(λ_j−λ₀)} φ_j(z1) φ_j(z2)`, the kernel of `e^{−t(H−λ₀)}`.
pub fn fk_kernel(spectral: &SpectralData, t: f64, z1: f64, z2: f64) -> Result<f64> {
    check_truncation(spectral, t)?;
    let g = &spectral.grid;
    let l0 = spectral.eigenvalues[0];
    Ok(spectral
        .eigenvalues
        .iter()
        .zip(&spectral.eigenvectors)
        .map(|(l, phi)| (-t * (l - l0)).exp() * g.interpolate(phi, z1) * g.interpolate(phi, z2))
        .sum())
}

/// Truncation estimate from the last retained mode; errors if it is above
/// [`TRUNCATION_TOL`] and the expansion is not complete.
pub fn check_truncation(spectral: &SpectralData, t: f64) -> Result<f64> {
    if spectral.k() < 2 {
        return Err(Error::InvalidParameter("the kernel needs at least two modes".into()));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("kernel time must be positive, got {t}")));
    }
    let l0 = spectral.eigenvalues[0];
    let estimate = (-t * (spectral.eigenvalues[spectral.k() - 1] - l0)).exp();
    if estimate > TRUNCATION_TOL && spectral.k() < spectral.grid.n {
        return Err(Error::KernelTruncation { t, estimate });
    }
    Ok(estimate)
}

/// Kernel values on all node pairs, row-major.
pub fn fk_matrix(spectral: &SpectralData, t: f64) -> Result<Vec<f64>> {
    check_truncation(spectral, t)?;
    let n = spectral.grid.n;
    let l0 = spectral.eigenvalues[0];
    let mut out = vec![0.0; n * n];
    for (l, phi) in spectral.eigenvalues.iter().zip(&spectral.eigenvectors) {
        let w = (-t * (l - l0)).exp();
        for i in 0..n {
            let wi = w * phi[i];
            let row = &mut out[i * n..(i + 1) * n];
            for (o, p) in row.iter_mut().zip(phi) {
                *o += wi * p;
            }
        }
    }
    Ok(out)
}

/// Number of modes needed so that the first dropped one has weight below
/// [`TRUNCATION_TOL`] at time `t`.
pub fn modes_for(spec: &PotentialSpec, grid: &ZGrid, t: f64) -> Result<usize> {
    let m = crate::schrodinger::assemble(spec, grid)?;
    let l0 = m.eigenvalue(0)?;
    let threshold = l0 - TRUNCATION_TOL.ln() / t;
    Ok((m.count_below(threshold) + 1).clamp(2, grid.n))
}

/// Ground-state transformed transition density
/// `q(t, z_i, z_j) = fk(t, z_i, z_j) Ω(z_j)/Ω(z_i)` with respect to `dz`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransferKernel {
    pub t: f64,
    pub spectral: SpectralData,
    /// row-major `q(t, z_i, z_j)`
    pub q: Vec<f64>,
    /// stationary-weighted mass of negative entries removed by clamping
    pub clamped_mass: f64,
    pub truncation_estimate: f64,
    #[serde(skip)]
    cum: Vec<f64>,
}

impl TransferKernel {
    pub fn new(spec: &PotentialSpec, grid: &ZGrid, t: f64) -> Result<Self> {
        let k = modes_for(spec, grid, t)?;
        Self::from_spectral(spectrum(spec, grid, k)?, t)
    }

    pub fn from_spectral(spectral: SpectralData, t: f64) -> Result<Self> {
        let truncation_estimate = check_truncation(&spectral, t)?;
        let n = spectral.grid.n;
        let h = spectral.grid.spacing();
        let omega = &spectral.eigenvectors[0];
        let mut q = fk_matrix(&spectral, t)?;
        let mut clamped_mass = 0.0;
        for i in 0..n {
            let row = &mut q[i * n..(i + 1) * n];
            let mut negative = 0.0;
            let mut total = 0.0;
            for (j, v) in row.iter_mut().enumerate() {
                *v *= omega[j] / omega[i];
                if *v < 0.0 {
                    negative -= *v;
                    *v = 0.0;
                }
                total += *v * h;
            }
            clamped_mass += omega[i] * omega[i] * h * negative * h;
            if total > 0.0 && total.is_finite() {
                row.iter_mut().for_each(|v| *v /= total);
            } else {
                // unreachable deep-tail row: hold in place
                row.iter_mut().for_each(|v| *v = 0.0);
                row[i] = 1.0 / h;
            }
        }
        let cum = cumulative_rows(&q, n, h);
        Ok(Self {
            t,
            spectral,
            q,
            clamped_mass,
            truncation_estimate,
            cum,
        })
    }

    pub fn grid(&self) -> &ZGrid {
        &self.spectral.grid
    }

    pub fn n(&self) -> usize {
        self.spectral.grid.n
    }

    #[inline]
    pub fn q(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n() + j]
    }

    pub fn omega(&self) -> &[f64] {
        &self.spectral.eigenvectors[0]
    }

    /// Largest `|Σ_j q(i, j) h − 1|` over rows.
    pub fn row_sum_defect(&self) -> f64 {
        let n = self.n();
        let h = self.grid().spacing();
        (0..n)
            .map(|i| (self.q[i * n..(i + 1) * n].iter().sum::<f64>() * h - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|Ω_i² q_ij − Ω_j² q_ji|`.
    pub fn detailed_balance_defect(&self) -> f64 {
        let n = self.n();
        let om = self.omega();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                let d = om[i] * om[i] * self.q(i, j) - om[j] * om[j] * self.q(j, i);
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// Draws the successor index of `i` from a uniform variate `u ∈ [0, 1)`.
    #[inline]
    pub(crate) fn step_index(&self, i: usize, u: f64) -> usize {
        let n = self.n();
        let row = &self.cum[i * n..(i + 1) * n];
        row.partition_point(|&c| c <= u).min(n - 1)
    }

    pub(crate) fn has_tables(&self) -> bool {
        !self.cum.is_empty()
    }

    pub(crate) fn ensure_cum(&mut self) {
        if self.cum.is_empty() {
            self.cum = cumulative_rows(&self.q, self.n(), self.grid().spacing());
        }
    }

    /// Checks that `gs` lives on the kernel's grid.
    pub(crate) fn check_ground_state(&self, gs: &GroundState) -> Result<()> {
        if gs.grid != *self.grid() {
            return Err(Error::InvalidParameter("ground state and kernel use different z-grids".into()));
        }
        Ok(())
    }
}

fn cumulative_rows(q: &[f64], n: usize, h: f64) -> Vec<f64> {
    let mut cum = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += q[i * n + j] * h;
            cum.push(acc);
        }
        let last = acc;
        for c in cum[i * n..].iter_mut() {
            *c /= last;
        }
    }
    cum
}

/// `Ω(z)²`, the one-point law of the path measure.
pub fn marginal_density(gs: &GroundState, z: f64) -> f64 {
    gs.omega_at(z).powi(2)
}

/// `p(z_i, z_j) = Ω(z_i) fk(t, z_i, z_j) Ω(z_j)`, the two-point density at
/// separation `t`, row-major on the grid.
pub fn two_point_density(spectral: &SpectralData, t: f64) -> Result<Vec<f64>> {
    let mut p = fk_matrix(spectral, t)?;
    let n = spectral.grid.n;
    let om = &spectral.eigenvectors[0];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] *= om[i] * om[j];
        }
    }
    Ok(p)
}

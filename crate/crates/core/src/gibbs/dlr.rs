use serde::{Deserialize, Serialize};

use super::kernel::{check_truncation, fk_matrix, TransferKernel};
use crate::error::{Error, Result};
use crate::potentials::PotentialSpec;
use crate::schrodinger::ZGrid;

/// Conditioning window `[t1, t2]` with boundary values `w(t1) = za`,
/// `w(t2) = zb`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DlrWindow {
    pub t1: f64,
    pub t2: f64,
    pub za: f64,
    pub zb: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DlrReport {
    pub n_inner: usize,
    pub trotter_step: f64,
    /// boundary values after snapping to the z-grid
    pub za: f64,
    pub zb: f64,
    /// `max |p_a − p_b| / max p_a` over the inner grid
    pub discrepancy: f64,
}

/// Compares the conditional law of `n_inner` equally spaced inner points
/// computed from the transfer kernel with the one built from Brownian-bridge
/// weights `exp(−∫U dx)`, the latter by a symmetric Trotter product with
/// step `trotter_step`.
pub fn dlr_check(
    kernel: &TransferKernel,
    spec: &PotentialSpec,
    window: DlrWindow,
    n_inner: usize,
    trotter_step: f64,
) -> Result<DlrReport> {
    if n_inner > 3 {
        return Err(Error::InvalidParameter("n_inner must be at most 3".into()));
    }
    if !(window.t2 > window.t1) {
        return Err(Error::InvalidParameter("window needs t2 > t1".into()));
    }
    let grid = *kernel.grid();
    let (ia, ib) = (nearest(&grid, window.za)?, nearest(&grid, window.zb)?);
    let seg = (window.t2 - window.t1) / (n_inner + 1) as f64;
    let m = (seg / trotter_step).round().max(1.0) as usize;
    if ((m as f64) * trotter_step - seg).abs() > 1e-9 * seg {
        return Err(Error::SpacingMismatch { grid: seg, kernel: trotter_step });
    }
    let mut report = DlrReport {
        n_inner,
        trotter_step,
        za: grid.node(ia),
        zb: grid.node(ib),
        discrepancy: 0.0,
    };
    if n_inner == 0 {
        return Ok(report);
    }
    let n = grid.n;
    let h = grid.spacing();

    check_truncation(&kernel.spectral, seg)?;
    let spectral_seg = fk_matrix(&kernel.spectral, seg)?;
    let spectral_full = fk_matrix(&kernel.spectral, window.t2 - window.t1)?;
    let pa = inner_density(&spectral_seg, n, ia, ib, n_inner, 1.0, spectral_full[ia * n + ib]);

    let step = trotter_matrix(spec, &grid, trotter_step)?;
    let seg_power = mat_pow(&step, n, m);
    let full_power = mat_pow(&seg_power, n, n_inner + 1);
    let z = full_power[ia * n + ib];
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::NonFinite("bridge normalization"));
    }
    // each Trotter factor carries one quadrature weight h
    let pb = inner_density(&seg_power, n, ia, ib, n_inner, h, z);

    let max_a = pa.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = pa.iter().zip(&pb).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    report.discrepancy = diff / max_a;
    Ok(report)
}

fn nearest(grid: &ZGrid, z: f64) -> Result<usize> {
    let t = ((z + grid.half_width) / grid.spacing()).round();
    if !(t >= 1.0 && t <= grid.n as f64) {
        return Err(Error::InvalidParameter(format!("boundary value {z} outside the z-grid")));
    }
    Ok(t as usize - 1)
}

/// `Π K(y_i, y_{i+1}) / (w^m · Z)` over all inner configurations, flattened
/// with the first inner point slowest.
fn inner_density(k: &[f64], n: usize, ia: usize, ib: usize, m: usize, w: f64, z: f64) -> Vec<f64> {
    let norm = 1.0 / (w.powi(m as i32) * z);
    match m {
        1 => (0..n).map(|y| k[ia * n + y] * k[y * n + ib] * norm).collect(),
        2 => {
            let mut out = Vec::with_capacity(n * n);
            for y1 in 0..n {
                let a = k[ia * n + y1] * norm;
                for y2 in 0..n {
                    out.push(a * k[y1 * n + y2] * k[y2 * n + ib]);
                }
            }
            out
        }
        _ => {
            let mut out = Vec::with_capacity(n * n * n);
            for y1 in 0..n {
                let a = k[ia * n + y1] * norm;
                for y2 in 0..n {
                    let b = a * k[y1 * n + y2];
                    for y3 in 0..n {
                        out.push(b * k[y2 * n + y3] * k[y3 * n + ib]);
                    }
                }
            }
            out
        }
    }
}

/// `diag(e^{−δU/2}) G_δ h diag(e^{−δU/2})` with the free heat kernel `G_δ`.
pub fn trotter_matrix(spec: &PotentialSpec, grid: &ZGrid, delta: f64) -> Result<Vec<f64>> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("Trotter step must be positive".into()));
    }
    let n = grid.n;
    let h = grid.spacing();
    let half: Vec<f64> = grid.nodes().iter().map(|&z| (-0.5 * delta * spec.u1(z)).exp()).collect();
    let c = h / (2.0 * std::f64::consts::PI * delta).sqrt();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = (i as f64 - j as f64) * h;
            k[i * n + j] = half[i] * c * (-d * d / (2.0 * delta)).exp() * half[j];
        }
    }
    Ok(k)
}

fn mat_mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        let ci = &mut c[i * n..(i + 1) * n];
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for (cij, bkj) in ci.iter_mut().zip(&b[k * n..(k + 1) * n]) {
                *cij += aik * bkj;
            }
        }
    }
    c
}

fn mat_pow(a: &[f64], n: usize, mut p: usize) -> Vec<f64> {
    let mut result: Option<Vec<f64>> = None;
    let mut base = a.to_vec();
    while p > 0 {
        if p & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => mat_mul(&r, &base, n),
            });
        }
        p >>= 1;
        if p > 0 {
            base = mat_mul(&base, &base, n);
        }
    }
    result.expect("positive power")
}

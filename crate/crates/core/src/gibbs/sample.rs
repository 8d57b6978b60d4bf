use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::TransferKernel;
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, stream_rng};
use crate::schrodinger::GroundState;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub x_points: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
}

/// Draws `(z(x₁), …, z(x_n))`: the first point from `Ω² dz`, the rest by the
/// transfer chain. Grid indices are sampled exactly; the reported values are
/// jittered uniformly within their cell.
pub fn sample_path(kernel: &TransferKernel, gs: &GroundState, x_grid: &[f64], seed: u64) -> Result<PathSample> {
    check_x_grid(kernel, x_grid)?;
    kernel.check_ground_state(gs)?;
    let mut k = std::borrow::Cow::Borrowed(kernel);
    if kernel_needs_cum(kernel) {
        k.to_mut().ensure_cum();
    }
    let start = StartTable::new(gs);
    let mut rng = stream_rng(seed, "gibbs-path", 0);
    Ok(draw(&k, &start, x_grid, seed, &mut rng))
}

/// `count` independent paths with per-path streams derived from `seed`.
pub fn sample_paths(kernel: &TransferKernel, gs: &GroundState, x_grid: &[f64], seed: u64, count: usize) -> Result<Vec<PathSample>> {
    check_x_grid(kernel, x_grid)?;
    kernel.check_ground_state(gs)?;
    let mut k = std::borrow::Cow::Borrowed(kernel);
    if kernel_needs_cum(kernel) {
        k.to_mut().ensure_cum();
    }
    let start = StartTable::new(gs);
    Ok((0..count)
        .into_par_iter()
        .map(|i| {
            let s = derive_seed(seed, "gibbs-replica", i as u64);
            let mut rng = stream_rng(s, "gibbs-path", 0);
            draw(&k, &start, x_grid, s, &mut rng)
        })
        .collect())
}

fn kernel_needs_cum(kernel: &TransferKernel) -> bool {
    // a deserialized kernel carries no sampling tables
    !kernel.has_tables()
}

fn check_x_grid(kernel: &TransferKernel, x_grid: &[f64]) -> Result<()> {
    if x_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    crate::error::ensure_finite(x_grid, "x-grid")?;
    for w in x_grid.windows(2) {
        let dx = w[1] - w[0];
        if (dx - kernel.t).abs() > 1e-9 * kernel.t.max(1.0) {
            return Err(Error::SpacingMismatch { grid: dx, kernel: kernel.t });
        }
    }
    Ok(())
}

struct StartTable {
    cum: Vec<f64>,
}

impl StartTable {
    fn new(gs: &GroundState) -> Self {
        let mut acc = 0.0;
        let mut cum: Vec<f64> = gs
            .omega
            .iter()
            .map(|o| {
                acc += o * o;
                acc
            })
            .collect();
        cum.iter_mut().for_each(|c| *c /= acc);
        Self { cum }
    }

    fn draw(&self, u: f64) -> usize {
        self.cum.partition_point(|&c| c <= u).min(self.cum.len() - 1)
    }
}

fn draw(kernel: &TransferKernel, start: &StartTable, x_grid: &[f64], seed: u64, rng: &mut ChaCha8Rng) -> PathSample {
    let g = kernel.grid();
    let h = g.spacing();
    let mut idx = start.draw(rng.random());
    let mut values = Vec::with_capacity(x_grid.len());
    for step in 0..x_grid.len() {
        if step > 0 {
            idx = kernel.step_index(idx, rng.random());
        }
        values.push(g.node(idx) + h * (rng.random::<f64>() - 0.5));
    }
    PathSample {
        x_points: x_grid.to_vec(),
        values,
        seed,
    }
}

/// Uniform grid `x₀, x₀ + t, …` with `n` points.
pub fn uniform_x_grid(x0: f64, t: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| x0 + t * i as f64).collect()
}

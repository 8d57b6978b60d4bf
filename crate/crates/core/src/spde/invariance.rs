use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lattice::{evolve_final, Boundary, LatticeField, LatticeGeometry, NoisePath, SpdeConfig};
use crate::error::{Error, Result};
use crate::numerics::{derive_seed, ks_one_sample, ks_two_sample, stream_rng, CellCdf};
use crate::potentials::PotentialSpec;
use crate::schrodinger::ZGrid;

/// The lattice Gibbs measure
/// `π ∝ exp(−Σ (x_{i+1} − x_i)²/(2h) − h Σ U(x_i))`
/// (with `x₀²/(2h)` and `x_{n−1}²/(2h)` edge terms under Dirichlet ghosts),
/// discretized on a z-grid and sampled by forward filtering, backward
/// sampling.
pub struct LatticeGibbs {
    pub geometry: LatticeGeometry,
    pub zgrid: ZGrid,
    transfer: Vec<f64>,
    /// normalized forward messages, one row per site
    forward: Vec<f64>,
    marginals: Vec<f64>,
}

impl LatticeGibbs {
    pub fn new(spec: &PotentialSpec, geometry: LatticeGeometry, zgrid: ZGrid) -> Result<Self> {
        if spec.dim != 1 {
            return Err(Error::Unsupported("lattice Gibbs sampling needs a scalar field".into()));
        }
        geometry.validate()?;
        zgrid.validate()?;
        let h = geometry.spacing();
        let nz = zgrid.n;
        let dz = zgrid.spacing();
        if dz > 0.25 * h.sqrt() {
            return Err(Error::InvalidParameter(format!(
                "z-spacing {dz} too coarse for the nearest-neighbour coupling width {}",
                h.sqrt()
            )));
        }
        let nodes = zgrid.nodes();
        let mut transfer = vec![0.0; nz * nz];
        for a in 0..nz {
            for b in 0..nz {
                let d = nodes[a] - nodes[b];
                transfer[a * nz + b] = (-d * d / (2.0 * h)).exp();
            }
        }
        let umin = nodes.iter().map(|&z| spec.u1(z)).fold(f64::INFINITY, f64::min);
        let bulk: Vec<f64> = nodes.iter().map(|&z| (-h * (spec.u1(z) - umin)).exp()).collect();
        let n = geometry.n_sites;
        let mut weights = vec![bulk.clone(); n];
        if geometry.boundary == Boundary::Dirichlet {
            for &i in &[0, n - 1] {
                for (w, &z) in weights[i].iter_mut().zip(&nodes) {
                    *w *= (-z * z / (2.0 * h)).exp();
                }
            }
        }
        let mut forward = vec![0.0; n * nz];
        forward[..nz].copy_from_slice(&weights[0]);
        normalize(&mut forward[..nz]);
        for i in 1..n {
            let (prev, cur) = forward.split_at_mut(i * nz);
            let prev = &prev[(i - 1) * nz..];
            let cur = &mut cur[..nz];
            for a in 0..nz {
                let pa = prev[a];
                if pa == 0.0 {
                    continue;
                }
                for (c, t) in cur.iter_mut().zip(&transfer[a * nz..(a + 1) * nz]) {
                    *c += pa * t;
                }
            }
            for (c, w) in cur.iter_mut().zip(&weights[i]) {
                *c *= w;
            }
            normalize(cur);
        }
        // backward messages give all site marginals in one sweep
        let mut marginals = vec![0.0; n * nz];
        let mut beta = vec![1.0; nz];
        let mut wb = vec![0.0; nz];
        for i in (0..n).rev() {
            if i + 1 < n {
                for ((v, b), w) in wb.iter_mut().zip(&beta).zip(&weights[i + 1]) {
                    *v = b * w;
                }
                for (a, slot) in beta.iter_mut().enumerate() {
                    *slot = transfer[a * nz..(a + 1) * nz].iter().zip(&wb).map(|(t, v)| t * v).sum();
                }
                normalize(&mut beta);
            }
            let m = &mut marginals[i * nz..(i + 1) * nz];
            for ((slot, f), b) in m.iter_mut().zip(&forward[i * nz..(i + 1) * nz]).zip(&beta) {
                *slot = f * b;
            }
            normalize(m);
        }
        let g = Self {
            geometry,
            zgrid,
            transfer,
            forward,
            marginals,
        };
        let wall = g.max_wall_mass();
        if wall > 1e-8 {
            return Err(Error::InsufficientRange(format!("site marginal mass {wall:e} at the z-grid walls")));
        }
        Ok(g)
    }

    fn max_wall_mass(&self) -> f64 {
        let nz = self.zgrid.n;
        self.marginals
            .chunks(nz)
            .map(|m| m[0].max(m[nz - 1]).max(m[1]).max(m[nz - 2]))
            .fold(0.0, f64::max)
    }

    /// z-window `[−7, 7]` resolving the nearest-neighbour coupling width.
    pub fn default_zgrid(geometry: &LatticeGeometry) -> Result<ZGrid> {
        let dz = 0.2 * geometry.spacing().sqrt();
        let half = 7.0;
        ZGrid::new(half, (2.0 * half / dz).ceil() as usize)
    }

    /// Exact site marginal of the discretized measure, as node masses.
    pub fn site_marginal(&self, site: usize) -> Vec<f64> {
        let nz = self.zgrid.n;
        self.marginals[site * nz..(site + 1) * nz].to_vec()
    }

    /// Site variance of the discretized measure.
    pub fn site_variance(&self, site: usize) -> f64 {
        let m = self.site_marginal(site);
        let nodes = self.zgrid.nodes();
        let mean: f64 = m.iter().zip(&nodes).map(|(p, z)| p * z).sum();
        m.iter().zip(&nodes).map(|(p, z)| p * (z - mean) * (z - mean)).sum()
    }

    /// One configuration; values jittered uniformly within their z-cell.
    pub fn sample(&self, seed: u64) -> LatticeField {
        let nz = self.zgrid.n;
        let n = self.geometry.n_sites;
        let dz = self.zgrid.spacing();
        let mut rng = stream_rng(seed, "lattice-gibbs", 0);
        let mut idx = vec![0usize; n];
        let mut cum = vec![0.0; nz];
        idx[n - 1] = draw(&self.forward[(n - 1) * nz..], &mut cum, rng.random());
        for i in (0..n - 1).rev() {
            let next = idx[i + 1];
            let f = &self.forward[i * nz..(i + 1) * nz];
            let mut acc = 0.0;
            for (a, c) in cum.iter_mut().enumerate() {
                acc += f[a] * self.transfer[a * nz + next];
                *c = acc;
            }
            idx[i] = pick(&cum, rng.random());
        }
        let values = idx.iter().map(|&k| self.zgrid.node(k) + dz * (rng.random::<f64>() - 0.5)).collect();
        LatticeField::new(self.geometry, values).expect("finite sample")
    }
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
}

fn draw(p: &[f64], cum: &mut [f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (c, &q) in cum.iter_mut().zip(p) {
        acc += q;
        *c = acc;
    }
    pick(cum, u)
}

fn pick(cum: &[f64], u: f64) -> usize {
    let target = u * cum[cum.len() - 1];
    cum.partition_point(|&c| c <= target).min(cum.len() - 1)
}

/// `count` independent draws with per-replica streams.
pub fn lattice_gibbs_sampler(
    spec: &PotentialSpec,
    geometry: LatticeGeometry,
    zgrid: ZGrid,
    seed: u64,
    count: usize,
) -> Result<Vec<LatticeField>> {
    let g = LatticeGibbs::new(spec, geometry, zgrid)?;
    Ok((0..count)
        .into_par_iter()
        .map(|k| g.sample(derive_seed(seed, "gibbs-replica", k as u64)))
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub n_replicas: usize,
    pub t_final: f64,
    /// sites with `|x| ≤ L/2` pooled
    pub pooled_sites: usize,
    /// two-sample KS between pooled values at time 0 and `t_final`
    pub ks: f64,
    /// one-sample KS of the final values against the exact pooled marginal
    pub ks_exact: f64,
    pub variance_initial: f64,
    pub variance_final: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Starts replicas from the lattice Gibbs measure, evolves each with its
/// own noise and compares the interior site marginals before and after.
pub fn invariance_test(
    spec: &PotentialSpec,
    config: &SpdeConfig,
    geometry: LatticeGeometry,
    zgrid: ZGrid,
    seed: u64,
    n_replicas: usize,
    tol: f64,
) -> Result<InvarianceReport> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("KS tolerance must be positive".into()));
    }
    // two-sample KS at the 95% level: 1.36 √(2/n) ≤ tol
    let needed = (2.0 * (1.36 / tol).powi(2)).ceil() as usize;
    if n_replicas < needed {
        return Err(Error::InsufficientReplicas {
            needed,
            got: n_replicas,
            tol,
        });
    }
    let gibbs = LatticeGibbs::new(spec, geometry, zgrid)?;
    let interior: Vec<usize> = (0..geometry.n_sites)
        .filter(|&i| geometry.site(i).abs() <= 0.5 * geometry.half_width)
        .collect();
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..n_replicas)
        .into_par_iter()
        .map(|k| {
            let w0 = gibbs.sample(derive_seed(seed, "gibbs-replica", k as u64));
            let noise = NoisePath::for_run(derive_seed(seed, "invariance-noise", k as u64), config, &geometry);
            let w1 = evolve_final(&w0, spec, config, &noise)?;
            Ok((
                interior.iter().map(|&i| w0.values[i]).collect(),
                interior.iter().map(|&i| w1.values[i]).collect(),
            ))
        })
        .collect::<Result<_>>()?;
    let initial: Vec<f64> = pairs.iter().flat_map(|p| p.0.iter().cloned()).collect();
    let finals: Vec<f64> = pairs.iter().flat_map(|p| p.1.iter().cloned()).collect();

    let mut pooled = vec![0.0; zgrid.n];
    for &i in &interior {
        for (p, m) in pooled.iter_mut().zip(gibbs.site_marginal(i)) {
            *p += m / interior.len() as f64;
        }
    }
    let cdf = CellCdf::new(zgrid.node(0), zgrid.spacing(), &pooled);
    let ks = ks_two_sample(&initial, &finals);
    let var = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
    };
    Ok(InvarianceReport {
        n_replicas,
        t_final: config.t_final,
        pooled_sites: interior.len(),
        ks,
        ks_exact: ks_one_sample(&finals, |z| cdf.eval(z)),
        variance_initial: var(&initial),
        variance_final: var(&finals),
        tol,
        pass: ks < tol,
    })
}

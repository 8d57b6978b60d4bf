//! Lattice stochastic heat equation `dX = ½(ΔX − ∇̃U(X)) dt + dB` with
//! weighted norms, pathwise coupling and invariance checks.

mod coupling;
mod invariance;
mod lattice;
mod weight;

pub use coupling::{coupling_test, CouplingReport};
pub use invariance::{invariance_test, lattice_gibbs_sampler, InvarianceReport, LatticeGibbs};
pub use lattice::{
    evolve, evolve_final, step, weighted_norm, Boundary, LatticeField, LatticeGeometry, NoiseCursor, NoisePath, NormKind,
    SpdeConfig, SpdeScheme, Stepper, Trajectory,
};
pub use weight::{check_chi, chi, heat_weight_bound_check, ChiReport, HeatRatio, HeatWeightReport, InterpolationRow, WeightSpec};

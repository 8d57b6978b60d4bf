//! Path-space Gibbs measure of the one-dimensional model: transfer kernel,
//! exact path sampling, DLR and quasi-invariance checks, tail estimates.

mod dlr;
mod kernel;
mod quasi;
mod sample;
mod tail;

pub use dlr::{dlr_check, trotter_matrix, DlrReport, DlrWindow};
pub use kernel::{
    check_truncation, fk_kernel, fk_matrix, marginal_density, modes_for, two_point_density, TransferKernel,
    TRUNCATION_TOL,
};
pub use quasi::{log_quasi_invariance_density, quasi_invariance_density, BumpShift, Shift};
pub use sample::{sample_path, sample_paths, uniform_x_grid, PathSample};
pub use tail::{tail_bound_check, TailReport};

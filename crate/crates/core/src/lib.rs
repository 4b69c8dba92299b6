//! Density tracking by quadrature (DTQ) for scalar SDEs
//! `dX_t = f(X_t) dt + g(X_t) dW_t`, a finite-difference Fokker-Planck
//! baseline, closed-form test problems and the experiment harness.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod fp;
pub mod grid;
pub mod harness;
pub mod kernel;
pub mod metrics;
pub mod problem;
pub mod tracking;
pub mod tridiag;

pub use density::DensityVector;
pub use error::{DtqError, Result};
pub use fp::{fp_solve, fp_solve_with, heat_kernel_u, FpScheme, FpWorkspace, DEFAULT_KAPPA};
pub use grid::{select_grid, DomainRule, GridSpec};
pub use harness::{
    fit_slope, run_benchmark, run_convergence, solve, solve_on_grid, ConvergenceTable,
    DomainChoice, Method, RunRecord, SolveOptions,
};
pub use kernel::{
    assemble, assemble_banded, assemble_banded_with, assemble_dense, gaussian_kernel, AssemblyMode,
    BandNorm, KernelMatrix, DEFAULT_DROP_TOL,
};
pub use metrics::{cdf_on_grid, ks_error, l1_error, linf_error, ErrorReport};
pub use problem::{
    builtin_problems, exact_density_on_grid, problem_by_name, problem_names, SdeProblem,
};
pub use tracking::{evolve, evolve_on_grid, initial_density, step, DtqConfig};

//! Density tracking by quadrature: start from the analytic one-step density
//! `p(x, t_1) = G(x, C)` and apply the truncated trapezoidal Chapman-Kolmogorov
//! map `p^{n+1} = A p^n` until `t_N = T`.

use std::f64::consts::PI;

use crate::density::DensityVector;
use crate::error::{DtqError, Result};
use crate::grid::{select_grid, DomainRule, GridSpec};
use crate::kernel::{assemble, AssemblyMode, KernelMatrix, DEFAULT_DROP_TOL};
use crate::problem::SdeProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtqConfig {
    pub horizon: f64,
    pub h: f64,
    pub rho: f64,
    pub r1: f64,
    pub domain_rule: DomainRule,
    pub mode: AssemblyMode,
    pub drop_tol: f64,
}

impl Default for DtqConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            h: 0.01,
            rho: 0.75,
            r1: 1.0,
            domain_rule: DomainRule::PolynomialPi,
            mode: AssemblyMode::Banded,
            drop_tol: DEFAULT_DROP_TOL,
        }
    }
}

/// `G(x_j, C)` on the grid, labelled with time index 1.
pub fn initial_density(grid: &GridSpec, problem: &SdeProblem) -> Result<DensityVector> {
    let c = problem.initial_point();
    let g = problem.diffusion(c);
    let var = g * g * grid.h();
    if !(var > 0.0 && var.is_finite()) {
        return Err(DtqError::ZeroDiffusion(c));
    }
    let mean = c + problem.drift(c) * grid.h();
    let scale = 1.0 / (2.0 * PI * var).sqrt();
    let values = grid
        .nodes()
        .map(|x| {
            let z = x - mean;
            scale * (-(z * z) / (2.0 * var)).exp()
        })
        .collect();
    Ok(DensityVector::new(values, *grid, 1))
}

/// One application of the kernel.
pub fn step(density: &DensityVector, kernel: &KernelMatrix) -> Result<DensityVector> {
    if density.grid() != kernel.grid() {
        return Err(DtqError::GridMismatch(format!(
            "density grid {:?} vs kernel grid {:?}",
            density.grid(),
            kernel.grid()
        )));
    }
    let values = kernel.apply(density.values())?;
    Ok(DensityVector::new(
        values,
        *density.grid(),
        density.time_index() + 1,
    ))
}

/// Logs advisory warnings about parameter choices outside the regime the
/// convergence theory covers. Never alters the computation.
fn check_regime(grid: &GridSpec, problem: &SdeProblem) {
    let c = problem.initial_point();
    if c.abs() > 0.5 * grid.y_max() {
        log::warn!(
            "{}: |C| = {} exceeds half the domain half-width {}",
            problem.name(),
            c.abs(),
            grid.y_max()
        );
    }
    let g_min = grid
        .nodes()
        .map(|x| problem.diffusion(x).abs())
        .fold(f64::INFINITY, f64::min);
    let k_max = 2.0 * PI / 2f64.ln().sqrt() * g_min * grid.h().sqrt();
    if grid.k() > k_max {
        log::warn!(
            "{}: k = {} exceeds 2 pi (ln 2)^(-1/2) min|g| h^(1/2) = {}",
            problem.name(),
            grid.k(),
            k_max
        );
    }
}

/// Runs DTQ to `t_N` on a caller-supplied grid with a kernel assembled once.
pub fn evolve_on_grid(
    problem: &SdeProblem,
    grid: &GridSpec,
    mode: AssemblyMode,
    drop_tol: f64,
) -> Result<DensityVector> {
    check_regime(grid, problem);
    let mut density = initial_density(grid, problem)?;
    if grid.steps() == 1 {
        return Ok(density);
    }
    let kernel = assemble(grid, problem, mode, drop_tol)?;
    for _ in 1..grid.steps() {
        density = step(&density, &kernel)?;
    }
    Ok(density)
}

/// Selects the grid from `config` and runs DTQ to `T`.
pub fn evolve(problem: &SdeProblem, config: &DtqConfig) -> Result<DensityVector> {
    let grid = select_grid(
        config.h,
        config.horizon,
        config.rho,
        config.r1,
        config.domain_rule,
    )?;
    evolve_on_grid(problem, &grid, config.mode, config.drop_tol)
}

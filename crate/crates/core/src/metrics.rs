//! Discrete error norms between two densities on the same grid.

use crate::density::DensityVector;
use crate::error::{DtqError, Result};
use crate::grid::GridSpec;
use crate::problem::{exact_density_on_grid, SdeProblem};

fn check_grids(a: &DensityVector, b: &DensityVector) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(DtqError::GridMismatch(format!(
            "{:?} vs {:?}",
            a.grid(),
            b.grid()
        )));
    }
    Ok(())
}

/// `k * sum_j |a_j - b_j|`.
pub fn l1_error(a: &DensityVector, b: &DensityVector) -> Result<f64> {
    check_grids(a, b)?;
    let s: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .sum();
    Ok(a.grid().k() * s)
}

/// `max_j |a_j - b_j|`.
pub fn linf_error(a: &DensityVector, b: &DensityVector) -> Result<f64> {
    check_grids(a, b)?;
    Ok(a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Left-Riemann CDF: `F_j = k * sum_{i <= j} p_i`.
pub fn cdf_on_grid(d: &DensityVector) -> Vec<f64> {
    let k = d.grid().k();
    let mut acc = 0.0;
    d.values()
        .iter()
        .map(|v| {
            acc += v;
            k * acc
        })
        .collect()
}

/// Sup-norm distance between the two on-grid CDFs.
pub fn ks_error(a: &DensityVector, b: &DensityVector) -> Result<f64> {
    check_grids(a, b)?;
    let fa = cdf_on_grid(a);
    let fb = cdf_on_grid(b);
    Ok(fa
        .iter()
        .zip(&fb)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub problem: String,
    pub grid: GridSpec,
    pub l1: f64,
    pub linf: f64,
    pub ks: f64,
    pub normalization_defect: f64,
}

impl ErrorReport {
    pub const CSV_HEADER: &'static str = "problem,h,k,M,l1,linf,ks,norm_defect";

    /// Compares `approx` with the closed-form density at time `t_N`.
    pub fn against_exact(problem: &SdeProblem, approx: &DensityVector) -> Result<Self> {
        let exact = exact_density_on_grid(problem, approx.grid(), approx.time())?;
        Self::between(problem.name(), approx, &exact)
    }

    pub fn between(name: &str, approx: &DensityVector, reference: &DensityVector) -> Result<Self> {
        Ok(Self {
            problem: name.to_string(),
            grid: *approx.grid(),
            l1: l1_error(approx, reference)?,
            linf: linf_error(approx, reference)?,
            ks: ks_error(approx, reference)?,
            normalization_defect: approx.normalization_defect(),
        })
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.problem,
            self.grid.h(),
            self.grid.k(),
            self.grid.half_width(),
            self.l1,
            self.linf,
            self.ks,
            self.normalization_defect
        )
    }
}

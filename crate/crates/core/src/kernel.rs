//! The Euler-Maruyama transition kernel and the DTQ operator matrix
//! `A_{ij} = k G(x_i, y_j)`.
//!
//! Three assembly strategies are provided. Dense serial and dense parallel
//! fill every entry and produce bitwise identical matrices. Banded assembly
//! fills the main diagonal and then subdiagonals `i' = 1, 2, ...` until the
//! 1-norm of a subdiagonal falls below `drop_tol` times the 1-norm of the main
//! diagonal; the same number of superdiagonals is then filled and everything
//! outside the band is treated as zero.
//!
//! The 1-norms used by the stopping test are selected by [`BandNorm`]. With
//! [`BandNorm::Raw`] they are taken over the stored entries. With
//! [`BandNorm::PeakNormalized`] (the default) each column is divided by its
//! Gaussian peak `k (2 pi g^2(y_j) h)^{-1/2}` first, so columns with a tiny
//! diffusion coefficient cannot dominate the main-diagonal norm. For constant
//! `g` the two tests are the same.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;

use crate::error::{DtqError, Result};
use crate::grid::GridSpec;
use crate::problem::SdeProblem;

/// Default relative 1-norm below which a subdiagonal ends the band.
pub const DEFAULT_DROP_TOL: f64 = 2.2e-16;

/// Column weighting used by the banded stopping test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BandNorm {
    /// Sum of stored entries.
    Raw,
    /// Sum of entries divided by their column's Gaussian peak.
    #[default]
    PeakNormalized,
}

/// Transition density of one Euler-Maruyama step from `y` to `x`:
/// a Gaussian with mean `y + f(y) h` and variance `g(y)^2 h`.
pub fn gaussian_kernel(x: f64, y: f64, h: f64, problem: &SdeProblem) -> Result<f64> {
    if !(h > 0.0) {
        return Err(DtqError::InvalidParams(format!(
            "h must be positive, got {h}"
        )));
    }
    let col = Column::at(y, h, 1.0, problem).ok_or(DtqError::ZeroDiffusion(y))?;
    Ok(col.eval(x - y))
}

/// Per-source-node kernel parameters. `scale` absorbs the quadrature weight.
#[derive(Debug, Clone, Copy)]
struct Column {
    shift: f64,
    two_var: f64,
    scale: f64,
}

impl Column {
    fn at(y: f64, h: f64, weight: f64, problem: &SdeProblem) -> Option<Self> {
        let g = problem.diffusion(y);
        let var = g * g * h;
        if !(var > 0.0 && var.is_finite()) {
            return None;
        }
        Some(Self {
            shift: problem.drift(y) * h,
            two_var: 2.0 * var,
            scale: weight / (PI * 2.0 * var).sqrt(),
        })
    }

    /// Kernel value at displacement `dx = x - y`.
    #[inline]
    fn eval(&self, dx: f64) -> f64 {
        let z = dx - self.shift;
        self.scale * (-(z * z) / self.two_var).exp()
    }
}

fn columns(grid: &GridSpec, problem: &SdeProblem) -> Result<Vec<Column>> {
    (0..grid.len())
        .map(|j| {
            Column::at(grid.node(j), grid.h(), grid.k(), problem)
                .ok_or(DtqError::ZeroDiffusionAtNode(grid.node_index(j)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AssemblyMode {
    DenseSerial,
    DenseParallel,
    Banded,
}

impl fmt::Display for AssemblyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssemblyMode::DenseSerial => "dense-serial",
            AssemblyMode::DenseParallel => "dense-parallel",
            AssemblyMode::Banded => "banded",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelStorage {
    /// Row-major `n x n`.
    Dense(Vec<f64>),
    /// `diagonals[bandwidth + d]` holds offset `d = i - j` for `-b <= d <= b`.
    /// Offset `d >= 0` is indexed by column `j` (rows `j + d`); offset
    /// `d < 0` is indexed by row `i` (columns `i - d`).
    Banded {
        bandwidth: usize,
        diagonals: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    grid: GridSpec,
    storage: KernelStorage,
    mode: AssemblyMode,
    band_overflow: bool,
}

impl KernelMatrix {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn storage(&self) -> &KernelStorage {
        &self.storage
    }

    pub fn mode(&self) -> AssemblyMode {
        self.mode
    }

    /// Set when no subdiagonal met the drop rule and the full band was kept.
    pub fn band_overflow(&self) -> bool {
        self.band_overflow
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    /// Half-bandwidth `b` of the stored band; `n - 1` for dense storage.
    pub fn bandwidth(&self) -> usize {
        match &self.storage {
            KernelStorage::Dense(_) => self.dim().saturating_sub(1),
            KernelStorage::Banded { bandwidth, .. } => *bandwidth,
        }
    }

    /// Number of explicitly stored entries.
    pub fn stored_entries(&self) -> usize {
        match &self.storage {
            KernelStorage::Dense(a) => a.len(),
            KernelStorage::Banded { diagonals, .. } => diagonals.iter().map(Vec::len).sum(),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let n = self.dim();
        assert!(i < n && j < n, "entry ({i}, {j}) out of range for n = {n}");
        match &self.storage {
            KernelStorage::Dense(a) => a[i * n + j],
            KernelStorage::Banded {
                bandwidth,
                diagonals,
            } => {
                let d = i as i64 - j as i64;
                if d.unsigned_abs() as usize > *bandwidth {
                    0.0
                } else if d >= 0 {
                    diagonals[bandwidth + d as usize][j]
                } else {
                    diagonals[bandwidth - (-d) as usize][i]
                }
            }
        }
    }

    /// Diagonal at offset `d = i - j`, or `None` outside the stored band.
    pub fn diagonal(&self, d: i64) -> Option<Vec<f64>> {
        let n = self.dim() as i64;
        if d.abs() >= n {
            return None;
        }
        match &self.storage {
            KernelStorage::Dense(_) => {
                let (i0, j0) = if d >= 0 { (d, 0) } else { (0, -d) };
                Some(
                    (0..(n - d.abs()))
                        .map(|t| self.entry((i0 + t) as usize, (j0 + t) as usize))
                        .collect(),
                )
            }
            KernelStorage::Banded {
                bandwidth,
                diagonals,
            } => {
                let b = *bandwidth as i64;
                (d.abs() <= b).then(|| diagonals[(b + d) as usize].clone())
            }
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        match &self.storage {
            KernelStorage::Dense(a) => a.clone(),
            KernelStorage::Banded { .. } => {
                let mut out = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = self.entry(i, j);
                    }
                }
                out
            }
        }
    }

    /// `out = A p`. Dense-parallel matrices split rows across threads; every
    /// row is reduced in the same order regardless of the thread count.
    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if p.len() != n {
            return Err(DtqError::GridMismatch(format!(
                "vector of length {} against a {n}x{n} kernel",
                p.len()
            )));
        }
        let mut out = vec![0.0; n];
        match &self.storage {
            KernelStorage::Dense(a) => {
                if self.mode == AssemblyMode::DenseParallel {
                    out.par_iter_mut()
                        .zip(a.par_chunks_exact(n))
                        .for_each(|(o, row)| *o = dot(row, p));
                } else {
                    for (o, row) in out.iter_mut().zip(a.chunks_exact(n)) {
                        *o = dot(row, p);
                    }
                }
            }
            KernelStorage::Banded {
                bandwidth,
                diagonals,
            } => {
                let b = *bandwidth;
                for (slot, diag) in diagonals.iter().enumerate() {
                    if slot >= b {
                        let d = slot - b;
                        let (dst, src) = (&mut out[d..], &p[..n - d]);
                        for ((o, a), x) in dst.iter_mut().zip(diag).zip(src) {
                            *o += a * x;
                        }
                    } else {
                        let d = b - slot;
                        let (dst, src) = (&mut out[..n - d], &p[d..]);
                        for ((o, a), x) in dst.iter_mut().zip(diag).zip(src) {
                            *o += a * x;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Four-lane dot product; the summation order depends only on the length.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Dense `(2M+1)^2` assembly. `parallel` splits rows across the rayon pool.
pub fn assemble_dense(
    grid: &GridSpec,
    problem: &SdeProblem,
    parallel: bool,
) -> Result<KernelMatrix> {
    let cols = columns(grid, problem)?;
    let n = grid.len();
    let xs: Vec<f64> = grid.nodes().collect();
    let fill = |(i, row): (usize, &mut [f64])| {
        let x = xs[i];
        for ((a, col), y) in row.iter_mut().zip(&cols).zip(&xs) {
            *a = col.eval(x - y);
        }
    };
    let mut data = vec![0.0; n * n];
    if parallel {
        data.par_chunks_exact_mut(n).enumerate().for_each(fill);
    } else {
        data.chunks_exact_mut(n).enumerate().for_each(fill);
    }
    Ok(KernelMatrix {
        grid: *grid,
        storage: KernelStorage::Dense(data),
        mode: if parallel {
            AssemblyMode::DenseParallel
        } else {
            AssemblyMode::DenseSerial
        },
        band_overflow: false,
    })
}

/// Banded assembly by diagonals `A_{j+i', j} = k G(y_j + i'k, y_j)` with the
/// default [`BandNorm`].
pub fn assemble_banded(
    grid: &GridSpec,
    problem: &SdeProblem,
    drop_tol: f64,
) -> Result<KernelMatrix> {
    assemble_banded_with(grid, problem, drop_tol, BandNorm::default())
}

pub fn assemble_banded_with(
    grid: &GridSpec,
    problem: &SdeProblem,
    drop_tol: f64,
    band_norm: BandNorm,
) -> Result<KernelMatrix> {
    if !(drop_tol > 0.0) {
        return Err(DtqError::InvalidParams(format!(
            "drop_tol must be positive, got {drop_tol}"
        )));
    }
    let cols = columns(grid, problem)?;
    let n = grid.len();
    let k = grid.k();

    // Offset d >= 0: entries indexed by column j in 0..n-d.
    let sub = |d: usize| -> Vec<f64> {
        let dx = d as f64 * k;
        cols[..n - d].iter().map(|c| c.eval(dx)).collect()
    };
    // Offset -d: entries indexed by row i in 0..n-d, column i + d.
    let sup = |d: usize| -> Vec<f64> {
        let dx = -(d as f64) * k;
        cols[d..].iter().map(|c| c.eval(dx)).collect()
    };
    // Subdiagonal entries are indexed by column, so weights line up with `cols`.
    let norm = |v: &[f64]| -> f64 {
        match band_norm {
            BandNorm::Raw => v.iter().map(|x| x.abs()).sum(),
            BandNorm::PeakNormalized => v.iter().zip(&cols).map(|(x, c)| x.abs() / c.scale).sum(),
        }
    };

    let main = sub(0);
    let threshold = drop_tol * norm(&main);
    let mut lower = Vec::new();
    let mut band_overflow = true;
    for d in 1..n {
        let diag = sub(d);
        if norm(&diag) < threshold {
            band_overflow = false;
            break;
        }
        lower.push(diag);
    }
    if n == 1 {
        band_overflow = false;
    }
    if band_overflow {
        log::warn!(
            "no subdiagonal fell below drop_tol = {drop_tol}; keeping the full band of {} diagonals",
            2 * n - 1
        );
    }
    let bandwidth = lower.len();

    let mut diagonals: Vec<Vec<f64>> = (1..=bandwidth).rev().map(sup).collect();
    diagonals.push(main);
    diagonals.extend(lower);

    Ok(KernelMatrix {
        grid: *grid,
        storage: KernelStorage::Banded {
            bandwidth,
            diagonals,
        },
        mode: AssemblyMode::Banded,
        band_overflow,
    })
}

/// Dispatches on `mode`; `drop_tol` only matters for banded assembly.
pub fn assemble(
    grid: &GridSpec,
    problem: &SdeProblem,
    mode: AssemblyMode,
    drop_tol: f64,
) -> Result<KernelMatrix> {
    match mode {
        AssemblyMode::DenseSerial => assemble_dense(grid, problem, false),
        AssemblyMode::DenseParallel => assemble_dense(grid, problem, true),
        AssemblyMode::Banded => assemble_banded(grid, problem, drop_tol),
    }
}

//! Tridiagonal matrices and the Thomas algorithm.

use crate::error::{DtqError, Result};

/// `sub[i]` is entry `(i, i-1)` (ignored at `i = 0`), `sup[i]` is entry
/// `(i, i+1)` (ignored at `i = n-1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Self {
        assert!(
            sub.len() == diag.len() && sup.len() == diag.len(),
            "tridiagonal bands must share a length"
        );
        Self { sub, diag, sup }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.sup[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// `min_i |diag_i| - |sub_i| - |sup_i|`, counting only in-range neighbours.
    pub fn dominance_margin(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let lo = if i > 0 { self.sub[i].abs() } else { 0.0 };
                let hi = if i + 1 < n { self.sup[i].abs() } else { 0.0 };
                self.diag[i].abs() - lo - hi
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn factor(&self) -> Result<TridiagonalLu> {
        TridiagonalLu::new(self)
    }
}

/// LU factors without pivoting: `L` unit lower bidiagonal with multipliers
/// `lower`, `U` upper bidiagonal with diagonal `pivots` and the original
/// superdiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    pivots: Vec<f64>,
    sup: Vec<f64>,
}

impl TridiagonalLu {
    pub fn new(a: &Tridiagonal) -> Result<Self> {
        let n = a.len();
        let mut lower = vec![0.0; n];
        let mut pivots = vec![0.0; n];
        for i in 0..n {
            let mut d = a.diag[i];
            if i > 0 {
                lower[i] = a.sub[i] / pivots[i - 1];
                d -= lower[i] * a.sup[i - 1];
            }
            if !(d.abs() > f64::MIN_POSITIVE) || !d.is_finite() {
                return Err(DtqError::SingularTridiagonal(i));
            }
            pivots[i] = d;
        }
        Ok(Self {
            lower,
            pivots,
            sup: a.sup.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.pivots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pivots.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        for i in 1..n {
            rhs[i] -= self.lower[i] * rhs[i - 1];
        }
        if n == 0 {
            return;
        }
        rhs[n - 1] /= self.pivots[n - 1];
        for i in (0..n - 1).rev() {
            rhs[i] = (rhs[i] - self.sup[i] * rhs[i + 1]) / self.pivots[i];
        }
    }
}

//! Finite-difference Fokker-Planck baseline.
//!
//! The density is split as `p = u + v`, where `u` is the heat kernel with
//! diffusivity `kappa` (absorbing the delta initial condition) and `v`
//! solves the Fokker-Planck equation with zero initial data and the forcing
//! `F = 1/2 [(g^2 - kappa) u]_xx - [f u]_x`. Each step solves
//! `A V^{n+1} = B V^n + F^n` with implicit diffusion (`A`), explicit central
//! drift (`B`) and `V = 0` outside `|x| <= Mk`.
//!
//! Two linear-algebra schemes give the same iterates up to roundoff.
//! [`FpScheme::PrecomputedPropagator`] forms the dense `A^{-1} B` once and
//! applies it every step, reusing the LU factors of `A` for `A^{-1} F^n`.
//! [`FpScheme::Factored`] keeps everything tridiagonal and back-substitutes
//! `B V^n + F^n` each step.

use std::f64::consts::PI;

use crate::density::DensityVector;
use crate::error::{DtqError, Result};
use crate::grid::GridSpec;
use crate::problem::SdeProblem;
use crate::tridiag::{Tridiagonal, TridiagonalLu};

pub const DEFAULT_KAPPA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FpScheme {
    /// Dense `A^{-1} B`, `O(n^2)` per step.
    #[default]
    PrecomputedPropagator,
    /// Tridiagonal LU back-substitution, `O(n)` per step.
    Factored,
}

impl FpScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            FpScheme::PrecomputedPropagator => "propagator",
            FpScheme::Factored => "factored",
        }
    }
}

impl std::str::FromStr for FpScheme {
    type Err = DtqError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "propagator" => Ok(FpScheme::PrecomputedPropagator),
            "factored" => Ok(FpScheme::Factored),
            _ => Err(DtqError::InvalidParams(format!(
                "unknown FP scheme `{s}` (expected `propagator` or `factored`)"
            ))),
        }
    }
}

/// `(2 pi kappa t)^{-1/2} exp(-x^2 / (2 kappa t))`.
pub fn heat_kernel_u(x: f64, t: f64, kappa: f64) -> f64 {
    let s = kappa * t;
    (-(x * x) / (2.0 * s)).exp() / (2.0 * PI * s).sqrt()
}

#[derive(Debug, Clone)]
pub struct FpWorkspace {
    grid: GridSpec,
    kappa: f64,
    drift: Vec<f64>,
    diffusion_sq: Vec<f64>,
    a: Tridiagonal,
    b: Tridiagonal,
    lu: TridiagonalLu,
    /// Column-major `A^{-1} B`, present for the propagator scheme.
    propagator: Option<Vec<f64>>,
}

impl FpWorkspace {
    /// Workspace for the factored scheme.
    pub fn new(problem: &SdeProblem, grid: &GridSpec, kappa: f64) -> Result<Self> {
        Self::with_scheme(problem, grid, kappa, FpScheme::Factored)
    }

    pub fn with_scheme(
        problem: &SdeProblem,
        grid: &GridSpec,
        kappa: f64,
        scheme: FpScheme,
    ) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(DtqError::InvalidParams(format!(
                "kappa must be positive, got {kappa}"
            )));
        }
        let n = grid.len();
        let mut drift = Vec::with_capacity(n);
        let mut diffusion_sq = Vec::with_capacity(n);
        for j in 0..n {
            let x = grid.node(j);
            let g = problem.diffusion(x);
            if !(g != 0.0 && g.is_finite()) {
                return Err(DtqError::ZeroDiffusionAtNode(grid.node_index(j)));
            }
            drift.push(problem.drift(x));
            diffusion_sq.push(g * g);
        }

        let (h, k) = (grid.h(), grid.k());
        let cd = h / (2.0 * k * k);
        let ca = h / (2.0 * k);
        let shifted = |v: &[f64], scale: f64, offset: i64| -> Vec<f64> {
            (0..n as i64)
                .map(|i| {
                    let src = i + offset;
                    if src < 0 || src >= n as i64 {
                        0.0
                    } else {
                        scale * v[src as usize]
                    }
                })
                .collect()
        };

        let a = Tridiagonal::new(
            shifted(&diffusion_sq, -cd, -1),
            diffusion_sq
                .iter()
                .map(|g2| 1.0 + (h / (k * k)) * g2)
                .collect(),
            shifted(&diffusion_sq, -cd, 1),
        );
        let b = Tridiagonal::new(
            shifted(&drift, ca, -1),
            vec![1.0; n],
            shifted(&drift, -ca, 1),
        );
        let lu = a.factor()?;
        let propagator = (scheme == FpScheme::PrecomputedPropagator).then(|| propagator(&b, &lu));

        Ok(Self {
            grid: *grid,
            kappa,
            drift,
            diffusion_sq,
            a,
            b,
            lu,
            propagator,
        })
    }

    pub fn scheme(&self) -> FpScheme {
        if self.propagator.is_some() {
            FpScheme::PrecomputedPropagator
        } else {
            FpScheme::Factored
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Implicit diffusion matrix.
    pub fn a(&self) -> &Tridiagonal {
        &self.a
    }

    /// Explicit drift matrix.
    pub fn b(&self) -> &Tridiagonal {
        &self.b
    }

    /// Heat-kernel samples `u(x_j, t)`.
    pub fn heat_vector(&self, t: f64) -> Vec<f64> {
        self.grid
            .nodes()
            .map(|x| heat_kernel_u(x, t, self.kappa))
            .collect()
    }

    /// Discretized forcing at `t_n = n h`. `F^0` is defined as zero since
    /// `u(., 0)` is a delta.
    pub fn forcing(&self, n: usize) -> Vec<f64> {
        let len = self.grid.len();
        if n == 0 {
            return vec![0.0; len];
        }
        let u = self.heat_vector(n as f64 * self.grid.h());
        self.forcing_from_heat(&u)
    }

    fn forcing_from_heat(&self, u: &[f64]) -> Vec<f64> {
        let len = u.len();
        let (h, k) = (self.grid.h(), self.grid.k());
        let cd = h / (2.0 * k * k);
        let ca = h / (2.0 * k);
        let w: Vec<f64> = self
            .diffusion_sq
            .iter()
            .zip(u)
            .map(|(g2, u)| (g2 - self.kappa) * u)
            .collect();
        let fu: Vec<f64> = self.drift.iter().zip(u).map(|(f, u)| f * u).collect();
        let at = |v: &[f64], j: i64| {
            if j < 0 || j >= len as i64 {
                0.0
            } else {
                v[j as usize]
            }
        };
        (0..len as i64)
            .map(|j| {
                cd * (at(&w, j - 1) - 2.0 * at(&w, j) + at(&w, j + 1))
                    - ca * (at(&fu, j + 1) - at(&fu, j - 1))
            })
            .collect()
    }

    /// Iterates `V^{n+1} = A^{-1}(B V^n + F^n)` from `V^0 = 0` for `N` steps
    /// and returns `U^N + V^N`.
    pub fn solve(&self) -> DensityVector {
        let steps = self.grid.steps();
        let len = self.grid.len();
        let mut v = vec![0.0; len];
        for n in 0..steps {
            v = match &self.propagator {
                Some(p) => {
                    let mut next = vec![0.0; len];
                    for (col, &vj) in p.chunks_exact(len).zip(&v) {
                        for (x, c) in next.iter_mut().zip(col) {
                            *x += c * vj;
                        }
                    }
                    if n > 0 {
                        let mut f = self.forcing(n);
                        self.lu.solve_in_place(&mut f);
                        for (x, y) in next.iter_mut().zip(f) {
                            *x += y;
                        }
                    }
                    next
                }
                None => {
                    let mut rhs = self.b.mul_vec(&v);
                    if n > 0 {
                        for (r, f) in rhs.iter_mut().zip(self.forcing(n)) {
                            *r += f;
                        }
                    }
                    self.lu.solve_in_place(&mut rhs);
                    rhs
                }
            };
        }
        let u = self.heat_vector(self.grid.horizon());
        let values = u.iter().zip(&v).map(|(u, v)| u + v).collect();
        DensityVector::new(values, self.grid, steps)
    }
}

/// Dense column-major `A^{-1} B`, one tridiagonal solve per column of `B`.
fn propagator(b: &Tridiagonal, lu: &TridiagonalLu) -> Vec<f64> {
    let n = b.len();
    let mut out = vec![0.0; n * n];
    for (j, col) in out.chunks_exact_mut(n).enumerate() {
        // column j of B: (j-1, j) = sup[j-1], (j, j) = diag[j], (j+1, j) = sub[j+1]
        if j > 0 {
            col[j - 1] = b.sup[j - 1];
        }
        col[j] = b.diag[j];
        if j + 1 < n {
            col[j + 1] = b.sub[j + 1];
        }
        lu.solve_in_place(col);
    }
    out
}

/// Component-wise forcing vector `F^n` for `problem` on `workspace`'s grid.
pub fn forcing_vector(n: usize, workspace: &FpWorkspace) -> Vec<f64> {
    workspace.forcing(n)
}

/// Builds a workspace with the default scheme and solves to `t_N = N h`.
pub fn fp_solve(problem: &SdeProblem, grid: &GridSpec, kappa: f64) -> Result<DensityVector> {
    fp_solve_with(problem, grid, kappa, FpScheme::default())
}

pub fn fp_solve_with(
    problem: &SdeProblem,
    grid: &GridSpec,
    kappa: f64,
    scheme: FpScheme,
) -> Result<DensityVector> {
    if problem.initial_point() != 0.0 {
        return Err(DtqError::InvalidParams(
            "the heat-kernel split assumes X_0 = 0".into(),
        ));
    }
    Ok(FpWorkspace::with_scheme(problem, grid, kappa, scheme)?.solve())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{select_grid, DomainRule};
    use crate::problem::{builtin_problems, ex1};
    use approx::assert_abs_diff_eq;

    fn grid(h: f64) -> GridSpec {
        select_grid(h, 1.0, 0.75, 1.0, DomainRule::PolynomialPi).unwrap()
    }

    #[test]
    fn heat_kernel_values() {
        assert_abs_diff_eq!(
            heat_kernel_u(0.0, 1.0, 1.0),
            0.3989422804014327,
            epsilon = 1e-15
        );
        for &x in &[0.3, 1.7, 4.0] {
            assert_eq!(heat_kernel_u(x, 0.4, 2.0), heat_kernel_u(-x, 0.4, 2.0));
        }
        let dx = 1e-3;
        let mass: f64 = (-20_000..=20_000)
            .map(|i| heat_kernel_u(i as f64 * dx, 1.0, 1.0))
            .sum::<f64>()
            * dx;
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn matrices_follow_stencil() {
        let p = builtin_problems().remove(3);
        let g = grid(0.1);
        let ws = FpWorkspace::new(&p, &g, 1.0).unwrap();
        let (h, k) = (g.h(), g.k());
        let n = g.len();
        for i in 0..n {
            let x = g.node(i);
            let g2 = |x: f64| p.diffusion(x).powi(2);
            assert_eq!(ws.a().diag[i], 1.0 + h / (k * k) * g2(x));
            assert_eq!(ws.b().diag[i], 1.0);
            if i > 0 {
                let xm = g.node(i - 1);
                assert_eq!(ws.a().sub[i], -h / (2.0 * k * k) * g2(xm));
                assert_eq!(ws.b().sub[i], h / (2.0 * k) * p.drift(xm));
            } else {
                assert_eq!(ws.a().sub[i], 0.0);
                assert_eq!(ws.b().sub[i], 0.0);
            }
            if i + 1 < n {
                let xp = g.node(i + 1);
                assert_eq!(ws.a().sup[i], -h / (2.0 * k * k) * g2(xp));
                assert_eq!(ws.b().sup[i], -h / (2.0 * k) * p.drift(xp));
            } else {
                assert_eq!(ws.a().sup[i], 0.0);
                assert_eq!(ws.b().sup[i], 0.0);
            }
        }
    }

    #[test]
    fn implicit_matrix_is_diagonally_dominant() {
        for p in builtin_problems().into_iter().filter(|p| p.name() != "ex3") {
            let g = grid(0.05);
            let ws = FpWorkspace::new(&p, &g, 1.0).unwrap();
            let a = ws.a();
            let (h, k) = (g.h(), g.k());
            for i in 1..g.len() - 1 {
                let g2 = |idx: usize| p.diffusion(g.node(idx)).powi(2);
                let expected = 1.0 + h / (2.0 * k * k) * (2.0 * g2(i) - g2(i - 1) - g2(i + 1));
                let margin = a.diag[i] - a.sub[i].abs() - a.sup[i].abs();
                assert!((margin - expected).abs() <= 1e-9 * a.diag[i]);
                assert!(margin > 0.0, "{} row {i}", p.name());
            }
        }
    }

    #[test]
    fn forcing_vanishes_for_matched_heat_equation() {
        let kappa: f64 = 2.5;
        let p = SdeProblem::new("heat", |_| 0.0, move |_| kappa.sqrt());
        let g = grid(0.1);
        let ws = FpWorkspace::new(&p, &g, kappa).unwrap();
        for n in 0..5 {
            assert!(forcing_vector(n, &ws).iter().all(|&f| f.abs() < 1e-15));
        }
    }

    #[test]
    fn ex1_forcing_is_pure_drift() {
        let p = ex1();
        let g = grid(0.1);
        let ws = FpWorkspace::new(&p, &g, 1.0).unwrap();
        let f = forcing_vector(1, &ws);
        let (h, k) = (g.h(), g.k());
        let m = g.half_width();
        for j in [m - 3, m, m + 1, m + 7] {
            let (xm, xp) = (g.node(j - 1), g.node(j + 1));
            let expected = -(h / (2.0 * k))
                * (p.drift(xp) * heat_kernel_u(xp, 0.1, 1.0)
                    - p.drift(xm) * heat_kernel_u(xm, 0.1, 1.0));
            assert_abs_diff_eq!(f[j], expected, epsilon = 1e-15);
        }
        // f odd, u even: F even in j
        for j in 0..m {
            assert_abs_diff_eq!(f[m - j], f[m + j], epsilon = 1e-15);
        }
    }

    #[test]
    fn subtraction_is_exact_for_heat_equation() {
        let p = SdeProblem::new("bm", |_| 0.0, |_| 1.0);
        let g = grid(0.05);
        let out = fp_solve(&p, &g, 1.0).unwrap();
        for (x, v) in g.nodes().zip(out.values()) {
            assert_abs_diff_eq!(*v, heat_kernel_u(x, 1.0, 1.0), epsilon = 1e-12);
        }
    }

    #[test]
    fn ex1_mass_is_nearly_conserved() {
        let g = grid(0.01);
        let out = fp_solve(&ex1(), &g, 1.0).unwrap();
        let v = out.values();
        let trap = g.k() * (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]));
        assert!((trap - 1.0).abs() < 5e-3, "mass {trap}");
    }

    #[test]
    fn schemes_agree_to_roundoff() {
        for p in [ex1(), builtin_problems().remove(4)] {
            let g = grid(0.05);
            let a = fp_solve_with(&p, &g, 1.0, FpScheme::Factored).unwrap();
            let b = fp_solve_with(&p, &g, 1.0, FpScheme::PrecomputedPropagator).unwrap();
            let diff: f64 = a
                .values()
                .iter()
                .zip(b.values())
                .map(|(x, y)| (x - y).abs())
                .sum();
            let scale: f64 = a.values().iter().map(|x| x.abs()).sum();
            assert!(diff / scale < 1e-12, "{}: {}", p.name(), diff / scale);
        }
    }

    #[test]
    fn propagator_matches_direct_solves() {
        let g = grid(0.2);
        let ws =
            FpWorkspace::with_scheme(&ex1(), &g, 1.0, FpScheme::PrecomputedPropagator).unwrap();
        assert_eq!(ws.scheme(), FpScheme::PrecomputedPropagator);
        let n = g.len();
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut direct = ws.b().mul_vec(&v);
        ws.lu.solve_in_place(&mut direct);
        let p = ws.propagator.as_ref().unwrap();
        for i in 0..n {
            let row: f64 = (0..n).map(|j| p[j * n + i] * v[j]).sum();
            assert_abs_diff_eq!(row, direct[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn scheme_names() {
        assert_eq!("factored".parse::<FpScheme>().unwrap(), FpScheme::Factored);
        assert_eq!(
            "propagator".parse::<FpScheme>().unwrap(),
            FpScheme::PrecomputedPropagator
        );
        assert!("inverse".parse::<FpScheme>().is_err());
    }

    #[test]
    fn rejects_zero_diffusion_and_bad_kappa() {
        let p = SdeProblem::new("pinned", |_| 0.0, |x: f64| x);
        let g = grid(0.5);
        assert!(matches!(
            fp_solve(&p, &g, 1.0),
            Err(DtqError::ZeroDiffusionAtNode(0))
        ));
        assert!(fp_solve(&ex1(), &g, 0.0).is_err());
    }
}

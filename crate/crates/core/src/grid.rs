//! Space-time grids: temporal step `h`, spatial step `k`, and the symmetric
//! node set `x_j = j k` for `-M <= j <= M`.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{DtqError, Result};

/// How the half-width index `M` scales with the spatial step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainRule {
    /// `M = ceil(pi / k^2)`, so `y_M` grows like `h^{-rho}`.
    PolynomialPi,
    /// `M = ceil(pi / (2k) - 2)`, keeping every node strictly inside `(-pi/2, pi/2)`.
    PolynomialPiHalf,
    /// `M = ceil((eps + rho + 1) (-ln h) / k)`, so `y_M` grows like `-ln h`.
    Logarithmic { epsilon: f64 },
}

impl fmt::Display for DomainRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainRule::PolynomialPi => write!(f, "poly-pi"),
            DomainRule::PolynomialPiHalf => write!(f, "poly-pi-half"),
            DomainRule::Logarithmic { epsilon } => write!(f, "log(eps={epsilon})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    h: f64,
    k: f64,
    half_width: usize,
    steps: usize,
}

impl GridSpec {
    /// `half_width = 0` (a single node) is allowed for degenerate kernels;
    /// [`select_grid`] always produces `M >= 1`.
    pub fn new(h: f64, k: f64, half_width: usize, steps: usize) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(DtqError::InvalidParams(format!(
                "h must be positive, got {h}"
            )));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(DtqError::InvalidParams(format!(
                "k must be positive, got {k}"
            )));
        }
        if steps == 0 {
            return Err(DtqError::InvalidParams(
                "need at least one time step".into(),
            ));
        }
        Ok(Self {
            h,
            k,
            half_width,
            steps,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `M`.
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// `N`, with `N h = T`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> f64 {
        self.steps as f64 * self.h
    }

    /// `y_M = M k`.
    pub fn y_max(&self) -> f64 {
        self.half_width as f64 * self.k
    }

    /// Number of nodes, `2M + 1`.
    pub fn len(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Signed node index of storage position `idx`.
    pub fn node_index(&self, idx: usize) -> i64 {
        idx as i64 - self.half_width as i64
    }

    /// Position of storage slot `idx`, i.e. `x_{idx - M}`.
    pub fn node(&self, idx: usize) -> f64 {
        self.node_index(idx) as f64 * self.k
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Same steps, twice the half-width.
    pub fn doubled(&self) -> Self {
        Self {
            half_width: 2 * self.half_width,
            ..*self
        }
    }

    pub fn with_half_width(&self, half_width: usize) -> Self {
        Self {
            half_width,
            ..*self
        }
    }
}

/// Chooses `k = r1 h^rho`, `N = round(T / h)` and `M` from `rule`.
pub fn select_grid(h: f64, horizon: f64, rho: f64, r1: f64, rule: DomainRule) -> Result<GridSpec> {
    if !(h > 0.0 && h <= horizon && horizon.is_finite()) {
        return Err(DtqError::InvalidParams(format!(
            "need 0 < h <= T, got h = {h}, T = {horizon}"
        )));
    }
    if !(rho > 0.5) {
        return Err(DtqError::InvalidParams(format!(
            "rho must exceed 1/2, got {rho}"
        )));
    }
    if !(r1 > 0.0 && r1.is_finite()) {
        return Err(DtqError::InvalidParams(format!(
            "r1 must be positive, got {r1}"
        )));
    }
    let ratio = horizon / h;
    let steps = ratio.round();
    if (ratio - steps).abs() > 1e-9 * steps.max(1.0) {
        log::warn!("T/h = {ratio} is not an integer; using N = {steps} and T = N h");
    }

    let k = r1 * h.powf(rho);
    let m = match rule {
        DomainRule::PolynomialPi => (PI / (k * k)).ceil(),
        DomainRule::PolynomialPiHalf => (PI / (2.0 * k) - 2.0).ceil(),
        DomainRule::Logarithmic { epsilon } => {
            if !(epsilon >= 1.0) {
                return Err(DtqError::InvalidParams(format!(
                    "logarithmic rule needs epsilon >= 1, got {epsilon}"
                )));
            }
            ((epsilon + rho + 1.0) * (-h.ln()) / k).ceil()
        }
    };
    if !(m >= 1.0 && m.is_finite()) {
        return Err(DtqError::InvalidParams(format!(
            "domain rule {rule} yields M = {m} at h = {h}, k = {k}"
        )));
    }
    GridSpec::new(h, k, m as usize, steps as usize)
}

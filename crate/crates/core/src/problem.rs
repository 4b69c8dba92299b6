//! Scalar SDE problems `dX = f(X) dt + g(X) dW` with a deterministic start
//! `X_0 = C`, plus the registry of built-in closed-form test problems.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use crate::density::DensityVector;
use crate::error::{DtqError, Result};
use crate::grid::{DomainRule, GridSpec};

pub type Coefficient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type ExactDensity = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Which admissibility hypotheses the coefficients satisfy. Metadata only;
/// nothing in the numerics branches on these.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdmissibleFlags {
    pub drift_lipschitz: bool,
    pub diffusion_bounded_below: bool,
    pub diffusion_bounded_above: bool,
}

impl AdmissibleFlags {
    pub const ALL: Self = Self {
        drift_lipschitz: true,
        diffusion_bounded_below: true,
        diffusion_bounded_above: true,
    };
}

/// Open interval outside of which (boundary included) the density is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }
}

#[derive(Clone)]
pub struct SdeProblem {
    name: String,
    drift: Coefficient,
    diffusion: Coefficient,
    initial_point: f64,
    exact_density: Option<ExactDensity>,
    support: Option<Support>,
    flags: AdmissibleFlags,
    domain_rule: DomainRule,
}

impl fmt::Debug for SdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SdeProblem")
            .field("name", &self.name)
            .field("initial_point", &self.initial_point)
            .field("has_exact_density", &self.exact_density.is_some())
            .field("support", &self.support)
            .field("flags", &self.flags)
            .field("domain_rule", &self.domain_rule)
            .finish()
    }
}

impl SdeProblem {
    /// A problem starting at `X_0 = 0` with no closed form and unbounded support.
    pub fn new<F, G>(name: impl Into<String>, drift: F, diffusion: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            drift: Arc::new(drift),
            diffusion: Arc::new(diffusion),
            initial_point: 0.0,
            exact_density: None,
            support: None,
            flags: AdmissibleFlags::ALL,
            domain_rule: DomainRule::PolynomialPi,
        }
    }

    pub fn with_initial_point(mut self, c: f64) -> Self {
        self.initial_point = c;
        self
    }

    /// `p(x, t)` for `t > 0`.
    pub fn with_exact_density<P>(mut self, p: P) -> Self
    where
        P: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        self.exact_density = Some(Arc::new(p));
        self
    }

    pub fn with_support(mut self, lo: f64, hi: f64) -> Self {
        self.support = Some(Support { lo, hi });
        self
    }

    pub fn with_flags(mut self, flags: AdmissibleFlags) -> Self {
        self.flags = flags;
        self
    }

    /// Polynomial domain rule the harness uses for this problem.
    pub fn with_domain_rule(mut self, rule: DomainRule) -> Self {
        self.domain_rule = rule;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn drift(&self, x: f64) -> f64 {
        (self.drift)(x)
    }

    pub fn diffusion(&self, x: f64) -> f64 {
        (self.diffusion)(x)
    }

    pub fn initial_point(&self) -> f64 {
        self.initial_point
    }

    pub fn support(&self) -> Option<Support> {
        self.support
    }

    pub fn flags(&self) -> AdmissibleFlags {
        self.flags
    }

    pub fn domain_rule(&self) -> DomainRule {
        self.domain_rule
    }

    pub fn has_exact_density(&self) -> bool {
        self.exact_density.is_some()
    }

    /// Closed-form density at `(x, t)`, zero on and beyond the support boundary.
    pub fn exact_density(&self, x: f64, t: f64) -> Result<f64> {
        let p = self
            .exact_density
            .as_ref()
            .ok_or_else(|| DtqError::MissingExactDensity(self.name.clone()))?;
        match self.support {
            Some(s) if !s.contains(x) => Ok(0.0),
            _ => Ok(p(x, t)),
        }
    }
}

/// Samples the closed-form density at every grid node at time `t`.
pub fn exact_density_on_grid(
    problem: &SdeProblem,
    grid: &GridSpec,
    t: f64,
) -> Result<DensityVector> {
    if !problem.has_exact_density() {
        return Err(DtqError::MissingExactDensity(problem.name().to_string()));
    }
    if !(t > 0.0) {
        return Err(DtqError::InvalidParams(format!(
            "exact density needs t > 0, got {t}"
        )));
    }
    let values = grid
        .nodes()
        .map(|x| problem.exact_density(x, t))
        .collect::<Result<Vec<_>>>()?;
    let time_index = (t / grid.h()).round() as usize;
    Ok(DensityVector::new(values, *grid, time_index))
}

fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

pub fn ex1() -> SdeProblem {
    SdeProblem::new("ex1", |x| -x, |_| 1.0)
        .with_exact_density(|x, t| {
            let s = 1.0 - (-2.0 * t).exp();
            (-x * x / s).exp() / (PI * s).sqrt()
        })
        .with_flags(AdmissibleFlags::ALL)
}

pub fn ex2() -> SdeProblem {
    SdeProblem::new("ex2", |x| -0.5 * x.tanh() * sech(x).powi(2), sech)
        .with_exact_density(|x, t| {
            let s = x.sinh();
            (2.0 * PI * t).powf(-0.5) * x.cosh() * (-s * s / (2.0 * t)).exp()
        })
        .with_flags(AdmissibleFlags {
            drift_lipschitz: true,
            diffusion_bounded_below: false,
            diffusion_bounded_above: true,
        })
}

pub fn ex3() -> SdeProblem {
    SdeProblem::new("ex3", |x| -(x.sin() * x.cos().powi(3)), |x| x.cos().powi(2))
        .with_exact_density(|x, t| {
            let c = x.cos();
            let tan = x.tan();
            (2.0 * PI * t).powf(-0.5) / (c * c) * (-tan * tan / (2.0 * t)).exp()
        })
        .with_support(-FRAC_PI_2, FRAC_PI_2)
        .with_flags(AdmissibleFlags {
            drift_lipschitz: true,
            diffusion_bounded_below: false,
            diffusion_bounded_above: true,
        })
        .with_domain_rule(DomainRule::PolynomialPiHalf)
}

pub fn ex4() -> SdeProblem {
    SdeProblem::new(
        "ex4",
        |x| 0.5 * x + (1.0 + x * x).sqrt(),
        |x| (1.0 + x * x).sqrt(),
    )
    // asinh(X_t) = t + W_t; coincides with the t = 1 form used in the experiments.
    .with_exact_density(|x, t| {
        let z = x.asinh() - t;
        (2.0 * PI * t * (1.0 + x * x)).powf(-0.5) * (-z * z / (2.0 * t)).exp()
    })
    .with_flags(AdmissibleFlags {
        drift_lipschitz: true,
        diffusion_bounded_below: true,
        diffusion_bounded_above: false,
    })
}

pub fn ex5() -> SdeProblem {
    SdeProblem::new("ex5", |x| 0.5 * x, |x| (1.0 + x * x).sqrt())
        .with_exact_density(|x, t| {
            let z = x.asinh();
            (2.0 * PI * t * (1.0 + x * x)).powf(-0.5) * (-z * z / (2.0 * t)).exp()
        })
        .with_flags(AdmissibleFlags {
            drift_lipschitz: true,
            diffusion_bounded_below: true,
            diffusion_bounded_above: false,
        })
}

pub fn ex6() -> SdeProblem {
    SdeProblem::new(
        "ex6",
        |x| -(1.0 + x * x).sqrt() * x.asinh() + 0.5 * x,
        |x| (1.0 + x * x).sqrt(),
    )
    .with_exact_density(|x, t| {
        let s = 1.0 - (-2.0 * t).exp();
        let z = x.asinh();
        (-z * z / s).exp() / (PI * s * (1.0 + x * x)).sqrt()
    })
    .with_flags(AdmissibleFlags {
        drift_lipschitz: false,
        diffusion_bounded_below: true,
        diffusion_bounded_above: false,
    })
}

type Constructor = fn() -> SdeProblem;

const REGISTRY: [(&str, Constructor); 6] = [
    ("ex1", ex1),
    ("ex2", ex2),
    ("ex3", ex3),
    ("ex4", ex4),
    ("ex5", ex5),
    ("ex6", ex6),
];

/// The six closed-form test problems, all started at `X_0 = 0`.
pub fn builtin_problems() -> Vec<SdeProblem> {
    REGISTRY.iter().map(|(_, ctor)| ctor()).collect()
}

pub fn problem_names() -> Vec<String> {
    REGISTRY.iter().map(|(name, _)| name.to_string()).collect()
}

pub fn problem_by_name(name: &str) -> Result<SdeProblem> {
    REGISTRY
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, ctor)| ctor())
        .ok_or_else(|| DtqError::UnknownProblem {
            name: name.to_string(),
            valid: problem_names(),
        })
}

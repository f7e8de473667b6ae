//! Coefficient functions and the sub-logistic source law.
//!
//! The density equation is driven by a diffusion coefficient `D(v)`, a
//! chemotactic sensitivity `S(v)` and the source
//! `f(u) = r u - mu u^2 / ln^p(u + e)`. This module evaluates them and
//! certifies, by sampling, the structural conditions the solver relies on:
//! `D > 0`, `S` bounded with `S' >= 0`, both twice differentiable.

mod coefficient;
mod source;
mod validate;

pub use coefficient::{CoefficientSpec, Spline};
pub use source::{ln_shift, SourceSpec};
pub use validate::{validate_model, CheckEntry, ValidationReport};

use serde::{Deserialize, Serialize};

/// Whether the diffusion coefficient stays away from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Nondegenerate,
    Degenerate,
}

/// The full coefficient set of the chemotaxis system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub diffusion: CoefficientSpec,
    pub sensitivity: CoefficientSpec,
    /// `None` switches the source off (`f = 0`).
    #[serde(default)]
    pub source: Option<SourceSpec>,
}

impl ModelSpec {
    /// Classical minimal model: `D = S = 1`, no source.
    pub fn classical() -> Self {
        ModelSpec {
            diffusion: CoefficientSpec::Constant { value: 1.0 },
            sensitivity: CoefficientSpec::Constant { value: 1.0 },
            source: None,
        }
    }

    pub fn with_source(mut self, source: SourceSpec) -> Self {
        self.source = Some(source);
        self
    }

    /// Logarithmic exponent of the damping, zero when there is no source.
    pub fn damping_exponent(&self) -> f64 {
        self.source.map_or(0.0, |s| s.p)
    }

    /// Source value, zero when the source is switched off.
    #[inline]
    pub fn source_value(&self, u: f64) -> f64 {
        self.source.map_or(0.0, |s| s.value(u))
    }
}

/// Evaluates `D(v)`, rejecting negative arguments and nonpositive values.
pub fn eval_d(spec: &CoefficientSpec, v: f64) -> crate::Result<f64> {
    spec.eval_diffusion(v)
}

/// Evaluates `S(v)`, rejecting a negative local slope.
pub fn eval_s(spec: &CoefficientSpec, v: f64) -> crate::Result<f64> {
    spec.eval_sensitivity(v)
}

/// Evaluates the source `f(u)`.
pub fn eval_f(spec: &SourceSpec, u: f64) -> f64 {
    spec.value(u)
}

/// Positive root of `f` on `(0, inf)`, if any.
pub fn homogeneous_steady_state(spec: &SourceSpec) -> Option<f64> {
    spec.steady_state()
}

//! Finite-volume simulator for the two-dimensional Keller-Segel system
//!
//! ```text
//! u_t = div(D(v) grad u) - div(u S(v) grad v) + f(u)
//! v_t = lap v - v + u
//! ```
//!
//! with homogeneous Neumann boundaries and the sub-logistic source
//! `f(u) = r u - mu u^2 / ln^p(u + e)`, together with the functionals used to
//! tell bounded solutions from blow-up and a bench of executable
//! interpolation and sequence inequalities.

pub mod diagnostics;
mod error;
pub mod grid;
pub mod harness;
pub mod inequalities;
pub mod model;
pub mod stepper;
#[cfg(test)]
mod testing;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/grid.md")]
    mod grid {}
    #[doc = include_str!("../../../book/src/stepping.md")]
    mod stepping {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    mod diagnostics {}
    #[doc = include_str!("../../../book/src/inequalities.md")]
    mod inequalities {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `ln(u + e)` written as `1 + ln(1 + u/e)` so that small `u` keeps full precision.
#[inline]
pub fn ln_shift(u: f64) -> f64 {
    1.0 + (u / std::f64::consts::E).ln_1p()
}

/// Parameters of `f(u) = r u - mu u^2 / ln^p(u + e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub r: f64,
    pub mu: f64,
    pub p: f64,
}

impl SourceSpec {
    /// Builds a source with `mu > 0` and `p > 0`.
    pub fn new(r: f64, mu: f64, p: f64) -> Result<Self> {
        let spec = SourceSpec { r, mu, p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.r.is_finite() {
            return Err(Error::config("source.r", "growth rate r must be finite"));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::config(
                "source.mu",
                format!("damping strength mu must be > 0 (got {})", self.mu),
            ));
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return Err(Error::config(
                "source.p",
                format!("logarithmic exponent p must be > 0 (got {})", self.p),
            ));
        }
        Ok(())
    }

    #[inline]
    fn log_weight(&self, u: f64) -> f64 {
        if self.p == 0.0 {
            1.0
        } else {
            ln_shift(u).powf(self.p)
        }
    }

    /// `f(u)`; exactly zero at `u = 0`.
    #[inline]
    pub fn value(&self, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        self.r * u - self.mu * u * u / self.log_weight(u)
    }

    /// Per-unit destruction rate `mu u / ln^p(u + e)`, so that the damping
    /// term equals `rate * u`.
    #[inline]
    pub fn destruction_rate(&self, u: f64) -> f64 {
        self.mu * u / self.log_weight(u)
    }

    pub fn steady_state(&self) -> Option<f64> {
        if !(self.r > 0.0) || !(self.mu > 0.0) {
            return None;
        }
        // g(u) = r ln^p(u+e) - mu u has the sign of f(u)/u on (0, inf).
        let g = |u: f64| self.r * self.log_weight(u) - self.mu * u;
        let mut lo = 0.0;
        let mut hi = (self.r / self.mu).max(1.0);
        let mut expansions = 0;
        while g(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            expansions += 1;
            if expansions > 200 || !hi.is_finite() {
                return None;
            }
        }
        if g(lo) <= 0.0 {
            return None;
        }
        let root = regula_falsi(g, lo, hi)?;
        // |f| < 1e-12 cannot be met in floating point once r u* is large;
        // there the residual is held to 1e-12 relative to r u* instead.
        let tolerance = 1e-12 * (self.r * root).max(1.0);
        polish(|u| self.value(u), root, tolerance)
    }
}

/// Illinois variant of regula falsi; `g(lo) > 0 >= g(hi)` on entry.
fn regula_falsi(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut g_lo = g(lo);
    let mut g_hi = g(hi);
    let mut side = 0i8;
    for _ in 0..500 {
        let mid = (lo * g_hi - hi * g_lo) / (g_hi - g_lo);
        let g_mid = g(mid);
        if g_mid == 0.0 || (hi - lo).abs() <= 4.0 * f64::EPSILON * hi.abs() {
            return Some(mid);
        }
        if g_mid > 0.0 {
            lo = mid;
            g_lo = g_mid;
            if side == 1 {
                g_hi *= 0.5;
            }
            side = 1;
        } else {
            hi = mid;
            g_hi = g_mid;
            if side == -1 {
                g_lo *= 0.5;
            }
            side = -1;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Nudges a bracketed root by ulps until `|f| < tolerance`.
fn polish(f: impl Fn(f64) -> f64, mut x: f64, tolerance: f64) -> Option<f64> {
    for _ in 0..64 {
        let fx = f(x);
        if fx.abs() < tolerance {
            return Some(x);
        }
        let step = x * f64::EPSILON;
        x = if fx > 0.0 { x + step } else { x - step };
    }
    None
}

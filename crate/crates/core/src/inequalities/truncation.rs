//! Truncation estimate for `int u^(q+1)`.
//!
//! The cutoff `xi` vanishes below `N`, ramps linearly to the identity on
//! `(N, 2N]` and is the identity beyond. Splitting `u = (u - xi(u)) + xi(u)`
//! gives the two estimates
//!
//! ```text
//! int |u - xi(u)|^(q+1) <= (2N)^q int u
//! int xi(u)             <= int u G(u) / G(N)
//! ```
//!
//! and from them
//! `int u^(q+1) <= K (X + Y) + 2^q (2N)^q int u`, where
//! `X = int |grad u^(q/2)|^2 * int u G(u) / G(N)` and `Y = (int u)^(q+1)`.

use serde::{Deserialize, Serialize};

use super::ensemble::FieldEnsemble;
use super::interpolation::REVALIDATION_SLACK;
use super::report::{fit_constant, InequalityReport, Revalidation, Witness};
use crate::grid::{grad_sq_integral, Field, Grid};
use crate::model::ln_shift;
use crate::{Error, Result};

/// Continuous, increasing, unbounded weight `G`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// `ln(s + e)`.
    #[default]
    LogShift,
    /// `sqrt(s)`.
    Sqrt,
    /// `s`.
    Identity,
}

impl Gauge {
    pub fn eval(self, s: f64) -> f64 {
        match self {
            Gauge::LogShift => ln_shift(s),
            Gauge::Sqrt => s.sqrt(),
            Gauge::Identity => s,
        }
    }
}

/// The cutoff: `0` for `|s| <= N`, `2(|s| - N)` up to `2N`, `|s|` beyond.
pub fn xi(s: f64, n: f64) -> f64 {
    let a = s.abs();
    if a <= n {
        0.0
    } else if a <= 2.0 * n {
        2.0 * (a - n)
    } else {
        a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub q: f64,
    pub n: f64,
    pub gauge: Gauge,
    /// Cells where `0 <= xi(u) <= u` or `u - xi(u) <= 2N` fails.
    pub identity_violations: usize,
    /// `int |u - xi(u)|^(q+1)` and `(2N)^q int u`.
    pub remainder: (f64, f64),
    /// `int xi(u)` and `int u G(u) / G(N)`.
    pub cutoff_mass: (f64, f64),
    /// `int u^(q+1)`.
    pub lhs: f64,
    pub x: f64,
    pub y: f64,
    /// `(2N)^q int u`.
    pub z: f64,
    pub passed: bool,
}

/// Evaluates both estimates of the proof on one field.
pub fn check_truncation(u: &Field, g: &Grid, q: f64, n: f64, gauge: Gauge) -> Result<TruncationReport> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Precondition(format!("truncation level N = {n} must be > 0")));
    }
    if !(q > 0.0) {
        return Err(Error::Precondition(format!("q = {q} must be > 0")));
    }
    g.check(u)?;
    if u.min() < 0.0 || !u.all_finite() {
        return Err(Error::Precondition("u must be finite and nonnegative".into()));
    }
    let vol = g.volumes();
    let mut violations = 0;
    let mut rem = 0.0;
    let mut cut = 0.0;
    let mut mass = 0.0;
    let mut weighted = 0.0;
    let mut lhs = 0.0;
    for (&s, w) in u.values().iter().zip(vol) {
        let c = xi(s, n);
        if !(0.0 <= c && c <= s && s - c <= 2.0 * n) {
            violations += 1;
        }
        rem += w * (s - c).abs().powf(q + 1.0);
        cut += w * c;
        mass += w * s;
        weighted += w * s * gauge.eval(s);
        lhs += w * s.powf(q + 1.0);
    }
    let gn = gauge.eval(n);
    let z = (2.0 * n).powf(q) * mass;
    let power = u.map(|s| s.powf(0.5 * q));
    let x = grad_sq_integral(&power, g)? * weighted / gn;
    let remainder = (rem, z);
    let cutoff_mass = (cut, weighted / gn);
    Ok(TruncationReport {
        q,
        n,
        gauge,
        identity_violations: violations,
        remainder,
        cutoff_mass,
        lhs,
        x,
        y: mass.powf(q + 1.0),
        z,
        passed: violations == 0 && remainder.0 <= remainder.1 && cutoff_mass.0 <= cutoff_mass.1,
    })
}

fn reports_on(e: &FieldEnsemble, q: f64, levels: &[f64], gauge: Gauge) -> Result<Vec<TruncationReport>> {
    let (grid, fields) = e.generate()?;
    let mut out = Vec::with_capacity(fields.len() * levels.len());
    for f in &fields {
        let u = f.map(f64::abs);
        for &n in levels {
            out.push(check_truncation(&u, &grid, q, n, gauge)?);
        }
    }
    Ok(out)
}

/// Runs [`check_truncation`] on `|f|` for every field and level, then fits the
/// constant `K` of the assembled estimate and revalidates it on a fresh ensemble.
pub fn check_truncation_ensemble(
    e: &FieldEnsemble,
    q: f64,
    levels: &[f64],
    gauge: Gauge,
) -> Result<InequalityReport> {
    if levels.is_empty() {
        return Err(Error::Precondition("no truncation levels".into()));
    }
    let mut report = InequalityReport::new("truncation", e.descriptor())
        .param("q", q)
        .param("n_min", levels.iter().copied().fold(f64::INFINITY, f64::min))
        .param("n_max", levels.iter().copied().fold(0.0, f64::max));
    report.notes.push(format!("gauge {gauge:?}"));
    let items = reports_on(e, q, levels, gauge)?;
    let boost = 2f64.powf(q);
    let cases: Vec<(f64, f64)> = items
        .iter()
        .map(|r| ((r.lhs - boost * r.z).max(0.0), r.x + r.y))
        .collect();
    let (k, arg) = fit_constant(&cases);
    report.fitted_constant = Some(k);

    let margin = |r: &TruncationReport, k: f64| k * (r.x + r.y) + boost * r.z - r.lhs;
    let proof_failures = items.iter().filter(|r| !r.passed).count();
    if proof_failures > 0 {
        report.notes.push(format!("{proof_failures} cases violate a proof estimate"));
    }
    report.min_margin = items.iter().map(|r| margin(r, k)).fold(f64::INFINITY, f64::min);
    if let Some(i) = arg {
        let r = &items[i];
        report.witness = Some(Witness {
            index: i / levels.len(),
            lhs: r.lhs,
            rhs: r.lhs + margin(r, k),
            detail: format!("N = {}", r.n),
        });
    }

    let fresh = e.fresh();
    let fresh_items = reports_on(&fresh, q, levels, gauge)?;
    let fresh_margin = fresh_items
        .iter()
        .map(|r| margin(r, REVALIDATION_SLACK * k))
        .fold(f64::INFINITY, f64::min);
    let fresh_ok = fresh_margin >= 0.0 && fresh_items.iter().all(|r| r.passed);
    report.revalidation = Some(Revalidation {
        ensemble: fresh.descriptor(),
        slack: REVALIDATION_SLACK,
        min_margin: fresh_margin,
        passed: fresh_ok,
    });
    report.passed = proof_failures == 0 && k.is_finite() && report.min_margin >= 0.0 && fresh_ok;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate, Geometry};
    use crate::inequalities::Generator;

    #[test]
    fn cutoff_branches() {
        assert_eq!(xi(0.5, 1.0), 0.0);
        assert_eq!(xi(1.0, 1.0), 0.0);
        assert_eq!(xi(1.5, 1.0), 1.0);
        assert_eq!(xi(2.0, 1.0), 2.0);
        assert_eq!(xi(-3.0, 1.0), 3.0);
    }

    #[test]
    fn below_level_everything_is_remainder() {
        let g = Grid::unit_square(8).unwrap();
        let u = Field::from_fn(&g, |x, y| 0.5 * (1.0 + x * y));
        let r = check_truncation(&u, &g, 2.0, 1.0, Gauge::LogShift).unwrap();
        assert_eq!(r.cutoff_mass.0, 0.0);
        assert!((r.remainder.0 - r.lhs).abs() < 1e-15);
        assert!(r.passed);
    }

    #[test]
    fn above_twice_level_nothing_is_remainder() {
        let g = Grid::unit_square(8).unwrap();
        let n = 0.7;
        let u = Field::constant(&g, 3.0 * n);
        let r = check_truncation(&u, &g, 1.5, n, Gauge::Sqrt).unwrap();
        assert_eq!(r.remainder.0, 0.0);
        assert!((r.cutoff_mass.0 - 3.0 * n).abs() < 1e-14);
    }

    #[test]
    fn two_valued_closed_forms() {
        // N/2 on the left half, 4N on the right half of the unit square
        let g = Grid::unit_square(8).unwrap();
        let (n, q) = (2.0, 2.0);
        let u = Field::from_fn(&g, |x, _| if x < 0.5 { 0.5 * n } else { 4.0 * n });
        let r = check_truncation(&u, &g, q, n, Gauge::Identity).unwrap();
        let mass = 0.5 * (0.5 * n) + 0.5 * (4.0 * n);
        assert!((r.remainder.0 - 0.5 * (0.5 * n).powf(q + 1.0)).abs() < 1e-12);
        assert!((r.remainder.1 - (2.0 * n).powf(q) * mass).abs() < 1e-12);
        assert!((r.cutoff_mass.0 - 0.5 * 4.0 * n).abs() < 1e-12);
        let weighted = 0.5 * (0.5 * n) * (0.5 * n) + 0.5 * (4.0 * n) * (4.0 * n);
        assert!((r.cutoff_mass.1 - weighted / n).abs() < 1e-12);
        assert!((integrate(&u, &g).unwrap() - mass).abs() < 1e-12);
        assert!(r.passed);
    }

    #[test]
    fn rejects_bad_levels_and_signs() {
        let g = Grid::unit_square(4).unwrap();
        assert!(check_truncation(&Field::constant(&g, 1.0), &g, 1.0, 0.0, Gauge::LogShift).is_err());
        assert!(check_truncation(&Field::constant(&g, -1.0), &g, 1.0, 1.0, Gauge::LogShift).is_err());
    }

    #[test]
    fn ensemble_fit_passes() {
        for generator in Generator::ALL {
            let e = FieldEnsemble::new(Geometry::unit_square(16), generator, 20, 4);
            let r = check_truncation_ensemble(&e, 2.0, &[0.5, 1.0, 2.0, 4.0], Gauge::LogShift).unwrap();
            assert!(r.passed, "{}", r.to_json());
        }
    }
}

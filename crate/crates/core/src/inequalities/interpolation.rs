//! Interpolation inequalities on discrete fields, with constants fitted to an
//! ensemble and then re-tested on an independent one.

use super::ensemble::FieldEnsemble;
use super::report::{fit_constant, min_margin, InequalityReport, Revalidation, Witness};
use crate::grid::{cell_gradient_sq, Field, Grid};
use crate::{Error, Result};

/// Factor by which a fitted constant is inflated before revalidation.
pub const REVALIDATION_SLACK: f64 = 1.5;

/// `int |f|^p`.
pub fn power_integral(f: &Field, g: &Grid, p: f64) -> f64 {
    f.values()
        .iter()
        .zip(g.volumes())
        .map(|(x, w)| w * x.abs().powf(p))
        .sum()
}

/// `||f||_p`.
pub fn lp_norm(f: &Field, g: &Grid, p: f64) -> f64 {
    power_integral(f, g, p).powf(1.0 / p)
}

/// `||grad f||_r` with the per-cell gradient built from face differences,
/// the same differences the solver uses.
pub fn grad_lr_norm(f: &Field, g: &Grid, r: f64) -> Result<f64> {
    let sq = cell_gradient_sq(f, g)?;
    let total: f64 = sq
        .iter()
        .zip(g.volumes())
        .map(|(s, w)| w * s.powf(0.5 * r))
        .sum();
    Ok(total.powf(1.0 / r))
}

/// Interpolation exponent `a` of the two-dimensional inequality.
pub fn gn_exponent(p: f64, q: f64, r: f64) -> f64 {
    (1.0 / q - 1.0 / p) / (1.0 / q + 0.5 - 1.0 / r)
}

/// Exponents of an interpolation inequality
/// `||f||_p^p <= C (||grad f||_r^(p a) ||f||_q^(p (1 - a)) + ||f||_s^p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnExponents {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
}

impl GnExponents {
    pub fn new(p: f64, q: f64, r: f64, s: f64) -> Result<Self> {
        let finite = [p, q, r, s].iter().all(|x| x.is_finite());
        if !finite || !(r >= 1.0) || !(q > 0.0 && q <= p) || !(s > 0.0) {
            return Err(Error::Precondition(format!(
                "need r >= 1, 0 < q <= p < inf and s > 0; got p={p}, q={q}, r={r}, s={s}"
            )));
        }
        let a = gn_exponent(p, q, r);
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Precondition(format!(
                "interpolation exponent a = {a} lies outside [0, 1]"
            )));
        }
        Ok(GnExponents { p, q, r, s })
    }

    pub fn a(&self) -> f64 {
        gn_exponent(self.p, self.q, self.r)
    }

    /// `(lhs, rhs / C)` for one field.
    pub fn sides(&self, f: &Field, g: &Grid) -> Result<(f64, f64)> {
        let GnExponents { p, q, r, s } = *self;
        let a = self.a();
        let lhs = power_integral(f, g, p);
        let grad = grad_lr_norm(f, g, r)?;
        let interp = if a == 0.0 {
            lp_norm(f, g, q).powf(p)
        } else {
            grad.powf(p * a) * lp_norm(f, g, q).powf(p * (1.0 - a))
        };
        Ok((lhs, interp + lp_norm(f, g, s).powf(p)))
    }
}

fn cases_on(
    e: &FieldEnsemble,
    mut sides: impl FnMut(&Field, &Grid) -> Result<Vec<(f64, f64)>>,
) -> Result<Vec<(f64, f64)>> {
    let (grid, fields) = e.generate()?;
    let mut cases = Vec::new();
    for f in &fields {
        cases.extend(sides(f, &grid)?);
    }
    Ok(cases)
}

/// Fits the constant on `e`, then checks it with slack on `e.fresh()`.
/// `per_field` is the number of cases contributed by each field.
fn fit_and_revalidate(
    mut report: InequalityReport,
    e: &FieldEnsemble,
    per_field: usize,
    mut sides: impl FnMut(&Field, &Grid) -> Result<Vec<(f64, f64)>>,
    describe: impl Fn(usize) -> String,
) -> Result<InequalityReport> {
    let cases = cases_on(e, &mut sides)?;
    let (c, arg) = fit_constant(&cases);
    report.fitted_constant = Some(c);
    let (margin, tight) = min_margin(&cases, c);
    report.min_margin = margin;
    if let Some(i) = arg {
        let (lhs, rhs) = cases[i];
        report.witness = Some(Witness {
            index: i / per_field,
            lhs,
            rhs: c * rhs,
            detail: describe(i % per_field),
        });
    }
    let fresh = e.fresh();
    let fresh_cases = cases_on(&fresh, &mut sides)?;
    let (fresh_margin, _) = min_margin(&fresh_cases, REVALIDATION_SLACK * c);
    report.revalidation = Some(Revalidation {
        ensemble: fresh.descriptor(),
        slack: REVALIDATION_SLACK,
        min_margin: fresh_margin,
        passed: fresh_margin >= 0.0,
    });
    report.passed = c.is_finite() && margin >= 0.0 && fresh_margin >= 0.0;
    if tight != arg.unwrap_or(tight) {
        report.notes.push(format!("smallest margin at case {tight}"));
    }
    Ok(report)
}

/// Gagliardo-Nirenberg type inequality on an ensemble.
pub fn check_gn(e: &FieldEnsemble, p: f64, q: f64, r: f64, s: f64) -> Result<InequalityReport> {
    let exps = GnExponents::new(p, q, r, s)?;
    let report = InequalityReport::new("gagliardo-nirenberg", e.descriptor())
        .param("p", p)
        .param("q", q)
        .param("r", r)
        .param("s", s)
        .param("a", exps.a());
    fit_and_revalidate(report, e, 1, |f, g| Ok(vec![exps.sides(f, g)?]), |_| String::new())
}

/// `int f^2 <= C eta int |grad f|^2 + (C / eta) (int |f|)^2` with one `C` for
/// every field and every `eta`.
pub fn check_eta_interpolation(e: &FieldEnsemble, etas: &[f64]) -> Result<InequalityReport> {
    if etas.is_empty() {
        return Err(Error::Precondition("eta list is empty".into()));
    }
    if etas.iter().any(|eta| !(*eta > 0.0 && *eta < 1.0)) {
        return Err(Error::Precondition("every eta must lie in (0, 1)".into()));
    }
    let mut report = InequalityReport::new("eta-interpolation", e.descriptor());
    for (i, eta) in etas.iter().enumerate() {
        report = report.param(&format!("eta{i}"), *eta);
    }
    let etas = etas.to_vec();
    let labels = etas.clone();
    fit_and_revalidate(
        report,
        e,
        etas.len(),
        |f, g| {
            let lhs = power_integral(f, g, 2.0);
            let grad = grad_lr_norm(f, g, 2.0)?.powi(2);
            let l1 = power_integral(f, g, 1.0);
            Ok(etas
                .iter()
                .map(|eta| (lhs, eta * grad + l1 * l1 / eta))
                .collect())
        },
        |j| format!("eta = {}", labels[j]),
    )
}

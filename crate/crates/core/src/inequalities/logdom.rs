//! `u^a1 ln^b1(u + e) <= eps u^a2 ln^b2(u + e) + c(eps)` for `a1 < a2`.

use super::report::{InequalityReport, Witness};
use crate::model::ln_shift;
use crate::{Error, Result};

/// Doublings of the largest grid point scanned beyond the grid.
const TAIL_DOUBLINGS: usize = 400;

fn excess(u: f64, a1: f64, b1: f64, a2: f64, b2: f64, eps: f64) -> f64 {
    let l = ln_shift(u);
    u.powf(a1) * l.powf(b1) - eps * u.powf(a2) * l.powf(b2)
}

/// Smallest `c(eps)` on the grid plus a geometric continuation past it.
///
/// The continuation must end with the difference negative and decreasing,
/// which is how the tail beyond the last point is certified.
pub fn domination_constant(
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    eps: f64,
    u_grid: &[f64],
) -> Result<(f64, f64, bool)> {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0.0;
    let mut consider = |u: f64| {
        let h = excess(u, a1, b1, a2, b2, eps);
        if h > best {
            best = h;
            arg = u;
        }
        h
    };
    for &u in u_grid {
        consider(u);
    }
    let top = u_grid.iter().copied().fold(0.0, f64::max).max(1.0);
    let mut tail = Vec::new();
    let mut u = top;
    for _ in 0..TAIL_DOUBLINGS {
        u *= 2.0;
        let h = consider(u);
        if !h.is_finite() {
            break;
        }
        tail.push(h);
    }
    let settled = match tail.as_slice() {
        [.., x, y] => *y < 0.0 && y < x,
        _ => false,
    };
    Ok((best, arg, settled))
}

pub fn check_log_domination(
    a1: f64,
    b1: f64,
    a2: f64,
    b2: f64,
    eps_list: &[f64],
    u_grid: &[f64],
) -> Result<InequalityReport> {
    if !(a1 < a2) {
        return Err(Error::Precondition(format!("need a1 < a2, got a1 = {a1}, a2 = {a2}")));
    }
    if eps_list.is_empty() || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::Precondition("eps values must be positive".into()));
    }
    if u_grid.iter().any(|u| !(*u >= 0.0 && u.is_finite())) {
        return Err(Error::Precondition("u grid must be finite and nonnegative".into()));
    }
    let mut report = InequalityReport::new("log-domination", format!("{} grid points", u_grid.len()))
        .param("a1", a1)
        .param("b1", b1)
        .param("a2", a2)
        .param("b2", b2);
    let mut worst = f64::NEG_INFINITY;
    for (i, &eps) in eps_list.iter().enumerate() {
        let (c, at, settled) = domination_constant(a1, b1, a2, b2, eps, u_grid)?;
        report.parameters.insert(format!("eps{i}"), eps);
        report.parameters.insert(format!("c{i}"), c);
        report.passed &= c.is_finite() && settled;
        if !settled {
            report.notes.push(format!("eps = {eps}: tail not negative and decreasing"));
        }
        if c > worst {
            worst = c;
            report.witness = Some(Witness {
                index: i,
                lhs: c,
                rhs: 0.0,
                detail: format!("c(eps) attained at u = {at}"),
            });
        }
    }
    report.fitted_constant = Some(worst);
    report.min_margin = 0.0;
    Ok(report)
}

/// `0` followed by `points` values spaced geometrically over `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let ratio = (hi / lo).powf(1.0 / (points.max(2) - 1) as f64);
    std::iter::once(0.0)
        .chain((0..points).map(|i| lo * ratio.powi(i as i32)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_instance_has_finite_constant() {
        // u ln^k <= eps u^2 ln^(k - p) + c(eps) with k = 1, p = 1/2
        let grid = geometric_grid(1e-6, 1e6, 4000);
        let r = check_log_domination(1.0, 1.0, 2.0, 0.5, &[0.1], &grid).unwrap();
        assert!(r.passed, "{}", r.to_json());
        let c = r.parameters["c0"];
        // brute-force maximum over a much finer linear grid on [0, 100]
        let brute = (0..=2_000_000)
            .map(|i| excess(i as f64 * 5e-5, 1.0, 1.0, 2.0, 0.5, 0.1))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((c - brute).abs() < 1e-3 * brute, "{c} vs {brute}");
    }

    #[test]
    fn huge_eps_leaves_only_a_vanishing_bump() {
        // h(u) <= u - eps u^2 near 0, whose maximum is 1 / (4 eps)
        let grid = geometric_grid(1e-12, 1e3, 2000);
        let r = check_log_domination(1.0, 1.0, 2.0, 0.5, &[1e9], &grid).unwrap();
        assert!(r.passed);
        let c = r.parameters["c0"];
        assert!(c >= 0.0 && c <= 1.0 / 1e9, "{c}");
    }

    #[test]
    fn equal_powers_rejected() {
        assert!(check_log_domination(1.0, 1.0, 1.0, 0.5, &[0.1], &[1.0]).is_err());
    }
}

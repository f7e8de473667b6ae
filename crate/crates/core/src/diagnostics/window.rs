use super::DiagnosticsRecord;
use crate::{Error, Result};

/// Largest time integral of `dissipation_density + lap_v_sq` over a window of
/// length `tau`, with windows starting at record times.
///
/// The integrand is treated as piecewise linear between records (trapezoid
/// rule); a window ending between two records is closed by linear interpolation.
pub fn dissipation_window(series: &[DiagnosticsRecord], tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::Precondition(format!("tau = {tau} must be positive")));
    }
    if series.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(Error::Precondition("series must be sorted by time".into()));
    }
    let span = match (series.first(), series.last()) {
        (Some(a), Some(b)) => b.t - a.t,
        _ => 0.0,
    };
    let slack = 1e-12 * span.max(tau);
    if span + slack < tau {
        return Err(Error::WindowTooShort { span, tau });
    }

    let t: Vec<f64> = series.iter().map(|r| r.t).collect();
    let g: Vec<f64> = series
        .iter()
        .map(|r| r.dissipation_density + r.lap_v_sq)
        .collect();
    let mut cumulative = vec![0.0; t.len()];
    for i in 1..t.len() {
        cumulative[i] = cumulative[i - 1] + 0.5 * (t[i] - t[i - 1]) * (g[i] + g[i - 1]);
    }
    let last = *t.last().expect("nonempty");

    let mut best = f64::NEG_INFINITY;
    let mut j = 0;
    for i in 0..t.len() {
        let end = t[i] + tau;
        if end > last + slack {
            break;
        }
        let end = end.min(last);
        while j + 1 < t.len() && t[j + 1] <= end {
            j += 1;
        }
        let mut integral = cumulative[j] - cumulative[i];
        if end > t[j] && j + 1 < t.len() {
            let frac = (end - t[j]) / (t[j + 1] - t[j]);
            let g_end = g[j] + frac * (g[j + 1] - g[j]);
            integral += 0.5 * (end - t[j]) * (g[j] + g_end);
        }
        best = best.max(integral);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn rec(t: f64, density: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t,
            mass: 0.0,
            energy_y: 0.0,
            sup_u: 0.0,
            sup_v: 0.0,
            grad_v_sq: 0.0,
            lap_v_sq: 0.0,
            dissipation_density: density,
            lq_norms: vec![],
            clamped_mass: 0.0,
            blowup: false,
        }
    }

    #[test]
    fn constant_density() {
        let series: Vec<_> = (0..=20).map(|i| rec(i as f64 * 0.1, 3.0)).collect();
        let w = dissipation_window(&series, 1.0).unwrap();
        assert!((w - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_records_give_one_trapezoid() {
        let series = vec![rec(0.0, 1.0), rec(2.0, 5.0)];
        assert!((dissipation_window(&series, 2.0).unwrap() - 6.0).abs() < 1e-12);
        // window of 1 starting at 0 ends at the interpolated value 3
        assert!((dissipation_window(&series, 1.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn short_series_is_rejected() {
        let series = vec![rec(0.0, 1.0), rec(0.5, 1.0)];
        assert!(matches!(
            dissipation_window(&series, 1.0),
            Err(Error::WindowTooShort { .. })
        ));
        assert!(dissipation_window(&[], 1.0).is_err());
    }

    /// Exact integral over `[a, b]` of the piecewise-linear interpolant.
    fn clipped_integral(t: &[f64], g: &[f64], a: f64, b: f64) -> f64 {
        let mut total = 0.0;
        for k in 0..t.len() - 1 {
            let (lo, hi) = (t[k].max(a), t[k + 1].min(b));
            if hi > lo {
                let at = |x: f64| g[k] + (g[k + 1] - g[k]) * (x - t[k]) / (t[k + 1] - t[k]);
                total += 0.5 * (hi - lo) * (at(lo) + at(hi));
            }
        }
        total
    }

    #[test]
    fn sawtooth_matches_exhaustive_windows() {
        let t: Vec<f64> = (0..=60).map(|i| i as f64 * 0.1).collect();
        let g: Vec<f64> = (0..=60).map(|i| ((i * 7) % 13) as f64 + 0.25 * (i % 4) as f64).collect();
        let series: Vec<_> = t.iter().zip(&g).map(|(&t, &d)| rec(t, d)).collect();
        for tau in [1.0, 1.05, 2.37, 6.0] {
            let oracle = t
                .iter()
                .filter(|&&a| a + tau <= 6.0 + 1e-12)
                .map(|&a| clipped_integral(&t, &g, a, a + tau))
                .fold(f64::NEG_INFINITY, f64::max);
            let got = dissipation_window(&series, tau).unwrap();
            assert!((got - oracle).abs() <= 1e-12 * oracle, "tau {tau}: {got} vs {oracle}");
        }
    }
}

//! Functionals evaluated along a run.
//!
//! The central quantity is the energy
//! `y(t) = int u ln^k(u + e) + 1/2 int |grad v|^2`, together with its
//! dissipation density `int u^2 ln^(k-p)(u + e)` and `int (lap v)^2`. A bounded
//! energy and a bounded windowed dissipation integral are the observable
//! signature of a globally bounded solution. [`moser_ladder`] tracks the
//! `L^q` norms along `q, 2q, 4q, ...` that an `L^infinity` bound is built from.

mod blowup;
mod ladder;
mod window;

pub use blowup::{detect_blowup, BlowupCheck, BlowupReason};
pub use ladder::{moser_ladder, MoserLadder};
pub use window::dissipation_window;

use serde::{Deserialize, Serialize};

use crate::grid::{grad_sq_integral, laplacian_neumann, weighted_sum, Field, Grid};
use crate::model::{ln_shift, Regime};
use crate::stepper::State;
use crate::{Error, Result};

/// Energy exponent used when the config leaves `k` unset. For degenerate
/// diffusion this is `3/2`, the midpoint of `(1 + p, 2 - p)` for every `p`.
pub fn default_k(regime: Regime) -> f64 {
    match regime {
        Regime::Nondegenerate => 1.0,
        Regime::Degenerate => 1.5,
    }
}

/// Admissible open interval for `k` in the given regime.
pub fn admissible_k(regime: Regime, p: f64) -> (f64, f64) {
    match regime {
        Regime::Nondegenerate => (p, 2.0 - p),
        Regime::Degenerate => (1.0 + p, 2.0 - p),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsConfig {
    pub k: f64,
    pub q_list: Vec<f64>,
    pub tau: f64,
    pub cadence: f64,
    pub blowup_max_u: f64,
    pub blowup_dt_floor: f64,
}

impl DiagnosticsConfig {
    pub fn new(k: f64, tau: f64, cadence: f64) -> Self {
        DiagnosticsConfig {
            k,
            q_list: vec![2.0, 4.0],
            tau,
            cadence,
            blowup_max_u: 1e6,
            blowup_dt_floor: 1e-12,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) {
            return Err(Error::config("diagnostics.k", "must be > 0"));
        }
        if !(self.tau > 0.0) {
            return Err(Error::config("diagnostics.tau", "must be > 0"));
        }
        if !(self.cadence > 0.0) {
            return Err(Error::config("diagnostics.cadence", "must be > 0"));
        }
        if self.q_list.iter().any(|q| !(*q >= 1.0 && q.is_finite())) {
            return Err(Error::config("diagnostics.q_list", "exponents must be >= 1"));
        }
        if !(self.blowup_max_u > 0.0) || !(self.blowup_dt_floor > 0.0) {
            return Err(Error::config("diagnostics", "blow-up thresholds must be > 0"));
        }
        Ok(())
    }

    /// Warning text when `k` lies outside the admissible interval for `regime`.
    pub fn k_warning(&self, regime: Regime, p: f64) -> Option<String> {
        let (lo, hi) = admissible_k(regime, p);
        (!(self.k > lo && self.k < hi)).then(|| {
            format!(
                "k = {} lies outside ({lo}, {hi}); the energy bound is only expected inside it",
                self.k
            )
        })
    }
}

/// One row of the time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy_y: f64,
    pub sup_u: f64,
    pub sup_v: f64,
    pub grad_v_sq: f64,
    pub lap_v_sq: f64,
    pub dissipation_density: f64,
    pub lq_norms: Vec<f64>,
    pub clamped_mass: f64,
    pub blowup: bool,
}

impl DiagnosticsRecord {
    pub fn csv_header(q_list: &[f64]) -> String {
        let mut cols: Vec<String> = [
            "t",
            "mass",
            "energy_y",
            "sup_u",
            "sup_v",
            "grad_v_sq",
            "lap_v_sq",
            "dissipation_density",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        cols.extend(q_list.iter().map(|q| format!("l{q}_norm")));
        cols.push("clamped_mass".into());
        cols.push("blowup".into());
        cols.join(",")
    }

    /// Fixed column order; floats in shortest round-trip form.
    pub fn csv_row(&self) -> String {
        let mut cols: Vec<String> = [
            self.t,
            self.mass,
            self.energy_y,
            self.sup_u,
            self.sup_v,
            self.grad_v_sq,
            self.lap_v_sq,
            self.dissipation_density,
        ]
        .iter()
        .map(|x| format!("{x:e}"))
        .collect();
        cols.extend(self.lq_norms.iter().map(|x| format!("{x:e}")));
        cols.push(format!("{:e}", self.clamped_mass));
        cols.push(u8::from(self.blowup).to_string());
        cols.join(",")
    }
}

/// `int u ln^k(u + e) + 1/2 int |grad v|^2`.
pub fn energy_y(s: &State, g: &Grid, k: f64) -> Result<f64> {
    g.check(&s.u)?;
    let entropy: f64 = s
        .u
        .values()
        .iter()
        .zip(g.volumes())
        .map(|(&u, w)| w * u * log_power(u, k))
        .sum();
    Ok(entropy + 0.5 * grad_sq_integral(&s.v, g)?)
}

#[inline]
fn log_power(u: f64, k: f64) -> f64 {
    if k == 0.0 {
        1.0
    } else if k == 1.0 {
        ln_shift(u)
    } else {
        ln_shift(u).powf(k)
    }
}

/// `int u^2 ln^(k-p)(u + e)`.
pub fn dissipation_density(u: &Field, g: &Grid, k: f64, p: f64) -> Result<f64> {
    g.check(u)?;
    Ok(u
        .values()
        .iter()
        .zip(g.volumes())
        .map(|(&x, w)| w * x * x * log_power(x, k - p))
        .sum())
}

/// `int |grad v|^(2q)` with the cell gradient assembled from face differences.
pub fn grad_power_integral(v: &Field, g: &Grid, q: f64) -> Result<f64> {
    let sq = crate::grid::cell_gradient_sq(v, g)?;
    Ok(sq
        .iter()
        .zip(g.volumes())
        .map(|(s, w)| w * s.powf(q))
        .sum())
}

/// Evaluates every functional on `s`.
pub fn record(s: &State, g: &Grid, cfg: &DiagnosticsConfig, p: f64, blowup: bool) -> Result<DiagnosticsRecord> {
    g.check(&s.u)?;
    let lap = laplacian_neumann(&s.v, g)?;
    let lap_v_sq = weighted_sum(
        &lap.values().iter().map(|x| x * x).collect::<Vec<_>>(),
        g.volumes(),
    );
    let lq_norms = cfg
        .q_list
        .iter()
        .map(|&q| ladder::lq_norm(s.u.values(), g.volumes(), q))
        .collect();
    Ok(DiagnosticsRecord {
        t: s.t,
        mass: weighted_sum(s.u.values(), g.volumes()),
        energy_y: energy_y(s, g, cfg.k)?,
        sup_u: s.u.max(),
        sup_v: s.v.max(),
        grad_v_sq: grad_sq_integral(&s.v, g)?,
        lap_v_sq,
        dissipation_density: dissipation_density(&s.u, g, cfg.k, p)?,
        lq_norms,
        clamped_mass: s.clamped_mass,
        blowup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_density_energy_is_ln_one_plus_e() {
        let g = Grid::unit_square(16).unwrap();
        let s = State::new(Field::constant(&g, 1.0), Field::zeros(&g)).unwrap();
        let one = crate::testing::Fixed::int(1);
        let exact = one.add(&crate::testing::Fixed::e()).ln().to_f64();
        assert!((energy_y(&s, &g, 1.0).unwrap() - exact).abs() <= 1e-13);
    }

    #[test]
    fn energy_matches_cell_loop() {
        let n = 24;
        let g = Grid::unit_square(n).unwrap();
        let h = 1.0 / n as f64;
        let u = crate::testing::sample(n * n, 31, 0.0, 50.0);
        let v = crate::testing::sample(n * n, 32, 0.0, 3.0);
        let k = 1.5;
        let mut oracle = 0.0;
        for j in 0..n {
            for i in 0..n {
                let c = j * n + i;
                oracle += h * h * u[c] * (u[c] + std::f64::consts::E).ln().powf(k);
                if i + 1 < n {
                    oracle += 0.5 * (v[c + 1] - v[c]).powi(2);
                }
                if j + 1 < n {
                    oracle += 0.5 * (v[c + n] - v[c]).powi(2);
                }
            }
        }
        let s = State::new(Field::new(&g, u).unwrap(), Field::new(&g, v).unwrap()).unwrap();
        let got = energy_y(&s, &g, k).unwrap();
        assert!((got - oracle).abs() <= 1e-12 * oracle, "{got} vs {oracle}");
    }

    #[test]
    fn energy_of_empty_state_is_zero() {
        let g = Grid::unit_square(8).unwrap();
        let s = State::new(Field::zeros(&g), Field::zeros(&g)).unwrap();
        assert_eq!(energy_y(&s, &g, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn k_zero_is_mass_plus_half_gradient() {
        let g = Grid::unit_square(10).unwrap();
        let u = Field::from_fn(&g, |x, y| 1.0 + x * y);
        let v = Field::from_fn(&g, |x, y| (x - y).powi(2));
        let s = State::new(u.clone(), v.clone()).unwrap();
        let expected = crate::grid::integrate(&u, &g).unwrap() + 0.5 * grad_sq_integral(&v, &g).unwrap();
        assert_eq!(energy_y(&s, &g, 0.0).unwrap(), expected);
    }

    #[test]
    fn csv_columns_line_up() {
        let header = DiagnosticsRecord::csv_header(&[2.0, 4.0]);
        assert_eq!(
            header,
            "t,mass,energy_y,sup_u,sup_v,grad_v_sq,lap_v_sq,dissipation_density,l2_norm,l4_norm,clamped_mass,blowup"
        );
        let rec = DiagnosticsRecord {
            t: 0.5,
            mass: 1.0,
            energy_y: 2.0,
            sup_u: 3.0,
            sup_v: 4.0,
            grad_v_sq: 5.0,
            lap_v_sq: 6.0,
            dissipation_density: 7.0,
            lq_norms: vec![8.0, 9.0],
            clamped_mass: 0.0,
            blowup: false,
        };
        let row = rec.csv_row();
        assert_eq!(row.split(',').count(), header.split(',').count());
        assert!(row.ends_with(",0"));
    }

    #[test]
    fn k_interval_warnings() {
        let cfg = DiagnosticsConfig::new(1.0, 1.0, 0.1);
        assert!(cfg.k_warning(Regime::Nondegenerate, 0.5).is_none());
        assert!(cfg.k_warning(Regime::Degenerate, 0.4).is_some());
        let deg = DiagnosticsConfig::new(1.5, 1.0, 0.1);
        assert!(deg.k_warning(Regime::Degenerate, 0.4).is_none());
    }
}

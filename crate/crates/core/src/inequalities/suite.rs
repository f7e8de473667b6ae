use serde::{Deserialize, Serialize};

use super::ensemble::{FieldEnsemble, Generator};
use super::interpolation::{check_eta_interpolation, check_gn};
use super::logdom::{check_log_domination, geometric_grid};
use super::report::InequalityReport;
use super::sequence::sequence_trials;
use super::truncation::{check_truncation_ensemble, Gauge};
use crate::grid::Geometry;
use crate::Result;

/// Largest allowed growth of a fitted constant when the grid is refined once.
pub const REFINEMENT_GROWTH_LIMIT: f64 = 2.0;

/// Which checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    GagliardoNirenberg,
    EtaInterpolation,
    Truncation,
    Sequence,
    LogDomination,
}

impl Check {
    pub const ALL: [Check; 5] = [
        Check::GagliardoNirenberg,
        Check::EtaInterpolation,
        Check::Truncation,
        Check::Sequence,
        Check::LogDomination,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub checks: Vec<Check>,
    /// Fields per ensemble.
    pub count: usize,
    /// Trials for the sequence check.
    pub trials: usize,
    pub seed: u64,
    /// Cells per side of the coarse grid; the fine grid has twice as many.
    pub cells: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            checks: Check::ALL.to_vec(),
            count: 100,
            trials: 1000,
            seed: 7,
            cells: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub passed: bool,
    pub reports: Vec<InequalityReport>,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn failures(&self) -> impl Iterator<Item = &InequalityReport> {
        self.reports.iter().filter(|r| !r.passed)
    }
}

/// Runs `check` on the coarse and the refined ensemble and fails the refined
/// report when its constant grew by more than [`REFINEMENT_GROWTH_LIMIT`].
fn on_two_grids(
    e: &FieldEnsemble,
    check: impl Fn(&FieldEnsemble) -> Result<InequalityReport>,
) -> Result<[InequalityReport; 2]> {
    let coarse = check(e)?;
    let mut fine = check(&e.refined())?;
    if let (Some(c), Some(f)) = (coarse.fitted_constant, fine.fitted_constant) {
        fine.parameters.insert("coarse_constant".into(), c);
        if c > 0.0 && f > REFINEMENT_GROWTH_LIMIT * c {
            fine.passed = false;
            fine.notes.push(format!("constant grew from {c} to {f} under refinement"));
        }
    }
    Ok([coarse, fine])
}

/// Interpolation exponents `(p, q, r, s)` exercised by the suite.
pub const GN_CASES: [(f64, f64, f64, f64); 2] = [(2.0, 1.0, 2.0, 1.0), (4.0, 2.0, 2.0, 1.0)];
pub const ETAS: [f64; 4] = [0.01, 0.1, 0.5, 0.9];
pub const TRUNCATION_LEVELS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

pub fn run_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let mut reports = Vec::new();
    let geometry = Geometry::unit_square(opts.cells);
    for &check in &opts.checks {
        match check {
            Check::GagliardoNirenberg => {
                for generator in Generator::ALL {
                    let e = FieldEnsemble::new(geometry, generator, opts.count, opts.seed);
                    for (p, q, r, s) in GN_CASES {
                        reports.extend(on_two_grids(&e, |e| check_gn(e, p, q, r, s))?);
                    }
                }
            }
            Check::EtaInterpolation => {
                for generator in Generator::ALL {
                    let e = FieldEnsemble::new(geometry, generator, opts.count, opts.seed);
                    reports.extend(on_two_grids(&e, |e| check_eta_interpolation(e, &ETAS))?);
                }
            }
            Check::Truncation => {
                for generator in Generator::ALL {
                    let e = FieldEnsemble::new(geometry, generator, opts.count, opts.seed);
                    for q in [1.0, 2.0] {
                        reports.extend(on_two_grids(&e, |e| {
                            check_truncation_ensemble(e, q, &TRUNCATION_LEVELS, Gauge::LogShift)
                        })?);
                    }
                }
            }
            Check::Sequence => reports.push(sequence_trials(opts.trials, opts.seed)?),
            Check::LogDomination => {
                let grid = geometric_grid(1e-8, 1e8, 4000);
                let eps = [1e-3, 1e-2, 0.1, 1.0, 10.0];
                // the energy estimate's instances: u ln^k against u^2 ln^(k - p)
                for (k, p) in [(1.0, 0.5), (1.5, 0.4), (1.0, 0.9)] {
                    reports.push(check_log_domination(1.0, k, 2.0, k - p, &eps, &grid)?);
                }
            }
        }
    }
    Ok(SuiteReport {
        passed: reports.iter().all(|r| r.passed),
        reports,
    })
}

use serde::{Deserialize, Serialize};

use super::coefficient::SLOPE_TOLERANCE;
use super::{CoefficientSpec, ModelSpec, Regime};

/// One structural condition with its verdict and, on failure, where it broke.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    pub passed: bool,
    /// Sample point at which the condition was tightest or failed.
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckEntry>,
    pub regime: Regime,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckEntry> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Threshold below which a sampled diffusion minimum counts as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-6;

/// Samples `D` and `S` on `[0, v_max]` and checks positivity, monotonicity,
/// boundedness and smoothness, plus the source parameter constraints.
pub fn validate_model(spec: &ModelSpec, v_max: f64, samples: usize) -> ValidationReport {
    assert!(v_max > 0.0, "v_max must be positive");
    assert!(samples >= 2, "need at least two samples");
    let grid: Vec<f64> = (0..samples)
        .map(|i| v_max * i as f64 / (samples - 1) as f64)
        .collect();

    let mut checks = Vec::new();
    checks.push(parameter_check("diffusion parameters", &spec.diffusion));
    checks.push(parameter_check("sensitivity parameters", &spec.sensitivity));
    checks.push(diffusion_positive(&spec.diffusion, &grid));
    checks.push(smoothness("diffusion twice differentiable", &spec.diffusion, &grid));
    checks.push(sensitivity_slope(&spec.sensitivity, &grid));
    checks.push(sensitivity_bounded(&spec.sensitivity, &grid));
    checks.push(smoothness("sensitivity twice differentiable", &spec.sensitivity, &grid));

    if let Some(source) = &spec.source {
        checks.push(CheckEntry {
            name: "source damping mu > 0".into(),
            passed: source.mu > 0.0 && source.mu.is_finite(),
            witness: None,
            detail: format!("mu = {}", source.mu),
        });
        checks.push(CheckEntry {
            name: "source exponent p > 0".into(),
            passed: source.p > 0.0 && source.p.is_finite(),
            witness: None,
            detail: format!("p = {}", source.p),
        });
        checks.push(CheckEntry {
            name: "source vanishes at zero".into(),
            passed: source.value(0.0) == 0.0,
            witness: Some(0.0),
            detail: format!("f(0) = {}", source.value(0.0)),
        });
    }

    let regime = classify(&spec.diffusion, &grid);
    let mut warnings = Vec::new();
    if let Some(source) = &spec.source {
        match regime {
            Regime::Degenerate if source.p >= 0.5 => warnings.push(format!(
                "degenerate diffusion with p = {} >= 1/2: global boundedness is only guaranteed for p < 1/2",
                source.p
            )),
            Regime::Nondegenerate if source.p >= 1.0 => warnings.push(format!(
                "p = {} >= 1: global boundedness is only guaranteed for p < 1",
                source.p
            )),
            _ => {}
        }
    } else {
        warnings.push("no source term: finite-time blow-up is possible for large mass".into());
    }

    ValidationReport {
        checks,
        regime,
        warnings,
    }
}

fn parameter_check(name: &str, spec: &CoefficientSpec) -> CheckEntry {
    let verdict = spec.check_parameters();
    CheckEntry {
        name: name.into(),
        passed: verdict.is_ok(),
        witness: None,
        detail: verdict.err().unwrap_or_else(|| "ok".into()),
    }
}

fn diffusion_positive(d: &CoefficientSpec, grid: &[f64]) -> CheckEntry {
    let (v_min, d_min) = grid
        .iter()
        .map(|&v| (v, d.value(v)))
        .fold((0.0, f64::INFINITY), |acc, (v, x)| {
            if !(x >= acc.1) {
                (v, x)
            } else {
                acc
            }
        });
    CheckEntry {
        name: "diffusion strictly positive".into(),
        passed: d_min > 0.0 && d_min.is_finite(),
        witness: Some(v_min),
        detail: format!("sampled min D = {d_min:e}"),
    }
}

fn sensitivity_slope(s: &CoefficientSpec, grid: &[f64]) -> CheckEntry {
    let mut worst = (0.0, f64::INFINITY);
    for &v in grid {
        let slope = s.slope(v);
        if !(slope >= worst.1) {
            worst = (v, slope);
        }
    }
    for w in grid.windows(2) {
        let chord = (s.value(w[1]) - s.value(w[0])) / (w[1] - w[0]);
        if !(chord >= worst.1) {
            worst = (w[0], chord);
        }
    }
    let scale = 1.0 + s.value(worst.0).abs();
    CheckEntry {
        name: "sensitivity nondecreasing".into(),
        passed: worst.1 >= -SLOPE_TOLERANCE * scale,
        witness: Some(worst.0),
        detail: format!("min sampled slope = {:e}", worst.1),
    }
}

fn sensitivity_bounded(s: &CoefficientSpec, grid: &[f64]) -> CheckEntry {
    let finite = grid.iter().all(|&v| s.value(v).is_finite());
    let bound = s.sup_bound();
    let sampled = grid.iter().map(|&v| s.value(v).abs()).fold(0.0, f64::max);
    let within = bound.map_or(false, |b| sampled <= b * (1.0 + 1e-12));
    CheckEntry {
        name: "sensitivity bounded".into(),
        passed: finite && within,
        witness: None,
        detail: match bound {
            Some(b) => format!("sup |S| <= {b:e}, sampled max {sampled:e}"),
            None => "no finite bound on [0, inf): unbounded sensitivity is rejected".into(),
        },
    }
}

/// Second differences at step `h` and `h/2` must stay finite and must not grow
/// under halving, which is what a kink in the first derivative produces.
fn smoothness(name: &str, c: &CoefficientSpec, grid: &[f64]) -> CheckEntry {
    let second = |v: f64, h: f64| (c.value(v + h) - 2.0 * c.value(v) + c.value(v - h)) / (h * h);
    let mut worst: Option<(f64, f64)> = None;
    let mut ok = true;
    for &v in grid {
        let h = 1e-3 * v.abs().max(1.0);
        let center = v.max(h);
        let coarse = second(center, h);
        let fine = second(center, 0.5 * h);
        if !coarse.is_finite() || !fine.is_finite() {
            ok = false;
            worst = Some((v, f64::INFINITY));
            break;
        }
        // Rounding level of a second difference at this step.
        let floor = 1e-12 * (1.0 + c.value(center).abs()) / (h * h);
        let growth = if coarse.abs() > floor {
            fine.abs() / coarse.abs()
        } else {
            1.0
        };
        if fine.abs() > floor && growth > 1.5 {
            ok = false;
        }
        if worst.map_or(true, |(_, g)| growth > g) {
            worst = Some((v, growth));
        }
    }
    CheckEntry {
        name: name.into(),
        passed: ok,
        witness: worst.map(|(v, _)| v),
        detail: format!(
            "max second-difference growth under step halving = {:.3}",
            worst.map_or(1.0, |(_, g)| g)
        ),
    }
}

fn classify(d: &CoefficientSpec, grid: &[f64]) -> Regime {
    if let Some(inf) = d.infimum() {
        if inf < DEGENERACY_THRESHOLD {
            return Regime::Degenerate;
        }
    }
    let d_min = grid.iter().map(|&v| d.value(v)).fold(f64::INFINITY, f64::min);
    let v_max = *grid.last().expect("nonempty grid");
    let decreasing = d.slope(v_max) < 0.0;
    if d_min < DEGENERACY_THRESHOLD && decreasing {
        Regime::Degenerate
    } else {
        Regime::Nondegenerate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SourceSpec, Spline};

    #[test]
    fn classical_with_source_is_clean() {
        let spec = ModelSpec::classical().with_source(SourceSpec { r: 1.0, mu: 1.0, p: 0.5 });
        let report = validate_model(&spec, 10.0, 101);
        assert!(report.passed(), "{report:#?}");
        assert_eq!(report.regime, Regime::Nondegenerate);
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn exponential_decay_is_degenerate() {
        let spec = ModelSpec {
            diffusion: CoefficientSpec::ExponentialDecay { amplitude: 1.0, rate: 1.0 },
            sensitivity: CoefficientSpec::SaturatingIncreasing { amplitude: 1.0, half: 1.0 },
            source: Some(SourceSpec { r: 0.0, mu: 1.0, p: 0.9 }),
        };
        let report = validate_model(&spec, 5.0, 64);
        assert!(report.passed(), "{report:#?}");
        assert_eq!(report.regime, Regime::Degenerate);
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn decreasing_sensitivity_fails_with_witness() {
        let spec = ModelSpec {
            diffusion: CoefficientSpec::Constant { value: 1.0 },
            sensitivity: CoefficientSpec::TabulatedSmooth(
                Spline::new(vec![0.0, 1.0, 2.0], vec![0.0, -1.0, -2.0]).unwrap(),
            ),
            source: None,
        };
        let report = validate_model(&spec, 3.0, 31);
        let failed: Vec<_> = report.failures().map(|c| c.name.as_str()).collect();
        assert!(failed.contains(&"sensitivity nondecreasing"));
        let slope = report
            .checks
            .iter()
            .find(|c| c.name == "sensitivity nondecreasing")
            .unwrap();
        assert!(slope.witness.is_some());
    }

    #[test]
    fn smooth_families_pass_probe() {
        let samples = [0.0, 0.5, 1.0, 4.0];
        for c in [
            CoefficientSpec::ExponentialDecay { amplitude: 1.0, rate: 2.0 },
            CoefficientSpec::SaturatingIncreasing { amplitude: 3.0, half: 0.5 },
            CoefficientSpec::TabulatedSmooth(
                Spline::new(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 0.5, 0.4, 0.38]).unwrap(),
            ),
        ] {
            assert!(smoothness("c", &c, &samples).passed, "{c:?}");
        }
        let blown = CoefficientSpec::ExponentialDecay { amplitude: 1.0, rate: -800.0 };
        assert!(!smoothness("c", &blown, &[1.0]).passed);
    }

    #[test]
    fn zero_diffusion_fails() {
        let spec = ModelSpec {
            diffusion: CoefficientSpec::SaturatingIncreasing { amplitude: 1.0, half: 1.0 },
            ..ModelSpec::classical()
        };
        let report = validate_model(&spec, 1.0, 11);
        assert!(!report.passed());
        let entry = report.failures().next().unwrap();
        assert_eq!(entry.witness, Some(0.0));
    }
}

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One of the four coefficient families accepted for `D` and `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    /// `c`
    Constant { value: f64 },
    /// `a exp(-lambda v)` with `lambda >= 0`
    ExponentialDecay { amplitude: f64, rate: f64 },
    /// `a v / (K + v)` with `K > 0`
    SaturatingIncreasing { amplitude: f64, half: f64 },
    /// Natural cubic spline through the given samples, extended linearly.
    TabulatedSmooth(Spline),
}

/// Relative step used by the local finite-difference slope probe.
const SLOPE_PROBE_STEP: f64 = 1e-5;
/// Slopes above `-SLOPE_TOLERANCE` count as nonnegative.
pub(crate) const SLOPE_TOLERANCE: f64 = 1e-9;

impl CoefficientSpec {
    /// Raw evaluation with no checks, for use inside kernels after validation.
    #[inline]
    pub fn value(&self, v: f64) -> f64 {
        match self {
            CoefficientSpec::Constant { value } => *value,
            CoefficientSpec::ExponentialDecay { amplitude, rate } => amplitude * (-rate * v).exp(),
            CoefficientSpec::SaturatingIncreasing { amplitude, half } => amplitude * v / (half + v),
            CoefficientSpec::TabulatedSmooth(spline) => spline.eval(v),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, CoefficientSpec::Constant { .. })
    }

    pub(crate) fn check_parameters(&self) -> std::result::Result<(), String> {
        let finite = |x: f64, name: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be finite"))
            }
        };
        match self {
            CoefficientSpec::Constant { value } => finite(*value, "value"),
            CoefficientSpec::ExponentialDecay { amplitude, rate } => {
                finite(*amplitude, "amplitude")?;
                finite(*rate, "rate")?;
                if *rate < 0.0 {
                    return Err("rate must be >= 0 for a decaying exponential".into());
                }
                Ok(())
            }
            CoefficientSpec::SaturatingIncreasing { amplitude, half } => {
                finite(*amplitude, "amplitude")?;
                finite(*half, "half")?;
                if *half <= 0.0 {
                    return Err("half-saturation constant must be > 0".into());
                }
                Ok(())
            }
            CoefficientSpec::TabulatedSmooth(_) => Ok(()),
        }
    }

    /// Supremum of `|value|` over `[0, inf)` when the family certifies one.
    pub fn sup_bound(&self) -> Option<f64> {
        match self {
            CoefficientSpec::Constant { value } => Some(value.abs()),
            CoefficientSpec::ExponentialDecay { amplitude, rate } if *rate >= 0.0 => {
                Some(amplitude.abs())
            }
            CoefficientSpec::ExponentialDecay { .. } => None,
            CoefficientSpec::SaturatingIncreasing { amplitude, .. } => Some(amplitude.abs()),
            CoefficientSpec::TabulatedSmooth(spline) => spline.sup_bound(),
        }
    }

    /// Infimum over `[0, inf)` when the family makes it available in closed form.
    pub fn infimum(&self) -> Option<f64> {
        match self {
            CoefficientSpec::Constant { value } => Some(*value),
            CoefficientSpec::ExponentialDecay { amplitude, rate } => {
                if *rate > 0.0 {
                    Some(amplitude.min(0.0))
                } else {
                    Some(*amplitude)
                }
            }
            CoefficientSpec::SaturatingIncreasing { amplitude, .. } => Some(amplitude.min(0.0)),
            CoefficientSpec::TabulatedSmooth(_) => None,
        }
    }

    pub(crate) fn eval_diffusion(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) {
            return Err(Error::Precondition(format!("D evaluated at v = {v} < 0")));
        }
        let d = self.value(v);
        if d > 0.0 && d.is_finite() {
            Ok(d)
        } else {
            Err(Error::InvalidCoefficient {
                what: "diffusion must be strictly positive".into(),
                v,
                value: d,
            })
        }
    }

    pub(crate) fn eval_sensitivity(&self, v: f64) -> Result<f64> {
        if !(v >= 0.0) {
            return Err(Error::Precondition(format!("S evaluated at v = {v} < 0")));
        }
        let s = self.value(v);
        if !s.is_finite() {
            return Err(Error::InvalidCoefficient {
                what: "sensitivity must be finite".into(),
                v,
                value: s,
            });
        }
        let slope = self.slope(v);
        if slope < -SLOPE_TOLERANCE * (1.0 + s.abs()) {
            return Err(Error::InvalidCoefficient {
                what: format!("sensitivity slope must be >= 0 (slope {slope:e})"),
                v,
                value: s,
            });
        }
        Ok(s)
    }

    /// Finite-difference slope at `v`, one-sided at `v = 0`.
    pub fn slope(&self, v: f64) -> f64 {
        let h = SLOPE_PROBE_STEP * v.abs().max(1.0);
        if v >= h {
            (self.value(v + h) - self.value(v - h)) / (2.0 * h)
        } else {
            (self.value(v + h) - self.value(v)) / h
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplineData {
    knots: Vec<f64>,
    values: Vec<f64>,
}

/// Natural cubic spline. Its second derivative vanishes at both end knots, so
/// the linear continuation outside the table keeps the function `C^2`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SplineData", into = "SplineData")]
pub struct Spline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl PartialEq for Spline {
    fn eq(&self, other: &Self) -> bool {
        self.knots == other.knots && self.values == other.values
    }
}

impl From<Spline> for SplineData {
    fn from(s: Spline) -> Self {
        SplineData {
            knots: s.knots,
            values: s.values,
        }
    }
}

impl TryFrom<SplineData> for Spline {
    type Error = String;

    fn try_from(data: SplineData) -> std::result::Result<Self, String> {
        Spline::new(data.knots, data.values)
    }
}

impl Spline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> std::result::Result<Self, String> {
        if knots.len() != values.len() {
            return Err("knots and values differ in length".into());
        }
        if knots.len() < 2 {
            return Err("at least two knots are required".into());
        }
        if knots.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err("knots and values must be finite".into());
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err("knots must be strictly increasing".into());
        }
        let second = natural_second_derivatives(&knots, &values);
        Ok(Spline {
            knots,
            values,
            second,
        })
    }

    fn end_slopes(&self) -> (f64, f64) {
        let n = self.knots.len();
        let h0 = self.knots[1] - self.knots[0];
        let left = (self.values[1] - self.values[0]) / h0 - h0 * self.second[1] / 6.0;
        let hn = self.knots[n - 1] - self.knots[n - 2];
        let right = (self.values[n - 1] - self.values[n - 2]) / hn + hn * self.second[n - 2] / 6.0;
        (left, right)
    }

    fn sup_bound(&self) -> Option<f64> {
        let (_, right) = self.end_slopes();
        if right.abs() > 1e-12 {
            return None;
        }
        // Cubic pieces can overshoot the data; bound each piece by dense sampling.
        let mut sup = 0.0f64;
        for w in self.knots.windows(2) {
            for k in 0..=32 {
                let v = w[0] + (w[1] - w[0]) * k as f64 / 32.0;
                sup = sup.max(self.eval(v).abs());
            }
        }
        let left_value = self.values[0];
        sup = sup.max(left_value.abs());
        Some(sup * 1.05)
    }

    pub fn eval(&self, v: f64) -> f64 {
        let n = self.knots.len();
        if v <= self.knots[0] {
            let (left, _) = self.end_slopes();
            return self.values[0] + left * (v - self.knots[0]);
        }
        if v >= self.knots[n - 1] {
            let (_, right) = self.end_slopes();
            return self.values[n - 1] + right * (v - self.knots[n - 1]);
        }
        let i = match self
            .knots
            .binary_search_by(|k| k.partial_cmp(&v).expect("finite knots"))
        {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - v) / h;
        let b = (v - self.knots[i]) / h;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h
                / 6.0
    }
}

/// Tridiagonal solve for the knot second derivatives with zero end curvature.
fn natural_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let mut diag = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut upper = vec![0.0; n];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[i] = (h0 + h1) / 3.0;
        upper[i] = h1 / 6.0;
        rhs[i] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    }
    // Thomas algorithm on rows 1..n-1; the sub-diagonal of row i is h_{i-1}/6.
    for i in 2..n - 1 {
        let lower = (x[i] - x[i - 1]) / 6.0;
        let w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m[n - 2] = rhs[n - 2] / diag[n - 2];
    for i in (1..n - 2).rev() {
        m[i] = (rhs[i] - upper[i] * m[i + 1]) / diag[i];
    }
    m
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// The tightest case of a check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Index of the field (or trial) in its ensemble.
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub detail: String,
}

/// Re-run of a fitted constant, inflated by `slack`, on an independent ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Revalidation {
    pub ensemble: String,
    pub slack: f64,
    pub min_margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    /// Short identifier such as `gagliardo-nirenberg` or `sequence`.
    pub lemma: String,
    pub ensemble: String,
    pub parameters: BTreeMap<String, f64>,
    pub fitted_constant: Option<f64>,
    /// Smallest `rhs - lhs` with the fitted constant.
    pub min_margin: f64,
    pub witness: Option<Witness>,
    pub revalidation: Option<Revalidation>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl InequalityReport {
    pub(crate) fn new(lemma: &str, ensemble: impl Into<String>) -> Self {
        InequalityReport {
            lemma: lemma.to_string(),
            ensemble: ensemble.into(),
            parameters: BTreeMap::new(),
            fitted_constant: None,
            min_margin: f64::INFINITY,
            witness: None,
            revalidation: None,
            passed: true,
            notes: Vec::new(),
        }
    }

    pub(crate) fn param(mut self, name: &str, value: f64) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Fits the smallest `C` with `lhs <= C * rhs` over all cases.
///
/// Cases with `rhs == 0` must have `lhs == 0`; otherwise no constant exists
/// and the result is infinite.
pub(crate) fn fit_constant(cases: &[(f64, f64)]) -> (f64, Option<usize>) {
    let mut best = 0.0;
    let mut arg = None;
    for (i, &(lhs, rhs)) in cases.iter().enumerate() {
        let ratio = if rhs > 0.0 {
            lhs / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            continue;
        };
        if ratio > best || arg.is_none() {
            best = ratio;
            arg = Some(i);
        }
    }
    // One part in 1e12 absorbs the rounding in lhs / rhs * rhs.
    (best * (1.0 + 1e-12), arg)
}

/// Smallest `c * rhs - lhs` and where it occurs.
pub(crate) fn min_margin(cases: &[(f64, f64)], c: f64) -> (f64, usize) {
    cases
        .iter()
        .enumerate()
        .map(|(i, &(lhs, rhs))| (c * rhs - lhs, i))
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
}

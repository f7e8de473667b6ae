//! Bound for the recursion `u_(k+1) = a_k + b_k u_k` with `b_k >= 1`:
//! every iterate is at most `A B + B u_1`, where `A` is the sum of the `a_k`
//! and `B` the product of the `b_k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::report::{InequalityReport, Witness};
use crate::{Error, Result};

/// Relative tolerance for rounding in the iteration and in the bound.
pub const SEQUENCE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceCheck {
    /// Largest of `u_1, ..., u_(K+1)`.
    pub max_iterate: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Iterates the recursion over `a.len()` steps and compares with the bound.
pub fn check_sequence_lemma(a: &[f64], b: &[f64], u1: f64) -> Result<SequenceCheck> {
    if a.len() != b.len() {
        return Err(Error::Precondition(format!(
            "a has {} terms, b has {}",
            a.len(),
            b.len()
        )));
    }
    if !(u1 > 0.0 && u1.is_finite()) {
        return Err(Error::Precondition(format!("u1 = {u1} must be positive")));
    }
    if let Some(bk) = b.iter().find(|bk| !(**bk >= 1.0 && bk.is_finite())) {
        return Err(Error::Precondition(format!("b_k = {bk} must be >= 1")));
    }
    if let Some(ak) = a.iter().find(|ak| !(**ak >= 0.0 && ak.is_finite())) {
        return Err(Error::Precondition(format!("a_k = {ak} must be >= 0")));
    }
    let mut u = u1;
    let mut max_iterate = u1;
    for (ak, bk) in a.iter().zip(b) {
        u = ak + bk * u;
        max_iterate = max_iterate.max(u);
    }
    let sum: f64 = a.iter().sum();
    let product: f64 = b.iter().product();
    let bound = sum * product + product * u1;
    if !bound.is_finite() {
        return Err(Error::Precondition("partial sums or products overflow".into()));
    }
    Ok(SequenceCheck {
        max_iterate,
        bound,
        holds: max_iterate <= bound * (1.0 + SEQUENCE_TOLERANCE),
    })
}

/// Random trials with `K` up to 200, `a_k` spread over six decades and
/// `b_k` in `[1, 1.05]`.
pub fn sequence_trials(trials: usize, seed: u64) -> Result<InequalityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = InequalityReport::new("sequence", format!("{trials} random trials, seed {seed}"))
        .param("trials", trials as f64);
    let mut failures = 0;
    for trial in 0..trials {
        let len = rng.gen_range(1..=200usize);
        let scale = 10f64.powf(rng.gen_range(-3.0..3.0));
        let a: Vec<f64> = (0..len).map(|_| scale * rng.gen::<f64>()).collect();
        let b: Vec<f64> = (0..len).map(|_| 1.0 + 0.05 * rng.gen::<f64>()).collect();
        let u1 = 10f64.powf(rng.gen_range(-3.0..3.0));
        let check = check_sequence_lemma(&a, &b, u1)?;
        let margin = (check.bound - check.max_iterate) / check.bound;
        if margin < report.min_margin {
            report.min_margin = margin;
            report.witness = Some(Witness {
                index: trial,
                lhs: check.max_iterate,
                rhs: check.bound,
                detail: format!("K = {len}"),
            });
        }
        failures += usize::from(!check.holds);
    }
    if failures > 0 {
        report.notes.push(format!("{failures} trials exceed the bound"));
    }
    report.notes.push("margins are relative to the bound".into());
    report.passed = failures == 0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::{FromPrimitive, One, ToPrimitive, Zero};

    #[test]
    fn constant_sequence_is_tight() {
        let c = check_sequence_lemma(&[0.0; 10], &[1.0; 10], 3.0).unwrap();
        assert_eq!(c.max_iterate, 3.0);
        assert_eq!(c.bound, 3.0);
        assert!(c.holds);
    }

    #[test]
    fn geometric_terms_approach_two() {
        let a: Vec<f64> = (1..=50).map(|k| 0.5f64.powi(k)).collect();
        let c = check_sequence_lemma(&a, &[1.0; 50], 1.0).unwrap();
        assert!(c.max_iterate < 2.0);
        assert!(2.0 - c.max_iterate < 1e-14);
        assert!((c.bound - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_contracting_factors() {
        assert!(check_sequence_lemma(&[1.0], &[0.5], 1.0).is_err());
        assert!(check_sequence_lemma(&[1.0, 2.0], &[1.0], 1.0).is_err());
    }

    #[test]
    fn dyadic_inputs_match_rational_arithmetic() {
        // Multiples of 1/8 with few steps stay exactly representable, so the
        // floating iteration must agree with exact rational arithmetic.
        let a8 = [3i64, 0, 5, 1, 7, 2];
        let b8 = [8i64, 9, 12, 8, 10, 11];
        let u8 = 5i64;
        let a: Vec<f64> = a8.iter().map(|&x| x as f64 / 8.0).collect();
        let b: Vec<f64> = b8.iter().map(|&x| x as f64 / 8.0).collect();
        let check = check_sequence_lemma(&a, &b, u8 as f64 / 8.0).unwrap();

        let q = |n: i64| BigRational::from_i64(n).unwrap() / BigRational::from_i64(8).unwrap();
        let mut u = q(u8);
        let mut max = u.clone();
        for (ak, bk) in a8.iter().zip(&b8) {
            u = q(*ak) + q(*bk) * u;
            if u > max {
                max = u.clone();
            }
        }
        let sum = a8.iter().fold(BigRational::zero(), |s, &x| s + q(x));
        let product = b8.iter().fold(BigRational::one(), |p, &x| p * q(x));
        let bound = &sum * &product + &product * q(u8);
        assert_eq!(check.max_iterate, max.to_f64().unwrap());
        assert_eq!(check.bound, bound.to_f64().unwrap());
        assert!(max <= bound);
    }

    #[test]
    fn thousand_trials() {
        let r = sequence_trials(1000, 7).unwrap();
        assert!(r.passed, "{}", r.to_json());
        assert!(r.min_margin >= -SEQUENCE_TOLERANCE);
    }
}
